from .joint_range import (
    BernoulliPoint,
    CertificationReport,
    JacobianEval,
    boundary_curve,
    certify_conjecture,
    finite_difference_jacobian,
    jacobian,
    lies_above_envelope,
    phi,
    phi_array,
    write_certification,
)
from .xi import (
    APPROX_SCALE,
    JSD_SUP,
    LOG2,
    BoundValue,
    approx_error_profile,
    bernoulli_js,
    bernoulli_kl,
    ce_gap_estimate,
    fit_approx_scale,
    xi,
    xi_approx,
    xi_derivative,
    xi_from_gap,
    xi_inverse,
    xi_inverse_derivative,
    xi_inverse_gap,
)
