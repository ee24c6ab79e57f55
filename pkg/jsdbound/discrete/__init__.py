from .exact import (
    JointTable,
    ProbVector,
    TightnessRow,
    alpha_family_divergences,
    alpha_grid,
    categorical_js,
    categorical_kl,
    ce_decomposition,
    exact_jsinfo,
    exact_mi,
    exact_posterior,
    make_alpha_family,
    mi_from_posterior,
    optimal_ce_and_identities,
    random_joint_table,
    tightness_sweep,
    write_tightness,
)
