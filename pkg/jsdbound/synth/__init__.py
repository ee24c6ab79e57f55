from .gaussian import (
    GaussianTaskSpec,
    SampleBatch,
    StaircaseSampler,
    StaircaseSchedule,
    Transform,
    apply_transform,
    default_staircase,
    rho_for_mi,
    sample_joint,
    spawn_streams,
)
