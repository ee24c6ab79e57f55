from .discriminator import PARAM_NAMES, AdamState, DiscriminatorNet, ForwardCache, adam_step
