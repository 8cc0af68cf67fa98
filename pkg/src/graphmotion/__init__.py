"""Graph-driven multi-character motion sampling with linking-number guidance."""

__version__ = "0.1.0"

from .denoisers import GaussianPriorDenoiser, SyntheticInteractionDenoiser, build_denoiser
from .diffusion import ConditionSpec, NoiseSchedule, SamplerConfig, ddim_step, ddpm_step, posterior_mean
from .gli import GliFlag, GliMatrix, chain_gli, gli_numeric_oracle, pose_pair_gli, segment_writhe, segment_writhe_gradient
from .graph import Factor, PairwiseInteractionGraph, average_predictions, unconnected_pairs, validate_graph
from .losses import GuidanceLossConfig, GuidanceReport, gli_loss, proxemics_loss, simple_contact_loss, sum_graph_losses
from .metrics import MetricsReport, contact_and_cframe, evaluate, jitter, pene_bone, skating_ratio
from .motion import DEFAULT_SKELETON, MotionSequence, MultiPersonMotion, Skeleton, load_motion, save_motion
from .sampling import GraphValidationError, NumericAbort, sample_multi

__all__ = [
    "ConditionSpec",
    "DEFAULT_SKELETON",
    "Factor",
    "GaussianPriorDenoiser",
    "GliFlag",
    "GliMatrix",
    "GraphValidationError",
    "GuidanceLossConfig",
    "GuidanceReport",
    "MetricsReport",
    "MotionSequence",
    "MultiPersonMotion",
    "NoiseSchedule",
    "NumericAbort",
    "PairwiseInteractionGraph",
    "SamplerConfig",
    "Skeleton",
    "SyntheticInteractionDenoiser",
    "average_predictions",
    "build_denoiser",
    "chain_gli",
    "contact_and_cframe",
    "ddim_step",
    "ddpm_step",
    "evaluate",
    "gli_loss",
    "gli_numeric_oracle",
    "jitter",
    "load_motion",
    "pene_bone",
    "pose_pair_gli",
    "posterior_mean",
    "proxemics_loss",
    "sample_multi",
    "save_motion",
    "segment_writhe",
    "segment_writhe_gradient",
    "simple_contact_loss",
    "skating_ratio",
    "sum_graph_losses",
    "unconnected_pairs",
    "validate_graph",
]
