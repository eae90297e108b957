"""Estimation of the selected arm mean in a two-stage adaptive design.

Two Gaussian arms with a common unknown variance; stage 1 picks the arm with
the larger sample mean and stage 2 samples only that arm.
"""

from ._backend import BACKEND
from .errors import (
    DegenerateData,
    EmptyGrid,
    InsufficientConditionalSample,
    InvalidDesign,
    LengthMismatch,
    NonFiniteValue,
    SelectionMismatch,
    ToleranceNotMet,
)
from .estimators import (
    MLE,
    PAPER_FOUR,
    PLUGIN_U1,
    PLUGIN_U2,
    UMVCUE,
    EstimatorId,
    Kind,
    bayes,
    bayes_shrinkage,
    mle,
    plugin_u1,
    plugin_u2,
    umvcue,
)
from .model import (
    DesignConfig,
    ParameterPoint,
    RBSummary,
    TwoStageDataset,
    select_arm,
    summarize,
    validate_dataset,
)

__version__ = "0.1.0"
