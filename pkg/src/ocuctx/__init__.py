"""Context-aware segmentation scoring for multi-class label masks.

The library scores a predicted mask against its ground truth three ways:
per-class overlap metrics (F-score, Error Rate, IoU), context coefficients
built from the class layout (scale spread lambda, centroid spread delta,
spatial ratio rho) and their blend, the punish-context loss
``pc_loss = (lambda + rho) / 2`` that can scale an external training loss.
A batch harness adds dataset discovery, deterministic 40/40/20 splits,
parallel evaluation with JSON/CSV/markdown reports, and Wilcoxon
signed-rank comparison between methods.
"""

from ._version import __version__
from .context import (
    Centroid,
    ContextConfig,
    ContextResult,
    DegeneracyFlag,
    PunishMode,
    centroid,
    pc_loss,
    punish,
    scale_coefficient,
    spatial_coefficient,
    spatial_ratio,
)
from .errors import (
    ConfigError,
    DegenerateSampleError,
    LabelValidationError,
    MaskFormatError,
    OcuctxError,
    PairMismatchError,
)
from .harness import (
    DatasetManifest,
    MaskPair,
    SplitAssignment,
    compare,
    discover,
    evaluate,
    mask_ids,
    split,
)
from .masks import (
    BinaryMask,
    ClassSpec,
    LabelMask,
    binarize,
    compose_class_masks,
    load_class_config,
    load_mask,
    merge_classes,
    save_mask,
    validate_pair,
)
from .metrics import (
    ClassMetrics,
    ConfusionCounts,
    class_metrics,
    confusion_counts,
    error_rate,
    f_score,
    jaccard,
    theta,
)
from .reporting import (
    EvaluationReport,
    ImageResult,
    Scenario,
    load_report,
    render,
    report_from_dict,
    report_to_dict,
    save_report,
)
from .stats import Method, TestResult, pairwise_matrix, signed_rank_distribution, wilcoxon

__all__ = [
    "__version__",
    # masks
    "ClassSpec", "LabelMask", "BinaryMask", "load_class_config", "load_mask",
    "save_mask", "compose_class_masks", "binarize", "merge_classes",
    "validate_pair",
    # metrics
    "ConfusionCounts", "ClassMetrics", "confusion_counts", "f_score",
    "error_rate", "jaccard", "theta", "class_metrics",
    # context
    "Centroid", "ContextConfig", "ContextResult", "DegeneracyFlag",
    "PunishMode", "centroid", "spatial_coefficient", "scale_coefficient",
    "spatial_ratio", "pc_loss", "punish",
    # stats
    "Method", "TestResult", "wilcoxon", "pairwise_matrix", "signed_rank_distribution",
    # harness & reporting
    "MaskPair", "DatasetManifest", "SplitAssignment", "mask_ids", "discover",
    "split", "evaluate", "compare", "Scenario", "ImageResult",
    "EvaluationReport", "render", "save_report", "load_report",
    "report_to_dict", "report_from_dict",
    # errors
    "OcuctxError", "MaskFormatError", "LabelValidationError",
    "PairMismatchError", "ConfigError", "DegenerateSampleError",
]
