"""MRI robustness kit: corrupted test-set generation, augmentation kernels,
and segmentation robustness evaluation."""

__version__ = "0.1.0"

from .analysis import (
    FeatureSet,
    TensorDump,
    TensorEntry,
    gradient_normalized_margins,
    k_variance,
    kvgm,
    load_dump,
    pca_project,
    save_dump,
    wasserstein_exact,
    weight_norms,
)
from .augmentations import (
    AfaParams,
    AugmentedPair,
    BaseAugmentConfig,
    MixupParams,
    afa_augment,
    base_augment,
    cutmix,
    make_afa_pair,
    mixup,
)
from .corruptions import (
    SeverityConfig,
    TransformKind,
    apply_corruption,
    apply_corruption_with_mask,
    nrmse,
)
from .errors import (
    ConfigError,
    DegenerateInputError,
    FormatError,
    GridMismatchError,
    MrkError,
    UnsupportedDataError,
    ValidationError,
)
from .metrics import (
    MetricsRecord,
    PairedTestResult,
    aggregate,
    dsc,
    hd95,
    paired_t_test,
)
from .nifti import read_nifti, write_nifti
from .rng import RngStream
from .spectral import KSpace, fft_forward, fft_inverse, shift_center, unshift_center
from .volume import (
    LabelMask,
    ProbMask,
    Volume,
    argmax_labels,
    normalize_zscore,
    one_hot,
)

__all__ = [
    "__version__",
    # volume
    "Volume", "LabelMask", "ProbMask", "one_hot", "argmax_labels", "normalize_zscore",
    # io
    "read_nifti", "write_nifti",
    # rng
    "RngStream",
    # spectral
    "KSpace", "fft_forward", "fft_inverse", "shift_center", "unshift_center",
    # corruptions
    "TransformKind", "SeverityConfig", "apply_corruption", "apply_corruption_with_mask", "nrmse",
    # augmentations
    "MixupParams", "AfaParams", "AugmentedPair", "BaseAugmentConfig",
    "mixup", "cutmix", "afa_augment", "make_afa_pair", "base_augment",
    # metrics
    "MetricsRecord", "PairedTestResult", "dsc", "hd95", "paired_t_test", "aggregate",
    # analysis
    "FeatureSet", "TensorDump", "TensorEntry", "pca_project",
    "gradient_normalized_margins", "k_variance", "kvgm", "wasserstein_exact",
    "weight_norms", "save_dump", "load_dump",
    # errors
    "MrkError", "FormatError", "UnsupportedDataError", "ValidationError",
    "DegenerateInputError", "GridMismatchError", "ConfigError",
]
