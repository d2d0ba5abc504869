"""Dataset-copyright auditing for video recognition models.

The pipeline marks a dataset by injecting seeded 3D procedural noise into a
small fraction of its videos, publishes one variant of every sample while
retaining the complement, and later decides -- from black-box queries to a
suspect model and a one-sided Wilcoxon signed-rank test -- whether the
published dataset was used for training.
"""

from .errors import (
    AuditPowerWarning,
    ConfigurationError,
    FormatError,
    IntegrityError,
    MissingPredictionError,
    QueryBudgetExceededError,
    QueryError,
    ScoringError,
    ShapeMismatchError,
    VideoAuditError,
)
from .oracles import (
    BudgetedOracle,
    FileBackedOracle,
    OracleResponse,
    PosteriorVector,
    QuantizingOracle,
    RemoteOracle,
    full_response,
    label_response,
    quantize_posterior,
    quantize_response,
    query,
    response_from_wire,
    response_to_wire,
    topk_response,
    true_label_prob,
)
from .perlin import (
    PerlinParams,
    derive_seed,
    fade,
    fractal,
    generate_field,
    generate_fields,
    gradient_at,
    perlin_value,
    sine_transform,
)
from .pipeline import (
    AuditConfig,
    DatasetManifest,
    DatasetPair,
    ManifestEntry,
    Sample,
    build_pair,
    load_dataset_dir,
    modify_dataset,
    prepare_audit,
    save_dataset_dir,
    score_samples,
    select_sets,
)
from .sim import (
    SimulationResult,
    SyntheticOracle,
    SyntheticOracleSpec,
    evaluate_auditor,
    make_suspect,
    make_synthetic_dataset,
)
from .theory import (
    FprBound,
    FprBoundInputs,
    ThresholdModel,
    ThresholdRange,
    affected_samples,
    delta_w_max,
    estimate_concentration,
    fpr_bound,
    fpr_bound_sweep,
    normal_quantile,
    threshold_range,
    wilcoxon_moments,
)
from .verify import (
    AuditAbortedError,
    AuditReport,
    WilcoxonResult,
    audit,
    postprocess_diff,
    reference_threshold,
    wilcoxon_one_sided,
)
from .video import (
    NoiseField,
    VideoTensor,
    inject_noise,
    linf_distance,
    load_frame_dir,
    load_vtr,
    save_vtr,
    ssim,
)

__version__ = "0.1.0"
