"""Benchmark framework for ERP-based brainwave authentication.

The package is organized around a neutral epoch-bundle dataset format, a
fixed preprocessing chain, time- and frequency-domain features, shallow
and embedding-based authenticators, attacker/session evaluation scenarios,
and verification metrics, all drivable from a YAML config via the
``neuroidbench`` command or programmatically through these re-exports.
"""

from ._version import __version__
from .bundle import (
    Bundle,
    DatasetManifest,
    RawRecording,
    build_manifest,
    read_bundle,
    write_bundle,
)
from .classifiers import KINDS, ClassifierSpec, fit, score
from .config import BenchmarkConfig, emit_config, parse_config
from .errors import (
    BenchmarkError,
    ConfigError,
    DegenerateError,
    EmptyError,
    FormatError,
    IoError,
    ParamError,
    SessionSkipped,
    SkipUser,
    TrainingError,
    TruncationError,
    ValidationError,
)
from .evaluation import (
    EvalPlan,
    EvalResult,
    ScoreSet,
    ShallowPipeline,
    TwinPipeline,
    known_attacker_folds,
    run_multi_session,
    run_plan,
    run_single_session,
    unknown_attacker_folds,
)
from .features import (
    DEFAULT_BANDS,
    FeatureMatrix,
    FeatureRecipe,
    Standardizer,
    ar_coefficients,
    assemble,
    band_power,
    standardize_apply,
    standardize_fit,
    welch_psd,
)
from .metrics import (
    DEFAULT_FMR_LEVELS,
    MetricsReport,
    RocCurve,
    aggregate,
    eer,
    eer_from_curve,
    fnmr_at_fmr,
    fnmr_at_fmr_from_curve,
    report,
    roc,
)
from .preprocessing import (
    EpochSet,
    PreprocessParams,
    bandpass,
    baseline_correct,
    concat_epochs,
    downsample,
    extract_epochs,
    preprocess_recording,
    ptp_reject,
)
from .runner import RunRecord, build_pipeline, emit_reports, run
from .splits import group_fold_ids, stratified_fold_ids
from .synthetic import SynthConfig, generate
from .twin import EmbeddingModel, TwinConfig, build, enroll_and_score, train, triplet_loss

__all__ = [name for name in dir() if not name.startswith("_")]
