"""Weekly influenza-activity nowcasting and forecasting from social-media
post metadata and image-embedding similarity.

The pipeline: ingest posts / embeddings / surveillance counts, bucket posts
into Monday-start weeks, build date + hashtag-count + image-similarity
features, z-score them on training weeks, fit one of nine regression models,
and score held-out weeks chronologically.
"""

from .errors import ConvergenceError, CorruptModelError, DataError, ModelVersionError
from .evaluation import (
    EvalReport,
    Metrics,
    SplitConfig,
    chronological_split,
    clip_nonnegative,
    compute_metrics,
    grid_search,
    kfold_slices,
    shift_horizon,
    train_eval,
    train_model,
)
from .features import (
    DEFAULT_KEYWORDS,
    DEFAULT_MULTIPLIER,
    Dataset,
    Normalizer,
    ReferenceProfile,
    build_profiles,
    cosine_distance,
    extract_features,
    read_features_csv,
    write_features_csv,
    zscore_apply,
    zscore_fit,
)
from .ingest import (
    EmbeddingRecord,
    EmbeddingTable,
    PostRecord,
    SurveillanceSeries,
    WeeklyBuckets,
    bucket_weeks,
    parse_embeddings,
    parse_posts,
    parse_surveillance,
    write_embeddings,
    write_posts,
    write_surveillance,
)
from .models import (
    KINDS,
    SCHEMAS,
    ImportanceReport,
    ModelSpec,
    TrainedModel,
    feature_importances,
    fit,
    load_model,
    predict,
    save_model,
)
from .synth import SynthConfig, generate_corpus, generate_epidemic, negative_control, write_corpus

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError",
    "CorruptModelError",
    "DataError",
    "ModelVersionError",
    "EvalReport",
    "Metrics",
    "SplitConfig",
    "chronological_split",
    "clip_nonnegative",
    "compute_metrics",
    "grid_search",
    "kfold_slices",
    "shift_horizon",
    "train_eval",
    "train_model",
    "DEFAULT_KEYWORDS",
    "DEFAULT_MULTIPLIER",
    "Dataset",
    "Normalizer",
    "ReferenceProfile",
    "build_profiles",
    "cosine_distance",
    "extract_features",
    "read_features_csv",
    "write_features_csv",
    "zscore_apply",
    "zscore_fit",
    "EmbeddingRecord",
    "EmbeddingTable",
    "PostRecord",
    "SurveillanceSeries",
    "WeeklyBuckets",
    "bucket_weeks",
    "parse_embeddings",
    "parse_posts",
    "parse_surveillance",
    "write_embeddings",
    "write_posts",
    "write_surveillance",
    "KINDS",
    "SCHEMAS",
    "ImportanceReport",
    "ModelSpec",
    "TrainedModel",
    "feature_importances",
    "fit",
    "load_model",
    "predict",
    "save_model",
    "SynthConfig",
    "generate_corpus",
    "generate_epidemic",
    "negative_control",
    "write_corpus",
    "__version__",
]
