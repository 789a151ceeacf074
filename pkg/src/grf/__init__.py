"""Generalised random forests: pivots, sharpening ensembles and conditioning ensembles."""

from .conditioner import (
    ForestConfig,
    ForestModel,
    ImportanceReport,
    OOBResult,
    bootstrap,
    oob_error,
    permutation_importance,
    predict_forest,
    proximity,
    train_forest,
)
from .dataset import (
    CATEGORICAL,
    CONTINUOUS,
    FeatureSchema,
    InformationSystem,
    SchemaHint,
    class_distribution,
    load_schema,
    parse_csv,
    to_csv,
)
from .errors import ConfigError, DataError, GRFError, ModelFormatError, SchemaError
from .impurity import impurity, split_gain
from .model_io import load_model, save_model
from .pivot import (
    Direction,
    GenerationStrategy,
    Pivot,
    SubsetRule,
    TernaryPivot,
    ThresholdRule,
    Verdict,
    apply_pivot,
    apply_ternary,
    enumerate_thresholds,
    generate_pivot,
    generate_ternary,
)
from .sharpener import (
    FernModel,
    NullModel,
    SharpenerConfig,
    TreeModel,
    TrunkModel,
    predict_sharpener,
    train_fern,
    train_null,
    train_sharpener,
    train_tree,
    train_trunk,
)

__version__ = "0.1.0"
