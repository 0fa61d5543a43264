"""Eigenspace classification of Android applications from binary static features."""

from .classifier import (
    ClassificationResult,
    EigenspaceModel,
    classify,
    classify_batch,
    load_model,
    save_model,
    train,
)
from .datasets import SyntheticSpec, generate_synthetic, read_dataset, write_dataset
from .errors import (
    CatalogError,
    ConvergenceError,
    DataError,
    DegenerateError,
    EigendroidError,
    ModelFormatError,
    RegimeError,
)
from .evaluation import (
    ConfusionCounts,
    MetricsRow,
    compute_metrics,
    cross_validate,
    export_mapping,
    make_folds,
)
from .features import (
    ArtifactBundle,
    FeatureCatalog,
    FeatureDefinition,
    default_catalog,
    extract,
    extract_batch,
    load_catalog,
)
from .linalg import (
    EigenPairs,
    center,
    compute_mean,
    covariance,
    eigendecompose,
    project,
    select_eigenvectors,
)
from .naive_bayes import NaiveBayesModel, nb_classify, nb_train
from .ranking import RankedFeatures, gain_ratio, rank_features, select_top
from .vectors import BENIGN, MALWARE, Dataset, FeatureVector

__version__ = "0.1.0"
