"""Whitened-cosine-similarity screening classifier for high-dimensional
vectors, with KNN / PCA baselines, an evaluation harness, and a CLI.
"""

from .classifiers import (
    KnnModel,
    NearestMeanHead,
    PcaPipelineModel,
    Prediction,
    WhitenedCosineModel,
    method_name,
    predict,
    predict_any,
    predict_knn,
    predict_pca,
    train_knn,
    train_pca_pipeline,
    train_whitened_cosine,
)
from .dataset import (
    LABELS,
    NORMAL,
    RAW_VECTORS,
    ROSACEA,
    DatasetManifest,
    PreprocessSpec,
    SyntheticSpec,
    generate_synthetic,
    load_csv_vectors,
    load_image_vector,
    load_vectors,
    scan_directories,
    split,
)
from .evaluation import ConfusionMatrix, MetricsReport, confusion, metrics, render_report
from .linalg import (
    DEFAULT_TRUNCATION,
    EigenSystem,
    TruncationPolicy,
    WhiteningMatrix,
    center_columns,
    column_mean,
    covariance_unbiased,
    eigh_symmetric,
    pca_gram_trick,
    whitening_matrix,
)
from .model_io import ModelFormatError, load_model, save_model
from .similarity import WhitenedNullSpaceError, cosine, euclidean, manhattan, whitened_cosine

__version__ = "0.1.0"
