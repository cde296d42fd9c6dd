"""cmml: a requirement-gated machine-learning pipeline.

A declarative data-requirements language (ranges, rules, invariants, derived
features) governs a tabular dataset through preparation, from-scratch model
training, cross-validated selection, and a thresholded gate verdict — run as
a library or through the ``cmml`` command line.
"""

__version__ = "0.1.0"

from .tabular import (
    Dataset,
    DescriptiveStats,
    FeatureMeta,
    FeatureStats,
    MISSING,
    StructuralError,
    UnknownFeatureError,
    descriptive_stats,
    load_csv,
    mark_missing_zeros,
    split,
)

__all__ = [
    "__version__",
    "Dataset", "DescriptiveStats", "FeatureMeta", "FeatureStats", "MISSING",
    "StructuralError", "UnknownFeatureError", "descriptive_stats", "load_csv",
    "mark_missing_zeros", "split",
]
