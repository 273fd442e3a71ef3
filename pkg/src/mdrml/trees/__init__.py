from .core import (
    HISTOGRAM_BINS,
    LEAF_WISE,
    LEVEL_WISE,
    BinnedMatrix,
    DimensionError,
    InvalidHessianError,
    Tree,
    TreeParams,
    bin_features,
    fit_gini_tree,
    fit_newton_tree,
    tree_predict,
)
from .kernels import get_backend

__all__ = [
    "HISTOGRAM_BINS", "LEAF_WISE", "LEVEL_WISE", "BinnedMatrix", "DimensionError",
    "InvalidHessianError", "Tree", "TreeParams", "bin_features", "fit_gini_tree",
    "fit_newton_tree", "get_backend", "tree_predict",
]
