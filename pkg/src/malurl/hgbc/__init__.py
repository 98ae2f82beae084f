from .binning import BinMapper, bin_apply, bin_fit
from .boosting import (
    HgbcClassifier,
    HgbcConfig,
    HgbcModel,
    fit_arrays,
    hgbc_fit,
    hgbc_predict_proba,
    logloss,
    logloss_grad_hess,
    sigmoid,
)
from .grower import SplitInfo, Tree, find_best_split, grow_tree

__all__ = [
    "BinMapper", "bin_apply", "bin_fit", "HgbcClassifier", "HgbcConfig", "HgbcModel", "fit_arrays",
    "hgbc_fit", "hgbc_predict_proba", "logloss", "logloss_grad_hess", "sigmoid", "SplitInfo", "Tree",
    "find_best_split", "grow_tree",
]
