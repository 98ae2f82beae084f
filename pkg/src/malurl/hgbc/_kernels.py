"""numba kernels for histogram building, split search and prediction.

Histograms are three (n_features, n_bins) arrays: gradient sums, hessian
sums and row counts. Each feature's histogram is accumulated by one thread
in sample order, so results do not depend on the thread count.
"""
import numpy as np
from numba import njit, prange


@njit(parallel=True, cache=True)
def build_histograms(binned, sample_idx, gradients, hessians, n_bins):
    n_features = binned.shape[1]
    hist_g = np.zeros((n_features, n_bins))
    hist_h = np.zeros((n_features, n_bins))
    hist_c = np.zeros((n_features, n_bins), dtype=np.int64)
    for f in prange(n_features):
        col = binned[:, f]
        for i in range(sample_idx.shape[0]):
            s = sample_idx[i]
            b = col[s]
            hist_g[f, b] += gradients[s]
            hist_h[f, b] += hessians[s]
            hist_c[f, b] += 1
    return hist_g, hist_h, hist_c


@njit(cache=True)
def _term(g, h, l2):
    d = h + l2
    if d <= 0.0:
        return 0.0
    return g * g / d


@njit(cache=True)
def best_split(hist_g, hist_h, hist_c, n_bins_per_feature, sum_g, sum_h, count,
               min_samples_leaf, l2):
    """Scan every (feature, bin) boundary; left child takes bins <= threshold.

    Returns (feature, threshold_bin, gain, left_g, left_h, left_count) with
    feature = -1 when no feasible split has strictly positive gain. Strict
    comparison keeps the first maximiser: lowest feature, then lowest bin.
    """
    parent = _term(sum_g, sum_h, l2)
    best_f = -1
    best_b = -1
    best_gain = 0.0
    best_gl = 0.0
    best_hl = 0.0
    best_cl = 0
    for f in range(hist_g.shape[0]):
        gl = 0.0
        hl = 0.0
        cl = 0
        for b in range(n_bins_per_feature[f] - 1):
            gl += hist_g[f, b]
            hl += hist_h[f, b]
            cl += hist_c[f, b]
            if cl < min_samples_leaf:
                continue
            if count - cl < min_samples_leaf:
                break
            gain = 0.5 * (_term(gl, hl, l2) + _term(sum_g - gl, sum_h - hl, l2) - parent)
            if gain > best_gain:
                best_gain = gain
                best_f = f
                best_b = b
                best_gl = gl
                best_hl = hl
                best_cl = cl
    return best_f, best_b, best_gain, best_gl, best_hl, best_cl


@njit(cache=True)
def predict_tree(binned, feature, threshold, left, right, value):
    n = binned.shape[0]
    out = np.empty(n)
    for i in range(n):
        node = 0
        while left[node] != -1:
            if binned[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = value[node]
    return out
