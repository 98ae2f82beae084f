"""Leaf-wise growth of one Newton regression tree over binned features."""
from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from ._kernels import best_split, build_histograms, predict_tree

LEAF_EPS = 1e-12


@dataclass(frozen=True)
class SplitInfo:
    feature: int
    bin_threshold: int
    gain: float
    left_g: float
    left_h: float
    left_count: int


def find_best_split(histograms, min_samples_leaf=1, l2_regularization=0.0, n_bins_per_feature=None,
                    totals=None):
    """Best (feature, bin) split of one node, or None.

    Parameters
    ----------
    histograms : tuple of arrays
        ``(g_sum, h_sum, count)``, each shaped (n_features, n_bins).
    min_samples_leaf : int
    l2_regularization : float
    n_bins_per_feature : array, optional
        Bins actually used per feature; defaults to the full width.
    totals : tuple, optional
        Node ``(G, H, N)``; defaults to the sums over feature 0.
    """
    hg, hh, hc = (np.ascontiguousarray(a) for a in histograms)
    hc = hc.astype(np.int64)
    if n_bins_per_feature is None:
        n_bins_per_feature = np.full(hg.shape[0], hg.shape[1], dtype=np.int64)
    if totals is None:
        totals = (float(hg[0].sum()), float(hh[0].sum()), int(hc[0].sum()))
    f, b, gain, gl, hl, cl = best_split(hg, hh, hc, np.asarray(n_bins_per_feature, dtype=np.int64),
                                         float(totals[0]), float(totals[1]), int(totals[2]),
                                         int(min_samples_leaf), float(l2_regularization))
    if f < 0:
        return None
    return SplitInfo(int(f), int(b), float(gain), float(gl), float(hl), int(cl))


@dataclass(frozen=True, eq=False)
class Tree:
    """Flat node arrays; ``left == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    gain: np.ndarray
    count: np.ndarray

    @property
    def n_leaves(self):
        return int(np.sum(self.left == -1))

    def predict_binned(self, binned):
        return predict_tree(binned, self.feature, self.threshold, self.left, self.right, self.value)

    def to_dict(self):
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": [float(v) for v in self.value],
            "gain": [float(v) for v in self.gain],
            "count": self.count.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            np.array(d["feature"], dtype=np.int64),
            np.array(d["threshold"], dtype=np.int64),
            np.array(d["left"], dtype=np.int64),
            np.array(d["right"], dtype=np.int64),
            np.array(d["value"], dtype=np.float64),
            np.array(d["gain"], dtype=np.float64),
            np.array(d["count"], dtype=np.int64),
        )


def _relative_gap(direct, derived, magnitude):
    # relative to the summed magnitudes of the terms: a bin whose gradients cancel
    # to ~1e-16 would otherwise report rounding residue as a 100% error
    scale = np.maximum(np.maximum(np.abs(direct), np.abs(derived)), magnitude)
    gap = np.abs(direct - derived)
    with np.errstate(invalid="ignore", divide="ignore"):
        rel = np.where(scale > 0, gap / scale, 0.0)
    return float(rel.max()) if rel.size else 0.0


def grow_tree(binned, n_bins_per_feature, gradients, hessians, min_samples_leaf=10, max_leaf_nodes=31,
              l2_regularization=0.0, subtraction_log=None):
    """Grow one tree best-first.

    The splittable leaf with the largest gain is split next (ties: earliest
    created node) until ``max_leaf_nodes`` leaves exist or nothing splits.
    For each split the smaller child's histogram is built from its rows and
    the sibling's is the parent's minus it.

    Returns the tree and a list of ``(row_indices, leaf_value)``.
    When ``subtraction_log`` is a list, every derived sibling histogram is
    also built directly and the discrepancy appended as a dict.
    """
    n_bins = int(n_bins_per_feature.max())
    msl, l2 = int(min_samples_leaf), float(l2_regularization)

    feature, threshold, left, right, gain, count, rows = [], [], [], [], [], [], []
    pending = {}
    heap = []

    def new_node(idx, hist, totals):
        nid = len(feature)
        feature.append(-1)
        threshold.append(-1)
        left.append(-1)
        right.append(-1)
        gain.append(0.0)
        count.append(idx.size)
        rows.append(idx)
        if idx.size >= 2 * msl:
            split = find_best_split(hist, msl, l2, n_bins_per_feature, totals)
            if split is not None:
                pending[nid] = (hist, totals, split)
                heapq.heappush(heap, (-split.gain, nid))
        return nid

    root_idx = np.arange(binned.shape[0], dtype=np.int64)
    root_hist = build_histograms(binned, root_idx, gradients, hessians, n_bins)
    new_node(root_idx, root_hist, (float(gradients.sum()), float(hessians.sum()), root_idx.size))
    n_leaves = 1

    while heap and n_leaves < max_leaf_nodes:
        _, nid = heapq.heappop(heap)
        hist, (G, H, N), split = pending.pop(nid)
        idx = rows[nid]
        go_left = binned[idx, split.feature] <= split.bin_threshold
        left_idx, right_idx = idx[go_left], idx[~go_left]

        left_small = left_idx.size <= right_idx.size
        small_idx = left_idx if left_small else right_idx
        small_hist = build_histograms(binned, small_idx, gradients, hessians, n_bins)
        large_hist = tuple(p - s for p, s in zip(hist, small_hist))
        # empty bins hold exact zeros rather than inherited rounding residue
        empty = large_hist[2] == 0
        large_hist[0][empty] = 0.0
        large_hist[1][empty] = 0.0
        if subtraction_log is not None:
            large_idx = right_idx if left_small else left_idx
            direct = build_histograms(binned, large_idx, gradients, hessians, n_bins)
            g_mag = build_histograms(binned, idx, np.abs(gradients), hessians, n_bins)[0]
            subtraction_log.append({
                "count_equal": bool(np.array_equal(direct[2], large_hist[2])),
                "g_rel": _relative_gap(direct[0], large_hist[0], g_mag),
                "h_rel": _relative_gap(direct[1], large_hist[1], hist[1]),
            })
        left_hist, right_hist = (small_hist, large_hist) if left_small else (large_hist, small_hist)

        left_tot = (split.left_g, split.left_h, split.left_count)
        right_tot = (G - split.left_g, H - split.left_h, N - split.left_count)
        feature[nid] = split.feature
        threshold[nid] = split.bin_threshold
        gain[nid] = split.gain
        left[nid] = new_node(left_idx, left_hist, left_tot)
        right[nid] = new_node(right_idx, right_hist, right_tot)
        rows[nid] = None
        n_leaves += 1

    value = np.zeros(len(feature))
    leaves = []
    for nid, idx in enumerate(rows):
        if left[nid] == -1:
            v = -float(gradients[idx].sum()) / (float(hessians[idx].sum()) + l2 + LEAF_EPS)
            value[nid] = v
            leaves.append((idx, v))
    tree = Tree(
        np.array(feature, dtype=np.int64),
        np.array(threshold, dtype=np.int64),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        value,
        np.array(gain, dtype=np.float64),
        np.array(count, dtype=np.int64),
    )
    return tree, leaves
