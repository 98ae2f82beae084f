"""Loading, splitting and synthesising the website feature table.

The table has 13 numeric traffic/URL features and a binary ``Type`` label
(1 = malicious, 0 = benign). Column headers are matched loosely: case,
spaces, underscores and punctuation are ignored, and a few descriptive
aliases ("URL length", "DNS query time", ...) resolve to the canonical
names below.
"""
from __future__ import annotations

import csv
import hashlib
import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import LabelError, ParseError, SchemaError, StratificationError

FEATURE_NAMES = (
    "URL_LENGTH",
    "NUMBER_SPECIAL_CHARACTERS",
    "CONTENT_LENGTH",
    "TCP_CONVERSATION_EXCHANGE",
    "DIST_REMOTE_TCP_PORT",
    "REMOTE_IPS",
    "APP_BYTES",
    "SOURCE_APP_PACKETS",
    "REMOTE_APP_PACKETS",
    "SOURCE_APP_BYTES",
    "REMOTE_APP_BYTES",
    "APP_PACKETS",
    "DNS_QUERY_TIMES",
)
LABEL_COLUMN = "Type"
N_FEATURES = len(FEATURE_NAMES)

DEFAULT_MISSING_TOKENS = ("", "na", "nan", "none")
DEFAULT_LABEL_MAP = {"1": 1, "malicious": 1, "0": 0, "benign": 0}


def _norm(name):
    return re.sub(r"[^a-z0-9]", "", name.lower())


_ALIASES = {
    "urllength": "URL_LENGTH",
    "numberofspecialcharacters": "NUMBER_SPECIAL_CHARACTERS",
    "numberspecialcharacters": "NUMBER_SPECIAL_CHARACTERS",
    "contentlength": "CONTENT_LENGTH",
    "tcpconversationexchange": "TCP_CONVERSATION_EXCHANGE",
    "destinationremotetcpport": "DIST_REMOTE_TCP_PORT",
    "distremotetcpport": "DIST_REMOTE_TCP_PORT",
    "remoteips": "REMOTE_IPS",
    "appbytes": "APP_BYTES",
    "sourceapppackets": "SOURCE_APP_PACKETS",
    "remoteapppackets": "REMOTE_APP_PACKETS",
    "sourceappbytes": "SOURCE_APP_BYTES",
    "remoteappbytes": "REMOTE_APP_BYTES",
    "apppackets": "APP_PACKETS",
    "dnsquerytime": "DNS_QUERY_TIMES",
    "dnsquerytimes": "DNS_QUERY_TIMES",
    "type": LABEL_COLUMN,
}


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix, missing-value mask and labels.

    ``X`` holds NaN wherever ``missing_mask`` is set; downstream code reads
    the mask, never the NaNs.
    """

    X: np.ndarray
    missing_mask: np.ndarray
    y: np.ndarray
    feature_names: tuple = FEATURE_NAMES

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        mask = np.asarray(self.missing_mask, dtype=bool)
        y = np.asarray(self.y, dtype=np.int64)
        if X.ndim != 2 or X.shape[1] != len(self.feature_names):
            raise SchemaError(f"expected {len(self.feature_names)} feature columns, got shape {X.shape}")
        if mask.shape != X.shape or y.shape != (X.shape[0],):
            raise SchemaError("X, missing_mask and y disagree in shape")
        if y.size and not np.isin(y, (0, 1)).all():
            raise LabelError("labels must be 0 or 1")
        X = np.where(mask, np.nan, X)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "missing_mask", mask)
        object.__setattr__(self, "y", y)

    @property
    def n_rows(self):
        return self.X.shape[0]

    def class_counts(self):
        return {0: int(np.sum(self.y == 0)), 1: int(np.sum(self.y == 1))}

    def take(self, idx):
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(self.X[idx], self.missing_mask[idx], self.y[idx], self.feature_names)

    def replace(self, X=None, missing_mask=None, y=None):
        return Dataset(
            self.X if X is None else X,
            self.missing_mask if missing_mask is None else missing_mask,
            self.y if y is None else y,
            self.feature_names,
        )

    def fingerprint(self):
        """Short SHA-256 over values, mask and labels."""
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(np.where(self.missing_mask, 0.0, self.X)).tobytes())
        h.update(np.packbits(self.missing_mask).tobytes())
        h.update(self.y.astype(np.int8).tobytes())
        return h.hexdigest()[:16]


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.75
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise StratificationError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")


def _parse_label(token, label_map, row):
    key = token.strip().lower()
    if key in label_map:
        return label_map[key]
    try:
        value = float(key)
    except ValueError:
        raise LabelError(f"row {row}: unrecognised label {token!r}") from None
    if value in (0.0, 1.0):
        return int(value)
    raise LabelError(f"row {row}: label {token!r} outside {{0, 1}}")


def load_csv(path, has_header=True, missing_tokens=DEFAULT_MISSING_TOKENS, label_map=None):
    """Read a website table from CSV.

    Parameters
    ----------
    path : str or Path
        Comma-separated UTF-8 file.
    has_header : bool
        With a header, columns may appear in any order and extra columns are
        ignored. Without one, the 13 features are expected in canonical order
        followed by the label.
    missing_tokens : iterable of str
        Cell values (compared case-insensitively after stripping) that mark
        a missing feature value.
    label_map : dict, optional
        Lower-case label string to 0/1; defaults to ``DEFAULT_LABEL_MAP``.

    Returns
    -------
    Dataset
    """
    missing = {t.strip().lower() for t in missing_tokens}
    label_map = {k.lower(): v for k, v in (label_map or DEFAULT_LABEL_MAP).items()}
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]

    if has_header:
        if not rows:
            raise SchemaError(f"{path}: empty file")
        header, body = rows[0], rows[1:]
        positions = {}
        for pos, name in enumerate(header):
            canon = _ALIASES.get(_norm(name))
            if canon is not None and canon not in positions:
                positions[canon] = pos
        for name in FEATURE_NAMES + (LABEL_COLUMN,):
            if name not in positions:
                raise SchemaError(f"{path}: missing required column {name!r}")
        feat_pos = [positions[n] for n in FEATURE_NAMES]
        label_pos = positions[LABEL_COLUMN]
        first_line = 2
    else:
        body = rows
        feat_pos = list(range(N_FEATURES))
        label_pos = N_FEATURES
        first_line = 1

    n = len(body)
    X = np.zeros((n, N_FEATURES))
    mask = np.zeros((n, N_FEATURES), dtype=bool)
    y = np.zeros(n, dtype=np.int64)
    width = max(feat_pos + [label_pos]) + 1
    for i, row in enumerate(body):
        line = first_line + i
        if len(row) < width:
            raise ParseError(f"{path}: line {line} has {len(row)} cells, expected at least {width}")
        for j, pos in enumerate(feat_pos):
            token = row[pos].strip()
            if token.lower() in missing:
                mask[i, j] = True
                continue
            try:
                value = float(token)
            except ValueError:
                raise ParseError(
                    f"{path}: line {line}, column {FEATURE_NAMES[j]!r}: non-numeric value {token!r}"
                ) from None
            if not math.isfinite(value):
                raise ParseError(f"{path}: line {line}, column {FEATURE_NAMES[j]!r}: non-finite value {token!r}")
            X[i, j] = value
        y[i] = _parse_label(row[label_pos], label_map, line)
    return Dataset(X, mask, y)


def write_csv(ds, path, comment=None):
    """Write ``ds`` in canonical column order; missing cells are left empty.

    Floats are written with ``repr`` so a reload reproduces them exactly.
    """
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(ds.feature_names) + [LABEL_COLUMN])
        for i in range(ds.n_rows):
            cells = ["" if ds.missing_mask[i, j] else repr(float(ds.X[i, j])) for j in range(ds.X.shape[1])]
            w.writerow(cells + [str(int(ds.y[i]))])
    return path


def _train_counts(counts, fraction):
    """Per-class training allocation.

    The smaller class gets ``floor(f * n_c)`` rows, the larger class the
    remainder of ``round(f * n)``; both are clamped so each class keeps at
    least one row on each side and stays within one row of ``f * n_c``.
    """
    (minor, n_minor), (major, n_major) = sorted(counts.items(), key=lambda kv: (kv[1], -kv[0]))
    total = int(math.floor(fraction * (n_minor + n_major) + 0.5))
    t_minor = int(math.floor(fraction * n_minor))
    t_major = total - t_minor
    t_major = min(max(t_major, math.floor(fraction * n_major)), math.ceil(fraction * n_major))
    t_minor = min(max(t_minor, 1), n_minor - 1)
    t_major = min(max(t_major, 1), n_major - 1)
    return {minor: t_minor, major: t_major}


def stratified_split(ds, spec=SplitSpec()):
    """Split into (train, test) preserving per-class proportions.

    Rows are shuffled within each class with ``spec.seed``; both outputs keep
    the original relative row order.
    """
    counts = ds.class_counts()
    if ds.n_rows < 8:
        raise StratificationError(f"need at least 8 rows to split, got {ds.n_rows}")
    for c, cnt in counts.items():
        if cnt < 2:
            raise StratificationError(f"class {c} has {cnt} rows; stratification needs at least 2 per class")
    alloc = _train_counts(counts, spec.train_fraction)
    rng = np.random.default_rng(spec.seed)
    train_idx = []
    for c in (0, 1):
        members = np.flatnonzero(ds.y == c)
        train_idx.append(members[rng.permutation(members.size)[: alloc[c]]])
    train_idx = np.sort(np.concatenate(train_idx))
    test_idx = np.setdiff1d(np.arange(ds.n_rows), train_idx)
    return ds.take(train_idx), ds.take(test_idx)


# Synthetic stand-in ---------------------------------------------------------

# Minority region in the unit square of (packet, byte) latents.
_BOXES = (
    (0.05, 0.35, 0.55, 0.95),
    (0.60, 0.95, 0.05, 0.40),
    (0.40, 0.60, 0.40, 0.60),
    (0.75, 0.95, 0.70, 0.95),
)
_RAP = FEATURE_NAMES.index("REMOTE_APP_PACKETS")
_SAB = FEATURE_NAMES.index("SOURCE_APP_BYTES")


def _in_boxes(u, v):
    inside = np.zeros(np.shape(u), dtype=bool)
    for u0, u1, v0, v1 in _BOXES:
        inside |= (u >= u0) & (u < u1) & (v >= v0) & (v < v1)
    return inside


def _packets_from_latent(u):
    return 2.0 + 300.0 * u**1.5


def _bytes_from_latent(v):
    return 50.0 + 20000.0 * v**2


def synthetic_label(X):
    """Label rule of :func:`generate_synthetic`, recomputed from features."""
    u = np.clip((X[:, _RAP] - 2.0) / 300.0, 0.0, None) ** (2.0 / 3.0)
    v = np.sqrt(np.clip((X[:, _SAB] - 50.0) / 20000.0, 0.0, None))
    return _in_boxes(u, v).astype(np.int64)


def _sample_latents(rng, n, want_inside):
    out = np.empty((0, 2))
    while out.shape[0] < n:
        cand = rng.random((max(4 * (n - out.shape[0]), 16), 2))
        keep = _in_boxes(cand[:, 0], cand[:, 1]) == want_inside
        out = np.vstack([out, cand[keep]])
    return out[:n]


def generate_synthetic(n_rows, imbalance_ratio, seed, missing_rate=0.02):
    """Reproducible 13-feature dataset with a nonlinear decision boundary.

    Malicious rows (label 1) are those whose remote-app-packet and
    source-app-bytes values fall inside a union of axis-aligned boxes in a
    monotone latent space, so no single hyperplane separates the classes.
    The remaining features are noisy traffic-like columns, some correlated
    with the informative pair.

    Parameters
    ----------
    n_rows : int
        At least 20.
    imbalance_ratio : float
        minority / majority, in (0, 1]. The minority count is
        ``round(n_rows * r / (1 + r))``.
    seed : int
    missing_rate : float
        Fraction of cells masked as missing.
    """
    if n_rows < 20:
        raise ValueError("n_rows must be at least 20")
    if not 0.0 < imbalance_ratio <= 1.0:
        raise ValueError("imbalance_ratio must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    n_min = int(math.floor(n_rows * imbalance_ratio / (1.0 + imbalance_ratio) + 0.5))
    n_maj = n_rows - n_min

    lat = np.vstack([_sample_latents(rng, n_min, True), _sample_latents(rng, n_maj, False)])
    y = np.concatenate([np.ones(n_min, dtype=np.int64), np.zeros(n_maj, dtype=np.int64)])
    order = rng.permutation(n_rows)
    lat, y = lat[order], y[order]

    n = n_rows
    rap = _packets_from_latent(lat[:, 0])
    sab = _bytes_from_latent(lat[:, 1])
    url_len = 16.0 + np.round(rng.gamma(2.0, 20.0, n))
    special = np.maximum(0.0, np.round(5.0 + 0.2 * url_len + rng.normal(0.0, 2.0, n)))
    content = np.round(rng.lognormal(8.0, 1.5, n))
    tcp = np.maximum(0.0, np.round(0.8 * rap + rng.normal(0.0, 5.0, n)))
    port = rng.poisson(3.0, n).astype(float)
    ips = rng.poisson(3.0, n).astype(float)
    app_bytes = np.round(rng.lognormal(7.0, 1.2, n))
    sap = np.round(rap) + rng.poisson(2.0, n)
    rab = app_bytes + np.round(rng.lognormal(5.0, 1.0, n))
    app_packets = sap.copy()
    dns = rng.poisson(2.0, n).astype(float)
    X = np.column_stack([
        url_len, special, content, tcp, port, ips, app_bytes,
        sap, rap, sab, rab, app_packets, dns,
    ])
    mask = rng.random(X.shape) < missing_rate
    return Dataset(X, mask, y)
