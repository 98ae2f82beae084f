import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from malurl.data_io import (
    FEATURE_NAMES,
    Dataset,
    SplitSpec,
    generate_synthetic,
    load_csv,
    stratified_split,
    synthetic_label,
    write_csv,
)
from malurl.errors import LabelError, ParseError, SchemaError, StratificationError

from conftest import make_dataset


def _csv(tmp_path, header, rows, name="d.csv"):
    p = tmp_path / name
    p.write_text("\n".join([",".join(header)] + [",".join(map(str, r)) for r in rows]) + "\n")
    return p


def test_feature_schema_has_thirteen_columns():
    assert len(FEATURE_NAMES) == 13
    assert "REMOTE_APP_PACKETS" in FEATURE_NAMES


def test_load_1781_rows(tmp_path):
    rng = np.random.default_rng(0)
    rows = [list(rng.integers(0, 100, 13)) + [int(rng.random() < 0.12)] for _ in range(1781)]
    ds = load_csv(_csv(tmp_path, list(FEATURE_NAMES) + ["Type"], rows))
    assert ds.n_rows == 1781
    assert ds.X.shape == (1781, 13)


def test_load_reorders_columns_and_accepts_aliases(tmp_path):
    header = ["Type", "URL", "DNS query time", "URL length", "number of special characters", "content length",
              "TCP conversation exchange", "destination remote TCP port", "remote IPs", "APP bytes",
              "source app packets", "remote app packets", "source app bytes", "remote app bytes", "App packets"]
    row = ["malicious", "http://x", 13] + list(range(1, 13))
    ds = load_csv(_csv(tmp_path, header, [row]))
    np.testing.assert_array_equal(ds.X[0], np.arange(1, 14))
    assert ds.y.tolist() == [1]


def test_empty_and_na_tokens_are_masked(tmp_path):
    rows = [[5, 2, ""] + [1] * 10 + [0], [5, "NA", 3] + ["nan"] + [1] * 9 + ["benign"], ["None"] + [1] * 12 + [1]]
    ds = load_csv(_csv(tmp_path, list(FEATURE_NAMES) + ["Type"], rows))
    assert ds.missing_mask[0, 2]
    assert ds.missing_mask[1, 1] and ds.missing_mask[1, 3]
    assert ds.missing_mask[2, 0]
    assert ds.missing_mask.sum() == 4
    assert ds.y.tolist() == [0, 0, 1]


def test_missing_column_is_schema_error(tmp_path):
    header = [n for n in FEATURE_NAMES if n != "DNS_QUERY_TIMES"] + ["Type"]
    with pytest.raises(SchemaError, match="DNS_QUERY_TIMES"):
        load_csv(_csv(tmp_path, header, [[1] * 13]))


def test_non_numeric_cell_reports_row_and_column(tmp_path):
    rows = [[1] * 13 + [0], [1] * 4 + ["abc"] + [1] * 8 + [1]]
    with pytest.raises(ParseError, match=r"line 3.*DIST_REMOTE_TCP_PORT"):
        load_csv(_csv(tmp_path, list(FEATURE_NAMES) + ["Type"], rows))


def test_bad_label(tmp_path):
    with pytest.raises(LabelError):
        load_csv(_csv(tmp_path, list(FEATURE_NAMES) + ["Type"], [[1] * 13 + [2]]))


def test_headerless_file(tmp_path):
    p = tmp_path / "h.csv"
    p.write_text(",".join(["1"] * 13 + ["1"]) + "\n" + ",".join(["2"] * 12 + ["", "0"]) + "\n")
    ds = load_csv(p, has_header=False)
    assert ds.n_rows == 2 and ds.missing_mask[1, 12] and ds.y.tolist() == [1, 0]


def test_csv_round_trip(tmp_path):
    ds = generate_synthetic(200, 0.3, seed=5)
    back = load_csv(write_csv(ds, tmp_path / "rt.csv", comment="seed=5"))
    np.testing.assert_array_equal(back.missing_mask, ds.missing_mask)
    np.testing.assert_array_equal(back.y, ds.y)
    np.testing.assert_array_equal(np.where(ds.missing_mask, 0, back.X), np.where(ds.missing_mask, 0, ds.X))


def test_split_counts_per_class():
    y = np.r_[np.zeros(80, int), np.ones(20, int)]
    train, test = stratified_split(make_dataset(np.arange(100.0), y), SplitSpec(0.75, seed=3))
    # counting oracle: minority floor(0.75*20)=15, majority round(0.75*100)-15=60
    assert train.class_counts() == {0: 60, 1: 15}
    assert test.class_counts() == {0: 20, 1: 5}
    ids = np.r_[train.X[:, 0], test.X[:, 0]]
    assert sorted(ids.tolist()) == list(range(100))


def test_split_is_deterministic():
    ds = generate_synthetic(300, 0.4, seed=1)
    a, _ = stratified_split(ds, SplitSpec(0.75, 9))
    b, _ = stratified_split(ds, SplitSpec(0.75, 9))
    np.testing.assert_array_equal(a.X, b.X)


def test_split_single_class_rejected():
    with pytest.raises(StratificationError):
        stratified_split(make_dataset(np.arange(20.0), np.zeros(20, int)))


def test_split_fraction_bounds():
    with pytest.raises(StratificationError):
        SplitSpec(1.0)


@settings(max_examples=60, deadline=None)
@given(n0=st.integers(2, 120), n1=st.integers(2, 120), frac=st.floats(0.05, 0.95), seed=st.integers(0, 2**32 - 1))
def test_split_preserves_proportions(n0, n1, frac, seed):
    if n0 + n1 < 8:
        return
    y = np.r_[np.zeros(n0, int), np.ones(n1, int)]
    train, test = stratified_split(make_dataset(np.arange(n0 + n1, dtype=float), y), SplitSpec(frac, seed))
    for c, n in ((0, n0), (1, n1)):
        got = train.class_counts()[c]
        assert abs(got - frac * n) < 1.0 + 1e-9
        assert 1 <= got <= n - 1
    assert train.n_rows + test.n_rows == n0 + n1
    assert not set(train.X[:, 0]) & set(test.X[:, 0])


def test_synthetic_class_counts():
    ds = generate_synthetic(1000, 0.2, seed=0)
    m = round(1000 * 0.2 / 1.2)
    assert ds.class_counts() == {1: m, 0: 1000 - m}
    assert m == 167


def test_synthetic_balanced_case():
    c = generate_synthetic(501, 1.0, seed=2).class_counts()
    assert abs(c[0] - c[1]) <= 1


def test_synthetic_deterministic_and_masked():
    a = generate_synthetic(400, 0.25, seed=11)
    b = generate_synthetic(400, 0.25, seed=11)
    np.testing.assert_array_equal(a.missing_mask, b.missing_mask)
    np.testing.assert_array_equal(np.nan_to_num(a.X), np.nan_to_num(b.X))
    np.testing.assert_array_equal(a.y, b.y)
    assert 0.01 < a.missing_mask.mean() < 0.03


def test_synthetic_label_is_a_function_of_features():
    ds = generate_synthetic(600, 0.5, seed=4, missing_rate=0.0)
    np.testing.assert_array_equal(synthetic_label(ds.X), ds.y)


def test_dataset_rejects_wrong_width():
    with pytest.raises(SchemaError):
        Dataset(np.zeros((3, 5)), np.zeros((3, 5), bool), np.zeros(3, int))


def test_fingerprint_changes_with_labels():
    ds = generate_synthetic(100, 0.5, seed=1)
    flipped = ds.replace(y=1 - ds.y)
    assert ds.fingerprint() != flipped.fingerprint()
    assert math.isclose(len(ds.fingerprint()), 16)
