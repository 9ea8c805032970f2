import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from courtside.errors import (
    DegenerateSplitError,
    ParameterMismatchError,
    SchemaError,
    StructuralError,
    UnimputableColumnError,
    UnsupportedDegreeError,
)
from courtside.pipeline import bundled_path
from courtside.tabular import (
    ColumnSpec,
    SplitMix64,
    SplitSpec,
    Table,
    apply_scaling,
    describe,
    drop_or_impute,
    expand_polynomial,
    invert_scaling,
    load_csv,
    min_max_scale,
    polynomial_names,
    split_indices,
    train_test_split,
)


def write(tmp_path, text, name="t.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


# --- load_csv ------------------------------------------------------------------


def test_smallest_file(tmp_path):
    t = load_csv(write(tmp_path, "a,b\n1,2\n"))
    assert t.names == ["a", "b"]
    assert t.n_rows == 1
    assert [c.kind for c in t.columns] == ["numeric", "numeric"]
    assert t.rows[0] == (1.0, 2.0)


def test_unparseable_numeric_cell_becomes_missing(tmp_path):
    spec = [ColumnSpec("a", "numeric"), ColumnSpec("b", "numeric")]
    t = load_csv(write(tmp_path, "a,b\n1,abc\n3,4\n"), spec)
    assert t.rows[0] == (1.0, None)


def test_inferred_kinds_and_missing_markers(tmp_path):
    t = load_csv(write(tmp_path, 'x,role,y\n1,"PG",NA\n,C,2.5\n3,"S,F",1e3\n'))
    assert [c.kind for c in t.columns] == ["numeric", "categorical", "numeric"]
    assert t.column("x") == [1.0, None, 3.0]
    assert t.column("y") == [None, 2.5, 1000.0]
    assert t.column("role") == ["PG", "C", "S,F"]


def test_ragged_row_reports_index(tmp_path):
    with pytest.raises(StructuralError) as err:
        load_csv(write(tmp_path, "a,b\n1,2\n3\n"))
    assert err.value.row_index == 1


def test_duplicate_header(tmp_path):
    with pytest.raises(SchemaError):
        load_csv(write(tmp_path, "a,a\n1,2\n"))


def test_row_order_and_roundtrip(tmp_path):
    t = Table.from_columns({"a": [3.0, None, 0.1], "g": ["x", "y", None]})
    p = tmp_path / "r.csv"
    t.to_csv(p)
    back = load_csv(p)
    assert back.rows == t.rows


def test_bundled_four_factors():
    t = load_csv(bundled_path("four_factors.csv"))
    assert t.n_rows == 200
    assert t.names == ["EFG_O", "EFG_D", "TOR", "TORD", "ORB", "DRB", "FTR", "FTRD", "W"]
    assert t.numeric_columns() == t.names


def test_table_rejects_nonfinite():
    with pytest.raises(Exception):
        Table((ColumnSpec("a", "numeric"),), ((math.nan,),))


# --- imputation ------------------------------------------------------------------


def test_mean_imputation():
    t = Table.from_columns({"a": [1, None, 3]})
    assert drop_or_impute(t, "mean").column("a") == [1.0, 2.0, 3.0]


def test_drop_rows():
    t = Table.from_columns({"a": [1, None, 3], "b": [10, 20, 30]})
    assert drop_or_impute(t, "drop_rows").column("b") == [10.0, 30.0]


def test_median_imputation():
    t = Table.from_columns({"a": [5, None, None, 7]})
    assert drop_or_impute(t, "median").column("a") == [5.0, 6.0, 6.0, 7.0]


def test_unimputable_column_named():
    t = Table.from_columns({"a": [1.0, 2.0], "empty": [None, None]}, {"empty": "numeric"})
    with pytest.raises(UnimputableColumnError) as err:
        drop_or_impute(t, "mean")
    assert err.value.column == "empty"


# --- scaling ---------------------------------------------------------------------


def test_min_max_examples():
    t = Table.from_columns({"a": [2, 4, 6], "b": [-1, 0, 3]})
    s, p = min_max_scale(t, ["a", "b"])
    assert s.column("a") == [0.0, 0.5, 1.0]
    assert s.column("b") == [0.0, 0.25, 1.0]
    assert not p.warning


def test_constant_column_warning():
    t = Table.from_columns({"c": [3, 3, 3]})
    s, p = min_max_scale(t, ["c"])
    assert s.column("c") == [0.0, 0.0, 0.0]
    assert p.warning and p.constant_columns == ("c",)


def test_apply_stored_params():
    _, p = min_max_scale(Table.from_columns({"a": [2, 6]}), ["a"])
    out = apply_scaling(Table.from_columns({"a": [8, 2, 4]}), p)
    assert out.column("a") == [1.5, 0.0, 0.5]


def test_apply_scaling_mismatch():
    _, p = min_max_scale(Table.from_columns({"a": [2, 6]}), ["a"])
    with pytest.raises(ParameterMismatchError):
        apply_scaling(Table.from_columns({"b": [1.0]}), p, ["b"])


finite = st.floats(-1e6, 1e6, allow_nan=False)


@settings(max_examples=100, deadline=None)
@given(st.lists(finite, min_size=2, max_size=30).filter(lambda v: max(v) - min(v) > 1e-3))
def test_scaling_roundtrip(values):
    t = Table.from_columns({"a": values})
    s, p = min_max_scale(t, ["a"])
    assert all(0.0 <= v <= 1.0 for v in s.column("a"))
    back = invert_scaling(s, p).column("a")
    scale = max(1.0, max(abs(v) for v in values))
    assert max(abs(a - b) for a, b in zip(back, values)) <= 1e-12 * scale * 4


# --- splitting -------------------------------------------------------------------


def test_splitmix_reference_stream():
    # published first outputs of SplitMix64 for seed 0
    g = SplitMix64(0)
    assert [g.next() for _ in range(3)] == [
        0xE220A8397B1DCDAF,
        0x6E789E6AA1B965F4,
        0x06C45D188009454F,
    ]


def test_split_sizes_and_determinism():
    t = Table.from_columns({"id": list(range(10))})
    a_train, a_test = train_test_split(t, SplitSpec(0.2, 7))
    b_train, b_test = train_test_split(t, SplitSpec(0.2, 7))
    assert (a_train.n_rows, a_test.n_rows) == (8, 2)
    assert a_test.rows == b_test.rows and a_train.rows == b_train.rows
    ids = sorted(a_train.column("id") + a_test.column("id"))
    assert ids == [float(i) for i in range(10)]


def test_split_seeds_differ():
    # frozen regression values for the SplitMix64 Fisher-Yates shuffle
    _, t7 = split_indices(10, SplitSpec(0.2, 7))
    _, t8 = split_indices(10, SplitSpec(0.2, 8))
    assert t7 == [1, 8]
    assert t8 == [5, 7]


def test_split_seeds_differ_on_fixture():
    n = load_csv(bundled_path("four_factors.csv")).n_rows
    assert split_indices(n, SplitSpec(0.2, 7))[1] != split_indices(n, SplitSpec(0.2, 8))[1]


def test_degenerate_split():
    with pytest.raises(DegenerateSplitError):
        split_indices(3, SplitSpec(0.1, 0))
    with pytest.raises(DegenerateSplitError):
        split_indices(1, SplitSpec(0.5, 0))


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 300), st.floats(0.01, 0.99), st.integers(0, 2**64 - 1))
def test_split_partition(n, frac, seed):
    n_test = math.floor(n * frac + 0.5)
    if n_test in (0, n):
        with pytest.raises(DegenerateSplitError):
            split_indices(n, SplitSpec(frac, seed))
        return
    train, test = split_indices(n, SplitSpec(frac, seed))
    assert len(test) == n_test
    assert sorted(train + test) == list(range(n))
    assert (train, test) == split_indices(n, SplitSpec(frac, seed))


# --- polynomial expansion ---------------------------------------------------------


def test_expand_row():
    assert expand_polynomial(np.array([[2.0, 3.0]]), 2).tolist() == [[2, 3, 4, 9, 6]]


def test_expand_degree_one_identity():
    X = np.arange(12.0).reshape(4, 3)
    assert np.array_equal(expand_polynomial(X, 1), X)


def test_expand_salary_width():
    assert expand_polynomial(np.ones((2, 9)), 2).shape[1] == 54


@pytest.mark.parametrize("d", range(1, 21))
def test_expand_width_formula(d):
    assert expand_polynomial(np.ones((1, d)), 2).shape[1] == d * (d + 3) // 2


def test_expand_unsupported_degree():
    with pytest.raises(UnsupportedDegreeError):
        expand_polynomial(np.ones((2, 2)), 3)


def test_polynomial_names():
    assert polynomial_names(["a", "b", "c"], 2) == ["a", "b", "c", "a^2", "b^2", "c^2", "a*b", "a*c", "b*c"]


# --- describe ----------------------------------------------------------------------


def test_describe_moments_and_correlation():
    t = Table.from_columns({"x": [1, 2, 3], "y": [2, 4, 6], "c": [1, 1, 1]})
    d = describe(t)
    assert d.columns["x"].mean == 2.0
    assert d.columns["x"].std == pytest.approx(math.sqrt(2 / 3), abs=1e-15)
    R = d.correlation
    assert R[0, 1] == pytest.approx(1.0, abs=1e-15)
    assert R[2, 2] == 1.0 and R[0, 2] == 0.0


def test_describe_four_factors_signs():
    d = describe(load_csv(bundled_path("four_factors.csv")))
    names = d.correlation_names
    R = d.correlation
    w = names.index("W")
    assert R[names.index("EFG_O"), w] > 0
    assert R[names.index("EFG_D"), w] < 0


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 6), st.integers(3, 30))
def test_correlation_matrix_properties(seed, d, n):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, d))
    X[:, 0] = X[:, 1] * 3 - 1
    t = Table.from_columns({f"c{j}": X[:, j].tolist() for j in range(d)})
    R = describe(t).correlation
    assert np.array_equal(R, R.T)
    assert np.all(np.diag(R) == 1.0)
    assert np.all(np.abs(R) <= 1.0)
