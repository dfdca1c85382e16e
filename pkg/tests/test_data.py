import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from quantlearn.analysis import estimate_margin
from quantlearn.core import LabeledDataset
from quantlearn.data import (
    SYNTH01,
    SYNTH02,
    GenerationError,
    NormalizationSpec,
    ParseError,
    SyntheticSpec,
    build_cluster_lattice,
    format_dense_csv,
    format_sparse,
    generate_synthetic,
    kmeans,
    load_dataset,
    normalize,
    parse_dense_csv,
    parse_sparse,
    train_test_split,
)


def test_sparse_examples():
    ds = parse_sparse("+1 3:1 7:1\n")
    assert ds.y.tolist() == [1]
    assert np.flatnonzero(ds.X[0]).tolist() == [2, 6]
    assert ds.X[0, [2, 6]].tolist() == [1.0, 1.0]
    ds = parse_sparse("-1 1:0.5 2:-0.25", dimension=2)
    assert ds.y.tolist() == [-1]
    assert ds.X.tolist() == [[0.5, -0.25]]


def test_sparse_errors_carry_line():
    with pytest.raises(ParseError) as err:
        parse_sparse("+1 1:1\n-1 2:x\n")
    assert err.value.line == 2
    with pytest.raises(ParseError):
        parse_sparse("+1 3:1 2:1")
    with pytest.raises(ParseError):
        parse_sparse("+1 0:1")
    with pytest.raises(ParseError):
        parse_sparse("+1 1:1 5:2", dimension=3)
    with pytest.raises(ParseError):
        parse_sparse("1 1:1\n2 1:1\n3 1:1")


def test_label_mapping_recorded():
    ds = parse_sparse("1 1:1\n2 2:1\n")
    assert ds.y.tolist() == [-1, 1]
    assert ds.label_map == {1.0: -1, 2.0: 1}


def test_comments_and_blank_lines():
    ds = parse_sparse("# header\n\n+1 1:2 # trailing\n-1 2:3\n")
    assert len(ds) == 2 and ds.dimension == 2


labels = st.sampled_from([-1, 1])
rows = st.lists(st.floats(-1e6, 1e6, allow_nan=False).map(lambda v: 0.0 if abs(v) < 1e-300 else v),
                min_size=3, max_size=3)


@given(st.lists(st.tuples(labels, rows), min_size=1, max_size=20))
def test_sparse_round_trip(examples):
    X = np.array([r for _, r in examples])
    y = np.array([l for l, _ in examples])
    ds = LabeledDataset(X, y)
    back = parse_sparse(format_sparse(ds), dimension=3)
    assert np.array_equal(back.X, ds.X) and np.array_equal(back.y, ds.y)


@given(st.lists(st.tuples(labels, rows), min_size=1, max_size=20))
def test_csv_round_trip(examples):
    ds = LabeledDataset(np.array([r for _, r in examples]), np.array([l for l, _ in examples]))
    back = parse_dense_csv(format_dense_csv(ds))
    assert np.array_equal(back.X, ds.X) and np.array_equal(back.y, ds.y)


def test_csv_header_and_errors(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("a,b,label\n0.1,0.2,1\n-0.3,0.4,-1\n")
    ds = load_dataset(p)
    assert ds.dimension == 2 and ds.y.tolist() == [1, -1]
    with pytest.raises(ParseError):
        parse_dense_csv("1,2,1\n3,1\n")


def test_split_sizes_and_determinism():
    ds = generate_synthetic(SyntheticSpec(samples=200, seed=1))
    tr, te = train_test_split(ds, 160, seed=3)
    assert len(tr) == 160 and len(te) == 40
    tr2, _ = train_test_split(ds, 160, seed=3)
    assert np.array_equal(tr.X, tr2.X)
    with pytest.raises(ValueError):
        train_test_split(ds, 200)


def test_generator_planted_margin_example():
    ds = generate_synthetic(SyntheticSpec(d=2, samples=200, margin=0.2, seed=7, pin_margin=False))
    est = estimate_margin(ds)
    assert 0.2 <= est.gamma_hat <= 0.25


@pytest.mark.parametrize("seed", range(5))
def test_pinned_generator_hits_margin(seed):
    ds = generate_synthetic(SyntheticSpec(d=3, samples=150, margin=0.2, seed=seed))
    est = estimate_margin(ds)
    assert est.gamma_hat == pytest.approx(0.2, abs=0.02)
    assert ds.within_unit_ball()


def test_generator_rejects_bad_specs():
    with pytest.raises(ValueError):
        generate_synthetic(SyntheticSpec(margin=0.0))
    with pytest.raises((ValueError, GenerationError)):
        generate_synthetic(SyntheticSpec(margin=1.5))


def test_presets_shape():
    s1 = generate_synthetic(SyntheticSpec(margin=0.6, **SYNTH01))
    assert s1.dimension == 2 and len(s1) == 200
    assert np.max(np.abs(s1.X)) <= 6.9 + 1e-9
    s2 = generate_synthetic(SyntheticSpec(margin=0.5, **SYNTH02))
    assert np.max(np.abs(s2.X)) <= 2.7 + 1e-9


def test_normalize_box_and_round_trip():
    rng = np.random.default_rng(0)
    X = rng.uniform(0.08, 1868, size=(50, 3)) * rng.choice([-1, 1], size=(50, 3))
    ds = LabeledDataset(X, rng.choice([-1, 1], size=50))
    out, spec = normalize(ds, NormalizationSpec("scale_to_box", -1.0, 1.0))
    assert np.allclose(np.max(np.abs(out.X), axis=0), 1.0)
    assert np.allclose(spec.invert(out.X), X, rtol=0, atol=1e-12 * 1868)
    already, spec2 = normalize(out, "scale_to_box")
    assert np.allclose(spec2.factors, 1.0)
    unit, _ = normalize(ds, "unit_max_norm")
    assert unit.max_norm() == pytest.approx(1.0)


@given(st.integers(0, 10 ** 6), st.integers(1, 6))
def test_kmeans_objective_monotone(seed, k):
    X = np.random.default_rng(seed).normal(size=(40, 2))
    res = kmeans(X, k, seed=seed)
    h = res.objective_history
    assert all(b <= a + 1e-9 for a, b in zip(h, h[1:]))
    assert res.centers.shape == (k, 2)


def test_kmeans_k1_is_mean_and_seeded():
    X = np.random.default_rng(1).normal(size=(30, 2))
    assert np.allclose(kmeans(X, 1).centers[0], X.mean(axis=0))
    assert np.array_equal(kmeans(X, 4, seed=2).centers, kmeans(X, 4, seed=2).centers)


def test_cluster_lattice_sizes():
    ds = generate_synthetic(SyntheticSpec(margin=0.5, **SYNTH02))
    for k in (1, 3, 9):
        assert build_cluster_lattice(ds, k).size == 2 * k
    one = build_cluster_lattice(ds, 1)
    assert np.allclose(one.restore(0), ds.X[ds.y == 1].mean(axis=0))
    with pytest.raises(ValueError):
        build_cluster_lattice(ds.subset(np.flatnonzero(ds.y == 1)), 3)
