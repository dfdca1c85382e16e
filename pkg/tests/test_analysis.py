import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from quantlearn.analysis import (
    InapplicableTheoremError,
    check_fw_margin,
    check_lattice_equivalence,
    check_mistake_bound,
    count_separator_incidence,
    detect_sinks,
    direction_search_margin,
    estimate_margin,
    incidence_scaling,
    is_sink,
    report_text,
    reports_csv,
)
from quantlearn.core import LabeledDataset, quantize_dataset
from quantlearn.data import SyntheticSpec, generate_synthetic
from quantlearn.lattices import RegularLattice
from quantlearn.learners import PerceptronConfig
from quantlearn.validation import integer_instance, planted_instance


def test_incidence_quadrants():
    grid = RegularLattice(2, 2, -0.5, 0.5)
    assert count_separator_incidence(grid, (0.0, 1.0)).count == 4


@given(st.integers(2, 30), st.floats(-5, 5).filter(lambda v: abs(v) > 1e-6))
def test_incidence_1d(n, c):
    assert count_separator_incidence(RegularLattice(1, n, -1.0, 1.0), [c]).count in (1, 2)


@given(st.integers(0, 10 ** 6), st.integers(2, 7))
def test_incidence_matches_corner_enumeration(seed, n):
    """Vectorised count against brute force over every cell's corners."""
    rng = np.random.default_rng(seed)
    w = rng.normal(size=3)
    grid = RegularLattice(3, n, -1.0, 1.0)
    v = grid.values
    e = np.concatenate([[v[0]], (v[:-1] + v[1:]) / 2, [v[-1]]])
    brute = 0
    for idx in itertools.product(range(n), repeat=3):
        corners = np.array(list(itertools.product(*[(e[i], e[i + 1]) for i in idx])))
        s = corners @ w
        brute += s.min() <= 0 <= s.max()
    assert count_separator_incidence(grid, w).count == brute


def test_incidence_rejects_zero_normal():
    with pytest.raises(ValueError):
        count_separator_incidence(RegularLattice(2, 4, -1.0, 1.0), (0.0, 0.0))


def test_incidence_slope_d2():
    rep = incidence_scaling(2, trials=10, seed=1)
    assert 0.4 <= rep.slope <= 0.6


def test_margin_examples(two_point, xor):
    assert estimate_margin(two_point).gamma_hat == pytest.approx(1.0, abs=1e-6)
    assert not estimate_margin(xor).separable


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_margin_matches_direction_search(seed):
    ds = generate_synthetic(SyntheticSpec(d=2, samples=60, margin=0.15, seed=seed))
    fw = estimate_margin(ds)
    oracle = direction_search_margin(ds, seed=seed)
    assert fw.gamma_hat == pytest.approx(oracle.gamma_hat, abs=1e-3)
    assert fw.gamma_hat <= fw.upper + 1e-12


def test_mistake_bound_fine_and_tight():
    lattice, ds = planted_instance(3, delta_fraction=0.05)
    rep = check_mistake_bound(lattice, ds, runs=3)
    assert rep.ok and rep.max_mistakes < rep.bound / 4
    lattice, ds = planted_instance(3, delta_fraction=0.45)
    rep = check_mistake_bound(lattice, ds, runs=3)
    assert rep.ok and rep.all_separated


def test_mistake_bound_inapplicable():
    lattice, ds = planted_instance(0)
    with pytest.raises(InapplicableTheoremError):
        check_mistake_bound(lattice, ds, delta=1.0)
    big = LabeledDataset(np.array([[2.0, 0.0], [-2.0, 0.0]]), np.array([1, -1]))
    with pytest.raises(InapplicableTheoremError):
        check_mistake_bound(RegularLattice(2, 81, -4.0, 4.0), big)


def test_fw_margin_two_point(two_point):
    lat = RegularLattice(2, 2001, -1.0, 1.0)
    rep = check_fw_margin(lat, two_point, 0.1)
    assert rep.ok and rep.margin > rep.theorem_bound + 0.05
    assert rep.within_eps is True


def test_fw_margin_vacuous_flag(two_point):
    lat = RegularLattice(2, 5, -1.0, 1.0)
    rep = check_fw_margin(lat, two_point, 1.5)
    assert rep.vacuous
    assert rep.ok  # epsilon >= gamma: trivially satisfied


def test_equivalence_and_mutation():
    lattice, ds, cfg = integer_instance(4)
    assert check_lattice_equivalence(lattice, ds, cfg).ok
    broken, ds, cfg = integer_instance(4, corrupt=True)
    rep = check_lattice_equivalence(broken, ds, cfg)
    assert not rep.ok and rep.first_divergence is not None


def test_corner_sink_on_huge_range():
    ds = LabeledDataset(np.array([[0.1, 0.05], [-0.1, -0.05]]), np.array([1, -1]))
    lat = RegularLattice(2, 8, -8.0, 8.0)
    assert is_sink(lat, [8.0, 8.0], ds)
    rep = detect_sinks(lat, ds)
    assert lat.atom_of_point([8.0, 8.0]).id in rep.sinks


def test_no_sinks_on_fine_lattice():
    ds = quantize_dataset(RegularLattice(2, 41, -1.0, 1.0),
                          generate_synthetic(SyntheticSpec(d=2, samples=20, margin=0.3, seed=1)))
    rep = detect_sinks(RegularLattice(2, 41, -1.0, 1.0), ds)
    assert rep.sinks == []


def test_zero_data_every_atom_sink():
    ds = LabeledDataset(np.zeros((3, 2)), np.array([1, -1, 1]))
    lat = RegularLattice(2, 5, -1.0, 1.0)
    assert len(detect_sinks(lat, ds, runs=2).sinks) == lat.size


def test_sink_runs_absorbed():
    ds = generate_synthetic(SyntheticSpec(d=2, samples=40, margin=0.2, seed=0))
    lat = RegularLattice(2, 4, -8.0, 8.0)
    rep = detect_sinks(lat, ds, runs=3, config=PerceptronConfig(epochs=3))
    assert rep.runs == 3 and 0.0 <= rep.absorbed_fraction <= 1.0


def test_report_serialization(two_point):
    est = estimate_margin(two_point)
    assert "gamma_hat" in report_text(est)
    text = reports_csv([est, est])
    assert text.count("\n") == 3
