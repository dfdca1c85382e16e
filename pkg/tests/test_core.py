import numpy as np
import pytest

from quantlearn.core import (
    DomainBox,
    LabeledDataset,
    QuantizationError,
    as_vector,
    lexicographic_id,
    quantize,
    quantize_dataset,
    restore,
    round_trip_error,
    split_id,
)
from quantlearn.lattices import LookupLattice, RegularLattice


@pytest.fixture
def four():
    return RegularLattice(1, 4, -1.0, 1.0)


def test_quantize_examples(four):
    assert restore(four, quantize(four, [0.3]))[0] == pytest.approx(1 / 3)
    assert restore(four, quantize(four, [5.0]))[0] == 1.0
    assert restore(four, quantize(four, [-5.0]))[0] == -1.0


def test_id_order(four):
    assert four.atom(0).vector[0] == -1.0
    assert [four.restore(i)[0] for i in range(4)] == pytest.approx([-1, -1 / 3, 1 / 3, 1])


def test_lookup_id_is_table_row():
    table = LookupLattice([[0.0, 0.0], [1.0, 2.0]])
    assert np.array_equal(table.restore(1), [1.0, 2.0])
    assert table.quantize([0.9, 1.7]).id == 1


def test_round_trip_error_examples(four):
    assert round_trip_error(four, [0.0]) == pytest.approx(1 / 3)
    grid = RegularLattice(2, 4, -1.0, 1.0)
    assert round_trip_error(grid, [0.0, 0.0]) == pytest.approx(np.sqrt(2) / 3)
    for i in range(4):
        assert round_trip_error(four, four.restore(i)) == 0.0


def test_ties_go_to_smaller_id():
    grid = RegularLattice(1, 2, -1.0, 1.0)
    assert grid.quantize([0.0]).id == 0


def test_rejects_bad_vectors(four):
    with pytest.raises(QuantizationError):
        four.quantize([np.nan])
    with pytest.raises(QuantizationError):
        four.quantize([0.1, 0.2])
    with pytest.raises(QuantizationError):
        as_vector([])
    with pytest.raises(QuantizationError):
        four.restore(4)


def test_dataset_validation():
    with pytest.raises(ValueError):
        LabeledDataset(np.zeros((0, 2)), np.zeros(0))
    with pytest.raises(ValueError):
        LabeledDataset(np.array([[np.inf]]), np.array([1]))
    with pytest.raises(ValueError):
        LabeledDataset(np.ones((2, 1)), np.array([1, 0]))
    ds = LabeledDataset(np.array([[0.6, 0.8], [0.0, 0.5]]), np.array([1, -1]))
    assert ds.within_unit_ball() and ds.has_both_labels()
    with pytest.raises(ValueError):
        ds.X[0, 0] = 3.0


def test_quantize_dataset_lands_on_atoms(four):
    ds = LabeledDataset(np.array([[0.2], [-0.9], [3.0]]), np.array([1, -1, 1]))
    q = quantize_dataset(four, ds)
    assert all(four.is_representable(x) for x in q.X)
    assert q.X[:, 0] == pytest.approx([1 / 3, -1, 1])


def test_box():
    box = DomainBox.cube(3, -2.0, 2.0)
    assert box.inradius() == 2.0
    assert np.array_equal(box.clamp(np.array([5.0, -5.0, 1.0])), [2.0, -2.0, 1.0])
    with pytest.raises(ValueError):
        DomainBox((1.0,), (0.0,))


def test_mixed_radix_round_trip():
    radices = [3, 256, 7, 2]
    for idx in ([0, 0, 0, 0], [2, 255, 6, 1], [1, 17, 3, 0]):
        assert split_id(lexicographic_id(idx, radices), radices) == idx
    big = RegularLattice(112, 256, -1.0, 1.0)
    assert big.size == 256 ** 112
    top = big.atom(big.size - 1)
    assert np.all(top.vector == 1.0)
