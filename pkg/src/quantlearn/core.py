"""Shared domain types: datasets, domain boxes, atoms and the scheme contract."""

from __future__ import annotations

import abc
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class QuantizationError(ValueError):
    """Raised when an input is rejected by a quantization scheme."""


def as_vector(x, dimension: int | None = None) -> np.ndarray:
    v = np.asarray(x, dtype=np.float64)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1 or v.shape[0] == 0:
        raise QuantizationError(f"expected a non-empty 1-d vector, got shape {v.shape}")
    if dimension is not None and v.shape[0] != dimension:
        raise QuantizationError(
            f"dimension mismatch: expected {dimension}, got {v.shape[0]}")
    if not np.all(np.isfinite(v)):
        raise QuantizationError("vector has non-finite components")
    return v


@dataclass(frozen=True)
class DomainBox:
    """Axis-aligned box ``[lo_k, hi_k]`` per dimension."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != len(hi) or not lo:
            raise ValueError("lo and hi must be non-empty and equal length")
        if any(not (a < b) for a, b in zip(lo, hi)):
            raise ValueError("every interval must satisfy lo < hi")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def cube(cls, d: int, lo: float, hi: float) -> "DomainBox":
        return cls((lo,) * d, (hi,) * d)

    @property
    def dimension(self) -> int:
        return len(self.lo)

    @property
    def lo_array(self) -> np.ndarray:
        return np.array(self.lo)

    @property
    def hi_array(self) -> np.ndarray:
        return np.array(self.hi)

    def clamp(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, self.lo_array, self.hi_array)

    def contains(self, x, tol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=np.float64)
        return bool(np.all(x >= self.lo_array - tol) and np.all(x <= self.hi_array + tol))

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.lo_array, self.hi_array, size=(count, self.dimension))

    def inradius(self) -> float:
        """Radius of the largest origin-centred ball inside the box (0 if the origin is outside)."""
        lo, hi = self.lo_array, self.hi_array
        if np.any(lo > 0) or np.any(hi < 0):
            return 0.0
        return float(min(np.min(-lo), np.min(hi)))


@dataclass(frozen=True)
class Atom:
    """A representable point: its index in the atom set and its restoration."""

    id: int
    restoration: tuple[float, ...]

    @property
    def vector(self) -> np.ndarray:
        return np.array(self.restoration, dtype=np.float64)


@dataclass
class LabeledDataset:
    """Feature matrix ``X`` (n x d) with labels ``y`` in {-1, +1}."""

    X: np.ndarray
    y: np.ndarray
    name: str = "dataset"
    label_map: dict = field(default_factory=dict)

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        y = np.asarray(self.y)
        if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
            raise ValueError(f"dataset must be a non-empty 2-d array, got shape {X.shape}")
        if y.shape != (X.shape[0],):
            raise ValueError("labels must be a vector with one entry per example")
        if not np.all(np.isin(y, (-1, 1))):
            raise ValueError("labels must be -1 or +1")
        if not np.all(np.isfinite(X)):
            raise ValueError("features must be finite")
        X.setflags(write=False)
        y = y.astype(np.int64)
        y.setflags(write=False)
        self.X = X
        self.y = y

    def __len__(self) -> int:
        return self.X.shape[0]

    @property
    def dimension(self) -> int:
        return self.X.shape[1]

    def max_norm(self) -> float:
        return float(np.max(np.linalg.norm(self.X, axis=1)))

    def within_unit_ball(self, tol: float = 1e-12) -> bool:
        return self.max_norm() <= 1.0 + tol

    def has_both_labels(self) -> bool:
        return bool(np.any(self.y == 1) and np.any(self.y == -1))

    def subset(self, indices, name: str | None = None) -> "LabeledDataset":
        idx = np.asarray(indices, dtype=np.int64)
        return LabeledDataset(self.X[idx], self.y[idx], name or self.name, dict(self.label_map))

    def with_features(self, X: np.ndarray, name: str | None = None) -> "LabeledDataset":
        return LabeledDataset(X, self.y, name or self.name, dict(self.label_map))


class QuantizationScheme(abc.ABC):
    """The triple (atoms, quantize, restore) over a box domain.

    Subclasses supply ``_snap_clamped``, the nearest-atom restoration of
    already-clamped points, together with the id <-> point bijection.
    Inputs outside the domain saturate to its boundary before quantizing.
    """

    dimension: int
    domain: DomainBox

    @property
    @abc.abstractmethod
    def size(self) -> int:
        """Number of atoms m."""

    @abc.abstractmethod
    def _snap_clamped(self, X: np.ndarray) -> np.ndarray:
        """Nearest-atom restorations for rows of ``X`` already inside the domain."""

    @abc.abstractmethod
    def _id_of(self, point: np.ndarray) -> int:
        """Atom id of an exactly representable point."""

    @abc.abstractmethod
    def _point_of(self, atom_id: int) -> np.ndarray:
        """Restoration of an atom id already range-checked."""

    @abc.abstractmethod
    def describe(self) -> dict:
        """Flat descriptor for reports and configs."""

    def snap_many(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return self._snap_clamped(self.domain.clamp(X))

    def snap(self, x) -> np.ndarray:
        """``r(q(x))`` without constructing an :class:`Atom`."""
        return self.snap_many(np.asarray(x, dtype=np.float64)[None, :])[0]

    def quantize(self, x) -> Atom:
        v = as_vector(x, self.dimension)
        point = self.snap(v)
        return Atom(self._id_of(point), tuple(point.tolist()))

    def restore(self, atom) -> np.ndarray:
        atom_id = atom.id if isinstance(atom, Atom) else int(atom)
        if not 0 <= atom_id < self.size:
            raise QuantizationError(f"atom id {atom_id} out of range [0, {self.size})")
        return self._point_of(atom_id)

    def atom(self, atom_id: int) -> Atom:
        return Atom(int(atom_id), tuple(self.restore(atom_id).tolist()))

    def atom_of_point(self, point) -> Atom:
        """Atom for a point that is already representable."""
        p = as_vector(point, self.dimension)
        return Atom(self._id_of(p), tuple(p.tolist()))

    def round_trip_error(self, x) -> float:
        v = as_vector(x, self.dimension)
        return float(np.linalg.norm(v - self.snap(v)))

    def is_representable(self, x) -> bool:
        v = as_vector(x, self.dimension)
        return bool(np.array_equal(self.snap(v), v))

    @property
    def zero_point(self) -> np.ndarray:
        """``r(q(0))``, the atom closest to the origin."""
        return self.snap(np.zeros(self.dimension))

    def has_zero_atom(self) -> bool:
        return not np.any(self.zero_point)


def quantize(scheme: QuantizationScheme, x) -> Atom:
    return scheme.quantize(x)


def restore(scheme: QuantizationScheme, atom) -> np.ndarray:
    return scheme.restore(atom)


def round_trip_error(scheme: QuantizationScheme, x) -> float:
    return scheme.round_trip_error(x)


def quantize_dataset(scheme: QuantizationScheme, dataset: LabeledDataset) -> LabeledDataset:
    """Replace every example by its restored quantization, so that X is a subset of A."""
    if dataset.dimension != scheme.dimension:
        raise QuantizationError(
            f"dataset dimension {dataset.dimension} != scheme dimension {scheme.dimension}")
    return dataset.with_features(scheme.snap_many(dataset.X))


def lexicographic_id(indices: Sequence[int], radices: Sequence[int]) -> int:
    """Mixed-radix id with the first dimension most significant."""
    atom_id = 0
    for i, n in zip(indices, radices):
        atom_id = atom_id * int(n) + int(i)
    return atom_id


def split_id(atom_id: int, radices: Sequence[int]) -> list[int]:
    out = []
    for n in reversed(radices):
        atom_id, i = divmod(atom_id, int(n))
        out.append(i)
    return out[::-1]
