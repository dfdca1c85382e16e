"""Concrete quantization schemes: fixed-point grid, floating-point grid, lookup table."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DomainBox, QuantizationError, QuantizationScheme, lexicographic_id, split_id


def nearest_on_axis(values: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Index of the nearest entry of sorted ``values`` for every element of ``x``.

    Equidistant candidates resolve to the lower index.
    """
    hi = np.searchsorted(values, x, side="left")
    if len(values) == 1:
        return np.zeros_like(hi)
    hi = np.clip(hi, 1, len(values) - 1)
    lo = hi - 1
    take_lo = (x - values[lo]) <= (values[hi] - x)
    return np.where(take_lo, lo, hi)


class ProductLattice(QuantizationScheme):
    """Same sorted scalar value set on every axis; ids are lexicographic in the axis indices."""

    values: np.ndarray

    def _init_axis(self, dimension: int, values: np.ndarray):
        if dimension < 1:
            raise ValueError("dimension must be >= 1")
        values = np.asarray(values, dtype=np.float64)
        values.setflags(write=False)
        self.values = values
        self.dimension = int(dimension)
        self.domain = DomainBox.cube(self.dimension, float(values[0]), float(values[-1]))

    @property
    def points_per_dim(self) -> int:
        return len(self.values)

    @property
    def size(self) -> int:
        return self.points_per_dim ** self.dimension

    def axis_indices(self, X: np.ndarray) -> np.ndarray:
        """Per-axis nearest indices for points (clamping included)."""
        X = self.domain.clamp(np.atleast_2d(np.asarray(X, dtype=np.float64)))
        return nearest_on_axis(self.values, X)

    def _snap_clamped(self, X):
        return self.values[nearest_on_axis(self.values, X)]

    def _id_of(self, point):
        idx = nearest_on_axis(self.values, point)
        if not np.array_equal(self.values[idx], point):
            raise QuantizationError("point is not representable")
        return lexicographic_id(idx.tolist(), [self.points_per_dim] * self.dimension)

    def _point_of(self, atom_id):
        idx = split_id(atom_id, [self.points_per_dim] * self.dimension)
        return self.values[np.array(idx)].copy()

    def axis_max_half_gap(self) -> float:
        return float(np.max(np.diff(self.values))) / 2.0 if len(self.values) > 1 else 0.0

    def corner_points(self, limit: int | None = None, rng: np.random.Generator | None = None) -> np.ndarray:
        """The 2^d extreme atoms, or a seeded sample of ``limit`` of them when 2^d is larger."""
        lo, hi = self.values[0], self.values[-1]
        d = self.dimension
        if limit is None or d < 63 and 2 ** d <= limit:
            bits = ((np.arange(2 ** d)[:, None] >> np.arange(d)[::-1]) & 1).astype(bool)
        else:
            rng = rng or np.random.default_rng(0)
            bits = rng.integers(0, 2, size=(limit, d)).astype(bool)
        return np.where(bits, hi, lo)


class RegularLattice(ProductLattice):
    """Evenly spaced points on ``[lo, hi]`` per axis, endpoints included (fixed point)."""

    def __init__(self, dimension: int, points_per_dim: int, lo: float, hi: float):
        if points_per_dim < 2:
            raise ValueError("points_per_dim must be >= 2")
        if not lo < hi:
            raise ValueError("range must satisfy lo < hi")
        self.lo = float(lo)
        self.hi = float(hi)
        values = np.linspace(self.lo, self.hi, int(points_per_dim))
        if self.lo == -self.hi:
            # exact mirror symmetry, and an exact 0 when n is odd
            values = (values - values[::-1]) / 2.0
        self._init_axis(dimension, values)

    @property
    def step(self) -> float:
        return (self.hi - self.lo) / (self.points_per_dim - 1)

    def describe(self):
        return {"kind": "regular", "d": self.dimension, "points": self.points_per_dim,
                "lo": self.lo, "hi": self.hi}

    def __repr__(self):
        return (f"RegularLattice(d={self.dimension}, n={self.points_per_dim}, "
                f"range=[{self.lo:g}, {self.hi:g}])")


def float_values(exponent_bits: int, mantissa_bits: int) -> np.ndarray:
    """Sorted representable scalars of a sign/exponent/mantissa format.

    No denormals, no infinities; the all-ones exponent is an ordinary binade
    and a single zero is added.
    """
    if exponent_bits < 1 or mantissa_bits < 0:
        raise ValueError("need exponent_bits >= 1 and mantissa_bits >= 0")
    bias = 2 ** (exponent_bits - 1) - 1
    exps = np.arange(2 ** exponent_bits) - bias
    mant = 1.0 + np.arange(2 ** mantissa_bits) / 2.0 ** mantissa_bits
    pos = np.ldexp(mant[None, :], exps[:, None]).ravel()
    return np.concatenate([-pos[::-1], [0.0], pos])


def decode_float_bits(pattern: int, exponent_bits: int, mantissa_bits: int) -> float:
    """Value of a packed ``sign|exponent|mantissa`` pattern under the same conventions."""
    t, e = mantissa_bits, exponent_bits
    sign = (pattern >> (e + t)) & 1
    exp = (pattern >> t) & ((1 << e) - 1)
    frac = pattern & ((1 << t) - 1)
    bias = (1 << (e - 1)) - 1
    value = math.ldexp(1.0 + frac / (1 << t), exp - bias)
    return -value if sign else value


class LogarithmicLattice(ProductLattice):
    """Floating-point style values per axis, saturating at the largest magnitude."""

    def __init__(self, dimension: int, exponent_bits: int, mantissa_bits: int):
        self.exponent_bits = int(exponent_bits)
        self.mantissa_bits = int(mantissa_bits)
        self._init_axis(dimension, float_values(self.exponent_bits, self.mantissa_bits))

    @property
    def bias(self) -> int:
        return 2 ** (self.exponent_bits - 1) - 1

    @property
    def vmax(self) -> float:
        return float(self.values[-1])

    @property
    def bit_budget(self) -> int:
        return 1 + self.exponent_bits + self.mantissa_bits

    def describe(self):
        return {"kind": "logarithmic", "d": self.dimension,
                "exponent_bits": self.exponent_bits, "mantissa_bits": self.mantissa_bits}

    def __repr__(self):
        return (f"LogarithmicLattice(d={self.dimension}, e={self.exponent_bits}, "
                f"t={self.mantissa_bits})")


class LookupLattice(QuantizationScheme):
    """Arbitrary table of atoms with exact nearest-neighbour quantization.

    Atom ids follow table row order. The domain is the table's bounding box
    widened by ``halo`` on every side.
    """

    def __init__(self, table, halo: float = 1.0):
        table = np.array(table, dtype=np.float64)
        if table.ndim == 1:
            table = table[:, None]
        if table.ndim != 2 or table.shape[0] == 0:
            raise ValueError("table must be a non-empty 2-d array")
        if not np.all(np.isfinite(table)):
            raise ValueError("table entries must be finite")
        if len(np.unique(table, axis=0)) != len(table):
            raise ValueError("table entries must be pairwise distinct")
        if halo < 0:
            raise ValueError("halo must be non-negative")
        table.setflags(write=False)
        self.table = table
        self.halo = float(halo)
        self.dimension = table.shape[1]
        lo = table.min(axis=0) - halo
        hi = table.max(axis=0) + halo
        # a single atom (or a flat axis) still needs a non-degenerate box
        flat = hi <= lo
        lo = np.where(flat, lo - 1.0, lo)
        hi = np.where(flat, hi + 1.0, hi)
        self.domain = DomainBox(tuple(lo), tuple(hi))
        self._index = {tuple(row): i for i, row in enumerate(table.tolist())}

    @property
    def size(self) -> int:
        return self.table.shape[0]

    @property
    def bit_width(self) -> int:
        return max(1, math.ceil(math.log2(self.size))) if self.size > 1 else 0

    def nearest_ids(self, X: np.ndarray, chunk: int = 4096) -> np.ndarray:
        X = self.domain.clamp(np.atleast_2d(np.asarray(X, dtype=np.float64)))
        out = np.empty(len(X), dtype=np.int64)
        for start in range(0, len(X), chunk):
            block = X[start:start + chunk]
            d2 = ((block[:, None, :] - self.table[None, :, :]) ** 2).sum(axis=2)
            out[start:start + chunk] = np.argmin(d2, axis=1)  # first minimum = smallest id
        return out

    def _snap_clamped(self, X):
        return self.table[self.nearest_ids(X)]

    def _id_of(self, point):
        try:
            return self._index[tuple(point.tolist())]
        except KeyError:
            raise QuantizationError("point is not a table entry") from None

    def _point_of(self, atom_id):
        return self.table[atom_id].copy()

    def describe(self):
        return {"kind": "lookup", "d": self.dimension, "atoms": self.size, "halo": self.halo}

    def __repr__(self):
        return f"LookupLattice(d={self.dimension}, m={self.size})"


def build_regular(d: int, n: int, lo: float, hi: float) -> RegularLattice:
    return RegularLattice(d, n, lo, hi)


def build_logarithmic(d: int, exponent_bits: int, mantissa_bits: int) -> LogarithmicLattice:
    return LogarithmicLattice(d, exponent_bits, mantissa_bits)


def build_lookup(table, halo: float = 1.0) -> LookupLattice:
    return LookupLattice(table, halo)


@dataclass(frozen=True)
class DeltaInfo:
    value: float
    exact: bool
    samples: int = 0


def delta_info(scheme: QuantizationScheme, samples: int = 10 ** 6, seed: int = 0) -> DeltaInfo:
    """Error parameter of a scheme: exact for grids, Monte Carlo for lookup tables.

    On a product grid the worst point sits midway across the widest gap on
    every axis at once, so the per-axis half-gap composes as ``g * sqrt(d)``.
    """
    if isinstance(scheme, ProductLattice):
        return DeltaInfo(scheme.axis_max_half_gap() * math.sqrt(scheme.dimension), True)
    rng = np.random.default_rng(seed)
    from scipy.spatial import cKDTree

    tree = cKDTree(scheme.table) if isinstance(scheme, LookupLattice) else None
    worst = 0.0
    done = 0
    chunk = 200_000
    while done < samples:
        k = min(chunk, samples - done)
        P = scheme.domain.sample(k, rng)
        if tree is not None:
            dist, _ = tree.query(P)
        else:
            dist = np.linalg.norm(P - scheme.snap_many(P), axis=1)
        worst = max(worst, float(dist.max()))
        done += k
    # box corners are frequent maximisers and cost nothing to include
    if scheme.dimension <= 16:
        corners = np.array(np.meshgrid(*zip(scheme.domain.lo, scheme.domain.hi))).reshape(
            scheme.dimension, -1).T
        worst = max(worst, float(np.max(np.linalg.norm(corners - scheme.snap_many(corners), axis=1))))
    return DeltaInfo(worst, False, samples)


def compute_delta(scheme: QuantizationScheme, samples: int = 10 ** 6, seed: int = 0) -> float:
    return delta_info(scheme, samples, seed).value
