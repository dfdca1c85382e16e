"""Dataset I/O, synthetic generators, normalization and clustered lookup tables."""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, TextIO

import numpy as np

from .core import LabeledDataset
from .lattices import LookupLattice

logger = logging.getLogger(__name__)


class ParseError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class GenerationError(ValueError):
    pass


def _map_labels(raw: list[float]) -> tuple[np.ndarray, dict]:
    distinct = sorted(set(raw))
    if set(distinct) <= {-1.0, 1.0}:
        return np.array(raw, dtype=np.int64), {}
    if len(distinct) > 2:
        raise ParseError(f"expected binary labels, found {len(distinct)} distinct values")
    if len(distinct) == 1:
        (only,) = distinct
        if only in (0.0,):
            mapping = {0.0: -1}
        else:
            raise ParseError(f"cannot map single label {only:g} onto {{-1, +1}}")
    else:
        # 0/1, 1/2 and similar encodings: smaller value is the negative class
        mapping = {distinct[0]: -1, distinct[1]: 1}
    return np.array([mapping[v] for v in raw], dtype=np.int64), mapping


def parse_sparse(stream: Iterable[str] | str, dimension: Optional[int] = None,
                 name: str = "dataset") -> LabeledDataset:
    """Read ``<label> <index>:<value> ...`` lines (1-based indices) into a dense dataset.

    Labels outside {-1, +1} are mapped when exactly two values occur; the
    mapping is kept on ``dataset.label_map``.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    labels: list[float] = []
    rows: list[tuple[list[int], list[float]]] = []
    max_index = 0
    for lineno, line in enumerate(stream, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        try:
            labels.append(float(tokens[0]))
        except ValueError:
            raise ParseError(f"bad label {tokens[0]!r}", lineno) from None
        idx, vals = [], []
        prev = 0
        for tok in tokens[1:]:
            key, sep, val = tok.partition(":")
            if not sep:
                raise ParseError(f"expected index:value, got {tok!r}", lineno)
            try:
                i = int(key)
                v = float(val)
            except ValueError:
                raise ParseError(f"unparseable feature {tok!r}", lineno) from None
            if i <= prev:
                raise ParseError(f"indices must be strictly increasing and >= 1 (got {i})", lineno)
            if not math.isfinite(v):
                raise ParseError(f"non-finite value in {tok!r}", lineno)
            prev = i
            idx.append(i - 1)
            vals.append(v)
        max_index = max(max_index, prev)
        rows.append((idx, vals))
    if not rows:
        raise ParseError("no examples found")
    d = dimension if dimension is not None else max_index
    if d < max_index:
        raise ParseError(f"declared dimension {d} smaller than max index {max_index}")
    if d < 1:
        raise ParseError("dataset has no features")
    X = np.zeros((len(rows), d))
    for r, (idx, vals) in enumerate(rows):
        X[r, idx] = vals
    y, mapping = _map_labels(labels)
    return LabeledDataset(X, y, name, mapping)


def format_sparse(dataset: LabeledDataset) -> str:
    out = io.StringIO()
    for x, label in zip(dataset.X, dataset.y):
        feats = " ".join(f"{i + 1}:{float(x[i])!r}" for i in np.flatnonzero(x))
        out.write(f"{int(label):+d}" + (f" {feats}" if feats else "") + "\n")
    return out.getvalue()


def load_sparse(path, dimension: Optional[int] = None) -> LabeledDataset:
    path = Path(path)
    with path.open() as fh:
        return parse_sparse(fh, dimension, path.stem)


def parse_dense_csv(stream: TextIO | str, name: str = "dataset") -> LabeledDataset:
    """Dense CSV, label in the last column, optional header row."""
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    rows = [r for r in csv.reader(stream) if r and any(c.strip() for c in r)]
    if rows:
        try:
            float(rows[0][-1])
        except ValueError:
            rows = rows[1:]
    if not rows:
        raise ParseError("no examples found")
    width = len(rows[0])
    data = []
    for lineno, r in enumerate(rows, start=1):
        if len(r) != width:
            raise ParseError(f"expected {width} columns, got {len(r)}", lineno)
        try:
            data.append([float(c) for c in r])
        except ValueError:
            raise ParseError("unparseable number", lineno) from None
    arr = np.array(data)
    if width < 2:
        raise ParseError("need at least one feature column and a label column")
    y, mapping = _map_labels(arr[:, -1].tolist())
    return LabeledDataset(arr[:, :-1], y, name, mapping)


def format_dense_csv(dataset: LabeledDataset) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    for x, label in zip(dataset.X, dataset.y):
        writer.writerow([repr(float(v)) for v in x] + [int(label)])
    return out.getvalue()


def load_dataset(path) -> LabeledDataset:
    path = Path(path)
    if path.suffix.lower() == ".csv":
        with path.open(newline="") as fh:
            return parse_dense_csv(fh, path.stem)
    return load_sparse(path)


def load_table_csv(path) -> np.ndarray:
    """Lookup-table atoms, one per row."""
    with Path(path).open(newline="") as fh:
        rows = [[float(c) for c in r] for r in csv.reader(fh) if r]
    if not rows:
        raise ParseError("empty lookup table")
    return np.array(rows)


def train_test_split(dataset: LabeledDataset, n_train: int, seed: int = 0,
                     n_test: Optional[int] = None) -> tuple[LabeledDataset, LabeledDataset]:
    n = len(dataset)
    if not 0 < n_train < n:
        raise ValueError(f"n_train must be in (0, {n})")
    perm = np.random.default_rng(seed).permutation(n)
    test_idx = perm[n_train:] if n_test is None else perm[n_train:n_train + n_test]
    return (dataset.subset(perm[:n_train], f"{dataset.name}-train"),
            dataset.subset(test_idx, f"{dataset.name}-test"))


@dataclass(frozen=True)
class SyntheticSpec:
    """Linearly separable data around a planted unit normal through the origin.

    With ``max_mag`` unset, points are uniform in the ball of ``radius``;
    otherwise every feature magnitude is drawn from ``[min_mag, max_mag]``.
    ``pin_margin`` adds one example per class exactly on the margin so that
    the planted separator is the maximum-margin one.
    """

    d: int = 2
    samples: int = 200
    margin: float = 0.1
    seed: int = 0
    normal: Optional[tuple[float, ...]] = None
    radius: float = 1.0
    min_mag: float = 0.0
    max_mag: Optional[float] = None
    positive_fraction: float = 0.5
    pin_margin: bool = True
    name: str = "synthetic"


def planted_normal(spec: SyntheticSpec) -> np.ndarray:
    if spec.normal is not None:
        w = np.asarray(spec.normal, dtype=np.float64)
    else:
        w = np.random.default_rng([spec.seed, 1]).normal(size=spec.d)
    norm = np.linalg.norm(w)
    if norm == 0:
        raise GenerationError("planted normal must be non-zero")
    return w / norm


def _feasible(x: np.ndarray, spec: SyntheticSpec) -> bool:
    if spec.max_mag is None:
        return float(np.linalg.norm(x)) <= spec.radius
    mags = np.abs(x)
    return bool(np.all(mags >= spec.min_mag) and np.all(mags <= spec.max_mag))


def _pins(w: np.ndarray, spec: SyntheticSpec) -> np.ndarray:
    # y*x = margin*w +/- s*v with v orthogonal to w; the pair averages to margin*w
    d = spec.d
    if d == 1:
        pins = np.array([[spec.margin * w[0]], [-spec.margin * w[0]]])
        if all(_feasible(p, spec) for p in pins):
            return pins
        raise GenerationError("cannot place margin-pinning examples inside the magnitude bounds")
    rng = np.random.default_rng([spec.seed, 2])
    scale = spec.radius if spec.max_mag is None else spec.max_mag * math.sqrt(d)
    for _ in range(200):
        v = rng.normal(size=d)
        v -= (v @ w) * w
        v /= np.linalg.norm(v)
        for s in rng.uniform(0.05, 1.0, size=20) * scale:
            pos = spec.margin * w + s * v
            neg = -(spec.margin * w - s * v)
            if _feasible(pos, spec) and _feasible(neg, spec):
                return np.array([pos, neg])
    raise GenerationError("cannot place margin-pinning examples inside the magnitude bounds")


def generate_synthetic(spec: SyntheticSpec) -> LabeledDataset:
    if not spec.margin > 0:
        raise GenerationError("margin must be positive")
    if spec.samples < 2:
        raise GenerationError("need at least two samples")
    if spec.max_mag is None:
        if spec.margin >= spec.radius:
            raise GenerationError("margin must be smaller than the sampling radius")
    elif not 0 <= spec.min_mag < spec.max_mag or spec.margin >= spec.max_mag * math.sqrt(spec.d):
        raise GenerationError("infeasible magnitude bounds for the requested margin")
    w = planted_normal(spec)
    rng = np.random.default_rng(spec.seed)
    n_pos = int(round(spec.samples * spec.positive_fraction))
    n_neg = spec.samples - n_pos
    X, y = [], []
    if spec.pin_margin:
        pins = _pins(w, spec)
        X.extend(pins)
        y.extend([1, -1])
        n_pos -= 1
        n_neg -= 1
    need = {1: max(n_pos, 0), -1: max(n_neg, 0)}
    attempts = 0
    batch = 1024
    while need[1] or need[-1]:
        attempts += batch
        if attempts > 2_000_000:
            raise GenerationError("rejection sampling failed; margin too large for the bounds")
        if spec.max_mag is None:
            P = rng.normal(size=(batch, spec.d))
            P /= np.linalg.norm(P, axis=1, keepdims=True)
            P *= spec.radius * rng.uniform(size=(batch, 1)) ** (1.0 / spec.d)
        else:
            P = rng.uniform(spec.min_mag, spec.max_mag, size=(batch, spec.d))
            P *= rng.choice([-1.0, 1.0], size=P.shape)
        s = P @ w
        for p, si in zip(P, s):
            if abs(si) < spec.margin:
                continue
            label = 1 if si > 0 else -1
            if need[label]:
                X.append(p)
                y.append(label)
                need[label] -= 1
    X = np.array(X)
    y = np.array(y)
    assert np.all(y * (X @ w) >= spec.margin * (1 - 1e-12))
    return LabeledDataset(X, y, spec.name)


SYNTH01 = dict(d=2, samples=200, min_mag=0.9, max_mag=6.9, pin_margin=False, name="synth01")
SYNTH02 = dict(d=2, samples=100, min_mag=0.01, max_mag=2.7, pin_margin=False, name="synth02")


@dataclass
class NormalizationSpec:
    """Per-dimension multiplicative scale factors applied to features."""

    mode: str = "none"
    lo: float = -1.0
    hi: float = 1.0
    factors: Optional[np.ndarray] = field(default=None)

    def apply(self, X: np.ndarray) -> np.ndarray:
        return X if self.factors is None else X * self.factors

    def invert(self, X: np.ndarray) -> np.ndarray:
        return X if self.factors is None else X / self.factors


def normalize(dataset: LabeledDataset, spec: NormalizationSpec | str = "none"
              ) -> tuple[LabeledDataset, NormalizationSpec]:
    """Rescale features; pure scaling keeps origin-through separators intact.

    ``scale_to_box`` scales each column so its largest magnitude reaches
    ``min(|lo|, hi)``; ``unit_max_norm`` divides everything by the largest
    example norm.
    """
    if isinstance(spec, str):
        spec = NormalizationSpec(spec)
    d = dataset.dimension
    if spec.mode == "none":
        factors = np.ones(d)
    elif spec.mode == "scale_to_box":
        if not spec.lo < 0 < spec.hi:
            raise ValueError("scale_to_box needs lo < 0 < hi")
        target = min(-spec.lo, spec.hi)
        col = np.max(np.abs(dataset.X), axis=0)
        factors = np.where(col > 0, target / np.where(col > 0, col, 1.0), 1.0)
    elif spec.mode == "unit_max_norm":
        m = dataset.max_norm()
        if m == 0:
            raise ValueError("cannot normalize an all-zero dataset")
        factors = np.full(d, 1.0 / m)
    else:
        raise ValueError(f"unknown normalization mode {spec.mode!r}")
    out = NormalizationSpec(spec.mode, spec.lo, spec.hi, factors)
    return dataset.with_features(out.apply(dataset.X)), out


@dataclass
class KMeansResult:
    centers: np.ndarray
    labels: np.ndarray
    objective_history: list
    iterations: int


def _kmeans_pp(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    centers = [X[rng.integers(len(X))]]
    d2 = ((X - centers[0]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total == 0:
            idx = rng.integers(len(X))
        else:
            idx = rng.choice(len(X), p=d2 / total)
        centers.append(X[idx])
        d2 = np.minimum(d2, ((X - X[idx]) ** 2).sum(axis=1))
    return np.array(centers, dtype=np.float64)


def kmeans(X, k: int, seed: int = 0, max_iter: int = 100) -> KMeansResult:
    """Lloyd iterations from a seeded k-means++ start.

    Stops when assignments no longer change. An emptied cluster is moved to
    the point farthest from its current center.
    """
    X = np.asarray(X, dtype=np.float64)
    if not 1 <= k <= len(X):
        raise ValueError("k must be between 1 and the number of points")
    rng = np.random.default_rng(seed)
    centers = _kmeans_pp(X, k, rng)
    labels = None
    history = []
    it = 0
    for it in range(1, max_iter + 1):
        d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new = np.argmin(d2, axis=1)
        history.append(float(d2[np.arange(len(X)), new].sum()))
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        for j in range(k):
            members = X[labels == j]
            if len(members):
                centers[j] = members.mean(axis=0)
            else:
                far = int(np.argmax(d2[np.arange(len(X)), labels]))
                centers[j] = X[far]
                labels[far] = j
    return KMeansResult(centers, labels, history, it)


def build_cluster_lattice(dataset: LabeledDataset, k_per_class: int, seed: int = 0,
                          halo: float = 1.0) -> LookupLattice:
    """Lookup table whose atoms are per-class k-means centers (2k atoms)."""
    if k_per_class < 1:
        raise ValueError("k_per_class must be >= 1")
    if not dataset.has_both_labels():
        raise ValueError("both classes must be present")
    centers = []
    for label in (1, -1):
        Xc = dataset.X[dataset.y == label]
        k = k_per_class
        if k > len(Xc):
            logger.warning("k=%d exceeds class %+d size %d; clamping", k, label, len(Xc))
            k = len(Xc)
        centers.append(kmeans(Xc, k, seed=seed).centers)
    table = np.vstack(centers)
    # nudge exact duplicates apart so the table stays a set
    for i in range(1, len(table)):
        while any(np.array_equal(table[i], table[j]) for j in range(i)):
            table[i] = table[i] + 1e-9
    return LookupLattice(table, halo)
