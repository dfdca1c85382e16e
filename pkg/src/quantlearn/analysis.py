"""Empirical checks of the incidence lemma, the mistake bounds and the margin bound."""

from __future__ import annotations

import csv
import dataclasses
import io
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import LabeledDataset, QuantizationScheme
from .lattices import LookupLattice, ProductLattice, RegularLattice, compute_delta
from .learners import (
    DegenerateWeightsError,
    FrankWolfeConfig,
    PerceptronConfig,
    full_precision_frank_wolfe,
    full_precision_perceptron,
    normalized_margin,
    quantized_frank_wolfe,
    quantized_perceptron,
    suggested_fw_steps,
)


class InapplicableTheoremError(ValueError):
    """A theorem's preconditions do not hold, so there is nothing to check."""


# ---------------------------------------------------------------- incidence

@dataclass
class IncidenceReport:
    d: int
    m: int
    normal: tuple
    count: int
    predicted: float


def cell_edges(lattice: ProductLattice) -> np.ndarray:
    """Axis boundaries of the (box-shaped) Voronoi cells, clipped to the domain."""
    v = lattice.values
    return np.concatenate([[v[0]], (v[:-1] + v[1:]) / 2.0, [v[-1]]])


def count_separator_incidence(lattice: ProductLattice, normal) -> IncidenceReport:
    """Number of closed cells met by the hyperplane ``<normal, x> = 0``.

    A box meets the plane iff the extremes of ``<normal, corner>`` bracket 0;
    those extremes are sums of independent per-axis extremes.
    """
    normal = np.asarray(normal, dtype=np.float64)
    if normal.shape != (lattice.dimension,):
        raise ValueError("normal has the wrong dimension")
    if not np.any(normal):
        raise ValueError("normal must be non-zero")
    edges = cell_edges(lattice)
    lo = np.zeros(1)
    hi = np.zeros(1)
    for c in normal:
        a, b = c * edges[:-1], c * edges[1:]
        lo = np.add.outer(lo, np.minimum(a, b)).ravel()
        hi = np.add.outer(hi, np.maximum(a, b)).ravel()
    count = int(np.count_nonzero((lo <= 0.0) & (hi >= 0.0)))
    m = lattice.size
    d = lattice.dimension
    return IncidenceReport(d, m, tuple(normal.tolist()), count, m ** (1.0 - 1.0 / d))


@dataclass
class ScalingReport:
    d: int
    points: tuple
    slope: float
    theory: float
    counts: dict = field(default_factory=dict)


def incidence_scaling(d: int, points: Sequence[int] = (8, 16, 32, 64), trials: int = 20,
                      seed: int = 0, half_width: float = 1.0) -> ScalingReport:
    """Log-log slope of incidence count against atom count over random separators."""
    rng = np.random.default_rng(seed)
    normals = rng.normal(size=(trials, d))
    xs, ys = [], []
    counts = {}
    for n in points:
        lattice = RegularLattice(d, n, -half_width, half_width)
        c = [count_separator_incidence(lattice, w).count for w in normals]
        counts[n] = c
        xs.extend([math.log(lattice.size)] * trials)
        ys.extend(math.log(v) for v in c)
    slope = float(np.polyfit(xs, ys, 1)[0])
    return ScalingReport(d, tuple(points), slope, 1.0 - 1.0 / d, counts)


# ---------------------------------------------------------------- margins

@dataclass
class MarginEstimate:
    gamma_hat: float
    upper: float
    method: str
    steps: int
    separable: bool


def estimate_margin(dataset: LabeledDataset, budget: int = 20000, tol: float = 1e-9) -> MarginEstimate:
    """Full-precision Frank-Wolfe margin: a certified lower bound plus the norm upper bound."""
    if not dataset.has_both_labels():
        raise ValueError("margin needs both labels present")
    try:
        model = full_precision_frank_wolfe(
            dataset, FrankWolfeConfig(max_steps=budget, stop_when_gap_below=tol))
    except DegenerateWeightsError:
        # the origin lies in the hull of the signed examples
        return MarginEstimate(0.0, 0.0, "frank_wolfe", 0, False)
    gamma = normalized_margin(model.vector, dataset)
    upper = min(r.norm for r in model.trace)
    return MarginEstimate(gamma, upper, "frank_wolfe", len(model.trace) - 1, gamma > 0)


def direction_search_margin(dataset: LabeledDataset, directions: int = 100_000,
                            seed: int = 0) -> MarginEstimate:
    """Best min-margin over random unit directions; an independent low-dimensional oracle."""
    rng = np.random.default_rng(seed)
    A = dataset.y[:, None] * dataset.X
    best = -math.inf
    for start in range(0, directions, 20_000):
        k = min(20_000, directions - start)
        W = rng.normal(size=(k, dataset.dimension))
        W /= np.linalg.norm(W, axis=1, keepdims=True)
        best = max(best, float(np.max(np.min(W @ A.T, axis=1))))
    return MarginEstimate(best, math.nan, "direction_search", directions, best > 0)


# ---------------------------------------------------------------- theorem checks

@dataclass
class MistakeBoundReport:
    ok: bool
    gamma: float
    delta: float
    bound: float
    max_mistakes: int
    all_separated: bool
    mistakes: list = field(default_factory=list)
    seeds: list = field(default_factory=list)


def check_mistake_bound(scheme: QuantizationScheme, dataset: LabeledDataset, runs: int = 10,
                        seed: int = 0, gamma: Optional[float] = None,
                        delta: Optional[float] = None, margin_budget: int = 5000) -> MistakeBoundReport:
    """Quantized Perceptron runs to convergence; mistakes must stay under ``1/(gamma-delta)^2``.

    Raises :class:`InapplicableTheoremError` when the preconditions fail.
    """
    delta = compute_delta(scheme) if delta is None else delta
    if gamma is None:
        est = estimate_margin(dataset, budget=margin_budget)
        if not est.separable:
            raise InapplicableTheoremError("dataset is not linearly separable")
        gamma = est.gamma_hat
    if delta >= gamma:
        raise InapplicableTheoremError(f"delta={delta:.4g} >= gamma={gamma:.4g}")
    if not dataset.within_unit_ball():
        raise InapplicableTheoremError("examples must satisfy |r(x)| <= 1")
    radius = 1.0 / (gamma - delta)
    if scheme.domain.inradius() < radius:
        raise InapplicableTheoremError(
            f"domain must contain the ball of radius {radius:.4g}")
    if not np.array_equal(scheme.snap_many(dataset.X), dataset.X):
        raise InapplicableTheoremError("examples are not atoms of the scheme")
    if not scheme.has_zero_atom():
        raise InapplicableTheoremError("scheme has no zero atom to start from")
    bound = radius ** 2
    epochs = int(math.floor(bound)) + 2
    mistakes, seeds, separated = [], [], True
    for s in range(seed, seed + runs):
        model = quantized_perceptron(scheme, dataset, PerceptronConfig(
            epochs=epochs, shuffle_seed=s, until_converged=True))
        mistakes.append(model.mistakes)
        seeds.append(s)
        separated &= model.converged
    worst = max(mistakes)
    return MistakeBoundReport(separated and worst <= bound, gamma, delta, bound, worst,
                              separated, mistakes, seeds)


@dataclass
class FWMarginReport:
    ok: bool
    gamma: float
    delta: float
    epsilon: float
    steps: int
    margin: float
    theorem_bound: float
    vacuous: bool
    max_update_error: float
    within_eps: Optional[bool] = None
    within_relative: Optional[bool] = None


def check_fw_margin(scheme: QuantizationScheme, dataset: LabeledDataset, epsilon: float,
                    steps: Optional[int] = None, constant: float = 1.0,
                    gamma: Optional[float] = None, delta: Optional[float] = None,
                    margin_budget: int = 5000) -> FWMarginReport:
    """Quantized Frank-Wolfe margin against ``gamma - sqrt(24 delta/gamma) - eps``.

    The within_* fields are filled only when their error preconditions hold.
    ``gamma`` defaults to the Frank-Wolfe upper estimate, which makes the
    comparison conservative.
    """
    if gamma is None:
        est = estimate_margin(dataset, budget=margin_budget)
        if not est.separable:
            raise ValueError("dataset is not linearly separable")
        gamma = est.upper
    delta = compute_delta(scheme) if delta is None else delta
    if steps is None:
        steps = suggested_fw_steps(gamma, delta, epsilon, constant)
        steps = max(steps, math.ceil(constant * math.log(1 / epsilon) / (epsilon * gamma)))
    model = quantized_frank_wolfe(scheme, dataset, FrankWolfeConfig(max_steps=steps, epsilon=epsilon))
    margin = normalized_margin(model.vector, dataset)
    bound = gamma - math.sqrt(24 * delta / gamma) - epsilon
    errs = [r.update_error for r in model.trace if not math.isnan(r.update_error)]
    c1 = margin > gamma - epsilon if delta <= epsilon ** 2 * gamma else None
    c2 = margin > (1 - epsilon) * gamma if delta <= epsilon ** 2 * gamma ** 3 else None
    ok = margin > bound and c1 is not False and c2 is not False
    return FWMarginReport(ok, gamma, delta, epsilon, steps, margin, bound, bound <= 0,
                          max(errs, default=0.0), c1, c2)


@dataclass
class EquivalenceReport:
    ok: bool
    steps: int
    first_divergence: Optional[int]
    mistakes_quantized: int
    mistakes_full: int


def check_lattice_equivalence(scheme: QuantizationScheme, dataset: LabeledDataset,
                              config: PerceptronConfig = PerceptronConfig()) -> EquivalenceReport:
    """Quantized vs full-precision Perceptron, compared bit for bit step by step."""
    config = dataclasses.replace(config, record_weights=True)
    q = quantized_perceptron(scheme, dataset, config)
    f = full_precision_perceptron(dataset, config)
    diverged = None
    for k, (a, b) in enumerate(zip(q.trace, f.trace)):
        if a.index != b.index or a.mistake != b.mistake or a.mistakes != b.mistakes:
            diverged = a.step
            break
    if diverged is None:
        for k, (a, b) in enumerate(zip(q.weights_history, f.weights_history)):
            if not np.array_equal(a, b):
                diverged = [r.step for r in q.trace if r.mistake][k]
                break
    if diverged is None and (len(q.trace) != len(f.trace)
                             or not np.array_equal(q.vector, f.vector)):
        diverged = min(len(q.trace), len(f.trace))
    return EquivalenceReport(diverged is None, len(q.trace), diverged, q.mistakes, f.mistakes)


# ---------------------------------------------------------------- sinks

@dataclass
class SinkReport:
    sinks: list
    candidates: int
    runs: int
    absorbed_fraction: float
    scheme: dict


def _absorbing(scheme: QuantizationScheme, P: np.ndarray, updates: np.ndarray) -> np.ndarray:
    """Mask of rows of ``P`` that every update in ``updates`` snaps back onto."""
    keep = np.ones(len(P), dtype=bool)
    start = 0
    while start < len(updates):
        # keep each (candidates x updates x d) block near 2**22 floats
        chunk = max(1, (1 << 22) // max(1, int(keep.sum()) * P.shape[1]))
        U = updates[start:start + chunk]
        start += chunk
        moved = scheme.snap_many((P[keep][:, None, :] + U[None, :, :]).reshape(-1, P.shape[1]))
        stays = np.all(moved.reshape(-1, len(U), P.shape[1]) == P[keep][:, None, :], axis=(1, 2))
        idx = np.flatnonzero(keep)
        keep[idx[~stays]] = False
        if not keep.any():
            break
    return keep


def is_sink(scheme: QuantizationScheme, point, dataset: LabeledDataset, learning_rate: float = 1.0) -> bool:
    updates = learning_rate * dataset.y[:, None] * dataset.X
    return bool(_absorbing(scheme, np.atleast_2d(np.asarray(point, dtype=np.float64)), updates)[0])


def candidate_points(scheme: QuantizationScheme, limit: int = 10 ** 6,
                     corner_limit: int = 4096, seed: int = 0) -> np.ndarray:
    if isinstance(scheme, LookupLattice):
        return np.array(scheme.table)
    if isinstance(scheme, ProductLattice) and scheme.size <= limit:
        axes = np.meshgrid(*[scheme.values] * scheme.dimension, indexing="ij")
        return np.stack([a.ravel() for a in axes], axis=1)
    if scheme.size <= limit:
        return np.array([scheme.restore(i) for i in range(scheme.size)])
    if isinstance(scheme, ProductLattice):
        return scheme.corner_points(corner_limit, np.random.default_rng(seed))
    raise ValueError("no candidate set for this scheme; pass candidates explicitly")


def detect_sinks(scheme: QuantizationScheme, dataset: LabeledDataset, candidates=None,
                 runs: int = 0, config: PerceptronConfig = PerceptronConfig(),
                 limit: int = 10 ** 6, corner_limit: int = 4096) -> SinkReport:
    """Atoms that every single-example update maps back to themselves.

    Candidates default to all atoms for small schemes, otherwise the extreme
    corners; final weights of ``runs`` seeded Perceptron runs are added and
    the fraction of those runs that ended on a sink is reported.
    """
    updates = config.learning_rate * dataset.y[:, None] * dataset.X
    P = candidate_points(scheme, limit, corner_limit, config.shuffle_seed) if candidates is None \
        else np.atleast_2d(np.asarray(candidates, dtype=np.float64))
    finals = []
    for s in range(runs):
        model = quantized_perceptron(scheme, dataset,
                                     dataclasses.replace(config, shuffle_seed=config.shuffle_seed + s))
        finals.append(model.vector)
    if finals:
        P = np.vstack([P, np.array(finals)])
    P = np.unique(P, axis=0)
    mask = _absorbing(scheme, P, updates)
    sinks = P[mask]
    sink_ids = [scheme.atom_of_point(p).id for p in sinks]
    absorbed = 0.0
    if finals:
        sink_set = {tuple(p) for p in sinks.tolist()}
        absorbed = sum(tuple(f.tolist()) in sink_set for f in finals) / len(finals)
    return SinkReport(sorted(sink_ids), len(P), runs, absorbed, scheme.describe())


# ---------------------------------------------------------------- serialization

def report_text(report) -> str:
    rows = dataclasses.asdict(report)
    width = max(len(k) for k in rows)
    lines = [type(report).__name__]
    for k, v in rows.items():
        if isinstance(v, float):
            v = f"{v:.6g}"
        elif isinstance(v, (list, tuple)) and len(v) > 12:
            v = f"[{len(v)} items]"
        lines.append(f"  {k:<{width}}  {v}")
    return "\n".join(lines)


def reports_csv(reports: Sequence) -> str:
    if not reports:
        return ""
    buf = io.StringIO()
    fields = [f.name for f in dataclasses.fields(reports[0])]
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(fields)
    for r in reports:
        writer.writerow([getattr(r, f) for f in fields])
    return buf.getvalue()
