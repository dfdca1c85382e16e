"""Perceptron and Frank-Wolfe, quantized and full precision."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import Atom, LabeledDataset, QuantizationError, QuantizationScheme

LENIENT = "lenient"
STRICT = "strict"


class DegenerateWeightsError(ArithmeticError):
    """The weight vector restored to zero, so its direction is undefined."""


@dataclass(frozen=True)
class PerceptronConfig:
    epochs: int = 3
    learning_rate: float = 1.0
    shuffle_seed: int = 0
    mistake_rule: str = LENIENT
    # stop early after an epoch without mistakes
    until_converged: bool = False
    record_weights: bool = False
    require_zero_atom: bool = False

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.mistake_rule not in (LENIENT, STRICT):
            raise ValueError(f"mistake_rule must be {LENIENT!r} or {STRICT!r}")


@dataclass(frozen=True)
class FrankWolfeConfig:
    max_steps: int = 1000
    epsilon: float = 0.1
    stop_when_gap_below: Optional[float] = None

    def __post_init__(self):
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")


@dataclass(frozen=True)
class StepRecord:
    step: int
    index: int
    mistake: bool
    mistakes: int
    norm: float
    margin_gap: float = math.nan
    margin: float = math.nan
    alpha: float = math.nan
    update_error: float = math.nan


@dataclass
class TrainedModel:
    weights: object  # Atom for quantized learners, ndarray otherwise
    trace: list = field(default_factory=list)
    converged: bool = False
    seed: Optional[int] = None
    updates: int = 0
    quantizations: int = 0
    weights_history: list = field(default_factory=list)

    @property
    def vector(self) -> np.ndarray:
        if isinstance(self.weights, Atom):
            return self.weights.vector
        return np.asarray(self.weights, dtype=np.float64)

    @property
    def mistakes(self) -> int:
        return self.trace[-1].mistakes if self.trace else 0

    @property
    def mistake_indices(self) -> list[int]:
        return [r.index for r in self.trace if r.mistake]

    def predict(self, X) -> np.ndarray:
        scores = np.atleast_2d(X) @ self.vector
        return np.where(scores >= 0, 1, -1)

    def accuracy(self, dataset: LabeledDataset) -> float:
        return float(np.mean(self.predict(dataset.X) == dataset.y)) * 100.0

    def normalized_margin(self, dataset: LabeledDataset) -> float:
        return normalized_margin(self.vector, dataset)

    def trace_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["step", "mistakes", "norm", "margin_gap"])
        for r in self.trace:
            writer.writerow([r.step, r.mistakes, repr(r.norm), repr(r.margin_gap)])
        return buf.getvalue()


def normalized_margin(w: np.ndarray, dataset: LabeledDataset) -> float:
    """``min_j y_j <x_j, w/|w|>``."""
    norm = float(np.linalg.norm(w))
    if norm == 0.0:
        raise DegenerateWeightsError("zero weight vector has no margin")
    return float(np.min(dataset.y * (dataset.X @ w))) / norm


def _check_dims(scheme, dataset):
    if scheme is not None and scheme.dimension != dataset.dimension:
        raise QuantizationError(
            f"dataset dimension {dataset.dimension} != scheme dimension {scheme.dimension}")


class _Counter:
    def __init__(self, snap):
        self.snap = snap
        self.calls = 0

    def __call__(self, x):
        self.calls += 1
        return self.snap(x)


def _perceptron(dataset: LabeledDataset, config: PerceptronConfig,
                snap: Optional[Callable], w0: np.ndarray) -> tuple[np.ndarray, list, bool, int, list]:
    X, y = dataset.X, dataset.y
    n = len(dataset)
    eta = config.learning_rate
    strict = config.mistake_rule == STRICT
    rng = np.random.default_rng(config.shuffle_seed)
    w = w0.copy()
    trace: list[StepRecord] = []
    history: list = []
    mistakes = 0
    step = 0
    for _ in range(config.epochs):
        epoch_mistakes = 0
        for i in rng.permutation(n):
            score = y[i] * float(w @ X[i])
            wrong = score < 0 if strict else score <= 0
            if wrong:
                w = w + (eta * y[i]) * X[i]
                if snap is not None:
                    w = snap(w)
                mistakes += 1
                epoch_mistakes += 1
                if config.record_weights:
                    history.append(w.copy())
            step += 1
            trace.append(StepRecord(step, int(i), wrong, mistakes, float(np.linalg.norm(w))))
        if config.until_converged and epoch_mistakes == 0:
            break
    # same per-row dot as the loop, so near-zero scores round identically
    scores = np.array([y[i] * float(w @ X[i]) for i in range(n)])
    converged = bool(np.all(scores >= 0 if strict else scores > 0))
    return w, trace, converged, mistakes, history


def quantized_perceptron(scheme: QuantizationScheme, dataset: LabeledDataset,
                         config: PerceptronConfig = PerceptronConfig()) -> TrainedModel:
    """Perceptron whose every update is rounded back onto the atoms.

    Mistakes are judged on restorations; a mistake on example i sets
    ``w <- q(r(w) + eta * y_i * r(x_i))``. Training starts from ``q(0)``.
    """
    _check_dims(scheme, dataset)
    w0 = scheme.zero_point
    if config.require_zero_atom and np.any(w0):
        raise QuantizationError("scheme has no zero atom")
    counter = _Counter(scheme.snap)
    w, trace, converged, mistakes, history = _perceptron(dataset, config, counter, w0)
    return TrainedModel(scheme.atom_of_point(w), trace, converged, config.shuffle_seed,
                        mistakes, counter.calls, history)


def full_precision_perceptron(dataset: LabeledDataset,
                              config: PerceptronConfig = PerceptronConfig()) -> TrainedModel:
    w, trace, converged, mistakes, history = _perceptron(
        dataset, config, None, np.zeros(dataset.dimension))
    return TrainedModel(w, trace, converged, config.shuffle_seed, mistakes, 0, history)


def line_search(a: np.ndarray, b: np.ndarray) -> float:
    """Minimiser over [0, 1] of ``|alpha * a + (1 - alpha) * b|``."""
    diff = a - b
    denom = float(diff @ diff)
    if denom == 0.0:
        return 0.0
    return min(1.0, max(0.0, float(b @ (b - a)) / denom))


def suggested_fw_steps(gamma: float, delta: float, epsilon: float, constant: float = 1.0) -> int:
    """Step budget ``c * (log(1/eps) / sqrt(gamma*delta) + 1/(eps*gamma))``."""
    if gamma <= 0 or epsilon <= 0:
        raise ValueError("gamma and epsilon must be positive")
    first = math.log(1.0 / epsilon) / math.sqrt(gamma * delta) if delta > 0 else 0.0
    return max(1, math.ceil(constant * (first + 1.0 / (epsilon * gamma))))


def _frank_wolfe(dataset: LabeledDataset, config: FrankWolfeConfig,
                 snap: Optional[Callable]) -> tuple[np.ndarray, list, bool]:
    X, y = dataset.X, dataset.y
    positives = np.flatnonzero(y == 1)
    if len(positives) == 0:
        raise ValueError("Frank-Wolfe needs at least one positive example")
    A = y[:, None] * X
    start = positives[np.argmin(np.linalg.norm(X[positives], axis=1))]
    w = snap(X[start]) if snap is not None else X[start].copy()
    trace: list[StepRecord] = []
    best_w, best_margin = w, -math.inf
    converged = False
    for t in range(config.max_steps + 1):
        norm = float(np.linalg.norm(w))
        if norm == 0.0:
            raise DegenerateWeightsError(f"weights restored to zero at step {t}")
        scores = A @ w
        i = int(np.argmin(scores))
        margin = float(scores[i]) / norm
        gap = norm - margin
        if margin > best_margin:
            best_w, best_margin = w, margin
        stop = config.stop_when_gap_below is not None and gap <= config.stop_when_gap_below
        if stop or t == config.max_steps:
            converged = stop
            trace.append(StepRecord(t, i, False, 0, norm, gap, margin))
            break
        a = A[i]
        alpha = line_search(a, w)
        target = alpha * a + (1.0 - alpha) * w
        if snap is not None:
            w_next = snap(snap(alpha * a) + snap((1.0 - alpha) * w))
        else:
            w_next = target
        trace.append(StepRecord(t, i, False, 0, norm, gap, margin, alpha,
                                float(np.linalg.norm(w_next - target))))
        w = w_next
    return best_w, trace, converged


def quantized_frank_wolfe(scheme: QuantizationScheme, dataset: LabeledDataset,
                          config: FrankWolfeConfig = FrankWolfeConfig()) -> TrainedModel:
    """Margin-maximising Frank-Wolfe with the doubly quantized convex update.

    Returns the iterate with the best normalized margin seen; the trace keeps
    every step's norm, margin gap, step size and rounding displacement.
    """
    _check_dims(scheme, dataset)
    counter = _Counter(scheme.snap)
    w, trace, converged = _frank_wolfe(dataset, config, counter)
    return TrainedModel(scheme.atom_of_point(w), trace, converged, None,
                        len(trace) - 1, counter.calls)


def full_precision_frank_wolfe(dataset: LabeledDataset,
                               config: FrankWolfeConfig = FrankWolfeConfig()) -> TrainedModel:
    w, trace, converged = _frank_wolfe(dataset, config, None)
    return TrainedModel(w, trace, converged, None, len(trace) - 1, 0)
