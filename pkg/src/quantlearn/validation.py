"""Built-in instances and the end-to-end validation suite behind ``quantlearn validate``."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analysis import (
    InapplicableTheoremError,
    check_fw_margin,
    check_lattice_equivalence,
    check_mistake_bound,
    incidence_scaling,
)
from .core import LabeledDataset, quantize_dataset
from .data import SyntheticSpec, generate_synthetic
from .lattices import RegularLattice
from .learners import PerceptronConfig, full_precision_perceptron

PASS, FAIL, INAPPLICABLE = "pass", "fail", "inapplicable"


@dataclass
class CheckResult:
    name: str
    status: str
    detail: str = ""


def integer_instance(seed: int, max_dim: int = 5, max_examples: int = 200, corrupt: bool = False,
                     epochs: int = 3) -> tuple[RegularLattice, LabeledDataset, PerceptronConfig]:
    """Integer data on an integer grid wide enough for the whole full-precision run.

    ``corrupt`` shortens the grid by one point, which breaks the unit spacing.
    """
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, max_dim + 1))
    n = int(rng.integers(10, max_examples + 1))
    w_star = rng.integers(-3, 4, size=d)
    if not w_star.any():
        w_star[0] = 1
    X = rng.integers(-3, 4, size=(4 * n, d)).astype(np.float64)
    s = X @ w_star
    X = X[s != 0][:n]
    y = np.where(X @ w_star > 0, 1, -1)
    dataset = LabeledDataset(X, y, f"integer-{seed}")
    config = PerceptronConfig(epochs=epochs, shuffle_seed=seed, record_weights=True)
    fp = full_precision_perceptron(dataset, config)
    reach = max([0.0] + [float(np.max(np.abs(w))) for w in fp.weights_history])
    radius = int(math.ceil(max(reach, math.sqrt(len(fp.weights_history) or 1)))) + 1
    points = 2 * radius + (0 if corrupt else 1)
    return RegularLattice(d, points, -radius, radius), dataset, config


def planted_instance(seed: int, d: int | None = None, samples: int = 100,
                     delta_fraction: float | None = None) -> tuple[RegularLattice, LabeledDataset]:
    """Quantized planted-margin data on an odd, origin-centred grid with delta < gamma.

    The grid radius covers ``1/(gamma - 2*delta)``, which dominates the
    ``1/(gamma_q - delta)`` ball needed after quantization shifts the margin.
    """
    rng = np.random.default_rng([seed, 7])
    d = d or int(rng.integers(2, 4))
    gamma = float(rng.uniform(0.1, 0.3))
    frac = delta_fraction if delta_fraction is not None else float(rng.uniform(0.05, 0.4))
    delta = frac * gamma
    step = 2 * delta / math.sqrt(d)
    half = math.ceil((1.0 / (gamma - 2 * delta) + 0.5) / step)
    lattice = RegularLattice(d, 2 * half + 1, -half * step, half * step)
    data = generate_synthetic(SyntheticSpec(d=d, samples=samples, margin=gamma, seed=seed,
                                            radius=1.0 - delta))
    return lattice, quantize_dataset(lattice, data)


def fw_instance(seed: int, epsilon: float = 0.1, d: int | None = None,
                samples: int = 100) -> tuple[RegularLattice, LabeledDataset]:
    """Planted-margin data on a grid fine enough that delta <= epsilon^2 * gamma / 2."""
    rng = np.random.default_rng([seed, 11])
    d = d or int(rng.integers(2, 4))
    gamma = float(rng.uniform(0.15, 0.4))
    delta = 0.5 * epsilon ** 2 * gamma
    step = 2 * delta / math.sqrt(d)
    half = math.ceil(1.0 / step)
    lattice = RegularLattice(d, 2 * half + 1, -half * step, half * step)
    data = generate_synthetic(SyntheticSpec(d=d, samples=samples, margin=gamma, seed=seed,
                                            radius=1.0 - delta))
    return lattice, quantize_dataset(lattice, data)


def run_validation_suite(corrupt: bool = False, inject_inapplicable: bool = False,
                         instances: int = 10) -> list[CheckResult]:
    results = []
    for d, window in ((2, (0.4, 0.6)), (3, (0.57, 0.77))):
        rep = incidence_scaling(d, (8, 16, 32, 64), trials=20, seed=d)
        ok = window[0] <= rep.slope <= window[1]
        results.append(CheckResult(f"incidence d={d}", PASS if ok else FAIL,
                                   f"slope {rep.slope:.3f} (theory {rep.theory:.3f})"))

    bad = []
    for seed in range(instances):
        lattice, ds, cfg = integer_instance(seed, corrupt=corrupt)
        rep = check_lattice_equivalence(lattice, ds, cfg)
        if not rep.ok:
            bad.append(f"seed {seed} diverged at step {rep.first_divergence}")
    results.append(CheckResult("lattice equivalence", FAIL if bad else PASS,
                               "; ".join(bad[:3]) or f"{instances} identical traces"))

    bad, worst = [], 0.0
    for seed in range(instances):
        lattice, ds = planted_instance(seed)
        rep = check_mistake_bound(lattice, ds, runs=3, seed=seed, margin_budget=3000)
        worst = max(worst, rep.max_mistakes / rep.bound)
        if not rep.ok:
            bad.append(f"seed {seed}: {rep.max_mistakes} mistakes vs bound {rep.bound:.1f}")
    results.append(CheckResult("perceptron mistake bound", FAIL if bad else PASS,
                               "; ".join(bad[:3]) or f"max mistakes/bound {worst:.3f}"))

    if inject_inapplicable:
        lattice, ds = planted_instance(0)
        try:
            check_mistake_bound(lattice, ds, runs=1, delta=1.0)
            results.append(CheckResult("injected delta >= gamma", FAIL, "check did not refuse"))
        except InapplicableTheoremError as exc:
            results.append(CheckResult("injected delta >= gamma", INAPPLICABLE, str(exc)))

    bad = []
    for seed in range(instances):
        lattice, ds = fw_instance(seed)
        rep = check_fw_margin(lattice, ds, 0.1, margin_budget=3000)
        if not rep.ok or rep.within_eps is not True:
            bad.append(f"seed {seed}: margin {rep.margin:.4f} vs gamma {rep.gamma:.4f}")
    results.append(CheckResult("frank-wolfe margin", FAIL if bad else PASS,
                               "; ".join(bad[:3]) or f"{instances} instances"))
    return results
