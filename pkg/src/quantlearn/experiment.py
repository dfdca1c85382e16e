"""Config-driven sweeps over quantization schemes (the accuracy tables)."""

from __future__ import annotations

import configparser
import csv
import io
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import data as data_mod
from .analysis import is_sink
from .core import LabeledDataset, QuantizationScheme, quantize_dataset
from .lattices import LogarithmicLattice, LookupLattice, RegularLattice, compute_delta
from .learners import (
    FrankWolfeConfig,
    PerceptronConfig,
    quantized_frank_wolfe,
    quantized_perceptron,
)

OUTPUT_DIR_ENV = "QUANTLEARN_OUTPUT_DIR"


class ConfigError(ValueError):
    pass


def _ints(text: str) -> list[int]:
    return [int(t) for t in text.replace(";", ",").split(",") if t.strip()]


def _ranges(text: str) -> list[tuple[float, float]]:
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        lo, sep, hi = tok.rpartition(":")
        if not sep:
            half = float(tok)
            out.append((-half, half))
        else:
            out.append((float(lo), float(hi)))
    return out


@dataclass
class SchemeSpec:
    """One grid cell's scheme, with row/column labels for the table."""

    row: str
    col: str
    kind: str
    params: dict

    def build(self, d: int, train: Optional[LabeledDataset] = None, seed: int = 0) -> QuantizationScheme:
        p = self.params
        if self.kind == "regular":
            return RegularLattice(d, p["points"], p["lo"], p["hi"])
        if self.kind == "logarithmic":
            if p["mantissa_bits"] < 0:
                raise ConfigError("bit budget too small for the exponent width")
            return LogarithmicLattice(d, p["exponent_bits"], p["mantissa_bits"])
        if self.kind == "lookup":
            return LookupLattice(data_mod.load_table_csv(p["table"]), p.get("halo", 1.0))
        if self.kind == "cluster":
            if train is None:
                raise ConfigError("cluster lattices need training data")
            return data_mod.build_cluster_lattice(train, p["k_per_class"], seed, p.get("halo", 1.0))
        raise ConfigError(f"unknown scheme kind {self.kind!r}")


@dataclass
class ExperimentConfig:
    name: str = "experiment"
    dataset_path: Optional[str] = None
    test_path: Optional[str] = None
    synthetic: Optional[data_mod.SyntheticSpec] = None
    n_train: Optional[int] = None
    n_test: Optional[int] = None
    split_seed: int = 0
    normalization: data_mod.NormalizationSpec = field(default_factory=data_mod.NormalizationSpec)
    schemes: list = field(default_factory=list)
    row_name: str = "row"
    col_name: str = "col"
    learner: str = "perceptron"
    perceptron: PerceptronConfig = field(default_factory=PerceptronConfig)
    frank_wolfe: FrankWolfeConfig = field(default_factory=FrankWolfeConfig)
    seed: int = 0
    sinks: bool = True
    delta_samples: int = 10 ** 6
    workers: int = 1
    output_dir: str = "results"

    def __post_init__(self):
        if not self.schemes:
            raise ConfigError("scheme grid is empty")
        if self.dataset_path is None and self.synthetic is None:
            raise ConfigError("need a dataset path or a synthetic spec")


def _scheme_grid(sec: configparser.SectionProxy) -> tuple[list[SchemeSpec], str, str]:
    kind = sec.get("kind", "regular")
    specs = []
    if kind == "regular":
        ranges = _ranges(sec.get("ranges", "-1:1"))
        if "bits" in sec:
            cols = [(f"{b} bits", 2 ** b) for b in _ints(sec["bits"])]
        else:
            cols = [(str(n), n) for n in _ints(sec.get("points", "256"))]
        for lo, hi in ranges:
            for label, n in cols:
                specs.append(SchemeSpec(f"[{lo:g},{hi:g}]", label, kind,
                                        {"points": n, "lo": lo, "hi": hi}))
        return specs, "range", "points per dim"
    if kind == "logarithmic":
        budgets = _ints(sec.get("budgets", "8"))
        for e in _ints(sec.get("exponent_bits", "3")):
            for b in budgets:
                specs.append(SchemeSpec(str(e), f"{b} bits", kind,
                                        {"exponent_bits": e, "mantissa_bits": b - 1 - e}))
        return specs, "exponent bits", "bit budget"
    if kind == "lookup":
        halo = sec.getfloat("halo", 1.0)
        for path in [t.strip() for t in sec["table"].split(",") if t.strip()]:
            specs.append(SchemeSpec(Path(path).stem, "table", kind, {"table": path, "halo": halo}))
        return specs, "table", "lookup"
    if kind == "cluster":
        halo = sec.getfloat("halo", 1.0)
        for k in _ints(sec.get("k_per_class", "1,3,9")):
            specs.append(SchemeSpec("clusters", str(k), kind, {"k_per_class": k, "halo": halo}))
        return specs, "custom", "k per class"
    raise ConfigError(f"unknown grid kind {kind!r}")


def parse_config(text: str, base_dir: Path | str = ".") -> ExperimentConfig:
    """Parse the INI-style experiment description (see README for the grammar)."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    base_dir = Path(base_dir)
    if "dataset" not in cp or "grid" not in cp:
        raise ConfigError("config needs [dataset] and [grid] sections")
    ds = cp["dataset"]
    synthetic = None
    path = test_path = None
    if "path" in ds:
        path = str(base_dir / ds["path"])
        test_path = str(base_dir / ds["test_path"]) if "test_path" in ds else None
    elif "synthetic" in ds:
        preset = ds["synthetic"].strip()
        base = {"synth01": data_mod.SYNTH01, "synth02": data_mod.SYNTH02}.get(preset, {})
        if preset not in ("synth01", "synth02", "custom"):
            raise ConfigError(f"unknown synthetic preset {preset!r}")
        kw = dict(base)
        for key, conv in (("d", int), ("samples", int), ("margin", float), ("seed", int),
                          ("radius", float), ("min_mag", float), ("max_mag", float),
                          ("positive_fraction", float)):
            if key in ds:
                kw[key] = conv(ds[key])
        if "pin_margin" in ds:
            kw["pin_margin"] = ds.getboolean("pin_margin")
        synthetic = data_mod.SyntheticSpec(**kw)
    else:
        raise ConfigError("[dataset] needs 'path' or 'synthetic'")
    norm = cp["normalize"] if "normalize" in cp else {}
    normalization = data_mod.NormalizationSpec(
        norm.get("mode", "none"), float(norm.get("lo", -1.0)), float(norm.get("hi", 1.0)))
    schemes, row_name, col_name = _scheme_grid(cp["grid"])
    learner = cp["learner"] if "learner" in cp else {}
    run = cp["run"] if "run" in cp else {}
    out = cp["output"] if "output" in cp else {}
    seed = int(run.get("seed", 0))
    try:
        perceptron = PerceptronConfig(
            epochs=int(learner.get("epochs", 3)),
            learning_rate=float(learner.get("learning_rate", 1.0)),
            shuffle_seed=seed,
            mistake_rule=learner.get("mistake_rule", "lenient"))
        frank_wolfe = FrankWolfeConfig(
            max_steps=int(learner.get("max_steps", 1000)),
            epsilon=float(learner.get("epsilon", 0.1)))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    output_dir = os.environ.get(OUTPUT_DIR_ENV) or str(base_dir / out.get("dir", "results"))
    return ExperimentConfig(
        name=out.get("name", "experiment"),
        dataset_path=path, test_path=test_path, synthetic=synthetic,
        n_train=int(ds["train"]) if "train" in ds else None,
        n_test=int(ds["test"]) if "test" in ds else None,
        split_seed=int(ds.get("split_seed", 0)),
        normalization=normalization,
        schemes=schemes, row_name=row_name, col_name=col_name,
        learner=learner.get("name", "perceptron"),
        perceptron=perceptron, frank_wolfe=frank_wolfe, seed=seed,
        sinks=str(run.get("sinks", "true")).lower() in ("1", "true", "yes", "on"),
        delta_samples=int(run.get("delta_samples", 10 ** 6)),
        workers=int(run.get("workers", 1)),
        output_dir=output_dir)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    return parse_config(path.read_text(), path.parent)


@dataclass
class Cell:
    row: str
    col: str
    accuracy: float = float("nan")
    mistakes: int = -1
    delta: float = float("nan")
    sink: Optional[bool] = None
    seed: int = 0
    error: str = ""


@dataclass
class ExperimentGrid:
    name: str
    row_name: str
    col_name: str
    rows: list
    cols: list
    cells: dict

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([self.row_name, self.col_name, "accuracy", "mistakes", "delta",
                         "sink", "seed", "error"])
        for r in self.rows:
            for c in self.cols:
                cell = self.cells.get((r, c))
                if cell is None:
                    continue
                writer.writerow([r, c, "" if cell.error else f"{cell.accuracy:.2f}",
                                 "" if cell.error else cell.mistakes,
                                 "" if cell.error else repr(cell.delta),
                                 "" if cell.sink is None else int(cell.sink),
                                 cell.seed, cell.error])
        return buf.getvalue()

    def to_text(self) -> str:
        head = [f"{self.row_name} \\ {self.col_name}"] + list(self.cols)
        body = []
        for r in self.rows:
            line = [r]
            for c in self.cols:
                cell = self.cells.get((r, c))
                if cell is None or cell.error:
                    line.append("--")
                else:
                    line.append(f"{cell.accuracy:.0f}" + ("*" if cell.sink else ""))
            body.append(line)
        widths = [max(len(row[i]) for row in [head] + body) for i in range(len(head))]
        fmt = lambda row: "  ".join(v.rjust(w) for v, w in zip(row, widths))
        lines = [fmt(head), "  ".join("-" * w for w in widths)] + [fmt(r) for r in body]
        lines.append("(* final weights are a sink atom, -- cell failed, see CSV error column)")
        return "\n".join(lines) + "\n"

    def accuracy(self, row: str, col: str) -> float:
        return self.cells[(row, col)].accuracy


def load_experiment_data(config: ExperimentConfig) -> tuple[LabeledDataset, LabeledDataset]:
    if config.synthetic is not None:
        full = data_mod.generate_synthetic(config.synthetic)
        test = None
    else:
        full = data_mod.load_dataset(config.dataset_path)
        test = None
        if config.test_path:
            test = (data_mod.load_dataset(config.test_path) if config.test_path.endswith(".csv")
                    else data_mod.load_sparse(config.test_path, full.dimension))
    if test is None:
        n_train = config.n_train or int(round(0.8 * len(full)))
        train, test = data_mod.train_test_split(full, n_train, config.split_seed, config.n_test)
    else:
        train = full
    train, norm = data_mod.normalize(train, config.normalization)
    test = test.with_features(norm.apply(test.X))
    return train, test


def run_cell(spec: SchemeSpec, train: LabeledDataset, test: LabeledDataset,
             config: ExperimentConfig) -> Cell:
    cell = Cell(spec.row, spec.col, seed=config.seed)
    try:
        scheme = spec.build(train.dimension, train, config.seed)
    except (ValueError, OSError) as exc:
        cell.error = str(exc) or type(exc).__name__
        return cell
    trq = quantize_dataset(scheme, train)
    teq = quantize_dataset(scheme, test)
    try:
        if config.learner == "frank_wolfe":
            model = quantized_frank_wolfe(scheme, trq, config.frank_wolfe)
        else:
            model = quantized_perceptron(scheme, trq, config.perceptron)
    except (ValueError, ArithmeticError) as exc:
        cell.error = str(exc) or type(exc).__name__
        return cell
    cell.accuracy = model.accuracy(teq)
    cell.mistakes = model.mistakes
    cell.delta = compute_delta(scheme, samples=config.delta_samples, seed=config.seed)
    if config.sinks:
        cell.sink = is_sink(scheme, model.vector, trq, config.perceptron.learning_rate)
    return cell


def _run_cell_args(args):
    return run_cell(*args)


def run_experiment(config: ExperimentConfig, write: bool = True) -> ExperimentGrid:
    """Train and test one model per grid cell; failing cells carry an error marker."""
    train, test = load_experiment_data(config)
    jobs = [(spec, train, test, config) for spec in config.schemes]
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            cells = list(pool.map(_run_cell_args, jobs))
    else:
        cells = [_run_cell_args(j) for j in jobs]
    rows = list(dict.fromkeys(s.row for s in config.schemes))
    cols = list(dict.fromkeys(s.col for s in config.schemes))
    grid = ExperimentGrid(config.name, config.row_name, config.col_name, rows, cols,
                          {(c.row, c.col): c for c in cells})
    if write:
        out = Path(config.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{config.name}.csv").write_text(grid.to_csv())
        (out / f"{config.name}.txt").write_text(grid.to_text())
    return grid
