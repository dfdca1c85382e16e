"""Learning linear separators when every vector lives on a finite atom set."""

from .core import (
    Atom,
    DomainBox,
    LabeledDataset,
    QuantizationError,
    QuantizationScheme,
    quantize,
    quantize_dataset,
    restore,
    round_trip_error,
)
from .lattices import (
    LogarithmicLattice,
    LookupLattice,
    RegularLattice,
    build_logarithmic,
    build_lookup,
    build_regular,
    compute_delta,
)
from .learners import (
    FrankWolfeConfig,
    PerceptronConfig,
    TrainedModel,
    full_precision_frank_wolfe,
    full_precision_perceptron,
    quantized_frank_wolfe,
    quantized_perceptron,
)

__version__ = "0.1.0"

__all__ = [
    "Atom",
    "DomainBox",
    "LabeledDataset",
    "QuantizationError",
    "QuantizationScheme",
    "quantize",
    "quantize_dataset",
    "restore",
    "round_trip_error",
    "LogarithmicLattice",
    "LookupLattice",
    "RegularLattice",
    "build_logarithmic",
    "build_lookup",
    "build_regular",
    "compute_delta",
    "FrankWolfeConfig",
    "PerceptronConfig",
    "TrainedModel",
    "full_precision_frank_wolfe",
    "full_precision_perceptron",
    "quantized_frank_wolfe",
    "quantized_perceptron",
]
