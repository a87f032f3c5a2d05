from .bindings import Binding, BindingKind, cluster, delta_max, summarize
from .errors import DomainError, FactorizationError, GridFormatError, StationaryPointsError
from .grid import BenchmarkFunction, GridField, load_csv, parse_csv, sample, save_csv
from .kernels import Kernel, KernelKind, shape_parameter
from .oracle import GroundTruth, ground_truth
from .pipeline import FindOptions, RunReport, run_pipeline
from .stationary import SolverConfig, StationaryPoint, reduce, sweep

__all__ = [
    "BenchmarkFunction",
    "Binding",
    "BindingKind",
    "DomainError",
    "FactorizationError",
    "FindOptions",
    "GridField",
    "GridFormatError",
    "GroundTruth",
    "Kernel",
    "KernelKind",
    "RunReport",
    "SolverConfig",
    "StationaryPoint",
    "StationaryPointsError",
    "cluster",
    "delta_max",
    "ground_truth",
    "load_csv",
    "parse_csv",
    "reduce",
    "run_pipeline",
    "sample",
    "save_csv",
    "shape_parameter",
    "summarize",
    "sweep",
]
