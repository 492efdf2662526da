"""Time-coupled diffusion maps for point clouds measured at several times."""

__version__ = "0.1.0"

from .baselines import StaticDiffusionMap, concat_map, static_map
from .chain import (
    ChainOperator,
    SpectralDecomposition,
    decompose,
    embedding,
    materialize,
    stationary_distribution,
    tc_distance,
)
from .kernels import DiffusionOperator, KernelParams, build_operator, build_operators
from .synthetic import BarbellConfig, MetricFamily, barbell_tensor, circle_tensor
from .tensor_store import DataTensor, Snapshot, load_tensor, save_tensor

__all__ = [
    "BarbellConfig", "ChainOperator", "DataTensor", "DiffusionOperator", "KernelParams",
    "MetricFamily", "Snapshot", "SpectralDecomposition", "StaticDiffusionMap",
    "barbell_tensor", "build_operator", "build_operators", "circle_tensor", "concat_map",
    "decompose", "embedding", "load_tensor", "materialize", "save_tensor", "static_map",
    "stationary_distribution", "tc_distance",
]
