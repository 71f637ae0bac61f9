"""Joint low-rank and graph estimation (LGE) from grossly corrupted data."""
from lge.graph import is_valid_laplacian, knn_graph, laplacian_from_adjacency, project_to_laplacian_set
from lge.kernels import BACKEND, DegenerateInputError, InvalidInputError, svt
from lge.solver import LgeSolution, SolverConfig, lge, rpca, step1_lowrank, step2_graph
from lge.synth import make_dataset, rel_error

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "DegenerateInputError", "InvalidInputError", "LgeSolution", "SolverConfig",
    "is_valid_laplacian", "knn_graph", "laplacian_from_adjacency", "lge", "make_dataset",
    "project_to_laplacian_set", "rel_error", "rpca", "step1_lowrank", "step2_graph", "svt",
]
