"""Benchmark machinery: test maps, random instances, metrics and suites."""

from .instances import PiecewiseQuadraticSpec, generate_instance
from .metrics import (
    ProfileTable,
    StationarityProbe,
    data_profile,
    f_converged,
    gamma_measure,
)
from .registry import RegistryMap, get_map, registry_maps
from .suite import Manifest, SuiteProblem, default_suite, load_manifest, run_suite, score_runs

__all__ = [
    "Manifest", "PiecewiseQuadraticSpec", "ProfileTable", "RegistryMap", "StationarityProbe",
    "SuiteProblem", "data_profile", "default_suite", "f_converged", "gamma_measure",
    "generate_instance", "get_map", "load_manifest", "registry_maps", "run_suite", "score_runs",
]
