"""Pedestrian counter-flow on cross-bar networks: process kernel, generator, codegen, SSA engine."""

from .engine import RunConfig, expected_first_passage, run
from .model import PedestrianModel
from .spatial import RateParams, generate_crossbar

__version__ = "0.1.0"

__all__ = ["PedestrianModel", "RateParams", "RunConfig", "expected_first_passage",
           "generate_crossbar", "run", "__version__"]
