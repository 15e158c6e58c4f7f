"""Stochastic simulation of chemical reaction networks with exact SSA and
tau-, R- and S-leaping approximations."""

from sleap.errors import (
    ConfigurationError,
    EnsembleError,
    ModelParseError,
    SamplingError,
    SleapError,
    SolverAbort,
)
from sleap.model import ReactionNetwork, SystemState, load_model, parse_network
from sleap.sampling import RngStream
from sleap.solvers import SolverKind, make_solver, run_trajectory

__version__ = "0.4.1"

__all__ = [
    "ConfigurationError",
    "EnsembleError",
    "ModelParseError",
    "ReactionNetwork",
    "RngStream",
    "SamplingError",
    "SleapError",
    "SolverAbort",
    "SolverKind",
    "SystemState",
    "load_model",
    "make_solver",
    "parse_network",
    "run_trajectory",
]
