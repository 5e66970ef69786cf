"""Output-feedback harmonic disturbance rejection with finite-time frequency estimation."""

from .controller import Compensator, CompensatorConfig
from .estimator import EstimatorConfig, EstimatorState
from .lti import Polynomial, StateSpaceModel, TransferFunction
from .plants import BallPlateParams
from .scenario import Scenario, load_scenario
from .signals import DelayBuffer, HarmonicDisturbance
from .simcore import SimConfig, TraceLog, run_closed_loop, run_open_loop_estimation
from .switching import SwitchingConfig

__all__ = [
    "BallPlateParams",
    "Compensator",
    "CompensatorConfig",
    "DelayBuffer",
    "EstimatorConfig",
    "EstimatorState",
    "HarmonicDisturbance",
    "Polynomial",
    "Scenario",
    "SimConfig",
    "StateSpaceModel",
    "SwitchingConfig",
    "TraceLog",
    "TransferFunction",
    "load_scenario",
    "run_closed_loop",
    "run_open_loop_estimation",
]
