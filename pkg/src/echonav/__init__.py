"""echonav: a desk-scale multi-sonar acoustic-flow navigation workbench.

Simulates 2D sonar energyscapes of an indoor world, derives ternary
control masks for arbitrary sensor placements, and drives a
differential-steering platform through a layered reactive controller,
with batch campaign tooling and a live teleoperation service.
"""

__version__ = "0.1.0"

from .controller import ControllerConfig, ControllerState, VelocityCommand
from .flow import PlatformMotion, PolarPoint, SensorPose
from .grid import CANONICAL_GRID, EnergyGrid, Energyscape

__all__ = [
    "CANONICAL_GRID",
    "ControllerConfig",
    "ControllerState",
    "EnergyGrid",
    "Energyscape",
    "PlatformMotion",
    "PolarPoint",
    "SensorPose",
    "VelocityCommand",
    "__version__",
]
