"""Directional force feedback for teleoperation: rendering pipeline,
device model, contact simulator, metrics, transport, and learning."""

__version__ = "0.1.0"

from ._kernels import backend_name
from .errors import ForceCompassError

__all__ = ["ForceCompassError", "backend_name", "__version__"]
