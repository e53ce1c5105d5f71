"""Numerical laboratory for local times of Gaussian processes G_t = int g_t(u) dB_u."""
from .errors import ArgumentError, CapabilityError, ConfigError, IntegrabilityError, NumericError
from .kernels import HurstFunction, KernelFamily

__version__ = "0.1.0"

__all__ = [
    "ArgumentError", "CapabilityError", "ConfigError", "IntegrabilityError", "NumericError",
    "HurstFunction", "KernelFamily", "__version__",
]
