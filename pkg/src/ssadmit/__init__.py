"""Mean-square admissibility analysis for singular stochastic Markov jump systems."""
__version__ = "0.1.0"

from .model import Model, load_model, read_model, save_model, validate
from .structure import impulse_check, restricted_form, slow_subsystem
from .lift import lift
from .dynamics import SimConfig, analyze, simulate
from .lmi import assemble, check_method, verify_certificate

__all__ = [
    "Model", "load_model", "read_model", "save_model", "validate",
    "impulse_check", "restricted_form", "slow_subsystem", "lift",
    "SimConfig", "analyze", "simulate", "assemble", "check_method", "verify_certificate",
]
