"""Three-parameter beta process: sampling, power-law analysis and a factor model."""
from .errors import DomainError, NumericalError, ParameterError
from .process import BPParams, BetaProcessDraw, size_biased_pick, stick_break
from .rng import RandomStream, split

__version__ = "0.1.0"

__all__ = [
    "BPParams",
    "BetaProcessDraw",
    "DomainError",
    "NumericalError",
    "ParameterError",
    "RandomStream",
    "size_biased_pick",
    "split",
    "stick_break",
    "__version__",
]
