"""Decision procedures for one-dimensional continuous pushdown VASS."""

from .model import C1pvassModel, ModelError, Transition, parse_model, serialize_model
from .zero_analysis import RationalInterval, ZeroAnalysis

__version__ = "0.1.0"

__all__ = ["C1pvassModel", "ModelError", "RationalInterval", "Transition", "ZeroAnalysis",
           "parse_model", "serialize_model"]
