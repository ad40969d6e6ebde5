"""Multi-language knowledge-base entity importance ranking."""

from .model import FEATURES

__version__ = "0.1.0"
__all__ = ["FEATURES", "__version__"]
