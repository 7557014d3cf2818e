"""Dynamics reconstruction and forecast-error laboratory.

Thin re-export of the compiled core: benchmark systems, the two embedding
paradigms, feedback fitting, forecast error curves and the matrix-cocycle
engine.
"""

from embedcast._core import *  # noqa: F401,F403
from embedcast._core import __doc__  # noqa: F401

__version__ = "0.1.0"
