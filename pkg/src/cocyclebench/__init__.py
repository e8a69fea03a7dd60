"""Numerical workbench for cocycles, Folner averages and almost fixed points
of affine isometric actions of amenable groups."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .groups import BS12, FreeAbelian, GroupElement, Heisenberg, Lamplighter2, parse_group  # noqa: E402
from .hilbert import RegularRep, RotationRep, SparseVector, TensorRep, TrivialRep, delta  # noqa: E402
from .cocycles import Coboundary, GeneratedCocycle, parse_cocycle  # noqa: E402
