"""The (group, representation, cocycle) combinations shipped with the package."""

import math

from cocyclebench.cocycles import Coboundary, GeneratedCocycle, z_generated_cocycle, zd_cocycle
from cocyclebench.groups import BS12, FreeAbelian, Heisenberg, Lamplighter2
from cocyclebench.hilbert import GOLDEN_ANGLE, RegularRep, RotationRep, TrivialRep, coords, delta

PERMUTATION_TOL = 1e-10
FLOAT_TOL = 1e-9


def shipped_cocycles():
    """(label, cocycle, tolerance) triples."""
    Z, Z2, H, L, B = FreeAbelian(1), FreeAbelian(2), Heisenberg(), Lamplighter2(), BS12()
    rot1 = RotationRep(Z, [GOLDEN_ANGLE])
    rot2 = RotationRep(Z2, [GOLDEN_ANGLE, math.sqrt(2) * math.pi])
    out = [
        ("zd:1 regular generated", z_generated_cocycle(RegularRep(Z), delta(Z.el(0))), PERMUTATION_TOL),
        ("zd:1 rotation generated", z_generated_cocycle(rot1, coords(1.0, 0.0)), FLOAT_TOL),
        ("zd:1 trivial homomorphism", z_generated_cocycle(TrivialRep(Z), coords(1.0)), PERMUTATION_TOL),
        ("zd:2 rotation blockwise", zd_cocycle(rot2, [coords(1.0, 0.0, 0.0, 0.0), coords(0.0, 0.0, 0.6, -0.8)]), FLOAT_TOL),
        ("zd:2 rotation coboundary", Coboundary(rot2, coords(0.5, -1.0, 2.0, 0.25)), FLOAT_TOL),
        ("zd:2 regular coboundary", Coboundary(RegularRep(Z2), delta(Z2.el(0, 0)) - delta(Z2.el(1, 2)) * 0.5), PERMUTATION_TOL),
        ("zd:2 trivial homomorphism", zd_cocycle(TrivialRep(Z2), [coords(1.0, 0.0), coords(0.0, 1.0)]), PERMUTATION_TOL),
        ("heisenberg regular coboundary", Coboundary(RegularRep(H), delta(H.identity) + delta(H.el(1, 0, 1)) * 2.0), PERMUTATION_TOL),
        ("heisenberg trivial homomorphism", GeneratedCocycle(TrivialRep(H), [coords(1.0, 0.0), coords(0.0, 1.0)]), PERMUTATION_TOL),
        ("lamplighter2 regular coboundary", Coboundary(RegularRep(L), delta(L.identity)), PERMUTATION_TOL),
        ("lamplighter2 trivial cursor", GeneratedCocycle(TrivialRep(L), [coords(1.0), coords()]), PERMUTATION_TOL),
        ("bs12 regular coboundary", Coboundary(RegularRep(B), delta(B.identity) - delta(B.el(1, 1))), PERMUTATION_TOL),
        ("bs12 trivial height", GeneratedCocycle(TrivialRep(B), [coords(0.0), coords(1.0)]), PERMUTATION_TOL),
    ]
    return out
