"""Finite subsets, boundaries, Folner diagnostics and finitely supported measures."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .groups import Group, GroupElement

WEIGHT_SUM_TOL = 1e-12
MIX_WEIGHT_TOL = 1e-9


def _as_set(F: Iterable[GroupElement]) -> frozenset:
    return F if isinstance(F, frozenset) else frozenset(F)


def _group_of(F) -> Group:
    for g in F:
        return g.group
    raise ValueError("empty set has no group")


def left_translate_set(g: GroupElement, F: Iterable[GroupElement]) -> frozenset:
    return frozenset(g * h for h in F)


def boundary(F: Iterable[GroupElement], group: Group | None = None) -> frozenset:
    """Union over generators s of the symmetric difference sF ^ F."""
    F = _as_set(F)
    group = group or _group_of(F)
    out: set = set()
    for s in group.generators:
        out |= left_translate_set(s, F) ^ F
    return frozenset(out)


def diameter(F: Iterable[GroupElement]) -> int:
    """Least m with F inside B(m), i.e. the largest word length in F."""
    return max(g.group.word_length(g) for g in F)


def folner_ratio(F: Iterable[GroupElement], g: GroupElement, exact: bool = False):
    """|gF ^ F| / |F|."""
    F = _as_set(F)
    if not F:
        raise ValueError("Folner ratio of an empty set")
    q = Fraction(len(left_translate_set(g, F) ^ F), len(F))
    return q if exact else float(q)


@dataclass(frozen=True)
class FolnerDiagnostics:
    boundary_size: int
    set_size: int
    diameter: int
    controlled_constant: Fraction

    @property
    def K_hat(self) -> float:
        return float(self.controlled_constant)

    def is_controlled(self, K: float) -> bool:
        return self.controlled_constant <= Fraction(K)


def controlled_constant(F: Iterable[GroupElement], group: Group | None = None) -> FolnerDiagnostics:
    """diam(F) * |dF| / |F|; F is K-controlled iff this is at most K."""
    F = _as_set(F)
    if not F:
        raise ValueError("controlled constant of an empty set")
    group = group or _group_of(F)
    b = len(boundary(F, group))
    d = diameter(F)
    return FolnerDiagnostics(b, len(F), d, Fraction(d * b, len(F)))


def ball_scan(group: Group, n_max: int, n_min: int = 1) -> list[tuple[int, FolnerDiagnostics]]:
    return [(n, controlled_constant(frozenset(group.ball(n)), group)) for n in range(n_min, n_max + 1)]


def shalom_ball_subsequence(group: Group, K: float, n_max: int) -> list[int]:
    """All radii n <= n_max whose ball B(n) is K-controlled, increasing.

    This is a finite enumeration; an empty list means no controlled ball
    was found in the window and says nothing beyond it.
    """
    if K <= 0:
        raise ValueError("K must be positive")
    return [n for n, diag in ball_scan(group, n_max) if diag.is_controlled(K)]


def folner_scan_csv(rows: Sequence[tuple[int, FolnerDiagnostics]], K: float | None = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["n", "|F|", "|∂F|", "diam", "K_hat"]
    if K is not None:
        header.append("controlled")
    w.writerow(header)
    for n, d in rows:
        row = [n, d.set_size, d.boundary_size, d.diameter, repr(d.K_hat)]
        if K is not None:
            row.append(int(d.is_controlled(K)))
        w.writerow(row)
    return buf.getvalue()


class FiniteMeasure:
    """Finitely supported probability measure, stored as an exact weight map."""

    __slots__ = ("weights",)

    def __init__(self, weights: dict[GroupElement, float], check: bool = True):
        clean = {g: float(w) for g, w in weights.items() if w != 0.0}
        if check:
            if any(w < 0 for w in clean.values()):
                raise ValueError("measure weights must be nonnegative")
            total = math.fsum(clean.values())
            if abs(total - 1.0) > WEIGHT_SUM_TOL:
                raise ValueError(f"measure weights sum to {total!r}, not 1")
        self.weights = clean

    @property
    def support(self) -> list[GroupElement]:
        """Support in normal-form order (no word lengths needed)."""
        return sorted(self.weights, key=GroupElement.sort_key)

    def __getitem__(self, g: GroupElement) -> float:
        return self.weights.get(g, 0.0)

    def __len__(self):
        return len(self.weights)

    def items(self):
        """(element, weight) pairs in canonical element order."""
        return [(g, self.weights[g]) for g in self.support]

    def total_mass(self) -> float:
        return math.fsum(self.weights.values())

    def to_json(self) -> list:
        return [[g.to_json(), w] for g, w in self.items()]

    def __repr__(self):
        return f"FiniteMeasure({len(self.weights)} atoms)"


def point_mass(g: GroupElement) -> FiniteMeasure:
    return FiniteMeasure({g: 1.0})


def uniform_measure(F: Iterable[GroupElement]) -> FiniteMeasure:
    F = _as_set(F)
    if not F:
        raise ValueError("uniform measure on an empty set")
    # 1/|F| rounded once; |F| * ulp drift can exceed the sum check on big sets
    w = 1.0 / len(F)
    return FiniteMeasure({g: w for g in F}, check=False)


def left_translate(g: GroupElement, mu: FiniteMeasure) -> FiniteMeasure:
    """(g * mu)(h) = mu(g^-1 h): the support is pushed forward by left multiplication."""
    return FiniteMeasure({g * h: w for h, w in mu.weights.items()}, check=False)


def reiter_defect(mu: FiniteMeasure, g: GroupElement) -> float:
    """l1 distance between mu and g * mu, in [0, 2]."""
    moved = left_translate(g, mu).weights
    keys = set(mu.weights) | set(moved)
    return math.fsum(abs(mu.weights.get(h, 0.0) - moved.get(h, 0.0)) for h in keys)


def mix_measures(ms: Sequence[FiniteMeasure], weights: Sequence[float]) -> FiniteMeasure:
    """Convex combination sum_i weights[i] * ms[i]."""
    if len(ms) != len(weights) or not ms:
        raise ValueError("need one weight per measure")
    if any(c < 0 for c in weights):
        raise ValueError("mixing weights must be nonnegative")
    total = math.fsum(weights)
    if abs(total - 1.0) > MIX_WEIGHT_TOL:
        raise ValueError(f"mixing weights sum to {total!r}, not 1")
    terms: dict[GroupElement, list[float]] = {}
    for m, c in zip(ms, weights):
        for g, w in m.weights.items():
            terms.setdefault(g, []).append(c * w)
    return FiniteMeasure({g: math.fsum(ws) for g, ws in terms.items()}, check=False)


def ball_measures(group: Group, radii: Iterable[int]) -> list[tuple[int, FiniteMeasure]]:
    return [(n, uniform_measure(group.ball(n))) for n in radii]


def measure_from_json(group: Group, items) -> FiniteMeasure:
    return FiniteMeasure({group.element_from_json(g): w for g, w in items})
