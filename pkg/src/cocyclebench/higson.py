"""Variation calculus on Cayley graphs: Higson and H^p tests, annulus
components, edge subdivision and harmonic-function diagnostics."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .cocycles import Array, Cocycle
from .errors import HarmonicityError, NegativityError, UnboundedFieldError
from .folner import FiniteMeasure
from .groups import FreeAbelian, Group, GroupElement, canonical_order
from .hilbert import SparseVector


class ScalarField:
    """A real function on the group with an optional declared sup bound."""

    def __init__(self, group: Group, func: Callable[[GroupElement], float], label: str = "field", bound: float | None = None):
        self.group = group
        self.func = func
        self.label = label
        self.bound = bound
        self._cache: dict[GroupElement, float] = {}

    def __call__(self, g: GroupElement) -> float:
        v = self._cache.get(g)
        if v is None:
            v = self._cache[g] = float(self.func(g))
        return v

    def __repr__(self):
        return f"<ScalarField {self.label} on {self.group.token}>"


def constant_field(group: Group, c: float) -> ScalarField:
    return ScalarField(group, lambda g: c, f"constant:{c}", bound=abs(c))


def step_field(group: Group) -> ScalarField:
    """Indicator of [0, inf) on Z."""
    _need_z(group)
    return ScalarField(group, lambda g: 1.0 if g.data[0] >= 0 else 0.0, "step", bound=1.0)


def linear_field(group: Group, coeffs: Sequence[float]) -> ScalarField:
    """g -> sum_i c_i x_i on Z^d (unbounded)."""
    if not isinstance(group, FreeAbelian) or len(coeffs) != group.d:
        raise ValueError("linear fields need Z^d and one coefficient per coordinate")
    cs = [float(c) for c in coeffs]
    return ScalarField(group, lambda g: math.fsum(c * x for c, x in zip(cs, g.data)), "linear")


def square_field(group: Group) -> ScalarField:
    """g -> sum_i x_i^2 on Z^d (unbounded)."""
    if not isinstance(group, FreeAbelian):
        raise ValueError("square fields need Z^d")
    return ScalarField(group, lambda g: float(sum(x * x for x in g.data)), "square")


def length_field(group: Group) -> ScalarField:
    return ScalarField(group, lambda g: float(group.word_length(g)), "length")


def pairing_field(alpha: Array, xi: SparseVector, absolute: bool = False) -> ScalarField:
    """g -> <alpha(g), xi> / |g| (0 at e), or its absolute value.

    For a cocycle the bound D ||xi|| with D = max_s ||b(s)|| is declared,
    since ||b(k)|| <= D |k|.
    """
    length = alpha.group.word_length
    bound = alpha.generator_norm_max() * xi.norm() if isinstance(alpha, Cocycle) else None

    def f(g):
        n = length(g)
        if n == 0:
            return 0.0
        p = alpha(g).inner(xi) / n
        return abs(p) if absolute else p

    return ScalarField(alpha.group, f, f"pairing({alpha.label})", bound=bound)


def _need_z(group: Group) -> None:
    if not isinstance(group, FreeAbelian) or group.d != 1:
        raise ValueError(f"this field is defined on Z, got {group.token}")


# --- variation ----------------------------------------------------------------

def variation(f: Callable[[GroupElement], float], g: GroupElement) -> list[float]:
    """delta f(g)(s) = f(g) - f(gs), in generator order."""
    fg = f(g)
    return [fg - f(g * s) for s in g.group.generators]


def variation_norm(f: Callable[[GroupElement], float], g: GroupElement) -> float:
    return math.sqrt(math.fsum(x * x for x in variation(f, g)))


def _check_bounded(f, group: Group, radius: int) -> None:
    bound = getattr(f, "bound", None)
    if bound is None:
        raise UnboundedFieldError(f"{f!r} has no declared bound; Higson classes need bounded functions")
    worst = max(abs(f(g)) for g in group.ball(radius))
    if worst > bound * (1 + 1e-12):
        raise UnboundedFieldError(f"{f!r} reaches {worst} on B({radius}), above its declared bound {bound}")


@dataclass
class HigsonProfile:
    rows: list[tuple[int, float]]
    evidence: bool


def higson_test(f: ScalarField, radii: Sequence[int], decay_factor: float = 0.5) -> HigsonProfile:
    """sup over |g| = n of the variation norm, for each n in ``radii``.

    ``evidence`` means the last value is at most ``decay_factor`` times the
    largest one (or the profile vanishes).
    """
    group = f.group
    radii = list(radii)
    _check_bounded(f, group, max(radii) + 1)
    rows = [(n, max(variation_norm(f, g) for g in group.sphere(n))) for n in radii]
    top = max(v for _, v in rows)
    return HigsonProfile(rows, rows[-1][1] <= decay_factor * top)


def hp_partials(f: Callable, group: Group, p: float, R: int) -> list[tuple[int, float]]:
    """(r, sum over B(r) of variation_norm^p) for r = 0..R."""
    if p < 1:
        raise ValueError("p must be at least 1")
    out, acc = [], []
    for r in range(R + 1):
        acc.extend(variation_norm(f, g) ** p for g in group.sphere(r))
        out.append((r, math.fsum(acc)))
    return out


def hp_partial_norm(f: Callable, group: Group, p: float, R: int) -> float:
    """sum over B(R) of variation_norm(g)^p."""
    return hp_partials(f, group, p, R)[-1][1]


def higson_csv(profile: HigsonProfile, partials: Sequence[tuple[int, float]]) -> str:
    hp = dict(partials)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "sup_variation", "hp_partial"])
    for n, v in profile.rows:
        w.writerow([n, repr(v), repr(hp.get(n, float("nan")))])
    return buf.getvalue()


# --- annuli and one-endedness ---------------------------------------------------

@dataclass
class AnnulusComponent:
    elements: list[GroupElement]
    touches_outer: bool


def annulus_components(group: Group, r: int, R: int) -> list[AnnulusComponent]:
    """Connected components of B(R) minus B(r) using generator moves inside the annulus."""
    if R <= r:
        raise ValueError("need R > r")
    length = group.word_length
    inside = [g for n in range(r + 1, R + 1) for g in group.sphere(n)]
    if not inside:
        raise ValueError("annulus is empty")
    members = set(inside)
    seen: set = set()
    comps = []
    for start in inside:
        if start in seen:
            continue
        seen.add(start)
        stack, comp = [start], []
        while stack:
            g = stack.pop()
            comp.append(g)
            for s in group.generators:
                h = g * s
                if h in members and h not in seen:
                    seen.add(h)
                    stack.append(h)
        comp = canonical_order(comp)
        comps.append(AnnulusComponent(comp, any(length(g) == R for g in comp)))
    return comps


def one_ended_window(group: Group, r: int, R: int) -> int:
    """Number of annulus components reaching the outer sphere S(R)."""
    return sum(c.touches_outer for c in annulus_components(group, r, R))


@dataclass
class ComponentReport:
    size: int
    constant_estimate: float
    oscillation: float
    path_bound: float


@dataclass
class C0Report:
    r: int
    R: int
    K_r: float
    components: list[ComponentReport]

    @property
    def within_bound(self) -> bool:
        return all(c.oscillation <= c.path_bound * (1 + 1e-12) + 1e-15 for c in self.components)


def c0_plus_constant_test(f: Callable, group: Group, r: int, R: int) -> C0Report:
    """Oscillation of f on each annulus component that reaches S(R).

    Along any path inside a component, consecutive values differ by at most
    the variation norm of the earlier vertex, so a component's oscillation is
    at most the sum of variation norms over it, and that is at most K_r, the
    sum over the whole annulus.
    """
    if R <= r + 2:
        raise ValueError("need R > r + 2")
    comps = annulus_components(group, r, R)
    norms = {g: variation_norm(f, g) for c in comps for g in c.elements}
    K_r = math.fsum(norms.values())
    reports = []
    for c in comps:
        if not c.touches_outer:
            continue
        vals = [f(g) for g in c.elements]
        hi, lo = max(vals), min(vals)
        reports.append(ComponentReport(len(vals), (hi + lo) / 2, hi - lo, math.fsum(norms[g] for g in c.elements)))
    return C0Report(r, R, K_r, reports)


# --- edge subdivision -------------------------------------------------------------

@dataclass
class SubdivisionReport:
    vertex_values: dict
    edge_values: dict
    f_delta_f: dict
    delta_f_squared: dict
    l1_f_delta_f: float
    l1_subdivided_variation: float = 0.0
    pointwise_ok: bool = True


def _edge_key(g: GroupElement, h: GroupElement):
    return (g, h) if g.sort_key() <= h.sort_key() else (h, g)


def subdivision_field(f: Callable, group: Group, radius: int) -> SubdivisionReport:
    """The field f' on the edge-subdivided Cayley graph over B(radius).

    f'(g) = f(g)^2 at vertices and f'(g, gs) = f(g) f(gs) at edge midpoints.
    Reports ||f . delta f||(g) = f(g) ||delta f(g)||, the comparison with
    ||delta(f^2)||(g), and the l1 mass of the subdivided variation.
    """
    ball = group.ball(radius)
    for g in ball:
        if f(g) < 0:
            raise NegativityError(f"f({g!r}) = {f(g)} < 0")
    vertex = {g: f(g) ** 2 for g in ball}
    edges = {}
    fdf, df2 = {}, {}
    sub_var = []
    for g in ball:
        fg = f(g)
        diffs, sq = [], []
        for s in group.generators:
            h = g * s
            fh = f(h)
            if fh < 0:
                raise NegativityError(f"f({h!r}) = {fh} < 0")
            edges.setdefault(_edge_key(g, h), fg * fh)
            diffs.append(fg * (fg - fh))
            sq.append(fg * fg - fh * fh)
        fdf[g] = math.sqrt(math.fsum(x * x for x in diffs))
        df2[g] = math.sqrt(math.fsum(x * x for x in sq))
        sub_var.append(fdf[g])
    for (a, b), val in edges.items():
        sub_var.append(math.hypot(val - f(a) ** 2, val - f(b) ** 2))
    ok = all(fdf[g] <= df2[g] * (1 + 1e-12) + 1e-15 for g in ball)
    return SubdivisionReport(vertex, edges, fdf, df2, math.fsum(fdf.values()), math.fsum(sub_var), ok)


# --- harmonic functions -----------------------------------------------------------

def _value(x):
    return x if isinstance(x, SparseVector) else float(x)


def harmonic_defect(u: Callable, mu: FiniteMeasure, g: GroupElement) -> float:
    """|u(g) - sum_s mu(s) u(gs)| (a norm when u is vector valued).

    Evaluated as |sum_s mu(s) (u(g) - u(gs))| so that symmetric measures
    cancel exactly on linear functions; weights like 1/|F| are rounded and
    need not sum to exactly 1.
    """
    ug = _value(u(g))
    if isinstance(ug, SparseVector):
        from .hilbert import weighted_sum

        return weighted_sum((w, ug - u(g * s)) for s, w in mu.items()).norm()
    return abs(math.fsum(w * (ug - u(g * s)) for s, w in mu.items()))


def uniform_step_measure(group: Group) -> FiniteMeasure:
    """Uniform probability on the symmetric generating set."""
    w = 1.0 / len(group.generators)
    return FiniteMeasure({s: w for s in group.generators}, check=False)


def second_moment(mu: FiniteMeasure) -> float:
    return math.fsum(w * g.group.word_length(g) ** 2 for g, w in mu.items())


def lipschitz_estimate(u: Callable, group: Group, R: int) -> float:
    """max over g in B(R), s in S of |u(g) - u(gs)|."""
    return max(abs(u(g) - u(g * s)) for g in group.ball(R) for s in group.generators)


def harmonic_scan(u: Callable, mu: FiniteMeasure, group: Group, radius: int) -> list[tuple[GroupElement, float]]:
    return [(g, harmonic_defect(u, mu, g)) for g in group.ball(radius)]


def harmonic_csv(rows: Sequence[tuple[GroupElement, float]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["g", "defect"])
    for g, d in rows:
        w.writerow([g.to_json(), repr(d)])
    return buf.getvalue()


def subharmonic_check(u: Callable, mu: FiniteMeasure, group: Group, window: int, tol: float = 1e-9) -> float:
    """max over B(window) of |u|(g) - sum_s mu(s) |u|(gs), after checking u is harmonic there.

    For harmonic u this is at most 0 (up to ``tol``).
    """
    worst_defect = max(d for _, d in harmonic_scan(u, mu, group, window))
    if worst_defect > tol:
        raise HarmonicityError(f"harmonic defect {worst_defect:.3g} exceeds {tol} on B({window})")
    return max(math.fsum(w * (abs(u(g)) - abs(u(g * s))) for s, w in mu.items()) for g in group.ball(window))


@dataclass
class HarmonicGrowthReport:
    lipschitz: float
    harmonic_defect: float
    poisson_boundary_trivial: bool
    averages: list[float]
    profile: list[tuple[int, float]]
    hypothesis_holds: bool
    conclusion_holds: bool
    verdict: str
    notes: list[str] = field(default_factory=list)


def sublinear_harmonic_harness(
    u: Callable,
    mu: FiniteMeasure,
    measures: Sequence[FiniteMeasure],
    group: Group,
    n_max: int,
    poisson_boundary_trivial: bool = True,
    tol: float = 1e-9,
    decay_factor: float = 0.5,
) -> HarmonicGrowthReport:
    """Compare almost sublinear averages of a Lipschitz harmonic u with its sublinear profile.

    The hypothesis is "int |u(g)| / |g| dmu_n decays"; the conclusion is
    "max over |g| = n of |u(g)| / n decays".  The verdict only says whether
    the finite window is consistent with hypothesis => conclusion.
    """
    lip = lipschitz_estimate(u, group, n_max)
    hd = max(d for _, d in harmonic_scan(u, mu, group, n_max))
    notes = []
    if hd > tol:
        notes.append(f"harmonic defect {hd:.3g} above tolerance {tol}")
    if not poisson_boundary_trivial:
        notes.append("Poisson boundary declared nontrivial; hypothesis not met")
    length = group.word_length
    averages = [
        math.fsum(w * abs(u(g)) / length(g) for g, w in m.items() if not g.is_identity()) for m in measures
    ]
    profile = [(n, max(abs(u(g)) for g in group.sphere(n)) / n) for n in range(1, n_max + 1)]

    def decays(vals):
        if not vals:
            return False
        top = max(abs(v) for v in vals)
        return top == 0.0 or abs(vals[-1]) <= decay_factor * top

    hyp = decays(averages) and poisson_boundary_trivial and hd <= tol
    concl = decays([v for _, v in profile])
    verdict = "inconsistent on this window" if hyp and not concl else "consistent on this window"
    return HarmonicGrowthReport(lip, hd, poisson_boundary_trivial, averages, profile, hyp, concl, verdict, notes)
