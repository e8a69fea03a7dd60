"""Ergodic averages of arrays and cocycles, and the almost-fixed-point pipeline.

Every integral against a finitely supported measure is a finite weighted sum
accumulated with exact rounding (``math.fsum``), so results are independent
of summation order and of the number of worker threads.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .cocycles import AffineAction, Array, Coboundary, Cocycle
from .errors import PropernessError, WitnessNotFoundError
from .folner import (
    FiniteMeasure,
    FolnerDiagnostics,
    boundary,
    controlled_constant,
    reiter_defect,
    uniform_measure,
)
from .groups import Group, GroupElement, canonical_order
from .hilbert import Representation, SparseVector, weighted_sum

MAZUR_TOL = 1e-12
MAZUR_MAX_ITER = 10_000


def _ordered_map(fn: Callable, items: Sequence, workers: int = 1) -> list:
    """fn over items, split into contiguous chunks; results keep input order."""
    items = list(items)
    if workers <= 1 or len(items) < 2 * workers:
        return [fn(x) for x in items]
    size = -(-len(items) // workers)
    chunks = [items[i : i + size] for i in range(0, len(items), size)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(lambda chunk: [fn(x) for x in chunk], chunks))
    return [y for part in parts for y in part]


def _warm(alpha: Array, elements: Iterable[GroupElement]) -> None:
    # populate caches single-threaded so parallel passes only read
    length = alpha.group.word_length
    for g in elements:
        length(g)
        alpha(g)


class _Running:
    """Neumaier-compensated running sum."""

    __slots__ = ("s", "c")

    def __init__(self):
        self.s = 0.0
        self.c = 0.0

    def add(self, x: float) -> float:
        t = self.s + x
        if abs(self.s) >= abs(x):
            self.c += (self.s - t) + x
        else:
            self.c += (x - t) + self.s
        self.s = t
        return self.s + self.c


# --- weak mean ergodic averages ----------------------------------------------

def flat_average(alpha: Array, mu: FiniteMeasure, workers: int = 1) -> SparseVector:
    """sum_g mu(g) alpha(g) / |g| (the identity contributes 0)."""
    items = mu.items()
    _warm(alpha, (g for g, _ in items))
    length = alpha.group.word_length
    terms = _ordered_map(
        lambda gw: (gw[1] / length(gw[0]), alpha(gw[0])) if not gw[0].is_identity() else (0.0, SparseVector()),
        items,
        workers,
    )
    return weighted_sum(terms)


def _pairing_terms(alpha, mu, xi, workers, transform):
    items = mu.items()
    _warm(alpha, (g for g, _ in items))
    length = alpha.group.word_length

    def term(gw):
        g, w = gw
        if g.is_identity():
            return 0.0
        return transform(w, length(g), alpha(g).inner(xi))

    return _ordered_map(term, items, workers)


def weak_pairing_average(alpha: Array, mu: FiniteMeasure, xi: SparseVector, workers: int = 1) -> float:
    """int <alpha(g), xi> / |g| dmu(g)."""
    return math.fsum(_pairing_terms(alpha, mu, xi, workers, lambda w, n, p: w * p / n))


def abs_pairing_average(alpha: Array, mu: FiniteMeasure, xi: SparseVector, workers: int = 1) -> float:
    """int |<alpha(g), xi>| / |g| dmu(g)."""
    return math.fsum(_pairing_terms(alpha, mu, xi, workers, lambda w, n, p: w * abs(p) / n))


def square_pairing_average(alpha: Array, mu: FiniteMeasure, xi: SparseVector, workers: int = 1) -> float:
    """int (<alpha(g), xi> / |g|)^2 dmu(g); its square root dominates the abs average."""
    return math.fsum(_pairing_terms(alpha, mu, xi, workers, lambda w, n, p: w * (p / n) ** 2))


def right_pairing_average(b: Array, mu: FiniteMeasure, xi: SparseVector, workers: int = 1) -> float:
    """int <b(g^-1), xi> / |g| dmu(g)."""
    items = mu.items()
    _warm(b, (g.inverse() for g, _ in items))
    length = b.group.word_length

    def term(gw):
        g, w = gw
        if g.is_identity():
            return 0.0
        return w * b(g.inverse()).inner(xi) / length(g)

    return math.fsum(_ordered_map(term, items, workers))


def proper_normalized_average(b: Array, mu: FiniteMeasure, xi: SparseVector, workers: int = 1) -> float:
    """int |<b(g), xi>| / ||b(g)|| dmu(g), with the identity term 0."""
    items = mu.items()
    _warm(b, (g for g, _ in items))

    def term(gw):
        g, w = gw
        if g.is_identity():
            return 0.0
        v = b(g)
        n = v.norm()
        if n == 0.0:
            raise PropernessError(f"b vanishes at {g!r}; the normalized average needs a proper cocycle")
        return w * abs(v.inner(xi)) / n

    return math.fsum(_ordered_map(term, items, workers))


@dataclass
class MetRow:
    n: int
    weak: float
    abs: float
    norm_of_average: float
    square: float


def met_run(
    alpha: Array,
    measures: Sequence[tuple[int, FiniteMeasure]],
    xi: SparseVector,
    workers: int = 1,
) -> list[MetRow]:
    """Weak, absolute and vector averages of the flattened array for each measure."""
    rows = []
    for n, mu in measures:
        avg = flat_average(alpha, mu, workers)
        rows.append(
            MetRow(
                n,
                weak_pairing_average(alpha, mu, xi, workers),
                abs_pairing_average(alpha, mu, xi, workers),
                avg.norm(),
                square_pairing_average(alpha, mu, xi, workers),
            )
        )
    return rows


def met_csv(rows: Sequence[MetRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "weak", "abs", "norm_of_average"])
    for r in rows:
        w.writerow([r.n, repr(r.weak), repr(r.abs), repr(r.norm_of_average)])
    return buf.getvalue()


def cesaro_sums(rep: Representation, xi: SparseVector, eta: SparseVector, n_max: int) -> tuple[list[float], list[float]]:
    """C_n = (1/n) sum_{k<=n} <A_k xi, eta> and C'_n with absolute values, n = 1..n_max.

    A_k xi = (1/k) sum_{j<k} pi_j xi is the k-th ergodic average on Z.
    """
    group = rep.group
    if getattr(group, "d", None) != 1:
        raise ValueError(f"Cesaro sums are defined for Z, got {group.token}")
    partial = SparseVector()
    signed, absolute = _Running(), _Running()
    C, Cp = [], []
    for k in range(1, n_max + 1):
        partial = partial + rep.apply(group.el(k - 1), xi)
        a = partial.inner(eta) / k
        C.append(signed.add(a) / k)
        Cp.append(absolute.add(abs(a)) / k)
    return C, Cp


# --- the almost-fixed-point construction -----------------------------------

def eta_sequence(b: Cocycle, sets: Sequence[Iterable[GroupElement]], workers: int = 1) -> list[SparseVector]:
    """eta_n = int b dupsilon_n with upsilon_n uniform on the n-th set."""
    out = []
    for F in sets:
        F = canonical_order(F)
        _warm(b, F)
        w = 1.0 / len(F)
        out.append(weighted_sum(_ordered_map(lambda g: (w, b(g)), F, workers)))
    return out


@dataclass
class DisplacementReport:
    per_generator: dict
    max_displacement: float
    C: float
    sharp_bound: float | None = None
    bound_2CK: float | None = None

    @property
    def within_sharp(self) -> bool:
        return self.sharp_bound is None or self.max_displacement <= self.sharp_bound * (1 + 1e-12)

    @property
    def within_2CK(self) -> bool:
        return self.bound_2CK is None or self.max_displacement <= self.bound_2CK * (1 + 1e-12)


def displacement(
    T: AffineAction,
    eta: SparseVector,
    diag: FolnerDiagnostics | None = None,
    K: float | None = None,
) -> DisplacementReport:
    """||T_s eta - eta|| for each generator, against the a-priori bounds.

    With set diagnostics the sharp bound C (d+1) |dF| / |F| is reported; 2CK
    uses ``K`` when given, else the set's measured constant, and holds for
    sets of diameter at least 1.
    """
    gens = T.group.generators
    per = {s: T.apply(s, eta).distance(eta) for s in gens}
    C = T.cocycle.generator_norm_max()
    sharp = None
    if diag is not None:
        sharp = C * (diag.diameter + 1) * diag.boundary_size / diag.set_size
        if K is None:
            K = diag.K_hat
    bound = None if K is None else 2 * C * K
    return DisplacementReport(per, max(per.values()), C, sharp, bound)


def displacement_vectors(T: AffineAction, point: SparseVector) -> dict[GroupElement, SparseVector]:
    return {s: T.apply(s, point) - point for s in T.group.generators}


@dataclass
class MazurResult:
    weights: list[float]
    J: float
    vertex_J: list[float]
    iterations: int
    converged: bool


def _gram(vectors: Sequence[dict]) -> np.ndarray:
    n = len(vectors)
    keys = list(vectors[0])
    Q = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            q = math.fsum(vectors[i][s].inner(vectors[j][s]) for s in keys)
            Q[i, j] = Q[j, i] = q
    return Q


def minimize_simplex_quadratic(Q: np.ndarray, tol: float = MAZUR_TOL, max_iter: int = MAZUR_MAX_ITER):
    """Away-step conditional gradient for min c^T Q c over the probability simplex.

    Starts at the best vertex and uses exact line search, so J never rises
    above any vertex value.  Returns (c, J, iterations, converged).
    """
    n = Q.shape[0]
    i0 = int(np.argmin(np.diag(Q)))
    x = np.zeros(n)
    x[i0] = 1.0
    J = float(Q[i0, i0])
    for it in range(1, max_iter + 1):
        grad = 2.0 * Q @ x
        gx = float(grad @ x)
        i = int(np.argmin(grad))
        active = np.flatnonzero(x > 0)
        j = int(active[np.argmax(grad[active])])
        gap_fw = gx - grad[i]
        gap_away = grad[j] - gx
        if gap_fw <= tol:
            return x, J, it, True
        if gap_fw >= gap_away:
            d = -x.copy()
            d[i] += 1.0
            gamma_max = 1.0
        else:
            d = x.copy()
            d[j] -= 1.0
            gamma_max = x[j] / (1.0 - x[j]) if x[j] < 1.0 else 0.0
        curv = float(d @ Q @ d)
        slope = float(x @ Q @ d)
        gamma = gamma_max if curv <= 0 else min(max(-slope / curv, 0.0), gamma_max)
        if gamma <= 0.0:
            return x, J, it, True
        x_new = x + gamma * d
        x_new[x_new < 1e-15] = 0.0
        x_new /= x_new.sum()
        J_new = float(x_new @ Q @ x_new)
        if J_new > J:
            return x, J, it, True
        drop = gamma == gamma_max and gamma_max < 1.0
        decrease = J - J_new
        x, J = x_new, J_new
        if decrease < tol and not drop:
            return x, J, it, True
    return x, J, max_iter, False


def mazur_convexify(vectors: Sequence[dict]) -> MazurResult:
    """Simplex weights c minimizing J(c) = sum_s ||sum_n c_n w_{n,s}||^2.

    ``vectors[n][s]`` is the displacement T_s p_n - p_n of the n-th candidate
    point; displacements are affine in the point, so the mixed point
    sum c_n p_n has displacement sum_n c_n w_{n,s}.
    """
    if not vectors:
        raise ValueError("need at least one candidate")
    Q = _gram(vectors)
    x, J, iters, ok = minimize_simplex_quadratic(Q)
    return MazurResult([float(c) for c in x], max(J, 0.0), [float(q) for q in np.diag(Q)], iters, ok)


@dataclass
class WindowRow:
    window: int
    J: float
    max_displacement: float
    bound_2CK: float | None
    weights: list[float]
    vertex_J: list[float] = field(default_factory=list)


@dataclass
class LedgerRow:
    """Per-set evidence for the weak estimate |<T_s eta - eta, xi>| <= eps (d+1)|dF|/|F| <= 4 K eps."""

    index: int
    probe: int
    pairing: float
    eps: float
    sharp_bound: float
    bound_4Keps: float


@dataclass
class FixedPointSearch:
    diagnostics: list[FolnerDiagnostics]
    eta: list[SparseVector]
    seeds: list[SparseVector]
    displacement_table: list[DisplacementReport]
    windows: list[WindowRow]
    weights: list[float]
    final_point: SparseVector
    achieved: float
    target: float
    ledger: list[LedgerRow] = field(default_factory=list)

    @property
    def reached(self) -> bool:
        return self.achieved <= self.target


def _window_sizes(n: int) -> list[int]:
    sizes, w = [], 1
    while w < n:
        sizes.append(w)
        w *= 2
    sizes.append(n)
    return sizes


def almost_fixed_points(
    b: Cocycle,
    sets: Sequence[Iterable[GroupElement]],
    target: float,
    seeds: Sequence[SparseVector] | None = None,
    probes: Sequence[SparseVector] | None = None,
    K: float | None = None,
    workers: int = 1,
    stop_at_target: bool = True,
) -> FixedPointSearch:
    """Average b over controlled sets, then convexify over growing windows.

    Candidates are ``seeds`` followed by eta_1, eta_2, ...; a Coboundary
    seeds its own base point.  Windows are 1, 2, 4, ... candidates and
    finally all of them; the search stops at the first window whose mixed
    point moves by at most ``target`` under every generator.
    """
    sets = [frozenset(F) for F in sets]
    group = b.group
    T = AffineAction(b)
    diags = [controlled_constant(F, group) for F in sets]
    eta = eta_sequence(b, sets, workers)
    if seeds is None:
        seeds = [b.base_point] if isinstance(b, Coboundary) else []
    seeds = list(seeds)
    table = [displacement(T, e, d, K) for e, d in zip(eta, diags)]
    candidates = seeds + eta
    cand_diags = [None] * len(seeds) + diags
    disp = [displacement_vectors(T, p) for p in candidates]
    C = b.generator_norm_max()

    windows: list[WindowRow] = []
    best = None
    for w in _window_sizes(len(candidates)):
        res = mazur_convexify(disp[:w])
        point = weighted_sum(zip(res.weights, candidates[:w]))
        achieved = max(T.apply(s, point).distance(point) for s in group.generators)
        Ks = [d.K_hat for d in cand_diags[:w] if d is not None]
        K_w = K if K is not None else (max(Ks) if Ks else None)
        bound = None if K_w is None else 2 * C * K_w
        windows.append(WindowRow(w, res.J, achieved, bound, res.weights, res.vertex_J))
        best = (res.weights, point, achieved)
        if stop_at_target and achieved <= target:
            break

    if probes is None:
        probes = [v for v in (b(s) for s in group.basis_generators) if not v.is_zero()]
    ledger = _weak_estimate_ledger(b, T, sets, diags, eta, probes)
    weights, point, achieved = best
    return FixedPointSearch(diags, eta, seeds, table, windows, weights, point, achieved, target, ledger)


def _weak_estimate_ledger(b, T, sets, diags, eta, probes) -> list[LedgerRow]:
    length = b.group.word_length
    rows = []
    for n, (F, d, e) in enumerate(zip(sets, diags, eta)):
        edge = [h for h in boundary(F, b.group) if not h.is_identity()]
        moves = [T.apply(s, e) - e for s in b.group.generators]
        for p, xi in enumerate(probes):
            eps = max((abs(b(h).inner(xi)) / length(h) for h in edge), default=0.0)
            pairing = max(abs(m.inner(xi)) for m in moves)
            sharp = eps * (d.diameter + 1) * d.boundary_size / d.set_size
            rows.append(LedgerRow(n, p, pairing, eps, sharp, 4 * d.K_hat * eps))
    return rows


def fixpoint_csv(search: FixedPointSearch) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["window", "J", "max_displacement", "2CK_bound"])
    for r in search.windows:
        w.writerow([r.window, repr(r.J), repr(r.max_displacement), "" if r.bound_2CK is None else repr(r.bound_2CK)])
    return buf.getvalue()


# --- growth, rigidity and precompactness ------------------------------------

def _magnitude(x) -> float:
    return x.norm() if isinstance(x, SparseVector) else abs(float(x))


def sublinear_growth_scan(f: Callable, group: Group, n_max: int) -> list[tuple[int, float]]:
    """(n, max over |g| = n of ||f(g)|| / n) for n = 1..n_max."""
    return [(n, max(_magnitude(f(g)) for g in group.sphere(n)) / n) for n in range(1, n_max + 1)]


@dataclass
class AlmostSublinearReport:
    values: list[float]
    decaying: bool


def almost_sublinear_test(
    f: Callable[[GroupElement], float],
    measures: Sequence[FiniteMeasure],
    decay_factor: float = 0.5,
) -> AlmostSublinearReport:
    """The averages int f(g^-1) dmu_n(g); ``decaying`` when the last is at most
    ``decay_factor`` times the largest."""
    values = [math.fsum(w * f(g.inverse()) for g, w in mu.items()) for mu in measures]
    top = max(abs(v) for v in values) if values else 0.0
    decaying = bool(values) and abs(values[-1]) <= decay_factor * top
    return AlmostSublinearReport(values, decaying)


@dataclass
class RigidityRow:
    k: int
    witness: GroupElement
    support_size: int
    integral: float
    reiter_defect: float


def rigidity_counterexample(
    f: Callable[[GroupElement], float],
    c: float,
    sets: Sequence[Iterable[GroupElement]],
    witnesses: Sequence[GroupElement] | None = None,
    search_radius: int | None = None,
) -> list[RigidityRow]:
    """Reiter measures on which int f(g^-1) dmu stays at least c/2.

    For the k-th Folner set F, a witness g with f >= c/2 on all of g F^-1 is
    taken from ``witnesses`` or searched among elements with f(g) >= c and
    |g| >= k, in canonical order inside B(search_radius).  The measure is
    uniform on F g^-1; ``reiter_defect`` is the largest defect over S.
    """
    rows = []
    for k, F in enumerate(sets, start=1):
        F = canonical_order(F)
        group = F[0].group
        Finv = [h.inverse() for h in F]

        def good(g):
            return all(f(g * h) >= c / 2 for h in Finv)

        if witnesses is not None:
            g = witnesses[k - 1]
            if not good(g):
                raise WitnessNotFoundError(f"supplied witness {g!r} fails f >= c/2 on g F^-1")
        else:
            radius = group.radius_cap if search_radius is None else search_radius
            g = None
            for n in range(k, radius + 1):
                for cand in sorted(group.sphere(n), key=GroupElement.sort_key):
                    if f(cand) >= c and good(cand):
                        g = cand
                        break
                if g is not None:
                    break
            if g is None:
                raise WitnessNotFoundError(f"no witness for set {k} with f >= {c} within radius {radius}")
        gi = g.inverse()
        mu = uniform_measure(h * gi for h in F)
        integral = math.fsum(w * f(x.inverse()) for x, w in mu.items())
        defect = max(reiter_defect(mu, s) for s in group.generators)
        rows.append(RigidityRow(k, g, len(mu), integral, defect))
    return rows


def insertion_radii(V: Sequence[SparseVector], stop_below: float = 0.0) -> list[float]:
    """Farthest-point insertion radii r_1 = inf >= r_2 >= ... (ties to the earliest index).

    Stops once the next radius would be at most ``stop_below``.
    """
    if not V:
        return []
    radii = [math.inf]
    dist = [V[0].distance(v) for v in V]
    while True:
        i = max(range(len(V)), key=lambda j: (dist[j], -j))
        r = dist[i]
        if r <= stop_below or r == 0.0:
            return radii
        radii.append(r)
        for j, v in enumerate(V):
            if dist[j] > 0.0:
                dist[j] = min(dist[j], V[i].distance(v))


def precompactness_proxy(V: Sequence[SparseVector], eps: float) -> int:
    """Size of the greedy farthest-point eps-net of V (nonincreasing in eps).

    The first N points of the insertion order cover V within eps and are
    pairwise more than eps apart.
    """
    return len(insertion_radii(list(V), stop_below=eps))
