"""1-cocycles, affine actions, arrays and their defect diagnostics.

An :class:`Array` is any map G -> H paired with a representation; a
:class:`Cocycle` additionally satisfies b(gh) = pi_g b(h) + b(g).  Defects
measured here are maxima over finite windows, so they are lower bounds for
the true suprema, never certificates of them.
"""

from __future__ import annotations

import csv
import io
import math
import threading
from typing import Callable, Iterable, Mapping, Sequence

from .errors import GrammarError, IncompatibleCocycleError
from .groups import FreeAbelian, Group, GroupElement
from .hilbert import (
    Representation,
    SparseVector,
    parse_vector,
    tensor,
    tensor_rep,
)

CROSS_CHECK_TOL = 1e-8
COMPATIBILITY_TOL = 1e-9
DEFAULT_VALIDATION_RADIUS = 6


class Array:
    """A map alpha: G -> H into the space of ``rep``, memoized per element."""

    def __init__(
        self,
        rep: Representation,
        func: Callable[[GroupElement], SparseVector] | None = None,
        label: str = "array",
        declared_bounds: Mapping | None = None,
    ):
        self.rep = rep
        self.group: Group = rep.group
        self.label = label
        self.declared_bounds = dict(declared_bounds or {})
        self._func = func
        self._cache: dict[GroupElement, SparseVector] = {}
        self._lock = threading.RLock()

    def _evaluate(self, g: GroupElement) -> SparseVector:
        return self._func(g)

    def __call__(self, g: GroupElement) -> SparseVector:
        v = self._cache.get(g)
        if v is None:
            self.group.check_member(g)
            with self._lock:
                v = self._cache.get(g)
                if v is None:
                    v = self._evaluate(g)
                    self._cache[g] = v
        return v

    def __repr__(self):
        return f"<{type(self).__name__} {self.label} on {self.group.token}>"


class Cocycle(Array):
    """Base for 1-cocycles; ``generator_values`` covers the whole symmetric set S."""

    generator_values: dict[GroupElement, SparseVector]

    def generator_norm_max(self) -> float:
        """C = max over s in S of ||b(s)||."""
        return max(self(s).norm() for s in self.group.generators)


class GeneratedCocycle(Cocycle):
    """Cocycle determined by its values on the defining generators.

    b(s^-1) is derived as -pi_{s^-1} b(s).  Evaluation walks a BFS geodesic,
    b(h s) = b(h) + pi_h b(s), memoizing every prefix.  At construction every
    geodesic predecessor of every element of B(validation_radius) is cross
    checked; disagreement means the data violates a relation of the group.
    """

    def __init__(
        self,
        rep: Representation,
        values: Sequence[SparseVector] | Mapping[GroupElement, SparseVector],
        label: str = "generated",
        validation_radius: int = DEFAULT_VALIDATION_RADIUS,
    ):
        super().__init__(rep, label=label)
        group = self.group
        if isinstance(values, Mapping):
            base = dict(values)
        else:
            values = list(values)
            if len(values) != len(group.basis_generators):
                raise ValueError(
                    f"{group.token} has {len(group.basis_generators)} defining generators, "
                    f"got {len(values)} values"
                )
            base = dict(zip(group.basis_generators, values))
        gv: dict[GroupElement, SparseVector] = {}
        for s, v in base.items():
            group.check_member(s)
            rep.check_vector(v)
            gv[s] = v
        for s in list(gv):
            inv = s.inverse()
            derived = -rep.apply(inv, gv[s])
            if inv in gv:
                gap = gv[inv].distance(derived)
                if gap > CROSS_CHECK_TOL:
                    raise IncompatibleCocycleError(
                        f"incompatible generator data: b({inv!r}) must equal -pi b({s!r}), off by {gap:.3g}"
                    )
            else:
                gv[inv] = derived
        missing = [s for s in group.generators if s not in gv]
        if missing:
            raise ValueError(f"no cocycle value for generators {missing}")
        self.generator_values = gv
        self._cache[group.identity] = SparseVector()
        self.validation_radius = min(validation_radius, group.radius_cap)
        self.validate(self.validation_radius)

    def _evaluate(self, g):
        metric = self.group.metric
        metric.length(g)
        chain = []
        h = g
        while h not in self._cache:
            parent, i = metric.parents[h][0]
            chain.append((h, parent, i))
            h = parent
        gens = self.group.generators
        for h, parent, i in reversed(chain):
            bp = self._cache[parent]
            self._cache[h] = bp + self.rep.apply(parent, self.generator_values[gens[i]])
        return self._cache[g]

    def validate(self, radius: int) -> float:
        """Worst disagreement between geodesic predecessors on B(radius)."""
        worst = 0.0
        gens = self.group.generators
        for g in self.group.ball(radius):
            parents = self.group.metric.parents[g]
            if len(parents) < 2:
                continue
            bg = self(g)
            for parent, i in parents[1:]:
                alt = self(parent) + self.rep.apply(parent, self.generator_values[gens[i]])
                gap = alt.distance(bg)
                worst = max(worst, gap)
                if gap > CROSS_CHECK_TOL:
                    raise IncompatibleCocycleError(
                        f"incompatible generator data: two geodesic words for {g!r} give values "
                        f"differing by {gap:.3g}"
                    )
        return worst


class Coboundary(Cocycle):
    """b(g) = xi - pi_g xi; the affine action fixes ``base_point`` exactly."""

    def __init__(self, rep: Representation, xi: SparseVector, label: str = "coboundary"):
        super().__init__(rep, label=label)
        rep.check_vector(xi)
        self.base_point = xi
        self.generator_values = {s: self(s) for s in self.group.generators}

    def _evaluate(self, g):
        return self.base_point - self.rep.apply(g, self.base_point)


def coboundary(rep: Representation, xi: SparseVector) -> Coboundary:
    return Coboundary(rep, xi)


def cocycle_eval(b: Cocycle, g: GroupElement) -> SparseVector:
    return b(g)


def _require_zd(group: Group, d: int | None = None) -> None:
    if not isinstance(group, FreeAbelian) or (d is not None and group.d != d):
        want = "Z" if d == 1 else "Z^d"
        raise ValueError(f"this construction needs the group {want}, got {group.token}")


def z_generated_cocycle(rep: Representation, xi: SparseVector) -> GeneratedCocycle:
    """The cocycle on Z with b(1) = xi, so b(n) = sum_{k<n} pi_k xi for n >= 1."""
    _require_zd(rep.group, 1)
    return GeneratedCocycle(rep, [xi], label="z-generated")


def zd_compatibility_defects(rep: Representation, xis: Sequence[SparseVector]) -> dict[tuple[int, int], float]:
    """||(pi_{e_i} - 1) xi_j - (pi_{e_j} - 1) xi_i|| for every pair i < j."""
    group = rep.group
    e = group.basis_generators
    out = {}
    for i in range(len(xis)):
        for j in range(i + 1, len(xis)):
            lhs = rep.apply(e[i], xis[j]) - xis[j]
            rhs = rep.apply(e[j], xis[i]) - xis[i]
            out[(i, j)] = lhs.distance(rhs)
    return out


def zd_cocycle(rep: Representation, xis: Sequence[SparseVector]) -> GeneratedCocycle:
    """Cocycle on Z^d with b(e_i) = xi_i, after checking the commutation constraints."""
    group = rep.group
    _require_zd(group)
    if len(xis) != group.d:
        raise ValueError(f"need {group.d} generator values, got {len(xis)}")
    for (i, j), gap in zd_compatibility_defects(rep, xis).items():
        if gap > COMPATIBILITY_TOL:
            raise IncompatibleCocycleError(
                f"incompatible generator data: (pi_e{i} - 1) xi_{j} != (pi_e{j} - 1) xi_{i}, "
                f"defect norm {gap:.3g}"
            )
    return GeneratedCocycle(rep, list(xis), label=f"zd-generated")


class AffineAction:
    """T_g v = pi_g v + b(g)."""

    def __init__(self, cocycle: Cocycle):
        self.cocycle = cocycle
        self.rep = cocycle.rep
        self.group = cocycle.group

    def apply(self, g: GroupElement, v: SparseVector) -> SparseVector:
        return self.rep.apply(g, v) + self.cocycle(g)

    __call__ = apply


def affine_apply(T: AffineAction, g: GroupElement, v: SparseVector) -> SparseVector:
    return T.apply(g, v)


# --- derived arrays -------------------------------------------------------------

def flat(alpha: Array) -> Array:
    """alpha_flat(g) = alpha(g) / |g|, with the value 0 at the identity."""
    length = alpha.group.word_length

    def f(g):
        n = length(g)
        return SparseVector() if n == 0 else alpha(g).scale(1.0 / n)

    return Array(alpha.rep, f, label=f"flat({alpha.label})")


def tensor_array(alpha: Array) -> Array:
    """alpha_tilde(g) = alpha(g) (x) alpha(g) / |g| into pi (x) pi, 0 at the identity."""
    length = alpha.group.word_length

    def f(g):
        n = length(g)
        if n == 0:
            return SparseVector()
        a = alpha(g)
        return tensor(a, a).scale(1.0 / n)

    return Array(tensor_rep(alpha.rep), f, label=f"tensor({alpha.label})")


def tensor_array_bound(alpha: Array, alpha_tilde: Array, g: GroupElement, B_g: float, D: float) -> float:
    """Bounded-equivariance constant for the tensor array at g.

    max{B_g D(|g|+2) + D^2 |g|(|g|+1), ||alpha_tilde(g^-1)||, ||alpha_tilde(g)||}
    """
    n = alpha.group.word_length(g)
    return max(
        B_g * D * (n + 2) + D * D * n * (n + 1),
        alpha_tilde(g.inverse()).norm(),
        alpha_tilde(g).norm(),
    )


def adjoint_star(alpha: Array, rep: Representation | None = None) -> Array:
    """alpha_star(g) = pi_g alpha(g^-1); an involution exchanging arrays and large-scale Lipschitz maps."""
    rep = rep or alpha.rep
    return Array(rep, lambda g: rep.apply(g, alpha(g.inverse())), label=f"star({alpha.label})")


def length_array(rep: Representation, v0: SparseVector) -> Array:
    """alpha(g) = |g| v0; an array into the trivial representation."""
    length = rep.group.word_length
    return Array(rep, lambda g: v0.scale(length(g)), label="length")


def equivariance_defect(alpha: Array, g: GroupElement, sample_radius: int) -> float:
    """max over h in B(sample_radius) of ||pi_g alpha(h) - alpha(gh)||; a lower bound for B_g."""
    return max(alpha.rep.apply(g, alpha(h)).distance(alpha(g * h)) for h in alpha.group.ball(sample_radius))


def lipschitz_defect(f: Array, s: GroupElement, sample_radius: int) -> float:
    """max over g in B(sample_radius) of ||f(g) - f(gs)||."""
    return max(f(g).distance(f(g * s)) for g in f.group.ball(sample_radius))


def leibniz_defect(b: Array, radius: int) -> float:
    """max over g, h in B(radius) of ||b(gh) - pi_g b(h) - b(g)||."""
    ball = b.group.ball(radius)
    worst = 0.0
    for g in ball:
        bg = b(g)
        for h in ball:
            lhs = b(g * h)
            worst = max(worst, lhs.distance(b.rep.apply(g, b(h)) + bg))
    return worst


def inverse_defect(b: Array, radius: int) -> float:
    """max over g in B(radius) of ||b(g^-1) + pi_{g^-1} b(g)||."""
    worst = 0.0
    for g in b.group.ball(radius):
        gi = g.inverse()
        worst = max(worst, (b(gi) + b.rep.apply(gi, b(g))).norm())
    return worst


def linear_growth_ratio(alpha: Array, radius: int) -> float:
    """max over 0 < |k| <= radius of ||alpha(k)|| / |k|."""
    length = alpha.group.word_length
    return max((alpha(k).norm() / length(k) for k in alpha.group.ball(radius) if not k.is_identity()), default=0.0)


def defect_scan_csv(alpha: Array, elements: Iterable[GroupElement], sample_radius: int) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["g", "defect"])
    for g in elements:
        w.writerow([g.to_json(), repr(equivariance_defect(alpha, g, sample_radius))])
    return buf.getvalue()


COCYCLE_TOKENS = ("generated:<vector>[;<vector>...]", "coboundary:<vector>")


def parse_cocycle(text: str, rep: Representation) -> Cocycle:
    """``generated:<v1>;<v2>;...`` (one vector per defining generator) or ``coboundary:<v>``."""
    t = text.strip()
    if t.startswith("coboundary:"):
        return Coboundary(rep, parse_vector(t[len("coboundary:"):], rep.group))
    if t.startswith("generated:"):
        body = t[len("generated:"):]
        vecs = [parse_vector(part, rep.group) for part in body.split(";")]
        if isinstance(rep.group, FreeAbelian):
            if rep.group.d == 1:
                return z_generated_cocycle(rep, vecs[0]) if len(vecs) == 1 else zd_cocycle(rep, vecs)
            return zd_cocycle(rep, vecs)
        return GeneratedCocycle(rep, vecs)
    raise GrammarError(f"unknown cocycle token; expected one of {', '.join(COCYCLE_TOKENS)}", text, 0)
