"""Sparse real vectors, tensor products and orthogonal representations.

Basis indices are plain hashable values:

* ``int`` -- a coordinate of a finite-dimensional space R^n,
* ``GroupElement`` -- a point mass in l^2(G),
* ``(b1, b2)`` tuple -- a tensor basis vector of H (x) H (depth one only).
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Callable, Iterable, Mapping

from .errors import BasisMismatchError, GrammarError
from .groups import FreeAbelian, Group, GroupElement

ZERO_PURGE = 1e-15
GOLDEN_ANGLE = 2 * math.pi * (math.sqrt(5) - 1) / 2


def basis_kind(key) -> str:
    if isinstance(key, tuple):
        return "pair"
    if isinstance(key, GroupElement):
        return "group:" + key.group.token
    if isinstance(key, int) and not isinstance(key, bool):
        return "coord"
    raise BasisMismatchError(f"unsupported basis index {key!r}")


def basis_sort_key(key):
    if isinstance(key, tuple):
        return (2, basis_sort_key(key[0]), basis_sort_key(key[1]))
    if isinstance(key, GroupElement):
        return (1, key.data)
    return (0, key)


class SparseVector:
    """Finitely supported real vector; entries below 1e-15 in magnitude are dropped."""

    __slots__ = ("entries",)

    def __init__(self, entries: Mapping | None = None, purge: bool = True):
        if entries is None:
            self.entries: dict = {}
        elif purge:
            self.entries = {k: float(v) for k, v in entries.items() if abs(v) >= ZERO_PURGE}
        else:
            self.entries = dict(entries)

    # --- introspection -----------------------------------------------------
    @property
    def kind(self) -> str | None:
        for k in self.entries:
            return basis_kind(k)
        return None

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, key) -> float:
        return self.entries.get(key, 0.0)

    def __iter__(self):
        return iter(self.entries)

    def items(self):
        """Entries in canonical basis order."""
        return sorted(self.entries.items(), key=lambda kv: basis_sort_key(kv[0]))

    def is_zero(self) -> bool:
        return not self.entries

    def _check(self, other: "SparseVector") -> None:
        a, b = self.kind, other.kind
        if a is not None and b is not None and a != b:
            raise BasisMismatchError(f"basis mismatch: {a} vs {b}")

    # --- linear algebra ----------------------------------------------------
    def inner(self, other: "SparseVector") -> float:
        self._check(other)
        small, big = (self, other) if len(self.entries) <= len(other.entries) else (other, self)
        get = big.entries.get
        return math.fsum(v * get(k, 0.0) for k, v in small.entries.items())

    def norm(self) -> float:
        return math.sqrt(math.fsum(v * v for v in self.entries.values()))

    def add_scaled(self, c: float, other: "SparseVector") -> "SparseVector":
        self._check(other)
        out = dict(self.entries)
        for k, v in other.entries.items():
            out[k] = out.get(k, 0.0) + c * v
        return SparseVector(out)

    def scale(self, c: float) -> "SparseVector":
        if c == 0:
            return SparseVector()
        return SparseVector({k: c * v for k, v in self.entries.items()})

    def __add__(self, other):
        return self.add_scaled(1.0, other)

    def __sub__(self, other):
        return self.add_scaled(-1.0, other)

    def __neg__(self):
        return self.scale(-1.0)

    def __mul__(self, c: float):
        return self.scale(c)

    __rmul__ = __mul__

    def distance(self, other: "SparseVector") -> float:
        self._check(other)
        keys = set(self.entries) | set(other.entries)
        return math.sqrt(math.fsum((self[k] - other[k]) ** 2 for k in keys))

    def to_json(self) -> list:
        return [[basis_to_json(k), v] for k, v in self.items()]

    def __repr__(self):
        shown = ", ".join(f"{k!r}: {v:.6g}" for k, v in self.items()[:6])
        more = ", ..." if len(self.entries) > 6 else ""
        return f"SparseVector({{{shown}{more}}})"


def inner(u: SparseVector, v: SparseVector) -> float:
    return u.inner(v)


def norm(u: SparseVector) -> float:
    return u.norm()


def add_scaled(u: SparseVector, c: float, v: SparseVector) -> SparseVector:
    return u.add_scaled(c, v)


def delta(key) -> SparseVector:
    return SparseVector({key: 1.0})


def coords(*values: float) -> SparseVector:
    return SparseVector({i: v for i, v in enumerate(values)})


def weighted_sum(terms: Iterable[tuple[float, SparseVector]]) -> SparseVector:
    """sum c_i v_i with every coordinate accumulated by exact (fsum) rounding.

    The result does not depend on the order of ``terms``.
    """
    acc: dict = {}
    kind = None
    for c, v in terms:
        k = v.kind
        if kind is None:
            kind = k
        elif k is not None and k != kind:
            raise BasisMismatchError(f"basis mismatch: {kind} vs {k}")
        for key, x in v.entries.items():
            acc.setdefault(key, []).append(c * x)
    return SparseVector({k: math.fsum(xs) for k, xs in acc.items()})


def tensor(u: SparseVector, v: SparseVector) -> SparseVector:
    """u (x) v over the Pair basis."""
    if u.kind == "pair" or v.kind == "pair":
        raise BasisMismatchError("nested tensor products are not supported")
    return SparseVector({(a, b): x * y for a, x in u.entries.items() for b, y in v.entries.items()})


# --- serialization ------------------------------------------------------------

def basis_to_json(key):
    if isinstance(key, tuple):
        return {"pair": [basis_to_json(key[0]), basis_to_json(key[1])]}
    if isinstance(key, GroupElement):
        return key.to_json()
    return key


def basis_from_json(obj, group: Group | None = None):
    if isinstance(obj, dict):
        a, b = obj["pair"]
        return (basis_from_json(a, group), basis_from_json(b, group))
    if isinstance(obj, list):
        if group is None:
            raise GrammarError("group-point basis index needs a group")
        return group.element_from_json(obj)
    if isinstance(obj, int):
        return obj
    raise GrammarError(f"bad basis index {obj!r}")


def vector_from_json(items, group: Group | None = None) -> SparseVector:
    return SparseVector({basis_from_json(b, group): float(v) for b, v in items})


# --- representations ----------------------------------------------------------

class Representation:
    """An orthogonal representation g -> O(H) acting on SparseVectors.

    ``ergodic_known`` and ``weakly_mixing_known`` are provenance flags set by
    the constructor; they are never inferred numerically.
    """

    name = "representation"
    basis: str | None = None

    def __init__(self, group: Group, ergodic_known: bool, weakly_mixing_known: bool):
        self.group = group
        self.ergodic_known = ergodic_known
        self.weakly_mixing_known = weakly_mixing_known

    def check_vector(self, v: SparseVector) -> None:
        k = v.kind
        if k is not None and self.basis is not None and k != self.basis:
            raise BasisMismatchError(f"{self.name} acts on {self.basis} vectors, got {k}")

    def apply(self, g: GroupElement, v: SparseVector) -> SparseVector:
        self.group.check_member(g)
        self.check_vector(v)
        return self._apply(g, v)

    def _apply(self, g: GroupElement, v: SparseVector) -> SparseVector:
        raise NotImplementedError

    def __call__(self, g: GroupElement, v: SparseVector) -> SparseVector:
        return self.apply(g, v)

    def __repr__(self):
        return f"<{self.name} of {self.group.token}>"


class TrivialRep(Representation):
    name = "trivial"

    def __init__(self, group: Group):
        super().__init__(group, ergodic_known=False, weakly_mixing_known=False)

    def _apply(self, g, v):
        return v


def _near_rational(x: float, max_den: int = 1000, tol: float = 1e-9) -> bool:
    q = Fraction(x).limit_denominator(max_den)
    return abs(float(q) - x) < tol


class RotationRep(Representation):
    """Z^d acting on R^{2d}: e_i rotates the coordinate pair (2i, 2i+1) by angles[i].

    The ergodic flag is set when no angle/2pi is within 1e-9 of a rational
    with denominator at most 1000; finite-dimensional rotations are never
    weakly mixing.
    """

    name = "rotation"
    basis = "coord"

    def __init__(self, group: Group, angles: Iterable[float]):
        if not isinstance(group, FreeAbelian):
            raise BasisMismatchError("rotation representations are defined on Z^d only")
        self.angles = [float(a) for a in angles]
        if len(self.angles) != group.d:
            raise ValueError(f"need {group.d} angles for {group.token}, got {len(self.angles)}")
        ergodic = all(not _near_rational(a / (2 * math.pi)) for a in self.angles)
        super().__init__(group, ergodic_known=ergodic, weakly_mixing_known=False)
        self.dim = 2 * group.d

    def check_vector(self, v):
        super().check_vector(v)
        for k in v.entries:
            if not 0 <= k < self.dim:
                raise BasisMismatchError(f"coordinate {k} outside R^{self.dim}")

    def _apply(self, g, v):
        out = {}
        for i, n in enumerate(g.data):
            x, y = v[2 * i], v[2 * i + 1]
            if x == 0.0 and y == 0.0:
                continue
            t = n * self.angles[i]
            c, s = math.cos(t), math.sin(t)
            out[2 * i] = c * x - s * y
            out[2 * i + 1] = s * x + c * y
        return SparseVector(out)


class RegularRep(Representation):
    """Left-regular representation on l^2(G): (lambda_g v)(h) = v(g^-1 h)."""

    name = "regular"

    def __init__(self, group: Group):
        # all shipped groups are infinite, so lambda is weakly mixing
        super().__init__(group, ergodic_known=True, weakly_mixing_known=True)
        self.basis = "group:" + group.token

    def _apply(self, g, v):
        return SparseVector({g * h: x for h, x in v.entries.items()}, purge=False)


class TensorRep(Representation):
    """The diagonal representation pi (x) pi on the Pair basis."""

    name = "tensor"
    basis = "pair"

    def __init__(self, base: Representation):
        if isinstance(base, TensorRep):
            raise BasisMismatchError("nested tensor representations are not supported")
        super().__init__(
            base.group,
            ergodic_known=base.weakly_mixing_known,
            weakly_mixing_known=base.weakly_mixing_known,
        )
        self.base = base

    def _apply(self, g, v):
        if isinstance(self.base, TrivialRep):
            return v
        if isinstance(self.base, RegularRep):
            return SparseVector({(g * a, g * b): x for (a, b), x in v.entries.items()}, purge=False)
        images: dict = {}

        def image(key):
            if key not in images:
                images[key] = self.base.apply(g, delta(key))
            return images[key]

        acc: dict = {}
        for (a, b), x in v.entries.items():
            for ka, ya in image(a).entries.items():
                for kb, yb in image(b).entries.items():
                    acc.setdefault((ka, kb), []).append(x * ya * yb)
        return SparseVector({k: math.fsum(xs) for k, xs in acc.items()})


def tensor_rep(pi: Representation) -> TensorRep:
    return TensorRep(pi)


def apply(pi: Representation, g: GroupElement, v: SparseVector) -> SparseVector:
    return pi.apply(g, v)


def invariant_defect(pi: Representation, v: SparseVector) -> float:
    """max over generators s of ||pi_s v - v|| / ||v||."""
    n = v.norm()
    if n == 0:
        raise ValueError("invariant defect of the zero vector")
    return max(pi.apply(s, v).distance(v) for s in pi.group.generators) / n


REP_TOKENS = ("trivial", "rotation:<t1,...,td>", "regular")


def parse_angle(text: str) -> float:
    t = text.strip()
    if t == "golden":
        return GOLDEN_ANGLE
    return float(t)


def parse_rep(text: str, group: Group) -> Representation:
    """``trivial``, ``rotation:<t1,...,td>`` (radians, or ``golden``), ``regular``."""
    token = text.strip()
    if token == "trivial":
        return TrivialRep(group)
    if token == "regular":
        return RegularRep(group)
    if token.startswith("rotation:"):
        parts = token[len("rotation:"):].split(",")
        angles = []
        pos = len("rotation:")
        for p in parts:
            try:
                angles.append(parse_angle(p))
            except ValueError:
                raise GrammarError(f"bad angle {p!r}", text, pos) from None
            pos += len(p) + 1
        return RotationRep(group, angles)
    raise GrammarError(f"unknown representation token {token!r}; expected one of {', '.join(REP_TOKENS)}", text, 0)


def parse_vector(text: str, group: Group | None = None) -> SparseVector:
    """Vector grammar: JSON ``[[basis, value], ...]``, ``delta:<basis json>`` or ``coords:x0,x1,...``."""
    import json

    t = text.strip()
    try:
        if t.startswith("delta:"):
            return delta(basis_from_json(json.loads(t[6:]), group))
        if t.startswith("coords:"):
            return coords(*(float(x) for x in t[7:].split(",")))
        return vector_from_json(json.loads(t), group)
    except json.JSONDecodeError as exc:
        raise GrammarError(f"bad vector: {exc.msg}", text, exc.pos) from None
    except (ValueError, TypeError, KeyError) as exc:
        raise GrammarError(f"bad vector: {exc}", text, 0) from None
