"""Finitely generated groups with exact normal forms and BFS word metrics.

Four groups are shipped: free abelian groups Z^d, the integer Heisenberg
group H3(Z), the lamplighter group (Z/2) wr Z and BS(1,2) = Z[1/2] x| Z.
Elements are immutable and hashable; every group carries a lazily grown
word-metric cache built by breadth-first search from the identity.
"""

from __future__ import annotations

import math
import threading
from fractions import Fraction
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

from .errors import (
    BudgetExceededError,
    CapExceededError,
    GrammarError,
    GroupMismatchError,
)

DEFAULT_RADIUS_CAP = 14
DEFAULT_BUDGET = 10**7


class GroupElement:
    """An element of a shipped group, stored by its normal-form fields."""

    __slots__ = ("group", "data", "_hash")

    def __init__(self, group: "Group", data: tuple):
        self.group = group
        self.data = data
        self._hash = hash((group.token, data))

    def __eq__(self, other):
        if not isinstance(other, GroupElement):
            return NotImplemented
        return self.data == other.data and self.group.token == other.group.token

    def __hash__(self):
        return self._hash

    def __lt__(self, other: "GroupElement") -> bool:
        return self.sort_key() < other.sort_key()

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        return self.group.multiply(self, other)

    def inverse(self) -> "GroupElement":
        return self.group.inverse(self)

    def is_identity(self) -> bool:
        return self == self.group.identity

    def sort_key(self) -> tuple:
        return self.data

    def to_json(self) -> list:
        return self.group.element_to_json(self)

    def __repr__(self):
        return f"{self.group.token}{list(self.to_json())}"


@dataclass(frozen=True)
class LengthAxiomReport:
    sample_radius: int
    pairs_checked: int
    identity_violations: int
    symmetry_violation: int
    triangle_violation: int

    @property
    def max_violation(self) -> int:
        return max(self.identity_violations, self.symmetry_violation, self.triangle_violation)


class WordMetric:
    """Word lengths by BFS from the identity, grown one sphere at a time.

    ``parents[g]`` lists every pair ``(h, i)`` with ``g = h * S[i]`` and
    ``|h| = |g| - 1``, i.e. the last step of every geodesic word for ``g``.
    Growth is single-writer (guarded by a lock); values already published
    never change.
    """

    def __init__(self, group: "Group", radius_cap: int, budget: int):
        self.group = group
        self.radius_cap = radius_cap
        self.budget = budget
        e = group.identity
        self.length_of: dict[GroupElement, int] = {e: 0}
        self.spheres: list[list[GroupElement]] = [[e]]
        self.parents: dict[GroupElement, list[tuple[GroupElement, int]]] = {e: []}
        self._lock = threading.Lock()

    @property
    def radius_computed(self) -> int:
        return len(self.spheres) - 1

    def projected_next_sphere(self) -> int:
        k = self.radius_computed
        current = len(self.spheres[k])
        if k == 0:
            return len(self.group.generators)
        prev = len(self.spheres[k - 1])
        return int(math.ceil(current * current / prev))

    def extend_to(self, n: int) -> None:
        if n <= self.radius_computed:
            return
        if n > self.radius_cap:
            raise CapExceededError(
                f"radius {n} exceeds the word-metric cap {self.radius_cap} for {self.group.token}"
            )
        gens = self.group.generators
        with self._lock:
            while self.radius_computed < n:
                projected = len(self.length_of) + self.projected_next_sphere()
                if projected > self.budget:
                    raise BudgetExceededError(
                        f"growing {self.group.token} to radius {self.radius_computed + 1} projects "
                        f"{projected} cached elements, budget is {self.budget}"
                    )
                k = self.radius_computed
                frontier: list[GroupElement] = []
                for g in self.spheres[k]:
                    for i, s in enumerate(gens):
                        h = g * s
                        known = self.length_of.get(h)
                        if known is None:
                            self.length_of[h] = k + 1
                            self.parents[h] = [(g, i)]
                            frontier.append(h)
                        elif known == k + 1:
                            self.parents[h].append((g, i))
                if len(self.length_of) > self.budget:
                    raise BudgetExceededError(
                        f"{self.group.token} ball of radius {k + 1} holds {len(self.length_of)} "
                        f"elements, budget is {self.budget}"
                    )
                self.spheres.append(frontier)

    def length(self, g: GroupElement) -> int:
        self.group.check_member(g)
        found = self.length_of.get(g)
        while found is None:
            if self.radius_computed >= self.radius_cap:
                raise CapExceededError(
                    f"{g!r} is not within the radius cap {self.radius_cap}; raise radius_cap to reach it"
                )
            self.extend_to(self.radius_computed + 1)
            found = self.length_of.get(g)
        return found

    def geodesic(self, g: GroupElement) -> list[int]:
        """Generator indices of one geodesic word for ``g`` (first-discovered parents)."""
        self.length(g)
        word: list[int] = []
        while not g.is_identity():
            g, i = self.parents[g][0]
            word.append(i)
        word.reverse()
        return word

    def geodesics(self, g: GroupElement, limit: int | None = None) -> Iterator[list[int]]:
        """Enumerate geodesic words for ``g`` (all of them, or the first ``limit``)."""
        self.length(g)
        count = 0

        def walk(h: GroupElement, suffix: list[int]):
            nonlocal count
            if limit is not None and count >= limit:
                return
            if h.is_identity():
                count += 1
                yield list(reversed(suffix))
                return
            for parent, i in self.parents[h]:
                suffix.append(i)
                yield from walk(parent, suffix)
                suffix.pop()
                if limit is not None and count >= limit:
                    return

        yield from walk(g, [])


class Group:
    """Base class: a group with a fixed ordered symmetric generating set."""

    token: str = ""
    kind: str = ""

    def __init__(self, radius_cap: int | None = None, budget: int | None = None):
        self._identity = GroupElement(self, self._identity_data())
        self.basis_generators = [GroupElement(self, d) for d in self._basis_generator_data()]
        gens: list[GroupElement] = []
        for s in self.basis_generators:
            gens.append(s)
            inv = s.inverse()
            if inv != s:
                gens.append(inv)
        self.generators = gens
        self.metric = WordMetric(
            self,
            DEFAULT_RADIUS_CAP if radius_cap is None else radius_cap,
            DEFAULT_BUDGET if budget is None else budget,
        )

    # --- normal-form hooks -------------------------------------------------
    def _identity_data(self) -> tuple:
        raise NotImplementedError

    def _basis_generator_data(self) -> list[tuple]:
        raise NotImplementedError

    def _mul(self, a: tuple, b: tuple) -> tuple:
        raise NotImplementedError

    def _inv(self, a: tuple) -> tuple:
        raise NotImplementedError

    def element_to_json(self, g: GroupElement) -> list:
        return list(g.data)

    def element_from_json(self, obj) -> GroupElement:
        raise NotImplementedError

    def projected_ball_size(self, n: int) -> int:
        """Upper bound for |B(n)| without growing the cache (used for dry runs)."""
        k = len(self.generators)
        if k <= 2:
            return 2 * n + 1
        return 1 + k * ((k - 1) ** n - 1) // (k - 2)

    # --- group operations --------------------------------------------------
    @property
    def identity(self) -> GroupElement:
        return self._identity

    @property
    def radius_cap(self) -> int:
        return self.metric.radius_cap

    def check_member(self, g: GroupElement) -> None:
        if not isinstance(g, GroupElement) or g.group.token != self.token:
            raise GroupMismatchError(f"{g!r} is not an element of {self.token}")

    def multiply(self, g: GroupElement, h: GroupElement) -> GroupElement:
        if g.group.token != h.group.token:
            raise GroupMismatchError(f"cannot multiply {g!r} by {h!r}: different groups")
        return GroupElement(self, self._mul(g.data, h.data))

    def inverse(self, g: GroupElement) -> GroupElement:
        self.check_member(g)
        return GroupElement(self, self._inv(g.data))

    def word(self, indices: Iterable[int]) -> GroupElement:
        g = self.identity
        for i in indices:
            g = g * self.generators[i]
        return g

    # --- word metric -------------------------------------------------------
    def word_length(self, g: GroupElement) -> int:
        return self.metric.length(g)

    def ball(self, n: int) -> list[GroupElement]:
        """B(n) in BFS order (sphere by sphere, generator order within a sphere)."""
        if n < 0:
            raise ValueError("radius must be nonnegative")
        self.metric.extend_to(n)
        out: list[GroupElement] = []
        for sphere in self.metric.spheres[: n + 1]:
            out.extend(sphere)
        return out

    def sphere(self, n: int) -> list[GroupElement]:
        if n < 0:
            raise ValueError("radius must be nonnegative")
        self.metric.extend_to(n)
        return list(self.metric.spheres[n])

    def ball_size(self, n: int) -> int:
        self.metric.extend_to(n)
        return sum(len(s) for s in self.metric.spheres[: n + 1])

    def __repr__(self):
        return f"<{type(self).__name__} {self.token}>"


class FreeAbelian(Group):
    kind = "FreeAbelian"

    def __init__(self, d: int, radius_cap: int | None = None, budget: int | None = None):
        if d < 1:
            raise ValueError("rank must be at least 1")
        self.d = d
        self.token = f"zd:{d}"
        super().__init__(radius_cap, budget)

    def _identity_data(self):
        return (0,) * self.d

    def _basis_generator_data(self):
        return [tuple(1 if j == i else 0 for j in range(self.d)) for i in range(self.d)]

    def _mul(self, a, b):
        return tuple(x + y for x, y in zip(a, b))

    def _inv(self, a):
        return tuple(-x for x in a)

    def el(self, *coords) -> GroupElement:
        if len(coords) == 1 and isinstance(coords[0], (tuple, list)):
            coords = tuple(coords[0])
        if len(coords) != self.d:
            raise ValueError(f"expected {self.d} coordinates, got {len(coords)}")
        return GroupElement(self, tuple(int(c) for c in coords))

    def element_from_json(self, obj):
        if isinstance(obj, int) and self.d == 1:
            obj = [obj]
        return self.el(*obj)

    def projected_ball_size(self, n: int) -> int:
        return zd_ball_size(self.d, n)


def zd_ball_size(d: int, n: int) -> int:
    """Number of lattice points of l1-norm at most n in Z^d."""
    return sum(2**k * math.comb(d, k) * math.comb(n, k) for k in range(min(d, n) + 1))


class Heisenberg(Group):
    """H3(Z) as triples with (x,y,z)(x',y',z') = (x+x', y+y', z+z'+xy')."""

    kind = "Heisenberg"
    token = "heisenberg"

    def _identity_data(self):
        return (0, 0, 0)

    def _basis_generator_data(self):
        return [(1, 0, 0), (0, 1, 0)]

    def _mul(self, a, b):
        return (a[0] + b[0], a[1] + b[1], a[2] + b[2] + a[0] * b[1])

    def _inv(self, a):
        return (-a[0], -a[1], -a[2] + a[0] * a[1])

    def el(self, x: int, y: int, z: int) -> GroupElement:
        return GroupElement(self, (int(x), int(y), int(z)))

    def element_from_json(self, obj):
        return self.el(*obj)

    def projected_ball_size(self, n: int) -> int:
        # a word of length n has |x| + |y| <= n and |z| <= n^2
        return min(super().projected_ball_size(n), (2 * n + 1) ** 2 * (2 * n * n + 1))


class Lamplighter2(Group):
    """(Z/2) wr Z as (finite lamp set, cursor) with generators t^{+-1} and a.

    (A, m)(B, n) = (A xor (B + m), m + n); ``a`` toggles the lamp under the cursor.
    """

    kind = "Lamplighter2"
    token = "lamplighter2"

    def _identity_data(self):
        return ((), 0)

    def _basis_generator_data(self):
        return [((), 1), ((0,), 0)]

    def _mul(self, a, b):
        lamps, m = a
        shifted = {x + m for x in b[0]}
        return (tuple(sorted(set(lamps) ^ shifted)), m + b[1])

    def _inv(self, a):
        lamps, m = a
        return (tuple(sorted(x - m for x in lamps)), -m)

    def el(self, lamps: Iterable[int], cursor: int) -> GroupElement:
        return GroupElement(self, (tuple(sorted(set(int(x) for x in lamps))), int(cursor)))

    def element_to_json(self, g):
        return [list(g.data[0]), g.data[1]]

    def element_from_json(self, obj):
        return self.el(obj[0], obj[1])


def dyadic_normalize(num: int, exp: int) -> tuple[int, int]:
    """Lowest-terms form of num * 2**exp: odd numerator, or (0, 0)."""
    if num == 0:
        return (0, 0)
    while num % 2 == 0:
        num //= 2
        exp += 1
    return (num, exp)


def dyadic_add(a: tuple[int, int], b: tuple[int, int]) -> tuple[int, int]:
    if a[0] == 0:
        return b
    if b[0] == 0:
        return a
    m = min(a[1], b[1])
    return dyadic_normalize((a[0] << (a[1] - m)) + (b[0] << (b[1] - m)), m)


def dyadic_from(value) -> tuple[int, int]:
    q = Fraction(value)
    den = q.denominator
    if den & (den - 1):
        raise ValueError(f"{value} is not a dyadic rational")
    return dyadic_normalize(q.numerator, -(den.bit_length() - 1))


def dyadic_to_fraction(a: tuple[int, int]) -> Fraction:
    num, exp = a
    return Fraction(num) * (Fraction(2) ** exp)


class BS12(Group):
    """BS(1,2) = Z[1/2] x| Z as (a, k) with (a,k)(b,l) = (a + 2^k b, k + l).

    The dyadic ``a`` is stored as (odd numerator or 0, exponent); data is the
    flat triple (numerator, exponent, k).
    """

    kind = "BS12"
    token = "bs12"

    def _identity_data(self):
        return (0, 0, 0)

    def _basis_generator_data(self):
        return [(1, 0, 0), (0, 0, 1)]

    def _mul(self, a, b):
        num, exp = dyadic_add((a[0], a[1]), (b[0], b[1] + a[2]) if b[0] else (0, 0))
        return (num, exp, a[2] + b[2])

    def _inv(self, a):
        if a[0] == 0:
            return (0, 0, -a[2])
        return (-a[0], a[1] - a[2], -a[2])

    def el(self, a, k: int) -> GroupElement:
        num, exp = dyadic_from(a)
        return GroupElement(self, (num, exp, int(k)))

    def translation(self, g: GroupElement) -> Fraction:
        return dyadic_to_fraction((g.data[0], g.data[1]))

    def element_from_json(self, obj):
        num, exp, k = obj
        num, exp = dyadic_normalize(int(num), int(exp))
        return GroupElement(self, (num, exp, int(k)))


GROUP_TOKENS = ("zd:<d>", "heisenberg", "lamplighter2", "bs12")


def parse_group(text: str, radius_cap: int | None = None, budget: int | None = None) -> Group:
    """Build a group from its selection string: ``zd:<d>``, ``heisenberg``, ``lamplighter2``, ``bs12``."""
    token = text.strip()
    if token.startswith("zd:"):
        rest = token[3:]
        if not rest.isdigit() or int(rest) < 1:
            raise GrammarError("rank after 'zd:' must be a positive integer", text, 3)
        return FreeAbelian(int(rest), radius_cap, budget)
    table = {"heisenberg": Heisenberg, "lamplighter2": Lamplighter2, "bs12": BS12}
    if token not in table:
        raise GrammarError(f"unknown group token {token!r}; expected one of {', '.join(GROUP_TOKENS)}", text, 0)
    return table[token](radius_cap, budget)


# --- module-level operations ----------------------------------------------

def multiply(g: GroupElement, h: GroupElement) -> GroupElement:
    return g.group.multiply(g, h)


def inverse(g: GroupElement) -> GroupElement:
    return g.group.inverse(g)


def word_length(g: GroupElement) -> int:
    return g.group.word_length(g)


def canonical_order(elements: Iterable[GroupElement]) -> list[GroupElement]:
    """Sort by (word length, normal form): the tie-break order used everywhere."""
    return sorted(elements, key=lambda g: (g.group.word_length(g), g.sort_key()))


def check_length_axioms(group: Group, sample_radius: int) -> LengthAxiomReport:
    """Exhaustively test the length-function axioms over B(r) x B(r)."""
    group.metric.extend_to(2 * sample_radius)
    ball = group.ball(sample_radius)
    length = group.word_length
    identity_violations = 0
    symmetry = 0
    triangle = 0
    for g in ball:
        lg = length(g)
        if (lg == 0) != g.is_identity():
            identity_violations += 1
        symmetry = max(symmetry, abs(length(g.inverse()) - lg))
        for h in ball:
            triangle = max(triangle, length(g * h) - lg - length(h))
    return LengthAxiomReport(sample_radius, len(ball) ** 2, identity_violations, symmetry, triangle)


def growth_exponent(group: Group, n_max: int) -> list[tuple[int, float]]:
    """The sequence (n, log|B(n)| / log n) for 2 <= n <= n_max."""
    if n_max < 2:
        raise ValueError("n_max must be at least 2")
    group.metric.extend_to(n_max)
    out = []
    for n in range(2, n_max + 1):
        out.append((n, math.log(group.ball_size(n)) / math.log(n)))
    return out


def elements_from_json(group: Group, items: Sequence) -> list[GroupElement]:
    return [group.element_from_json(x) for x in items]
