"""Finite subsets of a group: word balls, Omega-interior/boundary, translates, windowed set limits."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Iterable, Sequence

from .groups import ContextMismatchError, Element, GeneratorSet, Group, Payload


class FiniteSubset:
    """Duplicate-free tuple of payloads in canonical order, bound to one group."""

    def __init__(self, group: Group, elements: Iterable = (), *, _sorted: bool = False):
        self.group = group
        if _sorted:
            self.items = tuple(elements)
        else:
            ps = set()
            for x in elements:
                if isinstance(x, Element):
                    if x.group != group:
                        raise ContextMismatchError(f"{x!r} does not belong to {group.spec}")
                    ps.add(x.payload)
                else:
                    ps.add(group.check(x))
            self.items = tuple(sorted(ps, key=group.key))

    @classmethod
    def parse(cls, group: Group, literals: Iterable[str]) -> "FiniteSubset":
        return cls(group, (group.parse(s) for s in literals))

    @classmethod
    def empty(cls, group: Group) -> "FiniteSubset":
        return cls(group, (), _sorted=True)

    def _from_set(self, ps) -> "FiniteSubset":
        return FiniteSubset(self.group, sorted(ps, key=self.group.key), _sorted=True)

    @cached_property
    def members(self) -> frozenset:
        return frozenset(self.items)

    @cached_property
    def index(self) -> dict:
        return {p: i for i, p in enumerate(self.items)}

    def elements(self) -> list[Element]:
        return [Element(self.group, p) for p in self.items]

    def __len__(self):
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def __contains__(self, x) -> bool:
        if isinstance(x, Element):
            return x.group == self.group and x.payload in self.members
        return x in self.members

    def __eq__(self, other):
        return isinstance(other, FiniteSubset) and self.group == other.group and self.items == other.items

    def __hash__(self):
        return hash((self.group, self.items))

    def __repr__(self):
        shown = ", ".join(self.group.format(p) for p in self.items[:8])
        more = ", ..." if len(self.items) > 8 else ""
        return f"FiniteSubset({self.group.spec}, {{{shown}{more}}}, size={len(self)})"

    def _other(self, other: "FiniteSubset") -> frozenset:
        if other.group != self.group:
            raise ContextMismatchError(f"{self.group.spec} vs {other.group.spec}")
        return other.members

    def __or__(self, other):
        return self._from_set(self.members | self._other(other))

    def __and__(self, other):
        o = self._other(other)
        return FiniteSubset(self.group, (p for p in self.items if p in o), _sorted=True)

    def __sub__(self, other):
        o = self._other(other)
        return FiniteSubset(self.group, (p for p in self.items if p not in o), _sorted=True)

    def __le__(self, other):
        return self.members <= self._other(other)

    def __ge__(self, other):
        return self.members >= self._other(other)

    def isdisjoint(self, other) -> bool:
        return self.members.isdisjoint(self._other(other))

    def dumps(self) -> str:
        """One element literal per line, canonical order."""
        return "".join(self.group.format(p) + "\n" for p in self.items)

    @classmethod
    def loads(cls, group: Group, text: str) -> "FiniteSubset":
        return cls.parse(group, (ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")))


def union(group: Group, sets: Iterable[FiniteSubset]) -> FiniteSubset:
    acc: set = set()
    for s in sets:
        acc |= s.members
    return FiniteSubset(group, sorted(acc, key=group.key), _sorted=True)


class BallCache:
    """Word balls Omega_0 = {e} <= Omega_1 <= ... built by BFS layer extension."""

    def __init__(self, gens: GeneratorSet, cap: int | None = None):
        self.gens = gens
        self.group = gens.group
        self.cap = self.group.radius_cap if cap is None else cap
        self._table = gens.table()
        self._balls: dict[int, FiniteSubset] = {}

    def ball(self, n: int) -> FiniteSubset:
        if n < 0:
            raise ValueError("radius must be non-negative")
        b = self._balls.get(n)
        if b is None:
            self._table.grow_to(n, cap=self.cap)
            items = []
            for sphere in self._table.spheres[: n + 1]:
                items.extend(sphere)
            items.sort(key=self.group.key)
            b = FiniteSubset(self.group, items, _sorted=True)
            self._balls[n] = b
        return b

    def sphere(self, n: int) -> FiniteSubset:
        self._table.grow_to(n, cap=self.cap)
        return FiniteSubset(self.group, sorted(self._table.spheres[n], key=self.group.key), _sorted=True)

    def contains(self, p: Payload, n: int) -> bool:
        """Is p in Omega_n (grows the table only as far as n)."""
        self._table.grow_to(n, cap=max(self.cap, n))
        d = self._table.dist.get(p)
        return d is not None and d <= n

    @property
    def radius(self) -> int:
        return self._table.radius


@lru_cache(maxsize=None)
def ball_cache(gens: GeneratorSet) -> BallCache:
    return BallCache(gens)


def ball(cache_or_gens, n: int) -> FiniteSubset:
    cache = cache_or_gens if isinstance(cache_or_gens, BallCache) else ball_cache(cache_or_gens)
    return cache.ball(n)


def _gens(A: FiniteSubset, omega: GeneratorSet | None) -> GeneratorSet:
    if omega is None:
        return GeneratorSet.standard(A.group)
    if omega.group != A.group:
        raise ContextMismatchError(f"{A.group.spec} vs generators of {omega.group.spec}")
    return omega


def omega_interior(A: FiniteSubset, omega: GeneratorSet | None = None) -> FiniteSubset:
    """Intersection over omega of A and omega^{-1}A."""
    gens = _gens(A, omega)
    g = A.group
    mem = A.members
    keep = mem
    for w in gens.letters:
        winv = g.inv(w)
        # A & w^{-1} A, skipping w = e
        shifted = {g.mul(winv, a) for a in A.items}
        keep = keep & shifted
    return FiniteSubset(g, (p for p in A.items if p in keep), _sorted=True)


def omega_boundary(A: FiniteSubset, omega: GeneratorSet | None = None) -> FiniteSubset:
    return A - omega_interior(A, omega)


def translate_right(A: FiniteSubset, s) -> FiniteSubset:
    g = A.group
    s = _payload(g, s)
    return FiniteSubset(g, sorted((g.mul(a, s) for a in A.items), key=g.key), _sorted=True)


def translate_left(A: FiniteSubset, s) -> FiniteSubset:
    g = A.group
    s = _payload(g, s)
    return FiniteSubset(g, sorted((g.mul(s, a) for a in A.items), key=g.key), _sorted=True)


def _payload(g: Group, s) -> Payload:
    if isinstance(s, Element):
        if s.group != g:
            raise ContextMismatchError(f"{s!r} does not belong to {g.spec}")
        return s.payload
    return g.check(s)


@dataclass(frozen=True)
class WindowLimit:
    """Finite-horizon set limits of a sequence observed through a window.

    ``limsup`` holds the points met at least once in the tail (the last
    ceil(m/2) terms), ``liminf`` the points met in every tail term.  When the
    windowed sequence is monotone the two are exact on the window.
    """

    limsup: FiniteSubset
    liminf: FiniteSubset
    n_range: tuple[int, int]
    window: FiniteSubset
    tail_start: int
    monotone: str  # "increasing", "decreasing", "constant" or "none"

    @property
    def converged(self) -> bool:
        return self.limsup == self.liminf

    @property
    def finite_horizon(self) -> bool:
        return True


def window_limits(seq: Sequence[FiniteSubset], window: FiniteSubset, start: int = 1) -> WindowLimit:
    if not seq:
        raise ValueError("empty set sequence")
    g = window.group
    w = window.members
    terms = [s.members & w for s in seq]
    m = len(terms)
    t0 = m - math.ceil(m / 2)
    tail = terms[t0:]
    sup = frozenset().union(*tail)
    inf = frozenset(w).intersection(*tail)
    inc = all(a <= b for a, b in zip(terms, terms[1:]))
    dec = all(a >= b for a, b in zip(terms, terms[1:]))
    mono = "constant" if inc and dec else "increasing" if inc else "decreasing" if dec else "none"
    mk = lambda ps: FiniteSubset(g, sorted(ps, key=g.key), _sorted=True)  # noqa: E731
    return WindowLimit(mk(sup), mk(inf), (start, start + m - 1), window, start + t0, mono)


def set_limsup_window(seq: Sequence[FiniteSubset], window: FiniteSubset) -> FiniteSubset:
    return window_limits(seq, window).limsup


def set_liminf_window(seq: Sequence[FiniteSubset], window: FiniteSubset) -> FiniteSubset:
    return window_limits(seq, window).liminf
