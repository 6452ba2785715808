"""Exact arithmetic for the built-in groups Z^N, F_N and the discrete Heisenberg group.

Group elements are carried around as canonical payload tuples:

* ``Z^N``: integer vector of length N,
* ``F_N``: reduced word as a tuple of signed generator indices (``2`` is u2,
  ``-2`` is u2 inverse),
* ``H3``: integer triple ``(a, b, c)`` standing for the matrix
  ``[[1, a, c], [0, 1, b], [0, 0, 1]]``.

:class:`Element` wraps a payload together with its group for the public,
context-checked API; the set and operator modules work on bare payloads.
"""
from __future__ import annotations

import os
import re
import threading
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable

Payload = tuple

DEFAULT_BFS_CAP = 64
MAX_TABLE_SIZE = 5_000_000


class GroupError(Exception):
    pass


class ContextMismatchError(GroupError):
    pass


class NotGeneratedError(GroupError):
    pass


class RadiusCapError(GroupError):
    pass


class LiteralError(GroupError, ValueError):
    pass


def _zkey(c: int) -> int:
    # 0, 1, -1, 2, -2, ... -> 0, 1, 2, 3, 4, ...
    return 2 * c - 1 if c > 0 else -2 * c


class Group:
    """Base class; concrete groups are frozen dataclasses."""

    kind = "?"
    sub_exponential = True

    # -- payload level -------------------------------------------------
    def identity(self) -> Payload:
        raise NotImplementedError

    def mul(self, p: Payload, q: Payload) -> Payload:
        raise NotImplementedError

    def inv(self, p: Payload) -> Payload:
        raise NotImplementedError

    def key(self, p: Payload) -> tuple:
        raise NotImplementedError

    def check(self, p) -> Payload:
        """Validate and normalize a payload; raise ContextMismatchError if foreign."""
        raise NotImplementedError

    def standard_generators(self) -> tuple[Payload, ...]:
        raise NotImplementedError

    def standard_length(self, p: Payload) -> int:
        raise NotImplementedError

    def parse(self, text: str) -> Payload:
        raise NotImplementedError

    def format(self, p: Payload) -> str:
        raise NotImplementedError

    # -- conveniences --------------------------------------------------
    @property
    def growth(self) -> str:
        return "sub-exponential" if self.sub_exponential else "exponential"

    @property
    def radius_cap(self) -> int:
        env = os.environ.get("FSM_RADIUS_CAP")
        if env:
            return int(env)
        return 12 if self.kind == "F" else 64

    @property
    def spec(self) -> str:
        raise NotImplementedError

    def element(self, p) -> "Element":
        return Element(self, self.check(p))

    def e(self) -> "Element":
        return Element(self, self.identity())

    def generators(self) -> "GeneratorSet":
        return GeneratorSet.standard(self)

    def sort(self, payloads: Iterable[Payload]) -> tuple[Payload, ...]:
        return tuple(sorted(set(payloads), key=self.key))

    def __str__(self) -> str:
        return self.spec


@dataclass(frozen=True)
class IntegerLattice(Group):
    rank: int

    kind = "Z^N"

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError("rank must be positive")

    @property
    def spec(self):
        return f"Z^N:{self.rank}"

    def identity(self):
        return (0,) * self.rank

    def mul(self, p, q):
        return tuple(a + b for a, b in zip(p, q))

    def inv(self, p):
        return tuple(-a for a in p)

    def key(self, p):
        return (sum(abs(a) for a in p), tuple(_zkey(a) for a in p))

    def check(self, p):
        if isinstance(p, int) and self.rank == 1:
            p = (p,)
        if not isinstance(p, tuple) or len(p) != self.rank or not all(isinstance(a, int) for a in p):
            raise ContextMismatchError(f"{p!r} is not an element of {self.spec}")
        return p

    def standard_generators(self):
        gens = []
        for i in range(self.rank):
            for s in (1, -1):
                g = [0] * self.rank
                g[i] = s
                gens.append(tuple(g))
        return tuple(sorted(gens, key=self.key))

    def standard_length(self, p):
        return sum(abs(a) for a in p)

    def parse(self, text):
        t = text.strip()
        if t.startswith("(") and t.endswith(")"):
            t = t[1:-1]
        try:
            vals = tuple(int(s) for s in t.split(","))
        except ValueError:
            raise LiteralError(f"bad Z^N literal {text!r}") from None
        if len(vals) != self.rank:
            raise LiteralError(f"literal {text!r} has {len(vals)} coordinates, expected {self.rank}")
        return vals

    def format(self, p):
        return "(" + ",".join(str(a) for a in p) + ")"


_WORD_TOKEN = re.compile(r"u(\d+)('?)")


@dataclass(frozen=True)
class FreeGroup(Group):
    rank: int

    kind = "F"
    sub_exponential = False

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError("rank must be positive")

    @property
    def spec(self):
        return f"F:{self.rank}"

    def identity(self):
        return ()

    def mul(self, p, q):
        # cancel the longest suffix of p against the prefix of q
        i = 0
        n = min(len(p), len(q))
        while i < n and p[-1 - i] == -q[i]:
            i += 1
        return p[: len(p) - i] + q[i:]

    def inv(self, p):
        return tuple(-g for g in reversed(p))

    def key(self, p):
        return (len(p), tuple(2 * g - 2 if g > 0 else -2 * g - 1 for g in p))

    def check(self, p):
        if not isinstance(p, tuple) or not all(isinstance(g, int) and 0 < abs(g) <= self.rank for g in p):
            raise ContextMismatchError(f"{p!r} is not an element of {self.spec}")
        return reduce_word(p)

    def standard_generators(self):
        return tuple((s * g,) for g in range(1, self.rank + 1) for s in (1, -1))

    def standard_length(self, p):
        return len(p)

    def parse(self, text):
        t = re.sub(r"[\s*·.]", "", text)
        if t in ("", "e", "1"):
            return ()
        letters = []
        pos = 0
        for m in _WORD_TOKEN.finditer(t):
            if m.start() != pos:
                break
            g = int(m.group(1))
            if not 1 <= g <= self.rank:
                raise LiteralError(f"generator u{g} out of range in {text!r}")
            letters.append(-g if m.group(2) else g)
            pos = m.end()
        if pos != len(t):
            raise LiteralError(f"bad F_N literal {text!r}")
        return reduce_word(letters)

    def format(self, p):
        if not p:
            return "e"
        return "".join(f"u{abs(g)}" + ("'" if g < 0 else "") for g in p)


def reduce_word(letters: Iterable[int]) -> tuple[int, ...]:
    """Free reduction by a stack pass."""
    out: list[int] = []
    for g in letters:
        if out and out[-1] == -g:
            out.pop()
        else:
            out.append(g)
    return tuple(out)


@dataclass(frozen=True)
class Heisenberg(Group):
    """Discrete Heisenberg group, (a,b,c)(a',b',c') = (a+a', b+b', c+c'+ab')."""

    kind = "H3"

    @property
    def rank(self):
        return 2

    @property
    def spec(self):
        return "H3"

    def identity(self):
        return (0, 0, 0)

    def mul(self, p, q):
        return (p[0] + q[0], p[1] + q[1], p[2] + q[2] + p[0] * q[1])

    def inv(self, p):
        return (-p[0], -p[1], -p[2] + p[0] * p[1])

    def key(self, p):
        return (self.standard_length(p), tuple(_zkey(a) for a in p))

    def check(self, p):
        if not isinstance(p, tuple) or len(p) != 3 or not all(isinstance(a, int) for a in p):
            raise ContextMismatchError(f"{p!r} is not an element of H3")
        return p

    def standard_generators(self):
        return ((1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0))

    def standard_length(self, p):
        return layer_table(self, self.standard_generators()).length(p, cap=self.radius_cap)

    def parse(self, text):
        t = text.strip()
        if t.startswith("(") and t.endswith(")"):
            t = t[1:-1]
        try:
            vals = tuple(int(s) for s in t.split(","))
        except ValueError:
            raise LiteralError(f"bad H3 literal {text!r}") from None
        if len(vals) != 3:
            raise LiteralError(f"H3 literal {text!r} needs three integers")
        return vals

    def format(self, p):
        return "(" + ",".join(str(a) for a in p) + ")"


_SPEC = re.compile(r"^\s*(?:Z\^N:(\d+)|Z\^(\d+)|Z|F:(\d+)|F(\d+)|H3)\s*$")


def parse_group(spec: str) -> Group:
    """Parse ``Z^N:<N>``, ``F:<N>`` or ``H3``."""
    m = _SPEC.match(spec)
    if not m:
        raise LiteralError(f"unknown group spec {spec!r}")
    if spec.strip() == "H3":
        return Heisenberg()
    if spec.strip() == "Z":
        return IntegerLattice(1)
    z = m.group(1) or m.group(2)
    if z:
        return IntegerLattice(int(z))
    return FreeGroup(int(m.group(3) or m.group(4)))


class Element:
    """A group element bound to its group; supports ``*``, ``~`` and ordering."""

    __slots__ = ("group", "payload")

    def __init__(self, group: Group, payload: Payload):
        self.group = group
        self.payload = payload

    def __mul__(self, other: "Element") -> "Element":
        return multiply(self, other)

    def __invert__(self) -> "Element":
        return inverse(self)

    def __eq__(self, other):
        return isinstance(other, Element) and self.group == other.group and self.payload == other.payload

    def __hash__(self):
        return hash((self.group, self.payload))

    def __lt__(self, other: "Element"):
        _same(self, other)
        return self.group.key(self.payload) < other.group.key(other.payload)

    def __repr__(self):
        return f"Element({self.group.spec}, {self.group.format(self.payload)})"

    def __str__(self):
        return self.group.format(self.payload)


def _same(x: Element, y: Element) -> Group:
    if x.group != y.group:
        raise ContextMismatchError(f"operands live in {x.group.spec} and {y.group.spec}")
    return x.group


def multiply(x: Element, y: Element) -> Element:
    g = _same(x, y)
    return Element(g, g.mul(x.payload, y.payload))


def inverse(x: Element) -> Element:
    return Element(x.group, x.group.inv(x.payload))


def canonical_key(x: Element) -> tuple:
    """Total order key: word length for the standard generators, then lexicographic."""
    return x.group.key(x.payload)


@dataclass(frozen=True)
class GeneratorSet:
    """Finite set Omega containing e; its words of length <= n form the balls."""

    group: Group
    elements: tuple
    user_supplied: bool = False

    def __post_init__(self):
        e = self.group.identity()
        if e not in self.elements:
            raise ValueError("generator set must contain the identity")
        object.__setattr__(self, "elements", self.group.sort(self.group.check(p) for p in self.elements))

    @classmethod
    def standard(cls, group: Group) -> "GeneratorSet":
        return _standard(group)

    @classmethod
    def from_literals(cls, group: Group, literals: Iterable[str]) -> "GeneratorSet":
        elems = {group.parse(s) for s in literals}
        elems.add(group.identity())
        return cls(group, tuple(elems), user_supplied=True)

    @property
    def letters(self) -> tuple:
        """Omega without the identity, in canonical order."""
        e = self.group.identity()
        return tuple(p for p in self.elements if p != e)

    @property
    def symmetric(self) -> bool:
        s = set(self.elements)
        return all(self.group.inv(p) in s for p in s)

    @property
    def is_standard(self) -> bool:
        return self.elements == _standard(self.group).elements

    def table(self) -> "LayerTable":
        return layer_table(self.group, self.letters)

    def __contains__(self, x) -> bool:
        p = x.payload if isinstance(x, Element) else x
        return p in self.elements

    def __iter__(self):
        return iter(self.elements)

    def __len__(self):
        return len(self.elements)


@lru_cache(maxsize=None)
def _standard(group: Group) -> GeneratorSet:
    return GeneratorSet(group, (group.identity(),) + group.standard_generators())


@dataclass(frozen=True)
class GroupContext:
    group: Group
    generators: GeneratorSet

    @classmethod
    def from_spec(cls, spec: str, generator_literals=None) -> "GroupContext":
        g = parse_group(spec)
        if generator_literals:
            return cls(g, GeneratorSet.from_literals(g, generator_literals))
        return cls(g, GeneratorSet.standard(g))

    @property
    def growth(self) -> str:
        return self.group.growth

    @property
    def rank(self) -> int:
        return self.group.rank

    @property
    def kind(self) -> str:
        return self.group.kind

    @property
    def generation_unchecked(self) -> bool:
        return self.generators.user_supplied and not self.generators.is_standard


class LayerTable:
    """BFS distances from e in the Cayley graph of Omega, grown one layer at a time.

    Layer n is the sphere Omega_n minus Omega_{n-1}; Omega_n = Omega * Omega_{n-1}.
    """

    def __init__(self, group: Group, letters: tuple):
        self.group = group
        self.letters = letters
        e = group.identity()
        self.dist = {e: 0}
        self.spheres = [(e,)]
        self._lock = threading.Lock()

    @property
    def radius(self) -> int:
        return len(self.spheres) - 1

    def grow_to(self, n: int, cap: int | None = None) -> None:
        cap = self.group.radius_cap if cap is None else cap
        if n > cap:
            raise RadiusCapError(f"radius {n} exceeds cap {cap} for {self.group.spec}")
        with self._lock:
            mul = self.group.mul
            letters = self.letters
            dist = self.dist
            while self.radius < n:
                r = self.radius + 1
                new = []
                for x in self.spheres[-1]:
                    for w in letters:
                        y = mul(w, x)
                        if y not in dist:
                            dist[y] = r
                            new.append(y)
                if len(dist) > MAX_TABLE_SIZE:
                    raise RadiusCapError(f"ball of radius {r} exceeds {MAX_TABLE_SIZE} elements")
                self.spheres.append(tuple(new))

    def length(self, p: Payload, cap: int | None = None) -> int:
        cap = DEFAULT_BFS_CAP if cap is None else cap
        d = self.dist.get(p)
        while d is None:
            if self.radius >= cap:
                raise NotGeneratedError(f"element not reached within radius {cap}")
            if self.radius > 0 and not self.spheres[-1]:
                raise NotGeneratedError("element not in the semigroup generated by Omega")
            self.grow_to(self.radius + 1, cap=max(cap, self.radius + 1))
            d = self.dist.get(p)
        return d


@lru_cache(maxsize=None)
def layer_table(group: Group, letters: tuple) -> LayerTable:
    return LayerTable(group, letters)


def payload_length(p: Payload, gens: GeneratorSet, cap: int | None = None) -> int:
    g = gens.group
    if gens.is_standard and g.kind != "H3":
        return g.standard_length(p)
    return gens.table().length(p, cap=cap)


def word_length(x: Element, gens: GeneratorSet | None = None, cap: int | None = None) -> int:
    """Smallest n with x in Omega_n (closed form for standard generators of Z^N and F_N)."""
    if gens is None:
        gens = GeneratorSet.standard(x.group)
    elif gens.group != x.group:
        raise ContextMismatchError(f"{x!r} and generators of {gens.group.spec}")
    return payload_length(x.payload, gens, cap)
