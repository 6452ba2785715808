"""Geodesic paths, limit sets of Omega_n eta_n on windows, and stability certificates built from them."""
from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .groups import ContextMismatchError, Element, GeneratorSet, Group, Payload, payload_length
from .operators import BandOperator, SectionMatrix, band_ambient, band_section
from .sets import FiniteSubset, ball_cache, window_limits
from .spectral import TAU_STAB, invertibility_test, sigma_min


class GeodesicViolationError(ValueError):
    def __init__(self, index: int, msg: str = ""):
        self.index = index
        super().__init__(msg or f"sphere condition fails at n={index}")


class InsufficientHorizonError(ValueError):
    pass


class UnsupportedSectionsError(ValueError):
    pass


class DecompositionError(ValueError):
    pass


class StabilizationHorizonError(RuntimeError):
    pass


def _p(g: Group, x) -> Payload:
    if isinstance(x, Element):
        if x.group != g:
            raise ContextMismatchError(f"{x!r} not in {g.spec}")
        return x.payload
    return g.check(x)


@dataclass(frozen=True)
class GeodesicPath:
    """Letters w_1..w_m of Omega minus e whose prefixes nu_n = w_1...w_n satisfy |nu_n| = n."""

    gens: GeneratorSet
    letters: tuple

    @property
    def group(self) -> Group:
        return self.gens.group

    def __len__(self):
        return len(self.letters)

    @property
    def prefixes(self) -> tuple:
        """nu_0 = e, nu_1, ..., nu_m."""
        g = self.group
        out = [g.identity()]
        for w in self.letters:
            out.append(g.mul(out[-1], w))
        return tuple(out)

    @property
    def inverse_prefixes(self) -> tuple:
        """eta_n = nu_n^{-1}."""
        return tuple(self.group.inv(p) for p in self.prefixes)

    def describe(self) -> str:
        return " ".join(self.group.format(w) for w in self.letters)


def validate_geodesic(letters: Sequence, gens: GeneratorSet | None = None, group: Group | None = None) -> GeodesicPath:
    if gens is None:
        if group is None:
            raise ValueError("need generators or a group")
        gens = GeneratorSet.standard(group)
    g = gens.group
    ls = tuple(_p(g, w) for w in letters)
    e = g.identity()
    nu = e
    for n, w in enumerate(ls, start=1):
        if w == e or w not in gens:
            raise GeodesicViolationError(n, f"letter {g.format(w)} at n={n} is not in Omega minus e")
        nu = g.mul(nu, w)
        if payload_length(nu, gens, cap=max(n + 1, 64)) != n:
            raise GeodesicViolationError(n)
    return GeodesicPath(gens, ls)


def periodic_path(pattern: Sequence, m: int, gens: GeneratorSet) -> GeodesicPath:
    """Repeat ``pattern`` cyclically to length m and validate."""
    if not pattern:
        raise ValueError("empty pattern")
    return validate_geodesic([pattern[i % len(pattern)] for i in range(m)], gens)


def periodic_geodesics(gens: GeneratorSet, period: int, m: int) -> list[GeodesicPath]:
    """All geodesic paths of length m with letter period <= ``period``, deduplicated, in enumeration order."""
    seen = set()
    out = []
    for k in range(1, period + 1):
        for pat in itertools.product(gens.letters, repeat=k):
            try:
                path = periodic_path(pat, m, gens)
            except GeodesicViolationError:
                continue
            if path.letters not in seen:
                seen.add(path.letters)
                out.append(path)
    return out


@dataclass(frozen=True)
class LimitSetWindow:
    """(union over n <= horizon of Omega_n eta_n) restricted to Omega_R."""

    path: GeodesicPath
    radius: int
    horizon: int
    realized: FiniteSubset
    window: FiniteSubset
    monotone: bool
    first_hit: dict = field(default_factory=dict, compare=False, repr=False)


def _member_n(x: Payload, nu: Payload, n: int, gens: GeneratorSet) -> bool:
    """x in Omega_n nu^{-1}  <=>  |x nu| <= n."""
    g = gens.group
    return payload_length(g.mul(x, nu), gens, cap=max(64, 3 * n + 3)) <= n


def limit_set(path: GeodesicPath, R: int, horizon: int | None = None) -> LimitSetWindow:
    m = len(path) if horizon is None else horizon
    if m > len(path):
        raise InsufficientHorizonError(f"horizon {m} exceeds path length {len(path)}")
    if m < 2 * R:
        raise InsufficientHorizonError(f"path horizon {m} < 2R = {2 * R}")
    gens = path.gens
    W = ball_cache(gens).ball(R)
    nus = path.prefixes[: m + 1]
    hit = {}
    mono = True
    for x in W.items:
        seq = [_member_n(x, nus[n], n, gens) for n in range(m + 1)]
        # window-scale check of Omega_n eta_n <= Omega_{n+1} eta_{n+1}
        if any(a and not b for a, b in zip(seq, seq[1:])):
            mono = False
        if any(seq):
            hit[x] = seq.index(True)
    realized = FiniteSubset(path.group, (p for p in W.items if p in hit), _sorted=True)
    return LimitSetWindow(path, R, m, realized, W, mono, hit)


def window_stable(path: GeodesicPath, R: int) -> bool:
    """limit_set at horizons 2R and the full path length agree on Omega_R."""
    return limit_set(path, R, 2 * R).realized == limit_set(path, R).realized


def compression(A: BandOperator, L: LimitSetWindow) -> SectionMatrix:
    """Square section of A on the realized limit-set window."""
    return band_section(A, L.realized)


def lower_bound_section(A: BandOperator, Y: FiniteSubset, frame: FiniteSubset | None = None) -> float:
    """min ||P_frame A x|| over unit x supported on Y, where frame defaults to Y plus one band width."""
    rows = frame if frame is not None else band_ambient([A], Y)
    return sigma_min(band_section(A, Y, rows=rows))


def whole_space_proxy(A: BandOperator, Y: FiniteSubset) -> dict:
    """Bounded-below constants of A and A* on vectors supported in Y, with nothing truncated on output."""
    lo = lower_bound_section(A, Y)
    lo_adj = lower_bound_section(A.adjoint(), Y)
    s = min(lo, lo_adj)
    return {"sigma_min": s, "sigma_min_A": lo, "sigma_min_adjoint": lo_adj,
            "square_sigma_min": sigma_min(band_section(A, Y))}


def _verdict(s: float, tau: float) -> str:
    if s >= tau:
        return "invertible"
    if s <= tau / 100:
        return "singular"
    return "borderline"


@dataclass(frozen=True)
class CertificateReport:
    paths: tuple
    window_radius: int
    verdicts: tuple
    whole_space: dict
    overall: str
    caveats: tuple
    tau: float

    def to_dict(self) -> dict:
        return {
            "paths": list(self.paths),
            "window_radius": self.window_radius,
            "verdicts": list(self.verdicts),
            "whole_space": self.whole_space,
            "overall": self.overall,
            "caveats": list(self.caveats),
            "tau": self.tau,
        }


def _check_ball_sections(sections, gens: GeneratorSet):
    if sections is None or sections == "balls":
        return
    bc = ball_cache(gens)
    for n, Y in enumerate(sections):
        if Y != bc.ball(n):
            raise UnsupportedSectionsError(f"section {n} is not the word ball of radius {n}")


def stability_certificate(A: BandOperator, gens: GeneratorSet, paths: Sequence[GeodesicPath], R: int,
                          tau: float = TAU_STAB, sections=None) -> CertificateReport:
    """Per-path compressions on limit-set windows plus a whole-space proxy; overall is their conjunction."""
    if not paths:
        raise ValueError("no paths")
    if gens.group != A.group:
        raise ContextMismatchError(f"{A.group.spec} vs {gens.group.spec}")
    _check_ball_sections(sections, gens)
    verdicts = []
    for path in paths:
        L = limit_set(path, R)
        M = compression(A, L)
        s = sigma_min(M)
        verdicts.append({
            "path": path.describe(),
            "window_size": len(L.realized),
            "sigma_min": s,
            "verdict": invertibility_test(M, tau) if len(L.realized) else "invertible",
            "monotone": L.monotone,
        })
    ws = whole_space_proxy(A, ball_cache(gens).ball(R))
    ws["verdict"] = _verdict(ws["sigma_min"], tau)
    all_v = [v["verdict"] for v in verdicts] + [ws["verdict"]]
    if all(v == "invertible" for v in all_v):
        overall = "stable"
    elif any(v == "singular" for v in all_v):
        overall = "unstable"
    else:
        overall = "inconclusive"
    caveats = ["finite path sample, finite window"]
    g = gens.group
    if g.growth == "sub-exponential":
        caveats.append("sub-exponential growth: the uniform bound on inverses is not required for band operators")
    if g.kind == "H3":
        caveats.append("heuristic: geodesic-subsequence property unproven for this group")
    if not gens.is_standard:
        caveats.append("non-standard generating set")
    return CertificateReport(tuple(p.describe() for p in paths), R, tuple(verdicts), ws, overall, tuple(caveats), tau)


# ---------------------------------------------------------------------------
# commutative extraction


def _decompose(x: Payload, gens: GeneratorSet) -> dict:
    """Exponents e_w >= 0 over the letters with x = prod w^{e_w} and sum e_w = |x|."""
    g = gens.group
    if g.kind != "Z^N":
        raise DecompositionError("exponent decompositions are only defined for commutative groups")
    if gens.is_standard:
        out = {w: 0 for w in gens.letters}
        for i, c in enumerate(x):
            if c:
                w = tuple((1 if c > 0 else -1) if j == i else 0 for j in range(len(x)))
                out[w] = abs(c)
        return out
    table = gens.table()
    n = table.length(x)
    out = {w: 0 for w in gens.letters}
    cur = x
    while n > 0:
        for w in gens.letters:
            prev = g.mul(cur, g.inv(w))
            if table.dist.get(prev) == n - 1:
                out[w] += 1
                cur, n = prev, n - 1
                break
        else:
            raise DecompositionError(f"no parent for {g.format(cur)}")
    return out


def _lis(vals: Sequence[int]) -> list[int]:
    """Indices of a longest strictly increasing subsequence (earliest-ending, leftmost)."""
    import bisect

    tails: list[int] = []
    tails_i: list[int] = []
    prev = [-1] * len(vals)
    for i, v in enumerate(vals):
        k = bisect.bisect_left(tails, v)
        if k == len(tails):
            tails.append(v)
            tails_i.append(i)
        else:
            tails[k] = v
            tails_i[k] = i
        prev[i] = tails_i[k - 1] if k else -1
    out = []
    i = tails_i[-1] if tails_i else -1
    while i >= 0:
        out.append(i)
        i = prev[i]
    return out[::-1]


def _const_class(vals: Sequence[int]) -> list[int]:
    c = Counter(vals)
    best = max(c.items(), key=lambda kv: (kv[1], -kv[0]))[0] if c else None
    return [i for i, v in enumerate(vals) if v == best]


@dataclass(frozen=True)
class Extraction:
    path: GeodesicPath
    selected: tuple  # the n of the retained mu_n, each a prefix length of the path


def commutative_geodesic_extraction(mu, gens: GeneratorSet | None = None, group: Group | None = None,
                                    decompositions: dict | None = None) -> Extraction:
    """Select coordinatewise constant-or-increasing exponents, then fill gaps one generator at a time.

    ``mu`` is a mapping or sequence of pairs n -> mu_n with mu_n on the sphere of radius n.
    """
    if gens is None:
        gens = GeneratorSet.standard(group)
    g = gens.group
    items = sorted((int(n), _p(g, x)) for n, x in (mu.items() if isinstance(mu, dict) else mu))
    if not items:
        raise ValueError("empty sequence")
    exps = []
    for n, x in items:
        if decompositions and n in decompositions:
            d = {w: 0 for w in gens.letters}
            for w, k in decompositions[n].items():
                d[_p(g, w)] += int(k)
        else:
            d = _decompose(x, gens)
        if sum(d.values()) != n:
            raise DecompositionError(f"exponents of mu_{n} do not sum to {n}")
        exps.append(d)
    keep = list(range(len(items)))
    for w in gens.letters:
        vals = [exps[i][w] for i in keep]
        inc = _lis(vals)
        const = _const_class(vals)
        pick = inc if len(inc) >= len(const) else const
        keep = [keep[j] for j in pick]
    letters: list = []
    cur = {w: 0 for w in gens.letters}
    for i in keep:
        for w in gens.letters:
            d = exps[i][w] - cur[w]
            if d < 0:
                raise DecompositionError("selected exponents are not monotone")
            letters.extend([w] * d)
            cur[w] = exps[i][w]
    path = validate_geodesic(letters, gens)
    return Extraction(path, tuple(items[i][0] for i in keep))


# ---------------------------------------------------------------------------
# prefix stabilization


@dataclass(frozen=True)
class StabilizationReport:
    path: GeodesicPath  # letters of eta~^{-1}
    radius: int
    stabilized_window: FiniteSubset
    limsup_window: FiniteSubset
    liminf_window: FiniteSubset
    included: bool
    equal: bool
    survivors: tuple

    @property
    def converged(self) -> bool:
        return self.limsup_window == self.liminf_window


def sequence_window(etas: Sequence[tuple[int, Payload]], gens: GeneratorSet, R: int):
    """Window limits of Omega_k eta_k over Omega_R."""
    g = gens.group
    W = ball_cache(gens).ball(R)
    seq = []
    for k, eta in etas:
        nu = g.inv(eta)
        seq.append(FiniteSubset(g, (x for x in W.items if _member_n(x, nu, k, gens)), _sorted=True))
    return window_limits(seq, W, start=etas[0][0])


def free_prefix_stabilization(etas, m: int, gens: GeneratorSet | None = None, group: Group | None = None,
                              R: int | None = None, words: dict | None = None) -> StabilizationReport:
    """Pigeonhole the letters of eta_k^{-1} position by position; compare the stabilized limit window.

    ``etas`` is a mapping or sequence of pairs k -> eta_k with |eta_k| = k.  Free groups read the
    letters from reduced words; other groups need ``words`` (k -> letter sequence of eta_k^{-1}).
    """
    if gens is None:
        gens = GeneratorSet.standard(group)
    g = gens.group
    pairs = sorted((int(k), _p(g, x)) for k, x in (etas.items() if isinstance(etas, dict) else etas))
    seqs = {}
    for k, eta in pairs:
        if words is not None and k in words:
            ls = tuple(_p(g, w) for w in words[k])
            acc = g.identity()
            for w in ls:
                acc = g.mul(acc, w)
            if acc != g.inv(eta):
                raise DecompositionError(f"letters for k={k} do not multiply to eta_k^{{-1}}")
        elif g.kind == "F" and gens.is_standard:
            ls = tuple((a,) for a in g.inv(eta))
        else:
            raise DecompositionError("letter sequences are required outside standard free groups")
        if len(ls) != k:
            raise DecompositionError(f"eta_{k} is not on the sphere of radius {k}")
        seqs[k] = ls
    survivors = [k for k, _ in pairs]
    letters = []
    trail = []
    for r in range(m):
        live = [k for k in survivors if len(seqs[k]) > r]
        if not live:
            raise StabilizationHorizonError(f"no survivors at position {r + 1}")
        c = Counter(seqs[k][r] for k in live)
        top = max(c.values())
        w = min((w for w, v in c.items() if v == top), key=g.key)
        survivors = [k for k in live if seqs[k][r] == w]
        letters.append(w)
        trail.append(len(survivors))
    path = validate_geodesic(letters, gens)
    R = m // 2 if R is None else R
    L = limit_set(path, R)
    wl = sequence_window(pairs, gens, R)
    return StabilizationReport(path, R, L.realized, wl.limsup, wl.liminf, L.realized <= wl.limsup,
                               L.realized == wl.limsup, tuple(trail))
