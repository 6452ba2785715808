"""Inflating sequences and the block-diagonal operator sum_n R_{v_n} A_n R_{v_n}^{-1} + P_{Gamma'} on a window."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .groups import ContextMismatchError, GeneratorSet, Payload, payload_length
from .operators import BandOperator, SectionMatrix, band_section
from .sets import BallCache, FiniteSubset, ball_cache, translate_right, union
from .spectral import N0, TAU_STAB, TAU_UNSTAB, sigma_min, stability_scan

POOL_RADIUS_CAP = 4096
MAX_ENLARGED = 2_000_000


class PoolExhaustedError(RuntimeError):
    pass


class WindowClipError(ValueError):
    def __init__(self, clipped: Sequence[int]):
        self.clipped = tuple(clipped)
        super().__init__(f"blocks straddle the window boundary: {list(self.clipped)}")


def canonical_pool(gens: GeneratorSet, max_radius: int = POOL_RADIUS_CAP) -> Iterator[Payload]:
    """Group elements in canonical order (sphere by sphere, key order inside a sphere)."""
    g = gens.group
    table = gens.table()
    r = 0
    while r <= max_radius:
        table.grow_to(r, cap=max_radius)
        sphere = table.spheres[r]
        if r > 0 and not sphere:
            return
        yield from sorted(sphere, key=g.key)
        r += 1


def enlarged_target(Y: FiniteSubset, omega_n: FiniteSubset) -> FiniteSubset:
    """(Y | Omega_n)(Y | Omega_n)^{-1}(Y | Omega_n)."""
    g = Y.group
    Z = Y | omega_n
    if len(Z) ** 3 > MAX_ENLARGED * 64:
        raise MemoryError(f"enlarged target from a set of size {len(Z)} is too large")
    zz = {g.mul(a, g.inv(b)) for a in Z.items for b in Z.items}
    return FiniteSubset(g, {g.mul(x, c) for x in zz for c in Z.items})


@dataclass(frozen=True)
class InflatingSequence:
    shifts: tuple
    sets: tuple  # Y_n, the blocks
    placed: tuple  # Y_n v_n^{-1}
    targets: tuple  # sets kept disjoint (Y_n or the enlarged version), translated
    labels: tuple
    pool: str

    def __len__(self):
        return len(self.shifts)

    def pairwise_disjoint(self) -> bool:
        seen: set = set()
        for T in self.targets:
            if not seen.isdisjoint(T.members):
                return False
            seen |= T.members
        return True


def greedy_inflating(Y: Sequence[FiniteSubset], m: int | None = None, gens: GeneratorSet | None = None,
                     pool_radius: int = POOL_RADIUS_CAP, enlarged: bool = False,
                     labels: Sequence[int] | None = None) -> InflatingSequence:
    """For each n take the first pool element v with Y_n v^{-1} disjoint from everything placed so far."""
    if not Y:
        raise ValueError("no sets to inflate")
    m = len(Y) if m is None else m
    if m > len(Y):
        raise ValueError(f"m={m} exceeds the number of sets {len(Y)}")
    g = Y[0].group
    gens = gens or GeneratorSet.standard(g)
    labels = tuple(range(len(Y))) if labels is None else tuple(labels)
    bc = ball_cache(gens)
    taken: set = set()
    shifts, placed, targets = [], [], []
    for i in range(m):
        Yn = Y[i]
        if Yn.group != g:
            raise ContextMismatchError("sets from different groups")
        T = enlarged_target(Yn, bc.ball(labels[i])) if enlarged else Yn
        for v in canonical_pool(gens, pool_radius):
            vi = g.inv(v)
            if all(g.mul(y, vi) not in taken for y in T.items):
                break
        else:
            raise PoolExhaustedError(f"no shift found for block {labels[i]} within radius {pool_radius}")
        Tv = translate_right(T, vi)
        taken |= Tv.members
        shifts.append(v)
        targets.append(Tv)
        placed.append(translate_right(Yn, vi))
    return InflatingSequence(tuple(shifts), tuple(Y[:m]), tuple(placed), tuple(targets), labels[:m],
                             f"canonical enumeration of {g.spec}, radius <= {pool_radius}")


def default_window(inf: InflatingSequence, gens: GeneratorSet | None = None) -> FiniteSubset:
    """Smallest word ball containing every placed block."""
    g = inf.placed[0].group
    gens = gens or GeneratorSet.standard(g)
    R = max(payload_length(p, gens, cap=POOL_RADIUS_CAP) for P in inf.placed for p in P.items)
    # the radius is dictated by the placed blocks, so it may exceed the global cap
    return BallCache(gens, cap=max(R, g.radius_cap)).ball(R)


@dataclass(frozen=True)
class Assembly:
    matrix: SectionMatrix
    included: tuple  # labels of blocks inside the window
    block_of: np.ndarray  # per basis element: block position in ``included`` or -1 for Gamma'
    block_sigma: tuple
    complement_size: int

    def is_block_diagonal(self) -> bool:
        """Zero between distinct blocks and between blocks and Gamma', identity on Gamma', exactly."""
        E = self.matrix.entries
        lab = self.block_of
        cross = lab[:, None] != lab[None, :]
        if np.any(E[cross] != 0):
            return False
        c = np.flatnonzero(lab < 0)
        return bool(np.array_equal(E[np.ix_(c, c)], np.eye(len(c))))

    def predicted_sigma_min(self) -> float:
        vals = list(self.block_sigma)
        if self.complement_size:
            vals.append(1.0)
        return min(vals) if vals else float("inf")

    def predicted_norm(self) -> float:
        vals = [float(np.linalg.norm(b, 2)) if b.size else 0.0 for b in self._blocks()]
        return max(vals + ([1.0] if self.complement_size else [0.0]))

    def _blocks(self):
        E = self.matrix.entries
        for k in range(len(self.included)):
            idx = np.flatnonzero(self.block_of == k)
            yield E[np.ix_(idx, idx)]

    def drop_blocks(self, positions: Sequence[int]) -> np.ndarray:
        keep = ~np.isin(self.block_of, list(positions))
        idx = np.flatnonzero(keep)
        return self.matrix.entries[np.ix_(idx, idx)]


def assemble_op(A_seq: Sequence[SectionMatrix], inf: InflatingSequence, W: FiniteSubset) -> Assembly:
    """Place A_n at (a v_n^{-1}, b v_n^{-1}); identity on the part of W outside every placed block."""
    if len(A_seq) < len(inf):
        raise ValueError("fewer matrices than blocks")
    g = W.group
    Wm = W.members
    included, clipped = [], []
    for i, P in enumerate(inf.placed):
        inside = sum(1 for p in P.items if p in Wm)
        if inside == len(P):
            included.append(i)
        elif inside:
            clipped.append(inf.labels[i])
    if clipped:
        raise WindowClipError(clipped)
    all_placed = union(g, inf.placed).members
    idx = W.index
    dtype = complex if any(np.iscomplexobj(A_seq[i].entries) for i in included) else float
    M = np.zeros((len(W), len(W)), dtype=dtype)
    lab = np.full(len(W), -1)
    sig = []
    for k, i in enumerate(included):
        A = A_seq[i]
        Yn = inf.sets[i]
        if A.basis != Yn or not A.is_square:
            raise ValueError(f"matrix {i} is not a square section on Y_{inf.labels[i]}")
        vi = g.inv(inf.shifts[i])
        pos = np.array([idx[g.mul(y, vi)] for y in Yn.items], dtype=int)
        M[np.ix_(pos, pos)] = A.entries
        lab[pos] = k
        sig.append(sigma_min(A))
    comp = [idx[p] for p in W.items if p not in all_placed]
    M[comp, comp] = 1.0
    return Assembly(SectionMatrix(W, M), tuple(inf.labels[i] for i in included), lab, tuple(sig), len(comp))


def _proxy_verdict(s: float, tau: float) -> str:
    if s >= tau:
        return "stable"
    if s <= tau / 100:
        return "unstable"
    return "inconclusive"


@dataclass(frozen=True)
class ProxyReport:
    window: int
    blocks_included: tuple
    sigma_min_full: float
    sigma_min_minus_last: float
    sigma_min_tail: float
    proxy_verdict: str
    scan_verdict: str
    agree: bool

    def to_dict(self) -> dict:
        return {
            "window": self.window,
            "blocks_included": list(self.blocks_included),
            "sigma_min_full": self.sigma_min_full,
            "sigma_min_minus_last": self.sigma_min_minus_last,
            "sigma_min_tail": self.sigma_min_tail,
            "proxy_verdict": self.proxy_verdict,
            "scan_verdict": self.scan_verdict,
            "agree": self.agree,
            "note": "finite-window empirical proxy",
        }


def fredholm_proxy_compare(A: BandOperator, Y: Sequence[FiniteSubset], W: FiniteSubset | None = None,
                           tau: float = TAU_STAB, m: int | None = None, n0: int = N0,
                           tau_unstab: float = TAU_UNSTAB, labels: Sequence[int] | None = None,
                           enlarged: bool = False, gens: GeneratorSet | None = None) -> ProxyReport:
    """sigma_min of the assembled block operator against the finite-sections scan verdict.

    The proxy verdict reads blocks with label >= n0 (plus Gamma'), mirroring the scan's tail.
    """
    labels = tuple(range(len(Y))) if labels is None else tuple(labels)
    inf = greedy_inflating(Y, m, gens=gens, enlarged=enlarged, labels=labels)
    W = default_window(inf, gens) if W is None else W
    mats = [band_section(A, Yn) for Yn in inf.sets]
    asm = assemble_op(mats, inf, W)
    full = sigma_min(asm.matrix)
    minus_last = sigma_min(asm.drop_blocks([len(asm.included) - 1])) if asm.included else full
    head = [k for k, n in enumerate(asm.included) if n < n0]
    tail = sigma_min(asm.drop_blocks(head))
    scan = stability_scan(A, list(Y), n0=n0, tau_stab=tau, tau_unstab=tau_unstab, ns=labels)
    pv = _proxy_verdict(tail, tau)
    return ProxyReport(len(W), asm.included, full, minus_last, tail, pv, scan.verdict, pv == scan.verdict)
