"""Band operators sum_i b_i L_{t_i}, their finite sections, and exact projection identities.

Conventions: ``L_t delta_s = delta_{ts}``; a section on the finite basis Y has
entry ``(a, b) = <A delta_b, delta_a>`` with Y in canonical order.  Shift and
projection sections are real 0/1 arrays, so products of them are exact in
float64; band sections are complex.
"""
from __future__ import annotations

import numbers
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence, Union

import numpy as np

from .groups import ContextMismatchError, Element, GeneratorSet, Group, Payload
from .sets import BallCache, FiniteSubset, omega_boundary, omega_interior, translate_left, union

Coefficient = Union[complex, Callable[[Payload], complex]]

ANALYTIC_ATOL = 1e-12


class EvaluationError(Exception):
    pass


class AmbientWindowError(ValueError):
    pass


def _is_const(c) -> bool:
    return isinstance(c, numbers.Number)


def _add(c1, c2):
    if _is_const(c1) and _is_const(c2):
        return complex(c1) + complex(c2)
    f1, f2 = _as_fn(c1), _as_fn(c2)
    return lambda p: f1(p) + f2(p)


def _as_fn(c):
    if _is_const(c):
        v = complex(c)
        return lambda p: v
    return c


class BandOperator:
    """A = sum_i b_i L_{t_i} with pairwise distinct shifts t_i.

    Coefficients are complex constants (the shift algebra case) or callables
    mapping a payload to a complex number.
    """

    def __init__(self, group: Group, terms: Iterable = ()):
        self.group = group
        merged: dict = {}
        for t, c in terms:
            if isinstance(t, Element):
                if t.group != group:
                    raise ContextMismatchError(f"{t!r} not in {group.spec}")
                t = t.payload
            else:
                t = group.check(t)
            merged[t] = _add(merged[t], c) if t in merged else (complex(c) if _is_const(c) else c)
        self.terms = tuple(
            (t, merged[t]) for t in sorted(merged, key=group.key) if not (_is_const(merged[t]) and merged[t] == 0)
        )

    @classmethod
    def zero(cls, group: Group) -> "BandOperator":
        return cls(group)

    @classmethod
    def identity(cls, group: Group) -> "BandOperator":
        return cls(group, [(group.identity(), 1)])

    @classmethod
    def shift(cls, group: Group, t, coeff: Coefficient = 1) -> "BandOperator":
        return cls(group, [(t, coeff)])

    @property
    def shifts(self) -> tuple:
        return tuple(t for t, _ in self.terms)

    @property
    def is_constant(self) -> bool:
        return all(_is_const(c) for _, c in self.terms)

    def __add__(self, other: "BandOperator") -> "BandOperator":
        self._same(other)
        return BandOperator(self.group, self.terms + other.terms)

    def __sub__(self, other: "BandOperator") -> "BandOperator":
        return self + other.scale(-1)

    def scale(self, s: complex) -> "BandOperator":
        return BandOperator(self.group, [(t, _mul_const(c, s)) for t, c in self.terms])

    def __rmul__(self, s):
        return self.scale(s)

    def __mul__(self, other):
        if _is_const(other):
            return self.scale(other)
        self._same(other)
        g = self.group
        out = []
        for t, b in self.terms:
            tinv = g.inv(t)
            for s, c in other.terms:
                if _is_const(b) and _is_const(c):
                    coeff = b * c
                else:
                    fb, fc = _as_fn(b), _as_fn(c)
                    coeff = (lambda fb, fc, tinv: lambda x: fb(x) * fc(g.mul(tinv, x)))(fb, fc, tinv)
                out.append((g.mul(t, s), coeff))
        return BandOperator(g, out)

    def adjoint(self) -> "BandOperator":
        """sum_i conj(b_i(t_i .)) L_{t_i^{-1}}."""
        g = self.group
        out = []
        for t, b in self.terms:
            if _is_const(b):
                out.append((g.inv(t), complex(b).conjugate()))
            else:
                out.append((g.inv(t), (lambda b, t: lambda x: complex(b(g.mul(t, x))).conjugate())(b, t)))
        return BandOperator(g, out)

    def _same(self, other):
        if other.group != self.group:
            raise ContextMismatchError(f"{self.group.spec} vs {other.group.spec}")

    def __repr__(self):
        parts = []
        for t, c in self.terms:
            cs = f"{c:g}" if _is_const(c) else "b(.)"
            parts.append(f"{cs}*L{self.group.format(t)}")
        return "BandOperator(" + (" + ".join(parts) or "0") + ")"


def _mul_const(c, s):
    if _is_const(c):
        return complex(c) * s
    return lambda p: c(p) * s


def _eval_coeff(c, items) -> np.ndarray:
    if _is_const(c):
        return np.full(len(items), complex(c))
    try:
        vals = np.array([complex(c(p)) for p in items], dtype=complex)
    except Exception as exc:  # user-supplied diagonal
        raise EvaluationError(f"coefficient evaluation failed: {exc}") from exc
    if not np.all(np.isfinite(vals)):
        raise EvaluationError("coefficient is not finite on the section")
    return vals


@dataclass
class SectionMatrix:
    basis: FiniteSubset
    entries: np.ndarray
    rows: FiniteSubset | None = field(default=None)

    def __post_init__(self):
        r = self.row_basis
        if self.entries.shape != (len(r), len(self.basis)):
            raise ValueError(f"entries of shape {self.entries.shape} do not match the basis")

    @property
    def row_basis(self) -> FiniteSubset:
        return self.basis if self.rows is None else self.rows

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def is_square(self) -> bool:
        return self.rows is None or self.rows == self.basis

    def __matmul__(self, other: "SectionMatrix") -> "SectionMatrix":
        if other.row_basis != self.basis:
            raise ValueError("basis mismatch in product")
        return SectionMatrix(other.basis, self.entries @ other.entries, self.rows)

    def __add__(self, other):
        self._check(other)
        return SectionMatrix(self.basis, self.entries + other.entries, self.rows)

    def __sub__(self, other):
        self._check(other)
        return SectionMatrix(self.basis, self.entries - other.entries, self.rows)

    def _check(self, other):
        if other.basis != self.basis or other.row_basis != self.row_basis:
            raise ValueError("basis mismatch")

    @property
    def H(self) -> "SectionMatrix":
        return SectionMatrix(self.row_basis, self.entries.conj().T, None if self.is_square else self.basis)

    def restrict(self, Y: FiniteSubset) -> "SectionMatrix":
        """Principal block on Y (a subset of the basis)."""
        idx = [self.basis.index[p] for p in Y.items]
        ridx = [self.row_basis.index[p] for p in Y.items]
        return SectionMatrix(Y, self.entries[np.ix_(ridx, idx)])

    def dumps(self) -> str:
        """Coordinate text: header ``dim nnz`` then ``row col re im`` lines."""
        E = self.entries
        rows, cols = np.nonzero(E)
        out = [f"{self.dim} {len(rows)}"]
        for i, j in zip(rows, cols):
            v = complex(E[i, j])
            out.append(f"{i} {j} {v.real:.17g} {v.imag:.17g}")
        return "\n".join(out) + "\n"


def _shift_array(g: Group, t: Payload, cols: FiniteSubset, rows: FiniteSubset) -> np.ndarray:
    M = np.zeros((len(rows), len(cols)))
    ridx = rows.index
    for j, b in enumerate(cols.items):
        i = ridx.get(g.mul(t, b))
        if i is not None:
            M[i, j] = 1.0
    return M


def _payload(g: Group, t) -> Payload:
    if isinstance(t, Element):
        if t.group != g:
            raise ContextMismatchError(f"{t!r} not in {g.spec}")
        return t.payload
    return g.check(t)


def shift_section(t, Y: FiniteSubset, rows: FiniteSubset | None = None) -> SectionMatrix:
    """0/1 partial permutation: entry (a, b) = 1 iff a = t b."""
    g = Y.group
    t = _payload(g, t)
    return SectionMatrix(Y, _shift_array(g, t, Y, rows or Y), rows)


def band_section(A: BandOperator, Y: FiniteSubset, rows: FiniteSubset | None = None) -> SectionMatrix:
    """P_rows A P_Y; square P_Y A P_Y when ``rows`` is omitted."""
    if A.group != Y.group:
        raise ContextMismatchError(f"{A.group.spec} vs {Y.group.spec}")
    R = rows or Y
    M = np.zeros((len(R), len(Y)), dtype=complex)
    for t, c in A.terms:
        M += _eval_coeff(c, R.items)[:, None] * _shift_array(A.group, t, Y, R)
    return SectionMatrix(Y, M, rows)


def projection_section(S: FiniteSubset, Y: FiniteSubset) -> SectionMatrix:
    """Diagonal 0/1 matrix on Y, ones on S & Y."""
    mem = S.members
    return SectionMatrix(Y, np.diag([1.0 if p in mem else 0.0 for p in Y.items]))


def identity_section(Y: FiniteSubset) -> SectionMatrix:
    return SectionMatrix(Y, np.eye(len(Y)))


def band_ambient(ops: Sequence[BandOperator], Y: FiniteSubset) -> FiniteSubset:
    """Y together with every t Y and t^{-1} Y for shifts t of the given operators."""
    g = Y.group
    parts = [Y]
    for A in ops:
        for t in A.shifts:
            parts.append(translate_left(Y, t))
            parts.append(translate_left(Y, g.inv(t)))
    return union(g, parts)


def chain_ambient(ops: Sequence[BandOperator], Y: FiniteSubset) -> FiniteSubset:
    """Every support reached by applying ops[-1], ops[-2], ... to vectors on Y."""
    g = Y.group
    reach = Y
    acc = [Y]
    for A in reversed(ops):
        reach = union(g, [translate_left(reach, t) for t in A.shifts] + [reach])
        acc.append(reach)
    return union(g, acc)


def quasicommutator(A1: BandOperator, A2: BandOperator, Y: FiniteSubset) -> SectionMatrix:
    """P A1 P A2 P - P A1 A2 P on Y."""
    return band_section(A1, Y) @ band_section(A2, Y) - band_section(A1 * A2, Y)


def apply_band(A: BandOperator, v: dict) -> dict:
    """A applied to a finitely supported vector {payload: value}."""
    g = A.group
    out: dict = {}
    for t, b in A.terms:
        for x, c in v.items():
            y = g.mul(t, x)
            coeff = complex(b) if _is_const(b) else complex(b(y))
            out[y] = out.get(y, 0) + coeff * c
    return {p: c for p, c in out.items() if c != 0}


def sandwich(ops: Sequence[BandOperator], Y: FiniteSubset, ambient: FiniteSubset | None = None) -> SectionMatrix:
    """P_Y A_1 Q_Y A_2 Q_Y ... Q_Y A_m P_Y by propagating each basis vector through the factors.

    Every intermediate support must stay inside ``ambient`` (default: chain_ambient), otherwise
    the finite window would have truncated a term.
    """
    if ambient is None:
        ambient = chain_ambient(ops, Y)
    if not Y <= ambient:
        raise AmbientWindowError("Y is not contained in the ambient set")
    amb = ambient.members
    Ym = Y.members
    M = np.zeros((len(Y), len(Y)), dtype=complex)
    last = len(ops) - 1
    for j, b in enumerate(Y.items):
        v = {b: 1.0}
        for k, A in enumerate(reversed(ops)):
            v = apply_band(A, v)
            if any(p not in amb for p in v):
                raise AmbientWindowError("support left the ambient set")
            if k < last:
                v = {p: c for p, c in v.items() if p not in Ym}
        for p, c in v.items():
            i = Y.index.get(p)
            if i is not None:
                M[i, j] += c
    return SectionMatrix(Y, M)


def _residual(X: np.ndarray, Y: np.ndarray) -> float:
    if X.size == 0:
        return 0.0
    return float(np.max(np.abs(X - Y)))


def _integral(*Ms: np.ndarray) -> bool:
    return all(np.array_equal(M, np.round(M.real)) for M in Ms)


@dataclass(frozen=True)
class IdentityCheck:
    name: str
    holds: bool
    residual: float
    dim: int
    exact: bool = True

    def __bool__(self):
        return self.holds


def _check(name: str, lhs: np.ndarray, rhs: np.ndarray, dim: int) -> IdentityCheck:
    exact = _integral(lhs, rhs)
    r = _residual(lhs, rhs)
    holds = r == 0.0 if exact else r <= ANALYTIC_ATOL * max(1.0, float(np.max(np.abs(rhs), initial=0.0)))
    return IdentityCheck(name, bool(holds), r, dim, exact)


def verify_qlp_identity(omega, A: FiniteSubset, ambient: FiniteSubset) -> IdentityCheck:
    """Q_A L_w P_A = Q_A L_w P_A L_{w^{-1}} Q_A L_w P_A on the ambient basis."""
    g = A.group
    w = _payload(g, omega)
    if not A <= ambient:
        raise AmbientWindowError("A is not contained in the ambient set")
    if not translate_left(A, w) <= ambient:
        raise AmbientWindowError("ambient set does not contain omega*A")
    P = projection_section(A, ambient).entries
    Q = np.eye(len(ambient)) - P
    Lw = shift_section(w, ambient).entries
    Lwi = shift_section(g.inv(w), ambient).entries
    lhs = Q @ Lw @ P
    rhs = Q @ Lw @ P @ Lwi @ Q @ Lw @ P
    return _check("qlp", lhs, rhs, len(ambient))


def verify_boundary_factorization(omega, Y: FiniteSubset, gens: GeneratorSet | None = None) -> IdentityCheck:
    """P_Y L_{w^{-1}} Q_Y L_w P_Y = P_{Y minus (Y & w^{-1}Y)}, unchanged by a right factor P_{boundary Y}."""
    g = Y.group
    w = _payload(g, omega)
    wi = g.inv(w)
    Ywi = translate_left(Y, wi)
    B = union(g, [Y, Ywi, translate_left(Y, w)])
    P = projection_section(Y, B).entries
    Q = np.eye(len(B)) - P
    Lw = shift_section(w, B).entries
    Lwi = shift_section(wi, B).entries
    X = P @ Lwi @ Q @ Lw @ P
    # P - P L_{w^-1} P L_w P, the middle form
    X2 = P - P @ Lwi @ P @ Lw @ P
    target = projection_section(Y - (Y & Ywi), B).entries
    Pb = projection_section(omega_boundary(Y, gens), B).entries
    c1 = _check("boundary-projection", X, target, len(B))
    c2 = _check("boundary-middle", X2, target, len(B))
    c3 = _check("boundary-factor", X @ Pb, X, len(B))
    res = max(c1.residual, c2.residual, c3.residual)
    return IdentityCheck("boundary-factorization", c1.holds and c2.holds and c3.holds, res, len(B))


def verify_interior_product(A: FiniteSubset, gens: GeneratorSet | None = None) -> IdentityCheck:
    """prod_w (P_A L_{w^{-1}} P_A L_w P_A) = P_{int A}, computed on the basis A."""
    g = A.group
    gens = gens or GeneratorSet.standard(g)
    M = np.eye(len(A))
    for w in gens.elements:
        M = M @ shift_section(g.inv(w), A).entries @ shift_section(w, A).entries
    target = projection_section(omega_interior(A, gens), A).entries
    return _check("interior-product", M, target, len(A))


def chain_expansion(ops: Sequence[BandOperator], Y: FiniteSubset) -> SectionMatrix:
    """Rewrite the sandwich P A_1 Q ... Q A_m P through square sections on Y only.

    Uses X Q A_m P = X A_m P - (X P)(P A_m P) recursively; needs no ambient set.
    """
    if len(ops) == 1:
        return band_section(ops[0], Y)
    merged = list(ops[:-2]) + [ops[-2] * ops[-1]]
    return chain_expansion(merged, Y) - chain_expansion(ops[:-1], Y) @ band_section(ops[-1], Y)


def verify_chain_identity(ops: Sequence[BandOperator], Y: FiniteSubset, ambient: FiniteSubset | None = None) -> IdentityCheck:
    """Each rewriting step of the telescoping decomposition, ambient route against section route."""
    if len(ops) < 2:
        raise ValueError("chains need at least two factors")
    if ambient is None:
        ambient = chain_ambient(ops, Y)
    worst = 0.0
    ok = True
    exact = True
    for k in range(2, len(ops) + 1):
        # every suffix-merged chain that the recursion visits
        sub = list(ops[:k])
        lhs = sandwich(sub, Y, ambient).entries
        rhs = chain_expansion(sub, Y).entries
        c = _check(f"chain-{k}", lhs, rhs, len(Y))
        step_lhs = lhs
        step_rhs = (
            sandwich(sub[:-2] + [sub[-2] * sub[-1]], Y, ambient).entries
            - sandwich(sub[:-1], Y, ambient).entries @ band_section(sub[-1], Y).entries
        )
        s = _check(f"step-{k}", step_lhs, step_rhs, len(Y))
        ok = ok and c.holds and s.holds
        exact = exact and c.exact and s.exact
        worst = max(worst, c.residual, s.residual)
    return IdentityCheck(f"chain-m{len(ops)}", ok, worst, len(Y), exact)


def verify_quasicommutator_routes(A1: BandOperator, A2: BandOperator, Y: FiniteSubset) -> IdentityCheck:
    """quasicommutator(A1, A2, Y) = -(P A1 Q A2 P) assembled on an ambient set."""
    q = quasicommutator(A1, A2, Y).entries
    s = sandwich([A1, A2], Y).entries
    return _check("quasicommutator", q, -s, len(Y))


def operator_norm(M: np.ndarray) -> float:
    if M.size == 0:
        return 0.0
    return float(np.linalg.svd(M, compute_uv=False)[0])


@dataclass(frozen=True)
class NormScan:
    records: tuple  # (n, dim, norm)
    reference: float | None

    @property
    def sup(self) -> float:
        return max((r[2] for r in self.records), default=0.0)

    @property
    def gap(self) -> float | None:
        return None if self.reference is None else self.reference - self.sup

    def monotone(self, slack: float = ANALYTIC_ATOL) -> bool:
        norms = [r[2] for r in self.records]
        return all(b >= a - slack for a, b in zip(norms, norms[1:]))


def norm_isometry_scan(A: BandOperator, balls: BallCache, n_max: int, reference: float | None = None,
                       n_min: int = 0) -> NormScan:
    recs = []
    for n in range(n_min, n_max + 1):
        Y = balls.ball(n)
        recs.append((n, len(Y), operator_norm(band_section(A, Y).entries)))
    return NormScan(tuple(recs), reference)
