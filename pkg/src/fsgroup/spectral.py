"""Dense singular-value numerics: sigma_min, invertibility verdicts, stability scans."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .operators import BandOperator, SectionMatrix, band_section
from .sets import FiniteSubset

TAU_STAB = 1e-6
TAU_UNSTAB = 1e-10
N0 = 5
MAX_SCAN_DIM = 6000
LOG_FLOOR = 1e-300

CSV_HEADER = ("n", "dim", "norm", "sigma_min", "cond", "verdict")


class NumericError(ArithmeticError):
    pass


class ResourceError(RuntimeError):
    pass


def _array(M) -> np.ndarray:
    E = M.entries if isinstance(M, SectionMatrix) else np.asarray(M)
    if not np.all(np.isfinite(E)):
        raise NumericError("matrix has non-finite entries")
    return E


def singular_values(M) -> np.ndarray:
    """Descending singular values; empty for a 0x0 matrix."""
    E = _array(M)
    if E.size == 0:
        return np.zeros(0)
    return np.linalg.svd(E, compute_uv=False)


def sigma_min(M) -> float:
    """Smallest singular value of a square matrix (lower-bound constant min ||Mx||/||x|| if rectangular)."""
    E = _array(M)
    if E.ndim != 2:
        raise ValueError("expected a matrix")
    if E.shape[1] == 0:
        return math.inf
    s = np.linalg.svd(E, compute_uv=False)
    if E.shape[0] < E.shape[1]:
        return 0.0
    return float(s[-1])


def sigma_min_eig(M) -> float:
    """Cross-check route: sqrt of the smallest eigenvalue of M*M."""
    E = _array(M)
    if E.shape[1] == 0:
        return math.inf
    w = np.linalg.eigvalsh(E.conj().T @ E)
    return float(math.sqrt(max(w[0], 0.0)))


def norm(M) -> float:
    s = singular_values(M)
    return float(s[0]) if s.size else 0.0


def invertibility_test(M, tau: float) -> str:
    E = _array(M)
    if E.shape[0] != E.shape[1]:
        raise ValueError("invertibility_test needs a square matrix")
    s = sigma_min(E)
    if s >= tau:
        return "invertible"
    if s <= tau / 100:
        return "singular"
    return "borderline"


@dataclass(frozen=True)
class SectionRecord:
    n: int
    dim: int
    norm: float
    sigma_min: float
    cond: float
    verdict: str


@dataclass(frozen=True)
class StabilityReport:
    records: tuple[SectionRecord, ...]
    verdict: str
    tau_stab: float
    tau_unstab: float
    n0: int
    trend_slope: float | None = None
    reason: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def n_range(self) -> tuple[int, int]:
        return (self.records[0].n, self.records[-1].n)

    @property
    def sigmas(self) -> np.ndarray:
        return np.array([r.sigma_min for r in self.records])

    def tail(self) -> list[SectionRecord]:
        t = [r for r in self.records if r.n >= self.n0]
        return t or list(self.records)

    @property
    def min_tail_sigma(self) -> float:
        return min(r.sigma_min for r in self.tail())

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.records:
            w.writerow([r.n, r.dim, _fmt(r.norm), _fmt(r.sigma_min), _fmt(r.cond), r.verdict])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "reason": self.reason,
            "thresholds": {"tau_stab": self.tau_stab, "tau_unstab": self.tau_unstab, "n0": self.n0},
            "n_range": list(self.n_range),
            "trend_slope": self.trend_slope,
            "records": [
                {"n": r.n, "dim": r.dim, "norm": r.norm, "sigma_min": r.sigma_min,
                 "cond": None if math.isinf(r.cond) else r.cond, "verdict": r.verdict}
                for r in self.records
            ],
            **self.extra,
        }


def _fmt(x: float) -> str:
    if math.isinf(x):
        return "inf"
    return f"{x:.17g}"


def record(M: SectionMatrix, n: int, tau: float) -> SectionRecord:
    E = _array(M)
    s = singular_values(E)
    nm = float(s[0]) if s.size else 0.0
    sm = float(s[-1]) if s.size else math.inf
    cond = nm / sm if sm > 0 else math.inf
    if not s.size:
        cond = 1.0
    return SectionRecord(n, E.shape[0], nm, sm, cond, invertibility_test(E, tau) if s.size else "invertible")


def _trend(ns: np.ndarray, sig: np.ndarray) -> float | None:
    if len(ns) < 2:
        return None
    y = np.log(np.maximum(sig, LOG_FLOOR))
    return float(np.polyfit(ns.astype(float), y, 1)[0])


def classify(records: Sequence[SectionRecord], n0: int = N0, tau_stab: float = TAU_STAB,
             tau_unstab: float = TAU_UNSTAB) -> tuple[str, float | None, str]:
    """Verdict from per-n records.

    stable: inf over n >= n0 of sigma_min >= tau_stab.
    unstable: in the final half of the range some sigma_min <= tau_unstab, or the
    log-linear trend is decreasing and its extrapolation crosses tau_unstab within
    the scanned range length.
    """
    if tau_stab <= 0:
        raise ValueError("tau_stab must be positive")
    tail = [r for r in records if r.n >= n0] or list(records)
    m = min(r.sigma_min for r in tail)
    ns = np.array([r.n for r in records])
    sig = np.array([r.sigma_min for r in records])
    h = len(records) // 2
    ns_h, sig_h = ns[h:], sig[h:]
    slope = _trend(ns_h, sig_h)
    if m >= tau_stab:
        return "stable", slope, f"min sigma_min over n>={n0} is {m:.3g} >= {tau_stab:g}"
    if np.any(sig_h <= tau_unstab):
        return "unstable", slope, f"sigma_min <= {tau_unstab:g} in the final half of the range"
    if slope is not None and slope < 0:
        last = math.log(max(sig_h[-1], LOG_FLOOR))
        span = float(ns[-1] - ns[0]) or 1.0
        if last + slope * span <= math.log(tau_unstab):
            return "unstable", slope, "decreasing log-trend crosses tau_unstab"
    return "inconclusive", slope, "no threshold decides the scanned range"


def stability_scan(A: BandOperator, sections: Sequence[FiniteSubset], n0: int = N0, tau_stab: float = TAU_STAB,
                   tau_unstab: float = TAU_UNSTAB, ns: Sequence[int] | None = None,
                   max_dim: int = MAX_SCAN_DIM) -> StabilityReport:
    if not sections:
        raise ValueError("no sections to scan")
    if tau_stab <= 0:
        raise ValueError("tau_stab must be positive")
    ns = list(range(len(sections))) if ns is None else list(ns)
    if len(ns) != len(sections):
        raise ValueError("labels and sections differ in length")
    recs = []
    for n, Y in zip(ns, sections):
        if len(Y) > max_dim:
            raise ResourceError(f"section of size {len(Y)} exceeds the dense limit {max_dim}")
        recs.append(record(band_section(A, Y), n, tau_stab))
    verdict, slope, why = classify(recs, n0, tau_stab, tau_unstab)
    return StabilityReport(tuple(recs), verdict, tau_stab, tau_unstab, n0, slope, why)
