import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fsgroup.operators import BandOperator, band_section, shift_section
from fsgroup.spectral import (
    CSV_HEADER, NumericError, ResourceError, classify, invertibility_test, sigma_min, sigma_min_eig,
    stability_scan,
)

from conftest import Z1, interval

L1 = BandOperator.shift(Z1, (1,))
Lm1 = BandOperator.shift(Z1, (-1,))
I1 = BandOperator.identity(Z1)


def test_sigma_min_examples():
    assert sigma_min(band_section(L1, interval(0, 7))) == 0.0
    assert sigma_min(np.eye(4)) == 1.0
    assert sigma_min(band_section(I1.scale(2) + L1, interval(0, 9))) >= 1.0
    with pytest.raises(NumericError):
        sigma_min(np.array([[1.0, np.nan], [0, 1]]))


@given(st.integers(1, 12), st.integers(0, 2**31))
def test_sigma_min_cross_check(n, seed):
    rng = np.random.default_rng(seed)
    M = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    assert abs(sigma_min(M) - sigma_min_eig(M)) <= 1e-10 * max(1.0, np.abs(M).max())


def test_partial_permutation_singular_values():
    s = np.linalg.svd(shift_section((3,), interval(-5, 5)).entries, compute_uv=False)
    assert np.all(np.minimum(np.abs(s), np.abs(s - 1)) <= 1e-12)


def test_invertibility_examples():
    assert invertibility_test(np.zeros((3, 3)), 1e-8) == "singular"
    assert invertibility_test(np.eye(3), 1.0) == "invertible"
    assert invertibility_test(band_section(L1, interval(0, 50)), 1e-8) == "singular"
    assert invertibility_test(np.diag([1.0, 5e-3]), 0.1) == "borderline"


def test_scan_examples():
    secs = [interval(0, n) for n in range(40)]
    r = stability_scan(L1, secs)
    assert r.verdict == "unstable" and (r.sigmas == 0).all()
    r = stability_scan(I1.scale(2) + L1, secs, tau_stab=0.5)
    assert r.verdict == "stable" and r.sigmas.min() >= 1 - 1e-12
    secs = [interval(-n, n) for n in range(30)]
    r = stability_scan(L1 + Lm1, secs)
    assert r.verdict == "unstable"
    for rec in r.records:
        n = rec.n
        # dimension 2n+1: eigenvalues 2cos(k pi/(2n+2)), k = 1..2n+1; k = n+1 gives 0
        ref = min(abs(2 * math.cos(k * math.pi / (2 * n + 2))) for k in range(1, 2 * n + 2))
        assert abs(rec.sigma_min - ref) <= 1e-9 and ref < 1e-15


def test_scan_records_consistent():
    r = stability_scan(I1.scale(0.7) + L1 - Lm1.scale(0.2), [interval(0, n) for n in range(20)])
    for rec in r.records:
        assert rec.sigma_min <= rec.norm + 1e-15
        assert rec.dim == rec.n + 1


def test_scan_inconclusive_and_errors():
    # I + L1: sigma_min decays like 1/n, far above tau_unstab but below this tau_stab
    r = stability_scan(I1 + L1, [interval(0, n) for n in range(12)], tau_stab=0.5)
    assert r.verdict == "inconclusive"
    assert stability_scan(I1 + L1, [interval(0, n) for n in range(12)]).verdict == "stable"
    assert r.tau_stab == 0.5 and r.n0 == 5
    with pytest.raises(ValueError):
        stability_scan(L1, [])
    with pytest.raises(ValueError):
        stability_scan(L1, [interval(0, 1)], tau_stab=0)
    with pytest.raises(ResourceError):
        stability_scan(L1, [interval(0, 20)], max_dim=10)


def test_trend_crossing_detected():
    from fsgroup.spectral import SectionRecord

    recs = [SectionRecord(n, n + 1, 1.0, 10.0 ** (-n / 2), 1.0, "x") for n in range(6, 16)]
    verdict, slope, _ = classify(recs)
    assert verdict == "unstable" and slope < 0


@given(st.floats(1e-9, 2.0), st.floats(1e-9, 2.0))
def test_verdict_monotone_in_tau(t1, t2):
    lo, hi = sorted((t1, t2))
    secs = [interval(0, n) for n in range(15)]
    A = I1.scale(1.2) + L1
    v_lo = stability_scan(A, secs, tau_stab=lo).verdict
    v_hi = stability_scan(A, secs, tau_stab=hi).verdict
    assert not (v_lo == "unstable" and v_hi == "stable")
    if v_hi == "stable":
        assert v_lo == "stable"


def test_csv_format():
    r = stability_scan(I1.scale(2) + L1, [interval(0, n) for n in range(3)])
    text = r.to_csv()
    lines = text.splitlines()
    assert lines[0] == ",".join(CSV_HEADER) == "n,dim,norm,sigma_min,cond,verdict"
    assert lines[1] == "0,1,2,2,1,invertible"
    n, dim, nrm, smin, cond, verdict = lines[2].split(",")
    assert float(nrm) == r.records[1].norm and len(nrm.replace(".", "").lstrip("0")) <= 17
    r = stability_scan(L1, [interval(0, 2)])
    assert r.to_csv().splitlines()[1].split(",")[4] == "inf"
