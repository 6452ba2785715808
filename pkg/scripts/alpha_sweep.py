"""Sweep alpha in alpha*I + L1 on Z: scan verdict, certificate verdict and tail sigma_min.

    python3 scripts/alpha_sweep.py --nmax 200 --out alpha_sweep.csv
"""
import argparse
import csv
import sys

import numpy as np

from fsgroup.groups import GeneratorSet, IntegerLattice
from fsgroup.limits import periodic_geodesics, stability_certificate
from fsgroup.operators import BandOperator
from fsgroup.sets import FiniteSubset
from fsgroup.spectral import stability_scan


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--nmax", type=int, default=200)
    ap.add_argument("--window", type=int, default=50)
    ap.add_argument("--alphas", default="0,0.25,0.5,0.9,1,1.1,1.5,2,3")
    ap.add_argument("--out", default="-")
    a = ap.parse_args(argv)
    g = IntegerLattice(1)
    gens = GeneratorSet.standard(g)
    L1 = BandOperator.shift(g, (1,))
    secs = [FiniteSubset(g, [(i,) for i in range(n + 1)]) for n in range(a.nmax + 1)]
    paths = periodic_geodesics(gens, 2, 2 * a.window)
    rows = []
    for alpha in (float(x) for x in a.alphas.split(",")):
        A = BandOperator.identity(g).scale(alpha) + L1
        scan = stability_scan(A, secs)
        cert = stability_certificate(A, gens, paths, a.window)
        rows.append((alpha, scan.verdict, cert.overall, scan.min_tail_sigma, abs(alpha - 1)))
    f = sys.stdout if a.out == "-" else open(a.out, "w", newline="")
    w = csv.writer(f)
    w.writerow(["alpha", "scan", "certificate", "min_tail_sigma", "dist_to_unit_circle"])
    for r in rows:
        w.writerow([r[0], r[1], r[2], np.format_float_positional(r[3], 6), r[4]])
    if f is not sys.stdout:
        f.close()


if __name__ == "__main__":
    main()
