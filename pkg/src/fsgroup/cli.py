"""Batch driver: ``fsm <command> [--config FILE] [flags]``.

Exit codes: 0 checks passed or verdict produced, 1 an identity or invariant failed, 2 usage/config error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import random
import sys
from pathlib import Path

from . import inflate as inf_mod
from . import limits
from . import operators as ops
from . import spectral
from .config import ConfigError, ExperimentConfig, _split
from .groups import GroupError
from .sets import FiniteSubset, ball_cache, omega_boundary, omega_interior

COMMANDS = ("ball", "boundary", "section", "identities", "scan", "certify", "extract", "inflate")


class Failure(Exception):
    """An identity or invariant was violated; maps to exit code 1."""


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fsm", description="finite sections of band operators on discrete groups")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", type=Path)
    p.add_argument("--out", type=Path, help="directory for reports (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--dump-matrix", type=Path)
    p.add_argument("--dump-set", type=Path)
    p.add_argument("--enlarged", action="store_true", default=None)
    p.add_argument("--seed", type=int)
    p.add_argument("--window", type=int)
    p.add_argument("--nmax", type=int)
    p.add_argument("--group", help="group spec, overrides the config")
    return p


def _merge(cfg: ExperimentConfig, a: argparse.Namespace) -> ExperimentConfig:
    if a.group:
        cfg.experiment.group = a.group
    if a.format:
        cfg.output.format = a.format
    if a.seed is not None:
        cfg.experiment.seed = a.seed
    if a.nmax is not None:
        cfg.sections.nmax = a.nmax
    if a.window is not None:
        cfg.certify.window = cfg.extract.window = cfg.inflate.window = a.window
    if a.enlarged:
        cfg.inflate.enlarged = True
    if a.dump_matrix:
        cfg.output.dump_matrix = str(a.dump_matrix)
    if a.dump_set:
        cfg.output.dump_set = str(a.dump_set)
    cfg.validate()
    return cfg


class Emitter:
    def __init__(self, out: Path | None, stdout):
        self.out = out
        self.stdout = stdout

    def __call__(self, name: str, text: str):
        if self.out is None:
            self.stdout.write(text)
        else:
            self.out.mkdir(parents=True, exist_ok=True)
            (self.out / name).write_text(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _f(x: float) -> str:
    return spectral._fmt(x)


def _write(path: str, text: str):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(text)


# -- commands ---------------------------------------------------------------

def cmd_ball(cfg, emit):
    g, gens = cfg.group, cfg.gens
    n = cfg.sections.nmax
    B = ball_cache(gens).ball(n)
    if cfg.output.dump_set:
        _write(cfg.output.dump_set, B.dumps())
    if cfg.output.format == "json":
        emit("ball.json", _json({"group": g.spec, "radius": n, "size": len(B),
                                 "elements": [g.format(p) for p in B.items]}))
    else:
        emit("ball.txt", B.dumps())
    return 0


def cmd_boundary(cfg, emit):
    g, gens = cfg.group, cfg.gens
    bc = ball_cache(gens)
    rows, ok = [], True
    for n in range(cfg.sections.nmax + 1):
        B = bc.ball(n)
        prev = bc.ball(n - 1) if n else FiniteSubset.empty(g)
        inner = omega_interior(B, gens)
        bd = omega_boundary(B, gens)
        chain = prev <= inner and inner <= B and bd <= (B - prev)
        ok &= chain
        rows.append([n, len(B), len(inner), len(bd), int(bd == B - prev), int(chain)])
    if cfg.output.dump_set:
        _write(cfg.output.dump_set, bd.dumps())
    header = ("n", "size", "interior", "boundary", "boundary_is_sphere", "chain_ok")
    if cfg.output.format == "json":
        emit("boundary.json", _json({"group": g.spec, "rows": [dict(zip(header, r)) for r in rows], "ok": ok}))
    else:
        emit("boundary.csv", _csv(header, rows))
    if not ok:
        raise Failure("ball inclusion chain violated")
    return 0


def cmd_section(cfg, emit):
    A = cfg.band_operator()
    sets, labels = cfg.section_sets()
    Y = sets[-1]
    M = ops.band_section(A, Y)
    if cfg.output.dump_matrix:
        _write(cfg.output.dump_matrix, M.dumps())
    r = spectral.record(M, labels[-1], cfg.thresholds.tau_stab)
    if cfg.output.format == "json":
        emit("section.json", _json({"operator": repr(A), "n": r.n, "dim": r.dim, "norm": r.norm,
                                    "sigma_min": r.sigma_min, "verdict": r.verdict}))
    else:
        emit("section.csv", _csv(spectral.CSV_HEADER, [[r.n, r.dim, _f(r.norm), _f(r.sigma_min), _f(r.cond), r.verdict]]))
    return 0


def _random_band(g, letters, rng: random.Random):
    k = rng.randint(1, min(3, len(letters)))
    shifts = rng.sample(letters, k)
    return ops.BandOperator(g, [(t, rng.choice((-2, -1, 1, 2, 3))) for t in shifts])


def cmd_identities(cfg, emit):
    g, gens = cfg.group, cfg.gens
    ic = cfg.identities
    bc = ball_cache(gens)
    A = bc.ball(ic.radius)
    amb = bc.ball(ic.ambient or ic.radius + 2)
    checks = []
    for w in gens.elements:
        lab = g.format(w)
        checks.append((lab, ops.verify_qlp_identity(w, A, amb)))
        checks.append((lab, ops.verify_boundary_factorization(w, A, gens)))
    checks.append(("-", ops.verify_interior_product(A, gens)))
    rng = random.Random(cfg.experiment.seed)
    letters = list(gens.elements)
    for s in range(ic.samples):
        A1, A2 = _random_band(g, letters, rng), _random_band(g, letters, rng)
        checks.append((f"sample{s}", ops.verify_quasicommutator_routes(A1, A2, A)))
        for m in range(2, ic.max_order + 1):
            chain = [_random_band(g, letters, rng) for _ in range(m)]
            checks.append((f"sample{s}", ops.verify_chain_identity(chain, A)))
    ok = all(c.holds for _, c in checks)
    header = ("check", "omega", "holds", "residual", "dim")
    rows = [[c.name, lab, int(c.holds), _f(c.residual), c.dim] for lab, c in checks]
    if cfg.output.format == "json":
        emit("identities.json", _json({"group": g.spec, "radius": ic.radius, "all_hold": ok,
                                       "checks": [dict(zip(header, r)) for r in rows]}))
    else:
        emit("identities.csv", _csv(header, rows))
    if not ok:
        raise Failure("identity violation")
    return 0


def cmd_scan(cfg, emit):
    A = cfg.band_operator()
    sets, labels = cfg.section_sets()
    t = cfg.thresholds
    rep = spectral.stability_scan(A, sets, n0=t.n0, tau_stab=t.tau_stab, tau_unstab=t.tau_unstab, ns=labels)
    ref = float(t.reference_norm) if t.reference_norm else None
    norms = [r.norm for r in rep.records]
    sup = max(norms)
    over = ref is not None and sup > ref + ops.ANALYTIC_ATOL
    if cfg.output.dump_matrix:
        _write(cfg.output.dump_matrix, ops.band_section(A, sets[-1]).dumps())
    if cfg.output.format == "json":
        d = rep.to_dict()
        d["norm_scan"] = {"sup": sup, "reference": ref, "gap": None if ref is None else ref - sup,
                          "monotone": all(b >= a - ops.ANALYTIC_ATOL for a, b in zip(norms, norms[1:]))}
        emit("scan.json", _json(d))
    else:
        emit("scan.csv", rep.to_csv())
    if over:
        raise Failure(f"section norm {sup!r} exceeds the reference {ref!r}")
    return 0


def _parse_patterns(g, text: str):
    return [[g.parse(x) for x in _split(pat, ",")] for pat in _split(text)]


def cmd_certify(cfg, emit):
    A = cfg.band_operator()
    gens = cfg.gens
    c = cfg.certify
    m = 2 * c.window
    if c.paths.strip():
        paths = [limits.periodic_path(p, m, gens) for p in _parse_patterns(cfg.group, c.paths)]
    else:
        paths = limits.periodic_geodesics(gens, c.period, m)
    rep = limits.stability_certificate(A, gens, paths, c.window, tau=cfg.thresholds.tau_stab)
    emit("certify.json", _json(rep.to_dict()))
    return 0


def _pairs(g, text: str):
    out = []
    for item in _split(text):
        n, _, lit = item.partition(":")
        out.append((int(n), g.parse(lit.strip())))
    return out


def cmd_extract(cfg, emit):
    g, gens = cfg.group, cfg.gens
    e = cfg.extract
    kind, _, num = e.sequence.partition(":")
    if e.mode == "commutative":
        if kind == "diagonal":
            if g.kind != "Z^N" or g.rank < 2:
                raise ConfigError("[extract] diagonal sequence needs Z^N with N >= 2")
            N = int(num or 10)
            mu = [(2 * n, tuple([n, n] + [0] * (g.rank - 2))) for n in range(1, N + 1)]
        else:
            mu = _pairs(g, e.pairs)
        ex = limits.commutative_geodesic_extraction(mu, gens)
        pre = ex.path.prefixes
        out = {"mode": "commutative", "letters": [g.format(w) for w in ex.path.letters], "selected": list(ex.selected),
               "selected_prefixes": [g.format(pre[n]) for n in ex.selected], "valid": True}
    else:
        if kind == "free-example":
            if g.kind != "F" or g.rank < 2:
                raise ConfigError("[extract] free-example needs F:k with k >= 2")
            N = int(num or 40)
            etas = [(n, g.mul((2,), (1,) * (n - 1))) for n in range(1, N + 1)]
        else:
            etas = _pairs(g, e.pairs)
        words = None
        if e.words.strip():
            words = {}
            for item in _split(e.words):
                k, _, ls = item.partition(":")
                words[int(k)] = [g.parse(x) for x in _split(ls, ",")]
        rep = limits.free_prefix_stabilization(etas, e.horizon, gens, R=e.window, words=words)
        out = {"mode": "free", "letters": [g.format(w) for w in rep.path.letters], "window_radius": rep.radius,
               "stabilized_size": len(rep.stabilized_window), "limsup_size": len(rep.limsup_window),
               "liminf_size": len(rep.liminf_window), "included": rep.included, "equal": rep.equal,
               "survivors": list(rep.survivors)}
        if not rep.included:
            emit("extract.json", _json(out))
            raise Failure("stabilized window not contained in the window limsup")
    emit("extract.json", _json(out))
    return 0


def cmd_inflate(cfg, emit):
    A = cfg.band_operator()
    gens = cfg.gens
    ic = cfg.inflate
    sets, labels = cfg.section_sets()
    m = min(ic.blocks, len(sets))
    seq = inf_mod.greedy_inflating(sets, m, gens, pool_radius=ic.pool_radius, enlarged=ic.enlarged, labels=labels)
    W = ball_cache(gens).ball(ic.window) if ic.window else inf_mod.default_window(seq, gens)
    mats = [ops.band_section(A, Y) for Y in seq.sets]
    asm = inf_mod.assemble_op(mats, seq, W)
    t = cfg.thresholds
    rep = inf_mod.fredholm_proxy_compare(A, sets[:m], W, tau=t.tau_stab, n0=t.n0, tau_unstab=t.tau_unstab,
                                         labels=labels[:m], enlarged=ic.enlarged, gens=gens)
    g = cfg.group
    out = rep.to_dict()
    out["shifts"] = [g.format(v) for v in seq.shifts]
    out["pairwise_disjoint"] = seq.pairwise_disjoint()
    out["block_diagonal"] = asm.is_block_diagonal()
    out["enlarged"] = ic.enlarged
    if cfg.output.dump_matrix:
        _write(cfg.output.dump_matrix, asm.matrix.dumps())
    emit("inflate.json", _json(out))
    if not (out["pairwise_disjoint"] and out["block_diagonal"]):
        raise Failure("inflating invariants violated")
    return 0


HANDLERS = {
    "ball": cmd_ball, "boundary": cmd_boundary, "section": cmd_section, "identities": cmd_identities,
    "scan": cmd_scan, "certify": cmd_certify, "extract": cmd_extract, "inflate": cmd_inflate,
}


def run(command: str, cfg: ExperimentConfig, out: Path | None = None, stdout=None) -> int:
    emit = Emitter(out, stdout or sys.stdout)
    try:
        return HANDLERS[command](cfg, emit)
    except Failure as exc:
        print(f"fsm: {exc}", file=sys.stderr)
        return 1


def main(argv=None) -> int:
    parser = build_parser()
    a = parser.parse_args(argv)
    try:
        cfg = ExperimentConfig.load(a.config) if a.config else ExperimentConfig()
        cfg = _merge(cfg, a)
        return run(a.command, cfg, a.out)
    except (ConfigError, GroupError, ValueError) as exc:
        print(f"fsm: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
