"""Experiment configs: INI files read with configparser, strict keys, one experiment per file.

Schema (every key optional; lists are ';'-separated, comments start with '#')::

    [experiment]
    group = Z^N:1          # Z^N:k, F:k or H3
    generators =           # literal override, e.g. (1);(-1);(2)
    seed = 0

    [operator]
    preset = 2I+L1         # shift | adjacency | laplacian | 2I+L1 | identity
    terms =                # shift:coefficient pairs, e.g. (0):2; (1):1   (overrides preset)

    [sections]
    kind = balls           # balls | interval | files
    nmax = 20
    start = 0              # interval: Y_n = {start..start+n} in Z
    files =                # files: one set dump per section

    [thresholds]
    tau_stab = 1e-6
    tau_unstab = 1e-10
    n0 = 5
    reference_norm =       # optional certified value of ||A||

    [identities]
    radius = 3             # A = Omega_radius
    ambient = 0            # ambient ball radius, 0 = radius + 2
    samples = 20           # random chain / quasicommutator instances
    max_order = 4

    [certify]
    window = 30
    period = 2
    paths =                # explicit patterns, letters ','-separated, e.g. (1); (-1)

    [extract]
    mode = commutative     # commutative | free
    sequence = diagonal:10 # diagonal:N | free-example:N | explicit
    pairs =                # explicit n:literal pairs
    words =                # explicit k:letter,letter,... decompositions
    horizon = 10
    window = 5

    [inflate]
    blocks = 20
    enlarged = false
    pool_radius = 4096
    window = 0             # 0 = smallest ball containing the blocks

    [output]
    format = csv
    dump_matrix =
    dump_set =
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields
from pathlib import Path

from .groups import GeneratorSet, Group, parse_group
from .operators import BandOperator
from .sets import FiniteSubset, ball_cache


class ConfigError(ValueError):
    pass


def _split(s: str, sep: str = ";") -> list[str]:
    return [t.strip() for t in s.split(sep) if t.strip()]


@dataclass
class ExperimentSection:
    group: str = "Z^N:1"
    generators: str = ""
    seed: int = 0


@dataclass
class OperatorSection:
    preset: str = "2I+L1"
    terms: str = ""


@dataclass
class SectionsSection:
    kind: str = "balls"
    nmax: int = 20
    start: int = 0
    files: str = ""


@dataclass
class ThresholdsSection:
    tau_stab: float = 1e-6
    tau_unstab: float = 1e-10
    n0: int = 5
    reference_norm: str = ""


@dataclass
class IdentitiesSection:
    radius: int = 3
    ambient: int = 0
    samples: int = 20
    max_order: int = 4


@dataclass
class CertifySection:
    window: int = 30
    period: int = 2
    paths: str = ""


@dataclass
class ExtractSection:
    mode: str = "commutative"
    sequence: str = "diagonal:10"
    pairs: str = ""
    words: str = ""
    horizon: int = 10
    window: int = 5


@dataclass
class InflateSection:
    blocks: int = 20
    enlarged: bool = False
    pool_radius: int = 4096
    window: int = 0


@dataclass
class OutputSection:
    format: str = "csv"
    dump_matrix: str = ""
    dump_set: str = ""


@dataclass
class ExperimentConfig:
    experiment: ExperimentSection = field(default_factory=ExperimentSection)
    operator: OperatorSection = field(default_factory=OperatorSection)
    sections: SectionsSection = field(default_factory=SectionsSection)
    thresholds: ThresholdsSection = field(default_factory=ThresholdsSection)
    identities: IdentitiesSection = field(default_factory=IdentitiesSection)
    certify: CertifySection = field(default_factory=CertifySection)
    extract: ExtractSection = field(default_factory=ExtractSection)
    inflate: InflateSection = field(default_factory=InflateSection)
    output: OutputSection = field(default_factory=OutputSection)
    base_dir: Path = field(default_factory=Path.cwd)

    # -- loading -------------------------------------------------------
    @classmethod
    def from_text(cls, text: str, base_dir: Path | None = None) -> "ExperimentConfig":
        cp = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
        cp.optionxform = str
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"config parse error: {exc}") from exc
        cfg = cls()
        if base_dir is not None:
            cfg.base_dir = base_dir
        known = {f.name for f in fields(cls) if f.name != "base_dir"}
        for sec in cp.sections():
            if sec not in known:
                raise ConfigError(f"unknown section [{sec}]")
            target = getattr(cfg, sec)
            types = {f.name: f.type for f in fields(target)}
            for key, raw in cp.items(sec):
                if key not in types:
                    raise ConfigError(f"[{sec}] unknown key {key!r}")
                setattr(target, key, _coerce(sec, key, raw, types[key]))
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        p = Path(path)
        try:
            text = p.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {p}: {exc}") from exc
        return cls.from_text(text, p.parent)

    def validate(self):
        t = self.thresholds
        for name in ("tau_stab", "tau_unstab"):
            if not getattr(t, name) > 0:
                raise ConfigError(f"[thresholds] {name} must be positive")
        if t.reference_norm:
            try:
                if not float(t.reference_norm) > 0:
                    raise ValueError
            except ValueError:
                raise ConfigError("[thresholds] reference_norm must be a positive number") from None
        if self.sections.kind not in ("balls", "interval", "files"):
            raise ConfigError(f"[sections] kind {self.sections.kind!r} not one of balls, interval, files")
        if self.output.format not in ("csv", "json"):
            raise ConfigError(f"[output] format {self.output.format!r} not csv or json")
        if self.extract.mode not in ("commutative", "free"):
            raise ConfigError(f"[extract] mode {self.extract.mode!r} not commutative or free")
        if self.operator.preset not in PRESETS:
            raise ConfigError(f"[operator] unknown preset {self.operator.preset!r}")
        try:
            parse_group(self.experiment.group)
        except Exception as exc:
            raise ConfigError(f"[experiment] group: {exc}") from None

    # -- derived objects -----------------------------------------------
    @property
    def group(self) -> Group:
        return parse_group(self.experiment.group)

    @property
    def gens(self) -> GeneratorSet:
        g = self.group
        if self.experiment.generators.strip():
            return GeneratorSet.from_literals(g, _split(self.experiment.generators))
        return GeneratorSet.standard(g)

    def band_operator(self) -> BandOperator:
        return build_operator(self.group, self.operator.preset, self.operator.terms)

    def section_sets(self, nmax: int | None = None) -> tuple[list[FiniteSubset], list[int]]:
        s = self.sections
        g = self.group
        N = s.nmax if nmax is None else nmax
        if s.kind == "balls":
            bc = ball_cache(self.gens)
            return [bc.ball(n) for n in range(N + 1)], list(range(N + 1))
        if s.kind == "interval":
            if g.kind != "Z^N" or g.rank != 1:
                raise ConfigError("[sections] interval sections need group Z^N:1")
            return [FiniteSubset(g, [(s.start + i,) for i in range(n + 1)]) for n in range(N + 1)], list(range(N + 1))
        paths = _split(s.files)
        if not paths:
            raise ConfigError("[sections] kind=files needs files")
        sets = [FiniteSubset.loads(g, (self.base_dir / p).read_text()) for p in paths]
        return sets, list(range(len(sets)))


def _coerce(sec: str, key: str, raw: str, typ):
    raw = raw.strip()
    try:
        if typ in (int, "int"):
            return int(raw)
        if typ in (float, "float"):
            return float(raw)
        if typ in (bool, "bool"):
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
    except ValueError as exc:
        raise ConfigError(f"[{sec}] {key}: {exc}") from None
    return raw


def _first_letter(g: Group):
    return g.standard_generators()[0]


PRESETS = ("shift", "adjacency", "laplacian", "2I+L1", "identity")


def build_operator(g: Group, preset: str, terms: str = "") -> BandOperator:
    """Explicit ``shift:coefficient`` terms win over the named preset."""
    if terms.strip():
        out = []
        for item in _split(terms):
            lit, sep, c = item.rpartition(":")
            if not sep:
                raise ConfigError(f"[operator] term {item!r} is not shift:coefficient")
            try:
                out.append((g.parse(lit.strip()), complex(c.strip().replace(" ", ""))))
            except ValueError as exc:
                raise ConfigError(f"[operator] term {item!r}: {exc}") from None
        return BandOperator(g, out)
    letters = g.standard_generators()
    if preset == "identity":
        return BandOperator.identity(g)
    if preset == "shift":
        return BandOperator.shift(g, _first_letter(g))
    if preset == "2I+L1":
        return BandOperator(g, [(g.identity(), 2), (_first_letter(g), 1)])
    if preset == "adjacency":
        return BandOperator(g, [(w, 1) for w in letters])
    if preset == "laplacian":
        return BandOperator(g, [(w, 1) for w in letters] + [(g.identity(), -len(letters))])
    raise ConfigError(f"[operator] unknown preset {preset!r}")
