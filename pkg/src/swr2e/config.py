"""Run configuration: typed sections, INI parsing, shipped presets.

A run is described by one INI file with key = value sections.  Every key
maps onto a field of one of the frozen dataclasses below, and every parse
or consistency failure is reported with its `section.key` path so a bad
preset is diagnosable from the message alone.  The named presets that
reproduce the reference experiments ship inside the package under
`swr2e/presets/` and are loaded by name; anything else is read from the
filesystem.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path


class ConfigError(ValueError):
    """Invalid configuration value, reported with its section.key path."""


# ---------------------------------------------------------------------------
# sections


@dataclass(frozen=True)
class DomainConfig:
    bounds: tuple[float, float, float, float] = (-1.0, 1.0, -1.0, 1.0)
    points: tuple[int, int] = (101, 101)


@dataclass(frozen=True)
class LayoutConfig:
    L: int = 1
    overlap: float = 0.0
    overlap_kind: str = "fraction"  # fraction of block width | absolute


@dataclass(frozen=True)
class BasisConfig:
    kind: str = "gaussian"  # gaussian | slater | gaussian-determinant
    n_phi: int = 6          # gaussian: centers per axis (n_phi^2 functions)
    delta: float = 0.5      # gaussian exponent
    centers: tuple[float, ...] = ()  # gaussian-determinant 1-d centers
    orbitals: int = 0       # slater: confined orbitals per block
    cross_pairs: bool = True
    barrier_height: float = 3e3
    augment_delta: float | None = None  # boundary Gaussians, when set
    augment_per_side: int = 5
    augment_drop_tol: float = 1e-8


@dataclass(frozen=True)
class PotentialConfig:
    model: str = "none"  # none | smoothed | softcore
    nuclei: tuple[float, ...] = ()
    charges: tuple[float, ...] = ()
    eta: float | None = None
    eta_ee: float | None = None
    mollifier_eps: float | None = None
    mollifier_order: int = 4
    ee: bool = True
    scale_4pi: bool = False


@dataclass(frozen=True)
class InitialConfig:
    kind: str = "gaussian"  # gaussian | antisym-pair
    alpha: float = 1.0      # gaussian: exp(-alpha r^2)
    center: float = 0.0
    a: float = 10.0         # antisym-pair axis widths
    b: float = 5.0
    normalize: bool = False


@dataclass(frozen=True)
class TransmissionConfig:
    kind: str | None = None  # robin | dirichlet; None only for L = 1 runs
    mu: complex = 0.0


@dataclass(frozen=True)
class EvolutionConfig:
    mode: str = "imaginary"  # imaginary | real | projection
    dt: float = 0.1
    delta: float = 1e-8      # gradient-flow stopping threshold
    n_steps: int | None = None  # fixed level count instead of delta
    T: float | None = None   # real-time horizon
    normalize: bool = True
    antisymmetrize: bool = False


@dataclass(frozen=True)
class LaserConfig:
    E0: float = 0.0
    omega0: float = 0.0
    nu0: float = 0.0
    mode: str = "circular"  # circular | linear-scalar


@dataclass(frozen=True)
class SwrIterConfig:
    delta_sc: float = 1e-8
    max_sweeps: int = 200
    residual_mode: str = "trace"  # trace | tcvg
    workers: int | None = None


@dataclass(frozen=True)
class OutputConfig:
    dir: str = "runs/out"
    dump_stride: int = 0        # grid dump every k sweeps; 0 = final only
    dump_format: str = "binary"  # binary | csv


@dataclass(frozen=True)
class RunConfig:
    name: str
    domain: DomainConfig = field(default_factory=DomainConfig)
    layout: LayoutConfig = field(default_factory=LayoutConfig)
    basis: BasisConfig = field(default_factory=BasisConfig)
    potential: PotentialConfig = field(default_factory=PotentialConfig)
    initial: InitialConfig = field(default_factory=InitialConfig)
    transmission: TransmissionConfig = field(default_factory=TransmissionConfig)
    evolution: EvolutionConfig = field(default_factory=EvolutionConfig)
    laser: LaserConfig | None = None
    swr: SwrIterConfig = field(default_factory=SwrIterConfig)
    output: OutputConfig = field(default_factory=OutputConfig)


# ---------------------------------------------------------------------------
# scalar parsers


def _fail(section: str, key: str, message: str):
    raise ConfigError(f"{section}.{key}: {message}")


def _parse_float(raw: str) -> float:
    return float(raw)


def _parse_int(raw: str) -> int:
    return int(raw, 10)


def _parse_bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: '{raw}'")


def _parse_complex(raw: str) -> complex:
    return complex(raw.strip().replace(" ", ""))


def _parse_floats(raw: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in raw.replace(",", " ").split())


def _parse_ints(raw: str) -> tuple[int, ...]:
    return tuple(int(tok, 10) for tok in raw.replace(",", " ").split())


def _parse_str(raw: str) -> str:
    return raw.strip()


class _Section:
    """One INI section with typed, path-reporting accessors."""

    def __init__(self, name: str, raw: dict[str, str]):
        self.name = name
        self.raw = raw
        self.seen: set[str] = set()

    def get(self, key: str, parse, default):
        self.seen.add(key)
        if key not in self.raw or self.raw[key].strip() == "":
            return default
        try:
            return parse(self.raw[key])
        except (ValueError, TypeError) as exc:
            _fail(self.name, key, str(exc))

    def require(self, key: str, parse):
        self.seen.add(key)
        if key not in self.raw or self.raw[key].strip() == "":
            _fail(self.name, key, "required key is missing")
        try:
            return parse(self.raw[key])
        except (ValueError, TypeError) as exc:
            _fail(self.name, key, str(exc))

    def reject_unknown(self):
        extra = sorted(set(self.raw) - self.seen)
        if extra:
            _fail(self.name, extra[0], "unknown key")


# ---------------------------------------------------------------------------
# file -> RunConfig


_SECTIONS = ("domain", "layout", "basis", "potential", "initial",
             "transmission", "evolution", "laser", "swr", "output")


def parse_config(text: str, name: str) -> RunConfig:
    """Parse one INI document into a validated RunConfig."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc

    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"{section}: unknown section")

    def section(sec_name: str) -> _Section:
        raw = dict(parser[sec_name]) if parser.has_section(sec_name) else {}
        return _Section(sec_name, raw)

    dom = section("domain")
    bounds = dom.require("bounds", _parse_floats)
    if len(bounds) != 4:
        _fail("domain", "bounds", "expected four numbers: a b c d")
    points = dom.require("points", _parse_ints)
    if len(points) != 2:
        _fail("domain", "points", "expected two integers: n_x1 n_x2")
    dom.reject_unknown()
    domain = DomainConfig(tuple(bounds), tuple(points))

    lay = section("layout")
    layout = LayoutConfig(
        L=lay.get("l", _parse_int, 1),
        overlap=lay.get("overlap", _parse_float, 0.0),
        overlap_kind=lay.get("overlap_kind", _parse_str, "fraction"),
    )
    lay.reject_unknown()

    bas = section("basis")
    basis = BasisConfig(
        kind=bas.get("kind", _parse_str, "gaussian"),
        n_phi=bas.get("n_phi", _parse_int, 6),
        delta=bas.get("delta", _parse_float, 0.5),
        centers=bas.get("centers", _parse_floats, ()),
        orbitals=bas.get("orbitals", _parse_int, 0),
        cross_pairs=bas.get("cross_pairs", _parse_bool, True),
        barrier_height=bas.get("barrier_height", _parse_float, 3e3),
        augment_delta=bas.get("augment_delta", _parse_float, None),
        augment_per_side=bas.get("augment_per_side", _parse_int, 5),
        augment_drop_tol=bas.get("augment_drop_tol", _parse_float, 1e-8),
    )
    bas.reject_unknown()

    pot = section("potential")
    nuclei = pot.get("nuclei", _parse_floats, ())
    potential = PotentialConfig(
        model=pot.get("model", _parse_str, "none"),
        nuclei=nuclei,
        charges=pot.get("charges", _parse_floats,
                        tuple(1.0 for _ in nuclei)),
        eta=pot.get("eta", _parse_float, None),
        eta_ee=pot.get("eta_ee", _parse_float, None),
        mollifier_eps=pot.get("mollifier_eps", _parse_float, None),
        mollifier_order=pot.get("mollifier_order", _parse_int, 4),
        ee=pot.get("ee", _parse_bool, True),
        scale_4pi=pot.get("scale_4pi", _parse_bool, False),
    )
    pot.reject_unknown()

    ini = section("initial")
    initial = InitialConfig(
        kind=ini.get("kind", _parse_str, "gaussian"),
        alpha=ini.get("alpha", _parse_float, 1.0),
        center=ini.get("center", _parse_float, 0.0),
        a=ini.get("a", _parse_float, 10.0),
        b=ini.get("b", _parse_float, 5.0),
        normalize=ini.get("normalize", _parse_bool, False),
    )
    ini.reject_unknown()

    tra = section("transmission")
    transmission = TransmissionConfig(
        kind=tra.get("kind", _parse_str, None),
        mu=tra.get("mu", _parse_complex, 0.0),
    )
    tra.reject_unknown()

    evo = section("evolution")
    evolution = EvolutionConfig(
        mode=evo.get("mode", _parse_str, "imaginary"),
        dt=evo.get("dt", _parse_float, 0.1),
        delta=evo.get("delta", _parse_float, 1e-8),
        n_steps=evo.get("n_steps", _parse_int, None),
        T=evo.get("t", _parse_float, None),
        normalize=evo.get("normalize", _parse_bool, True),
        antisymmetrize=evo.get("antisymmetrize", _parse_bool, False),
    )
    evo.reject_unknown()

    las = section("laser")
    laser = None
    if las.raw:
        laser = LaserConfig(
            E0=las.require("e0", _parse_float),
            omega0=las.require("omega0", _parse_float),
            nu0=las.require("nu0", _parse_float),
            mode=las.get("mode", _parse_str, "circular"),
        )
    las.reject_unknown()

    swr = section("swr")
    swr_cfg = SwrIterConfig(
        delta_sc=swr.get("delta_sc", _parse_float, 1e-8),
        max_sweeps=swr.get("max_sweeps", _parse_int, 200),
        residual_mode=swr.get("residual_mode", _parse_str, "trace"),
        workers=swr.get("workers", _parse_int, None),
    )
    swr.reject_unknown()

    out = section("output")
    output = OutputConfig(
        dir=out.get("dir", _parse_str, f"runs/{name}"),
        dump_stride=out.get("dump_stride", _parse_int, 0),
        dump_format=out.get("dump_format", _parse_str, "binary"),
    )
    out.reject_unknown()

    cfg = RunConfig(name, domain, layout, basis, potential, initial,
                    transmission, evolution, laser, swr_cfg, output)
    validate_config(cfg)
    return cfg


# ---------------------------------------------------------------------------
# cross-field validation


def _check(ok: bool, section: str, key: str, message: str):
    if not ok:
        _fail(section, key, message)


def validate_config(cfg: RunConfig):
    """Consistency checks across sections, with section.key messages."""
    a, b, c, d = cfg.domain.bounds
    _check(a < b and c < d, "domain", "bounds", "bounds must be increasing")
    _check(min(cfg.domain.points) >= 3, "domain", "points",
           "need at least 3 points per axis")
    _check(cfg.layout.L >= 1, "layout", "l", "L must be at least 1")
    _check(cfg.layout.overlap >= 0, "layout", "overlap",
           "overlap cannot be negative")
    _check(cfg.layout.overlap_kind in ("fraction", "absolute"),
           "layout", "overlap_kind", "expected 'fraction' or 'absolute'")

    kinds = ("gaussian", "slater", "gaussian-determinant")
    _check(cfg.basis.kind in kinds, "basis", "kind",
           f"expected one of {kinds}")
    if cfg.basis.kind == "gaussian":
        _check(cfg.basis.n_phi >= 1, "basis", "n_phi", "must be at least 1")
        _check(cfg.basis.delta > 0, "basis", "delta", "must be positive")
    elif cfg.basis.kind == "slater":
        _check(cfg.basis.orbitals >= 2, "basis", "orbitals",
               "need at least 2 orbitals per block")
        _check(cfg.basis.barrier_height > 0, "basis", "barrier_height",
               "must be positive")
        _check(abs((b - a) - (d - c)) < 1e-12 * max(abs(b - a), 1.0)
               and cfg.domain.points[0] == cfg.domain.points[1],
               "basis", "kind", "slater basis needs a square domain and grid")
    else:
        _check(len(cfg.basis.centers) >= 2, "basis", "centers",
               "need at least two 1-d centers")
        _check(cfg.basis.delta > 0, "basis", "delta", "must be positive")
    if cfg.basis.augment_delta is not None:
        _check(cfg.basis.augment_delta > 0, "basis", "augment_delta",
               "must be positive")
        _check(cfg.basis.augment_per_side >= 1, "basis", "augment_per_side",
               "must be at least 1")

    models = ("none", "smoothed", "softcore")
    _check(cfg.potential.model in models, "potential", "model",
           f"expected one of {models}")
    if cfg.potential.model != "none":
        _check(len(cfg.potential.nuclei) > 0, "potential", "nuclei",
               "a nuclear model needs nucleus positions")
        _check(len(cfg.potential.charges) == len(cfg.potential.nuclei),
               "potential", "charges", "one charge per nucleus")
    if cfg.potential.model == "smoothed":
        _check(cfg.potential.mollifier_eps is not None
               and cfg.potential.mollifier_eps > 0,
               "potential", "mollifier_eps",
               "the smoothed model needs a positive mollifier width")
    if cfg.potential.model == "softcore":
        _check(cfg.potential.eta is not None and cfg.potential.eta > 0,
               "potential", "eta",
               "the soft-core model needs a positive eta")

    _check(cfg.initial.kind in ("gaussian", "antisym-pair"),
           "initial", "kind", "expected 'gaussian' or 'antisym-pair'")
    if cfg.initial.kind == "gaussian":
        _check(cfg.initial.alpha > 0, "initial", "alpha", "must be positive")
    else:
        _check(cfg.initial.a > 0 and cfg.initial.b > 0, "initial", "a",
               "pair widths must be positive")

    modes = ("imaginary", "real", "projection")
    _check(cfg.evolution.mode in modes, "evolution", "mode",
           f"expected one of {modes}")
    if cfg.evolution.mode != "projection":
        _check(cfg.evolution.dt > 0, "evolution", "dt", "must be positive")
        _check(cfg.evolution.delta > 0, "evolution", "delta",
               "must be positive")
        if cfg.layout.L > 1:
            _check(cfg.transmission.kind in ("robin", "dirichlet"),
                   "transmission", "kind",
                   "a decomposed run needs 'robin' or 'dirichlet'")
    if cfg.evolution.mode == "real":
        _check(cfg.evolution.T is not None and cfg.evolution.T > 0,
               "evolution", "t", "real-time evolution needs a horizon T > 0")
    if cfg.evolution.n_steps is not None:
        _check(cfg.evolution.n_steps >= 1, "evolution", "n_steps",
               "must be at least 1")
    if cfg.laser is not None:
        _check(cfg.evolution.mode == "real", "laser", "e0",
               "a laser only applies to real-time evolution")
        _check(cfg.laser.mode in ("circular", "linear-scalar"),
               "laser", "mode", "expected 'circular' or 'linear-scalar'")

    _check(cfg.swr.delta_sc > 0, "swr", "delta_sc", "must be positive")
    _check(cfg.swr.max_sweeps >= 1, "swr", "max_sweeps",
           "must be at least 1")
    _check(cfg.swr.residual_mode in ("trace", "tcvg"), "swr",
           "residual_mode", "expected 'trace' or 'tcvg'")
    if cfg.swr.workers is not None:
        _check(cfg.swr.workers >= 1, "swr", "workers", "must be at least 1")

    _check(cfg.output.dump_stride >= 0, "output", "dump_stride",
           "cannot be negative")
    _check(cfg.output.dump_format in ("binary", "csv"), "output",
           "dump_format", "expected 'binary' or 'csv'")


# ---------------------------------------------------------------------------
# presets and the load entry point


def available_presets() -> list[str]:
    """Names of the INI presets shipped inside the package."""
    root = resources.files("swr2e") / "presets"
    return sorted(p.name[:-4] for p in root.iterdir()
                  if p.name.endswith(".ini"))


def load_config(source: str | Path) -> RunConfig:
    """RunConfig from a shipped preset name or an INI file path."""
    text = None
    name = str(source)
    if isinstance(source, str) and "/" not in source \
            and not source.endswith(".ini"):
        entry = resources.files("swr2e") / "presets" / f"{source}.ini"
        if entry.is_file():
            text = entry.read_text()
    if text is None:
        path = Path(source)
        if not path.is_file():
            raise ConfigError(
                f"'{source}' is neither a shipped preset "
                f"({', '.join(available_presets())}) nor a config file")
        text = path.read_text()
        name = path.stem
    return parse_config(text, name)


def override(cfg: RunConfig, axis: str, value) -> RunConfig:
    """cfg with one sweep axis replaced: mu | dt | overlap | L."""
    if axis == "mu":
        return replace(cfg, transmission=replace(cfg.transmission,
                                                 mu=complex(value)))
    if axis == "dt":
        return replace(cfg, evolution=replace(cfg.evolution,
                                              dt=float(value)))
    if axis == "overlap":
        return replace(cfg, layout=replace(cfg.layout,
                                           overlap=float(value)))
    if axis == "L":
        return replace(cfg, layout=replace(cfg.layout, L=int(value)))
    raise ConfigError(f"unknown sweep axis '{axis}' "
                      "(expected mu, dt, overlap or L)")
