"""Sectioned key=value run configuration.

The format is INI style: ten known sections, '#' or ';' comments, every
key optional except the source matching type and the two scan grids.
Unknown sections or keys are rejected rather than ignored, because a
config file is the archival record of a run.  Grids are written
"start : stop : n".  parse(canonical_text(cfg)) reproduces cfg exactly;
the run hash is taken over that canonical text.
"""

from __future__ import annotations

import configparser
import hashlib
import math
from dataclasses import dataclass
from pathlib import Path

from .montecarlo import (
    AliceMode,
    CoincidenceSpec,
    ExperimentConfig,
    GridSpec,
    NoiseSpec,
)
from .optics import BeamSplitterSpec, InterferometerSpec, SourceSpec, SourceType, StateModel
from .timing import CollapseSpec, Geometry

__all__ = [
    "ConfigError",
    "ParsedRun",
    "canonical_text",
    "config_hash",
    "load_config",
    "parse_config",
    "parse_run",
]

_SCHEMA: dict[str, tuple[str, ...]] = {
    "source": ("matching_type", "phi_deg"),
    "model": ("name",),
    "optics_a": ("tau", "rho", "phase_t", "phase_r"),
    "optics_b": ("tau", "rho", "phase_t", "phase_r"),
    "interferometer": ("k", "delta_r", "theta_0", "zeta", "eta"),
    "geometry": (
        "path_s_to_a",
        "path_s_to_b",
        "dist_a_to_b",
        "dist_a_to_b_alt",
        "c_eff",
    ),
    "collapse": ("speed",),
    "noise": (
        "epsilon",
        "noise_fringe_visibility",
        "detector_efficiency",
        "dark_rate",
        "jitter_sigma",
    ),
    "coincidence": ("window", "enabled"),
    "run": (
        "trials_per_point",
        "delta_r_grid",
        "k_grid",
        "master_seed",
        "workers",
        "alice_mode",
    ),
}

_TRUE = frozenset({"true", "yes", "on", "1"})
_FALSE = frozenset({"false", "no", "off", "0"})


class ConfigError(Exception):
    """Unparseable, unknown, missing, or invariant-violating configuration."""


class _Sections:
    """Schema-checked access to raw string values."""

    def __init__(self, parser: configparser.ConfigParser) -> None:
        self._raw: dict[str, dict[str, str]] = {}
        for section in parser.sections():
            if section not in _SCHEMA:
                raise ConfigError(
                    f"unknown section [{section}]; known sections: "
                    + ", ".join(sorted(_SCHEMA))
                )
            known = _SCHEMA[section]
            for key, value in parser.items(section):
                if key not in known:
                    raise ConfigError(
                        f"unknown key '{key}' in [{section}]; known keys: "
                        + ", ".join(known)
                    )
                self._raw.setdefault(section, {})[key] = value.strip()

    def get(self, section: str, key: str) -> str | None:
        return self._raw.get(section, {}).get(key)


def _parse_float(raw: str, where: str) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise ConfigError(f"{where}: expected a number, got {raw!r}") from None
    if math.isnan(value):
        raise ConfigError(f"{where}: NaN is not a valid value")
    return value


def _parse_int(raw: str, where: str) -> int:
    try:
        return int(raw, 10)
    except ValueError:
        raise ConfigError(f"{where}: expected an integer, got {raw!r}") from None


def _parse_bool(raw: str, where: str) -> bool:
    lowered = raw.lower()
    if lowered in _TRUE:
        return True
    if lowered in _FALSE:
        return False
    raise ConfigError(f"{where}: expected true/false, got {raw!r}")


def _parse_grid(raw: str, where: str) -> GridSpec:
    parts = [p.strip() for p in raw.split(":")]
    if len(parts) != 3:
        raise ConfigError(f"{where}: expected 'start : stop : n', got {raw!r}")
    start = _parse_float(parts[0], where)
    stop = _parse_float(parts[1], where)
    n = _parse_int(parts[2], where)
    try:
        return GridSpec(start=start, stop=stop, n=n)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _float_or(sec: _Sections, section: str, key: str, default: float) -> float:
    raw = sec.get(section, key)
    return default if raw is None else _parse_float(raw, f"[{section}] {key}")


def _build(cls, where: str, /, **kwargs):
    try:
        return cls(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _splitter(sec: _Sections, section: str) -> BeamSplitterSpec:
    tau = sec.get(section, "tau")
    rho = sec.get(section, "rho")
    if (tau is None) != (rho is None):
        raise ConfigError(f"[{section}]: tau and rho must be given together")
    phase_t = _float_or(sec, section, "phase_t", 0.0)
    phase_r = _float_or(sec, section, "phase_r", 0.0)
    if tau is None:
        base = BeamSplitterSpec.balanced()
        return _build(
            BeamSplitterSpec,
            f"[{section}]",
            tau=base.tau,
            rho=base.rho,
            phase_t=phase_t,
            phase_r=phase_r,
        )
    return _build(
        BeamSplitterSpec,
        f"[{section}]",
        tau=_parse_float(tau, f"[{section}] tau"),
        rho=_parse_float(rho, f"[{section}] rho"),
        phase_t=phase_t,
        phase_r=phase_r,
    )


def _enum_value(enum_cls, raw: str, where: str):
    try:
        return enum_cls(raw.lower())
    except ValueError:
        options = ", ".join(m.value for m in enum_cls)
        raise ConfigError(f"{where}: expected one of {options}, got {raw!r}") from None


@dataclass(frozen=True)
class ParsedRun:
    """A run config plus file-level extras that sit outside it."""

    config: ExperimentConfig
    dist_a_to_b_alt: float | None


def parse_run(text: str) -> ParsedRun:
    parser = configparser.ConfigParser(
        interpolation=None,
        delimiters=("=",),
        comment_prefixes=("#", ";"),
        inline_comment_prefixes=("#", ";"),
        strict=True,
        default_section="__defaults__",
    )
    parser.optionxform = str.lower
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"syntax error: {exc}") from None
    sec = _Sections(parser)

    matching = sec.get("source", "matching_type")
    if matching is None:
        raise ConfigError("[source] matching_type is required (type1 or type2)")
    source = _build(
        SourceSpec,
        "[source]",
        matching_type=_enum_value(SourceType, matching, "[source] matching_type"),
        phi_deg=_float_or(sec, "source", "phi_deg", 45.0),
    )

    model_raw = sec.get("model", "name")
    model = (
        StateModel.REDUCED_BELL
        if model_raw is None
        else _enum_value(StateModel, model_raw, "[model] name")
    )

    bs_a = _splitter(sec, "optics_a")
    bs_b = _splitter(sec, "optics_b")

    interferometer = _build(
        InterferometerSpec,
        "[interferometer]",
        k=_float_or(sec, "interferometer", "k", 2.0e6 * math.pi),
        delta_r=_float_or(sec, "interferometer", "delta_r", 0.0),
        theta_0=_float_or(sec, "interferometer", "theta_0", 0.0),
        zeta=_float_or(sec, "interferometer", "zeta", 0.0),
        eta=_float_or(sec, "interferometer", "eta", 0.5),
    )

    geometry = _build(
        Geometry,
        "[geometry]",
        path_s_to_a=_float_or(sec, "geometry", "path_s_to_a", 30.0),
        path_s_to_b=_float_or(sec, "geometry", "path_s_to_b", 33.0),
        dist_a_to_b=_float_or(sec, "geometry", "dist_a_to_b", 60.0),
        c_eff=_float_or(sec, "geometry", "c_eff", 3.0e8),
    )
    alt_raw = sec.get("geometry", "dist_a_to_b_alt")
    dist_alt = (
        None if alt_raw is None else _parse_float(alt_raw, "[geometry] dist_a_to_b_alt")
    )
    if dist_alt is not None and dist_alt <= 0:
        raise ConfigError("[geometry] dist_a_to_b_alt must be positive")

    speed_raw = sec.get("collapse", "speed")
    if speed_raw is None or speed_raw.lower() in ("infinite", "inf"):
        collapse = CollapseSpec.infinite()
    else:
        collapse = _build(
            CollapseSpec, "[collapse]", speed=_parse_float(speed_raw, "[collapse] speed")
        )

    noise = _build(
        NoiseSpec,
        "[noise]",
        epsilon=_float_or(sec, "noise", "epsilon", 0.0),
        noise_fringe_visibility=_float_or(sec, "noise", "noise_fringe_visibility", 1.0),
        detector_efficiency=_float_or(sec, "noise", "detector_efficiency", 1.0),
        dark_rate=_float_or(sec, "noise", "dark_rate", 0.0),
        jitter_sigma=_float_or(sec, "noise", "jitter_sigma", 0.0),
    )

    enabled_raw = sec.get("coincidence", "enabled")
    coincidence = _build(
        CoincidenceSpec,
        "[coincidence]",
        window=_float_or(sec, "coincidence", "window", 2.0e-7),
        enabled=True
        if enabled_raw is None
        else _parse_bool(enabled_raw, "[coincidence] enabled"),
    )

    delta_r_raw = sec.get("run", "delta_r_grid")
    if delta_r_raw is None:
        raise ConfigError("[run] delta_r_grid is required (format: start : stop : n)")
    k_raw = sec.get("run", "k_grid")
    if k_raw is None:
        raise ConfigError("[run] k_grid is required (format: start : stop : n)")

    trials_raw = sec.get("run", "trials_per_point")
    seed_raw = sec.get("run", "master_seed")
    workers_raw = sec.get("run", "workers")
    mode_raw = sec.get("run", "alice_mode")
    config = _build(
        ExperimentConfig,
        "[run]",
        source=source,
        model=model,
        bs_a=bs_a,
        bs_b=bs_b,
        interferometer=interferometer,
        geometry=geometry,
        collapse=collapse,
        noise=noise,
        coincidence=coincidence,
        trials_per_point=20000
        if trials_raw is None
        else _parse_int(trials_raw, "[run] trials_per_point"),
        delta_r_grid=_parse_grid(delta_r_raw, "[run] delta_r_grid"),
        k_grid=_parse_grid(k_raw, "[run] k_grid"),
        master_seed=0 if seed_raw is None else _parse_int(seed_raw, "[run] master_seed"),
        workers=1 if workers_raw is None else _parse_int(workers_raw, "[run] workers"),
        alice_mode=AliceMode.BOTH
        if mode_raw is None
        else _enum_value(AliceMode, mode_raw, "[run] alice_mode"),
    )
    return ParsedRun(config=config, dist_a_to_b_alt=dist_alt)


def parse_config(text: str) -> ExperimentConfig:
    """Parse config text, applying documented defaults; rejects unknown keys."""
    return parse_run(text).config


def load_config(path: str | Path) -> ParsedRun:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_run(text)


def _fmt(value: float) -> str:
    return repr(float(value))


def _grid_text(grid: GridSpec) -> str:
    return f"{_fmt(grid.start)} : {_fmt(grid.stop)} : {grid.n}"


def canonical_text(
    cfg: ExperimentConfig, *, dist_a_to_b_alt: float | None = None
) -> str:
    """Full config serialization with every key explicit, fixed order."""
    lines = [
        "[source]",
        f"matching_type = {cfg.source.matching_type.value}",
        f"phi_deg = {_fmt(cfg.source.phi_deg)}",
        "",
        "[model]",
        f"name = {cfg.model.value}",
    ]
    for section, bs in (("optics_a", cfg.bs_a), ("optics_b", cfg.bs_b)):
        lines += [
            "",
            f"[{section}]",
            f"tau = {_fmt(bs.tau)}",
            f"rho = {_fmt(bs.rho)}",
            f"phase_t = {_fmt(bs.phase_t)}",
            f"phase_r = {_fmt(bs.phase_r)}",
        ]
    ifm = cfg.interferometer
    lines += [
        "",
        "[interferometer]",
        f"k = {_fmt(ifm.k)}",
        f"delta_r = {_fmt(ifm.delta_r)}",
        f"theta_0 = {_fmt(ifm.theta_0)}",
        f"zeta = {_fmt(ifm.zeta)}",
        f"eta = {_fmt(ifm.eta)}",
        "",
        "[geometry]",
        f"path_s_to_a = {_fmt(cfg.geometry.path_s_to_a)}",
        f"path_s_to_b = {_fmt(cfg.geometry.path_s_to_b)}",
        f"dist_a_to_b = {_fmt(cfg.geometry.dist_a_to_b)}",
    ]
    if dist_a_to_b_alt is not None:
        lines.append(f"dist_a_to_b_alt = {_fmt(dist_a_to_b_alt)}")
    lines += [
        f"c_eff = {_fmt(cfg.geometry.c_eff)}",
        "",
        "[collapse]",
        "speed = infinite"
        if cfg.collapse.is_infinite
        else f"speed = {_fmt(cfg.collapse.speed)}",
        "",
        "[noise]",
        f"epsilon = {_fmt(cfg.noise.epsilon)}",
        f"noise_fringe_visibility = {_fmt(cfg.noise.noise_fringe_visibility)}",
        f"detector_efficiency = {_fmt(cfg.noise.detector_efficiency)}",
        f"dark_rate = {_fmt(cfg.noise.dark_rate)}",
        f"jitter_sigma = {_fmt(cfg.noise.jitter_sigma)}",
        "",
        "[coincidence]",
        f"window = {_fmt(cfg.coincidence.window)}",
        f"enabled = {'true' if cfg.coincidence.enabled else 'false'}",
        "",
        "[run]",
        f"trials_per_point = {cfg.trials_per_point}",
        f"delta_r_grid = {_grid_text(cfg.delta_r_grid)}",
        f"k_grid = {_grid_text(cfg.k_grid)}",
        f"master_seed = {cfg.master_seed}",
        f"workers = {cfg.workers}",
        f"alice_mode = {cfg.alice_mode.value}",
    ]
    return "\n".join(lines) + "\n"


def config_hash(
    cfg: ExperimentConfig, *, dist_a_to_b_alt: float | None = None
) -> str:
    text = canonical_text(cfg, dist_a_to_b_alt=dist_a_to_b_alt)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]
