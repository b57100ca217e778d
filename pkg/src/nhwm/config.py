"""INI-style run configuration.

Syntax is ``[section]`` headers, ``key = value`` lines and ``#`` comments.
Every physical key carries its unit as a suffix (``dt_ms``, ``k_s_per_um``,
``omega_perp_hz``).  Errors report the 1-based line number.

The standard library's configparser is not used because it cannot say on
which line an unknown key or a malformed entry sits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

from .eit import LambdaParams
from .scenarios import ScenarioConfig, default_eit_params

__all__ = ["ConfigError", "RunConfig", "parse_config", "load_config", "dump_config", "SCHEMA", "set_key"]

# longest suffixes first so that "um_per_ms" wins over "ms"
UNIT_SUFFIXES = ("um_per_ms", "per_ms", "per_um", "um2", "rad", "deg", "hz", "kg", "ms", "um", "m", "s")


class ConfigError(ValueError):
    """Malformed configuration; ``line`` is 1-based or None."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "yes", "on", "1"):
        return True
    if t in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _opt_float(text: str):
    return None if text.strip().lower() in ("none", "") else float(text)


def _deg(text: str) -> float:
    return math.radians(float(text))


def _int(text: str) -> int:
    v = float(text)
    if v != int(v):
        raise ValueError(f"not an integer: {text!r}")
    return int(v)


# section -> key -> (target, converter).  Targets starting with "eit." go into
# LambdaParams, "run." into RunConfig, everything else into ScenarioConfig.
SCHEMA = {
    "physics": {
        "mass_kg": ("mass_kg", float),
        "a_s_m": ("a_s_m", float),
        "omega_perp_hz": ("omega_perp_hz", float),
    },
    "solver": {
        "n_points": ("n_points", _int),
        "extent_um": ("extent_um", float),
        "dt_ms": ("dt_ms", float),
        "t_end_ms": ("t_end_ms", float),
        "dealias": ("dealias", _bool),
        "observer_stride_ms": ("run.stride_ms", float),
        "snapshot_stride_ms": ("run.snapshot_stride_ms", float),
    },
    "scenario": {
        "variant": ("variant", str),
        "atom_number": ("atom_number", float),
        "box_length_um": ("box_length_um", float),
        "wall_width_um": ("wall_width_um", float),
        "wall_height_per_ms": ("wall_height", float),
        "k0_per_um": ("k0_per_um", float),
        "cloud_atoms": ("cloud_atoms", float),
        "cloud_width_um": ("cloud_width_um", float),
        "v_pump_um_per_ms": ("v_pump_um_per_ms", float),
        "v_signal_um_per_ms": ("v_signal_um_per_ms", float),
        "t_collision_ms": ("t_collision_ms", float),
    },
    "signal": {
        "k_s_per_um": ("k_s_per_um", float),
        "fraction": ("signal_fraction", float),
        "amplitude": ("signal_amplitude", _opt_float),
        "variance_um2": ("signal_variance_um2", float),
        "x0_um": ("x0_um", float),
        "band_half_width_per_um": ("band_half_width_per_um", float),
    },
    "loss": {
        "kind": ("loss", str),
        "t_on_ms": ("t_on_ms", float),
        "delta_e_scale": ("delta_e_scale", float),
    },
    "loss-gaussian": {
        "gamma_a_per_ms": ("gamma_a_per_ms", _opt_float),
        "k_center_per_um": ("k_loss_per_um", _opt_float),
        "sigma_per_um": ("sigma_loss_per_um", float),
    },
    "eit": {
        "omega_p_per_ms": ("eit.Omega_p", float),
        "omega_c_per_ms": ("eit.Omega_c", float),
        "delta0_per_ms": ("eit.Delta0", float),
        "gamma_per_ms": ("eit.Gamma", float),
        "q_per_um": ("eit.q", float),
        "theta_p_rad": ("eit.theta_p", float),
        "theta_c_rad": ("eit.theta_c", float),
        "theta_p_deg": ("eit.theta_p", _deg),
        "theta_c_deg": ("eit.theta_c", _deg),
        # short names, same units as the suffixed keys above
        "omega_p": ("eit.Omega_p", float),
        "omega_c": ("eit.Omega_c", float),
        "delta0": ("eit.Delta0", float),
        "gamma_decay": ("eit.Gamma", float),
        "q_um_inv": ("eit.q", float),
    },
}

# accepted on input, never written by dump_config
ALIASES = {("eit", k) for k in ("theta_p_deg", "theta_c_deg", "omega_p", "omega_c", "delta0", "gamma_decay",
                                "q_um_inv")}

REQUIRED = {"scenario": ("variant",)}


@dataclass
class RunConfig:
    """A parsed configuration file."""

    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    stride_ms: float = 0.5
    # 0 writes only the final snapshot
    snapshot_stride_ms: float = 0.0
    # (section, key) pairs in the order they appeared
    keys_seen: tuple = ()


def _split_suffix(key: str):
    for suf in UNIT_SUFFIXES:
        if key.endswith("_" + suf):
            return key[: -len(suf) - 1], suf
    return key, None


def _check_unit(section: str, key: str, lineno: int):
    stem, suf = _split_suffix(key)
    for known in SCHEMA[section]:
        kstem, ksuf = _split_suffix(known)
        if kstem == stem and ksuf != suf:
            raise ConfigError(f"unit suffix mismatch in [{section}]: {key!r} should be {known!r}", lineno)
    raise ConfigError(f"unknown key {key!r} in [{section}]", lineno)


def _tokenize(text: str):
    """Yield (lineno, section, key, value); section headers yield key=None."""
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]") or len(line) < 3:
                raise ConfigError(f"malformed section header {raw.strip()!r}", lineno)
            section = line[1:-1].strip().lower()
            if section not in SCHEMA:
                raise ConfigError(f"unknown section [{section}]", lineno)
            yield lineno, section, None, None
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        if section is None:
            raise ConfigError("key outside of any section", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError("empty key", lineno)
        yield lineno, section, key.lower(), value


def parse_config(text: str, base: ScenarioConfig | None = None) -> RunConfig:
    """Parse configuration text into a :class:`RunConfig`.

    An empty ``[loss]`` section selects no loss (the control run).  A variant
    named in ``[scenario]`` starts from that variant's defaults.
    """
    entries = list(_tokenize(text))
    sections = {}
    seen = {}
    for lineno, section, key, value in entries:
        sections.setdefault(section, lineno)
        if key is None:
            continue
        if key not in SCHEMA[section]:
            _check_unit(section, key, lineno)
        if (section, key) in seen:
            raise ConfigError(f"duplicate key {key!r} in [{section}] (first on line {seen[section, key]})", lineno)
        seen[section, key] = lineno

    for section, req in REQUIRED.items():
        if section in sections:
            for key in req:
                if (section, key) not in seen:
                    raise ConfigError(f"missing required key {key!r} in [{section}]", sections[section])

    variant = None
    for lineno, section, key, value in entries:
        if section == "scenario" and key == "variant":
            variant = value.strip().lower()
    if base is None:
        factories = {"box": ScenarioConfig.box_default, "homogeneous": ScenarioConfig.homogeneous_default,
                     "collision2d": ScenarioConfig.collision_default}
        if variant is not None and variant not in factories:
            raise ConfigError(f"unknown variant {variant!r}", seen["scenario", "variant"])
        base = factories[variant or "box"]()

    targets = {}
    for (section, key), lineno in seen.items():
        target = SCHEMA[section][key][0]
        if target in targets:
            raise ConfigError(f"{key!r} sets the same quantity as line {targets[target]}", lineno)
        targets[target] = lineno

    updates, eit_updates, run_updates = {}, {}, {}
    for lineno, section, key, value in entries:
        if key is None:
            continue
        target, conv = SCHEMA[section][key]
        try:
            v = conv(value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}", lineno) from None
        if isinstance(v, float) and not math.isfinite(v):
            raise ConfigError(f"{key!r} must be finite", lineno)
        if isinstance(v, str):
            v = v.strip().lower()
        if target.startswith("eit."):
            eit_updates[target[4:]] = v
        elif target.startswith("run."):
            run_updates[target[4:]] = v
        else:
            updates[target] = v

    if "loss" in sections and not any(s == "loss" for s, _ in seen):
        updates["loss"] = "none"
    if eit_updates:
        lam = base.eit if base.eit is not None else default_eit_params()
        try:
            updates["eit"] = replace(lam, **eit_updates)
        except ValueError as exc:
            raise ConfigError(f"invalid [eit] parameters: {exc}", sections["eit"]) from None
    try:
        cfg = replace(base, **updates)
    except ValueError as exc:
        line = seen.get(("scenario", "variant")) or seen.get(("loss", "kind"))
        raise ConfigError(str(exc), line) from None
    return RunConfig(scenario=cfg, keys_seen=tuple(seen), **run_updates)


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def _fmt(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def dump_config(run: RunConfig | ScenarioConfig) -> str:
    """Serialise with every default materialised; floats use repr (round-trip exact)."""
    if isinstance(run, ScenarioConfig):
        run = RunConfig(scenario=run)
    cfg = run.scenario
    lam = cfg.eit if cfg.eit is not None else None
    out = []
    for section, keys in SCHEMA.items():
        if section == "eit" and lam is None:
            continue
        out.append(f"[{section}]")
        for key, (target, conv) in keys.items():
            if (section, key) in ALIASES:
                continue
            if target.startswith("eit."):
                v = getattr(lam, target[4:])
            elif target.startswith("run."):
                v = getattr(run, target[4:])
            else:
                v = getattr(cfg, target)
            out.append(f"{key} = {_fmt(v)}")
        out.append("")
    return "\n".join(out)


def set_key(run: RunConfig, path: str, value) -> RunConfig:
    """Return a copy with ``section.key`` (or a bare ScenarioConfig field) set to ``value``."""
    if "." in path:
        section, key = path.split(".", 1)
        if section not in SCHEMA or key not in SCHEMA[section]:
            raise ConfigError(f"unknown key {path!r}")
        target, conv = SCHEMA[section][key]
        v = conv(str(value)) if isinstance(value, str) else value
    else:
        names = {f.name for f in fields(ScenarioConfig)}
        if path not in names:
            raise ConfigError(f"unknown key {path!r}")
        target, v = path, value
    if target.startswith("eit."):
        lam = run.scenario.eit if run.scenario.eit is not None else default_eit_params()
        return replace(run, scenario=run.scenario.with_(eit=replace(lam, **{target[4:]: v})))
    if target.startswith("run."):
        return replace(run, **{target[4:]: v})
    return replace(run, scenario=run.scenario.with_(**{target: v}))
