"""TOML run configuration: defaults, overrides, and sanity checks."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

try:
    import tomllib
except ImportError:          # Python 3.10
    import tomli as tomllib

from .errors import ConfigError, NumericsError
from .pulse import PulseParams, wavelength_to_omega
from .sfa import SfaParams, _check_momentum_nyquist
from .tdse import GridSpec, time_layout

CACHE_ENV = "HHG_CACHE_DIR"

_DEFAULTS = {
    "run": {
        "backend": "sfa",
        "g": "auto",
        "n_at": 1.0e6,
        "cep_values": [2.0 * math.pi * k / 16.0 for k in range(16)],
        "n_modes": 1,
        "stride": 20,
        "tail_cycles": 0,
        "workers": 1,
        "engine_workers": 1,
        "cache_dir": "cache",
        "deterministic": True,
    },
    "pulse": {
        "intensity_wcm2": 4.0e14,
        "wavelength_nm": 800.0,
        "omega": 0.0,          # set non-zero to bypass wavelength_nm
        "cep": 0.0,
        "n_cycles": 2,
        "envelope": "sin2",
        "t_start": 0.0,
    },
    "grid": {
        "x_min": -240.0, "x_max": 240.0, "n_x": 8192, "dt": 0.05,
        "absorber_width": 40.0, "absorber_strength": 1.0,
    },
    "sfa": {
        "ip": 0.5, "dme": "hydrogenic", "gaussian_width": 1.0,
        "v_min": -4.0, "v_max": 4.0, "n_v": 4096, "dt": 0.05, "eps": 0.0,
    },
    "oscillator": {"omega0": 0.5, "dt": 0.05},
}

_BOOL_KEYS = {("run", "deterministic")}


@dataclass
class RunConfig:
    """Typed view of one merged configuration."""

    backend: str
    pulse: PulseParams
    grid: GridSpec
    sfa: SfaParams
    omega0: float
    osc_dt: float
    g: float | str
    n_at: float
    cep_values: list[float]
    n_modes: int
    stride: int
    tail_cycles: int
    workers: int
    engine_workers: int
    cache_dir: str
    deterministic: bool
    raw: dict = field(repr=False, default_factory=dict)

    @property
    def engine_dt(self) -> float:
        if self.backend == "tdse":
            return self.grid.dt
        if self.backend == "sfa":
            return self.sfa.dt
        return self.osc_dt


def _parse_set(expr: str) -> tuple[str, str, object]:
    if "=" not in expr or "." not in expr.split("=", 1)[0]:
        raise ConfigError(f"--set expects section.key=value, got '{expr}'")
    target, text = expr.split("=", 1)
    section, key = target.split(".", 1)
    try:
        value = tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        value = text                     # bare string
    return section.strip(), key.strip(), value


def load_config(path: str | None = None, sets=()) -> dict:
    """Defaults, then the TOML file, then --set overrides, in that order."""
    merged = {s: dict(kv) for s, kv in _DEFAULTS.items()}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"bad TOML in {path}: {exc}") from None
        for section, kv in data.items():
            if section not in merged:
                raise ConfigError(f"unknown config section [{section}]")
            if not isinstance(kv, dict):
                raise ConfigError(f"[{section}] must be a table")
            for key, value in kv.items():
                if key not in merged[section]:
                    raise ConfigError(
                        f"unknown key '{key}' in section [{section}]")
                merged[section][key] = value
    for expr in sets:
        section, key, value = _parse_set(expr)
        if section not in merged or key not in merged[section]:
            raise ConfigError(f"--set targets unknown key {section}.{key}")
        merged[section][key] = value
    return merged


def build_run(config: dict) -> RunConfig:
    """Typed objects from a merged config dict; raises ConfigError early."""
    run, pu = config["run"], config["pulse"]
    gr, sf, osc = config["grid"], config["sfa"], config["oscillator"]

    backend = str(run["backend"])
    if backend not in ("tdse", "sfa", "oscillator"):
        raise ConfigError(f"unknown backend '{backend}'")

    omega = float(pu["omega"]) if pu["omega"] else \
        wavelength_to_omega(float(pu["wavelength_nm"]))
    pulse = PulseParams(intensity_wcm2=float(pu["intensity_wcm2"]),
                        omega=omega, cep=float(pu["cep"]),
                        n_cycles=int(pu["n_cycles"]),
                        envelope=str(pu["envelope"]),
                        t_start=float(pu["t_start"]))
    grid = GridSpec(x_min=float(gr["x_min"]), x_max=float(gr["x_max"]),
                    n_x=int(gr["n_x"]), dt=float(gr["dt"]),
                    absorber_width=float(gr["absorber_width"]),
                    absorber_strength=float(gr["absorber_strength"]))
    sfa = SfaParams(ip=float(sf["ip"]), dme=str(sf["dme"]),
                    gaussian_width=float(sf["gaussian_width"]),
                    v_min=float(sf["v_min"]), v_max=float(sf["v_max"]),
                    n_v=int(sf["n_v"]), dt=float(sf["dt"]),
                    eps=float(sf["eps"]))

    g = run["g"]
    if isinstance(g, str):
        if g != "auto":
            raise ConfigError("g must be a positive number or 'auto'")
    else:
        g = float(g)
        if g <= 0:
            raise ConfigError("g must be positive")

    ceps = [float(c) for c in np.atleast_1d(run["cep_values"])]
    if not ceps:
        raise ConfigError("run.cep_values is empty")

    n_at = float(run["n_at"])
    if n_at <= 0:
        raise ConfigError("run.n_at must be positive")
    n_modes = int(run["n_modes"])
    if n_modes < 1:
        raise ConfigError("run.n_modes must be at least 1")
    stride = int(run["stride"])
    if stride < 1:
        raise ConfigError("run.stride must be at least 1")
    workers = int(run["workers"])
    engine_workers = int(run["engine_workers"])
    if workers < 1 or engine_workers < 1:
        raise ConfigError("worker counts must be at least 1")

    cache_dir = os.environ.get(CACHE_ENV) or str(run["cache_dir"])

    return RunConfig(
        backend=backend, pulse=pulse, grid=grid, sfa=sfa,
        omega0=float(osc["omega0"]), osc_dt=float(osc["dt"]),
        g=g, n_at=n_at, cep_values=ceps, n_modes=n_modes, stride=stride,
        tail_cycles=int(run["tail_cycles"]), workers=workers,
        engine_workers=engine_workers, cache_dir=cache_dir,
        deterministic=bool(run["deterministic"]), raw=config)


def validate_run(rc: RunConfig) -> list[tuple[str, str, str]]:
    """Pre-flight checks; rows of (name, 'ok'|'warn'|'fail', detail)."""
    rows = []
    p = rc.pulse
    rows.append(("pulse", "ok",
                 f"E0={p.e0:.4e} au, T={p.duration:.1f} au, "
                 f"Up={p.up:.4f} au"))

    dt = rc.engine_dt
    q_max = math.floor(math.pi / (2.0 * p.omega * dt))
    status = "ok" if rc.n_modes <= q_max else "fail"
    rows.append(("harmonic_nyquist", status,
                 f"dt={dt} resolves harmonics up to q={q_max}; "
                 f"requested up to q={rc.n_modes}"))

    try:
        n_steps, dt_eff = time_layout(p, dt, rc.stride, rc.tail_cycles)
        per_cycle = (2.0 * math.pi / p.omega) / (rc.stride * dt_eff)
        status = "ok" if per_cycle >= 8.0 else "warn"
        rows.append(("anchors_per_cycle", status,
                     f"{per_cycle:.1f} anchors per cycle "
                     f"(stride={rc.stride}, dt_eff={dt_eff:.5g})"))
    except (ConfigError, NumericsError) as exc:
        rows.append(("anchors_per_cycle", "fail", str(exc)))

    if rc.backend == "sfa":
        n_steps, dt_eff = time_layout(p, rc.sfa.dt, rc.stride,
                                      rc.tail_cycles)
        times = p.t_start + dt_eff * np.arange(n_steps + 1)
        from .pulse import vector_potential
        a_pot = vector_potential(p, times)
        try:
            _check_momentum_nyquist(rc.sfa, times, a_pot)
            rows.append(("momentum_grid", "ok",
                         f"n_v={rc.sfa.n_v} resolves the action phase"))
        except NumericsError as exc:
            rows.append(("momentum_grid", "fail", str(exc)))

    if rc.backend == "tdse":
        quiver = p.e0 / p.omega ** 2
        margin = rc.grid.x_max - rc.grid.absorber_width
        status = "ok" if margin >= 1.5 * quiver else "warn"
        rows.append(("quiver_margin", status,
                     f"quiver amplitude {quiver:.1f} au vs "
                     f"{margin:.1f} au of absorber-free box"))

    bad = [c for c in rc.cep_values if not 0.0 <= c < 2.0 * math.pi + 1e-9]
    status = "warn" if bad else "ok"
    rows.append(("cep_values", status,
                 f"{len(rc.cep_values)} points" +
                 (f", {len(bad)} outside [0, 2pi)" if bad else "")))

    if isinstance(rc.g, str):
        rows.append(("coupling", "ok", "g resolved at run time (auto)"))
    else:
        rows.append(("coupling", "ok", f"g={rc.g:.4e}, n_at={rc.n_at:.3e}"))
    return rows
