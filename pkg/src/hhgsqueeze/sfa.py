"""Strong-field-approximation backend.

Single active electron, one bound state |g> at -ip, Volkov continuum, no
depletion (the ground-state amplitude stays 1) and no saddle-point
approximation: all momentum and time integrals are direct quadratures.

The bound-free transition kernel is

    d_vg(t) = d(v + A(t)) * exp(+i S(v, t)),
    S(v, t) = int_{t0}^{t} [ (v + A(s))^2 / 2 + ip ] ds,

with A(t) = -int E dt' accumulated numerically on the step grid. The
connected dipole correlation and the mean dipole follow as

    C_c(t', t'') = int dv  conj(d_vg(t')) d_vg(t''),
    <d(t)> = 2 Re int dv conj(g(v,t)) int_{t0}^{t} dt' E(t') g(v,t'),

where g = d_vg. The momentum grid must resolve the fastest v-oscillation
of the kernel; a Nyquist-style check rejects grids that cannot.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .correlation import DIPOLE_SIGN, CorrelationTable, DipoleRecord
from .errors import ConfigError, NumericsError
from .pulse import PulseParams, time_layout, vector_potential

_CHUNK = 256


@dataclass(frozen=True)
class SfaParams:
    """Continuum model and discretization for the SFA backend.

    dme selects the bound-free dipole matrix element: "hydrogenic" is the
    1s-like form i*c0*p/(p^2 + 2 ip)^3 with the standard normalization
    c0 = 2^(7/2) (2 ip)^(5/4) / pi; "gaussian" is i*p*exp(-(p*width)^2/2),
    kept for regularization studies.
    """

    ip: float = 0.5
    dme: str = "hydrogenic"
    gaussian_width: float = 1.0
    v_min: float = -4.0
    v_max: float = 4.0
    n_v: int = 4096
    dt: float = 0.05
    eps: float = 0.0

    def __post_init__(self):
        if self.ip <= 0:
            raise ConfigError(f"ip must be positive, got {self.ip}")
        if self.dme not in ("hydrogenic", "gaussian"):
            raise ConfigError(f"unknown dipole matrix element {self.dme!r}")
        if self.n_v < 512:
            raise ConfigError(f"n_v must be at least 512, got {self.n_v}")
        if not np.isclose(self.v_min, -self.v_max) or self.v_max <= 0:
            raise ConfigError("momentum grid must be symmetric about zero")
        if self.dt <= 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if self.eps < 0:
            raise ConfigError("eps must be non-negative")

    @property
    def v_grid(self) -> np.ndarray:
        return np.linspace(self.v_min, self.v_max, self.n_v)

    def as_dict(self) -> dict:
        return {"ip": self.ip, "dme": self.dme,
                "gaussian_width": self.gaussian_width, "v_min": self.v_min,
                "v_max": self.v_max, "n_v": self.n_v, "dt": self.dt,
                "eps": self.eps}


def dipole_element(p: np.ndarray, params: SfaParams) -> np.ndarray:
    """Bound-free dipole matrix element d(p)."""
    p = np.asarray(p, dtype=float)
    if params.dme == "hydrogenic":
        alpha = 2.0 * params.ip
        c0 = 2.0 ** 3.5 * alpha ** 1.25 / np.pi
        return 1j * c0 * p / (p * p + alpha + params.eps) ** 3
    w = params.gaussian_width
    return 1j * p * np.exp(-0.5 * (p * w) ** 2)


@dataclass
class TransitionKernel:
    """d_vg sampled on the (v, t) product grid."""

    v: np.ndarray
    times: np.ndarray
    values: np.ndarray  # shape (n_v, n_t), complex

    def __post_init__(self):
        if self.values.shape != (self.v.size, self.times.size):
            raise ValueError("kernel shape does not match its grids")


def _trapezoid_weights(grid: np.ndarray) -> np.ndarray:
    h = grid[1] - grid[0]
    w = np.full(grid.size, h)
    w[0] = w[-1] = 0.5 * h
    return w


def _check_momentum_nyquist(params: SfaParams, times: np.ndarray,
                            a_pot: np.ndarray):
    """Reject momentum grids coarser than the kernel's fastest v-oscillation.

    The kernel phase gradient dS/dv = v*(t - t0) + int A dt is bounded by
    |v|_max * T + 2*max|int A|; the grid spacing must keep the phase step
    per sample below pi.
    """
    dv = params.v_grid[1] - params.v_grid[0]
    ia = cumulative_trapezoid(a_pot, times, initial=0.0)
    span = times[-1] - times[0]
    grad = max(abs(params.v_min), abs(params.v_max)) * span + 2.0 * np.abs(ia).max()
    if grad * dv >= np.pi:
        raise NumericsError(
            f"momentum grid too coarse: phase step {grad * dv:.2f} rad per "
            f"sample exceeds pi; need n_v >= {int(np.ceil((params.v_max - params.v_min) * grad / np.pi)) + 1}")


def _action(params: SfaParams, times: np.ndarray, a_pot: np.ndarray,
            v_rows: np.ndarray) -> np.ndarray:
    """S(v, t) for a block of momenta, cumulative trapezoid over t."""
    vpa = v_rows[:, None] + a_pot[None, :]
    integrand = 0.5 * vpa * vpa + params.ip
    return cumulative_trapezoid(integrand, times, axis=1, initial=0.0)


def transition_amplitude(params: SfaParams, pulse: PulseParams,
                         times: np.ndarray | None = None) -> TransitionKernel:
    """Full transition kernel d_vg on (v, t).

    Materializes an (n_v, n_t) complex array; intended for moderate grids.
    The production integrators stream the same kernel in momentum blocks.
    """
    if times is None:
        n_steps, dt = time_layout(pulse, params.dt)
        times = pulse.t_start + dt * np.arange(n_steps + 1)
    a_pot = vector_potential(pulse, times)
    _check_momentum_nyquist(params, times, a_pot)
    v = params.v_grid
    values = np.empty((v.size, times.size), dtype=complex)
    for lo in range(0, v.size, _CHUNK):
        rows = slice(lo, min(lo + _CHUNK, v.size))
        s = _action(params, times, a_pot, v[rows])
        vpa = v[rows, None] + a_pot[None, :]
        values[rows] = dipole_element(vpa, params) * np.exp(1j * s)
    return TransitionKernel(v, times, values)


def sfa_connected_correlation(params: SfaParams, pulse: PulseParams,
                              stride: int = 20, tail_cycles: int = 0
                              ) -> CorrelationTable:
    """Connected correlation on the anchor grid.

    With an undepleted ground state the connected part is the continuum
    resolution int dv conj(d_vg(t')) d_vg(t''), Hermitian with a real
    non-negative diagonal by construction.
    """
    n_steps, dt = time_layout(pulse, params.dt, stride, tail_cycles)
    times = pulse.t_start + dt * np.arange(n_steps + 1)
    a_pot = vector_potential(pulse, times)
    _check_momentum_nyquist(params, times, a_pot)
    v = params.v_grid
    anchor_idx = stride * np.arange(n_steps // stride + 1)
    anchor_times = times[anchor_idx]
    kernel = np.empty((v.size, anchor_idx.size), dtype=complex)
    for lo in range(0, v.size, _CHUNK):
        rows = slice(lo, min(lo + _CHUNK, v.size))
        s = _action(params, times, a_pot, v[rows])
        vpa = v[rows, None] + a_pot[None, :]
        g = dipole_element(vpa, params) * np.exp(1j * s)
        kernel[rows] = g[:, anchor_idx]
    w_v = _trapezoid_weights(v)
    c = (np.conj(kernel) * w_v[:, None]).T @ kernel
    if not np.isfinite(c).all():
        raise NumericsError("non-finite correlation table from the SFA kernel")
    meta = {
        "backend": "sfa", "pulse": pulse.as_dict(), "grid": None,
        "potential": None, "sfa": params.as_dict(), "omega0": None,
        "dt_req": params.dt, "stride": int(stride),
        "tail_cycles": int(tail_cycles), "dipole_sign": DIPOLE_SIGN,
        "dt_eff": dt, "flags": [],
    }
    return CorrelationTable(anchor_times, anchor_times, c, meta)


def sfa_dipole_mean(params: SfaParams, pulse: PulseParams,
                    tail_cycles: int = 0,
                    layout_stride: int = 1) -> DipoleRecord:
    """Mean dipole time series from the two-integral SFA formula.

    layout_stride only pads the step count so the time grid matches a
    correlation table computed with the same stride; every step is kept.
    """
    n_steps, dt = time_layout(pulse, params.dt, layout_stride, tail_cycles)
    times = pulse.t_start + dt * np.arange(n_steps + 1)
    e_field = pulse.field_at(times)
    a_pot = vector_potential(pulse, times)
    _check_momentum_nyquist(params, times, a_pot)
    v = params.v_grid
    w_v = _trapezoid_weights(v)
    acc = np.zeros(times.size, dtype=complex)
    for lo in range(0, v.size, _CHUNK):
        rows = slice(lo, min(lo + _CHUNK, v.size))
        s = _action(params, times, a_pot, v[rows])
        vpa = v[rows, None] + a_pot[None, :]
        g = dipole_element(vpa, params) * np.exp(1j * s)
        cum = cumulative_trapezoid(e_field[None, :] * g, times, axis=1,
                                   initial=0.0)
        acc += w_v[rows] @ (np.conj(g) * cum)
    d = 2.0 * acc.real
    if not np.isfinite(d).all():
        raise NumericsError("non-finite dipole series from the SFA kernel")
    meta = {
        "backend": "sfa", "pulse": pulse.as_dict(), "grid": None,
        "potential": None, "sfa": params.as_dict(), "omega0": None,
        "dt_req": params.dt, "tail_cycles": int(tail_cycles),
        "dipole_sign": DIPOLE_SIGN, "dt_eff": dt, "flags": [],
    }
    return DipoleRecord(times, d, meta)
