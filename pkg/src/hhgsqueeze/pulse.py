"""Laser pulse definition and atomic-unit conversions.

Everything downstream works in Hartree atomic units. The driving field is
defined directly on the electric field (not on the vector potential):

    E(t) = E0 * sin^2(pi*(t - t_start)/T) * cos(omega*(t - t_start) + cep)

inside the window [t_start, t_start + T] with T = n_cycles * 2*pi/omega,
and exactly zero outside. The vector potential A(t) = -int E dt' is obtained
numerically where needed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import ConfigError

# 1 atomic unit of intensity in W/cm^2
INTENSITY_AU_WCM2 = 3.50944758e16
# omega[a.u.] * lambda[nm] for a photon
OMEGA_NM_AU = 45.5633526
# 1 atomic unit of time in femtoseconds
FS_PER_AU = 0.02418884


def intensity_to_field(intensity_wcm2: float) -> float:
    """Peak electric field amplitude in a.u. for a given intensity in W/cm^2.

    Zero is allowed (field-free runs); negative intensity is rejected.
    """
    if intensity_wcm2 < 0:
        raise ConfigError(f"intensity must be non-negative, got {intensity_wcm2}")
    return float(np.sqrt(intensity_wcm2 / INTENSITY_AU_WCM2))


def wavelength_to_omega(lambda_nm: float) -> float:
    """Carrier angular frequency in a.u. for a vacuum wavelength in nm."""
    if lambda_nm <= 0:
        raise ConfigError(f"wavelength must be positive, got {lambda_nm}")
    return OMEGA_NM_AU / lambda_nm


@dataclass(frozen=True)
class PulseParams:
    """A sin^2-envelope pulse with an integer number of carrier cycles.

    Parameters
    ----------
    intensity_wcm2 : float
        Peak intensity in W/cm^2.
    omega : float
        Carrier angular frequency in a.u.
    cep : float
        Carrier-envelope phase in radians.
    n_cycles : int
        Number of optical cycles under the envelope.
    envelope : str
        Envelope shape tag. Only "sin2" is implemented.
    t_start : float
        Time at which the pulse turns on, in a.u.
    """

    intensity_wcm2: float
    omega: float
    cep: float = 0.0
    n_cycles: int = 2
    envelope: str = "sin2"
    t_start: float = 0.0
    e0: float = field(init=False)

    def __post_init__(self):
        if self.omega <= 0:
            raise ConfigError(f"omega must be positive, got {self.omega}")
        if self.n_cycles < 1 or int(self.n_cycles) != self.n_cycles:
            raise ConfigError(f"n_cycles must be a positive integer, got {self.n_cycles}")
        if self.envelope != "sin2":
            raise ConfigError(f"unsupported envelope {self.envelope!r}")
        object.__setattr__(self, "e0", intensity_to_field(self.intensity_wcm2))

    @classmethod
    def from_field_amplitude(cls, e0: float, omega: float, **kw) -> "PulseParams":
        """Construct from a peak field amplitude in a.u. instead of intensity.

        e0 = 0 is allowed: the field-free window still defines a time grid.
        """
        if e0 < 0:
            raise ConfigError(f"field amplitude must be non-negative, got {e0}")
        return cls(intensity_wcm2=e0 * e0 * INTENSITY_AU_WCM2, omega=omega, **kw)

    @property
    def duration(self) -> float:
        """Pulse duration T in a.u."""
        return self.n_cycles * 2.0 * np.pi / self.omega

    @property
    def t_end(self) -> float:
        return self.t_start + self.duration

    @property
    def up(self) -> float:
        """Ponderomotive energy E0^2 / (4 omega^2) in a.u."""
        return self.e0 ** 2 / (4.0 * self.omega ** 2)

    def field_at(self, t):
        """Electric field at time(s) t, zero outside the pulse window."""
        t = np.asarray(t, dtype=float)
        tau = t - self.t_start
        window = (tau >= 0.0) & (tau <= self.duration)
        env = np.sin(np.pi * tau / self.duration) ** 2
        e = self.e0 * env * np.cos(self.omega * tau + self.cep)
        out = np.where(window, e, 0.0)
        return out if out.ndim else float(out)

    def as_dict(self) -> dict:
        return {
            "intensity_wcm2": self.intensity_wcm2,
            "omega": self.omega,
            "cep": self.cep,
            "n_cycles": self.n_cycles,
            "envelope": self.envelope,
            "t_start": self.t_start,
        }


def pulse_duration(pulse: PulseParams) -> tuple[float, float]:
    """Pulse duration as (a.u., femtoseconds)."""
    t_au = pulse.duration
    return t_au, t_au * FS_PER_AU


def vector_potential(pulse: PulseParams, times: np.ndarray) -> np.ndarray:
    """A(t) = -int_{t0}^{t} E dt' on the given time grid, A(times[0]) = 0."""
    e = pulse.field_at(times)
    return -cumulative_trapezoid(e, times, initial=0.0)


def cep_mirror(cep: float, n_cycles: int) -> float:
    """CEP of the sign-flipped, time-reversed partner pulse.

    For a sin^2 pulse, E'(T - t) = -E(t) pointwise when the partner carries
    cep' = 2*pi*n_cycles - cep + pi (mod 2*pi).
    """
    return float(np.mod(2.0 * np.pi * n_cycles - cep + np.pi, 2.0 * np.pi))


def time_layout(pulse: PulseParams, dt: float, stride: int = 1,
                tail_cycles: int = 0) -> tuple[int, float]:
    """Step count (a multiple of stride) and effective dt for a pulse window.

    The requested dt is nudged so that an integer number of steps lands
    exactly on the end of [t_start, t_start + T + tail] and the anchor
    subgrid (every `stride` steps) covers both window endpoints.
    """
    if dt <= 0:
        raise ConfigError(f"dt must be positive, got {dt}")
    if stride < 1 or int(stride) != stride:
        raise ConfigError(f"stride must be a positive integer, got {stride}")
    if tail_cycles < 0:
        raise ConfigError(f"tail_cycles must be non-negative, got {tail_cycles}")
    t_total = pulse.duration + tail_cycles * 2.0 * np.pi / pulse.omega
    if dt > t_total:
        raise ConfigError(
            f"dt={dt} exceeds the {t_total:.3f} a.u. time window")
    n_raw = max(1, int(round(t_total / dt)))
    n_steps = stride * int(np.ceil(n_raw / stride))
    return n_steps, t_total / n_steps
