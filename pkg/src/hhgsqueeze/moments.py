"""Spectral moments of the dipole correlation and CEP squeeze scans.

Projects a two-time connected correlation table onto a set of probe
frequencies, producing the pair of moment matrices that seed the Gaussian
mode description:

    M_qp = int dt' dt'' e^{i w_q t'} Re C(t', t'') e^{i w_p t''}
    N_qp = int dt' dt'' e^{-i w_q t'} C*(t', t'') e^{i w_p t''}

The table is modeled as its cubic-spline interpolant between anchors and
integrated against the exact probe phases with composite Simpson weights
on a refined grid; the rule is applied through the collocation adjoint,
so the refined table is never materialized.  Using Re C in M symmetrises
the double integral exactly (the imaginary part is an antisymmetric
kernel, the commutator the mode expansion neglects) while leaving the
diagonal untouched.  N is a Gram matrix of the fluctuation operators:
Hermitian, positive semidefinite, and resonant with the correlation's
e^{-i W (t'-t'')} carrier, so N dominates |M| on admissible tables.
"""

from __future__ import annotations

import concurrent.futures
import math
import time
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import trapezoid
from scipy.interpolate import BSpline, make_interp_spline
from scipy.sparse.linalg import splu

from .correlation import (CorrelationTable, DipoleRecord, physics_key,
                          read_table, write_table)
from .errors import CacheIntegrityError, ConfigError, NumericsError
from .pulse import PulseParams
from .sfa import SfaParams, sfa_connected_correlation, sfa_dipole_mean
from .tdse import (GridSpec, SoftCoreCoulomb, oscillator_correlation_table,
                   oscillator_dipole_mean, two_time_correlation)

# anchors per probe period below which the moment quadrature is suspect
COARSE_ANCHOR_LIMIT = 8.0
# relative floor for the smallest eigenvalue of a produced N matrix
N_PSD_TOL = 1e-8


@dataclass(frozen=True)
class SpectralMoments:
    """Moment matrices of one table at a set of probe frequencies."""

    omegas: np.ndarray
    orders: np.ndarray           # harmonic index q per probe frequency
    m_matrix: np.ndarray         # complex symmetric
    n_matrix: np.ndarray         # Hermitian PSD
    chi: np.ndarray | None = None
    flags: tuple[str, ...] = ()

    def validate(self, tol: float = 1e-10) -> None:
        m, n = self.m_matrix, self.n_matrix
        scale = max(np.abs(m).max(), np.abs(n).max(), 1e-300)
        if np.abs(m - m.T).max() > tol * scale:
            raise NumericsError("moment matrix M is not symmetric")
        if np.abs(n - n.conj().T).max() > tol * scale:
            raise NumericsError("moment matrix N is not Hermitian")
        w = np.linalg.eigvalsh(n)
        floor = -N_PSD_TOL * max(float(np.trace(n).real), 1e-300)
        if w.min() < floor:
            raise NumericsError(
                f"moment matrix N has negative eigenvalue {w.min():.3e}")


@dataclass(frozen=True)
class SqueezeRecord:
    """One CEP point of a squeeze scan."""

    cep: float
    b: float                     # |M_11| at the fundamental
    psi: float                   # squeeze angle, in [0, pi)
    r: float                     # squeeze parameter, <= 0
    db: float                    # 10 log10 exp(2 r^2)
    g: float
    n_at: float
    backend: str = ""
    runtime_s: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.psi < math.pi + 1e-12:
            raise NumericsError(f"squeeze angle {self.psi} outside [0, pi)")
        if self.r > 1e-12:
            raise NumericsError(f"squeeze parameter {self.r} is positive")


def _simpson_weights(n: int, h: float) -> np.ndarray:
    # composite Simpson; n must be odd
    w = np.full(n, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return w * (h / 3.0)


def _phase_collocation(t: np.ndarray, omegas: np.ndarray,
                       refine: int) -> np.ndarray:
    """Quadrature vectors g_q with g_q^T c = int e^{i w_q t} spline(c)(t) dt.

    The cubic interpolant through anchor values c is integrated against
    each probe phase by composite Simpson on a refine-times finer grid;
    the result is pulled back onto the anchors through the B-spline
    collocation adjoint, so only (n_fine x n_anchor) sparse design
    matrices are ever formed.
    """
    n_c = t.size
    k = 3 if n_c > 3 else n_c - 1
    knots = make_interp_spline(t, np.zeros(n_c), k=k).t
    n_f = (n_c - 1) * refine + 1
    t_f = np.linspace(t[0], t[-1], n_f)
    design_c = BSpline.design_matrix(t, knots, k).tocsc()
    design_f = BSpline.design_matrix(t_f, knots, k).tocsr()
    wts = _simpson_weights(n_f, (t[-1] - t[0]) / (n_f - 1))
    f = np.exp(1j * np.outer(t_f, omegas)) * wts[:, None]
    rhs = np.asarray((design_f.T @ f))
    lu = splu(design_c.T.tocsc())
    return lu.solve(rhs.real) + 1j * lu.solve(rhs.imag)


def d_correlation_matrix(table: CorrelationTable, omegas,
                         refine: int | None = None
                         ) -> tuple[np.ndarray, np.ndarray]:
    """Moment matrices (M, N) of a square table at probe frequencies.

    The table is read as its cubic-spline interpolant and integrated
    against the probe phases with Simpson weights on a refine-times finer
    grid, so the e^{i w t} factors stay resolved even on a coarse anchor
    grid.  Emits a warning (and keeps going) when the anchors undersample
    the fastest probe period.
    """
    omegas = np.asarray(omegas, dtype=float)
    if omegas.ndim != 1 or omegas.size == 0:
        raise ConfigError("omegas must be a non-empty 1d sequence")
    if np.any(omegas <= 0):
        raise ConfigError("probe frequencies must be positive")
    if not table.is_square:
        raise ConfigError("moment projection needs a square table")
    t = table.anchor_times
    if t.size < 2:
        raise ConfigError("need at least two anchors")
    h = float(t[1] - t[0])
    if np.abs(np.diff(t) - h).max() > 1e-9 * max(h, 1.0):
        raise ConfigError("anchor grid must be uniform")

    w_max = float(omegas.max())
    per_period = 2.0 * math.pi / w_max / h
    if per_period < COARSE_ANCHOR_LIMIT:
        warnings.warn(
            f"only {per_period:.1f} anchors per fastest probe period; "
            "moment quadrature may be coarse", RuntimeWarning, stacklevel=2)
    if refine is None:
        refine = max(8, 2 * math.ceil(8.0 * h * w_max / (2.0 * math.pi)))
    if refine % 2:
        refine += 1                         # Simpson needs an odd fine grid

    c = table.c_connected
    c = 0.5 * (c + c.conj().T)              # enforce Hermiticity exactly
    g = _phase_collocation(t, omegas, refine)
    m = g.T @ c.real @ g
    n = g.conj().T @ c.conj() @ g
    m = 0.5 * (m + m.T)
    n = 0.5 * (n + n.conj().T)
    return m, n


def chi_displacements(record: DipoleRecord, omegas, g: float,
                      orders=None) -> np.ndarray:
    """Coherent mode displacements chi_q = i g sqrt(q) int <d>(t) e^{i w_q t} dt."""
    omegas = np.asarray(omegas, dtype=float)
    if orders is None:
        orders = np.arange(1, omegas.size + 1)
    orders = np.asarray(orders, dtype=float)
    if orders.shape != omegas.shape:
        raise ConfigError("orders must match omegas in length")
    t, d = record.times, record.d_mean
    phases = np.exp(1j * np.outer(omegas, t))
    integ = trapezoid(phases * d[None, :], t, axis=1)
    return 1j * g * np.sqrt(orders) * integ


def spectral_moments(table: CorrelationTable, omegas, orders=None,
                     dipole: DipoleRecord | None = None, g: float = 1.0,
                     refine: int | None = None) -> SpectralMoments:
    """Bundle moment matrices and optional displacements for one table."""
    omegas = np.asarray(omegas, dtype=float)
    if orders is None:
        orders = np.arange(1, omegas.size + 1)
    flags = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        m, n = d_correlation_matrix(table, omegas, refine=refine)
    for w in caught:
        warnings.warn_explicit(w.message, w.category, w.filename, w.lineno)
        flags.append("coarse_anchors")
    chi = None
    if dipole is not None:
        chi = chi_displacements(dipole, omegas, g, orders=orders)
    return SpectralMoments(omegas, np.asarray(orders), m, n, chi,
                           tuple(flags))


def squeeze_record(m11: complex, g: float, n_at: float, cep: float = 0.0,
                   backend: str = "", runtime_s: float = 0.0
                   ) -> SqueezeRecord:
    """Squeeze parameters of the fundamental from its M_11 moment.

    b = |M_11|, psi = arg(M_11)/2 folded into [0, pi), r = -g^2 b N_at,
    and the decibel gain 10 log10 exp(2 r^2) evaluated in the stable form
    20 r^2 log10(e).
    """
    if g <= 0 or n_at <= 0:
        raise ConfigError("g and n_at must be positive")
    b = float(abs(m11))
    psi = 0.5 * math.atan2(m11.imag, m11.real)
    psi = psi % math.pi
    if psi >= math.pi:                      # fold the exact-pi rounding case
        psi = 0.0
    r = -g * g * b * n_at
    db = 20.0 * r * r * math.log10(math.e)
    return SqueezeRecord(cep=float(cep), b=b, psi=psi, r=r, db=db,
                         g=float(g), n_at=float(n_at), backend=backend,
                         runtime_s=runtime_s)


# ---------------------------------------------------------------------------
# backend dispatch and caching


def _probe_meta(backend: str, pulse: PulseParams, grid: GridSpec | None,
                potential, sfa: SfaParams | None, omega0: float | None,
                dt_req: float, stride: int, tail_cycles: int) -> dict:
    from .correlation import DIPOLE_SIGN
    return {
        "backend": backend, "pulse": pulse.as_dict(),
        "grid": grid.as_dict() if grid is not None else None,
        "potential": potential.as_dict() if potential is not None else None,
        "sfa": sfa.as_dict() if sfa is not None else None,
        "omega0": omega0, "dt_req": dt_req, "stride": int(stride),
        "tail_cycles": int(tail_cycles), "dipole_sign": DIPOLE_SIGN,
    }


def compute_correlation(backend: str, pulse: PulseParams, *,
                        grid: GridSpec | None = None, potential=None,
                        sfa_params: SfaParams | None = None,
                        omega0: float = 0.5, osc_dt: float = 0.05,
                        stride: int = 20, tail_cycles: int = 0,
                        cache_dir: str | None = None, workers: int = 1,
                        want_dipole: bool = True
                        ) -> tuple[CorrelationTable, DipoleRecord | None]:
    """Connected correlation table (and mean dipole) for one pulse.

    Consults the cache first when cache_dir is given; a corrupt entry is
    recomputed with a warning rather than failing the run.
    """
    if backend == "tdse":
        grid = grid if grid is not None else GridSpec()
        potential = potential if potential is not None else SoftCoreCoulomb()
        key_meta = _probe_meta("tdse", pulse, grid, potential, None, None,
                               grid.dt, stride, tail_cycles)
    elif backend == "sfa":
        sfa_params = sfa_params if sfa_params is not None else SfaParams()
        key_meta = _probe_meta("sfa", pulse, None, None, sfa_params, None,
                               sfa_params.dt, stride, tail_cycles)
    elif backend == "oscillator":
        key_meta = _probe_meta("oscillator", pulse, None, None, None,
                               omega0, osc_dt, stride, tail_cycles)
    else:
        raise ConfigError(f"unknown backend '{backend}'")

    key = physics_key(key_meta)
    if cache_dir is not None:
        try:
            table, dip = read_table(cache_dir, key,
                                    with_dipole=want_dipole)
            # an entry written by a dipole-less caller is a miss here;
            # recomputing rewrites it with the dipole attached
            if not want_dipole or dip is not None:
                return table, dip
        except FileNotFoundError:
            pass
        except CacheIntegrityError as exc:
            warnings.warn(f"cache entry {key} failed integrity check "
                          f"({exc}); recomputing", RuntimeWarning,
                          stacklevel=2)

    if backend == "tdse":
        table, dip = two_time_correlation(grid, potential, pulse,
                                          stride=stride,
                                          tail_cycles=tail_cycles,
                                          workers=workers)
    elif backend == "sfa":
        table = sfa_connected_correlation(sfa_params, pulse, stride=stride,
                                          tail_cycles=tail_cycles)
        dip = sfa_dipole_mean(sfa_params, pulse, tail_cycles=tail_cycles,
                              layout_stride=stride) if want_dipole else None
    else:
        table = oscillator_correlation_table(omega0, pulse, dt=osc_dt,
                                             stride=stride,
                                             tail_cycles=tail_cycles)
        dip = oscillator_dipole_mean(omega0, pulse, dt=osc_dt, stride=stride,
                                     tail_cycles=tail_cycles) \
            if want_dipole else None

    if physics_key(table.meta) != key:
        raise NumericsError("engine meta does not reproduce its cache key")
    if cache_dir is not None:
        write_table(table, cache_dir, dipole=dip)
    return table, dip


def cep_scan(backend: str, pulse: PulseParams, cep_values, g: float,
             n_at: float, *, grid: GridSpec | None = None, potential=None,
             sfa_params: SfaParams | None = None, omega0: float = 0.5,
             osc_dt: float = 0.05, stride: int = 20, tail_cycles: int = 0,
             cache_dir: str | None = None, workers: int = 1,
             engine_workers: int = 1) -> list[SqueezeRecord]:
    """Squeeze record per CEP value, in the order given.

    workers parallelises over CEP points, engine_workers inside one table
    build; results are identical to the serial path either way.
    """
    ceps = [float(c) for c in np.atleast_1d(np.asarray(cep_values, float))]
    if not ceps:
        raise ConfigError("cep_values is empty")
    if g <= 0 or n_at <= 0:
        raise ConfigError("g and n_at must be positive")

    def one(cep: float) -> SqueezeRecord:
        t0 = time.perf_counter()
        p = replace(pulse, cep=cep)
        table, _ = compute_correlation(
            backend, p, grid=grid, potential=potential,
            sfa_params=sfa_params, omega0=omega0, osc_dt=osc_dt,
            stride=stride, tail_cycles=tail_cycles, cache_dir=cache_dir,
            workers=engine_workers, want_dipole=False)
        m, _ = d_correlation_matrix(table, [pulse.omega])
        return squeeze_record(m[0, 0], g, n_at, cep=cep, backend=backend,
                              runtime_s=time.perf_counter() - t0)

    if workers > 1 and len(ceps) > 1:
        with concurrent.futures.ThreadPoolExecutor(workers) as pool:
            return list(pool.map(one, ceps))
    return [one(c) for c in ceps]


def auto_g(pulse: PulseParams, n_at: float, *,
           sfa_params: SfaParams | None = None, stride: int = 20,
           tail_cycles: int = 0, cache_dir: str | None = None) -> float:
    """Coupling g with g^2 B N_at = 1 at cep = 0 under the quick backend.

    Anchors the zero-CEP squeeze parameter at r = -1 so decibel numbers
    from different pulses share a reference.
    """
    if n_at <= 0:
        raise ConfigError("n_at must be positive")
    p0 = replace(pulse, cep=0.0)
    table, _ = compute_correlation("sfa", p0, sfa_params=sfa_params,
                                   stride=stride, tail_cycles=tail_cycles,
                                   cache_dir=cache_dir, want_dipole=False)
    m, _ = d_correlation_matrix(table, [pulse.omega])
    b = abs(m[0, 0])
    if b <= 0 or not np.isfinite(b):
        raise NumericsError("cannot normalise g: B vanished at cep=0")
    return 1.0 / math.sqrt(b * n_at)
