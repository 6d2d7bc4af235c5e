"""Gaussian states and the quadratic filter induced by the emitters.

Quadratures are ordered (x1, p1, x2, p2, ...) with a = (x + i p)/sqrt(2),
so the vacuum covariance is I/2 and a pure coherent state keeps that
covariance with mean sqrt(2)(Re a, Im a).

The emitted-field transformation is a non-unitary Gaussian operation
G = exp(-(s/2) R^T A R) applied symmetrically, rho -> G rho G / tr(...).
Its action on (mean, cov) follows from the matrix Riccati flow

    d cov / ds = -cov (2A) cov - Omega A Omega / 2,
    d mean / ds = -cov (2A) mean,

integrated in closed form through a single matrix exponential.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .errors import ConfigError, NumericsError
from .moments import SpectralMoments

PHYSICALITY_TOL = 1e-9


def symplectic_form(n_modes: int) -> np.ndarray:
    j = np.array([[0.0, 1.0], [-1.0, 0.0]])
    out = np.zeros((2 * n_modes, 2 * n_modes))
    for k in range(n_modes):
        out[2 * k:2 * k + 2, 2 * k:2 * k + 2] = j
    return out


@dataclass(frozen=True)
class GaussianState:
    """Mean vector and covariance matrix of a Gaussian state."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        if mean.ndim != 1 or mean.size % 2:
            raise ConfigError("mean must be a flat vector of length 2n")
        if cov.shape != (mean.size, mean.size):
            raise ConfigError("covariance shape does not match the mean")
        if np.abs(cov - cov.T).max() > 1e-10 * max(1.0, np.abs(cov).max()):
            raise ConfigError("covariance must be symmetric")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", 0.5 * (cov + cov.T))

    @classmethod
    def vacuum(cls, n_modes: int = 1) -> "GaussianState":
        return cls(np.zeros(2 * n_modes), 0.5 * np.eye(2 * n_modes))

    @property
    def n_modes(self) -> int:
        return self.mean.size // 2

    def symplectic_eigenvalues(self) -> np.ndarray:
        omega = symplectic_form(self.n_modes)
        ev = np.linalg.eigvals(omega @ self.cov)
        nu = np.sort(np.abs(ev))
        return nu[::2]          # eigenvalues come in +/- i nu pairs

    def is_physical(self, tol: float = PHYSICALITY_TOL) -> bool:
        return bool(self.symplectic_eigenvalues().min() >= 0.5 - tol)

    def require_physical(self, tol: float = PHYSICALITY_TOL) -> None:
        nu = self.symplectic_eigenvalues().min()
        if nu < 0.5 - tol:
            raise NumericsError(
                f"unphysical covariance: smallest symplectic eigenvalue "
                f"{nu:.6e} < 1/2")

    def purity(self) -> float:
        det = np.linalg.det(2.0 * self.cov)
        return 1.0 / math.sqrt(det)

    def marginal(self, mode: int) -> "GaussianState":
        s = slice(2 * mode, 2 * mode + 2)
        return GaussianState(self.mean[s].copy(), self.cov[s, s].copy())


@dataclass(frozen=True)
class BilinearForm:
    """Real symmetric PSD matrix A plus the filter strength s."""

    matrix: np.ndarray
    strength: float

    def __post_init__(self):
        a = np.asarray(self.matrix, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] % 2:
            raise ConfigError("bilinear form must be 2n x 2n")
        scale = max(np.abs(a).max(), 1e-300)
        if np.abs(a - a.T).max() > 1e-10 * scale:
            raise ConfigError("bilinear form must be symmetric")
        w = np.linalg.eigvalsh(0.5 * (a + a.T))
        if w.min() < -1e-9 * scale:
            raise ConfigError(
                f"bilinear form is indefinite: eigenvalue {w.min():.6e}")
        if self.strength < 0:
            raise ConfigError("filter strength must be non-negative")
        object.__setattr__(self, "matrix", 0.5 * (a + a.T))

    @property
    def n_modes(self) -> int:
        return self.matrix.shape[0] // 2


def bilinear_from_moments(moments: SpectralMoments, g: float,
                          strength: float = 1.0) -> BilinearForm:
    """Quadrature form of the collective emitter filter.

    With g_q = g sqrt(q) the emitted modes see the Hermitian generator

        H = sum_qp g_q g_p [ N_qp a_q+ a_p + N_qp* a_q a_p+
                             - M_qp a_q+ a_p+ - M_qp* a_q a_p ]

    which this routine rewrites as R^T A R (the operator-ordering constant
    only renormalises the state).  A is positive semidefinite exactly when
    N dominates M, which every admissible correlation table guarantees.
    """
    if g <= 0:
        raise ConfigError("g must be positive")
    m, n = moments.m_matrix, moments.n_matrix
    nq = len(moments.omegas)
    gv = g * np.sqrt(np.asarray(moments.orders, dtype=float))

    u = np.zeros((nq, 2 * nq), dtype=complex)   # rows: a_q in quadratures
    for q in range(nq):
        u[q, 2 * q] = 1.0 / math.sqrt(2.0)
        u[q, 2 * q + 1] = 1j / math.sqrt(2.0)
    uc = u.conj()
    gu = gv[:, None] * u
    guc = gv[:, None] * uc

    w = (guc.T @ n @ gu) + (gu.T @ n.conj() @ guc) \
        - (guc.T @ m @ guc) - (gu.T @ m.conj() @ gu)
    w = 0.5 * (w + w.T)
    if np.abs(w.imag).max() > 1e-10 * max(np.abs(w.real).max(), 1e-300):
        raise NumericsError("emitter filter form has an imaginary residue")
    return BilinearForm(w.real, strength)


def apply_gaussian_filter(state: GaussianState,
                          form: BilinearForm) -> GaussianState:
    """Closed-form update of (mean, cov) under exp(-(s/2) R^T A R)."""
    n2 = state.mean.size
    if form.matrix.shape[0] != n2:
        raise ConfigError("filter and state mode counts differ")
    a = form.matrix
    s = form.strength
    if s == 0.0 or np.abs(a).max() == 0.0:
        return GaussianState(state.mean.copy(), state.cov.copy())

    omega = symplectic_form(state.n_modes)
    b_blk = 2.0 * a
    c_blk = -0.5 * omega @ a @ omega
    big = np.zeros((2 * n2, 2 * n2))
    big[:n2, n2:] = c_blk
    big[n2:, :n2] = b_blk
    e = expm(s * big)
    x = e[:n2, :n2] @ state.cov + e[:n2, n2:]
    y = e[n2:, :n2] @ state.cov + e[n2:, n2:]
    cov = np.linalg.solve(y.T, x.T).T       # X Y^{-1}
    cov = 0.5 * (cov + cov.T)
    mean = np.linalg.solve(y.T, state.mean)
    out = GaussianState(mean, cov)
    out.require_physical()
    return out


def displace(state: GaussianState, alphas) -> GaussianState:
    """Coherent displacement by alpha_q on each mode."""
    alphas = np.atleast_1d(np.asarray(alphas, dtype=complex))
    if alphas.size != state.n_modes:
        raise ConfigError("one displacement per mode required")
    mean = state.mean.copy()
    mean[0::2] += math.sqrt(2.0) * alphas.real
    mean[1::2] += math.sqrt(2.0) * alphas.imag
    return GaussianState(mean, state.cov.copy())


def rotated(state: GaussianState, theta: float, mode: int = 0
            ) -> GaussianState:
    """Phase-space rotation a -> a e^{-i theta} of one mode."""
    c, s = math.cos(theta), math.sin(theta)
    rot = np.eye(state.mean.size)
    i = 2 * mode
    rot[i:i + 2, i:i + 2] = [[c, s], [-s, c]]
    return GaussianState(rot @ state.mean, rot @ state.cov @ rot.T)


def major_axis_angle(state: GaussianState, mode: int = 0) -> float:
    """Orientation of the covariance ellipse major axis, in [0, pi)."""
    sub = state.marginal(mode).cov
    ang = 0.5 * math.atan2(2.0 * sub[0, 1], sub[0, 0] - sub[1, 1])
    return ang % math.pi


def wigner(state: GaussianState, mode: int = 0, xs=None, ps=None,
           n_points: int = 201):
    """Wigner function of one mode on a quadrature grid.

    Returns (xs, ps, w) with w[i, j] = W(xs[i], ps[j]); the grid measure
    is dx dp, so the array integrates to 1 and peaks at 1/pi for the
    vacuum.  beta = (x + i p)/sqrt(2) maps to the coherent-state label.
    """
    sub = state.marginal(mode)
    mean, cov = sub.mean, sub.cov
    if xs is None or ps is None:
        span = 6.0 * math.sqrt(float(np.linalg.eigvalsh(cov).max()))
        if xs is None:
            xs = np.linspace(mean[0] - span, mean[0] + span, n_points)
        if ps is None:
            ps = np.linspace(mean[1] - span, mean[1] + span, n_points)
    xs = np.asarray(xs, dtype=float)
    ps = np.asarray(ps, dtype=float)
    inv = np.linalg.inv(cov)
    det = np.linalg.det(cov)
    if det <= 0:
        raise NumericsError("covariance is not positive definite")
    dx = xs[:, None] - mean[0]
    dp = ps[None, :] - mean[1]
    quad = inv[0, 0] * dx ** 2 + 2.0 * inv[0, 1] * dx * dp \
        + inv[1, 1] * dp ** 2
    w = np.exp(-0.5 * quad) / (2.0 * math.pi * math.sqrt(det))
    return xs, ps, w


def log_negativity(state: GaussianState, modes_b=(1,)) -> float:
    """Logarithmic negativity across the bipartition (rest | modes_b).

    Partial transposition flips the momentum sign of every mode in B;
    E_N sums -log2(2 nu) over symplectic eigenvalues nu < 1/2 of the
    transposed covariance.
    """
    modes_b = tuple(int(m) for m in np.atleast_1d(modes_b))
    if not modes_b:
        raise ConfigError("modes_b must name at least one mode")
    if any(m < 0 or m >= state.n_modes for m in modes_b):
        raise ConfigError("modes_b indexes a missing mode")
    flip = np.ones(state.mean.size)
    for m in modes_b:
        flip[2 * m + 1] = -1.0
    cov_pt = flip[:, None] * state.cov * flip[None, :]
    nu = GaussianState(state.mean * flip, cov_pt).symplectic_eigenvalues()
    neg = -np.log2(2.0 * nu[nu < 0.5])
    return float(neg.sum()) if neg.size else 0.0


def duan_criterion(state: GaussianState, pair=(0, 1)) -> float:
    """Var(x_A - x_B) + Var(p_A + p_B); below 2 certifies entanglement."""
    a, b = pair
    if a == b or min(a, b) < 0 or max(a, b) >= state.n_modes:
        raise ConfigError("pair must name two distinct modes")
    c = state.cov
    ia, ib = 2 * a, 2 * b
    var_x = c[ia, ia] + c[ib, ib] - 2.0 * c[ia, ib]
    var_p = c[ia + 1, ia + 1] + c[ib + 1, ib + 1] + 2.0 * c[ia + 1, ib + 1]
    return float(var_x + var_p)
