"""Numbered end-to-end acceptance checks, one printed report line each.

Every test records its measured value next to the bound it must meet
(see conftest for the report block). The checks run the shipped code
paths at desk scale: grid and momentum-space engines, moment quadrature,
Gaussian filtering against an independent Fock-space oracle, artifact
determinism, and the cache.

Test 06 is currently expected to fail, and that failure is informative
rather than a bug: the CEP mirror identity psi' = pi - psi holds exactly
only while the emitter remains in its ground state, and at the default
4e14 W/cm2 the one-dimensional soft-core atom is measurably depleted.
The recorded deviation (~0.09 rad against the 0.05 rad bound) is
converged in box size, time step, and grid resolution, scales down to
6e-4 rad at 1e12 W/cm2, and vanishes to 1e-15 for the momentum-space
engine whose single-bound-state premise enforces the identity
(test_sfa::test_cep_mirror_pair_flips_squeeze_angle).
"""

import math
import time

import numpy as np
import pytest

from fockspace import (apply_emitter_filter, apply_quadratic_filter,
                       log_negativity_bruteforce, mean_and_cov,
                       vacuum_vector)
from hhgsqueeze import (BilinearForm, CorrelationTable, DipoleRecord,
                        GaussianState, GridSpec, Harmonic, PulseParams,
                        SfaParams, SpectralMoments, apply_gaussian_filter,
                        auto_g, bilinear_from_moments, cep_mirror, cep_scan,
                        compute_correlation, displace, duan_criterion,
                        log_negativity, oscillator_correlation_table,
                        spectral_moments, squeeze_record,
                        two_time_correlation, wavelength_to_omega, wigner)
from hhgsqueeze.cli import main

OMEGA = wavelength_to_omega(800.0)
DB_PER_UNIT_R = 10.0 * math.log10(math.e) * 2.0


def fourier_factor(w: float, t0: float, t1: float) -> complex:
    # int_t0^t1 e^{i w t} dt
    if abs(w) < 1e-12:
        return t1 - t0
    return (np.exp(1j * w * t1) - np.exp(1j * w * t0)) / (1j * w)


def test_01_grid_solver_reproduces_oscillator_kernel(acceptance):
    grid = GridSpec(x_min=-12.0, x_max=12.0, n_x=2048, dt=0.01,
                    absorber_width=0.0)
    pulse = PulseParams(intensity_wcm2=5e13, omega=0.45, n_cycles=2,
                        cep=0.7)
    start = time.perf_counter()
    table, _ = two_time_correlation(grid, Harmonic(0.5), pulse, stride=20)
    elapsed = time.perf_counter() - start
    t = table.anchor_times
    ref = np.exp(-0.5j * (t[:, None] - t[None, :])) / (2.0 * 0.5)
    err = float(np.max(np.abs(table.c_connected - ref)))
    ok = err <= 1e-3 and elapsed <= 120.0
    assert acceptance(1, "grid solver vs oscillator kernel", ok,
                      f"max err {err:.2e} <= 1e-3, {elapsed:.0f}s <= 120s"), \
        f"driven-oscillator correlation off by {err:.2e}"


def test_02_moment_quadrature_matches_factorized_integral(acceptance):
    w0 = 0.5
    pulse = PulseParams(intensity_wcm2=5e13, omega=0.45, n_cycles=2,
                        cep=0.3)
    table = oscillator_correlation_table(w0, pulse, dt=0.02, stride=10)
    omegas = pulse.omega * np.array([1.0, 2.0])
    mom = spectral_moments(table, omegas)

    t0, t1 = table.anchor_times[0], table.anchor_times[-1]
    f = {s: np.array([fourier_factor(w + s * w0, t0, t1) for w in omegas])
         for s in (-1.0, 1.0)}
    m_ref = (np.outer(f[-1], f[+1]) + np.outer(f[+1], f[-1])) / (4.0 * w0)
    n_ref = np.outer(np.conj(f[-1]), f[-1]) / (2.0 * w0)

    err_m = np.max(np.abs(mom.m_matrix - m_ref)) / np.max(np.abs(m_ref))
    err_n = np.max(np.abs(mom.n_matrix - n_ref)) / np.max(np.abs(n_ref))
    err = float(max(err_m, err_n))
    ok = err <= 1e-3
    assert acceptance(2, "moment quadrature vs factorized integral", ok,
                      f"rel err {err:.2e} <= 1e-3"), \
        f"moment matrices off by {err:.2e} relative"


def test_03_no_correlation_limit_is_a_product_coherent_state(acceptance):
    w, g, n_at = 0.45, 0.8, 3.0
    alpha = 0.4 - 0.2j
    t = np.linspace(0.0, 27.9, 1201)
    d_mean = 0.3 * np.cos(w * t) * np.sin(math.pi * t / t[-1]) ** 2
    stride = 10
    table = CorrelationTable(t[::stride], t[::stride],
                             np.zeros((121, 121), complex), {})
    dip = DipoleRecord(t, d_mean, {})

    mom = spectral_moments(table, np.array([w]), dipole=dip, g=g)
    rec = squeeze_record(mom.m_matrix[0, 0], g, n_at)
    state = displace(GaussianState.vacuum(1), [alpha + mom.chi[0]])
    state = apply_gaussian_filter(
        state, bilinear_from_moments(mom, g, strength=n_at))

    # independent composite-trapezoid evaluation of chi_1
    h = t[1] - t[0]
    f = d_mean * np.exp(1j * w * t)
    chi_ref = 1j * g * (h * f[1:-1].sum() + 0.5 * h * (f[0] + f[-1]))
    mean_ref = math.sqrt(2.0) * np.array([(alpha + chi_ref).real,
                                          (alpha + chi_ref).imag])

    zero_moments = not mom.m_matrix.any() and not mom.n_matrix.any()
    cov_exact = np.array_equal(state.cov, 0.5 * np.eye(2))
    mean_err = float(np.max(np.abs(state.mean - mean_ref)))
    ok = (zero_moments and rec.db == 0.0 and cov_exact
          and mean_err <= 1e-12)
    assert acceptance(3, "no-correlation limit -> product coherent state",
                      ok, f"M = N = 0, dB = 0, cov = I/2 exact, "
                          f"mean err {mean_err:.1e} <= 1e-12"), \
        "zero correlation must leave a displaced vacuum"


def test_04_gaussian_filter_closed_form_and_fock_oracle(acceptance):
    worst_var, worst_pur, worst_fock = 0.0, 0.0, 0.0
    for lam in (0.1, 0.5, 2.0):
        form = BilinearForm(np.diag([0.0, 1.0]), 2.0 * lam)
        out = apply_gaussian_filter(GaussianState.vacuum(1), form)
        worst_var = max(
            worst_var,
            abs(out.cov[1, 1] - 1.0 / (2.0 * (1.0 + 2.0 * lam))),
            abs(out.cov[0, 0] - (1.0 + 2.0 * lam) / 2.0))
        worst_pur = max(worst_pur,
                        abs(np.linalg.det(2.0 * out.cov) - 1.0))

        covs = []
        for n_max in (40, 80):
            psi = apply_quadratic_filter(vacuum_vector(n_max, 1),
                                         np.diag([0.0, 1.0]), 2.0 * lam,
                                         n_max)
            covs.append(mean_and_cov(psi, n_max, 1)[1])
        # the doubling gap bounds the n_max=40 error; the retained
        # n_max=80 result sits far below the 1e-6 comparison bound
        assert np.max(np.abs(covs[1] - covs[0])) < 1e-4
        worst_fock = max(worst_fock,
                         float(np.max(np.abs(out.cov - covs[1]))))
    ok = worst_var <= 1e-9 and worst_fock <= 1e-6 and worst_pur <= 1e-9
    assert acceptance(4, "Gaussian filter closed form + Fock oracle", ok,
                      f"var dev {worst_var:.1e} <= 1e-9, Fock dev "
                      f"{worst_fock:.1e} <= 1e-6, det(2cov)-1 "
                      f"{worst_pur:.1e} <= 1e-9"), \
        "single-mode filter disagrees with its closed form"


def test_05_decibel_relation(acceptance):
    anchor = squeeze_record(1.0 + 0.0j, 1.0, 1.0)       # r = -1
    dev_anchor = abs(anchor.db - 8.6859)
    r = -(0.9 ** 2) * 0.7 * 2.0
    general = squeeze_record(0.7 + 0.0j, 0.9, 2.0)
    dev_rel = abs(general.db - 10.0 * math.log10(math.exp(2.0 * r * r)))
    ok = dev_anchor <= 1e-3 and dev_rel <= 1e-12
    assert acceptance(5, "decibel relation 10 log10 exp(2 r^2)", ok,
                      f"|r|=1 -> {anchor.db:.4f} dB (dev {dev_anchor:.1e} "
                      f"<= 1e-3)"), \
        f"dB relation broken: anchor dev {dev_anchor:.2e}"


@pytest.fixture(scope="module")
def mirror_pair(tmp_path_factory):
    """Soft-core mirror pair at desk scale, shared by tests 06 and 10."""
    cache = str(tmp_path_factory.mktemp("pair_cache"))
    grid = GridSpec(x_min=-400.0, x_max=400.0, n_x=4096, dt=0.05,
                    absorber_width=40.0)
    ceps = (0.3, cep_mirror(0.3, 2))

    def run_pair():
        recs = []
        for cep in ceps:
            pulse = PulseParams(intensity_wcm2=4e14, omega=OMEGA,
                                n_cycles=2, cep=cep)
            table, dip = compute_correlation("tdse", pulse, grid=grid,
                                             stride=20, cache_dir=cache)
            m11 = spectral_moments(table, np.array([OMEGA]),
                                   dipole=dip).m_matrix[0, 0]
            recs.append(squeeze_record(m11, 1e-7, 1.0, cep=cep))
        return recs

    start = time.perf_counter()
    recs = run_pair()
    cold = time.perf_counter() - start
    return recs, cold, run_pair


def test_06_cep_mirror_pair_flips_the_squeeze_angle(acceptance,
                                                    mirror_pair):
    recs, cold, _ = mirror_pair
    dev = abs(recs[1].psi - (math.pi - recs[0].psi) % math.pi)
    ok = dev <= 0.05 and cold <= 1800.0
    assert acceptance(6, "soft-core mirror pair: psi' = pi - psi", ok,
                      f"|psi' - (pi - psi)| = {dev:.4f} rad vs 0.05, "
                      f"cold {cold:.0f}s <= 1800s"), (
        f"mirror-pair deviation {dev:.4f} rad exceeds 0.05 rad. The "
        "identity assumes the atom ends the pulse in its ground state; "
        "at 4e14 W/cm2 the 1D soft-core atom is measurably depleted and "
        "the deviation is first order in the residual excited amplitude. "
        "Evidence that this is the model, not the pipeline: the value is "
        "unchanged under box +-400 -> +-480 and dt 0.05 -> 0.025, grows "
        "to 0.27 rad when an absorbing boundary breaks time reversal, "
        "falls to 6e-4 rad at 1e12 W/cm2, and the momentum-space engine "
        "(single bound state, no depletion) satisfies the identity to "
        "1e-15 on the same pulse.")


def test_07_cep_scan_smooth_and_periodic(acceptance, tmp_path):
    cache = str(tmp_path / "scan_cache")
    n_at = 5e13
    pulse = PulseParams(intensity_wcm2=4e14, omega=OMEGA, n_cycles=2,
                        cep=0.0)
    g = auto_g(pulse, n_at, cache_dir=cache)
    ceps = [2.0 * math.pi * k / 16.0 for k in range(16)]
    recs = cep_scan("sfa", pulse, ceps, g, n_at, cache_dir=cache)
    dbs = np.array([r.db for r in recs])

    # seam value: one extra point at exactly 2 pi
    seam = cep_scan("sfa", pulse, [2.0 * math.pi], g, n_at,
                    cache_dir=cache)[0]
    period_rel = abs(seam.b - recs[0].b) / recs[0].b

    # smoothness: the sign flip E -> -E forces B(phi) = B(phi + pi); on
    # the folded fundamental period a gentle curve's total variation
    # stays near twice its range (jitter would multiply it)
    bs = np.array([r.b for r in recs])
    fold = float(np.max(np.abs(bs - np.roll(bs, 8))) / bs.max())
    half = dbs[:8]
    tv_ratio = float(np.sum(np.abs(np.diff(half, append=half[0])))
                     / (2.0 * np.ptp(half)))

    ok = (np.all(np.isfinite(dbs)) and 1.0 <= dbs.max() <= 100.0
          and period_rel <= 1e-6 and fold <= 1e-12 and tv_ratio <= 1.5)
    assert acceptance(7, "16-point CEP scan smooth and 2pi-periodic", ok,
                      f"max {dbs.max():.1f} dB, B periodicity "
                      f"{period_rel:.1e} <= 1e-6, sign-flip fold "
                      f"{fold:.1e} <= 1e-12, variation ratio "
                      f"{tv_ratio:.2f} <= 1.5"), \
        "CEP scan is jagged or breaks periodicity"


def test_08_cross_coupling_entangles_diagonal_does_not(acceptance):
    def filtered(m12):
        m = np.array([[0.0, m12], [m12, 0.0]], dtype=complex)
        n = np.diag([1.2, 1.2]).astype(complex)
        mom = SpectralMoments(omegas=np.array([0.45, 0.90]),
                              orders=np.array([1, 2]),
                              m_matrix=m, n_matrix=n)
        form = bilinear_from_moments(mom, g=0.9, strength=1.0)
        return apply_gaussian_filter(GaussianState.vacuum(2), form), m, n

    state, m, n = filtered(0.8)
    en = log_negativity(state)
    gvec = 0.9 * np.sqrt([1.0, 2.0])
    refs = []
    for n_max in (20, 28):
        psi = apply_emitter_filter(vacuum_vector(n_max, 2), m, n, gvec,
                                   1.0, n_max)
        refs.append(log_negativity_bruteforce(psi, n_max))
    conv = abs(refs[1] - refs[0])
    fock_dev = abs(en - refs[1])

    sep, _, _ = filtered(0.0)
    duan = duan_criterion(sep)
    ok = (en > 0.0 and conv < 1e-4 and fock_dev <= 1e-3
          and log_negativity(sep) == 0.0 and abs(duan - 2.0) <= 1e-12)
    assert acceptance(8, "cross coupling entangles, diagonal stays "
                         "separable", ok,
                      f"E_N = {en:.4f} > 0, Fock dev {fock_dev:.1e} <= "
                      f"1e-3, diagonal E_N = 0, Duan = {duan:.12f}"), \
        "two-mode entanglement disagrees with the Fock oracle"


def test_09_wigner_normalization_and_panel_orientation(acceptance,
                                                       tmp_path):
    states = [GaussianState.vacuum(1)]
    for lam, alpha, theta in ((0.1, 0.8 - 0.3j, 0.0),
                              (0.5, -1.0 + 0.4j, 0.9),
                              (2.0, 2.0 + 1.0j, 2.2)):
        c, s = math.cos(theta), math.sin(theta)
        rot = np.array([[c, s], [-s, c]])
        form = BilinearForm(rot.T @ np.diag([0.0, 1.0]) @ rot, 2.0 * lam)
        st = displace(GaussianState.vacuum(1), [alpha])
        states.append(apply_gaussian_filter(st, form))
    worst = 0.0
    for st in states:
        xs, ps, w = wigner(st, 0)
        norm = np.trapezoid(np.trapezoid(w, ps, axis=1), xs)
        worst = max(worst, abs(float(norm) - 1.0))

    # panel orientation vs the scan CSV, through the CLI end to end
    args = ["--backend", "oscillator", "--set", "run.g=0.00012",
            "--set", "pulse.omega=0.45",
            "--set", f"run.cache_dir={tmp_path / 'cache'}"]
    scan_csv = tmp_path / "scan.csv"
    assert main(["scan", *args, "--set", "run.cep_values=[0.7]",
                 "--out", str(scan_csv)]) == 0
    psi_csv = float(scan_csv.read_text().splitlines()[1].split(",")[2])
    assert main(["wigner", *args, "--cep", "0.7",
                 "--out-prefix", str(tmp_path / "wig")]) == 0
    rows = (tmp_path / "wig.csv").read_text().splitlines()[1:]
    data = np.array([[float(v) for v in r.split(",")] for r in rows])
    wgt = data[:, 2] / data[:, 2].sum()
    mx, mp = (data[:, 0] * wgt).sum(), (data[:, 1] * wgt).sum()
    cxx = ((data[:, 0] - mx) ** 2 * wgt).sum()
    cpp = ((data[:, 1] - mp) ** 2 * wgt).sum()
    cxp = ((data[:, 0] - mx) * (data[:, 1] - mp) * wgt).sum()
    angle = 0.5 * math.atan2(2.0 * cxp, cxx - cpp) % math.pi
    dev = abs(angle - psi_csv)
    dev = min(dev, math.pi - dev)

    ok = worst <= 1e-6 and dev <= 0.02
    assert acceptance(9, "Wigner normalization + panel orientation", ok,
                      f"norm dev {worst:.1e} <= 1e-6, panel angle vs "
                      f"scan psi {dev:.4f} rad <= 0.02"), \
        "Wigner maps broke normalization or orientation"


def test_10_determinism_and_warm_cache(acceptance, mirror_pair, tmp_path):
    recs, cold, run_pair = mirror_pair
    start = time.perf_counter()
    warm_recs = run_pair()
    warm = time.perf_counter() - start
    speedup = cold / warm
    identical = all(a.psi == b.psi and a.b == b.b
                    for a, b in zip(recs, warm_recs))

    args = ["--backend", "oscillator", "--set", "run.g=0.001",
            "--set", f"run.cache_dir={tmp_path / 'cache'}",
            "--set", "run.cep_values=[0.0, 2.1]"]
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["scan", *args, "--out", str(out1)]) == 0
    assert main(["scan", *args, "--out", str(out2)]) == 0
    bytes_equal = out1.read_bytes() == out2.read_bytes()

    ok = bytes_equal and identical and speedup >= 10.0
    assert acceptance(10, "byte-identical CSVs + warm cache >= 10x", ok,
                      f"CSV bytes equal: {bytes_equal}, warm pair "
                      f"{warm:.2f}s vs cold {cold:.0f}s "
                      f"({speedup:.0f}x >= 10x)"), \
        "determinism or cache speedup not met"
