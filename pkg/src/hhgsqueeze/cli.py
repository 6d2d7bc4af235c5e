"""Command-line entry points: scan, wigner, validate, cache."""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from .config import build_run, load_config, validate_run
from .errors import CacheIntegrityError, ConfigError, NumericsError
from .gaussian import (GaussianState, apply_gaussian_filter,
                       bilinear_from_moments, displace, major_axis_angle,
                       wigner)
from .moments import (auto_g, cep_scan, compute_correlation,
                      spectral_moments, squeeze_record)
from .correlation import list_cache, remove_entry

CSV_HEADER = "cep_rad,B_au,psi_rad,r,squeezing_db,backend,g,n_at"


def _fmt(x: float) -> str:
    return format(float(x), ".12g")


def write_scan_csv(records, path: str, deterministic: bool = True) -> str:
    lines = []
    if not deterministic:
        import datetime
        stamp = datetime.datetime.now(datetime.timezone.utc).isoformat()
        lines.append(f"# generated {stamp}")
    lines.append(CSV_HEADER)
    for r in records:
        lines.append(",".join([
            _fmt(r.cep), _fmt(r.b), _fmt(r.psi), _fmt(r.r), _fmt(r.db),
            r.backend, _fmt(r.g), _fmt(r.n_at)]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def _resolve_g(rc):
    if isinstance(rc.g, str):
        return auto_g(rc.pulse, rc.n_at, sfa_params=rc.sfa,
                      stride=rc.stride, tail_cycles=rc.tail_cycles,
                      cache_dir=rc.cache_dir)
    return rc.g


def _cmd_scan(args) -> int:
    rc = build_run(load_config(args.config, args.set or ()))
    if args.backend:
        rc.backend = args.backend
    g = _resolve_g(rc)
    records = cep_scan(
        rc.backend, rc.pulse, rc.cep_values, g, rc.n_at,
        grid=rc.grid, sfa_params=rc.sfa, omega0=rc.omega0,
        osc_dt=rc.osc_dt, stride=rc.stride, tail_cycles=rc.tail_cycles,
        cache_dir=rc.cache_dir, workers=rc.workers,
        engine_workers=rc.engine_workers)
    write_scan_csv(records, args.out, rc.deterministic)
    best = min(records, key=lambda r: r.r)
    print(f"wrote {args.out}: {len(records)} CEP points, backend "
          f"{rc.backend}, g={g:.6g}")
    print(f"strongest squeezing {best.db:.4f} dB at cep={best.cep:.4f} "
          f"(psi={best.psi:.4f} rad)")
    if args.svg:
        from .plots import scan_svg
        scan_svg([r.cep for r in records], [r.db for r in records],
                 [r.psi for r in records], args.svg, rc.backend)
        print(f"wrote {args.svg}")
    return 0


def _cmd_wigner(args) -> int:
    rc = build_run(load_config(args.config, args.set or ()))
    if args.backend:
        rc.backend = args.backend
    g = _resolve_g(rc)
    from dataclasses import replace
    pulse = replace(rc.pulse, cep=float(args.cep))
    table, dipole = compute_correlation(
        rc.backend, pulse, grid=rc.grid, sfa_params=rc.sfa,
        omega0=rc.omega0, osc_dt=rc.osc_dt, stride=rc.stride,
        tail_cycles=rc.tail_cycles, cache_dir=rc.cache_dir,
        workers=rc.engine_workers, want_dipole=True)
    omegas = pulse.omega * np.arange(1, rc.n_modes + 1)
    mom = spectral_moments(table, omegas, dipole=dipole, g=g)
    rec = squeeze_record(mom.m_matrix[0, 0], g, rc.n_at, cep=pulse.cep,
                         backend=rc.backend)

    state = GaussianState.vacuum(rc.n_modes)
    alphas = mom.chi.copy()
    if args.lab_frame:
        # representative carrier amplitude so the fundamental sits at the
        # laser's phase-space point instead of the origin
        alphas[0] += -1j * (pulse.e0 / (2.0 * g)) \
            * np.exp(-1j * pulse.cep)
    state = displace(state, alphas)
    state = apply_gaussian_filter(
        state, bilinear_from_moments(mom, g, strength=rc.n_at))

    # fixed window of 4 vacuum widths in beta = (x + i p)/sqrt(2) around
    # the state center
    sub = state.marginal(0)
    beta = np.linspace(-4.0, 4.0, args.n_points)
    xs, ps, w = wigner(state, mode=0,
                       xs=sub.mean[0] + math.sqrt(2.0) * beta,
                       ps=sub.mean[1] + math.sqrt(2.0) * beta)
    prefix = args.out_prefix
    csv_path = prefix + ".csv"
    with open(csv_path, "w") as fh:
        fh.write("re_beta,im_beta,w\n")
        for i in range(xs.size):
            re_b = _fmt(xs[i] / math.sqrt(2.0))
            for j in range(ps.size):
                # 2 W(x, p) integrates to one over d^2 beta
                fh.write(f"{re_b},{_fmt(ps[j] / math.sqrt(2.0))},"
                         f"{_fmt(2.0 * w[i, j])}\n")

    nu_min = float(np.linalg.eigvalsh(sub.cov).min())
    r_eff = -0.5 * math.log(2.0 * nu_min)
    info = {
        "backend": rc.backend, "cep": pulse.cep, "g": g, "n_at": rc.n_at,
        "b": rec.b, "psi": rec.psi, "r": rec.r, "squeezing_db": rec.db,
        "r_eff": r_eff,
        "mean": state.mean.tolist(),
        "cov": state.cov.tolist(),
        "purity_mode0": sub.purity(),
        "major_axis_rad": major_axis_angle(state, 0),
        "lab_frame": bool(args.lab_frame),
        "n_modes": rc.n_modes,
        "convention": "quadratures (x1,p1,...); vacuum variance 1/2; "
                      "beta = (x + i p)/sqrt(2)",
    }
    json_path = prefix + ".state.json"
    with open(json_path, "w") as fh:
        json.dump(info, fh, indent=2, sort_keys=True)
        fh.write("\n")

    from .plots import wigner_svg
    svg_path = wigner_svg(xs, ps, w, prefix + ".svg", psi=rec.psi,
                          mean=sub.mean, cov=sub.cov, cep=pulse.cep,
                          r_eff=r_eff)
    print(f"wrote {csv_path}, {json_path}, {svg_path}")
    print(f"cep={pulse.cep:.4f}: psi={rec.psi:.4f} rad, "
          f"{rec.db:.4f} dB, purity={info['purity_mode0']:.6f}")
    return 0


def _cmd_validate(args) -> int:
    rc = build_run(load_config(args.config, args.set or ()))
    rows = validate_run(rc)
    failed = False
    for name, status, detail in rows:
        print(f"{status.upper():5s} {name}: {detail}")
        failed = failed or status == "fail"
    if failed and args.strict:
        raise ConfigError("validation failed")
    print("validation found problems" if failed else "configuration ok")
    return 0


def _cmd_cache(args) -> int:
    cache_dir = args.cache_dir or os.environ.get("HHG_CACHE_DIR") or "cache"
    if args.action == "ls":
        entries = list_cache(cache_dir)
        if not entries:
            print(f"cache {cache_dir}: empty")
            return 0
        for e in entries:
            shape = "x".join(str(s) for s in e.get("shape") or [])
            cep = e.get("cep")
            cep_txt = f"cep={cep:.4f}" if isinstance(cep, float) else ""
            print(f"{e['key']}  {e.get('backend') or '?':10s} {shape:12s} "
                  f"{e.get('bytes', 0):>12d}  {cep_txt} [{e['status']}]")
        return 0
    # rm
    if not args.keys and not args.all:
        raise ConfigError("cache rm needs at least one key or --all")
    keys = [e["key"] for e in list_cache(cache_dir)] if args.all \
        else args.keys
    removed = sum(remove_entry(cache_dir, k) for k in keys)
    print(f"removed {removed} files from {cache_dir}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="hhgsqueeze",
        description="Squeezing of harmonic field modes from the two-time "
                    "dipole correlation of a driven emitter ensemble.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default=None,
                       help="TOML configuration file")
        p.add_argument("--set", action="append", metavar="SEC.KEY=VAL",
                       help="override one config value (repeatable)")
        p.add_argument("--backend", default=None,
                       choices=["tdse", "sfa", "oscillator"])

    p_scan = sub.add_parser("scan", help="squeeze parameters over a CEP "
                                         "scan, written as CSV")
    common(p_scan)
    p_scan.add_argument("--out", default="scan.csv")
    p_scan.add_argument("--svg", default=None,
                        help="also write an SVG figure of the scan")
    p_scan.set_defaults(func=_cmd_scan)

    p_wig = sub.add_parser("wigner", help="Wigner map of the fundamental "
                                          "mode at one CEP")
    common(p_wig)
    p_wig.add_argument("--cep", type=float, default=0.0)
    p_wig.add_argument("--out-prefix", default="wigner")
    p_wig.add_argument("--n-points", type=int, default=201)
    p_wig.add_argument("--lab-frame", action="store_true",
                       help="displace the fundamental by the carrier "
                            "amplitude")
    p_wig.set_defaults(func=_cmd_wigner)

    p_val = sub.add_parser("validate", help="check a configuration "
                                            "without running")
    common(p_val)
    p_val.add_argument("--strict", action="store_true",
                       help="exit nonzero when any check fails")
    p_val.set_defaults(func=_cmd_validate)

    p_cache = sub.add_parser("cache", help="inspect or prune the "
                                           "correlation cache")
    p_cache.add_argument("action", choices=["ls", "rm"])
    p_cache.add_argument("keys", nargs="*")
    p_cache.add_argument("--cache-dir", default=None)
    p_cache.add_argument("--all", action="store_true")
    p_cache.set_defaults(func=_cmd_cache)
    return ap


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericsError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except CacheIntegrityError as exc:
        print(f"cache integrity: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
