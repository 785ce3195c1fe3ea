"""Command-line entry point: ``stiffchemo <subcommand> [options]``.

Exit codes: 0 success, 1 invalid input, 2 run aborted, 3 verification failure.
Outputs go to ``--out``, else ``$STIFFCHEMO_OUTPUT_DIR``, else ``./out``; every
file starts with ``#`` lines holding the resolved config and provenance.
"""
from __future__ import annotations

import argparse
import configparser
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import config as cfgmod
from .config import RunConfig
from .continuum import continuum_growth_rate, continuum_threshold, scaled_params
from .continuum import most_unstable_mode as continuum_most_unstable
from .kinetic import (
    critical_stiffness,
    growth_rate,
    instability_rhs,
    most_unstable_mode,
    stability_diagram,
    unstable_band,
)
from .ks import KsAbort, KsConfig, ks_params_from_kinetic, ks_run
from .mc import McAbort, McConfig, McSimulation
from .model import TABLE1, ModelParams, params_from_table1, stiffness_ratio
from .snapshots import read_header, read_snapshots, write_binary, write_csv, write_table
from .spectral import detect_first_peak, pattern_metrics, spacetime_map, time_averaged_spectrum

log = logging.getLogger("stiffchemo")

ENV_OUT = "STIFFCHEMO_OUTPUT_DIR"
EXIT_OK, EXIT_INVALID, EXIT_ABORT, EXIT_VERIFY = 0, 1, 2, 3

_PARAM_FLAGS = ("set", "d_over_k", "chi_over_sqrtk", "sqrtk_delta", "d", "chi", "delta")
_MC_FLAGS = {"L": "L", "I": "I", "dt": "dt", "M": "M", "t_end": "t_end",
             "snapshot_every": "snapshot_every", "seed": "seed", "threads": "threads",
             "backend": "backend"}
_KS_FLAGS = {"L": "L", "I": "I", "dt": "dt", "t_end": "t_end",
             "snapshot_every": "snapshot_every", "seed": "seed", "init": "init",
             "amplitude": "amplitude", "mode": "mode"}


class CliError(ValueError):
    """Invalid command-line input (exit code 1)."""


# ---------------------------------------------------------------- arguments

def _add_params(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("model parameters (raw, Table 1 triple, or set name)")
    g.add_argument("--set", choices=sorted(TABLE1), help="Table 1 parameter set")
    g.add_argument("--k", type=float, help="k (required with --set or a triple)")
    g.add_argument("--d-over-k", dest="d_over_k", type=float)
    g.add_argument("--chi-over-sqrtk", dest="chi_over_sqrtk", type=float)
    g.add_argument("--sqrtk-delta", dest="sqrtk_delta", type=float)
    g.add_argument("--d", type=float)
    g.add_argument("--chi", type=float)
    g.add_argument("--delta", type=float)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="INI run configuration")
    p.add_argument("--out", type=Path, help=f"output directory (default ${ENV_OUT} or ./out)")
    p.add_argument("--threads", type=int, help="worker threads for the particle kernels")
    p.add_argument("--format", choices=cfgmod.FORMATS, help="snapshot file format")


def _add_numerics(p: argparse.ArgumentParser, ks: bool = False) -> None:
    g = p.add_argument_group("numerics" + (" (scaled units)" if ks else ""))
    g.add_argument("--L", type=float)
    g.add_argument("--I", type=int)
    g.add_argument("--dt", type=float)
    g.add_argument("--t-end", dest="t_end", type=float)
    g.add_argument("--snapshot-every", dest="snapshot_every", type=float)
    g.add_argument("--seed", type=int)
    if ks:
        g.add_argument("--init", choices=("noise", "mode", "uniform"))
        g.add_argument("--amplitude", type=float)
        g.add_argument("--mode", type=int, help="seeded mode index for --init mode")
        g.add_argument("--no-chemotaxis", action="store_true")
    else:
        g.add_argument("--M", type=int, help="particles per site at t=0")
        g.add_argument("--backend", choices=("auto", "compiled", "python"))
        g.add_argument("--no-tumble", action="store_true")
    g.add_argument("--no-growth", action="store_true")
    w = p.add_argument_group("spectrum window (default: final quarter)")
    w.add_argument("--window-start", type=float)
    w.add_argument("--window-end", type=float)
    w.add_argument("--window-interval", type=float)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="stiffchemo", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("stability-diagram", help="critical stiffness over a (k, d/k) grid")
    sp.add_argument("--k-values", type=float, nargs="+", default=[0.1, 1.0, 2.0, 10.0])
    sp.add_argument("--d-over-k-values", type=float, nargs="+")
    sp.add_argument("--d-over-k-range", type=float, nargs=3, metavar=("MIN", "MAX", "N"),
                    default=[0.1, 10.0, 21])
    _add_common(sp)

    sp = sub.add_parser("classify", help="linear stability report for parameter sets")
    _add_params(sp)
    sp.add_argument("--table1", action="store_true", help="classify all Table 1 entries")
    _add_common(sp)

    sp = sub.add_parser("dispersion", help="growth rate and instability test versus wavenumber")
    _add_params(sp)
    sp.add_argument("--lambda-range", type=float, nargs=3, metavar=("MIN", "MAX", "N"),
                    default=[0.05, 10.0, 200])
    _add_common(sp)

    sp = sub.add_parser("mc-run", help="particle simulation, spectrum and pattern metrics")
    _add_params(sp)
    _add_numerics(sp)
    _add_common(sp)

    sp = sub.add_parser("ks-run", help="continuum (flux-limited Keller-Segel) simulation")
    _add_params(sp)
    _add_numerics(sp, ks=True)
    _add_common(sp)

    sp = sub.add_parser("spectrum", help="analyse an existing snapshot file")
    sp.add_argument("input", type=Path)
    sp.add_argument("--window-start", type=float)
    sp.add_argument("--window-end", type=float)
    sp.add_argument("--window-interval", type=float)
    sp.add_argument("--out", type=Path)

    sp = sub.add_parser("verify", help="fast self-checks; exit 3 on any failure")
    sp.add_argument("--check", action="append", help="run only the named check(s)")
    sp.add_argument("--mutate", action="append", default=[], metavar="NAME=VALUE",
                    help=argparse.SUPPRESS)
    sp.add_argument("--out", type=Path)
    return ap


# ------------------------------------------------------------ configuration

def resolve_config(args, mode: str, base: str | None = None) -> RunConfig:
    """Config file (or ``base`` text) with command-line overrides applied on top."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    if base is not None:
        cp.read_string(base)
    elif getattr(args, "config", None):
        try:
            cp.read_string(Path(args.config).read_text())
        except OSError as exc:
            raise CliError(f"cannot read config: {exc}") from exc
    for sec in ("run", "params", "mc", "ks", "spectrum", "output"):
        if not cp.has_section(sec):
            cp.add_section(sec)
    cp.set("run", "mode", mode)

    given = {f: getattr(args, f, None) for f in _PARAM_FLAGS}
    given = {f: v for f, v in given.items() if v is not None}
    k = getattr(args, "k", None)
    if given:
        old_k = cp.get("params", "k", fallback=None)
        cp.remove_section("params")
        cp.add_section("params")
        if k is None and old_k is None:
            raise CliError("--k is required with parameter flags")
        cp.set("params", "k", repr(k) if k is not None else old_k)
        for f, v in given.items():
            cp.set("params", f, v if isinstance(v, str) else repr(v))
    elif k is not None:
        if cp.items("params"):
            # keep the Table 1 triple of the configured set and move along k
            trip = cfgmod.loads(_ini(cp)).params.table1()
            cp.remove_section("params")
            cp.add_section("params")
            for key, v in zip(("d_over_k", "chi_over_sqrtk", "sqrtk_delta"), trip):
                cp.set("params", key, repr(v))
        cp.set("params", "k", repr(k))

    sec = "ks" if mode == "ks-run" else "mc"
    for flag, key in (_KS_FLAGS if sec == "ks" else _MC_FLAGS).items():
        v = getattr(args, flag, None)
        if v is not None:
            cp.set(sec, key, str(v))
    if getattr(args, "no_growth", False):
        cp.set(sec, "growth", "false")
    if getattr(args, "no_tumble", False):
        cp.set("mc", "tumble", "false")
    if getattr(args, "no_chemotaxis", False):
        cp.set("ks", "chemotaxis", "false")
    if getattr(args, "threads", None) is not None:
        cp.set("mc", "threads", str(args.threads))
    for flag, key in (("window_start", "t_start"), ("window_end", "t_end"),
                      ("window_interval", "interval")):
        v = getattr(args, flag, None)
        if v is not None:
            cp.set("spectrum", key, repr(v))
    if getattr(args, "format", None):
        cp.set("output", "format", args.format)
    if getattr(args, "out", None) is not None:
        cp.set("output", "dir", str(args.out))
    return cfgmod.loads(_ini(cp))


def _ini(cp: configparser.ConfigParser) -> str:
    return "\n".join(f"[{s}]\n" + "".join(f"{k} = {v}\n" for k, v in cp.items(s))
                     for s in cp.sections() if cp.items(s))


def out_dir(cfg_dir: str | Path | None) -> Path:
    d = Path(cfg_dir) if cfg_dir else Path(os.environ.get(ENV_OUT) or "out")
    d.mkdir(parents=True, exist_ok=True)
    return d


def header_text(cfg: RunConfig, **extra) -> str:
    lines = [cfgmod.dumps(cfg).rstrip("\n"), "", "[provenance]", "program = stiffchemo",
             f"version = {__version__}"]
    lines += [f"{k} = {v}" for k, v in extra.items()]
    return "\n".join(lines) + "\n"


# -------------------------------------------------------------- subcommands

def _classify_row(name: str, p: ModelParams) -> dict:
    crit = critical_stiffness(p.k, p.d)
    ratio = stiffness_ratio(p)
    band = unstable_band(p)
    best = most_unstable_mode(p) if band else None
    return {
        "set": name, "k": p.k, "d_over_k": p.d / p.k, "stiffness_ratio": ratio,
        "critical": crit.critical_stiffness, "unstable": ratio > crit.critical_stiffness,
        "band_lo": band[0] if band else math.nan, "band_hi": band[1] if band else math.nan,
        "lambda_max": best.lam if best else math.nan, "mu1_max": best.mu1 if best else math.nan,
    }


def cmd_classify(args) -> int:
    if args.table1:
        cases = [(n, params_from_table1(*TABLE1[n], k=k))
                 for n, k in (("A", 1.0), ("A", 2.0), ("B", 0.1), ("B", 1.0), ("C", 1.0),
                              ("C", 2.0), ("D", 1.0))]
        cfg = resolve_config(argparse.Namespace(out=args.out, format=None), "classify")
    else:
        cfg = resolve_config(args, "classify")
        cases = [(args.set or "custom", cfg.params)]
    rows = [_classify_row(n, p) for n, p in cases]
    cols = list(rows[0])
    print("set    k     F'[0]/k  critical  result    band                 lambda*   mu1*")
    for r in rows:
        band = "-" if math.isnan(r["band_lo"]) else f"({r['band_lo']:.4g}, {r['band_hi']:.4g})"
        print(f"{r['set']:<6} {r['k']:<5g} {r['stiffness_ratio']:<8.4g} {r['critical']:<9.5g} "
              f"{'unstable' if r['unstable'] else 'stable':<9} {band:<20} "
              f"{r['lambda_max']:<9.4g} {r['mu1_max']:.4g}")
    write_table(out_dir(cfg.output.dir) / "classify.csv", cols,
                [[r[c] for c in cols] for r in rows], header_text(cfg))
    return EXIT_OK


def cmd_stability_diagram(args) -> int:
    if args.d_over_k_values:
        dks = list(args.d_over_k_values)
    else:
        lo, hi, n = args.d_over_k_range
        if not (0 < lo < hi and n >= 1):
            raise CliError("--d-over-k-range needs 0 < MIN < MAX and N >= 1")
        dks = list(np.geomspace(lo, hi, int(n)))
    if any(k <= 0 for k in args.k_values) or any(v <= 0 for v in dks):
        raise CliError("k and d/k values must be positive")
    cfg = resolve_config(argparse.Namespace(out=args.out, format=None, config=args.config,
                                            threads=None), "stability-diagram")
    rows = []
    for pt in stability_diagram(args.k_values, dks):
        rows.append(["kinetic", pt.k, pt.d / pt.k, pt.d, pt.critical_stiffness, pt.argmin_lambda])
    for dk in dks:
        rows.append(["continuum", 0.0, dk, 0.0, continuum_threshold(dk), math.nan])
    path = out_dir(cfg.output.dir) / "stability_diagram.csv"
    write_table(path, ["curve", "k", "d_over_k", "d", "critical_stiffness_over_k",
                       "argmin_lambda"], rows, header_text(cfg))
    print(f"wrote {len(rows)} rows to {path}")
    return EXIT_OK


def cmd_dispersion(args) -> int:
    cfg = resolve_config(args, "dispersion")
    p = cfg.params
    lo, hi, n = args.lambda_range
    if not (0 < lo < hi and n >= 2):
        raise CliError("--lambda-range needs 0 < MIN < MAX and N >= 2")
    cp = scaled_params(p)
    rows = []
    for lam in np.linspace(lo, hi, int(n)):
        r = growth_rate(float(lam), p)
        lam_hat = lam * math.sqrt(p.k)
        rows.append([lam, instability_rhs(lam, p.k, p.d), r.unstable,
                     math.nan if r.mu1 is None else r.mu1,
                     continuum_growth_rate(lam_hat, cp)])
    path = out_dir(cfg.output.dir) / "dispersion.csv"
    write_table(path, ["lambda", "instability_rhs", "unstable", "mu1", "continuum_mu1"], rows,
                header_text(cfg))
    print(f"wrote {len(rows)} rows to {path}")
    return EXIT_OK


def _window(cfg: RunConfig, t_end: float) -> tuple[float, float, float]:
    w = cfg.spectrum
    start = w.t_start if w.t_start >= 0 else 0.75 * t_end
    end = w.t_end if w.t_end >= 0 else t_end
    return start, end, w.interval


def peak_bound(p: ModelParams) -> float:
    """Upper edge of the possible unstable band in kinetic units."""
    ratio = stiffness_ratio(p)
    return math.sqrt((ratio - 1.0) / p.d) if ratio > 1 and p.d > 0 else math.inf


def predicted_peak(p: ModelParams) -> float:
    """Continuum most unstable wavenumber mapped back to kinetic units."""
    try:
        return continuum_most_unstable(scaled_params(p)) / math.sqrt(p.k)
    except ValueError:
        return math.nan


def analyse(snaps, dx: float, cfg: RunConfig, t_end: float, lam_max: float, lam_pred: float,
            outdir: Path, header: str) -> dict:
    """Write spectrum, metrics and peak tables; returns the peak summary."""
    start, end, interval = _window(cfg, t_end)
    spec = time_averaged_spectrum(snaps, start, end, interval, dx, cfg.params.k)
    write_table(outdir / "spectrum.csv", ["lambda", "power"],
                zip(spec.wavenumbers, spec.power), header)
    write_table(outdir / "metrics.csv", ["t", "min_density", "max_density", "class"],
                ([s.t, *_metrics(s)] for s in snaps), header)
    write_table(outdir / "spacetime.csv", ["t", "x", "rho"], spacetime_map(snaps, dx)
                if len(snaps) > 1 else [], header)
    peak = detect_first_peak(spec, lam_max)
    L = dx * snaps[0].rho.size
    summary = {
        "window": [start, end, interval],
        "peak_lambda": peak[0] if peak else None,
        "peak_mode": round(peak[0] * L / (2 * math.pi)) if peak else None,
        "prominence": peak[1] if peak else None,
        "predicted_lambda": lam_pred,
        "predicted_mode": lam_pred * L / (2 * math.pi) if math.isfinite(lam_pred) else None,
        "final_class": pattern_metrics(snaps[-1]).oscillation_class,
    }
    write_table(outdir / "peak.csv", list(summary),
                [[json.dumps(v) if isinstance(v, list) else v for v in summary.values()]], header)
    return summary


def _metrics(snap):
    m = pattern_metrics(snap)
    return m.min_density, m.max_density, m.oscillation_class


def _write_snaps(outdir: Path, cfg: RunConfig, snaps, dx, dt, solver, header) -> Path:
    if cfg.output.format == "binary":
        path = outdir / "snapshots.bin"
        write_binary(path, snaps, dx, dt, solver, header)
    else:
        path = outdir / "snapshots.csv"
        write_csv(path, snaps, dx, solver, header)
    return path


def _report(summary: dict) -> None:
    if summary["peak_lambda"] is None:
        print("no spectral peak above threshold")
    else:
        print(f"peak at lambda={summary['peak_lambda']:.4g} (mode {summary['peak_mode']}), "
              f"prominence {summary['prominence']:.3g}")
    if summary["predicted_mode"] is not None:
        print(f"continuum prediction: lambda={summary['predicted_lambda']:.4g} "
              f"(mode {summary['predicted_mode']:.1f})")
    print(f"final pattern class: {summary['final_class']}")


def cmd_mc_run(args) -> int:
    cfg = resolve_config(args, "mc-run")
    n = cfg.mc
    mcfg = McConfig(params=cfg.params, L=n.L, I=n.I, dt=n.dt, M=n.M, t_end=n.t_end,
                    seed=n.seed, snapshot_every=n.snapshot_every, growth=n.growth,
                    tumble=n.tumble, threads=n.threads)
    sim = McSimulation(mcfg, backend=n.backend)
    header = header_text(cfg, backend=sim.backend, threads=n.threads)
    outdir = out_dir(cfg.output.dir)

    def progress(snap):
        log.info("t=%.4g particles=%d", snap.t, snap.count)

    snaps = list(sim.iter_snapshots(progress))
    path = _write_snaps(outdir, cfg, snaps, mcfg.dx, mcfg.dt, "mc", header)
    summary = analyse(snaps, mcfg.dx, cfg, n.t_end, peak_bound(cfg.params),
                      predicted_peak(cfg.params), outdir, header)
    print(f"wrote {len(snaps)} snapshots to {path}")
    _report(summary)
    return EXIT_OK


def _ks_config(cfg: RunConfig) -> KsConfig:
    n = cfg.ks
    return KsConfig(ks_params_from_kinetic(cfg.params), L=n.L, I=n.I, t_end=n.t_end,
                    dt=n.dt or None, snapshot_every=n.snapshot_every, init=n.init,
                    amplitude=n.amplitude, mode=n.mode, seed=n.seed, growth=n.growth,
                    chemotaxis=n.chemotaxis)


def cmd_ks_run(args) -> int:
    cfg = resolve_config(args, "ks-run")
    kcfg = _ks_config(cfg)
    header = header_text(cfg, solver="ks")
    outdir = out_dir(cfg.output.dir)
    snaps = ks_run(kcfg, progress=lambda s: log.info("t=%.4g max=%.4g", s.t, s.rho.max()))
    path = _write_snaps(outdir, cfg, snaps, kcfg.dx, kcfg.step, "ks", header)
    kp = kcfg.params
    lam_max = math.sqrt((kp.Fp_hat - 1) / kp.d_hat) if kp.Fp_hat > 1 else math.inf
    lam_pred = predicted_peak(cfg.params) * math.sqrt(cfg.params.k)
    summary = analyse(snaps, kcfg.dx, cfg, kcfg.t_end, lam_max, lam_pred, outdir, header)
    print(f"wrote {len(snaps)} snapshots to {path}")
    _report(summary)
    return EXIT_OK


def cmd_spectrum(args) -> int:
    if not args.input.exists():
        raise CliError(f"no such file: {args.input}")
    try:
        cfg = cfgmod.loads(read_header(args.input))
    except (ValueError, configparser.Error) as exc:
        raise CliError(f"{args.input}: header is not a run config: {exc}") from exc
    overrides = argparse.Namespace(out=args.out, window_start=args.window_start,
                                   window_end=args.window_end,
                                   window_interval=args.window_interval)
    cfg = resolve_config(overrides, "spectrum", base=cfgmod.dumps(cfg))
    outdir = out_dir(cfg.output.dir)
    snaps, dx, solver, _ = read_snapshots(args.input)
    p = cfg.params
    if solver == "ks":
        kp = ks_params_from_kinetic(p)
        lam_max = math.sqrt((kp.Fp_hat - 1) / kp.d_hat) if kp.Fp_hat > 1 else math.inf
        lam_pred = predicted_peak(p) * math.sqrt(p.k)
    else:
        lam_max, lam_pred = peak_bound(p), predicted_peak(p)
    summary = analyse(snaps, dx, cfg, snaps[-1].t, lam_max, lam_pred, outdir,
                      header_text(cfg, source=args.input.name))
    _report(summary)
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import CHECKS, run_checks
    mutations = {}
    for item in args.mutate:
        name, sep, value = item.partition("=")
        if not sep:
            raise CliError(f"--mutate expects NAME=VALUE, got {item!r}")
        try:
            mutations[name] = float(value)
        except ValueError as exc:
            raise CliError(f"--mutate value must be a number: {item!r}") from exc
    names = args.check or list(CHECKS)
    unknown = set(names) - set(CHECKS)
    if unknown:
        raise CliError(f"unknown checks {sorted(unknown)}; known: {sorted(CHECKS)}")
    results = run_checks(names, mutations)
    for r in results:
        print(r.line())
    if args.out is not None:
        d = out_dir(args.out)
        (d / "verify.json").write_text(json.dumps(
            [{"check": r.name, "passed": r.passed, "detail": r.detail} for r in results],
            indent=2) + "\n")
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY


COMMANDS = {
    "stability-diagram": cmd_stability_diagram,
    "classify": cmd_classify,
    "dispersion": cmd_dispersion,
    "mc-run": cmd_mc_run,
    "ks-run": cmd_ks_run,
    "spectrum": cmd_spectrum,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except (McAbort, KsAbort) as exc:
        print(f"stiffchemo: run aborted: {exc}", file=sys.stderr)
        return EXIT_ABORT
    except (ValueError, configparser.Error) as exc:
        print(f"stiffchemo: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
