"""Command-line scenario runner.

Exit codes: 0 success, 2 configuration or usage error, 3 numerical
failure, 4 a ``check`` value outside its tolerance.
"""

import argparse
import json
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import load_config
from .design_opt import (DEFAULT_BOUNDS, UncertaintyRegion, fidelity_landscape,
                         optimize_robust, optimize_standard)
from .errors import ConfigError, DomainError, NumericalFailure, OptimizationFailure
from .report import csv_text, provenance_line
from .scenario import SWEEP_AXES, Scenario, sweep
from .svg import line_plot
from .token import (acceptance_probability, combined_efficiency, forge_acceptance_prob,
                    gate_duration_ns, min_token_size, monte_carlo_verify)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_MISMATCH = 0, 2, 3, 4

log = logging.getLogger("qtoken")

AXIS_LABELS = {
    "bandwidth": "photon linewidth (GHz)",
    "efficiency": "combined efficiency",
    "length": "link length (km)",
    "storage": "storage time (ms)",
    "diffusion": "spectral diffusion sigma (GHz)",
}


def _write(out_dir, name, text):
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    path.write_text(text)
    log.info("wrote %s", path)
    return path


def _scenario(args):
    return Scenario(load_config(args.config, args.set or (), args.preset))


# ----- subcommands -----------------------------------------------------------

def cmd_security_table(args):
    rows = []
    for p in args.p_th:
        d = min_token_size(p, args.alpha)
        rows.append((p, d.n, d.t, forge_acceptance_prob(d.n, d.t, d.alpha)))
    text = csv_text(("p_th", "n", "t", "p_af"), rows, extra={"alpha": args.alpha})
    sys.stdout.write(text)
    if args.out:
        _write(Path(args.out), "security_table.csv", text)
    return EXIT_OK


def cmd_optimize_cavity(args):
    sc = _scenario(args)
    problem = sc.design_problem()
    kind = "robust" if args.robust else "standard"
    try:
        if args.robust:
            region = UncertaintyRegion(args.half_kappa, args.half_omega_c,
                                       args.region_points, args.region_points)
            res = optimize_robust(problem, region, DEFAULT_BOUNDS, seed=args.seed,
                                  generations=args.generations)
        else:
            res = optimize_standard(problem, DEFAULT_BOUNDS, seed=args.seed,
                                    generations=args.generations)
    except OptimizationFailure as exc:
        best = None if exc.best is None else [float(v) for v in exc.best]
        print(json.dumps({"status": "failed", "reason": str(exc), "best": best}, indent=2))
        return EXIT_NUMERIC
    report = {"status": "ok", "mode": kind, "provenance": provenance_line(sc.config)[2:]}
    report.update(res.to_dict())
    text = json.dumps(report, indent=2, default=float) + "\n"
    sys.stdout.write(text)
    out = Path(args.out) if args.out else None
    if out:
        _write(out, f"optimize_{kind}.json", text)
    if args.grid:
        land = fidelity_landscape(res, problem, args.span, args.span, (args.grid, args.grid))
        csv = csv_text(("kappa_ghz", "delta_ghz", "infidelity"), land.rows(), sc.config,
                       {"omega0_offset_ghz": land.omega0_offset})
        if out:
            _write(out, f"landscape_{kind}.csv", csv)
        else:
            sys.stdout.write(csv)
    return EXIT_OK


def _axis_values(args):
    if args.values:
        return [float(v) for v in args.values]
    start, stop, num = args.range
    num = int(num)
    if num < 1:
        raise ConfigError("--range needs at least one point")
    # rounding keeps the printed axis free of linspace noise
    return [round(float(v), 12) for v in np.linspace(start, stop, num)]


def cmd_sweep(args):
    sc = _scenario(args)
    values = _axis_values(args)
    res = sweep(sc.config, args.axis, values, workers=args.workers)
    rows = [(r.axis_value, r.gamma_a_hz, r.f_avg, r.gamma_tok_hz, r.error) for r in res.rows]
    extra = {"axis": args.axis}
    extra.update({k: f"{v:.6g}" for k, v in res.markers.items()})
    text = csv_text(("axis_value", "gamma_a_hz", "f_avg", "gamma_tok_hz", "error"), rows,
                    sc.config, extra)
    out = Path(args.out) if args.out else None
    if out:
        _write(out, f"sweep_{args.axis}.csv", text)
    else:
        sys.stdout.write(text)
    if args.svg:
        markers = {"<F> = 3/4": res.markers["f_avg_three_quarters"]} \
            if "f_avg_three_quarters" in res.markers else None
        svg = line_plot(res.values("axis_value"), res.values("gamma_a_hz") / 1e3,
                        AXIS_LABELS[args.axis], "acceptance rate (kHz)",
                        f"{args.axis} sweep", markers)
        _write(out or Path("."), f"sweep_{args.axis}.svg", svg)
    peak = res.peak()
    if peak is not None:
        log.info("peak %.6g Hz at %s = %.6g", peak.gamma_a_hz, args.axis, peak.axis_value)
    failed = sum(1 for r in res.rows if r.error)
    if failed:
        log.warning("%d of %d sweep points failed", failed, len(res.rows))
    return EXIT_OK


def cmd_mc_verify(args):
    sc = _scenario(args)
    ev = sc.evaluate()
    design = sc.security()
    model = args.model or sc.config["security"]["acceptance_model"]
    exact, _ = acceptance_probability(design.n, design.t, ev.f_avg, ev.p_survive, model)
    mc = monte_carlo_verify(design, ev.f_avg, ev.p_survive, args.trials, args.seed, model,
                            ev.gamma_tok_hz)
    z = (mc.probability - exact) / mc.stderr if mc.stderr > 0 else \
        (0.0 if mc.probability == exact else math.inf)
    rows = [(design.n, design.t, ev.f_avg, ev.p_survive, model, exact, mc.probability,
             mc.stderr, z, mc.trials, args.seed)]
    text = csv_text(("n", "t", "f_avg", "p_survive", "model", "closed_form", "monte_carlo",
                     "stderr", "z_score", "trials", "seed"), rows, sc.config)
    sys.stdout.write(text)
    if args.out:
        _write(Path(args.out), "mc_verify.csv", text)
    return EXIT_OK


# golden values: (name, expected, relative tolerance, thunk)
def _golden_checks():
    def table():
        return [(d.n, d.t) for d in (min_token_size(p) for p in (1e-4, 1e-5, 1e-6))]

    def peak():
        cfg = load_config(preset="optical")
        vals = [round(1 + 0.05 * i, 10) for i in range(201)]
        return sweep(cfg, "bandwidth", vals).peak()

    def cliff():
        eta = combined_efficiency(0.98, 0.73, 0.98)
        return Scenario.from_preset("optical").with_values(link__eta_c=eta).evaluate()

    def nuclear():
        return Scenario.from_preset("nuclear").evaluate().gamma_a_hz

    def microwave():
        return Scenario.from_preset("microwave").evaluate().gamma_a_hz

    def design_point():
        return Scenario.from_preset("optical", ["photon.linewidth_ghz=3.18"]) \
            .evaluate().cp_infidelity

    peak_cache = {}

    def cached_peak():
        if "p" not in peak_cache:
            peak_cache["p"] = peak()
        return peak_cache["p"]

    return [
        ("security table", [(42, 41), (51, 50), (59, 58)], 0.0, table),
        ("gate duration ns", 1.50, 0.01 / 1.50, lambda: gate_duration_ns(353.32)),
        ("efficiency product", 0.4915, 0.00005 / 0.4915,
         lambda: round(combined_efficiency(0.98, 0.73, 0.98), 4)),
        ("CP infidelity at reported design", 4.90e-5, 0.20, design_point),
        ("peak acceptance rate Hz", 80.16e3, 0.05, lambda: cached_peak().gamma_a_hz),
        ("peak linewidth GHz", 5.69, 0.10, lambda: cached_peak().axis_value),
        ("rate at eta_c = 0.4915 below 1 Hz", 0.0, None, lambda: cliff().gamma_a_hz),
        ("nuclear-spin rate Hz", 1.36e3, 0.05, nuclear),
        ("microwave-control rate Hz", 53.22e3, 0.05, microwave),
    ]


def _within(name, expected, tol, got):
    if tol is None:
        return got < 1.0
    if isinstance(expected, list):
        return got == expected
    return abs(got - expected) <= tol * abs(expected)


def cmd_check(args):
    failures = 0
    rows = []
    for name, expected, tol, thunk in _golden_checks():
        t0 = time.perf_counter()
        got = thunk()
        ok = _within(name, expected, tol, got)
        failures += not ok
        rows.append((name, expected, got, ok))
        print(f"{'PASS' if ok else 'FAIL'}  {name}: got {got}, expected {expected}"
              f"{'' if tol in (None, 0.0) else f' +/- {tol:.3g} rel'}"
              f"  ({time.perf_counter() - t0:.1f} s)")
    if args.out:
        _write(Path(args.out), "check.csv",
               csv_text(("name", "expected", "got", "pass"),
                        [(n, str(e), str(g), o) for n, e, g, o in rows]))
    return EXIT_MISMATCH if failures else EXIT_OK


# ----- parser ----------------------------------------------------------------

def _positive_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError(f"threshold must lie in (0, 1), got {v}")
    return v


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML scenario file")
    common.add_argument("--preset", default="optical",
                        help="bundled preset the config file is layered on (default: %(default)s)")
    common.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                        help="override one configuration value; may repeat")
    common.add_argument("--out", help="directory for CSV/SVG/JSON output")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="qtoken", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"qtoken {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("security-table", parents=[common], help="minimal token sizes")
    s.add_argument("p_th", nargs="*", type=_positive_float, default=[])
    s.add_argument("--alpha", type=float, default=0.75)
    s.set_defaults(func=cmd_security_table)

    s = sub.add_parser("optimize-cavity", parents=[common], help="optimize the cavity design")
    s.add_argument("--robust", action="store_true", help="optimize the region average")
    s.add_argument("--half-kappa", type=float, default=2.0)
    s.add_argument("--half-omega-c", type=float, default=2.0)
    s.add_argument("--region-points", type=int, default=5)
    s.add_argument("--grid", type=int, default=0, help="landscape resolution per axis")
    s.add_argument("--span", type=float, default=2.0, help="landscape half-span (GHz)")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--generations", type=int, default=400)
    s.set_defaults(func=cmd_optimize_cavity)

    s = sub.add_parser("sweep", parents=[common], help="acceptance rate along one axis")
    s.add_argument("axis", choices=sorted(SWEEP_AXES))
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--range", nargs=3, type=float, metavar=("START", "STOP", "NUM"))
    g.add_argument("--values", nargs="+", type=float)
    s.add_argument("--svg", action="store_true", help="also write an SVG plot")
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("mc-verify", parents=[common], help="Monte Carlo vs closed form")
    s.add_argument("--trials", type=int, default=1_000_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--model", choices=("printed", "coupled"))
    s.set_defaults(func=cmd_mc_verify)

    s = sub.add_parser("check", parents=[common], help="compare against reference values")
    s.set_defaults(func=cmd_check)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalFailure, OptimizationFailure) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
