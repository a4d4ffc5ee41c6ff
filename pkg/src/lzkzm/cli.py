"""Command-line front end.

Every subcommand prints CSV on stdout, or writes files when ``--out`` is
given.  Exit status: 0 on success, 2 for invalid input, 3 when a numerical
procedure fails.
"""

import argparse
import csv
import io
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .analytic import (ANTICROSSING_STATE, QuenchParams, chi_anticrossing, classical_lz, classical_lz_oracle,
                       lz_asymptotic, lz_probability, ode_oracle)
from .circuit import TimeGrid, build_circuit, prepare_anticrossing, trotter_evolve
from .errors import NumericalError, ValidationError
from .kzm import analytic_curve, fit_ai
from .lindblad import density_from_state, kraus_evolve, layer_duration_us, lindblad_evolve, rate_scale_from_profile
from .profile import ingest_profile
from .readout import calibration_from_profile, mitigate
from .sweep import MODES, SweepConfig, default_ta_grid, export_record, run_sweep, window_rule

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3


def parse_ta_grid(text):
    """``a,b,c`` or ``lo:hi:n`` (n log-spaced points)."""
    try:
        if ":" in text:
            lo, hi, n = text.split(":")
            return default_ta_grid(int(n), float(lo), float(hi))
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise ValidationError(f"cannot parse t_a grid {text!r}") from None


def _emit(text, out, name):
    if out is None:
        sys.stdout.write(text)
        return
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, name)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    print(path)


def _curve_csv(curve, mode):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("t", "N", "p", "mode"))
    layers = curve.layers or [""] * len(curve)
    for t, n, p in zip(curve.times, layers, curve.probabilities):
        w.writerow((repr(t), n, repr(p), mode))
    return buf.getvalue()


def _grid(args):
    t_f = args.tf if args.tf is not None else window_rule(args.ta, args.extend_window)
    return TimeGrid(args.ti, t_f, args.nt)


def cmd_exact(args):
    params = QuenchParams(args.ta, args.gap)
    grid = _grid(args)
    curve = analytic_curve(params, grid.times(), layers=range(grid.n_steps + 1))
    _emit(_curve_csv(curve, "analytic"), args.out, "exact.csv")


def cmd_trotter(args):
    params = QuenchParams(args.ta, args.gap)
    grid = _grid(args)
    curve = trotter_evolve(params, grid, prepare_anticrossing())
    _emit(_curve_csv(curve, "trotter"), args.out, "trotter.csv")
    if args.dump_circuit:
        _emit(build_circuit(params, grid, shots=args.shots).dump(), args.out, "circuit.txt")


def cmd_noisy(args):
    if args.profile is None:
        raise ValidationError("noisy needs --profile")
    q = ingest_profile(args.profile).qubit(args.qubit)
    params = QuenchParams(args.ta, args.gap)
    grid = _grid(args)
    rho0 = density_from_state(prepare_anticrossing())
    if args.mode == "kraus":
        curve = kraus_evolve(params, grid, q.noise(), rho0, layer_duration_us(q.t_sx))
    else:
        curve = lindblad_evolve(params, grid, q.noise(), rho0, rate_scale_from_profile(grid, q))
    _emit(_curve_csv(curve, args.mode), args.out, f"noisy_{args.mode}.csv")


def cmd_sweep(args):
    grid = parse_ta_grid(args.ta_grid) if args.ta_grid else default_ta_grid()
    config = SweepConfig(ta_grid=grid, n_layers=args.nt, shots=args.shots, mode=args.mode, seed=args.seed,
                         qubit=args.qubit, shot_source=args.shot_source, clip=args.clip,
                         allow_extended_window=args.extend_window)
    profile = ingest_profile(args.profile) if args.profile else None
    record = run_sweep(config, profile, workers=args.workers)
    if args.out is None:
        from .sweep import curves_csv
        sys.stdout.write(curves_csv(record))
    else:
        for p in export_record(record, args.out, args.format):
            print(p)


def _read_points(path):
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    pts = []
    for row in rows:
        if not row or row[0].startswith("#"):
            continue
        try:
            pts.append((float(row[0]), float(row[1])))
        except (ValueError, IndexError):
            if pts:
                raise ValidationError(f"bad row in {path}: {row}") from None
            # header line
    return pts


def cmd_fit(args):
    if args.input.endswith(".json"):
        with open(args.input, encoding="utf-8") as fh:
            doc = json.load(fh)
        pts = [(e["t_a"], e["mean"]) for e in doc["estimates"]]
    else:
        pts = _read_points(args.input)
    fit = fit_ai(pts)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("x1", "x2", "x3", "residual", "converged", "iterations"))
    w.writerow((repr(fit.x1), repr(fit.x2), repr(fit.x3), repr(fit.residual), fit.converged, fit.iterations))
    _emit(buf.getvalue(), args.out, "fit.csv")


def cmd_mitigate(args):
    if args.profile:
        cal = ingest_profile(args.profile).qubit(args.qubit).calibration()
    else:
        cal = calibration_from_profile(args.p10, args.p01)
    try:
        p = [float(x) for x in args.p.split(",")]
    except ValueError:
        raise ValidationError(f"cannot parse probability vector {args.p!r}") from None
    if len(p) == 1:
        p = [1.0 - p[0], p[0]]
    res = mitigate(p, cal, clip=args.clip)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("p0", "p1", "out_of_range", "clipped"))
    w.writerow((repr(res.probabilities[0]), repr(res.probabilities[1]), res.out_of_range, res.clipped))
    _emit(buf.getvalue(), args.out, "mitigated.csv")


def cmd_oracle(args):
    """Exact curves beside direct ODE integration, plus the classical limit."""
    grid = parse_ta_grid(args.ta_grid) if args.ta_grid else (0.1, 0.5, 1.0, 2.0)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("t_a", "t", "p_exact", "p_ode", "abs_diff"))
    summary = io.StringIO()
    s = csv.writer(summary, lineterminator="\n")
    s.writerow(("check", "parameter", "value", "reference", "abs_diff"))
    for ta in grid:
        params = QuenchParams(ta)
        t_f = window_rule(ta, True)
        ts = np.linspace(0.0, t_f, args.nt + 1)
        exact = lz_probability(ts, params, chi_anticrossing(params))
        ode = ode_oracle(params, 0.0, t_f, ANTICROSSING_STATE, args.tolerance, t_eval=ts)
        worst = 0.0
        for t, pe, (_, amp) in zip(ts, exact, ode):
            pe, po = float(pe), abs(amp.beta) ** 2
            worst = max(worst, abs(pe - po))
            w.writerow((repr(ta), repr(float(t)), repr(pe), repr(po), repr(abs(pe - po))))
        s.writerow(("exact_vs_ode", repr(ta), repr(worst), "0.0", repr(worst)))
        s.writerow(("asymptotic", repr(ta), repr(lz_asymptotic(params)), "", ""))
    if args.classical:
        for d in (0.1, 0.25, 0.5):
            ref = classical_lz_oracle(d)
            s.writerow(("classical_lz", repr(d), repr(classical_lz(d)), repr(ref), repr(abs(classical_lz(d) - ref))))
    _emit(buf.getvalue(), args.out, "oracle_curves.csv")
    _emit(summary.getvalue(), args.out, "oracle_summary.csv")


def build_parser():
    ap = argparse.ArgumentParser(prog="lzkzm", description="Landau-Zener / Kibble-Zurek simulation toolkit")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, ta=True):
        if ta:
            p.add_argument("--ta", type=float, required=True, help="annealing time t_a")
            p.add_argument("--gap", type=float, default=1.0)
            p.add_argument("--ti", type=float, default=0.0)
            p.add_argument("--tf", type=float, default=None, help="window end (default: window rule)")
        p.add_argument("--nt", type=int, default=50, help="layers / circuit depth")
        p.add_argument("--extend-window", action="store_true", help="allow t_a > 2 in the window rule")
        p.add_argument("--out", default=None, help="output directory (default: stdout)")
        p.add_argument("--format", default="csv", choices=["csv"])

    p = sub.add_parser("exact", help="exact P(t) on the layer grid")
    common(p)
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("trotter", help="gate-level product-formula evolution")
    common(p)
    p.add_argument("--shots", type=int, default=5000)
    p.add_argument("--dump-circuit", action="store_true", help="also write the native-gate listing")
    p.set_defaults(func=cmd_trotter)

    p = sub.add_parser("noisy", help="open-system evolution for a profiled qubit")
    common(p)
    p.add_argument("--profile", default=None)
    p.add_argument("--qubit", type=int, default=0)
    p.add_argument("--mode", choices=["lindblad", "kraus"], default="lindblad")
    p.set_defaults(func=cmd_noisy)

    p = sub.add_parser("sweep", help="t_a sweep with asymptotic estimates and fit")
    common(p, ta=False)
    p.add_argument("--ta-grid", default=None, help="'a,b,c' or 'lo:hi:n' (log-spaced)")
    p.add_argument("--shots", type=int, default=5000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--profile", default=None)
    p.add_argument("--qubit", type=int, default=0)
    p.add_argument("--mode", choices=list(MODES), default="analytic")
    p.add_argument("--shot-source", choices=["analytic", "trotter", "lindblad", "kraus"], default="analytic")
    p.add_argument("--clip", action="store_true", help="clip and renormalise mitigated values")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("fit", help="fit the adiabatic-impulse form to (t_a, P) points")
    p.add_argument("--input", required=True, help="CSV of t_a,P rows or a record.json")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("mitigate", help="invert the readout calibration matrix")
    p.add_argument("--p", required=True, help="'p0,p1' or just p1")
    p.add_argument("--profile", default=None)
    p.add_argument("--qubit", type=int, default=0)
    p.add_argument("--p10", type=float, default=0.0, help="prob_meas1_prep0")
    p.add_argument("--p01", type=float, default=0.0, help="prob_meas0_prep1")
    p.add_argument("--clip", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_mitigate)

    p = sub.add_parser("oracle", help="exact vs ODE golden files")
    p.add_argument("--ta-grid", default=None)
    p.add_argument("--nt", type=int, default=100)
    p.add_argument("--tolerance", type=float, default=1e-12)
    p.add_argument("--classical", action="store_true", help="also run the full-sweep classical check")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_oracle)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK
