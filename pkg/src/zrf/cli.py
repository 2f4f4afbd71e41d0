"""Command-line front end: ``zrf <subcommand> [flags]``.

Every run writes its result file (CSV or JSON) plus ``<stem>.manifest.json``
holding the argument vector, resolved parameters and the SHA-256 digest of
the result, enough to replay the run and compare bytes.

Exit status: 0 success, 1 argument error, 2 resource or I/O error,
3 failed check (``lemma-a1``, ``mgf-check``).
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .bessel import bivariate_mgf_wp, bivariate_mgf_wp_quadrature, mgf_wp_prime, \
    mgf_wp_prime_quadrature
from .bounds import BoundParams, all_bounds, chernoff_lambda2, lemma42_bound, prop31_bound, \
    prop32_bound, lemma41_bound
from .experiments import FitError, TrialConfig, estimate_continuity_event, \
    estimate_interval_max_tail, estimate_joint_increment, estimate_point_tail, fit_constants, \
    gap_experiment
from .primes import ResourceLimitError, build_band, residual_table, sieve_primes
from .records import SCHEMAS, SCHEMA_VERSION, file_digest, manifest_path, read_manifest, \
    write_manifest, write_results

EXIT_OK, EXIT_USAGE, EXIT_RESOURCE, EXIT_CHECK = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _real(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def _integer(text: str) -> int:
    """Integer flag that also accepts scientific notation such as ``1e5``."""
    try:
        return int(text)
    except ValueError:
        pass
    val = _real(text)
    if not (math.isfinite(val) and val == int(val)):
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    return int(val)


def _real_list(text: str) -> list[float]:
    return [_real(t) for t in text.split(",") if t.strip()]


def _int_list(text: str) -> list[int]:
    return [_integer(t) for t in text.split(",") if t.strip()]


def _parents():
    out = _Parser(add_help=False)
    out.add_argument("--format", choices=("csv", "json"), default="csv",
                     help="result file format (default: %(default)s)")
    out.add_argument("--out", default=None,
                     help="result file; default <subcommand>.<format> in the working directory")
    band = _Parser(add_help=False)
    band.add_argument("--r", type=_integer, default=-1, help="lower band index (default: %(default)s)")
    band.add_argument("--k", type=_integer, default=3, help="upper band index (default: %(default)s)")
    mc = _Parser(add_help=False)
    mc.add_argument("--trials", type=_integer, default=1000, help="Monte Carlo trials (default: %(default)s)")
    mc.add_argument("--seed", type=_integer, default=1, help="base seed (default: %(default)s)")
    mc.add_argument("--resolution", type=_real, default=None,
                    help="certified-max grid step; default 2^(-3k)/64")
    mc.add_argument("--ci-level", type=_real, default=0.95,
                    help="confidence level of the binomial intervals (default: %(default)s)")
    mc.add_argument("--threads", type=_integer, default=1, help="worker threads (default: %(default)s)")
    const = _Parser(add_help=False)
    const.add_argument("--C", type=_real, default=1.0,
                       help="hypothesis constant, x is limited to [0, C v] (default: %(default)s)")
    const.add_argument("--c", type=_real, default=1.0,
                       help="leading constant of the bounds (default: %(default)s)")
    const.add_argument("--c-tilde", type=_real, default=1.0,
                       help="exponent constant of the bounds (default: %(default)s)")
    return out, band, mc, const


def build_parser() -> argparse.ArgumentParser:
    out, band, mc, const = _parents()
    parser = _Parser(prog="zrf", description="Random Euler-product field: checks and experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="SUBCOMMAND", required=True)

    p = sub.add_parser("sieve", parents=[out], help="list primes up to --limit, or a band with --k")
    p.add_argument("--limit", type=_integer, default=10**6, help="largest candidate (default: %(default)s)")
    p.add_argument("--r", type=_integer, default=-1, help="lower band index when --k is given (default: %(default)s)")
    p.add_argument("--k", type=_integer, default=None, help="list band (r, k) instead of all primes up to --limit")

    p = sub.add_parser("lemma-a1", parents=[out], help="residuals of prime log-power sums")
    p.add_argument("--m", type=_int_list, default=[1, 2, 3], help="comma-separated powers (default: 1,2,3)")
    p.add_argument("--P", type=_real, default=1.0, help="lower summation limit (default: %(default)s)")
    p.add_argument("--Q", type=_real, default=1e7, help="largest upper limit; decades from 1e3 up to it (default: %(default)s)")
    p.add_argument("--Q-min", type=_real, default=1e3, help="smallest upper limit (default: %(default)s)")
    p.add_argument("--check-from", type=_real, default=1e4,
                   help="decade changes must shrink from this Q on (default: %(default)s)")

    p = sub.add_parser("mgf-check", parents=[out], help="series versus quadrature for the Bessel MGFs")
    p.add_argument("--trials", type=_integer, default=50, help="random cases per MGF kind (default: %(default)s)")
    p.add_argument("--seed", type=_integer, default=1, help="seed of the random cases (default: %(default)s)")
    p.add_argument("--k", type=_integer, default=3, help="band and increment box index (default: %(default)s)")
    p.add_argument("--tol", type=_real, default=1e-10, help="absolute tolerance (default: %(default)s)")

    p = sub.add_parser("bounds", parents=[out, band, const], help="evaluate the closed-form bounds")
    for name in ("x", "a", "y", "h1", "h2", "K", "L"):
        p.add_argument(f"--{name}", type=_real, default=None, help=f"{name} (omit to skip dependent bounds)")

    p = sub.add_parser("tail", parents=[out, band, mc, const], help="P(X'(h) >= x) or its interval-max version")
    p.add_argument("--x", type=_real_list, default=[0.0, 1.0, 2.0, 4.0],
                   help="comma-separated thresholds (default: 0,1,2,4)")
    p.add_argument("--h", type=_real, default=0.0, help="evaluation point (default: %(default)s)")
    p.add_argument("--event", choices=("point", "lower", "interval"), default="point",
                   help="point: X'(h) >= x; lower: X'(h) <= x; interval: max over the "
                        "2^(-3k-1) window >= x (default: %(default)s)")

    p = sub.add_parser("continuity", parents=[out, band, mc, const],
                       help="P(window max >= x + a, X'(h) <= x)")
    p.add_argument("--x", type=_real, default=2.0, help="level (default: %(default)s)")
    p.add_argument("--a", type=_real_list, default=[2.0, 4.0, 6.0], help="comma-separated jumps (default: 2,4,6)")
    p.add_argument("--h", type=_real, default=0.0, help="window center (default: %(default)s)")

    p = sub.add_parser("joint", parents=[out, band, mc, const],
                       help="P(X'(0) >= x, X'(h2) - X'(h1) >= y)")
    p.add_argument("--x", type=_real, default=2.0, help="level (default: %(default)s)")
    p.add_argument("--y", type=_real, default=1.0, help="increment (default: %(default)s)")
    p.add_argument("--h1", type=_real, default=0.0, help="first point (default: %(default)s)")
    p.add_argument("--h2", type=_real, default=None, help="second point; default 2^(-3k-1)")

    p = sub.add_parser("gap", parents=[out, band, mc], help="continuous versus grid maximum of X on [0, 1]")
    p.add_argument("--K", type=_real, default=2.0, help="gap threshold (default: %(default)s)")
    p.add_argument("--L", type=_real, default=1.755, help="grid density (default: %(default)s)")
    return parser


def _trial_config(args) -> TrialConfig:
    return TrialConfig(r=args.r, k=args.k, n_trials=args.trials, base_seed=args.seed,
                       resolution=args.resolution, ci_level=args.ci_level,
                       C=getattr(args, "C", 1.0))


def _estimate_fields(est) -> dict:
    return {"threshold": est.threshold, "n": est.n, "hits": est.hits, "ambiguous": est.ambiguous,
            "p_hat": est.p_hat, "ci_lo": est.ci_lo, "ci_hi": est.ci_hi, "ci_level": est.ci_level,
            "p_hat_pessimistic": est.p_hat_pessimistic,
            "ci_hi_pessimistic": est.ci_hi_pessimistic}


def _or_none(func, *args):
    try:
        return func(*args)
    except ValueError:
        return None


def cmd_sieve(args):
    if args.k is not None:
        band = build_band(args.r, args.k)
        rows = [{"index": band.start_index + i, "p": int(e.p), "log_p": e.log_p,
                 "inv_sqrt_p": e.inv_sqrt_p} for i, e in enumerate(band.entries())]
    else:
        primes = sieve_primes(args.limit)
        rows = [{"index": i, "p": int(p), "log_p": math.log(p), "inv_sqrt_p": 1.0 / math.sqrt(p)}
                for i, p in enumerate(primes.tolist())]
    return rows, True


def _decades(q_min: float, q_max: float) -> list[float]:
    qs = []
    q = q_min
    while q <= q_max * (1 + 1e-12):
        qs.append(q)
        q *= 10.0
    if qs and qs[-1] < q_max:
        qs.append(q_max)
    return qs


def cmd_lemma_a1(args):
    if not args.m:
        raise UsageError("--m needs at least one power")
    Qs = _decades(args.Q_min, args.Q)
    if not Qs:
        raise UsageError(f"no upper limit in [{args.Q_min}, {args.Q}]")
    rows = residual_table(args.m, Qs, P=args.P)
    ok = True
    for m in args.m:
        mine = [row for row in rows if row["m"] == m]
        prev = None
        for row in mine:
            row["step_change"] = None if prev is None else row["residual"] - prev
            prev = row["residual"]
        # |res(10Q) - res(Q)| for Q >= check_from, indexed by the lower Q
        changes = [abs(b["step_change"]) for a, b in zip(mine, mine[1:]) if a["Q"] >= args.check_from]
        if any(later >= earlier for earlier, later in zip(changes, changes[1:])):
            ok = False
        if not all(math.isfinite(row["residual"]) for row in mine):
            ok = False
    return rows, ok


def mgf_cases(n: int, seed: int, k: int) -> list[dict]:
    """Random MGF inputs: one-prime radius up to 5, bivariate inside the increment box."""
    rng = np.random.default_rng(seed)
    primes = build_band(-1, k).p
    half = math.ldexp(1.0, -3 * k - 1)
    rows = []
    for i in range(n):
        p = int(rng.choice(primes))
        lam = float(rng.uniform(0.0, 5.0)) * math.sqrt(p) / math.log(p)
        rows.append({"kind": "univariate", "p": p, "lam1": lam, "lam2": 0.0, "h1": 0.0, "h2": 0.0})
    for i in range(n):
        p = int(rng.choice(primes))
        h1, h2 = (float(t) for t in rng.uniform(-half, half, size=2))
        y = float(rng.uniform(0.0, math.ldexp(1.0, 6 * k)))
        lam2 = chernoff_lambda2(y, h1, h2, k)
        lam1 = float(rng.uniform(0.0, 4.0))
        rows.append({"kind": "bivariate", "p": p, "lam1": lam1, "lam2": lam2, "h1": h1, "h2": h2})
    return rows


def cmd_mgf_check(args):
    rows = mgf_cases(args.trials, args.seed, args.k)
    ok = True
    for i, row in enumerate(rows):
        if row["kind"] == "univariate":
            series = mgf_wp_prime(row["p"], row["lam1"])
            quad = mgf_wp_prime_quadrature(row["p"], row["lam1"])
        else:
            args_ = (row["p"], row["lam1"], row["lam2"], row["h1"], row["h2"])
            series = bivariate_mgf_wp(*args_)
            quad = bivariate_mgf_wp_quadrature(*args_)
        diff = abs(series - quad)
        row.update(case=i, series=series, quadrature=quad, abs_diff=diff, passed=diff <= args.tol)
        ok &= row["passed"]
    return rows, ok


def cmd_bounds(args):
    params = BoundParams(args.r, args.k, C=args.C, c=args.c, c_tilde=args.c_tilde)
    vals = all_bounds(params, x=args.x, a=args.a, y=args.y, h1=args.h1, h2=args.h2,
                      K=args.K, L=args.L)
    return [{"name": name, "value": value} for name, value in vals.items()], True


def cmd_tail(args):
    cfg = _trial_config(args)
    params = BoundParams(args.r, args.k, C=args.C, c=args.c)
    if args.event == "interval":
        ests = [estimate_interval_max_tail(cfg, args.h, x, threads=args.threads) for x in args.x]
        form, bound = "prop32", prop32_bound
    else:
        side = "upper" if args.event == "point" else "lower"
        ests = estimate_point_tail(cfg, args.x, h=args.h, side=side, threads=args.threads)
        form, bound = "lemma41", lemma41_bound
    fitted = None
    if args.event != "lower":
        usable = [e for e in ests if 0 <= e.threshold <= params.x_cap]
        fitted = fit_constants(usable, form).c if usable else None
    rows = []
    for est in ests:
        rows.append({"event": est.params["event"], "r": cfg.r, "k": cfg.k, "v": cfg.v,
                     "h": args.h, "x": est.threshold, **_estimate_fields(est), "c": args.c,
                     "bound": None if args.event == "lower" else _or_none(bound, params, est.threshold),
                     "fitted_c": fitted})
    return rows, True


def cmd_continuity(args):
    cfg = _trial_config(args)
    params = BoundParams(args.r, args.k, C=args.C, c=args.c, c_tilde=args.c_tilde)
    ests = [estimate_continuity_event(cfg, args.h, args.x, a, threads=args.threads) for a in args.a]
    try:
        fitted = fit_constants(ests, "prop31", c=args.c).c_tilde
    except FitError as exc:
        print(f"zrf: c_tilde fit failed: {exc}", file=sys.stderr)
        fitted = None
    rows = []
    for a, est in zip(args.a, ests):
        rows.append({"r": cfg.r, "k": cfg.k, "v": cfg.v, "h": args.h, "x": args.x, "a": a,
                     **_estimate_fields(est), "c": args.c, "c_tilde": args.c_tilde,
                     "bound": prop31_bound(params, args.x, a), "fitted_c_tilde": fitted})
    return rows, True


def cmd_joint(args):
    cfg = _trial_config(args)
    h2 = cfg.half_window if args.h2 is None else args.h2
    params = BoundParams(args.r, args.k, C=args.C, c=args.c, c_tilde=args.c_tilde)
    est = estimate_joint_increment(cfg, args.x, args.y, args.h1, h2, threads=args.threads)
    row = {"r": cfg.r, "k": cfg.k, "v": cfg.v, "x": args.x, "y": args.y, "h1": args.h1, "h2": h2,
           **_estimate_fields(est), "c": args.c, "c_tilde": args.c_tilde,
           "bound": lemma42_bound(params, args.x, args.y, args.h1, h2)}
    row.pop("threshold")
    return [row], True


def cmd_gap(args):
    cfg = _trial_config(args)
    res = gap_experiment(cfg, args.K, args.L, threads=args.threads)
    est = _estimate_fields(res.exceed_freq)
    est.pop("threshold")
    g = res.gaps
    row = {"r": cfg.r, "k": cfg.k, "K": res.K, "L": res.L, "grid_count": res.grid.count,
           "resolution": cfg.resolution, **est, "bound": res.bound,
           "gap_mean": g["mean"], "gap_std": g["std"], "gap_min": g["min"],
           "gap_median": g["median"], "gap_q90": g["q90"], "gap_q99": g["q99"],
           "gap_max": g["max"], "max_enclosure_width": g["max_enclosure_width"],
           "negative_slack": g["negative_slack"], "min_lower_gap": g["min_lower_gap"]}
    return [row], True


COMMANDS = {"sieve": cmd_sieve, "lemma-a1": cmd_lemma_a1, "mgf-check": cmd_mgf_check,
            "bounds": cmd_bounds, "tail": cmd_tail, "continuity": cmd_continuity,
            "joint": cmd_joint, "gap": cmd_gap}


def _manifest(argv, args, out: Path, digest: str, wall: float) -> dict:
    params = {k: v for k, v in vars(args).items() if k not in ("out", "format", "threads")}
    resolution = getattr(args, "resolution", None)
    if "trials" in params and "k" in params and args.command in ("tail", "continuity", "joint", "gap"):
        resolution = _trial_config(args).resolution
    return {"schema_version": SCHEMA_VERSION, "record_type": args.command,
            "fields": list(SCHEMAS[args.command]), "version": __version__,
            "argv": list(argv), "command_line": " ".join(["zrf", *argv]),
            "params": params, "base_seed": params.get("seed"), "n_trials": params.get("trials"),
            "resolution": resolution, "format": args.format, "wall_time_s": wall,
            "outputs": {out.name: digest}}


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    if getattr(args, "threads", 1) < 1:
        parser.print_usage(sys.stderr)
        print("zrf: error: --threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    out = Path(args.out) if args.out else Path(f"{args.command}.{args.format}")
    start = time.perf_counter()
    try:
        rows, ok = COMMANDS[args.command](args)
    except ResourceLimitError as exc:
        print(f"zrf: resource error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except MemoryError:
        print("zrf: resource error: out of memory", file=sys.stderr)
        return EXIT_RESOURCE
    except (ValueError, UsageError) as exc:
        parser.print_usage(sys.stderr)
        print(f"zrf: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    wall = time.perf_counter() - start
    try:
        digest = write_results(rows, args.format, out, SCHEMAS[args.command])
        write_manifest(manifest_path(out), _manifest(argv, args, out, digest, wall))
    except OSError as exc:
        print(f"zrf: I/O error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    if not ok:
        print(f"zrf: {args.command} check failed, see {out}", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


def replay(manifest_file, out) -> bool:
    """Re-run a manifest's command writing to ``out``; True iff the bytes match the recorded digest."""
    man = read_manifest(manifest_file)
    argv = list(man["argv"])
    for flag in ("--out",):
        while flag in argv:
            i = argv.index(flag)
            del argv[i:i + 2]
    argv += ["--out", str(out)]
    code = run(argv)
    if code not in (EXIT_OK, EXIT_CHECK):
        return False
    (expected,) = man["outputs"].values()
    return file_digest(out) == expected


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
