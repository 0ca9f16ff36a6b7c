"""Command-line front end for seeded, reproducible experiment runs.

Every run resolves its full configuration (defaults included), writes it
to ``manifest.json`` in the output directory alongside the artifacts, and
derives all randomness from the given seed.  ``ompath rerun manifest.json
--output-dir elsewhere`` replays a run and reproduces its CSV outputs
byte for byte.

Commands
--------
simulate             integrate a truth path, optionally observe it
map                  multistart MAP paths for a functional instance
smallball            Monte Carlo ratio-limit and ratio-bound tables
consistency-noise    smoothing error sweep over shrinking noise levels
consistency-samples  smoothing error sweep over growing observation counts
check                run the built-in invariant suite
rerun                replay a run from its manifest

Exit codes: 0 success, 1 runtime failure (an ``error.json`` is written),
2 invalid configuration.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from . import checks
from . import consistency as cns
from . import drift as dr
from . import functional as fn
from . import gaussian as ga
from . import optimize as op
from . import sde
from . import smallball as sb
from .errors import InvalidPathError
from .rng import substream

PROG = "ompath"


def _float_list(text):
    return [float(x) for x in text.split(",") if x.strip() != ""]


def _int_list(text):
    return [int(x) for x in text.split(",") if x.strip() != ""]


def _common(parser):
    parser.add_argument("--output-dir", default="ompath-out",
                        help="directory for artifacts and the manifest")
    parser.add_argument("--seed", type=int, default=0, help="master seed")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads where supported; 1 forces serial")
    parser.add_argument("--format", choices=("csv", "json"), default="csv",
                        help="table format for ratio/consistency outputs")


def build_parser():
    parser = argparse.ArgumentParser(
        prog=PROG, description="MAP paths, small-ball checks, and consistency "
                                "experiments for conditioned scalar diffusions")
    parser.add_argument("--version", action="version", version=f"{PROG} {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="integrate a truth path, optionally observe it")
    _common(p)
    p.add_argument("--drift", choices=dr.MODEL_NAMES, default="double-well")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--u0", type=float, default=-1.0)
    p.add_argument("--T", type=float, default=10.0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--J", type=int, default=0, help="number of evenly spaced observations")
    p.add_argument("--gamma", type=float, default=1.0)

    p = sub.add_parser("map", help="multistart MAP paths for a functional instance")
    _common(p)
    p.add_argument("--variant", choices=fn._VARIANTS, default="smoothing")
    p.add_argument("--drift", choices=dr.MODEL_NAMES, default="double-well")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--u-minus", type=float, default=-1.0)
    p.add_argument("--u-plus", type=float, default=None)
    p.add_argument("--T", type=float, default=10.0)
    p.add_argument("--dt", type=float, default=0.05)
    p.add_argument("--problem-json", default=None,
                   help="full problem description; overrides the flags above")
    p.add_argument("--observations", default=None,
                   help="observations CSV (gamma sidecar next to it)")
    p.add_argument("--J", type=int, default=2,
                   help="observations to generate when none are supplied")
    p.add_argument("--gamma", type=float, default=0.35)
    p.add_argument("--n-starts", type=int, default=8)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--max-iter", type=int, default=None)
    p.add_argument("--dedup-threshold", type=float, default=1e-3)

    p = sub.add_parser("smallball", help="Monte Carlo ratio-limit and bound tables")
    _common(p)
    p.add_argument("--eigenvalues", type=_float_list, default=[1.0])
    p.add_argument("--z1", type=_float_list, default=[1.0])
    p.add_argument("--z2", type=_float_list, default=[0.0])
    p.add_argument("--phi-linear", type=_float_list, default=None,
                   help="coefficients c of a linear reweighting phi(x) = c . x")
    p.add_argument("--radii", type=_float_list, default=list(sb.default_radii()))
    p.add_argument("--n-samples", type=int, default=100_000)

    p = sub.add_parser("consistency-noise", help="smoothing error sweep over noise levels")
    _common(p)
    p.add_argument("--J", type=int, default=5)
    p.add_argument("--gammas", type=_float_list, default=[1.0, 0.5, 0.25, 0.125, 0.0625])
    p.add_argument("--drift", choices=dr.MODEL_NAMES, default="double-well")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--u-minus", type=float, default=-1.0)
    p.add_argument("--T", type=float, default=10.0)
    p.add_argument("--dt", type=float, default=0.04)
    p.add_argument("--n-starts", type=int, default=4)
    p.add_argument("--tol", type=float, default=1e-6)

    p = sub.add_parser("consistency-samples",
                       help="smoothing error sweep over observation counts")
    _common(p)
    p.add_argument("--J-values", type=_int_list, default=[2, 4, 8, 16, 32, 64])
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--metric", choices=("sup", "l2"), default="sup")
    p.add_argument("--drift", choices=dr.MODEL_NAMES, default="double-well")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--u-minus", type=float, default=-1.0)
    p.add_argument("--T", type=float, default=10.0)
    p.add_argument("--dt", type=float, default=0.04)
    p.add_argument("--n-starts", type=int, default=4)
    p.add_argument("--tol", type=float, default=1e-6)

    p = sub.add_parser("check", help="run the built-in invariant suite")
    _common(p)

    p = sub.add_parser("rerun", help="replay a run from its manifest")
    p.add_argument("manifest", help="path to a manifest.json written by a previous run")
    p.add_argument("--output-dir", default="ompath-rerun")
    return parser


def _params(args, skip=("command", "output_dir")):
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _write_manifest(out_dir, command, params):
    payload = {"artifact": PROG, "version": __version__,
               "command": command, "params": params}
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _grid(T, dt):
    n = int(round(T / dt))
    if n < 1 or abs(n * dt - T) > 1e-9 * max(T, 1.0):
        raise ValueError(f"T = {T} is not an integer multiple of dt = {dt}")
    return n


def cmd_simulate(args):
    out = args.output_dir
    n = _grid(args.T, args.dt)
    model = dr.by_name(args.drift)
    truth = sde.euler_maruyama(model, args.sigma, args.u0, args.dt, n,
                               substream(args.seed, "truth"))
    ga.write_path_csv(truth, os.path.join(out, "truth_path.csv"))
    if args.J > 0:
        times = sde.even_observation_times(args.T, args.J)
        obs = sde.observe(truth, times, args.gamma, substream(args.seed, "observations"))
        sde.write_observations_csv(
            obs, os.path.join(out, "observations.csv"),
            os.path.join(out, "observations.json"),
            extra={"seed": args.seed, "drift": args.drift, "sigma": args.sigma})
    return 0


def _map_problem(args, out):
    """Resolve the functional instance for the map command."""
    if args.problem_json is not None:
        return fn.load_problem(args.problem_json)
    n = _grid(args.T, args.dt)
    model = dr.by_name(args.drift)
    if args.variant != "smoothing":
        return fn.OMProblem(args.variant, model, args.sigma, args.u_minus,
                            args.dt, n, u_plus=args.u_plus)
    if args.observations is not None:
        sidecar = os.path.splitext(args.observations)[0] + ".json"
        obs = sde.read_observations_csv(
            args.observations, sidecar if os.path.exists(sidecar) else None,
            gamma=None if os.path.exists(sidecar) else args.gamma)
    else:
        truth = sde.euler_maruyama(model, args.sigma, args.u_minus, args.dt, n,
                                   substream(args.seed, "truth"))
        times = sde.even_observation_times(args.T, args.J)
        obs = sde.observe(truth, times, args.gamma, substream(args.seed, "observations"))
        ga.write_path_csv(truth, os.path.join(out, "truth_path.csv"))
        sde.write_observations_csv(
            obs, os.path.join(out, "observations.csv"),
            os.path.join(out, "observations.json"),
            extra={"seed": args.seed, "drift": args.drift, "sigma": args.sigma})
    return fn.OMProblem("smoothing", model, args.sigma, args.u_minus,
                        args.dt, n, observations=obs)


def cmd_map(args):
    out = args.output_dir
    problem = _map_problem(args, out)
    starts = op.default_starts(problem, args.n_starts, substream(args.seed, "starts"))
    report = op.multistart(problem, starts, tol=args.tol, max_iter=args.max_iter,
                           dedup_threshold=args.dedup_threshold, threads=args.threads)
    op.write_multistart_report(report, out)
    print(f"{len(report.minima)} distinct local minima; "
          f"best value {report.best.value:.6g} ({report.best.start_label})")
    return 0


def cmd_smallball(args):
    out = args.output_dir
    measure = ga.FiniteGaussian(args.eigenvalues)
    phi = None
    if args.phi_linear is not None:
        coeff = np.asarray(args.phi_linear, dtype=float)
        if coeff.shape != (measure.dimension,):
            raise ValueError("--phi-linear needs one coefficient per dimension")
        phi = lambda x: x @ coeff  # noqa: E731
    table = sb.om_ratio_check(measure, phi, args.z1, args.z2, radii=args.radii,
                              n_samples=args.n_samples,
                              rng=substream(args.seed, "ratio"))
    bounds = [sb.lemma_bound_check(measure, args.z1, r, args.n_samples,
                                   substream(args.seed, "bound", i))
              for i, r in enumerate(args.radii)]
    if args.format == "json":
        _dump_json(os.path.join(out, "ratio_table.json"), [
            {"radius": r.radius, "ratio": r.ratio, "stderr": r.stderr,
             "reference": r.reference, "verdict": r.verdict} for r in table.rows])
        _dump_json(os.path.join(out, "bound_table.json"), [
            {"radius": b.radius, "ratio": b.ratio, "stderr": b.stderr,
             "bound": b.bound, "verdict": b.passed} for b in bounds])
    else:
        sb.write_ratio_table_csv(table, os.path.join(out, "ratio_table.csv"))
        lines = ["radius,ratio,stderr,bound,verdict"]
        for b in bounds:
            lines.append(f"{b.radius:.17g},{b.ratio:.17g},{b.stderr:.17g},"
                         f"{b.bound:.17g},{str(b.passed).lower()}")
        with open(os.path.join(out, "bound_table.csv"), "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
    print(f"ratio -> reference {table.reference:.6g}; converged: {table.converged}; "
          f"bound satisfied at all radii: {all(b.passed for b in bounds)}")
    return 0


def _consistency_template(args):
    n = _grid(args.T, args.dt)
    model = dr.by_name(args.drift)
    template = fn.OMProblem("unconditioned", model, args.sigma, args.u_minus, args.dt, n)
    truth = sde.euler_maruyama(model, args.sigma, args.u_minus, args.dt, n,
                               substream(args.seed, "truth"))
    return template, truth


def cmd_consistency_noise(args):
    template, truth = _consistency_template(args)
    report = cns.smoothing_small_noise(template, truth, args.gammas, args.seed,
                                       n_obs=args.J, n_starts=args.n_starts,
                                       tol=args.tol, threads=args.threads)
    _emit_consistency(args, report, "noise")
    return 0


def cmd_consistency_samples(args):
    template, truth = _consistency_template(args)
    report = cns.smoothing_large_sample(template, truth, args.J_values, args.seed,
                                        gamma=args.gamma, n_starts=args.n_starts,
                                        tol=args.tol, metric=args.metric,
                                        threads=args.threads)
    _emit_consistency(args, report, "samples")
    return 0


def _emit_consistency(args, report, kind):
    config = _params(args)
    cns.write_consistency_report(report, args.output_dir, kind, config=config,
                                 metric=report.error_kind)
    if args.format == "json":
        _dump_json(os.path.join(args.output_dir, f"consistency_{kind}_{report.seed}_curve.json"),
                   [{"abscissa": a, "error": e}
                    for a, e in zip(report.abscissa, report.errors)])
    if report.fit_alpha is None:
        print("no usable fit")
    else:
        print(f"fitted error ~ {report.fit_c:.4g} * x^{'-' if kind == 'samples' else ''}"
              f"{report.fit_alpha:.4g} over {len(report.abscissa)} points")
    return 0


def cmd_check(args):
    results = checks.run_all()
    for r in results:
        print(("PASS" if r.passed else "FAIL"), r.name, "--", r.detail)
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return 1 if failed else 0


def cmd_rerun(args):
    with open(args.manifest, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    if manifest.get("artifact") != PROG:
        raise ValueError("manifest was not written by this tool")
    command = manifest["command"]
    argv = [command]
    for key, value in manifest["params"].items():
        flag = "--" + key.replace("_", "-")
        if value is None:
            continue
        if isinstance(value, list):
            argv += [flag, ",".join(str(v) for v in value)]
        else:
            argv += [flag, str(value)]
    argv += ["--output-dir", args.output_dir]
    return main(argv)


_DISPATCH = {
    "simulate": cmd_simulate,
    "map": cmd_map,
    "smallball": cmd_smallball,
    "consistency-noise": cmd_consistency_noise,
    "consistency-samples": cmd_consistency_samples,
    "check": cmd_check,
}


def _dump_json(path, payload):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "rerun":
        try:
            return cmd_rerun(args)
        except (OSError, KeyError, ValueError, json.JSONDecodeError) as exc:
            print(f"{PROG}: cannot rerun manifest: {exc}", file=sys.stderr)
            return 2
    os.makedirs(args.output_dir, exist_ok=True)
    try:
        _write_manifest(args.output_dir, args.command, _params(args))
        return _DISPATCH[args.command](args)
    except (ValueError, InvalidPathError) as exc:
        print(f"{PROG}: invalid configuration: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure: machine-readable trace
        _dump_json(os.path.join(args.output_dir, "error.json"),
                   {"error": type(exc).__name__, "message": str(exc)})
        print(f"{PROG}: run failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
