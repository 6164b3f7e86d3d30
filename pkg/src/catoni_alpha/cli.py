"""Command-line front end.

    catoni-alpha estimate --input x.csv --alpha 1.5 --v 1 --eps 0.05
    catoni-alpha bounds   --alpha 1.5 --v 1 --n 500 --eps 0.001:0.001:0.08 --out fig.csv
    catoni-alpha simulate --law '{"kind": "symmetric_pareto", "alpha": 1.5}' --n 500 --eps 0.05 --trials 20000 --seed 1
    catoni-alpha regress  --input data.csv --alpha 1.5 --radius 1 --delta 0.1

Exit codes: 0 success, 1 internal error, 2 usage or validation error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import EpsilonGrid, empirical_mean_lower, figure_curves
from .distributions import WorstCaseLaw, law_from_json
from .errors import ConditionError, DomainError, RootNotFoundError
from .influence import AlphaParams
from .io import dumps17, load_json_arg, read_regression, read_samples
from .mestimator import estimate, plugin_v
from .regression import (
    ProblemMoments,
    RegressionProblem,
    RiskConfig,
    OptimizerBudget,
    excess_l1_risk,
    excess_risk_bound,
    minimize_truncated_risk,
    regression_law_from_json,
)
from .simulate import simulate_mean_estimation

log = logging.getLogger("catoni_alpha")

EXIT_OK, EXIT_INTERNAL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _manifest(command: str, args: argparse.Namespace, keys: tuple[str, ...]) -> dict:
    return {"command": command, "parameters": {k: getattr(args, k) for k in keys}}


def _scalar_eps(text: str | None) -> float | None:
    if text is None:
        return None
    grid = EpsilonGrid.parse(text)
    if len(grid) != 1:
        raise UsageError("--eps must be a single value for this command")
    return float(grid.points()[0])


def cmd_estimate(args: argparse.Namespace) -> int:
    if (args.eps is None) == (args.beta is None):
        raise UsageError("give exactly one of --eps (tuned beta) or --beta")
    x = read_samples(args.input, header=args.header)
    if args.v is None and not args.estimate_v:
        raise UsageError("--v is required (or pass --estimate-v for the heuristic plug-in)")
    v_source = "given"
    v = args.v
    if v is None:
        v = plugin_v(x, args.alpha)
        v_source = "plug-in alpha-th moment about the median (heuristic, no guarantee)"
    params = AlphaParams(args.alpha, v)
    report = estimate(x, params, epsilon=_scalar_eps(args.eps), beta=args.beta, override=args.override)
    payload = {
        "theta_hat": report.theta_hat,
        "bound": report.bound,
        "beta": report.beta_used,
        "conditions": None if report.conditions is None else report.conditions.as_dict(),
        "n": int(x.size),
        "alpha": params.alpha,
        "v": params.v,
        "v_source": v_source,
        "epsilon": _scalar_eps(args.eps),
    }
    if report.conditions is not None and not report.conditions.assu_ok:
        payload["warning"] = "sample-size condition 'assu' fails; bound carries no guarantee"
    _emit(dumps17(payload), args.out)
    return EXIT_OK


def cmd_bounds(args: argparse.Namespace) -> int:
    grid = EpsilonGrid.parse(args.eps)
    report = figure_curves(args.alpha, args.v, args.n, grid)
    _emit(report.to_csv(), args.out)
    row = report.first_crossing()
    note = (
        f"m_estimator_bound first below empirical_lower at epsilon={row.epsilon:.17g}"
        f" ({row.m_estimator_bound:.17g} < {row.empirical_lower:.17g})"
        if row is not None
        else "m_estimator_bound never drops below empirical_lower on this grid"
    )
    print(note, file=sys.stdout if args.out else sys.stderr)
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    eps = _scalar_eps(args.eps)
    spec = load_json_arg(args.law)
    if spec.get("kind") == "worst_case":
        spec.setdefault("n", args.n)
        if spec.get("eta") is None:
            # default: the radius the lower bound certifies for this (alpha, v, n, eps)
            spec["eta"] = empirical_mean_lower(float(spec["alpha"]), float(spec["v"]), int(spec["n"]), eps)
    law = law_from_json(spec)
    if isinstance(law, WorstCaseLaw) and law.n != args.n:
        log.warning("worst-case law built for n=%d but simulating n=%d", law.n, args.n)
    result = simulate_mean_estimation(law, args.n, eps, args.trials, args.seed, workers=args.workers)
    payload = result.to_json()
    payload["manifest"] = _manifest("simulate", args, ("n", "eps", "trials", "seed"))
    payload["manifest"]["parameters"]["law"] = law.to_json()
    _emit(dumps17(payload), args.out)
    return EXIT_OK


def _data_moments(problem: RegressionProblem, alpha: float) -> ProblemMoments:
    norms = np.linalg.norm(problem.xs, axis=1)
    e_x, e_xa = float(norms.mean()), float(np.mean(norms**alpha))
    sup_r = 2.0 ** (alpha - 1.0) * (float(np.mean(np.abs(problem.ys) ** alpha)) + problem.radius_r**alpha * e_xa)
    return ProblemMoments(e_x, e_xa, sup_r, "in-sample plug-in (heuristic, no guarantee)")


def cmd_regress(args: argparse.Namespace) -> int:
    xs, ys = read_regression(args.input)
    problem = RegressionProblem(xs, ys, args.radius)
    cfg = RiskConfig.tuned(args.alpha, problem.n, problem.d, problem.radius_r, args.delta, args.eps_net)
    fit = minimize_truncated_risk(problem, cfg, OptimizerBudget(n_starts=args.starts, seed=args.seed))
    law = None
    if args.law is not None:
        law = regression_law_from_json(load_json_arg(args.law))
        if law.d != problem.d:
            raise DomainError(f"law has d = {law.d} but the data have d = {problem.d}")
        moments = law.moments(cfg.alpha, problem.radius_r)
    else:
        moments = _data_moments(problem, cfg.alpha)
    cert = excess_risk_bound(moments, cfg, problem.n, problem.d, problem.radius_r)
    cert.theta_hat = [float(t) for t in fit.theta]
    payload = cert.to_json()
    payload["truncated_risk"] = fit.value
    payload["optimizer_converged"] = fit.converged
    payload["n"], payload["d"], payload["radius_r"] = problem.n, problem.d, problem.radius_r
    if law is not None:
        realized = excess_l1_risk(fit.theta, law, n_mc=args.mc_samples, seed=args.seed)
        payload["realized_excess_risk"] = float(realized.value)
        payload["realized_excess_risk_stderr"] = float(realized.stderr)
        payload["within_certificate"] = bool(realized.value <= cert.bound_value)
    payload["manifest"] = _manifest("regress", args, ("alpha", "radius", "delta", "eps_net", "seed", "starts", "mc_samples"))
    _emit(dumps17(payload), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="catoni-alpha", description=__doc__.split("\n\n")[0], allow_abbrev=False)
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="M-estimate of the mean of a sample file")
    p.add_argument("--input", required=True, help="CSV, one value per line")
    p.add_argument("--header", action="store_true", help="skip the first line of the input")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--v", type=float, help="alpha-th central moment")
    p.add_argument("--estimate-v", action="store_true", help="use the heuristic plug-in for v")
    p.add_argument("--eps", help="confidence parameter; beta is tuned from it")
    p.add_argument("--beta", type=float, help="explicit beta (no bound is reported)")
    p.add_argument("--override", action="store_true", help="report the bound even when 'assu' fails")
    p.add_argument("--out")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("bounds", help="bound comparison table over an epsilon grid")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--v", type=float, default=1.0)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--eps", required=True, help="start:step:end or a single value")
    p.add_argument("--out")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("simulate", help="Monte Carlo exceedance frequencies")
    p.add_argument("--law", required=True, help="law JSON, inline or a file path")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--eps", required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("regress", help="truncated-loss l1 regression with excess-risk certificate")
    p.add_argument("--input", required=True, help="CSV with columns x_1..x_d,y")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--radius", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--eps-net", type=float, default=None, help="net radius (default 1/n)")
    p.add_argument("--law", help="population law JSON for analytic moments and realized excess risk")
    p.add_argument("--mc-samples", type=int, default=10**6)
    p.add_argument("--starts", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_regress)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
    except ConditionError as exc:
        print(f"error: {exc}", file=sys.stderr)
    except (DomainError, RootNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    except Exception:  # noqa: BLE001
        log.exception("internal error")
        return EXIT_INTERNAL
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
