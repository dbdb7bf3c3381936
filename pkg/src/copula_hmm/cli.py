"""Command-line interface: ``chmm <command> [options]``.

Every command writes its outputs plus ``manifest.json`` into ``--out``
(a directory). Failures print one JSON object on stderr, e.g.
``{"error": "validation", "message": "...", "command": "fit"}``, and exit
with a nonzero status: 2 for invalid input, 3 for numerical failures,
4 for file problems.
"""

from __future__ import annotations

import argparse
import functools
import json
import secrets
import sys
import time
from pathlib import Path

import numpy as np

from . import io as chmm_io
from ._parallel import ordered_map, replicate_seeds, resolve_threads
from .copulas import CopulaParameterError
from .decode import (
    closed_form_mixture_loss,
    decode_posterior,
    independence_baseline_loss,
    symmetric_mixture_model,
    zero_one_loss,
)
from .eifm import CopulaFitError, FitConfig, StateCollapseError, fit, fit_multistart
from .estimating import estimating_function_psi, gauss_seidel_spectral_radius
from .fb import NonFiniteDensityError, forward_backward
from .gof import select_family
from .model import ModelError, from_vector, parameter_names, simulate, to_vector
from .scenarios import scenario_model
from .uncertainty import BootstrapFailure, SingularInformationError, godambe_monte_carlo, parametric_bootstrap

EXIT_VALIDATION, EXIT_COMPUTE, EXIT_IO = 2, 3, 4


class CliError(Exception):
    def __init__(self, category: str, message: str, code: int):
        super().__init__(message)
        self.category = category
        self.code = code


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def _existing_file(p: str | None, what: str) -> Path | None:
    if p is None:
        return None
    path = Path(p)
    if not path.is_file():
        raise CliError("io", f"{what} file not found: {p}", EXIT_IO)
    return path


def _load_model(args):
    if getattr(args, "scenario", None) is not None:
        return scenario_model(args.scenario)
    path = _existing_file(args.model, "model")
    if path is None:
        raise CliError("validation", "give --model or --scenario", EXIT_VALIDATION)
    return chmm_io.load_model(path)


def _fit_config(args) -> FitConfig:
    return FitConfig(max_iterations=args.max_iterations, tolerance=args.tolerance, seed=args.seed)


def _estimates_rows(model):
    return [[n, float(v)] for n, v in zip(parameter_names(model), to_vector(model))]


def _parse_floats(text: str) -> list[float]:
    """``"1,5,10"`` or a ``start:stop:step`` range (stop inclusive)."""
    if ":" in text:
        start, stop, step = (float(x) for x in text.split(":"))
        return list(np.arange(start, stop + step / 2, step))
    return [float(x) for x in text.split(",") if x.strip()]


# ---------------------------------------------------------------------------
# commands; each returns the list of files written
# ---------------------------------------------------------------------------

def cmd_simulate(args, out: Path):
    model = _load_model(args)
    traj = simulate(model, args.T, np.random.default_rng(args.seed))
    chmm_io.write_trajectory_csv(out / "trajectory.csv", traj)
    chmm_io.save_model(out / "model.json", model)
    return [out / "trajectory.csv", out / "model.json"]


def cmd_fit(args, out: Path):
    traj = chmm_io.read_trajectory_csv(_existing_file(args.data, "data"))
    config = _fit_config(args)
    rng = np.random.default_rng(args.seed)
    if args.init:
        init = chmm_io.load_model(_existing_file(args.init, "init"))
        model, trace, post = fit(traj, init, config)
    else:
        families = args.family.split(",")
        if len(families) not in (1, args.K):
            raise CliError("validation", "--family needs one entry or K entries", EXIT_VALIDATION)
        model, trace, post, init = fit_multistart(traj, args.K, families if len(families) > 1 else families[0],
                                                  rng, args.n_starts, config, args.margin_family)
    chmm_io.save_model(out / "model.json", model)
    chmm_io.write_table_csv(out / "estimates.csv", ["parameter", "value"], _estimates_rows(model))
    names = parameter_names(model)
    rows = [[i, ll, mc] + list(p) for i, (ll, mc, p) in
            enumerate(zip(trace.log_likelihoods, trace.max_changes, trace.parameters))]
    chmm_io.write_table_csv(out / "trace.csv", ["iteration", "log_likelihood", "max_change"] + names, rows)
    chmm_io.write_table_csv(out / "fit_summary.csv", ["converged", "iterations", "best_iteration", "log_likelihood"],
                            [[int(trace.converged), trace.iterations, trace.best_index,
                              float(post.log_likelihood)]])
    return [out / "model.json", out / "estimates.csv", out / "trace.csv", out / "fit_summary.csv"]


def cmd_decode(args, out: Path):
    model = _load_model(args)
    traj = chmm_io.read_trajectory_csv(_existing_file(args.data, "data"))
    post = forward_backward(model, traj)
    states = decode_posterior(post.u_hat)
    header = ["t", "state"] + [f"p{k + 1}" for k in range(model.K)]
    rows = [[t + 1, int(states[t])] + [float(x) for x in post.u_hat[:, t]] for t in range(traj.T)]
    chmm_io.write_table_csv(out / "decoded.csv", header, rows)
    files = [out / "decoded.csv"]
    if traj.labels is not None:
        rep = zero_one_loss(states, traj.labels, match_labels=args.match_labels, K=model.K)
        rows = [["zero_one", rep.zero_one]] + [[f"accuracy[{k + 1}]", float(a)]
                                               for k, a in enumerate(rep.per_state_accuracy)]
        rows.append(["permutation", " ".join(map(str, rep.permutation_used))])
        chmm_io.write_table_csv(out / "loss.csv", ["metric", "value"], rows)
        files.append(out / "loss.csv")
    return files


def _loss_point(family, T, replicates, args_seed):
    theta, seed = args_seed
    model = symmetric_mixture_model(family, theta)
    (lt, st), (li, si) = independence_baseline_loss(model, None, T, replicates, seed)
    return [theta, closed_form_mixture_loss(family, theta), lt, st, li, si]


def cmd_loss_curve(args, out: Path):
    thetas = _parse_floats(args.thetas)
    seeds = replicate_seeds(args.seed, len(thetas))
    rows = ordered_map(functools.partial(_loss_point, args.family, args.T, args.replicates),
                       list(zip(thetas, seeds)), args.threads)
    chmm_io.write_table_csv(out / "loss_curve.csv",
                            ["theta", "closed_form", "loss_true", "se_true", "loss_independence", "se_independence"],
                            rows)
    return [out / "loss_curve.csv"]


def _report_rows(rep):
    return [[n, float(e), float(s), float(lo), float(hi), int(tr)]
            for n, e, s, (lo, hi), tr in zip(rep.names, rep.estimate, rep.std_errors, rep.intervals, rep.truncated)]


_REPORT_HEADER = ["parameter", "estimate", "std_error", "lower", "upper", "truncated"]


def cmd_bootstrap(args, out: Path):
    model = _load_model(args)
    rep = parametric_bootstrap(model, args.T, args.replicates, _fit_config(args), args.seed,
                               level=args.level, threads=args.threads)
    chmm_io.write_table_csv(out / "intervals.csv", _REPORT_HEADER, _report_rows(rep))
    chmm_io.write_table_csv(out / "replicates.csv", rep.names, rep.extras["replicate_estimates"].tolist())
    return [out / "intervals.csv", out / "replicates.csv"]


def cmd_godambe(args, out: Path):
    model = _load_model(args)
    rep = godambe_monte_carlo(model, args.T, args.replicates, args.seed, level=args.level, threads=args.threads)
    chmm_io.write_table_csv(out / "intervals.csv", _REPORT_HEADER, _report_rows(rep))
    chmm_io.write_table_csv(out / "covariance.csv", rep.names, rep.covariance.tolist())
    return [out / "intervals.csv", out / "covariance.csv"]


def cmd_gof(args, out: Path):
    traj = chmm_io.read_trajectory_csv(_existing_file(args.data, "data"))
    if traj.d != 2:
        raise CliError("validation", "gof needs exactly two observation columns", EXIT_VALIDATION)
    candidates = args.candidates.split(",")
    groups = [("all", traj.observations)]
    if traj.labels is not None and not args.pooled:
        groups = [(str(k), traj.observations[traj.labels == k]) for k in np.unique(traj.labels)]
    rows = []
    for name, data in groups:
        sel = select_family(data, candidates)
        for fam, val in sel.statistics.items():
            if isinstance(val, str):
                rows.append([name, fam.value, "", "", 0, val])
            else:
                rows.append([name, fam.value, val[0], val[1], int(fam is sel.family), ""])
    chmm_io.write_table_csv(out / "gof.csv", ["subset", "family", "statistic", "theta", "selected", "error"], rows)
    return [out / "gof.csv"]


def cmd_diagnose(args, out: Path):
    model = _load_model(args)
    traj = chmm_io.read_trajectory_csv(_existing_file(args.data, "data"))
    config = FitConfig(max_iterations=args.max_iterations, tolerance=args.tolerance,
                       param_tolerance=args.param_tolerance, seed=args.seed)
    _, trace, _ = fit(traj, model, config)
    # the diagnostic lives at the fixed point, which is the last iterate rather than
    # the best-likelihood one that fit() returns
    est = from_vector(model, trace.parameters[-1])
    post = forward_backward(est, traj)
    diag = gauss_seidel_spectral_radius(est, post, traj)
    psi = estimating_function_psi(est, traj)
    rows = [["converged", int(trace.converged)], ["iterations", trace.iterations],
            ["spectral_radius", diag.radius], ["spectral_radius_power", diag.radius_power_iteration],
            ["unit_diagonal_ok", int(diag.unit_diagonal_ok)],
            ["unit_diagonal_max_deviation", diag.unit_diagonal_max_deviation],
            ["singular_diagonal", int(diag.singular)], ["system_size", diag.size],
            ["max_abs_psi", float(np.max(np.abs(psi)))]]
    chmm_io.write_table_csv(out / "diagnostic.csv", ["metric", "value"], rows)
    chmm_io.save_model(out / "model.json", est)
    return [out / "diagnostic.csv", out / "model.json"]


COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "decode": cmd_decode,
    "loss-curve": cmd_loss_curve,
    "bootstrap": cmd_bootstrap,
    "godambe": cmd_godambe,
    "gof": cmd_gof,
    "diagnose": cmd_diagnose,
}


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

class _JsonErrorParser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError("validation", message, EXIT_VALIDATION)


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _JsonErrorParser(prog="chmm", description="Copula hidden Markov models")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_JsonErrorParser)

    def common(p, model=False, data=False, fitting=False):
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="root seed (generated and recorded if omitted)")
        p.add_argument("--threads", type=_positive_int, default=1, help="worker processes (CHMM_THREADS overrides)")
        if model:
            g = p.add_mutually_exclusive_group()
            g.add_argument("--model", help="model JSON file")
            g.add_argument("--scenario", type=int, choices=[1, 2, 3, 4], help="built-in scenario preset")
        if data:
            p.add_argument("--data", required=True, help="trajectory CSV")
        if fitting:
            p.add_argument("--max-iterations", type=_positive_int, default=500)
            p.add_argument("--tolerance", type=float, default=1e-6)

    p = sub.add_parser("simulate", help="simulate a trajectory")
    common(p, model=True)
    p.add_argument("--T", type=_positive_int, required=True)

    p = sub.add_parser("fit", help="estimate a model by EIFM")
    common(p, data=True, fitting=True)
    p.add_argument("--K", type=_positive_int, default=2)
    p.add_argument("--family", default="Frank", help="copula family, or a comma list with one per state")
    p.add_argument("--margin-family", default="Gaussian")
    p.add_argument("--init", help="initial model JSON (skips the two-stage initialisation)")
    p.add_argument("--n-starts", type=_positive_int, default=5)

    p = sub.add_parser("decode", help="local decoding and zero-one loss")
    common(p, model=True, data=True)
    p.add_argument("--no-match-labels", dest="match_labels", action="store_false")

    p = sub.add_parser("loss-curve", help="Monte Carlo loss of the symmetric two-state mixture")
    common(p)
    p.add_argument("--family", default="Frank", choices=["Frank", "Gauss", "FGM"])
    p.add_argument("--thetas", default="1:96:5", help="comma list or start:stop:step")
    p.add_argument("--T", type=_positive_int, default=100)
    p.add_argument("--replicates", type=_positive_int, default=200)

    for name, help_text in (("bootstrap", "parametric bootstrap intervals"),
                            ("godambe", "Monte Carlo sandwich intervals")):
        p = sub.add_parser(name, help=help_text)
        common(p, model=True, fitting=True)
        p.add_argument("--T", type=_positive_int, required=True)
        p.add_argument("--replicates", type=_positive_int, default=100)
        p.add_argument("--level", type=float, default=0.95)

    p = sub.add_parser("gof", help="copula family selection")
    common(p, data=True)
    p.add_argument("--candidates", default="Frank,Clayton,Gumbel,Joe,Gauss")
    p.add_argument("--pooled", action="store_true", help="ignore the state column")

    p = sub.add_parser("diagnose", help="fit to convergence and report the Gauss-Seidel spectral radius")
    common(p, model=True, data=True, fitting=True)
    p.add_argument("--param-tolerance", type=float, default=1e-10)
    p.set_defaults(tolerance=1e-14, max_iterations=10000)
    return parser


def _fail(category: str, message: str, code: int, command: str | None) -> int:
    sys.stderr.write(json.dumps({"error": category, "message": message, "command": command}) + "\n")
    return code


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    command = None
    try:
        args = build_parser().parse_args(argv)
        command = args.command
        if args.seed is None:
            args.seed = secrets.randbits(63)
        args.threads = resolve_threads(args.threads)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        t0 = time.perf_counter()
        files = COMMANDS[command](args, out)
        config = {k: v for k, v in vars(args).items() if k not in ("seed",)}
        chmm_io.write_manifest(out / "manifest.json", command, config, args.seed,
                               time.perf_counter() - t0, files)
    except CliError as exc:
        return _fail(exc.category, str(exc), exc.code, command)
    except (chmm_io.DataFormatError, OSError) as exc:
        return _fail("io", str(exc), EXIT_IO, command)
    except (ModelError, CopulaParameterError, ValueError) as exc:
        return _fail("validation", str(exc), EXIT_VALIDATION, command)
    except (StateCollapseError, CopulaFitError, NonFiniteDensityError, SingularInformationError,
            BootstrapFailure, FloatingPointError, np.linalg.LinAlgError) as exc:
        return _fail("compute", f"{type(exc).__name__}: {exc}", EXIT_COMPUTE, command)
    return 0


if __name__ == "__main__":
    sys.exit(main())
