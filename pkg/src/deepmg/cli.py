"""Command-line entry point: ``deepmg {eval,train,sweep,compare-init,check}``.

Every CSV written starts with a ``#`` comment block echoing the full
experiment settings and seed.
"""
from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from typing import List, Optional, Sequence

import numpy as np

from .errors import ConfigurationError, NumericalError
from .experiment import ExperimentSpec, load_config, point_seed
from .loss import estimate_loss, surrogate_radius
from .problems import Grid1D, assemble_poisson
from .spectral import DENSE_CAP, spectral_radius
from .train import TrainReport, homotopy_train, train
from .transfer import TransferPair, linear_baseline, operators_to_csv, read_operators_csv
from .twogrid import TwoGridContext

logger = logging.getLogger("deepmg")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_CHECK = 0, 2, 3, 4


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _csv(header: str, columns: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    for line in header.splitlines():
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _header(command: str, spec: ExperimentSpec) -> str:
    return f"deepmg {command}\n{spec.echo()}"


def _write(path: Optional[str], text: str) -> None:
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _rho(A, params, spec):
    if A.n > DENSE_CAP:
        return None
    return spectral_radius(TwoGridContext(A, params, spec.twogrid_config()))


def _init_params(spec: ExperimentSpec) -> TransferPair:
    if spec.operators:
        params = read_operators_csv(spec.operators)
        if params.n != spec.n:
            raise ConfigurationError(f"operators in {spec.operators} are for n={params.n}, not n={spec.n}")
        return params
    return linear_baseline(spec.n)


def cmd_eval(spec: ExperimentSpec) -> str:
    """Verified and surrogate radius of the linear (or given) operators."""
    A = spec.problem_spec().assemble()
    params = _init_params(spec)
    ctx = TwoGridContext(A, params, spec.twogrid_config())
    rho = _rho(A, params, spec)
    sur = surrogate_radius(ctx, spec.loss_config())
    source = spec.operators or "linear"
    row = [spec.problem_spec().label(), spec.n, source, params.omega, rho, sur]
    return _csv(_header("eval", spec), ["problem", "n", "parameters", "omega", "rho", "surrogate"], [row])


def run_training(spec: ExperimentSpec, A=None, init=None, seed=None, A0=None) -> TrainReport:
    A = spec.problem_spec().assemble() if A is None else A
    init = _init_params(spec) if init is None else init
    loss_cfg = spec.loss_config(seed)
    if spec.homotopy:
        return homotopy_train(spec.homotopy_config(A, A0), spec.adam_config(), loss_cfg, init, spec.twogrid_config())
    return train(A, init, spec.adam_config(), loss_cfg, spec.twogrid_config())


def _summary_row(spec, report: TrainReport):
    return [spec.problem_spec().label(), spec.n, report.seed, report.rho_init, report.rho,
            len(report.losses), report.converged, report.retries]


SUMMARY_COLUMNS = ["problem", "n", "seed", "rho_init", "rho", "iterations", "converged", "retries"]


def cmd_train(spec: ExperimentSpec):
    """Train and return (summary csv, loss csv, operator csv, report)."""
    report = run_training(spec)
    header = _header("train", spec)
    summary = _csv(header, SUMMARY_COLUMNS, [_summary_row(spec, report)])
    losses = _csv(header, ["iteration", "loss"], list(enumerate(report.losses)))
    if report.stages:
        stage_rows = [[s.alpha, s.surrogate, s.accepted, s.halvings] for s in report.stages]
        losses += "\n" + _csv("homotopy stages", ["alpha", "surrogate", "accepted", "halvings"], stage_rows)
    ops = operators_to_csv(report.params, header)
    return summary, losses, ops, report


def _sweep_values(spec: ExperimentSpec) -> np.ndarray:
    if spec.axis is None:
        raise ConfigurationError("sweep needs --axis k or --axis eps")
    if spec.axis == "eps":
        h = Grid1D(spec.n).h
        lo = spec.start if spec.start is not None else 1.01 * h
        hi = spec.stop if spec.stop is not None else 0.1
        return np.geomspace(lo, hi, spec.num)
    if spec.start is None or spec.stop is None:
        raise ConfigurationError("k sweep needs --start and --stop")
    return np.linspace(spec.start, spec.stop, spec.num)


def _eps_point(args):
    spec, index, eps = args
    pspec = spec.problem_spec(kind="convdiff", eps=float(eps), k=None, k_max=None)
    A = pspec.assemble()
    lin = linear_baseline(spec.n)
    point = replace(spec, homotopy=False)
    report = run_training(point, A=A, init=lin, seed=point_seed(spec.seed, index))
    return [float(eps), report.rho_init, report.rho]


def cmd_sweep(spec: ExperimentSpec) -> str:
    """One row per sweep point: parameter, linear rho, trained rho.

    ``eps`` points are independent and run in a process pool. ``k`` points are
    sequential: each starts from the previous point's parameters, continuing by
    homotopy from the previous matrix when ``homotopy`` is set.
    """
    values = _sweep_values(spec)
    rows: List[list] = []
    if spec.axis == "eps":
        tasks = [(spec, i, v) for i, v in enumerate(values)]
        if spec.jobs > 1:
            with ProcessPoolExecutor(spec.jobs) as pool:
                rows = list(pool.map(_eps_point, tasks))
        else:
            rows = [_eps_point(t) for t in tasks]
        return _csv(_header("sweep", spec), ["eps", "rho_linear", "rho_dmg"], rows)

    params = linear_baseline(spec.n)
    A_prev = None
    for i, k in enumerate(values):
        pspec = spec.problem_spec(kind="helmholtz", k=float(k), k_max=None)
        A = pspec.assemble()
        rho_lin = _rho(A, linear_baseline(spec.n), spec)
        seed = point_seed(spec.seed, i)
        if A_prev is None or not spec.homotopy:
            report = run_training(replace(spec, homotopy=False), A=A, init=params, seed=seed)
        else:
            report = run_training(spec, A=A, init=params, seed=seed, A0=A_prev)
        params, A_prev = report.params, A
        rows.append([float(k), rho_lin, report.rho])
        logger.info("k=%g linear=%s dmg=%s", k, rho_lin, report.rho)
    return _csv(_header("sweep", spec), ["k", "rho_linear", "rho_dmg"], rows)


def compare_init(spec: ExperimentSpec):
    """Standard and homotopy initialization under the same iteration budget.

    The homotopy run goes first; the standard run then gets ``len(losses)``
    iterations. Returns ``(standard, homotopy)`` reports.
    """
    A = spec.problem_spec().assemble()
    lin = linear_baseline(spec.n)
    if spec.T == 0:
        std = train(A, lin, spec.adam_config(0), spec.loss_config(), spec.twogrid_config())
        hom = train(A, lin, spec.adam_config(0), spec.loss_config(), spec.twogrid_config())
        return std, hom
    hom = homotopy_train(spec.homotopy_config(A), spec.adam_config(), spec.loss_config(), lin,
                         spec.twogrid_config())
    std = train(A, lin, spec.adam_config(len(hom.losses)), spec.loss_config(), spec.twogrid_config())
    return std, hom


def cmd_compare_init(spec: ExperimentSpec) -> str:
    std, hom = compare_init(spec)
    A = spec.problem_spec().assemble()
    if not std.losses:
        # zero budget: each trace is the single initial loss
        initial = estimate_loss(TwoGridContext(A, std.params, spec.twogrid_config()), spec.loss_config())
        std.losses.append(initial)
        hom.losses.append(initial)
    length = max(len(std.losses), len(hom.losses))
    rows = []
    for i in range(length):
        rows.append([i, std.losses[i] if i < len(std.losses) else None,
                     hom.losses[i] if i < len(hom.losses) else None])
    header = _header("compare-init", spec) + f"\nrho_standard={std.rho!r}\nrho_homotopy={hom.rho!r}"
    return _csv(header, ["iteration", "loss_standard", "loss_homotopy"], rows)


def _add_common(p: argparse.ArgumentParser):
    g = p.add_argument_group("experiment")
    g.add_argument("--config", help="flat key = value file; flags override it")
    g.add_argument("--problem", choices=["poisson", "helmholtz", "convdiff"])
    g.add_argument("--n", type=int)
    g.add_argument("--k", type=float, help="constant Helmholtz wavenumber")
    g.add_argument("--kmax", type=float, help="piecewise wavenumber: 1 on [0, 0.5), kmax on [0.5, 1]")
    g.add_argument("--ksampling", choices=["node", "left"])
    g.add_argument("--eps", type=float)
    g.add_argument("--s1", type=int)
    g.add_argument("--s2", type=int)
    g.add_argument("--K", type=int)
    g.add_argument("--N", type=int)
    g.add_argument("--T", type=int)
    g.add_argument("--step", type=float)
    g.add_argument("--objective", choices=["log", "raw"])
    g.add_argument("--homotopy", action="store_const", const=True)
    g.add_argument("--tau", type=float)
    g.add_argument("--delta", type=float)
    g.add_argument("--max-halvings", dest="max_halvings", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--operators", help="operator CSV to start from / evaluate")
    g.add_argument("--out", help="output file (prefix for train)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="deepmg", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("eval", "spectral radius of given operators"),
        ("train", "optimize R, P and omega"),
        ("sweep", "train over a range of k or eps"),
        ("compare-init", "standard vs homotopy initialization"),
    ]:
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
        if name == "sweep":
            p.add_argument("--axis", choices=["k", "eps"])
            p.add_argument("--start", type=float)
            p.add_argument("--stop", type=float)
            p.add_argument("--num", type=int)
            p.add_argument("--jobs", type=int)
    p = sub.add_parser("check", help="run the acceptance criteria")
    p.add_argument("--only", help="comma-separated criterion numbers")
    p.add_argument("--long", action="store_true", help="also run the long full-scale experiments")
    return parser


def spec_from_args(args: argparse.Namespace) -> ExperimentSpec:
    values = {}
    if getattr(args, "config", None):
        values.update(load_config(args.config))
    for key in ExperimentSpec.keys():
        val = getattr(args, key, None)
        if val is not None:
            values[key] = val
    return ExperimentSpec.from_mapping(values)


def _run(args) -> int:
    if args.command == "check":
        from .acceptance import run_criteria

        only = [int(x) for x in args.only.split(",")] if args.only else None
        results = run_criteria(only, long=args.long, stream=sys.stdout)
        return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK

    spec = spec_from_args(args)
    if args.command == "eval":
        text = cmd_eval(spec)
        _write(spec.out, text)
        sys.stdout.write(text)
    elif args.command == "train":
        summary, losses, ops, report = cmd_train(spec)
        if spec.out:
            _write(spec.out + ".summary.csv", summary)
            _write(spec.out + ".loss.csv", losses)
            _write(spec.out + ".operators.csv", ops)
        sys.stdout.write(summary)
        logger.info("wall time %.2f s", report.wall_time)
        if not report.converged:
            return EXIT_NUMERICAL
    elif args.command == "sweep":
        text = cmd_sweep(spec)
        _write(spec.out, text)
        sys.stdout.write(text)
    elif args.command == "compare-init":
        text = cmd_compare_init(spec)
        _write(spec.out, text)
        sys.stdout.write(text)
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return _run(args)
    except ConfigurationError as err:
        print(f"deepmg: configuration error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as err:
        print(f"deepmg: numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
