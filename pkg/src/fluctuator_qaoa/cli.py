"""Command-line experiment runner.

Subcommands: ``sweep`` (grid campaigns from a JSON config), ``brute-force``
(exact optimum of an instance), ``symmetry-check`` (landscape invariance
under the parameter symmetry group), and ``susceptibility`` (first-order
noise response with its per-run-length breakdown).

Exit codes: 0 success, 1 validation error, 2 runtime failure (including
failed symmetry checks).
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

import numpy as np

from .executor import Landscape, NoiseModel, noiseless_model
from .optimize import OptimizerConfig, basin_hop
from .sk import Params, SkInstance, brute_force_optimum, build_swap_network, parse_instance
from .susceptibility import build_chain_table, chi_from_table
from .sweep import SweepConfig, sweep, write_plot_svg
from .symmetry import all_generators, check_invariance, random_word

WORKERS_ENV = "FLUCTUATOR_QAOA_WORKERS"


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); map usage errors to 1
        raise CliError(message)


def _default_workers() -> int:
    value = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(value))
    except ValueError:
        return 1


def _build_parser() -> _Parser:
    parser = _Parser(prog="fluctuator-qaoa")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sweep = sub.add_parser("sweep", help="run a sweep campaign from a JSON config")
    p_sweep.add_argument("--config", required=True, help="JSON config file")
    p_sweep.add_argument("--plot", action="store_true", help="also emit an SVG plot")
    p_sweep.add_argument("--workers", type=int, default=None)

    p_bf = sub.add_parser("brute-force", help="exact optimum of an instance")
    p_bf.add_argument("--instance", required=True, help="weight string of +/- signs")

    p_sym = sub.add_parser("symmetry-check", help="landscape invariance checks")
    p_sym.add_argument("--n", type=int, default=4)
    p_sym.add_argument("--r", type=int, default=2)
    p_sym.add_argument("--instance", default=None, help="weight string (random if omitted)")
    p_sym.add_argument("--noise", default="none", choices=("none", "temporal", "spatial"))
    p_sym.add_argument("--p", type=float, default=0.0)
    p_sym.add_argument("--kappa", type=float, default=0.0)
    p_sym.add_argument("--error-op", default="Y")
    p_sym.add_argument("--schedule", default="active-gates")
    p_sym.add_argument("--boundary", action="store_true")
    p_sym.add_argument("--trials", type=int, default=20)
    p_sym.add_argument("--word-length", type=int, default=0, help="0 tests single generators")
    p_sym.add_argument("--tol", type=float, default=1e-9)
    p_sym.add_argument("--seed", type=int, default=0)

    p_chi = sub.add_parser("susceptibility", help="chi and its run-length breakdown")
    p_chi.add_argument("--instance", required=True)
    p_chi.add_argument("--r", type=int, default=3)
    p_chi.add_argument("--model", required=True, choices=("temporal", "spatial"))
    p_chi.add_argument("--kappa", type=float, required=True)
    p_chi.add_argument("--error-op", default="Y")
    p_chi.add_argument("--schedule", default="active-gates")
    p_chi.add_argument("--boundary", action="store_true")
    p_chi.add_argument("--betas", default=None, help="';'-joined angles (optimizes if omitted)")
    p_chi.add_argument("--gammas", default=None)
    p_chi.add_argument("--restarts", type=int, default=32)
    p_chi.add_argument("--seed", type=int, default=0)
    return parser


def _cmd_sweep(args) -> int:
    config = SweepConfig.from_json_file(args.config)
    workers = args.workers if args.workers is not None else _default_workers()
    config = replace(config, workers=workers)
    records = sweep(config)
    if config.csv_path is None and config.json_path is None:
        for rec in records:
            print(
                f"{rec.instance} {rec.model} p={rec.p:g} kappa={rec.kappa:g} "
                f"AR={rec.ar:.6f} AR0={rec.ar0:.6f} dAR={rec.dar:.3e}"
            )
    if args.plot and config.plot_path is None:
        write_plot_svg(records, "sweep.svg")
    failures = [rec for rec in records if rec.error]
    for rec in failures:
        print(f"point failed: {rec.model} p={rec.p} kappa={rec.kappa}: {rec.error}")
    return 2 if failures else 0


def _cmd_brute_force(args) -> int:
    instance = parse_instance(args.instance)
    c_star, minimizers = brute_force_optimum(instance)
    print(f"n = {instance.n}")
    print(f"C* = {c_star}")
    print(f"minimizers = {len(minimizers)}")
    for z in minimizers:
        print("  " + "".join("+" if s == 1 else "-" for s in z))
    return 0


def _cmd_symmetry(args) -> int:
    rng = np.random.default_rng(args.seed)
    if args.instance:
        instance = parse_instance(args.instance)
    else:
        instance = SkInstance.random(args.n, rng)
    circuit = build_swap_network(instance, args.r)
    if args.noise == "none":
        model = noiseless_model()
    else:
        model = NoiseModel(
            mode=args.noise,
            p=args.p,
            kappa=args.kappa,
            error_op=args.error_op,
            schedule=args.schedule,
            include_boundary_slot=args.boundary,
        )
    fn = Landscape(instance, circuit, model)
    generators = all_generators(args.r)
    failures = 0
    print(f"instance {instance.text()}  noise={args.noise} p={args.p} kappa={args.kappa}")
    print(f"{'word':<40} {'max residual':>14} {'status':>8}")
    for trial in range(args.trials):
        params = Params.from_array(rng.uniform(-np.pi, np.pi, 2 * args.r))
        if args.word_length > 0:
            words = [random_word(args.r, args.word_length, rng)]
        else:
            words = [(g,) for g in generators]
        worst = 0.0
        for word in words:
            check = check_invariance(fn, params, word, tol=args.tol)
            worst = max(worst, check.residual)
            if not check.passed:
                failures += 1
        label = "+".join(
            g.kind + (f"[{g.k}]" if g.k is not None else "") for g in words[0]
        )
        if args.word_length == 0:
            label = f"all {len(generators)} generators"
        status = "ok" if worst <= args.tol else "FAIL"
        print(f"trial {trial:>3} {label:<30} {worst:>14.3e} {status:>8}")
    print(f"failures: {failures}")
    return 2 if failures else 0


def _cmd_susceptibility(args) -> int:
    instance = parse_instance(args.instance)
    circuit = build_swap_network(instance, args.r)
    model = NoiseModel(
        mode=args.model,
        p=0.0,
        kappa=args.kappa,
        error_op=args.error_op,
        schedule=args.schedule,
        include_boundary_slot=args.boundary,
    )
    if args.betas and args.gammas:
        params = Params(
            tuple(float(v) for v in args.betas.split(";")),
            tuple(float(v) for v in args.gammas.split(";")),
        )
    else:
        config = OptimizerConfig(restarts=args.restarts, seed=args.seed)
        result = basin_hop(
            Landscape(instance, circuit, noiseless_model()), args.r, config
        )
        params = result.best_as_params()
        print(f"noiseless optimum: {result.best_value:.12g}")
        print(f"betas  = {';'.join(f'{b:.12g}' for b in params.betas)}")
        print(f"gammas = {';'.join(f'{g:.12g}' for g in params.gammas)}")
    table = build_chain_table(instance, circuit, params, model)
    breakdown = chi_from_table(table, args.kappa)
    c_star, _ = brute_force_optimum(instance)
    print(f"chi = {breakdown.chi:.12g}")
    print(f"chi/C* = {breakdown.chi / c_star:.12g}")
    print(f"noiseless <H> = {breakdown.noiseless_value:.12g}")
    print(f"{'ell':>4} {'count':>6} {'weighted <H>^(ell)':>20}")
    for row in breakdown.rows:
        print(f"{row.ell:>4} {row.count:>6} {row.weighted_average:>20.12g}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "brute-force":
            return _cmd_brute_force(args)
        if args.command == "symmetry-check":
            return _cmd_symmetry(args)
        if args.command == "susceptibility":
            return _cmd_susceptibility(args)
        raise CliError(f"unknown command {args.command!r}")
    except (CliError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
