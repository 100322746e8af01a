"""Command line interface: ``flowlaw <subcommand> ...``."""

import argparse
import os
import sys

import numpy as np

from . import benchmark
from .export import ArchiveError, emit_subroutine, load_model, save_model
from .johnson_cook import STEEL_42CRMO4, DomainError, JohnsonCookLaw
from .mlp import StructureError, predict_physical
from .plasticity import IntegrationError
from .training import (
    Dataset,
    TrainConfig,
    TrainingError,
    default_ranges,
    evaluate,
    generate_test_set,
    generate_training_grid,
    init_model,
    train_adam,
    write_history,
)

SEED_ENV = "FLOWLAW_SEED"


def _seed(args):
    env = os.environ.get(SEED_ENV)
    return int(env) if env not in (None, "") else args.seed


def _law(spec):
    return JohnsonCookLaw(STEEL_42CRMO4) if spec == "jc" else load_model(spec)


def cmd_gen_data(args):
    if args.test:
        data = generate_test_set(STEEL_42CRMO4, args.count, _seed(args),
                                 rate_sampling=args.rate_sampling)
    else:
        data = generate_training_grid(STEEL_42CRMO4)
    data.to_csv(args.out)
    print(f"wrote {len(data)} rows to {args.out}")


def cmd_train(args):
    data = Dataset.from_csv(args.data)
    seed = _seed(args)
    cfg = TrainConfig(iterations=args.iterations, learning_rate=args.lr, seed=seed,
                      report_stride=args.report_stride, schedule=args.schedule,
                      lr_final=args.lr_final, beta2=args.beta2)
    model = init_model(tuple(args.hidden), args.activation,
                       default_ranges(STEEL_42CRMO4, data), seed)

    def progress(it, erms):
        if args.verbose:
            print(f"iter {it:6d}  erms {erms:.4e}", file=sys.stderr)

    model, history = train_adam(model, data, cfg, callback=progress)
    save_model(model, args.out)
    if args.history:
        write_history(history, args.history)
    print(f"trained {model.name} ({model.n_params} parameters), "
          f"final training E_RMS {history[-1][1]:.4e}; saved to {args.out}")


def cmd_eval(args):
    report = evaluate(_law(args.model), Dataset.from_csv(args.test))
    print(report.format_table())
    if report.excluded:
        print(f"excluded near-zero references: {report.excluded}")


def cmd_export(args):
    model = load_model(args.model)
    data = Dataset.from_csv(args.data)
    sigma, d_eps, d_rate, d_T = predict_physical(model, data.eps_p, data.rate, data.T,
                                                 rate_scaling=args.rate_scaling)
    out = Dataset(data.eps_p, data.rate, data.T, sigma, np.column_stack([d_eps, d_rate, d_T]))
    out.to_csv(args.out)
    print(f"wrote {len(out)} predictions to {args.out}")


def cmd_emit(args):
    text = emit_subroutine(load_model(args.model), name=args.name)
    with open(args.out, "w", encoding="ascii") as fh:
        fh.write(text)
    print(f"wrote {args.out}")


def cmd_bench_path(args):
    preset = args.preset or ("necking_mid" if args.kind == "uniaxial_tension" else "taylor")
    settings = dict(getattr(benchmark, {"necking_mid": "NECKING_MID",
                                        "necking_end": "NECKING_END",
                                        "taylor": "TAYLOR_IMPACT"}[preset]))
    settings["kind"] = args.kind
    for key in ("total_strain", "strain_rate", "n_steps", "T0"):
        if getattr(args, key) is not None:
            settings[key] = getattr(args, key)
    path = benchmark.uniaxial_path(**settings)
    result = benchmark.run_path_benchmark(path, _law(args.law_a), _law(args.law_b))
    if args.out:
        result.to_csv(args.out)
        print(result.format_summary())
    else:
        result.to_csv(sys.stdout)
        print(result.format_summary(), file=sys.stderr)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="flowlaw",
        description="Neural-network flow law surrogate: data, training, export, benchmarks.",
    )
    sub = parser.add_subparsers(dest="command", metavar="command", required=True)

    p = sub.add_parser("gen-data", help="write the training grid or a random test set")
    p.add_argument("--out", required=True)
    p.add_argument("--test", action="store_true", help="random test set with derivatives")
    p.add_argument("--count", type=int, default=5000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rate-sampling", choices=("log", "linear"), default="log")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="train a network on a CSV dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="model archive to write")
    p.add_argument("--hidden", type=int, nargs="+", default=[15, 7])
    p.add_argument("--activation", choices=("sigmoid", "tanh"), default="sigmoid")
    p.add_argument("--iterations", type=int, default=TrainConfig.iterations)
    p.add_argument("--lr", type=float, default=TrainConfig.learning_rate)
    p.add_argument("--lr-final", type=float, default=TrainConfig.lr_final)
    p.add_argument("--schedule", choices=("cosine", "constant"), default=TrainConfig.schedule)
    p.add_argument("--beta2", type=float, default=TrainConfig.beta2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report-stride", type=int, default=100)
    p.add_argument("--history", help="CSV file for the loss history")
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="accuracy report against a test set")
    p.add_argument("--model", required=True, help="model archive, or 'jc' for the analytic law")
    p.add_argument("--test", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("export", help="write network predictions and derivatives as CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True, help="CSV with eps_p,rate,T columns")
    p.add_argument("--out", required=True)
    p.add_argument("--rate-scaling", choices=("chain", "linear"), default="chain")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("emit", help="generate the flat Fortran hardening subroutine")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--name", default="vuhard")
    p.set_defaults(func=cmd_emit)

    p = sub.add_parser("bench-path", help="compare two laws along a material-point path")
    p.add_argument("--kind", choices=benchmark.KINDS, required=True)
    p.add_argument("--law-a", default="jc")
    p.add_argument("--law-b", required=True)
    p.add_argument("--preset", choices=("necking_mid", "necking_end", "taylor"))
    p.add_argument("--total-strain", type=float)
    p.add_argument("--strain-rate", type=float)
    p.add_argument("--n-steps", type=int)
    p.add_argument("--T0", type=float)
    p.add_argument("--out", help="per-step CSV (default: stdout)")
    p.set_defaults(func=cmd_bench_path)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (OSError, ValueError, ArchiveError, DomainError, StructureError,
            TrainingError, IntegrationError) as exc:
        print(f"flowlaw {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
