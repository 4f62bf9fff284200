"""Command-line front end: data generation, tuning, fitting, analysis and
self-checks. All randomness flows from one master --seed per command."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import analysis, egocv, rjmcmc, simulate
from .domain import (
    BINOMIAL,
    GAUSSIAN,
    load_problem,
    problem_from_config,
    write_region_csv,
)
from .errors import BsmmrError, ConfigError
from .selftest import run_selftest
from .simulate import TrueFunction, UNIT_SQUARE, builtin_networks

USAGE_ERROR = 2
RUNTIME_ERROR = 1

PAPER_ITERATIONS = 2_500_000
PAPER_BURN_IN = 500_000
PAPER_THIN = 1000
DESK_FACTOR = 25


def _preset(name: str, seed: int):
    """Returns (dataset, truths, problem document skeleton)."""
    square = UNIT_SQUARE
    if name in ("study1-gaussian", "study2-gaussian", "study5-gaussian"):
        if name == "study1-gaussian":
            truths = [TrueFunction("smooth", 0.0, 1.0)] * 2
        elif name == "study2-gaussian":
            truths = [TrueFunction("staircase", 0.0, 1.0, steps=4)] * 2
        else:
            truths = [
                TrueFunction("smooth", 0.0, 1.0),
                TrueFunction("step", 0.0, 1.0, corner=(0.5, 0.5)),
            ]
        data = simulate.gen_gaussian(
            truths, alphas=(0.0, 0.0), sigmas=(0.05, 0.05), counts=(1000, 100),
            boxes=(square, square), seed=seed,
        )
        doc = {
            "edges": [[0, 1]],
            "prior": {"omega": 0.0, "eta": 2.0, "p": 1.0, "q": 1.0,
                      "delta_min": 0.0, "delta_max": 1.2, "n_max": 200},
            "likelihood": {"family": GAUSSIAN, "sigma2_prior": [1.0, 0.005]},
        }
        return data, truths, doc, (square, square)
    if name == "threshold-step":
        truths = [TrueFunction("step", 0.2, 1.0, corner=(0.5, 0.5))] * 2
        data = simulate.gen_gaussian(
            truths, alphas=(0.0, 0.0), sigmas=(0.2, 0.3), counts=(200, 200),
            boxes=(square, square), seed=seed,
        )
        doc = {
            "edges": [[0, 1]],
            "prior": {"omega": 0.0, "eta": 2.0, "p": 1.0, "q": 1.0,
                      "delta_min": 0.0, "delta_max": 1.2, "n_max": 200},
            "likelihood": {"family": GAUSSIAN},
        }
        return data, truths, doc, (square, square)
    if name == "axis2-only":
        truths = [TrueFunction("axis_staircase", 0.0, 1.0, steps=2, axis=1)] * 2
        data = simulate.gen_gaussian(
            truths, alphas=(0.0, 0.0), sigmas=(0.05, 0.05), counts=(400, 400),
            boxes=(square, square), seed=seed,
        )
        doc = {
            "edges": [[0, 1]],
            "prior": {"omega": 0.0, "eta": 2.0, "delta_min": 0.0, "delta_max": 1.2,
                      "n_max": 200},
            "likelihood": {"family": GAUSSIAN},
        }
        return data, truths, doc, (square, square)
    if name in ("binomial-network1", "binomial-network2"):
        nets = builtin_networks()
        if name == "binomial-network1":
            graph = nets["chain5"]
            counts = (300,) * 5
            truths = [
                TrueFunction("staircase", 0.0, 1.0 + 0.5 * k, steps=3, box=graph.boxes[k])
                for k in range(5)
            ]
        else:
            graph = nets["hub5"]
            counts = (100, 500, 200, 300, 200)
            truths = [
                TrueFunction("smooth_plus_step", 0.0, 3.0, corner=(0.5, 0.5),
                             box=graph.boxes[k])
                for k in range(5)
            ]
        data = simulate.gen_binomial(truths, trials=100, counts=counts,
                                     boxes=graph.boxes, seed=seed)
        doc = {
            "edges": [
                [a, b]
                for a in range(5)
                for b in range(a + 1, 5)
                if graph.weights[a, b] > 0
            ],
            "domain_mode": graph.domain_mode,
            "prior": {"omega": 0.0, "eta": 2.0, "p": 1.0, "q": 1.0,
                      "delta_min": 0.0, "delta_max": 3.0, "n_max": 200},
            "likelihood": {"family": BINOMIAL},
        }
        return data, truths, doc, graph.boxes
    raise ConfigError(f"unknown preset {name!r}")


def cmd_simulate(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    data, truths, doc, boxes = _preset(args.preset, args.seed)
    regions = []
    for k, reg in enumerate(data.regions):
        csv_name = f"region_{k + 1}.csv"
        write_region_csv(out / csv_name, reg)
        regions.append(
            {"box": {"lower": list(boxes[k].lower), "upper": list(boxes[k].upper)},
             "data_csv": csv_name}
        )
    doc = {"regions": regions, **doc}
    problem_from_config(doc, base_dir=out)  # validates before writing
    with open(out / "problem.json", "w") as fh:
        json.dump(doc, fh, indent=2)
    with open(out / "truth.json", "w") as fh:
        json.dump({"truths": [t.to_doc() for t in truths], "seed": args.seed}, fh, indent=2)
    print(f"wrote {len(regions)} region CSVs, problem.json and truth.json to {out}")
    return 0


def _scaled(value: int, scale: str) -> int:
    return value if scale == "paper" else max(value // DESK_FACTOR, 1)


def cmd_tune(args) -> int:
    problem = load_problem(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if not any(problem.graph.weights.ravel() > 0):
        result = {"omega_opt": 0.0, "evals": 0,
                  "note": "no neighbour weights: objective is flat in omega"}
        with open(out / "tune.json", "w") as fh:
            json.dump(result, fh, indent=2)
        print(json.dumps(result))
        return 0
    fold_schedule = rjmcmc.SamplerSchedule(
        iterations=_scaled(50_000, args.scale) if args.cv_iterations is None else args.cv_iterations,
        burn_in=_scaled(25_000, args.scale) if args.cv_burn_in is None else args.cv_burn_in,
        thin=args.cv_thin,
    )
    cvcfg = egocv.CvConfig(
        folds=args.folds,
        repetitions=args.repetitions,
        fold_schedule=fold_schedule,
        max_evals=args.max_evals,
        threads=args.threads,
    )
    omega_opt, log = egocv.ego_cv(problem, cvcfg, seed=args.seed)
    egocv.write_eval_log_csv(out / "tune_log.csv", log)
    result = {"omega_opt": omega_opt, "evals": len(log)}
    with open(out / "tune.json", "w") as fh:
        json.dump(result, fh, indent=2)
    print(json.dumps(result))
    return 0


def cmd_fit(args) -> int:
    problem = load_problem(args.config)
    if args.omega is not None:
        import dataclasses

        problem = dataclasses.replace(
            problem, prior=dataclasses.replace(problem.prior, omega=args.omega)
        )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng_state = np.random.default_rng(args.seed)
    trace_points = ()
    if args.trace_points:
        tp_rng = np.random.default_rng(args.seed + 1)
        trace_points = tuple(
            tuple(
                tuple(tp_rng.uniform(box.lower, box.upper))
                for _ in range(args.trace_points)
            )
            for box in problem.sampling_boxes
        )
    schedule = rjmcmc.SamplerSchedule(
        iterations=args.iterations,
        burn_in=args.burn_in,
        thin=args.thin,
        trace_points=trace_points,
        seed=args.seed,
    )
    if args.resume:
        chain, state, rng_state, start = rjmcmc.load_checkpoint(args.resume, problem)
        chain = rjmcmc.run(problem, schedule, state=state, rng=rng_state,
                           start_iteration=start, chain=chain)
    else:
        chain = rjmcmc.run(problem, schedule, rng=rng_state)
    rjmcmc.save_checkpoint(out / "checkpoint.json", chain, iteration=args.iterations)
    if chain.trace:
        rjmcmc.write_trace_csv(out / "trace.csv", chain)
    print("move,proposed,accepted,instant_rejected,rate")
    for move, c in chain.counters.items():
        rate = c["accepted"] / c["proposed"] if c["proposed"] else float("nan")
        print(f"{move},{c['proposed']},{c['accepted']},{c['instant_rejected']},{rate:.4f}")
    print(f"stored {len(chain.samples)} samples to {out / 'checkpoint.json'}")
    return 0


def cmd_analyze(args) -> int:
    problem = load_problem(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    chain, _, _, _ = rjmcmc.load_checkpoint(args.checkpoint, problem)
    truths = None
    if args.truth:
        with open(args.truth) as fh:
            manifest = json.load(fh)
        truths = [TrueFunction.from_doc(d) for d in manifest["truths"]]
    mae_rows = []
    for k in range(problem.graph.region_count):
        est = analysis.grid_summary(chain, k, resolution=args.resolution)
        analysis.write_grid_csv(out / f"grid_region_{k + 1}.csv", est)
        thresholds = analysis.detect_thresholds(chain, k)
        relevance = analysis.variable_relevance(chain, k)
        analysis.write_report_json(out / f"report_region_{k + 1}.json", thresholds, relevance)
        if truths is not None:
            mae, sd = analysis.mae_sd(est, truths[k])
            mae_rows.append((k + 1, mae, sd))
    if mae_rows:
        with open(out / "mae.csv", "w") as fh:
            fh.write("region,mae,sd\n")
            for k, mae, sd in mae_rows:
                fh.write(f"{k},{mae!r},{sd!r}\n")
        print("region,mae_x100,sd_x100")
        for k, mae, sd in mae_rows:
            print(f"{k},{100 * mae:.2f},{100 * sd:.2f}")
    print(f"wrote grids and reports to {out}")
    return 0


def cmd_selftest(args) -> int:
    lines, _, ok = run_selftest(args.seed)
    for line in lines:
        print(line)
    return 0 if ok else RUNTIME_ERROR


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bsmmr",
        description="Monotone multiple regression over region lattices",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic dataset preset")
    p.add_argument("--preset", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="sim_out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("tune", help="select the smoothing parameter")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="tune_out")
    p.add_argument("--scale", choices=("paper", "desk"), default="desk")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--repetitions", type=int, default=5)
    p.add_argument("--max-evals", type=int, default=30)
    p.add_argument("--cv-iterations", type=int, default=None)
    p.add_argument("--cv-burn-in", type=int, default=None)
    p.add_argument("--cv-thin", type=int, default=100)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("fit", help="run the sampler at a fixed smoothing value")
    p.add_argument("--config", required=True)
    p.add_argument("--omega", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="fit_out")
    p.add_argument("--iterations", type=int, default=PAPER_ITERATIONS // DESK_FACTOR)
    p.add_argument("--burn-in", type=int, default=PAPER_BURN_IN // DESK_FACTOR)
    p.add_argument("--thin", type=int, default=PAPER_THIN // DESK_FACTOR)
    p.add_argument("--trace-points", type=int, default=0)
    p.add_argument("--resume", default=None)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("analyze", help="summarize a fitted chain")
    p.add_argument("--config", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--truth", default=None)
    p.add_argument("--resolution", type=int, default=100)
    p.add_argument("--out", default="analyze_out")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("selftest", help="deterministic numeric self-checks")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_selftest)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except BsmmrError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return RUNTIME_ERROR


if __name__ == "__main__":
    sys.exit(main())
