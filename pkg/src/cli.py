"""
Command-line front end.

    gla run --input F --format {plain,syslog} [--app NAME] --window-size 20 ...
    gla synth {exp1,exp2} --seed S --out PATH
    gla experiment {exp1,exp2} [--seeds 0 1 2 ...]

Exit codes: 0 success, 2 bad config (argparse also uses 2), 3 input error,
4 numerical failure.
"""

import argparse
from pathlib import Path

import config
from src import synth
from src.errors import GlaError
from src.experiments import run_experiment, save_results
from src.pipeline import GlaConfig, run
from src.utils import setup_logging


def build_parser():
    parser = argparse.ArgumentParser(prog="gla", description="HMM gauge likelihood analysis")
    parser.add_argument("--log-dir", type=Path, default=config.LOG_DIR)
    sub = parser.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="detect anomalous windows in an event stream")
    r.add_argument("--input", type=Path, dest="input_path")
    r.add_argument("--format", choices=config.INPUT_FORMATS, default="plain", dest="input_format")
    r.add_argument("--app", default=None, help="syslog process name to keep")
    r.add_argument("--window-size", type=int, default=config.WINDOW_SIZE)
    r.add_argument("--shift", type=int, default=config.SHIFT, help="default: window size // 2")
    r.add_argument("--states", type=int, default=config.HIDDEN_STATES)
    r.add_argument("--restarts", type=int, default=config.RESTARTS)
    r.add_argument("--max-iters", type=int, default=config.BW_MAX_ITERS)
    r.add_argument("--tol", type=float, default=config.BW_TOL)
    r.add_argument("--gauge-mode", choices=config.GAUGE_MODES, default=config.GAUGE_MODE)
    r.add_argument("--gauge-count", type=int, default=config.GAUGE_COUNT)
    r.add_argument("--gauge-seed", type=int, default=None)
    r.add_argument("--loglik-floor", type=float, default=config.LOGLIK_FLOOR)
    r.add_argument("--perplexity", type=float, default=config.PERPLEXITY)
    r.add_argument("--tsne-iters", type=int, default=config.TSNE_ITERS)
    r.add_argument("--learning-rate", type=float, default=config.TSNE_LEARNING_RATE,
                   dest="tsne_learning_rate")
    r.add_argument("--tsne-seed", type=int, default=None)
    r.add_argument("--min-cluster-size", type=int, default=config.MIN_CLUSTER_SIZE)
    r.add_argument("--min-samples", type=int, default=config.MIN_SAMPLES)
    r.add_argument("--cluster-selection-epsilon", type=float,
                   default=config.CLUSTER_SELECTION_EPSILON,
                   help="single-cluster cutoff in interquartile ranges of the embedding")
    r.add_argument("--seed", type=int, default=config.SEED)
    r.add_argument("--out", type=Path, default=config.OUTPUT_DIR / "run", dest="out_dir")
    r.add_argument("--labels", type=Path, default=None, dest="labels_path")
    r.add_argument("--features-in", type=Path, default=None,
                   help="skip ingestion and fitting; start from a features.csv")
    r.add_argument("--dump-features", action="store_true")
    r.add_argument("--dump-models", type=Path, default=None, metavar="DIR")
    r.add_argument("--jobs", type=int, default=config.N_JOBS, dest="n_jobs")

    s = sub.add_parser("synth", help="write a synthetic dataset and its labels sidecar")
    s.add_argument("experiment", choices=["exp1", "exp2"])
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", type=Path, required=True)

    e = sub.add_parser("experiment", help="run a synthetic experiment over several seeds")
    e.add_argument("experiment", choices=["exp1", "exp2"])
    e.add_argument("--seeds", type=int, nargs="+", default=config.EXPERIMENT_SEEDS)
    e.add_argument("--output", type=Path, default=config.OUTPUT_DIR)
    return parser


def _config_from_args(args):
    fields = {k: v for k, v in vars(args).items() if k in GlaConfig.__dataclass_fields__}
    return GlaConfig(**fields)


def main(argv=None):
    args = build_parser().parse_args(argv)
    logger = setup_logging(f"gla_{args.command}", args.log_dir)
    try:
        if args.command == "run":
            report = run(_config_from_args(args))
            print(f"{len(report.outlier_ids)} outliers: {report.outlier_ids}")
        elif args.command == "synth":
            dataset = synth.generate(args.experiment, args.seed)
            synth.write_dataset(dataset, args.out, logger)
        else:
            results, description = run_experiment(
                args.experiment, args.seeds, work_dir=args.output / args.experiment,
            )
            print(save_results(results, args.experiment, description, args.output))
    except GlaError as e:
        logger.error(str(e))
        return e.exit_code
    return config.EXIT_OK
