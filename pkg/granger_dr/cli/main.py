import argparse
import logging
import sys

import yaml

from granger_dr.cli import benchmark, commands
from granger_dr.core.dml import MaskingMode, RankingMetric, RieszFit
from granger_dr.core.regression import RegressorKind
from granger_dr.utils.errors import GrangerDRError, InvalidConfig
from granger_dr.utils.logging_utils import setup_logging

logger = logging.getLogger(__name__)

CONFIG_SECTIONS = ("drsit", "regressor", "synth", "benchmark", "data")

EPILOG = """\
formats:
  panel CSV     traj,time,<name0>,<name1>,...  (rows sorted by traj, time;
                the first named column is the default target)
  truth file    '# names=Y,X1,...' header, then 'k i j' (X^(i+1) at lag k -> X^(j+1))
                and 'Y k j' (X^(j+1) at lag k -> Y); lags 1-based, indices 0-based
  DREAM3        tab-separated 'Time<TAB>G1<TAB>...', trajectories split at a
                blank line or a time reset; gold lines 'Gi<TAB>Gj<TAB>0|1'
  report        YAML document with schema_version and a list of reports

exit codes: 0 ok, 2 configuration, 3 I/O, 4 degenerate data
"""


def _int_list(text):
    return [int(v) for v in text.split(",") if v.strip()]


def _float_list(text):
    return [float(v) for v in text.split(",") if v.strip()]


def add_synth_arguments(parser):
    parser.add_argument("--m", type=int, default=10, help="Number of covariates")
    parser.add_argument("--delta", type=int, default=2, help="Lag of the generating process")
    parser.add_argument("--timesteps", type=int, default=500, help="Time steps per trajectory")
    parser.add_argument("--trajectories", type=int, default=5, help="Number of trajectories")
    parser.add_argument("--edge-prob", type=float, default=0.5, help="Bernoulli edge probability")
    parser.add_argument(
        "--target-edge-prob", type=float, default=None,
        help="Edge probability into Y (defaults to --edge-prob; 0 gives a null target)",
    )
    parser.add_argument("--hidden-units", type=int, default=200, help="Hidden units per transform")
    parser.add_argument("--signal-scale", type=float, default=10.0, help="Bound of every signal")


def add_drsit_arguments(parser):
    parser.add_argument("--lag", type=int, default=None, help="Lag of the design (default 2)")
    parser.add_argument("--folds", type=int, default=5, help="Cross-fitting folds")
    parser.add_argument("--alpha", type=float, default=0.05, help="Significance level")
    parser.add_argument(
        "--masking", choices=[m.value for m in MaskingMode],
        default=MaskingMode.SURROGATE_ZERO_MASK.value, help="How the reduced nuisance is obtained",
    )
    parser.add_argument(
        "--riesz", choices=[r.value for r in RieszFit], default=RieszFit.INDEPENDENT.value,
        help="Fit the Riesz representer on its own half of the training trajectories "
        "(independent) or reuse the regression (shared)",
    )
    parser.add_argument(
        "--ranking", choices=[r.value for r in RankingMetric],
        default=RankingMetric.STD_Z.value, help="Score used to rank edges for AUROC",
    )
    parser.add_argument(
        "--regressor", choices=[k.value for k in RegressorKind],
        default=RegressorKind.KERNEL_RIDGE_POLY.value, help="Nuisance regressor",
    )
    parser.add_argument("--kernel-degree", type=int, default=3)
    parser.add_argument("--kernel-coef0", type=float, default=1.0)
    parser.add_argument("--kernel-gamma", default="auto", help="'auto' (1/width) or a number")
    parser.add_argument("--ridge-lambda", type=float, default=1.0)
    parser.add_argument("--mlp-hidden", type=int, default=64)
    parser.add_argument("--mlp-epochs", type=int, default=500)
    parser.add_argument("--mlp-lr", type=float, default=0.01)
    parser.add_argument(
        "--no-standardize", action="store_true", help="Fit on raw instead of standardized columns"
    )
    parser.add_argument(
        "--workers", type=int, default=None,
        help="Worker threads (default: GRANGER_DR_MAX_WORKERS or 1)",
    )
    parser.add_argument("--metrics-out", default=None, help="Write Prometheus metrics here")


def create_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="YAML config file; flags override it")
    common.add_argument("--log-level", default=None, help="Overrides LOG_LEVEL")

    parser = argparse.ArgumentParser(
        prog="granger-dr",
        description="Doubly robust Granger causality discovery for time-series panels",
        epilog=EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    generate = subparsers.add_parser(
        "generate", parents=[common], epilog=EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
        help="Simulate a synthetic panel with ground truth",
    )
    add_synth_arguments(generate)
    generate.add_argument("--nsr", type=float, default=0.1, help="Noise-to-signal ratio of Y")
    generate.add_argument("--seed", type=int, default=0)
    generate.add_argument("--out", help="Panel CSV to write")
    generate.add_argument("--truth", help="Ground-truth file to write")
    generate.set_defaults(handler=commands.cmd_generate)

    discover = subparsers.add_parser(
        "discover", parents=[common], epilog=EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
        help="Test candidate causes of one target or of every variable",
    )
    source = discover.add_mutually_exclusive_group()
    source.add_argument("--panel", help="Panel CSV")
    source.add_argument("--dream3", help="DREAM3 expression file")
    discover.add_argument("--gold", help="DREAM3 gold standard, enables AUROC reporting")
    discover.add_argument("--truth", help="Ground-truth file, enables metric reporting")
    discover.add_argument("--traj-len", type=int, default=None, help="Fixed DREAM3 trajectory length")
    discover.add_argument("--target", default=None, help="Target variable name")
    discover.add_argument("--all-targets", action="store_true", help="Test every variable as target")
    discover.add_argument(
        "--max-trajectories", type=int, default=None, help="Use a seeded random subset of trajectories"
    )
    discover.add_argument("--seed", type=int, default=0)
    discover.add_argument("--out", help="Report file to write")
    discover.add_argument("--record-timing", action="store_true", help="Store wall-clock time in the report")
    add_drsit_arguments(discover)
    discover.set_defaults(handler=commands.cmd_discover)

    evaluate = subparsers.add_parser(
        "evaluate", parents=[common], epilog=EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
        help="Score a report against ground truth",
    )
    evaluate.add_argument("--report", help="Report file from 'discover'")
    truth = evaluate.add_mutually_exclusive_group()
    truth.add_argument("--truth", help="Ground-truth file from 'generate'")
    truth.add_argument("--gold", help="DREAM3 gold standard")
    evaluate.add_argument("--out", default=None, help="Metrics CSV to write")
    evaluate.set_defaults(handler=commands.cmd_evaluate)

    bench = subparsers.add_parser(
        "benchmark", parents=[common], epilog=EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
        help="Sweep (m, NSR, replicate) cells of the synthetic benchmark",
    )
    add_synth_arguments(bench)
    bench.add_argument("--m-grid", type=_int_list, default=[10], help="Comma-separated m values")
    bench.add_argument("--nsr-grid", type=_float_list, default=[0.1], help="Comma-separated NSR values")
    bench.add_argument("--seeds", type=int, default=5, help="Replicates per cell")
    bench.add_argument("--master-seed", type=int, default=0)
    bench.add_argument("--out", help="Results CSV")
    bench.add_argument("--resume", action="store_true", help="Skip cells already in --out")
    add_drsit_arguments(bench)
    bench.set_defaults(handler=benchmark.cmd_benchmark)

    return parser


def _load_config_file(path, subparser):
    try:
        with open(path, encoding="utf-8") as handle:
            document = yaml.safe_load(handle) or {}
    except yaml.YAMLError as e:
        raise InvalidConfig("config", f"{path} is not valid YAML: {e}") from e
    if not isinstance(document, dict):
        raise InvalidConfig("config", f"{path} must hold a mapping")

    known = {action.dest for action in subparser._actions}
    values = {}
    for key, value in document.items():
        entries = value if key in CONFIG_SECTIONS and isinstance(value, dict) else {key: value}
        for name, item in entries.items():
            dest = str(name).replace("-", "_")
            if dest not in known or dest in ("config", "handler", "help"):
                raise InvalidConfig(name, f"unknown key in {path}")
            values[dest] = item
    return values


def parse_args(argv=None):
    parser = create_parser()
    args = parser.parse_args(argv)
    if args.config:
        subparser = parser._subparsers._group_actions[0].choices[args.command]
        subparser.set_defaults(**_load_config_file(args.config, subparser))
        args = parser.parse_args(argv)
    return args


def _fail(command, error, exit_code):
    if command:
        logger.error(f"{command} failed: {error}")
    print(f"error: {error}", file=sys.stderr)
    return exit_code


def main(argv=None):
    try:
        args = parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 0
    except GrangerDRError as e:
        return _fail(None, e, e.exit_code)
    except OSError as e:
        return _fail(None, e, 3)

    setup_logging(args.log_level)
    try:
        return args.handler(args) or 0
    except GrangerDRError as e:
        return _fail(args.command, e, e.exit_code)
    except OSError as e:
        return _fail(args.command, e, 3)


if __name__ == "__main__":
    sys.exit(main())
