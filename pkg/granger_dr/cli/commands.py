import dataclasses
import logging
import math

import pandas as pd

from granger_dr.config.config import RuntimeConfig
from granger_dr.core.dml import DrSitConfig, discover_all, dr_sit, summary_edges
from granger_dr.core.regression import RegressorSpec
from granger_dr.evaluation.scoring import evaluate_reports
from granger_dr.formats.dream3 import read_dream3, read_gold
from granger_dr.formats.panel_csv import read_panel_csv, write_panel_csv
from granger_dr.formats.report import read_reports, write_reports
from granger_dr.formats.truth import read_truth, write_truth
from granger_dr.metrics import export_metrics
from granger_dr.synth.dgp import SynthConfig, simulate_panel
from granger_dr.utils.errors import InvalidConfig, UnknownGene

logger = logging.getLogger(__name__)

METRIC_COLUMNS = ["accuracy", "f1", "csi", "auroc", "n_selected", "n_true"]


def require(args, *names):
    for name in names:
        if getattr(args, name, None) is None:
            raise InvalidConfig(name, f"--{name.replace('_', '-')} is required")


def regressor_spec_from_args(args, seed=None):
    return RegressorSpec(
        kind=args.regressor,
        kernel_degree=args.kernel_degree,
        kernel_coef0=args.kernel_coef0,
        ridge_lambda=args.ridge_lambda,
        kernel_gamma=args.kernel_gamma,
        mlp_hidden=args.mlp_hidden,
        mlp_epochs=args.mlp_epochs,
        mlp_learning_rate=args.mlp_lr,
        seed=args.seed if seed is None else seed,
    )


def drsit_config_from_args(args, default_lag=2, seed=None):
    seed = args.seed if seed is None else seed
    return DrSitConfig(
        lag=args.lag if args.lag is not None else default_lag,
        k_folds=args.folds,
        significance_alpha=args.alpha,
        masking_mode=args.masking,
        regressor=regressor_spec_from_args(args, seed),
        ranking_metric=args.ranking,
        seed=seed,
        standardize=not args.no_standardize,
        riesz_fit=args.riesz,
    )


def synth_config_from_args(args, m=None, nsr=None, seed=None):
    return SynthConfig(
        m=args.m if m is None else m,
        delta=args.delta,
        timesteps=args.timesteps,
        n_traj=args.trajectories,
        nsr=args.nsr if nsr is None else nsr,
        edge_prob=args.edge_prob,
        target_edge_prob=args.target_edge_prob,
        hidden_units=args.hidden_units,
        signal_scale=args.signal_scale,
        seed=args.seed if seed is None else seed,
    )


def maybe_export_metrics(args):
    path = getattr(args, "metrics_out", None) or RuntimeConfig().METRICS_PATH
    if path:
        export_metrics(path)


def format_metrics(result):
    return "  ".join(
        f"{name}={value:.4f}" if isinstance(value, float) else f"{name}={value}"
        for name, value in result.to_dict().items()
    )


def cmd_generate(args):
    require(args, "out", "truth")
    config = synth_config_from_args(args)
    panel, structure = simulate_panel(config)
    write_panel_csv(panel, args.out)
    write_truth(structure, args.truth, panel.variable_names)
    print(
        f"generated m={config.m} delta={config.delta} T={config.timesteps} "
        f"trajectories={config.n_traj} nsr={config.nsr:g} seed={config.seed} "
        f"({len(structure.parents_of_target())} causes of Y) -> {args.out}, {args.truth}"
    )
    return 0


def _load_discovery_input(args):
    """Return (panel, true edges or None, data echo) for the discover command."""
    if args.dream3:
        bundle = read_dream3(args.dream3, args.gold, traj_len=args.traj_len)
        panel, truth = bundle.panel, bundle.gold_edges
        data = {"dream3": args.dream3, "gold": args.gold, "traj_len": args.traj_len}
    elif args.panel:
        panel = read_panel_csv(args.panel)
        truth = read_gold(args.gold, panel.variable_names) if args.gold else None
        data = {"panel": args.panel}
    else:
        raise InvalidConfig("panel", "one of --panel or --dream3 is required")

    if args.truth:
        ground_truth = read_truth(args.truth)
        if set(ground_truth.names) != set(panel.variable_names):
            raise InvalidConfig(
                "truth", f"names {list(ground_truth.names)} do not match the panel"
            )
        truth = ground_truth.edges

    if args.max_trajectories is not None:
        panel = panel.sample_trajectories(args.max_trajectories, args.seed)
        data["max_trajectories"] = args.max_trajectories
    return panel, truth, data


def _edge_table(report):
    return pd.DataFrame(
        [
            {
                "candidate": edge.candidate_name,
                "theta_full": edge.theta_full,
                "theta_masked": edge.theta_masked,
                "t": edge.t_stat,
                "p": edge.p_value,
                "score": edge.ranking_score,
                "selected": edge.selected,
                "status": edge.status,
            }
            for edge in report.edges
        ]
    )


def cmd_discover(args):
    require(args, "out")
    panel, truth, data = _load_discovery_input(args)
    config = drsit_config_from_args(args)

    if args.all_targets:
        reports = discover_all(panel, config, max_workers=args.workers)
    else:
        target = panel.index_of(args.target) if args.target else panel.target_index
        reports = [dr_sit(panel, target, config, max_workers=args.workers)]

    reports = [
        dataclasses.replace(report, config={**report.config, "data": data}) for report in reports
    ]
    write_reports(reports, args.out, include_timing=args.record_timing)

    if args.all_targets:
        edges = summary_edges(reports)
        print(f"{len(reports)} targets tested, {len(edges)} edges selected")
        for source, target in edges:
            print(f"  {source} -> {target}")
    else:
        report = reports[0]
        print(f"target {report.target_name} (lag={config.lag}, folds={config.k_folds})")
        print(_edge_table(report).to_string(index=False, float_format=lambda v: f"{v:.4g}"))

    if truth is not None:
        result = evaluate_reports(reports, truth)
        print(format_metrics(result))
        if math.isnan(result.auroc):
            logger.warning("AUROC is undefined for this truth set")

    maybe_export_metrics(args)
    return 0


def cmd_evaluate(args):
    require(args, "report")
    if not args.truth and not args.gold:
        raise InvalidConfig("truth", "one of --truth or --gold is required")
    reports = read_reports(args.report)
    if not reports:
        raise InvalidConfig("report", f"{args.report} holds no reports")
    names = set(reports[0].variable_names)

    if args.truth:
        truth = read_truth(args.truth)
        if set(truth.names) != names:
            raise InvalidConfig(
                "truth",
                f"names {sorted(truth.names)} do not match the report's {sorted(names)}",
            )
        edges = truth.edges
    else:
        try:
            edges = read_gold(args.gold, reports[0].variable_names)
        except UnknownGene as e:
            raise InvalidConfig("gold", str(e)) from e

    result = evaluate_reports(reports, edges)
    print(format_metrics(result))
    if args.out:
        row = result.to_dict()
        pd.DataFrame([{name: row[name] for name in METRIC_COLUMNS}]).to_csv(
            args.out, index=False, lineterminator="\n", na_rep="nan"
        )
        logger.info(f"Metrics written to {args.out}")
    return 0
