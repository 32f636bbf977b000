"""Sweeps of the synthetic benchmark over (m, NSR, replicate) cells.

Each cell simulates a panel, tests every covariate as a cause of Y and scores
the selection against the simulated structure. Rows are appended to the
results CSV one at a time, in grid order, by the main thread; ``--resume``
skips cells already present.
"""

import hashlib
import logging
import os
import time

import pandas as pd

from granger_dr.cli.commands import (
    drsit_config_from_args,
    maybe_export_metrics,
    require,
    synth_config_from_args,
)
from granger_dr.core.dml import dr_sit
from granger_dr.evaluation.scoring import evaluate_reports
from granger_dr.formats.truth import structure_truth
from granger_dr.metrics import BENCHMARK_CELL_TIME
from granger_dr.synth.dgp import simulate_panel
from granger_dr.utils.concurrency import imap_ordered
from granger_dr.utils.errors import InvalidConfig, ParseError

logger = logging.getLogger(__name__)

RESULT_COLUMNS = [
    "m", "nsr", "replicate", "seed",
    "accuracy", "f1", "csi", "auroc",
    "n_selected", "n_true", "wall_seconds",
]
SUMMARY_COLUMNS = ["accuracy", "f1", "csi", "auroc"]


def cell_seed(master_seed, m, nsr, replicate):
    """Stable seed of one cell: SHA-256 of ``"<master>:<m>:<nsr repr>:<replicate>"``."""
    key = f"{int(master_seed)}:{int(m)}:{float(nsr)!r}:{int(replicate)}"
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") % 2**32


def _as_list(value, cast):
    if isinstance(value, (list, tuple)):
        return [cast(v) for v in value]
    if isinstance(value, str):
        return [cast(v) for v in value.split(",") if v.strip()]
    return [cast(value)]


def grid_cells(args):
    m_grid = _as_list(args.m_grid, int)
    nsr_grid = _as_list(args.nsr_grid, float)
    if not m_grid:
        raise InvalidConfig("m_grid", "must name at least one m")
    if not nsr_grid:
        raise InvalidConfig("nsr_grid", "must name at least one NSR")
    if int(args.seeds) < 1:
        raise InvalidConfig("seeds", f"must be >= 1, got {args.seeds}")

    cells = [
        (m, nsr, replicate)
        for m in m_grid
        for nsr in nsr_grid
        for replicate in range(int(args.seeds))
    ]
    # every cell's configuration is validated before the first one runs
    for m, nsr, replicate in cells:
        seed = cell_seed(args.master_seed, m, nsr, replicate)
        synth = synth_config_from_args(args, m=m, nsr=nsr, seed=seed)
        drsit_config_from_args(args, default_lag=synth.delta, seed=seed)
    return cells


def run_cell(args, cell):
    m, nsr, replicate = cell
    seed = cell_seed(args.master_seed, m, nsr, replicate)
    start_time = time.perf_counter()

    synth = synth_config_from_args(args, m=m, nsr=nsr, seed=seed)
    panel, structure = simulate_panel(synth)
    config = drsit_config_from_args(args, default_lag=synth.delta, seed=seed)
    report = dr_sit(panel, panel.target_index, config, max_workers=1)
    result = evaluate_reports([report], structure_truth(structure, panel.variable_names).edges)

    elapsed = time.perf_counter() - start_time
    BENCHMARK_CELL_TIME.observe(elapsed)
    logger.info(
        f"Cell m={m} nsr={nsr:g} replicate={replicate}: accuracy={result.accuracy:.3f} "
        f"f1={result.f1:.3f} in {elapsed:.1f}s"
    )
    return {
        "m": m,
        "nsr": nsr,
        "replicate": replicate,
        "seed": seed,
        "accuracy": result.accuracy,
        "f1": result.f1,
        "csi": result.csi,
        "auroc": result.auroc,
        "n_selected": result.n_selected,
        "n_true": result.n_true,
        "wall_seconds": elapsed,
    }


def read_results(path):
    try:
        results = pd.read_csv(path, float_precision="round_trip")
    except pd.errors.EmptyDataError:
        return pd.DataFrame(columns=RESULT_COLUMNS)
    except pd.errors.ParserError as e:
        raise ParseError(path, None, f"not a readable results file: {e}") from e
    missing = [column for column in RESULT_COLUMNS if column not in results.columns]
    if missing:
        raise ParseError(path, 1, f"missing result columns {missing}")
    return results


def completed_cells(results):
    return {
        (int(row.m), float(row.nsr), int(row.replicate))
        for row in results.itertuples(index=False)
    }


def append_row(path, row, header):
    pd.DataFrame([row], columns=RESULT_COLUMNS).to_csv(
        path, mode="w" if header else "a", header=header, index=False,
        lineterminator="\n", na_rep="nan",
    )


def summarize(results):
    """Mean and standard deviation of each metric per (m, nsr)."""
    return results.groupby(["m", "nsr"])[SUMMARY_COLUMNS].agg(["mean", "std"])


def cmd_benchmark(args):
    require(args, "out")
    cells = grid_cells(args)

    header = True
    if args.resume and os.path.exists(args.out):
        done = completed_cells(read_results(args.out))
        header = os.path.getsize(args.out) == 0
        pending = [cell for cell in cells if cell not in done]
        logger.info(f"Resuming {args.out}: {len(cells) - len(pending)} of {len(cells)} cells done")
    else:
        pending = cells

    if not pending:
        logger.info("Every cell is already in the results file, nothing to do")
        return 0

    logger.info(f"Running {len(pending)} benchmark cells")
    for _, row in imap_ordered(lambda cell: run_cell(args, cell), pending, args.workers):
        append_row(args.out, row, header)
        header = False

    results = read_results(args.out)
    print(summarize(results).to_string(float_format=lambda v: f"{v:.3f}"))
    maybe_export_metrics(args)
    return 0
