"""Panel CSV, long format.

    traj,time,<name0>,<name1>,...
    0,0,0.12,-1.5
    0,1,0.40,-1.1

Rows are sorted by (traj, time); ``traj`` and ``time`` are non-negative
integers and time strictly increases within a trajectory. The first named
column is the default target.
"""

import logging

import numpy as np
import pandas as pd

from granger_dr.core.timeseries import Panel
from granger_dr.utils.errors import InconsistentSchema, ParseError

logger = logging.getLogger(__name__)

INDEX_COLUMNS = ["traj", "time"]


def _line(row):
    # header is line 1
    return int(row) + 2


def _first_bad(mask):
    return int(np.flatnonzero(np.asarray(mask))[0])


def read_header(path, sep=","):
    """Column names exactly as written, without the de-duplication pandas applies."""
    header = pd.read_csv(path, sep=sep, header=None, nrows=1, dtype=str, keep_default_na=False)
    return [str(c) for c in header.iloc[0]]


def read_panel_csv(path, target=None):
    try:
        columns = read_header(path)
        df = pd.read_csv(path, float_precision="round_trip")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise ParseError(path, None, f"not a readable CSV file: {e}") from e

    if columns[:2] != INDEX_COLUMNS:
        raise InconsistentSchema(
            path, 1, f"header must start with 'traj,time', got {','.join(columns[:2])}"
        )
    names = columns[2:]
    if len(names) < 2:
        raise InconsistentSchema(path, 1, "need a target and at least one covariate column")
    if len(set(names)) != len(names):
        raise InconsistentSchema(path, 1, f"duplicate variable names in {names}")
    df.columns = columns
    if df.empty:
        raise ParseError(path, 2, "no data rows")

    for column in INDEX_COLUMNS:
        values = pd.to_numeric(df[column], errors="coerce")
        bad = values.isna() | (values < 0) | (values != values.round())
        if bad.any():
            row = _first_bad(bad)
            raise ParseError(
                path, _line(row), f"'{column}' must be a non-negative integer, got {df[column].iloc[row]!r}"
            )
        df[column] = values.astype(np.int64)

    values = df[names].apply(pd.to_numeric, errors="coerce").to_numpy(dtype=float)
    bad = ~np.isfinite(values).all(axis=1)
    if bad.any():
        raise ParseError(path, _line(_first_bad(bad)), "values must be finite decimal numbers")

    traj = df["traj"].to_numpy()
    time = df["time"].to_numpy()
    same_traj = traj[1:] == traj[:-1]
    out_of_order = (traj[1:] < traj[:-1]) | (same_traj & (time[1:] <= time[:-1]))
    if out_of_order.any():
        raise ParseError(
            path, _line(_first_bad(out_of_order) + 1), "rows must be sorted by (traj, time)"
        )

    starts = np.concatenate([[0], np.flatnonzero(~same_traj) + 1, [len(traj)]])
    trajectories = []
    for begin, end in zip(starts[:-1], starts[1:]):
        if end - begin < 2:
            raise ParseError(
                path, _line(begin), f"trajectory {traj[begin]} has fewer than 2 time steps"
            )
        trajectories.append(values[begin:end])

    panel = Panel(tuple(trajectories), tuple(names), 0)
    if target is not None:
        panel = panel.with_target(panel.index_of(target))
    logger.info(
        f"Read panel {path}: {panel.n_trajectories} trajectories, "
        f"{panel.n_variables} variables, target {panel.variable_names[panel.target_index]}"
    )
    return panel


def write_panel_csv(panel, path):
    frames = []
    for r, trajectory in enumerate(panel.trajectories):
        frame = pd.DataFrame(trajectory, columns=list(panel.variable_names))
        frame.insert(0, "time", np.arange(trajectory.shape[0]))
        frame.insert(0, "traj", r)
        frames.append(frame)
    df = pd.concat(frames, ignore_index=True)
    # 17 significant digits round-trip every double
    df.to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
    logger.info(f"Panel written to {path}: {len(df)} rows")
    return df
