"""DREAM3 time-course expression files and gold standards.

Expression files are tab-separated with a header ``Time<TAB>G1<TAB>G2...``.
Trajectories are concatenated; a new one starts after a blank line or when the
time value does not increase. Gold standards hold lines ``Gi<TAB>Gj<TAB>0|1``
for the directed edge Gi -> Gj; pairs that are not listed count as 0.
"""

import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from granger_dr.core.timeseries import Panel
from granger_dr.formats.panel_csv import read_header
from granger_dr.utils.errors import InconsistentSchema, ParseError, UnevenTrajectories, UnknownGene

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Dream3Bundle:
    panel: Panel
    gene_names: tuple
    gold_edges: frozenset = None

    @property
    def has_gold(self):
        return self.gold_edges is not None


def _split_trajectories(path, times, values, blank, traj_len):
    rows = np.flatnonzero(~blank)
    if traj_len is not None:
        if traj_len < 2 or len(rows) % traj_len:
            raise UnevenTrajectories(
                path, None, f"{len(rows)} rows cannot be cut into trajectories of {traj_len}"
            )
        return [values[rows[i : i + traj_len]] for i in range(0, len(rows), traj_len)]

    blocks, current, previous_time = [], [], None
    for row in range(len(times)):
        if blank[row]:
            previous_time = None
            if current:
                blocks.append(current)
                current = []
            continue
        if previous_time is not None and times[row] <= previous_time:
            blocks.append(current)
            current = []
        current.append(row)
        previous_time = times[row]
    if current:
        blocks.append(current)

    lengths = {len(block) for block in blocks}
    if len(lengths) > 1:
        raise UnevenTrajectories(
            path, None, f"trajectory lengths differ: {sorted(lengths)}; use --traj-len"
        )
    return [values[block] for block in blocks]


def read_expression(path, traj_len=None):
    try:
        header = read_header(path, sep="\t")
        df = pd.read_csv(path, sep="\t", skip_blank_lines=False, float_precision="round_trip")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise ParseError(path, None, f"not a readable tab-separated file: {e}") from e

    genes = tuple(name.strip() for name in header[1:])
    if len(genes) < 2:
        raise InconsistentSchema(path, 1, "need a time column and at least two genes")
    if len(set(genes)) != len(genes):
        raise InconsistentSchema(path, 1, "duplicate gene names in header")

    blank = df.isna().all(axis=1).to_numpy()
    times = pd.to_numeric(df.iloc[:, 0], errors="coerce").to_numpy(dtype=float)
    values = df.iloc[:, 1:].apply(pd.to_numeric, errors="coerce").to_numpy(dtype=float)
    bad = ~blank & ~(np.isfinite(times) & np.isfinite(values).all(axis=1))
    if bad.any():
        row = int(np.flatnonzero(bad)[0])
        raise ParseError(path, row + 2, "expected a time value followed by finite expression levels")

    trajectories = _split_trajectories(path, times, values, blank, traj_len)
    if not trajectories or len(trajectories[0]) < 2:
        raise UnevenTrajectories(path, None, "trajectories need at least 2 time steps")
    panel = Panel(tuple(trajectories), genes, 0)
    logger.info(
        f"Read {panel.n_trajectories} trajectories x {panel.lengths[0]} steps "
        f"x {len(genes)} genes from {path}"
    )
    return panel


def read_gold(path, gene_names):
    known = set(gene_names)
    edges = set()
    with open(path, encoding="utf-8") as handle:
        for number, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            fields = line.split("\t") if "\t" in line else line.split()
            if len(fields) != 3:
                raise ParseError(path, number, f"expected 'source<TAB>target<TAB>0|1', got {line!r}")
            source, target, label = (f.strip().strip('"') for f in fields)
            for gene in (source, target):
                if gene not in known:
                    raise UnknownGene(path, number, f"gene '{gene}' is not in the expression header")
            if source == target:
                raise ParseError(path, number, f"self-edge {source} -> {target}")
            if label not in ("0", "1"):
                raise ParseError(path, number, f"label must be 0 or 1, got {label!r}")
            if label == "1":
                edges.add((source, target))
    logger.info(f"Read gold standard {path}: {len(edges)} true edges")
    return frozenset(edges)


def read_dream3(expression_path, gold_path=None, traj_len=None):
    panel = read_expression(expression_path, traj_len=traj_len)
    gold = read_gold(gold_path, panel.variable_names) if gold_path else None
    return Dream3Bundle(panel=panel, gene_names=panel.variable_names, gold_edges=gold)
