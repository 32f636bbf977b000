"""Ground-truth edge lists written next to synthetic panels.

    # names=Y,X1,X2
    # delta=2
    1 0 1
    Y 2 0

``k i j``: X^(i+1) at lag k causes X^(j+1). ``Y k j``: X^(j+1) at lag k causes Y.
Lags are 1-based, covariate indices 0-based.
"""

import logging
from dataclasses import dataclass

import numpy as np

from granger_dr.synth.dgp import AdjacencyTensor, variable_names
from granger_dr.utils.errors import ParseError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GroundTruth:
    names: tuple
    edges: frozenset
    delta: int = None


def write_truth(structure, path, names=None):
    names = tuple(names or variable_names(structure.m))
    lines = [f"# names={','.join(names)}", f"# delta={structure.delta}"]
    for k, i, j in zip(*np.nonzero(structure.sigma)):
        lines.append(f"{k + 1} {i} {j}")
    for k, j in zip(*np.nonzero(structure.sigma_y)):
        lines.append(f"Y {k + 1} {j}")
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("\n".join(lines) + "\n")
    logger.info(f"Ground truth written to {path}: {len(lines) - 2} lagged edges")


def _index(path, number, token, limit, what):
    try:
        value = int(token)
    except ValueError:
        raise ParseError(path, number, f"{what} must be an integer, got {token!r}") from None
    if not 0 <= value < limit:
        raise ParseError(path, number, f"{what} {value} outside [0, {limit - 1}]")
    return value


def read_truth(path):
    names, delta, edges = None, None, set()
    with open(path, encoding="utf-8") as handle:
        for number, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line.lstrip("#").strip().partition("=")
                if key == "names":
                    names = tuple(value.split(","))
                elif key == "delta":
                    delta = _index(path, number, value, 10**9, "delta")
                continue
            if names is None:
                raise ParseError(path, number, "edge listed before the '# names=' header")
            m = len(names) - 1
            fields = line.split()
            if len(fields) != 3:
                raise ParseError(path, number, f"expected 'k i j' or 'Y k j', got {line!r}")
            if fields[0] == "Y":
                _index(path, number, fields[1], 10**9, "lag")
                j = _index(path, number, fields[2], m, "covariate index")
                edges.add((names[j + 1], names[0]))
            else:
                _index(path, number, fields[0], 10**9, "lag")
                i = _index(path, number, fields[1], m, "covariate index")
                j = _index(path, number, fields[2], m, "covariate index")
                edges.add((names[i + 1], names[j + 1]))
    if names is None:
        raise ParseError(path, None, "missing '# names=' header")
    return GroundTruth(names=names, edges=frozenset(edges), delta=delta)


def structure_truth(structure, names=None):
    names = tuple(names or variable_names(structure.m))
    return GroundTruth(names=names, edges=frozenset(structure.summary_edges(names)), delta=structure.delta)
