"""Per-node degree-neighborhood summary statistics.

Four statistics per node i with neighbors j:

* ``k``            -- degree
* ``avg_nbr_deg``  -- (1/k_i) * sum_j k_j
* ``local_var``    -- (1/(k_i - 1)) * sum_j (k_j - <k>)^2, spread of neighbor
                      degrees around the *global* mean degree
* ``local_corr``   -- (1/(sigma_k^2 * k_i)) * sum_j (k_i - <k>)(k_j - <k>),
                      a per-node assortativity score

Degenerate conventions keep every row finite: a degree-0 node is all zeros,
a degree-1 node has local_var = 0 (the 1/(k-1) factor is undefined), and a
zero global degree spread forces local_corr = 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, TextIO

import numpy as np

from .graph import Graph

__all__ = [
    "FEATURE_COLUMNS",
    "GlobalDegreeStats",
    "NodeFeatures",
    "FeatureTable",
    "global_degree_stats",
    "node_feature_vector",
    "compute_all_features",
    "write_features_tsv",
    "read_features_tsv",
]

FEATURE_COLUMNS = ("k", "avg_nbr_deg", "local_var", "local_corr")


@dataclass(frozen=True)
class GlobalDegreeStats:
    """Mean degree and sample degree standard deviation (n-1 normalization)."""

    mean_degree: float
    degree_std: float
    n: int


@dataclass(frozen=True)
class NodeFeatures:
    k: int
    avg_nbr_deg: float
    local_var: float
    local_corr: float

    def as_array(self) -> np.ndarray:
        return np.array([self.k, self.avg_nbr_deg, self.local_var, self.local_corr])


@dataclass(frozen=True)
class FeatureTable:
    """Row i holds the feature 4-vector of node i."""

    values: np.ndarray
    stats: GlobalDegreeStats

    def __len__(self) -> int:
        return len(self.values)


def global_degree_stats(graph: Graph) -> GlobalDegreeStats:
    if graph.n < 2:
        raise ValueError("degree spread needs at least 2 nodes")
    degrees = graph.degrees
    return GlobalDegreeStats(
        mean_degree=float(degrees.mean()),
        degree_std=float(degrees.std(ddof=1)),
        n=graph.n,
    )


def node_feature_vector(graph: Graph, stats: GlobalDegreeStats, node: int) -> NodeFeatures:
    """Single-node reference path; ``compute_all_features`` must agree with it."""
    k = int(graph.degrees[node])
    if k == 0:
        return NodeFeatures(0, 0.0, 0.0, 0.0)
    nbr_deg = graph.degrees[graph.neighbors(node)].astype(np.float64)
    deviations = nbr_deg - stats.mean_degree
    avg = float(nbr_deg.sum() / k)
    var = float((deviations**2).sum() / (k - 1)) if k > 1 else 0.0
    if stats.degree_std > 0.0:
        corr = float((k - stats.mean_degree) * deviations.sum() / (stats.degree_std**2 * k))
    else:
        corr = 0.0
    return NodeFeatures(k, avg, var, corr)


def compute_all_features(graph: Graph) -> FeatureTable:
    """Vectorized feature table over all nodes; deterministic, O(n + m)."""
    stats = global_degree_stats(graph)
    n = graph.n
    k = graph.degrees.astype(np.float64)
    mean = stats.mean_degree

    row = np.repeat(np.arange(n, dtype=np.int64), graph.degrees)
    nbr_deg = k[graph.indices]
    nbr_sum = np.bincount(row, weights=nbr_deg, minlength=n)
    nbr_sqdev = np.bincount(row, weights=(nbr_deg - mean) ** 2, minlength=n)

    safe_k = np.maximum(k, 1.0)
    avg = np.where(k > 0, nbr_sum / safe_k, 0.0)
    var = np.where(k > 1, nbr_sqdev / np.maximum(k - 1.0, 1.0), 0.0)
    if stats.degree_std > 0.0:
        # sum_j (k_j - <k>) = nbr_sum - k * <k>
        corr = np.where(
            k > 0,
            (k - mean) * (nbr_sum - k * mean) / (stats.degree_std**2 * safe_k),
            0.0,
        )
    else:
        corr = np.zeros(n)

    values = np.column_stack([k, avg, var, corr])
    values.flags.writeable = False
    return FeatureTable(values=values, stats=stats)


# ---------------------------------------------------------------------------
# TSV artifact
# ---------------------------------------------------------------------------

_WRITE_CHUNK = 1 << 17


def write_features_tsv(graph: Graph, table: FeatureTable, out: TextIO) -> None:
    """Rows sorted by node name (= id order), floats at 9 significant digits."""
    stats = table.stats
    out.write("# node\tk\tavg_nbr_deg\tlocal_var\tlocal_corr\n")
    out.write(
        "# conventions: k=0 row all zeros; k=1 sets local_var=0; "
        "zero degree spread sets local_corr=0\n"
    )
    out.write(
        f"# mean_degree={stats.mean_degree:.9g}\tdegree_std={stats.degree_std:.9g}"
        f"\tn={stats.n}\n"
    )
    names = graph.names
    values = table.values
    for start in range(0, len(names), _WRITE_CHUNK):
        stop = min(start + _WRITE_CHUNK, len(names))
        block = values[start:stop]
        out.writelines(
            f"{names[i]}\t{int(block[i - start, 0])}\t{block[i - start, 1]:.9g}"
            f"\t{block[i - start, 2]:.9g}\t{block[i - start, 3]:.9g}\n"
            for i in range(start, stop)
        )


def read_features_tsv(lines: Iterable[str]) -> tuple[list[str], np.ndarray]:
    """Read back (names, (n,4) value matrix); header comments are skipped."""
    names: list[str] = []
    rows: list[tuple[float, float, float, float]] = []
    for raw in lines:
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 5:
            raise ValueError(f"bad feature row {line!r}")
        names.append(parts[0])
        rows.append((float(parts[1]), float(parts[2]), float(parts[3]), float(parts[4])))
    return names, np.array(rows, dtype=np.float64).reshape(len(rows), 4)
