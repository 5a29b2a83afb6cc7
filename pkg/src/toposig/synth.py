"""Synthetic labeled graphs: null baselines and planted-signal growth models.

``gen_er`` and ``gen_pref_attach`` provide unlabeled null/contrast
topologies.  ``gen_spatial_gravity`` grows a graph whose attachment favors
high-degree targets in nearby groups, with per-group stub counts; the group
is emitted as a synthetic country label (region = quadrant of the group's
position), which plants a detectable degree-statistics signal when stub
counts are heterogeneous or the distance exponent is large.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .graph import EdgeList, GeoLabels, Graph, build_graph

__all__ = [
    "GravityParams",
    "make_gravity_params",
    "gen_er",
    "gen_pref_attach",
    "gen_spatial_gravity",
    "random_group_labels",
]


def _node_names(n: int) -> list[str]:
    # zero-padded so lexicographic name order matches generation order
    width = len(str(n - 1))
    return [f"N{i:0{width}d}" for i in range(n)]


def _graph_from_int_edges(n: int, edges: list[tuple[int, int]]) -> Graph:
    names = _node_names(n)
    edge_list = EdgeList()
    for name in names:
        edge_list.add_name(name)
    for a, b in edges:
        edge_list.add_pair(names[a], names[b])
    return build_graph(edge_list)


def gen_er(n: int, p: float, seed: int) -> Graph:
    """Erdos-Renyi G(n, p) via geometric edge skipping, O(n + m)."""
    if n < 2:
        raise ValueError("need n >= 2")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"edge probability must be in [0, 1], got {p}")
    edges: list[tuple[int, int]] = []
    if p == 1.0:
        edges = [(i, j) for j in range(1, n) for i in range(j)]
    elif p > 0.0:
        rng = np.random.default_rng(seed)
        log_q = math.log1p(-p)
        v, w = 1, -1
        while v < n:
            w += 1 + int(math.log(1.0 - rng.random()) / log_q)
            while w >= v and v < n:
                w -= v
                v += 1
            if v < n:
                edges.append((w, v))
    return _graph_from_int_edges(n, edges)


def gen_pref_attach(n: int, m: int, seed: int) -> Graph:
    """Degree-proportional growth from an (m+1)-clique; m distinct edges per arrival."""
    if m < 1 or n <= m:
        raise ValueError(f"need n > m >= 1, got n={n} m={m}")
    rng = np.random.default_rng(seed)
    edges = [(i, j) for j in range(1, m + 1) for i in range(j)]
    # node id repeated once per incident edge: sampling it = sampling prop. to degree
    repeated: list[int] = [v for v in range(m + 1) for _ in range(m)]
    for source in range(m + 1, n):
        targets: set[int] = set()
        while len(targets) < m:
            targets.add(repeated[int(rng.integers(len(repeated)))])
        for t in sorted(targets):
            edges.append((t, source))
            repeated.append(t)
        repeated.extend([source] * m)
    return _graph_from_int_edges(n, edges)


@dataclass(frozen=True)
class GravityParams:
    n: int
    groups: int
    positions: np.ndarray = field(repr=False)  # (groups, 2) on the unit square
    stubs: tuple[int, ...]  # per-group attachment edge count
    beta: float
    seed: int
    distance_floor: float = 0.01

    def __post_init__(self) -> None:
        if not 1 <= self.groups <= self.n:
            raise ValueError("need n >= groups >= 1")
        positions = np.asarray(self.positions, dtype=np.float64)
        if positions.shape != (self.groups, 2):
            raise ValueError(f"positions must be ({self.groups}, 2)")
        if np.any(positions < 0.0) or np.any(positions > 1.0):
            raise ValueError("positions must lie on the unit square")
        stubs = tuple(int(s) for s in self.stubs)
        if len(stubs) != self.groups or any(s < 1 for s in stubs):
            raise ValueError("stubs must give one count >= 1 per group")
        if self.beta < 0.0:
            raise ValueError("distance exponent must be >= 0")
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "stubs", stubs)


def make_gravity_params(
    n: int,
    groups: int,
    beta: float,
    stubs: tuple[int, ...] | int,
    seed: int,
) -> GravityParams:
    """Build params with seeded group positions; short stub lists are cycled."""
    if isinstance(stubs, int):
        stubs = (stubs,)
    cycled = tuple(stubs[g % len(stubs)] for g in range(groups))
    positions = np.random.default_rng(np.random.SeedSequence([seed, 0])).random((groups, 2))
    return GravityParams(n=n, groups=groups, positions=positions, stubs=cycled, beta=beta, seed=seed)


def _quadrant(position: np.ndarray) -> str:
    return f"Q{2 * int(position[1] >= 0.5) + int(position[0] >= 0.5)}"


def gen_spatial_gravity(params: GravityParams) -> tuple[Graph, GeoLabels]:
    """Grow the gravity graph and emit synthetic country/region labels.

    Node i (group g = i mod G) attaches min(stubs[g], i) edges to distinct
    earlier nodes j, drawn with probability proportional to
    (k_j + 1) * (d(g_i, g_j) + floor)^(-beta) where d is the Euclidean
    distance between the group positions.
    """
    n, n_groups = params.n, params.groups
    rng = np.random.default_rng(params.seed)
    group_of = np.arange(n, dtype=np.int64) % n_groups

    delta = params.positions[:, None, :] - params.positions[None, :, :]
    group_dist = np.sqrt((delta**2).sum(axis=2))
    decay = (group_dist + params.distance_floor) ** (-params.beta)

    degree = np.zeros(n, dtype=np.float64)
    edges: list[tuple[int, int]] = []
    stubs = np.array(params.stubs, dtype=np.int64)
    for i in range(1, n):
        m_i = int(min(stubs[group_of[i]], i))
        weights = (degree[:i] + 1.0) * decay[group_of[i], group_of[:i]]
        probs = weights / weights.sum()
        targets = rng.choice(i, size=m_i, replace=False, p=probs)
        for t in np.sort(targets):
            edges.append((int(t), i))
        degree[targets] += 1.0
        degree[i] += m_i

    graph = _graph_from_int_edges(n, edges)
    width = len(str(n_groups - 1)) if n_groups > 1 else 1
    labels = GeoLabels()
    for i, name in enumerate(graph.names):
        g = int(group_of[graph.name_to_id[name]])
        labels.country[name] = f"C{g:0{width}d}"
        labels.region[name] = _quadrant(params.positions[g])
    return graph, labels


def random_group_labels(
    graph: Graph,
    n_groups: int,
    size_range: tuple[int, int],
    seed: int,
) -> GeoLabels:
    """Disjoint uniformly random label groups (structure-blind null labels)."""
    lo, hi = size_range
    if lo < 2 or hi < lo:
        raise ValueError("size range must satisfy 2 <= lo <= hi")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 4]))
    sizes = rng.integers(lo, hi + 1, size=n_groups)
    if sizes.sum() > graph.n:
        raise ValueError(f"labels need {sizes.sum()} nodes, graph has {graph.n}")
    order = rng.permutation(graph.n)
    labels = GeoLabels()
    width = len(str(n_groups - 1)) if n_groups > 1 else 1
    start = 0
    for g, size in enumerate(sizes):
        for node in order[start : start + size]:
            labels.country[graph.names[node]] = f"G{g:0{width}d}"
        start += int(size)
    return labels
