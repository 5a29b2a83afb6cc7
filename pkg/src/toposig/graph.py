"""Topology ingestion: link records, geolocation labels, immutable adjacency graphs.

Input formats
-------------
Links file (router-topology style)::

    # comment
    link L1:  N1:1.2.3.4 N2 N3:5.6.7.8

Every link record is clique-expanded: a record naming r distinct routers
contributes all C(r, 2) unordered pairs.  The optional ``:<ipv4>`` interface
suffix on a member is ignored.  Self-pairs and duplicate pairs are dropped
with counters.

Canonical edge TSV: ``name_a<TAB>name_b`` with ``name_a < name_b``, rows
sorted.  Node list TSV: one name per line, sorted (carries isolated nodes
that the edge TSV cannot).  Geo TSV: ``name<TAB>country<TAB>region`` with
region optionally empty.
"""

from __future__ import annotations

import itertools
import re
import struct
from array import array
from dataclasses import dataclass, field
from typing import Iterable, Iterator, TextIO

import numpy as np

__all__ = [
    "ParseError",
    "EdgeList",
    "Graph",
    "GeoLabels",
    "parse_links",
    "parse_edges_tsv",
    "parse_nodes_tsv",
    "parse_geo",
    "build_graph",
    "level_tallies",
    "country_groups",
    "region_groups",
    "unmatched_names",
    "write_edges_tsv",
    "write_nodes_tsv",
    "write_geo_tsv",
    "write_adjacency_cache",
    "read_adjacency_cache",
]

_MEMBER_RE = re.compile(r"^N\d+(?::\d{1,3}(?:\.\d{1,3}){3})?$")


class ParseError(ValueError):
    """Malformed input line in strict mode."""

    def __init__(self, message: str, line_no: int):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class EdgeList:
    """Accumulates unordered node-name pairs; deduplicates on finalization.

    Names are interned to provisional integer ids and pairs kept in flat
    int64 arrays so that multi-million-edge inputs stay compact.
    """

    def __init__(self) -> None:
        self._ids: dict[str, int] = {}
        self._src = array("q")
        self._dst = array("q")
        self._codes: np.ndarray | None = None
        self._code_width = 1
        self.self_pairs_dropped = 0
        self.duplicate_pairs_dropped = 0
        self.malformed_lines = 0

    def _intern(self, name: str) -> int:
        ident = self._ids.get(name)
        if ident is None:
            ident = len(self._ids)
            self._ids[name] = ident
        return ident

    def add_name(self, name: str) -> None:
        """Register a node name without any edge (isolated mention)."""
        self._intern(name)

    def add_pair(self, a: str, b: str) -> None:
        ia = self._intern(a)
        ib = self._intern(b)
        if ia == ib:
            self.self_pairs_dropped += 1
            return
        self._codes = None
        self._src.append(ia)
        self._dst.append(ib)

    def add_link_members(self, members: Iterable[str]) -> None:
        """Clique-expand one link record into all pairs of its distinct members."""
        members = list(members)
        distinct = list(dict.fromkeys(members))
        self.self_pairs_dropped += len(members) - len(distinct)
        for name in distinct:
            self._intern(name)
        for a, b in itertools.combinations(distinct, 2):
            self.add_pair(a, b)

    @property
    def raw_pair_count(self) -> int:
        """Pairs accumulated so far, before cross-record deduplication."""
        return len(self._src)

    @property
    def node_names(self) -> set[str]:
        return set(self._ids)

    def finalize(self) -> None:
        """Canonicalize and deduplicate the accumulated pairs (idempotent)."""
        if self._codes is not None:
            return
        self._code_width = max(len(self._ids), 1)
        src = np.frombuffer(self._src, dtype=np.int64)
        dst = np.frombuffer(self._dst, dtype=np.int64)
        lo = np.minimum(src, dst)
        hi = np.maximum(src, dst)
        codes = np.unique(lo * self._code_width + hi)
        self.duplicate_pairs_dropped = len(src) - len(codes)
        self._codes = codes

    @property
    def edge_count(self) -> int:
        self.finalize()
        assert self._codes is not None
        return len(self._codes)

    def pairs(self) -> Iterator[tuple[str, str]]:
        """Yield deduplicated edges as name pairs (provisional-id order)."""
        self.finalize()
        assert self._codes is not None
        by_id = {ident: name for name, ident in self._ids.items()}
        for code in self._codes:
            yield by_id[int(code) // self._code_width], by_id[int(code) % self._code_width]


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable simple undirected graph in compressed sparse adjacency form.

    Internal ids are assigned in lexicographic order of external names, so id
    order and name order coincide.  Arrays are marked read-only; the graph is
    safe for unlimited concurrent readers.
    """

    n: int
    m: int
    indptr: np.ndarray
    indices: np.ndarray
    degrees: np.ndarray
    names: tuple[str, ...]
    name_to_id: dict[str, int] = field(repr=False)

    def neighbors(self, node: int) -> np.ndarray:
        """Sorted neighbor ids of ``node``."""
        return self.indices[self.indptr[node] : self.indptr[node + 1]]

    def edge_id_pairs(self) -> tuple[np.ndarray, np.ndarray]:
        """All edges as (src, dst) id arrays with src < dst, sorted."""
        row = np.repeat(np.arange(self.n, dtype=np.int64), self.degrees)
        mask = self.indices > row
        return row[mask], self.indices[mask]

    def equals(self, other: "Graph") -> bool:
        return (
            self.n == other.n
            and self.m == other.m
            and self.names == other.names
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
        )


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


def build_graph(edge_list: EdgeList) -> Graph:
    """Assemble the adjacency structure from an accumulated edge list.

    Ids follow lexicographic name order; isolated names are retained with
    degree 0.  Raises ``ValueError`` when no node was ever mentioned.
    """
    if not edge_list._ids:
        raise ValueError("empty edge list: no nodes or edges to build from")
    edge_list.finalize()
    assert edge_list._codes is not None

    names = sorted(edge_list._ids)
    n = len(names)
    name_to_id = {name: i for i, name in enumerate(names)}
    relabel = np.empty(max(len(edge_list._ids), 1), dtype=np.int64)
    for name, prov in edge_list._ids.items():
        relabel[prov] = name_to_id[name]

    width = edge_list._code_width
    codes = edge_list._codes
    lo = relabel[codes // width]
    hi = relabel[codes % width]
    src = np.minimum(lo, hi)
    dst = np.maximum(lo, hi)
    # relabeling is a bijection: no new duplicates or self-loops can appear
    order = np.argsort(src * n + dst)
    src, dst = src[order], dst[order]
    m = len(src)

    row = np.concatenate([src, dst])
    col = np.concatenate([dst, src])
    degrees = np.bincount(row, minlength=n).astype(np.int64)
    csr_order = np.lexsort((col, row))
    indices = np.ascontiguousarray(col[csr_order])
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(degrees, out=indptr[1:])

    assert int(degrees.sum()) == 2 * m
    return Graph(
        n=n,
        m=m,
        indptr=_freeze(indptr),
        indices=_freeze(indices),
        degrees=_freeze(degrees),
        names=tuple(names),
        name_to_id=name_to_id,
    )


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

def _link_members(line: str) -> list[str] | None:
    tokens = line.split()
    if len(tokens) < 3 or tokens[0] != "link":
        return None
    if not tokens[1].endswith(":") or len(tokens[1]) < 2:
        return None
    members = []
    for token in tokens[2:]:
        if not _MEMBER_RE.match(token):
            return None
        members.append(token.split(":", 1)[0])
    return members


def parse_links(stream: Iterable[str], strict: bool = False) -> EdgeList:
    """Parse a links file into a deduplicated :class:`EdgeList`.

    Malformed lines are counted and skipped; with ``strict`` they raise
    :class:`ParseError` carrying the line number.
    """
    edge_list = EdgeList()
    for line_no, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        members = _link_members(line)
        if members is None:
            if strict:
                raise ParseError(f"bad link record {line!r}", line_no)
            edge_list.malformed_lines += 1
            continue
        edge_list.add_link_members(members)
    edge_list.finalize()
    return edge_list


def parse_edges_tsv(
    stream: Iterable[str],
    strict: bool = False,
    edge_list: EdgeList | None = None,
) -> EdgeList:
    """Parse a canonical two-column edge TSV (``#`` comments allowed)."""
    if edge_list is None:
        edge_list = EdgeList()
    for line_no, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2 or not parts[0] or not parts[1]:
            if strict:
                raise ParseError(f"bad edge record {line!r}", line_no)
            edge_list.malformed_lines += 1
            continue
        edge_list.add_pair(parts[0], parts[1])
    edge_list.finalize()
    return edge_list


def parse_nodes_tsv(stream: Iterable[str], edge_list: EdgeList) -> EdgeList:
    """Register names from a node-list TSV (one name per line) on ``edge_list``."""
    for raw in stream:
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        edge_list.add_name(line)
    return edge_list


@dataclass
class GeoLabels:
    """Country/region labels keyed by external node name.

    A region without a country is rejected at parse time, so
    ``region`` keys are always a subset of ``country`` keys.
    """

    country: dict[str, str] = field(default_factory=dict)
    region: dict[str, str] = field(default_factory=dict)
    rejected: int = 0
    duplicates: int = 0


def parse_geo(stream: Iterable[str], strict: bool = False) -> GeoLabels:
    """Parse a geo TSV into :class:`GeoLabels`.

    Records with a region but no country (or with no label at all) are
    rejected and counted, never fatal.  Structurally broken lines follow
    the links-file strict/lenient convention.
    """
    labels = GeoLabels()
    for line_no, raw in enumerate(stream, start=1):
        line = raw.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = [p.strip() for p in line.split("\t")]
        if len(parts) < 2 or not parts[0]:
            if strict:
                raise ParseError(f"bad geo record {line!r}", line_no)
            labels.rejected += 1
            continue
        name, country = parts[0], parts[1]
        region = parts[2] if len(parts) > 2 else ""
        if not country:
            labels.rejected += 1
            continue
        if name in labels.country:
            labels.duplicates += 1
            labels.region.pop(name, None)
        labels.country[name] = country
        if region:
            labels.region[name] = region
    return labels


# ---------------------------------------------------------------------------
# label / graph joins
# ---------------------------------------------------------------------------

def level_tallies(labels: GeoLabels, names: Iterable[str]) -> tuple[int, int, int]:
    """Counts of (unlabeled, country-only, country-and-region) over ``names``."""
    none = country_only = both = 0
    for name in names:
        if name not in labels.country:
            none += 1
        elif name in labels.region:
            both += 1
        else:
            country_only += 1
    return none, country_only, both


def unmatched_names(graph: Graph, labels: GeoLabels) -> list[str]:
    """Labeled names that do not occur in the graph (reported, not fatal)."""
    return sorted(name for name in labels.country if name not in graph.name_to_id)


def country_groups(graph: Graph, labels: GeoLabels) -> dict[str, np.ndarray]:
    """Node-id sets keyed by country code."""
    groups: dict[str, list[int]] = {}
    for name, country in labels.country.items():
        node = graph.name_to_id.get(name)
        if node is not None:
            groups.setdefault(country, []).append(node)
    return {k: np.array(sorted(v), dtype=np.int64) for k, v in sorted(groups.items())}


def region_groups(graph: Graph, labels: GeoLabels) -> dict[str, np.ndarray]:
    """Node-id sets keyed by ``country/region``."""
    groups: dict[str, list[int]] = {}
    for name, region in labels.region.items():
        node = graph.name_to_id.get(name)
        if node is not None:
            key = f"{labels.country[name]}/{region}"
            groups.setdefault(key, []).append(node)
    return {k: np.array(sorted(v), dtype=np.int64) for k, v in sorted(groups.items())}


def labeled_node_ids(graph: Graph, labels: GeoLabels) -> np.ndarray:
    """Ids of graph nodes carrying at least a country label, ascending."""
    ids = [graph.name_to_id[n] for n in labels.country if n in graph.name_to_id]
    return np.array(sorted(ids), dtype=np.int64)


# ---------------------------------------------------------------------------
# writers
# ---------------------------------------------------------------------------

_WRITE_CHUNK = 1 << 18


def write_edges_tsv(graph: Graph, out: TextIO) -> None:
    """Emit the canonical edge TSV (name_a < name_b, rows sorted)."""
    src, dst = graph.edge_id_pairs()
    names = graph.names
    for start in range(0, len(src), _WRITE_CHUNK):
        chunk_src = src[start : start + _WRITE_CHUNK]
        chunk_dst = dst[start : start + _WRITE_CHUNK]
        out.writelines(
            f"{names[a]}\t{names[b]}\n" for a, b in zip(chunk_src.tolist(), chunk_dst.tolist())
        )


def write_nodes_tsv(graph: Graph, out: TextIO) -> None:
    out.writelines(f"{name}\n" for name in graph.names)


def write_geo_tsv(labels: GeoLabels, out: TextIO) -> None:
    """Emit labels sorted by node name, region column possibly empty."""
    for name in sorted(labels.country):
        out.write(f"{name}\t{labels.country[name]}\t{labels.region.get(name, '')}\n")


# ---------------------------------------------------------------------------
# binary adjacency cache
# ---------------------------------------------------------------------------

_CACHE_MAGIC = b"TSADJ\x00\x00\x01"


def write_adjacency_cache(graph: Graph, path: str) -> None:
    """Write the versioned binary adjacency cache (bit-exact per input)."""
    with open(path, "wb") as f:
        f.write(_CACHE_MAGIC)
        f.write(struct.pack("<qq", graph.n, graph.m))
        f.write(graph.degrees.astype("<i8").tobytes())
        f.write(graph.indices.astype("<i8").tobytes())


def read_adjacency_cache(path: str) -> tuple[int, int, np.ndarray, np.ndarray, np.ndarray]:
    """Read the cache back as (n, m, degrees, indptr, indices)."""
    with open(path, "rb") as f:
        magic = f.read(len(_CACHE_MAGIC))
        if magic != _CACHE_MAGIC:
            raise ValueError(f"not an adjacency cache (bad header {magic!r})")
        n, m = struct.unpack("<qq", f.read(16))
        degrees = np.frombuffer(f.read(8 * n), dtype="<i8")
        indices = np.frombuffer(f.read(8 * 2 * m), dtype="<i8")
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(degrees, out=indptr[1:])
    return n, m, degrees, indptr, indices
