"""Neighborhood hierarchy: BFS layers, full and exact m-neighborhoods.

Terminology used throughout: layer i of a root v is the set of vertices at
hop distance exactly i; the order-r full neighborhood is the union of layers
0..r; the full m-neighborhood is the smallest such union with at least m
vertices; an exact m-neighborhood keeps all complete layers and truncates
the outermost one down to exactly m members.  The truncation rule is fixed
to smallest-vertex-id so that the whole construction is a pure function of
(graph, m).
"""

from __future__ import annotations

import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import FamilyError, ValidationError
from .graph import AttributedGraph

_CHUNK = 8192


@dataclass(frozen=True)
class LayeredNeighborhood:
    """BFS layers of one root, grown until a target cumulative size."""

    root: int
    layers: tuple          # tuple of sorted tuples of vertex ids
    cumulative_sizes: tuple

    @property
    def radius(self) -> int:
        return len(self.layers) - 1

    @property
    def reached(self) -> int:
        """Number of vertices reachable within the grown radius."""
        return self.cumulative_sizes[-1]

    def omega(self, i: int) -> tuple:
        """Full neighborhood of order i: union of layers 0..i, sorted."""
        out = []
        for layer in self.layers[:i + 1]:
            out.extend(layer)
        return tuple(sorted(out))


@dataclass(frozen=True)
class ExactNeighborhood:
    """Exactly m vertices: all inner layers plus a truncated outer layer."""

    root: int
    members: np.ndarray    # sorted int64
    inner_radius: int
    truncated_last_layer: tuple

    def __post_init__(self):
        self.members.setflags(write=False)

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def member_set(self) -> frozenset:
        return frozenset(int(v) for v in self.members)


def bfs_layers(g: AttributedGraph, v: int, stop_at_size: int) -> LayeredNeighborhood:
    """Grow BFS layers outward from v until >= stop_at_size vertices are seen.

    Stops early if the reachable component is exhausted.  Neighbor expansion
    follows the graph's sorted adjacency; layer contents are distance-determined
    and therefore independent of expansion order.
    """
    if stop_at_size < 1:
        raise ValidationError(f"stop_at_size must be >= 1, got {stop_at_size}")
    seen = {v}
    layers = [(v,)]
    sizes = [1]
    frontier = [v]
    while sizes[-1] < stop_at_size:
        nxt = set()
        for u in frontier:
            for w in g.neighbors(u):
                w = int(w)
                if w not in seen:
                    nxt.add(w)
        if not nxt:
            break
        seen |= nxt
        frontier = sorted(nxt)
        layers.append(tuple(frontier))
        sizes.append(sizes[-1] + len(nxt))
    return LayeredNeighborhood(root=v, layers=tuple(layers), cumulative_sizes=tuple(sizes))


def exact_neighborhood(layers: LayeredNeighborhood, m: int) -> ExactNeighborhood:
    """Truncate a layered neighborhood to exactly m members (smallest ids last)."""
    if m < 1:
        raise ValidationError(f"m must be >= 1, got {m}")
    if layers.reached < m:
        raise FamilyError(
            f"root {layers.root}: reachable component has {layers.reached} < {m} vertices")
    sizes = layers.cumulative_sizes
    r = next(i for i, c in enumerate(sizes) if c >= m)
    inner = []
    for layer in layers.layers[:r]:
        inner.extend(layer)
    need = m - len(inner)
    last = sorted(layers.layers[r])[:need]
    members = np.array(sorted(inner + last), dtype=np.int64)
    return ExactNeighborhood(
        root=layers.root,
        members=members,
        inner_radius=r,
        truncated_last_layer=tuple(last),
    )


def _alloc_scratch(n: int):
    return (
        np.empty(n, dtype=np.int32),                       # BFS order
        np.full(n, -1, dtype=np.int64),                    # visited stamp
        np.empty(max(n, 1), dtype=np.int32),               # selection scratch
        np.empty(_kernels.PARTIALS_CAP, dtype=np.float64),  # exact-sum partials
    )


def _scan_all_roots(g: AttributedGraph, x, k: int, workers: int | None):
    """Run the fused per-root kernel over every root; returns per-root arrays.

    Chunking is fixed (independent of worker count) and every root writes only
    its own slot, so the output is identical for any number of workers.
    """
    n = g.n
    compute_sums = x is not None
    xx = x if compute_sums else np.zeros(1)
    avg = np.empty(n)
    radius = np.empty(n, dtype=np.int32)
    visited = np.zeros(n, dtype=np.int64)
    skipped = np.zeros(n, dtype=np.bool_)
    chunks = [(s, min(s + _CHUNK, n)) for s in range(0, n, _CHUNK)]

    if workers is None:
        import os
        workers = min(8, os.cpu_count() or 1)

    if workers <= 1 or len(chunks) == 1:
        scratch = _alloc_scratch(n)
        for s, e in chunks:
            _kernels.scan_roots(g.indptr, g.indices, xx, k, s, e, compute_sums,
                                avg, radius, visited, skipped, *scratch)
    else:
        tls = threading.local()

        def run(chunk):
            ws = getattr(tls, "ws", None)
            if ws is None:
                ws = tls.ws = _alloc_scratch(n)
            _kernels.scan_roots(g.indptr, g.indices, xx, k, chunk[0], chunk[1],
                                compute_sums, avg, radius, visited, skipped, *ws)

        with ThreadPoolExecutor(max_workers=workers) as ex:
            list(ex.map(run, chunks))
    return avg, radius, visited, skipped


@dataclass
class NeighborhoodFamily:
    """One exact k-neighborhood per vertex whose component holds >= k vertices.

    Membership is a pure function of (graph, k); member lists are materialized
    lazily per root via :func:`bfs_layers`.  Per-root averages computed during
    construction (when observations were present) are cached for the scan.
    """

    graph: AttributedGraph
    k: int
    radius: np.ndarray
    visited: np.ndarray
    skipped: np.ndarray
    _avg: np.ndarray | None = field(default=None, repr=False)
    _avg_x: np.ndarray | None = field(default=None, repr=False)

    @property
    def skipped_count(self) -> int:
        return int(self.skipped.sum())

    def roots(self) -> np.ndarray:
        return np.flatnonzero(~self.skipped)

    def neighborhood(self, v: int) -> ExactNeighborhood | None:
        """Materialize the exact k-neighborhood of v (None if skipped)."""
        if self.skipped[v]:
            return None
        return exact_neighborhood(bfs_layers(self.graph, v, self.k), self.k)

    def members_matrix(self) -> np.ndarray:
        """Dense (n, k) member table, -1 rows for skipped roots.

        Materializes every neighborhood; intended for small graphs and audits.
        """
        out = np.full((self.graph.n, self.k), -1, dtype=np.int64)
        for v in self.roots():
            out[v] = self.neighborhood(int(v)).members
        return out

    def dump_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("root,member\n")
            for v in self.roots():
                for m in self.neighborhood(int(v)).members:
                    fh.write(f"{v},{m}\n")

    def cached_averages(self, x) -> np.ndarray | None:
        """Averages computed at build time, if they match these observations."""
        if self._avg is not None and self._avg_x is x:
            return self._avg
        return None


def build_family(g: AttributedGraph, k: int, workers: int | None = None) -> NeighborhoodFamily:
    """Construct the per-vertex exact k-neighborhood family.

    Vertices whose reachable component holds fewer than k vertices are
    skipped.  If observations are attached, per-root averages are computed in
    the same pass and cached for :func:`graphscan.estimators.scan_phase1`.
    """
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    if k > g.n:
        raise FamilyError(f"k={k} exceeds vertex count n={g.n}")
    x = g.observed
    avg, radius, visited, skipped = _scan_all_roots(g, x, k, workers)
    if skipped.all():
        raise FamilyError(f"no admissible neighborhood: all {g.n} vertices are in components < {k}")
    fam = NeighborhoodFamily(graph=g, k=k, radius=radius, visited=visited, skipped=skipped)
    if x is not None:
        fam._avg = avg
        fam._avg_x = x
    return fam
