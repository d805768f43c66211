"""Undirected attributed graphs and file ingestion.

Vertices carry one real observed activity each.  External vertex labels
(arbitrary strings) are remapped to dense integer ids in [0, n) so that
neighborhood construction can be array-indexed; the mapping is kept for
report output.  Graphs are immutable after construction and safe to share
across worker threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import GraphFormatError, ValidationError


@dataclass(frozen=True)
class AttributedGraph:
    """Immutable undirected graph with optional per-vertex observations.

    Adjacency is CSR-like: ``indices[indptr[v]:indptr[v+1]]`` is the strictly
    ascending neighbor list of ``v``.  No self-loops, no duplicate edges.
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    observed: np.ndarray | None = None
    label_map: dict = field(default_factory=dict)
    dropped_duplicates: int = 0
    dropped_loops: int = 0

    def __post_init__(self):
        self.indptr.setflags(write=False)
        self.indices.setflags(write=False)
        if self.observed is not None:
            self.observed.setflags(write=False)

    @property
    def num_edges(self) -> int:
        return len(self.indices) // 2

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def degree(self, v: int) -> int:
        return int(self.indptr[v + 1] - self.indptr[v])

    def edges(self) -> np.ndarray:
        """All edges as an (m, 2) array with u < w, sorted lexicographically."""
        src = np.repeat(np.arange(self.n, dtype=np.int64), np.diff(self.indptr))
        dst = self.indices.astype(np.int64)
        keep = src < dst
        return np.column_stack([src[keep], dst[keep]])

    def labels(self) -> list:
        """External labels indexed by dense id."""
        inv = [None] * self.n
        for lab, i in self.label_map.items():
            inv[i] = lab
        return inv

    def has_edge(self, u: int, w: int) -> bool:
        nb = self.neighbors(u)
        j = np.searchsorted(nb, w)
        return j < len(nb) and nb[j] == w


@dataclass(frozen=True)
class GroundTruth:
    """True activities: inactive vertices sit at ``a``, active ones at >= ``b``."""

    a: float
    b: float
    A: np.ndarray
    active: np.ndarray

    def __post_init__(self):
        if not self.b > self.a:
            raise ValidationError(f"threshold b={self.b} must exceed baseline a={self.a}")
        if len(self.A) != len(self.active):
            raise ValidationError("activity vector and active mask length mismatch")
        if np.any(self.A[~self.active] != self.a):
            raise ValidationError("inactive vertex with activity != a")
        if np.any(self.A[self.active] < self.b):
            raise ValidationError("active vertex with activity below b")

    @property
    def n(self) -> int:
        return len(self.A)


def graph_from_pairs(pairs, strict: bool = False, label_map: dict | None = None) -> AttributedGraph:
    """Build a dense-id undirected graph from (label, label) pairs.

    Dense ids are assigned in order of first appearance.  Duplicate edges and
    self-loops are dropped and counted, unless ``strict`` is set, in which
    case they raise.  Pass ``label_map`` to force a predefined id assignment
    (all labels must already be present in it).
    """
    if label_map is None:
        label_map = {}
        for u, w in pairs:
            if u not in label_map:
                label_map[u] = len(label_map)
            if w not in label_map:
                label_map[w] = len(label_map)
    n = len(label_map)
    if n == 0:
        raise GraphFormatError("empty graph: no vertices found")

    loops = 0
    us = np.empty(len(pairs), dtype=np.int64)
    ws = np.empty(len(pairs), dtype=np.int64)
    m = 0
    for u, w in pairs:
        iu, iw = label_map[u], label_map[w]
        if iu == iw:
            loops += 1
            if strict:
                raise ValidationError(f"self-loop on vertex {u!r}")
            continue
        us[m], ws[m] = iu, iw
        m += 1
    us, ws = us[:m], ws[:m]

    # symmetrize, then dedup via a single edge key
    su = np.concatenate([us, ws])
    sw = np.concatenate([ws, us])
    key = su * n + sw
    uniq = np.unique(key)
    dups = m - len(uniq) // 2
    if strict and dups > 0:
        raise ValidationError(f"{dups} duplicate edge(s) in input")

    su = (uniq // n).astype(np.int64)
    sw = (uniq % n).astype(np.int32)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, su + 1, 1)
    indptr = np.cumsum(indptr)
    return AttributedGraph(
        n=n,
        indptr=indptr,
        indices=sw,
        label_map=dict(label_map),
        dropped_duplicates=int(dups),
        dropped_loops=loops,
    )


def load_edge_list(path, strict: bool = False) -> AttributedGraph:
    """Read a whitespace/comma-separated edge list, one edge per line.

    Lines starting with ``#`` are comments.  Labels are arbitrary tokens.
    """
    pairs = []
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                toks = line.replace(",", " ").split()
                if len(toks) != 2:
                    raise GraphFormatError(
                        f"{path}:{lineno}: expected two tokens, got {len(toks)}: {line!r}")
                pairs.append((toks[0], toks[1]))
    except OSError as exc:
        raise GraphFormatError(f"cannot read edge list {path}: {exc}") from exc
    if not pairs:
        raise GraphFormatError(f"{path}: no edges found")
    return graph_from_pairs(pairs, strict=strict)


def write_edge_list(g: AttributedGraph, path) -> None:
    """Write edges in canonical order (lexicographic by dense id) as labels."""
    inv = g.labels()
    with open(path, "w", encoding="utf-8") as fh:
        for u, w in g.edges():
            fh.write(f"{inv[u]} {inv[w]}\n")


def set_observations(g: AttributedGraph, x) -> AttributedGraph:
    """Return a copy of ``g`` with observed activities attached."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (g.n,):
        raise ValidationError(f"expected {g.n} observations, got shape {x.shape}")
    bad = np.flatnonzero(~np.isfinite(x))
    if len(bad):
        raise ValidationError(f"non-finite observation at index {bad[0]}")
    return replace(g, observed=x.copy())


# --- GML subset ------------------------------------------------------------

def _tokenize_gml(text: str):
    out = []
    i, nn = 0, len(text)
    while i < nn:
        c = text[i]
        if c.isspace():
            i += 1
        elif c == '"':
            j = text.index('"', i + 1)
            out.append(text[i + 1:j])
            i = j + 1
        elif c in "[]":
            out.append(c)
            i += 1
        else:
            j = i
            while j < nn and not text[j].isspace() and text[j] not in "[]":
                j += 1
            out.append(text[i:j])
            i = j
    return out


def _parse_gml_block(tokens, pos):
    """Parse `key value` / `key [ ... ]` entries until the closing bracket."""
    entries = []
    while pos < len(tokens):
        tok = tokens[pos]
        if tok == "]":
            return entries, pos + 1
        key = tok
        pos += 1
        if pos >= len(tokens):
            raise GraphFormatError(f"GML: dangling key {key!r}")
        if tokens[pos] == "[":
            sub, pos = _parse_gml_block(tokens, pos + 1)
            entries.append((key, sub))
        else:
            entries.append((key, tokens[pos]))
            pos += 1
    return entries, pos


def load_gml(path):
    """Load the GML subset ``graph [ node [...] edge [...] ]``.

    Directed citation edges are symmetrized: a link in either direction
    becomes one undirected edge.  Returns ``(graph, value_labels)`` where
    ``value_labels[i]`` is the integer ``value`` attribute of dense vertex i
    (0 when absent).
    """
    try:
        with open(path, "r", encoding="utf-8", errors="replace") as fh:
            text = fh.read()
    except OSError as exc:
        raise GraphFormatError(f"cannot read GML file {path}: {exc}") from exc

    tokens = _tokenize_gml(text)
    entries, _ = _parse_gml_block(tokens, 0)
    graph_block = None
    for key, val in entries:
        if key == "graph":
            if not isinstance(val, list):
                raise GraphFormatError("GML: 'graph' is not a block")
            graph_block = val
            break
    if graph_block is None:
        raise GraphFormatError("GML: no 'graph' block found")

    label_map: dict = {}
    values: dict = {}
    raw_edges = []
    node_ordinal = 0
    for key, val in graph_block:
        if key == "node":
            node_ordinal += 1
            if not isinstance(val, list):
                raise GraphFormatError(f"GML: node #{node_ordinal} is not a block")
            fields = dict((k, v) for k, v in val if not isinstance(v, list))
            if "id" not in fields:
                raise GraphFormatError(f"GML: node #{node_ordinal} missing 'id'")
            nid = fields["id"]
            if nid in label_map:
                raise GraphFormatError(f"GML: duplicate node id {nid}")
            label_map[nid] = len(label_map)
            values[nid] = int(float(fields.get("value", 0)))
        elif key == "edge":
            if not isinstance(val, list):
                raise GraphFormatError("GML: edge is not a block")
            fields = dict((k, v) for k, v in val if not isinstance(v, list))
            if "source" not in fields or "target" not in fields:
                raise GraphFormatError("GML: edge missing source/target")
            raw_edges.append((fields["source"], fields["target"]))
        elif key in ("directed", "id", "label", "Creator", "creator", "name", "comment"):
            continue
        else:
            raise GraphFormatError(f"GML: unsupported construct {key!r}")

    for s, t in raw_edges:
        if s not in label_map or t not in label_map:
            raise GraphFormatError(f"GML: edge references unknown node ({s}, {t})")
    if not label_map:
        raise GraphFormatError("GML: graph has no nodes")

    g = graph_from_pairs(raw_edges, label_map=label_map)
    value_vec = np.zeros(g.n, dtype=np.int64)
    for lab, i in g.label_map.items():
        value_vec[i] = values[lab]
    return g, value_vec


# --- attribute CSV ---------------------------------------------------------

def load_attributes_csv(path, g: AttributedGraph) -> np.ndarray:
    """Read a ``vertex,value`` CSV into a per-vertex observation vector."""
    import csv

    x = np.full(g.n, np.nan)
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip() for h in header[:2]] != ["vertex", "value"]:
                raise GraphFormatError(f"{path}: expected header 'vertex,value'")
            for row in reader:
                if not row:
                    continue
                lab = row[0].strip()
                if lab not in g.label_map:
                    raise GraphFormatError(f"{path}: unknown vertex label {lab!r}")
                x[g.label_map[lab]] = float(row[1])
    except OSError as exc:
        raise GraphFormatError(f"cannot read attribute CSV {path}: {exc}") from exc
    missing = np.flatnonzero(np.isnan(x))
    if len(missing):
        raise GraphFormatError(f"{path}: no value for vertex id {missing[0]}")
    return x


def write_attributes_csv(g: AttributedGraph, x, path) -> None:
    inv = g.labels()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("vertex,value\n")
        for i in range(g.n):
            fh.write(f"{inv[i]},{float(x[i])!r}\n")
