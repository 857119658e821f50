"""Directed weighted graph model, Laplacian construction, and edge-list I/O.

Vertices are 0-based integers internally. On-disk formats (edge lists and
position sidecars) use 1-based indices, matching common edge-list corpora.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp


class GraphError(ValueError):
    """Invalid graph structure (self-loop, duplicate edge, bad weight...)."""


class GraphFormatError(GraphError):
    """Malformed edge-list or positions file; carries the offending line."""

    def __init__(self, message: str, path=None, line: int | None = None):
        prefix = f"{path}:{line}: " if line is not None else ""
        super().__init__(prefix + message)
        self.path = path
        self.line = line


@dataclass(frozen=True)
class Graph:
    """Immutable directed weighted graph with optional vertex coordinates.

    ``adjacency[i, j] > 0`` means vertex ``i`` has an out-edge to ``j`` of
    that weight.  In the consensus dynamics this reads "i listens to j",
    so influence propagates against edge direction.

    Attributes
    ----------
    adjacency : scipy.sparse.csr_matrix
        n x n nonnegative weight matrix, zero diagonal.
    directed : bool
        When False the adjacency must be symmetric.
    positions : ndarray or None
        (n, 2) or (n, 3) vertex coordinates, one dimensionality for all.
    """

    adjacency: sp.csr_matrix
    directed: bool = True
    positions: np.ndarray | None = None

    def __post_init__(self):
        a = self.adjacency
        if not sp.issparse(a):
            raise GraphError("adjacency must be a scipy sparse matrix")
        if a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise GraphError(f"adjacency must be square and nonempty, got {a.shape}")
        a = a.tocsr()
        a.sort_indices()
        object.__setattr__(self, "adjacency", a)
        if a.diagonal().any():
            raise GraphError("self-loops are not allowed")
        if a.nnz and a.data.min() <= 0:
            raise GraphError("edge weights must be strictly positive")
        if not self.directed and (a != a.T).nnz:
            raise GraphError("undirected graph requires a symmetric adjacency")
        if self.positions is not None:
            pos = np.asarray(self.positions, dtype=float)
            if pos.ndim != 2 or pos.shape[0] != a.shape[0] or pos.shape[1] not in (2, 3):
                raise GraphError(
                    f"positions must be (n, 2) or (n, 3), got {pos.shape} for n={a.shape[0]}"
                )
            object.__setattr__(self, "positions", pos)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @property
    def m(self) -> int:
        return self.adjacency.nnz

    def outdegrees(self) -> np.ndarray:
        """Weighted outdegree (row sums) of every vertex."""
        return np.asarray(self.adjacency.sum(axis=1)).ravel()

    def out_neighbors(self, i: int) -> np.ndarray:
        a = self.adjacency
        return a.indices[a.indptr[i]:a.indptr[i + 1]]

    def edges(self) -> list[tuple[int, int, float]]:
        """All edges as (src, dst, weight), sorted by (src, dst)."""
        a = self.adjacency.tocoo()
        order = np.lexsort((a.col, a.row))
        return [(int(a.row[t]), int(a.col[t]), float(a.data[t])) for t in order]

    @classmethod
    def from_edges(cls, n, edge_list, directed=True, positions=None) -> "Graph":
        """Build a graph from (src, dst, weight) triples, validating invariants."""
        if n < 1:
            raise GraphError("graph needs at least one vertex")
        edge_list = list(edge_list)
        if edge_list:
            src = np.array([e[0] for e in edge_list], dtype=np.int64)
            dst = np.array([e[1] for e in edge_list], dtype=np.int64)
            w = np.array([e[2] for e in edge_list], dtype=float)
            if src.min() < 0 or src.max() >= n or dst.min() < 0 or dst.max() >= n:
                raise GraphError(f"edge endpoint out of range for n={n}")
            keys = src * n + dst
            uniq, counts = np.unique(keys, return_counts=True)
            if counts.max() > 1:
                k = int(uniq[np.argmax(counts)])
                raise GraphError(f"duplicate edge ({k // n}, {k % n})")
            adj = sp.csr_matrix((w, (src, dst)), shape=(n, n))
        else:
            adj = sp.csr_matrix((n, n))
        return cls(adjacency=adj, directed=directed, positions=positions)

    def permuted(self, perm) -> "Graph":
        """Relabel vertices: new index perm[i] holds old vertex i."""
        perm = np.asarray(perm)
        p = sp.csr_matrix(
            (np.ones(self.n), (perm, np.arange(self.n))), shape=(self.n, self.n)
        )
        adj = (p @ self.adjacency @ p.T).tocsr()
        pos = None
        if self.positions is not None:
            pos = np.empty_like(self.positions)
            pos[perm] = self.positions
        return Graph(adjacency=adj, directed=self.directed, positions=pos)


@dataclass(frozen=True)
class LaplacianView:
    """L = D - A with D the diagonal outdegree matrix; every row sums to zero."""

    matrix: sp.csr_matrix

    ROW_SUM_TOL = 1e-12

    def __post_init__(self):
        rs = self.row_sums()
        if np.abs(rs).max(initial=0.0) > self.ROW_SUM_TOL:
            raise GraphError(f"Laplacian rows must sum to 0, worst {np.abs(rs).max()}")
        object.__setattr__(self, "_cache", {})

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def row_sums(self) -> np.ndarray:
        return np.asarray(self.matrix.sum(axis=1)).ravel()

    def dense(self) -> np.ndarray:
        if "dense" not in self._cache:
            self._cache["dense"] = self.matrix.toarray()
        return self._cache["dense"]

    def adjacency_pattern(self) -> sp.csr_matrix:
        """A recovered from the negated off-diagonal of L (CSR)."""
        if "adj" not in self._cache:
            off = -sp.triu(self.matrix, 1) - sp.tril(self.matrix, -1)
            self._cache["adj"] = off.tocsr()
        return self._cache["adj"]

    def listeners(self) -> sp.csr_matrix:
        """Row v lists the vertices that listen to v (A transposed, CSR)."""
        if "listeners" not in self._cache:
            self._cache["listeners"] = self.adjacency_pattern().T.tocsr()
        return self._cache["listeners"]

    def is_strongly_connected(self) -> bool:
        if "scc" not in self._cache:
            ncomp, _ = sp.csgraph.connected_components(
                self.adjacency_pattern(), directed=True, connection="strong"
            )
            self._cache["scc"] = ncomp == 1
        return self._cache["scc"]


def laplacian(g: Graph) -> LaplacianView:
    """Laplacian L = D - A of a graph; sparse, rows sum to zero."""
    deg = g.outdegrees()
    mat = (sp.diags(deg) - g.adjacency).tocsr()
    return LaplacianView(matrix=mat)


def _format_weight(w: float) -> str:
    # 17 significant digits: decimal text round-trips the double exactly.
    return f"{w:.17g}"


def save_graph(g: Graph, path, positions_path=None) -> None:
    """Write an edge list ("src dst weight" per line, 1-based, '#' comments).

    The vertex count and directedness are recorded as header comments so
    isolated vertices survive a round trip.  Positions, when present and a
    sidecar path is given, are written as "vertex x y [z]" lines.
    """
    lines = [f"# n={g.n}", f"# directed={'true' if g.directed else 'false'}"]
    for src, dst, w in g.edges():
        lines.append(f"{src + 1} {dst + 1} {_format_weight(w)}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    if positions_path is not None and g.positions is not None:
        plines = []
        for i, row in enumerate(g.positions):
            coords = " ".join(_format_weight(x) for x in row)
            plines.append(f"{i + 1} {coords}")
        with open(positions_path, "w") as fh:
            fh.write("\n".join(plines) + "\n")


def _content_lines(path):
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            text = raw.split("#", 1)[0].strip()
            if text:
                yield lineno, text


def load_positions(path, n: int) -> np.ndarray:
    """Read a positions sidecar ("vertex x y [z]", 1-based vertex ids)."""
    rows: dict[int, list[float]] = {}
    dims = None
    for lineno, text in _content_lines(path):
        parts = text.split()
        if len(parts) not in (3, 4):
            raise GraphFormatError(
                f"expected 'vertex x y [z]', got {len(parts)} fields", path, lineno
            )
        try:
            v = int(parts[0])
            coords = [float(p) for p in parts[1:]]
        except ValueError as exc:
            raise GraphFormatError(f"unparseable positions line: {exc}", path, lineno)
        if dims is None:
            dims = len(coords)
        elif len(coords) != dims:
            raise GraphFormatError(
                f"dimension mismatch: expected {dims} coordinates, got {len(coords)}",
                path,
                lineno,
            )
        if not 1 <= v <= n:
            raise GraphFormatError(f"vertex id {v} out of range 1..{n}", path, lineno)
        if v - 1 in rows:
            raise GraphFormatError(f"duplicate position for vertex {v}", path, lineno)
        rows[v - 1] = coords
    if len(rows) != n:
        raise GraphFormatError(f"positions cover {len(rows)} of {n} vertices", path)
    return np.array([rows[i] for i in range(n)], dtype=float)


def load_graph(path, positions_path=None) -> Graph:
    """Read an edge-list file (see `save_graph` for the format).

    Raises GraphFormatError with a line number on malformed input and
    GraphError on invariant violations (self-loop, duplicate edge).
    """
    edges: list[tuple[int, int, float]] = []
    header_n = None
    directed = True
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            comment = None
            if "#" in raw:
                body, comment = raw.split("#", 1)
            else:
                body = raw
            if comment is not None:
                c = comment.strip()
                if c.startswith("n="):
                    header_n = int(c[2:])
                elif c.startswith("directed="):
                    directed = c[9:].strip().lower() != "false"
            text = body.strip()
            if not text:
                continue
            parts = text.split()
            if len(parts) != 3:
                raise GraphFormatError(
                    f"expected 'src dst weight', got {len(parts)} fields", path, lineno
                )
            try:
                src, dst = int(parts[0]), int(parts[1])
                w = float(parts[2])
            except ValueError as exc:
                raise GraphFormatError(f"unparseable edge line: {exc}", path, lineno)
            if src < 1 or dst < 1:
                raise GraphFormatError("vertex indices are 1-based", path, lineno)
            if src == dst:
                raise GraphFormatError(f"self-loop at vertex {src}", path, lineno)
            edges.append((src - 1, dst - 1, w))
    n = header_n
    if n is None:
        if not edges:
            raise GraphFormatError("empty edge list and no '# n=' header", path)
        n = max(max(s, d) for s, d, _ in edges) + 1
    positions = load_positions(positions_path, n) if positions_path else None
    return Graph.from_edges(n, edges, directed=directed, positions=positions)
