"""Left-eigenvector extraction and ordering for Laplacian and adjacency
matrices, plus the eigenvector coordinate system used for influence analysis.

A left eigenvector is a row vector v with v M = lambda v, i.e. a right
eigenvector of M^T.  Ordering is by matrix kind: "laplacian" ascends by the
eigenvalue's real part (the zero eigenvalue first), "adjacency" descends by
magnitude (spectral radius first).  Only the real parts of the eigenvectors
are exposed; complex pairs share a real part, and coordinate selection keeps
a single column per pair.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .graphs import Graph, LaplacianView

RESIDUAL_RTOL = 1e-8
DUPLICATE_COLUMN_TOL = 1e-10
DENSE_LIMIT = 2000


class SpectralError(RuntimeError):
    """Eigensolver failure; carries the worst residual when available."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class InsufficientVectorsError(SpectralError):
    """The spectrum holds fewer distinct real-part vectors than requested."""


@dataclass(frozen=True)
class SpectralBasis:
    """Ordered left eigenpairs of one matrix.

    ``vectors[i]`` is the real part of the i-th left eigenvector (length n),
    phase-normalised so its largest-magnitude component is real positive.
    ``residuals[i]`` is the relative backward error of the complex pair.
    """

    kind: str
    eigenvalues: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray

    @property
    def n(self) -> int:
        return self.vectors.shape[1]

    @property
    def count(self) -> int:
        return self.vectors.shape[0]


@dataclass(frozen=True)
class InfluenceCoordinates:
    """Per-vertex coordinates over y distinct eigenvector real parts.

    ``e`` is n x y (column 0 is the first eigenvector), ``s`` the Euclidean
    norm of each vertex row, and ``source_indices`` records which basis
    vectors supplied each column after conjugate-pair deduplication.
    """

    y: int
    e: np.ndarray
    s: np.ndarray
    source_indices: tuple[int, ...]


def _as_matrix(m, kind=None):
    if isinstance(m, LaplacianView):
        return m.matrix, kind or "laplacian"
    if isinstance(m, Graph):
        return m.adjacency, kind or "adjacency"
    if kind is None:
        raise ValueError("kind ('laplacian' or 'adjacency') required for a raw matrix")
    return m, kind


def _order_key(eigenvalues, kind):
    re, im = eigenvalues.real, eigenvalues.imag
    if kind == "laplacian":
        # Ascending real part; positive-imaginary conjugate partner first.
        return np.lexsort((-im, np.abs(im), re))
    if kind == "adjacency":
        return np.lexsort((-im, np.abs(im), -re, -np.abs(eigenvalues)))
    raise ValueError(f"unknown matrix kind {kind!r}")


def _phase_normalize(vec):
    """Rotate a complex eigenvector so its largest component is real positive."""
    j = int(np.argmax(np.abs(vec)))
    pivot = vec[j]
    if pivot == 0:
        return vec
    return vec * (pivot.conjugate() / abs(pivot))


def _residual(matrix, lam, vec, norm_inf):
    r = vec @ matrix - lam * vec
    return float(np.abs(r).max() / max(norm_inf, 1e-300))


def left_eigs(m, count, kind=None, solver="auto") -> SpectralBasis:
    """The `count` most dominant left eigenpairs of a matrix.

    ``m`` may be a LaplacianView, a Graph (adjacency), or a raw matrix with
    an explicit ``kind``.  ``solver`` is "auto" (dense up to n=2000, then
    iterative), "dense", or "iterative".  Raises SpectralError when any
    returned pair misses the backward-error bound.
    """
    matrix, kind = _as_matrix(m, kind)
    n = matrix.shape[0]
    if not 1 <= count <= n:
        raise ValueError(f"count must be in 1..{n}, got {count}")
    if solver == "auto":
        solver = "dense" if n <= DENSE_LIMIT else "iterative"
    if solver == "iterative" and count >= n - 1:
        solver = "dense"

    if solver == "dense":
        dense = matrix.toarray() if sp.issparse(matrix) else np.asarray(matrix, dtype=float)
        w, v = scipy.linalg.eig(dense.T)
        vecs = v.T  # rows are left eigenvectors of the original matrix
        mat_for_resid = dense
    elif solver == "iterative":
        csc = sp.csc_matrix(matrix, dtype=float)
        v0 = np.ones(n) / np.sqrt(n)
        try:
            if kind == "laplacian":
                w, v = spla.eigs(csc.T, k=count, sigma=-1e-6, which="LM", v0=v0)
            else:
                w, v = spla.eigs(csc.T, k=count, which="LM", v0=v0)
        except spla.ArpackNoConvergence as exc:
            raise SpectralError(f"iterative eigensolver did not converge: {exc}") from exc
        vecs = v.T
        mat_for_resid = csc
    else:
        raise ValueError(f"unknown solver {solver!r}")

    order = _order_key(w, kind)[:count]
    w = w[order]
    vecs = np.array([_phase_normalize(vecs[i]) for i in order])

    norm_inf = float(np.abs(mat_for_resid).sum(axis=1).max())
    residuals = np.array([_residual(mat_for_resid, w[i], vecs[i], norm_inf) for i in range(len(w))])
    worst = residuals.max(initial=0.0)
    if worst > RESIDUAL_RTOL:
        raise SpectralError(
            f"eigenpair residual {worst:.3e} exceeds {RESIDUAL_RTOL:.0e} * ||M||_inf",
            residual=worst,
        )
    return SpectralBasis(kind=kind, eigenvalues=w, vectors=vecs.real.copy(), residuals=residuals)


def _columns_identical(a, b):
    # Sign-aligned comparison: conjugate partners share a real part exactly,
    # but a solver may hand back either sign.
    return min(np.abs(a - b).max(), np.abs(a + b).max()) <= DUPLICATE_COLUMN_TOL


def select_input_vectors(basis: SpectralBasis, y: int) -> InfluenceCoordinates:
    """Pick y pairwise-distinct real-part columns from an ordered basis.

    A column whose real part duplicates an earlier one (its conjugate
    partner) is skipped and the next dominant eigenvector taken.  Raises
    InsufficientVectorsError when the basis runs out.
    """
    if y < 1:
        raise ValueError("y must be >= 1")
    cols = []
    taken: list[int] = []
    for i in range(basis.count):
        cand = basis.vectors[i]
        if any(_columns_identical(cand, c) for c in cols):
            continue
        cols.append(cand)
        taken.append(i)
        if len(cols) == y:
            break
    if len(cols) < y:
        raise InsufficientVectorsError(
            f"only {len(cols)} distinct real-part vectors among {basis.count} eigenpairs"
        )
    e = np.column_stack(cols)
    s = np.sqrt((e**2).sum(axis=1))
    return InfluenceCoordinates(y=y, e=e, s=s, source_indices=tuple(taken))


def influence_coordinates(m, y, kind=None, solver="auto") -> InfluenceCoordinates:
    """Coordinate system of y distinct eigenvector real parts for a matrix,
    requesting extra eigenpairs as conjugate pairs collapse columns."""
    matrix, kind = _as_matrix(m, kind)
    n = matrix.shape[0]
    count = min(n, 2 * y + 2)
    while True:
        basis = left_eigs(matrix, count, kind=kind, solver=solver)
        try:
            return select_input_vectors(basis, y)
        except InsufficientVectorsError:
            if count >= n:
                raise
            count = min(n, count * 2)


def export_basis_csv(basis: SpectralBasis, path) -> None:
    """CSV export: eigenvalue header row, then n rows of vector entries."""
    header = ",".join(_fmt_complex(lam) for lam in basis.eigenvalues)
    rows = [header]
    for j in range(basis.n):
        rows.append(",".join(f"{basis.vectors[i][j]:.17g}" for i in range(basis.count)))
    with open(path, "w") as fh:
        fh.write("\n".join(rows) + "\n")


def _fmt_complex(lam):
    if lam.imag == 0:
        return f"{lam.real:.17g}"
    sign = "+" if lam.imag >= 0 else "-"
    return f"{lam.real:.17g}{sign}{abs(lam.imag):.17g}j"
