"""Kirchhoff Laplacian on a meshed graph: P1 assembly and bottom of the spectrum."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as sla

from .functions import GraphFunction, Mesh
from .graph import MetricGraph

DIRICHLET = "dirichlet"
NEUMANN = "neumann"


class SpectrumError(RuntimeError):
    def __init__(self, msg, residual=None):
        super().__init__(msg)
        self.residual = residual


@dataclass
class DiscreteOperators:
    """Stiffness and mass on the free nodes of a mesh.

    ``free`` maps reduced indices back to mesh nodes.  Kirchhoff conditions are
    natural for the form, so only Dirichlet ends need removing.
    """

    mesh: Mesh
    stiffness: sp.csr_matrix
    mass: sp.csr_matrix
    lumped: np.ndarray
    free: np.ndarray
    far_bc: str = DIRICHLET
    leaf_bc: str = NEUMANN

    @property
    def size(self) -> int:
        return len(self.free)

    def restrict(self, u: GraphFunction | np.ndarray) -> np.ndarray:
        v = u.values if isinstance(u, GraphFunction) else np.asarray(u)
        return v[self.free]

    def extend(self, x: np.ndarray) -> GraphFunction:
        v = np.zeros(self.mesh.n_nodes)
        v[self.free] = x
        return GraphFunction(self.mesh, v)


def _global_matrices(mesh: Mesh):
    a, b, h = mesh.elem_a, mesh.elem_b, mesh.elem_h
    rows = np.concatenate([a, b, a, b])
    cols = np.concatenate([a, b, b, a])
    n = mesh.n_nodes
    k = sp.coo_matrix((np.concatenate([1 / h, 1 / h, -1 / h, -1 / h]), (rows, cols)), shape=(n, n)).tocsr()
    m = sp.coo_matrix((np.concatenate([h / 3, h / 3, h / 6, h / 6]), (rows, cols)), shape=(n, n)).tocsr()
    return k, m


def dirichlet_nodes(mesh: Mesh, far_bc: str = DIRICHLET, leaf_bc: str = NEUMANN) -> np.ndarray:
    for bc in (far_bc, leaf_bc):
        if bc not in (DIRICHLET, NEUMANN):
            raise ValueError(f"unknown boundary condition {bc!r}")
    fixed = []
    if far_bc == DIRICHLET:
        fixed.extend(mesh.far_nodes.tolist())
    if leaf_bc == DIRICHLET:
        g = mesh.graph
        fixed.extend(mesh.vertex_index[v] for v in g.vertices if g.degree(v) == 1)
    return np.array(sorted(set(fixed)), dtype=np.int64)


def assemble(g: MetricGraph | Mesh, h: float | None = None, far_bc: str = DIRICHLET,
             leaf_bc: str = NEUMANN, truncation: float | None = None) -> DiscreteOperators:
    """P1 stiffness/mass with shared vertex nodes.

    ``far_bc`` applies to the cut ends of half-lines, ``leaf_bc`` to degree-one
    graph vertices (Kirchhoff there is the Neumann condition).
    """
    mesh = g if isinstance(g, Mesh) else Mesh(g, h, truncation)
    k, m = _global_matrices(mesh)
    fixed = dirichlet_nodes(mesh, far_bc, leaf_bc)
    keep = np.ones(mesh.n_nodes, bool)
    keep[fixed] = False
    free = np.flatnonzero(keep)
    if free.size == 0:
        raise ValueError("no free nodes left after boundary conditions")
    kf = k[free][:, free].tocsr()
    mf = m[free][:, free].tocsr()
    return DiscreteOperators(mesh, kf, mf, mesh.weights[free], free, far_bc, leaf_bc)


@dataclass
class SpectralResult:
    eigenvalues: np.ndarray
    eigenvectors: list[GraphFunction]
    residuals: np.ndarray
    truncation_length: float
    far_bc: str
    vectors: np.ndarray = field(repr=False, default=None)


def _residuals(k, m, vals, vecs):
    r = k @ vecs - (m @ vecs) * vals
    return np.linalg.norm(r, axis=0) / np.linalg.norm(vecs, axis=0)


def bottom_spectrum(ops: DiscreteOperators, k: int = 1, seed: int = 0, sigma: float = -1e-8,
                    tol: float = 1e-8, maxiter: int | None = None) -> SpectralResult:
    """The ``k`` smallest eigenpairs of (stiffness, mass), M-normalized."""
    n = ops.size
    if not 1 <= k < n:
        raise ValueError(f"need 1 <= k < {n}")
    K, M = ops.stiffness, ops.mass
    if n <= 400:
        vals, vecs = la.eigh(K.toarray(), M.toarray(), subset_by_index=[0, k - 1])
    else:
        rng = np.random.default_rng(seed)
        v0 = rng.standard_normal(n)
        try:
            vals, vecs = sla.eigsh(K.tocsc(), k=k, M=M.tocsc(), sigma=sigma, which="LM",
                                   v0=v0, tol=0, maxiter=maxiter or 50 * n)
        except sla.ArpackNoConvergence as exc:
            res = _residuals(K, M, exc.eigenvalues, exc.eigenvectors) if len(exc.eigenvalues) else None
            raise SpectrumError("shift-invert iteration did not converge", res) from exc
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
    # fix normalization and sign so output is reproducible
    for j in range(vecs.shape[1]):
        x = vecs[:, j]
        x /= math.sqrt(x @ (M @ x))
        i = np.argmax(np.abs(x))
        if x[i] < 0:
            x *= -1
    res = _residuals(K, M, vals, vecs)
    scale = max(1.0, float(np.max(np.abs(vals))))
    if np.any(res > tol * scale):
        raise SpectrumError(f"eigenpair residual {res.max():.3e} above tolerance", res)
    return SpectralResult(np.asarray(vals), [ops.extend(vecs[:, j]) for j in range(vecs.shape[1])],
                          res, ops.mesh.truncation, ops.far_bc, vecs)


def rayleigh(ops: DiscreteOperators, u: GraphFunction | np.ndarray) -> float:
    """Squared quotient ∫|u'|² / ∫|u|² on the free nodes."""
    x = ops.restrict(u)
    den = float(x @ (ops.mass @ x))
    if den == 0:
        raise ValueError("zero function")
    return float(x @ (ops.stiffness @ x)) / den


@dataclass
class ProbeResult:
    rows: list[tuple[float, float, float]]  # (size, lambda0, residual)
    exponent: float
    limit: float
    limit_err: float
    verdict: str

    def to_csv(self, size_label: str = "truncation") -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([size_label, "lambda0", "residual"])
        for s, lam, r in self.rows:
            w.writerow([repr(float(s)), f"{lam:.12e}", f"{r:.3e}"])
        return buf.getvalue()


CONSISTENT = "consistent with inf sigma = 0"
GAP = "gap >= c"
INCONCLUSIVE = "inconclusive"


def fit_decay(sizes, values) -> tuple[float, float, float]:
    """Log-log slope of values(size), and the limit c of a fit c + a/size²."""
    s = np.asarray(sizes, float)
    v = np.asarray(values, float)
    slope = float(np.polyfit(np.log(s), np.log(np.maximum(v, 1e-300)), 1)[0]) if len(s) >= 2 else math.nan
    if len(s) >= 3:
        A = np.column_stack([np.ones_like(s), s**-2.0])
        coef, *_ = np.linalg.lstsq(A, v, rcond=None)
        resid = v - A @ coef
        dof = max(len(s) - 2, 1)
        cov = np.linalg.pinv(A.T @ A) * float(resid @ resid) / dof
        return slope, float(coef[0]), float(math.sqrt(max(cov[0, 0], 0.0)))
    return slope, math.nan, math.nan


def assumption1_probe(g: MetricGraph | Callable[[float], MetricGraph], schedule: Sequence[float],
                      h: float = 0.05, far_bc: str = DIRICHLET, leaf_bc: str = NEUMANN,
                      seed: int = 0) -> ProbeResult:
    """λ₀ along an increasing size schedule.

    With a graph, the schedule is a list of half-line truncation lengths.  With
    a callable, each entry is passed to it to build the next graph (cell count,
    tree depth, ...).
    """
    sched = [float(s) for s in schedule]
    if any(b <= a for a, b in zip(sched, sched[1:])):
        raise ValueError("schedule must be increasing")
    rows = []
    for s in sched:
        if callable(g):
            ops = assemble(g(s), h, far_bc, leaf_bc)
        else:
            ops = assemble(g, h, far_bc, leaf_bc, truncation=s)
        res = bottom_spectrum(ops, 1, seed)
        rows.append((s, float(max(res.eigenvalues[0], 0.0)), float(res.residuals[0])))
    slope, limit, err = fit_decay([r[0] for r in rows], [r[1] for r in rows])
    last = rows[-1][1]
    if -2.5 <= slope <= -1.5 and last < 1e-3:
        verdict = CONSISTENT
    elif math.isfinite(limit) and limit > 0 and limit > 3 * err:
        verdict = GAP
    else:
        verdict = INCONCLUSIVE
    return ProbeResult(rows, slope, limit, err, verdict)


def tent(mesh: Mesh, edge: int, center: float, half_width: float) -> GraphFunction:
    """Tent of height 1 on one edge; arclength measured from the tail."""
    return mesh.sample(lambda k, s: np.maximum(0.0, 1 - np.abs(s - center) / half_width)
                       if k == edge else np.zeros_like(s))
