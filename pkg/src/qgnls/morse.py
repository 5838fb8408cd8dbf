"""Second variation on the mass sphere and inertia-based Morse counts.

On the free nodes of a state u the Hessian of E_ρ + (λ/2)‖·‖² is

    H = K + λW − ρ(p−1) W diag(|u|^{p−2}),

and the tangent space of the discrete sphere is {v : vᵀWu = 0}.  Negative
directions are measured against the discrete H¹ Gram matrix G = K + W.

Counting uses Sylvester inertia: for A = H + θG and c = Wu,

    n₋(A on c⊥) = n₋(A) − [cᵀA⁻¹c < 0],

so a single symmetric factorization of A (plus one solve) gives the count
without forming a basis of the tangent space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as sla

from .spectra import DiscreteOperators

DENSE_LIMIT = 2000


class FactorizationError(RuntimeError):
    pass


@dataclass
class ConstrainedHessian:
    H: sp.csr_matrix
    G: sp.csr_matrix
    c: np.ndarray  # W u, the constraint normal
    u: np.ndarray
    weights: np.ndarray
    lam: float

    @property
    def size(self) -> int:
        return self.H.shape[0]

    def project(self, v: np.ndarray) -> np.ndarray:
        """W-orthogonal projection onto the tangent space."""
        return v - self.u * (self.c @ v) / (self.c @ self.u)

    def form(self, v: np.ndarray, w: np.ndarray | None = None) -> float:
        w = v if w is None else w
        return float(v @ (self.H @ w))


def hessian_from(ops: DiscreteOperators, u, lam: float, rho: float, p: float) -> ConstrainedHessian:
    x = ops.restrict(u)
    w = ops.lumped
    H = (ops.stiffness + sp.diags(lam * w - rho * (p - 1) * w * np.abs(x) ** (p - 2))).tocsr()
    G = (ops.stiffness + sp.diags(w)).tocsr()
    return ConstrainedHessian(H, G, w * x, x, w, float(lam))


def build_hessian(state) -> ConstrainedHessian:
    return hessian_from(state.ops, state.u, state.lam, state.rho, state.p)


def _sparse_inertia(A: sp.spmatrix) -> tuple[int, object]:
    """Negative count of a symmetric matrix via an unpivoted symmetric LU."""
    A = sp.csc_matrix(A)
    try:
        lu = sla.splu(A, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                      options=dict(SymmetricMode=True))
    except RuntimeError as exc:
        raise FactorizationError(f"factorization failed: {exc}") from exc
    if not np.array_equal(lu.perm_r, lu.perm_c):
        raise FactorizationError("factorization pivoted off the diagonal; inertia unavailable")
    d = lu.U.diagonal()
    if np.any(d == 0) or not np.all(np.isfinite(d)):
        raise FactorizationError("singular matrix: zero pivot")
    return int(np.sum(d < 0)), lu


def negative_count(hess: ConstrainedHessian, theta: float = 0.0, constrained: bool = True) -> int:
    """Number of pencil eigenvalues below −θ, on the tangent space or the full space."""
    if theta < 0:
        raise ValueError("theta must be nonnegative")
    A = (hess.H + theta * hess.G).tocsc()
    n_neg, lu = _sparse_inertia(A)
    if not constrained:
        return n_neg
    s = float(hess.c @ lu.solve(hess.c))
    return n_neg - (1 if s < 0 else 0)


def _tangent_basis(hess: ConstrainedHessian) -> np.ndarray:
    return la.null_space(hess.c[None, :])


def dense_pencil(hess: ConstrainedHessian, constrained: bool = True) -> tuple[np.ndarray, np.ndarray]:
    H = hess.H.toarray()
    G = hess.G.toarray()
    if not constrained:
        return la.eigh(H, G)
    Z = _tangent_basis(hess)
    vals, y = la.eigh(Z.T @ H @ Z, Z.T @ G @ Z)
    return vals, Z @ y


def dense_morse_index(hess: ConstrainedHessian, theta: float = 0.0, constrained: bool = True) -> int:
    vals, _ = dense_pencil(hess, constrained)
    return int(np.sum(vals < -theta))


def approximate_morse_index(hess: ConstrainedHessian, theta: float = 0.0, method: str = "inertia") -> int:
    """Tangent-space count of directions with D²[φ,φ] ≤ −θ‖φ‖²_{H¹} (strictly below)."""
    if theta < 0:
        raise ValueError("theta must be nonnegative")
    if method == "dense":
        return dense_morse_index(hess, theta)
    try:
        return negative_count(hess, theta)
    except FactorizationError:
        if hess.size <= DENSE_LIMIT:
            return dense_morse_index(hess, theta)
        raise


def full_space_index(hess: ConstrainedHessian, theta: float = 0.0) -> int:
    return negative_count(hess, theta, constrained=False)


def most_negative(hess: ConstrainedHessian, k: int = 5):
    """Lowest ``k`` tangent-space pencil eigenvalues and their residual norms."""
    n = hess.size
    k = min(k, n - 2)
    if n <= DENSE_LIMIT:
        vals, vecs = dense_pencil(hess)
        vals, vecs = vals[:k], vecs[:, :k]
    else:
        # shift-invert below the spectrum with the constraint in a bordered system
        bound = float(np.max(np.abs((hess.H - hess.G).diagonal() / hess.G.diagonal())))
        sigma = -(bound + 1.0)
        border = sp.bmat([[hess.H - sigma * hess.G, sp.csc_matrix(hess.c[:, None])],
                          [sp.csc_matrix(hess.c[None, :]), None]]).tocsc()
        lu = sla.splu(border)

        def solve(x):
            rhs = np.concatenate([x, [0.0]])
            return lu.solve(rhs)[:n]
        op = sla.LinearOperator((n, n), matvec=solve, dtype=float)
        v0 = hess.project(np.random.default_rng(0).standard_normal(n))
        vals, vecs = sla.eigsh(hess.H, k=k, M=hess.G, sigma=sigma, OPinv=op, which="LM", v0=v0)
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
    res = []
    for j in range(vecs.shape[1]):
        x = vecs[:, j]
        r = hess.H @ x - vals[j] * (hess.G @ x)
        r = r - hess.c * (hess.c @ r) / (hess.c @ hess.c)
        res.append(float(np.linalg.norm(r) / math.sqrt(x @ (hess.G @ x))))
    return np.asarray(vals), np.asarray(res)


@dataclass
class IndexCertificate:
    index_theta0: int
    index_theta: int
    theta: float
    full_index: int
    eigenvalues: np.ndarray
    residuals: np.ndarray

    @property
    def passed(self) -> bool:
        return self.index_theta <= 1

    @property
    def verdict(self) -> str:
        return "PASS" if self.passed else "FAIL"


def index_certificate(state, theta: float = 1e-8) -> IndexCertificate:
    """Counts at θ = 0 and θ; the verdict uses the thresholded count."""
    hess = build_hessian(state)
    i0 = approximate_morse_index(hess, 0.0)
    it = approximate_morse_index(hess, theta)
    full = full_space_index(hess, 0.0)
    vals, res = most_negative(hess, 5)
    state.morse_index = it
    return IndexCertificate(i0, it, theta, full, vals, res)
