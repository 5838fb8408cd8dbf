"""Positive stationary states of  −u'' + λu = ρ u^{p−1}  with Kirchhoff vertices.

Newton's method at fixed λ on the lumped-mass P1 system

    K u + λ W u − ρ W u^{p−1} = 0,

with W the trapezoid weights, and an outer secant iteration on log μ(λ) to
reach a prescribed mass.  The remaining functions evaluate the integral
identities and bounds satisfied by exact solutions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as sla
from scipy import special

from .functions import GraphFunction, Mesh, dirichlet_energy, distance_from, l2_mass
from .graph import MetricGraph
from .phase import LevelClass, PhaseParams, classify_level, kappa_p, mass_over_period, period
from .spectra import DIRICHLET, NEUMANN, DiscreteOperators, assemble


class SolverError(RuntimeError):
    pass


class ZeroSolution(SolverError):
    pass


class SignChanging(SolverError):
    pass


class NewtonDiverged(SolverError):
    pass


class MassNotBracketed(SolverError):
    def __init__(self, msg, mu_range=None, trace=None):
        super().__init__(msg)
        self.mu_range = mu_range
        self.trace = trace


# ------------------------------------------------------------ soliton


def soliton_constants(lam: float, rho: float, p: float) -> tuple[float, float]:
    if not lam > 0:
        raise ValueError("lambda must be positive")
    a = (p * lam / (2 * rho)) ** (1 / (p - 2))
    b = (p - 2) * math.sqrt(lam) / 2
    return a, b


def sech_power(x, p):
    # sech^{2/(p−2)}, safe for large arguments
    x = np.abs(np.asarray(x, float))
    return np.exp(-(2 / (p - 2)) * (x + np.log1p(np.exp(-2 * x)) - math.log(2)))


def soliton_profile(lam: float, rho: float, p: float, center, mesh: Mesh) -> GraphFunction:
    """A·sech^{2/(p−2)}(B·d(x, center)) sampled on the mesh."""
    a, b = soliton_constants(lam, rho, p)
    d = distance_from(mesh, center)
    return GraphFunction(mesh, a * sech_power(b * d, p))


def line_soliton_mass(lam: float, rho: float, p: float) -> float:
    """Mass of the soliton on the real line."""
    a, b = soliton_constants(lam, rho, p)
    return a * a / b * special.beta(2 / (p - 2), 0.5)


def line_soliton_lambda(mu: float, rho: float, p: float) -> float:
    """Inverse of :func:`line_soliton_mass` in λ (power law)."""
    mu1 = line_soliton_mass(1.0, rho, p)
    expo = (6 - p) / (2 * (p - 2))
    return (mu / mu1) ** (1 / expo)


# ------------------------------------------------------------ states


@dataclass
class StationaryState:
    ops: DiscreteOperators
    u: GraphFunction
    lam: float
    rho: float
    p: float
    residual: float
    newton_iterations: int = 0
    morse_index: int | None = None
    meta: dict = field(default_factory=dict)

    @property
    def mesh(self) -> Mesh:
        return self.u.mesh

    @property
    def graph(self) -> MetricGraph:
        return self.mesh.graph

    @property
    def mu(self) -> float:
        return l2_mass(self.u)

    @property
    def grad_sq(self) -> float:
        return dirichlet_energy(self.u)

    @property
    def power_integral(self) -> float:
        return float(self.mesh.weights @ np.abs(self.u.values) ** self.p)

    @property
    def energy(self) -> float:
        return 0.5 * self.grad_sq - self.rho / self.p * self.power_integral

    @property
    def action(self) -> float:
        return 0.5 * self.grad_sq + self.rho / self.p * self.power_integral - 0.5 * self.lam * self.mu


def _residual(ops: DiscreteOperators, x, lam, rho, p):
    w = ops.lumped
    return ops.stiffness @ x + lam * w * x - rho * w * np.abs(x) ** (p - 2) * x


def _jacobian(ops: DiscreteOperators, x, lam, rho, p):
    w = ops.lumped
    return (ops.stiffness + sp.diags(lam * w - rho * (p - 1) * w * np.abs(x) ** (p - 2))).tocsc()


def solve_fixed_lambda(ops: DiscreteOperators, lam: float, rho: float, p: float, guess,
                       tol: float = 1e-10, maxiter: int = 100) -> StationaryState:
    """Damped Newton from ``guess``; rejects zero and sign-changing limits."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    x = ops.restrict(guess).astype(float).copy()
    scale0 = float(np.max(np.abs(x))) if x.size else 0.0
    if scale0 == 0:
        raise ZeroSolution("zero solution: initial guess vanishes")
    f = _residual(ops, x, lam, rho, p)
    fn = float(np.linalg.norm(f))
    it = 0
    while fn > tol * np.linalg.norm(x):
        if it >= maxiter:
            raise NewtonDiverged(f"Newton did not converge in {maxiter} steps (residual {fn:.3e})")
        J = _jacobian(ops, x, lam, rho, p)
        try:
            dx = sla.splu(J).solve(-f)
        except RuntimeError as exc:
            raise NewtonDiverged(f"singular Jacobian: {exc}") from exc
        t = 1.0
        while True:
            xn = x + t * dx
            fnew = _residual(ops, xn, lam, rho, p)
            fnn = float(np.linalg.norm(fnew))
            if fnn <= (1 - 1e-4 * t) * fn:
                break
            t *= 0.5
            if t < 2.0**-30:
                raise NewtonDiverged(f"line search failed at residual {fn:.3e}")
        x, f, fn = xn, fnew, fnn
        it += 1
        if np.max(np.abs(x)) < 1e-8 * scale0:
            raise ZeroSolution("zero solution: Newton collapsed to u = 0")
    umax = float(np.max(np.abs(x)))
    if umax < 1e-8 * scale0:
        raise ZeroSolution("zero solution")
    if np.min(x) < 0 and np.max(x) > 0:
        raise SignChanging("sign-changing solution rejected")
    if np.max(x) <= 0:
        x = -x  # odd nonlinearity: −u solves too
    if np.min(x) <= 0:
        raise SignChanging("solution vanishes at a free node")
    u = ops.extend(x)
    return StationaryState(ops, u, float(lam), float(rho), float(p), fn / float(np.linalg.norm(x)), it)


# ------------------------------------------------------------ continuation


@dataclass
class TraceEntry:
    lam: float
    mu: float
    iterations: int
    residual: float


@dataclass
class ContinuationTrace:
    center: object
    entries: list[TraceEntry] = field(default_factory=list)
    bracket: tuple[float, float] | None = None


def default_centers(g: MetricGraph) -> list:
    """Vertex of maximal degree (if ≥ 3), midpoint of the longest edge, then the rest."""
    out: list = []
    v = g.max_degree_vertex()
    finite = [k for k, e in enumerate(g.edges) if not e.is_half_line]
    if g.degree(v) >= 3:
        out.append(v)
    if finite:
        k = max(finite, key=lambda k: g.edges[k].length)
        out.append((k, 0.5 * g.edges[k].length))
    if v not in out:
        out.append(v)
    for w in g.vertices:
        if len(out) >= 3:
            break
        if w not in out:
            out.append(w)
    return out[:3]


def estimate_lambda(g: MetricGraph, mu: float, rho: float, p: float, center) -> float:
    """λ for which a soliton split into d(center) halves carries mass μ."""
    d = g.degree(center) if isinstance(center, str) else 2
    return line_soliton_lambda(2 * mu / d, rho, p)


def auto_discretization(lam_est: float, p: float, g: MetricGraph, resolution: float = 0.01):
    """Mesh width resolving the soliton width and a truncation for its tails.

    h is snapped to divide the shortest finite edge and the truncation to a
    multiple of h, so commensurate edges meet a vertex with equal spacing.
    Unequal spacing at a vertex splits degenerate Hessian directions by O(h²).
    """
    b = (p - 2) * math.sqrt(lam_est) / 2
    h = resolution / b
    finite = [e.length for e in g.edges if not e.is_half_line]
    if finite:
        short = min(finite)
        h = short / max(2, math.ceil(short / h))
    trunc = 40.0 / math.sqrt(lam_est)
    trunc = h * math.ceil(trunc / h)
    return h, trunc


def _solve_at(ops, lam, rho, p, center, guess=None, tol=1e-10):
    if guess is None:
        guess = soliton_profile(lam, rho, p, center, ops.mesh)
    return solve_fixed_lambda(ops, lam, rho, p, guess, tol=tol)


def continuation_to_mass(g: MetricGraph, mu_target: float, rho: float = 1.0, p: float = 8.0,
                         lam_grid=None, h: float | None = None, truncation: float | None = None,
                         centers=None, far_bc: str = DIRICHLET, leaf_bc: str = NEUMANN,
                         ops: DiscreteOperators | None = None, mass_rtol: float = 1e-8,
                         newton_tol: float = 1e-10, accept=None) -> tuple[StationaryState, ContinuationTrace]:
    """Solve along a λ grid, bracket μ_target and refine by a secant in log-log.

    Centers are tried in turn.  ``accept``, if given, is called on each
    converged state; a state it rejects is set aside and the next center tried.
    """
    if not mu_target > 0:
        raise ValueError("target mass must be positive")
    centers = list(centers) if centers is not None else default_centers(g)
    errors = []
    for center in centers:
        lam_est = estimate_lambda(g, mu_target, rho, p, center)
        grid = np.sort(np.asarray(lam_grid, float)) if lam_grid is not None else lam_est * 2.0 ** np.arange(-2, 3)
        if ops is None:
            hh, tt = auto_discretization(lam_est, p, g)
            o = assemble(g, h or hh, far_bc, leaf_bc, truncation or tt)
        else:
            o = ops
        trace = ContinuationTrace(center)
        try:
            state = _continue_one(o, mu_target, rho, p, grid, center, trace, mass_rtol, newton_tol)
        except SolverError as exc:
            errors.append((center, exc))
            continue
        state.meta.update(center=center, trace=trace)
        if accept is not None and not accept(state):
            errors.append((center, SolverError(f"state at lambda={state.lam:.6g} rejected")))
            continue
        return state, trace
    mus = [e.mu for _, exc in errors if isinstance(exc, MassNotBracketed) and exc.trace
           for e in exc.trace.entries]
    rng = (min(mus), max(mus)) if mus else None
    detail = "; ".join(f"{c}: {e}" for c, e in errors)
    raise MassNotBracketed(f"target mass {mu_target} not reached ({detail})", rng)


def _continue_one(ops, mu_target, rho, p, grid, center, trace, mass_rtol, newton_tol):
    states = []
    for lam in grid:
        try:
            st = _solve_at(ops, lam, rho, p, center, tol=newton_tol)
        except SolverError:
            continue
        states.append(st)
        trace.entries.append(TraceEntry(st.lam, st.mu, st.newton_iterations, st.residual))
        if abs(st.mu - mu_target) <= mass_rtol * mu_target:
            trace.bracket = (st.lam, st.lam)
            return st
    if len(states) < 2:
        raise MassNotBracketed("fewer than two grid solves succeeded", None, trace)
    pair = None
    for a, b in zip(states, states[1:]):
        if (a.mu - mu_target) * (b.mu - mu_target) < 0:
            pair = (a, b)
            break
    if pair is None:
        mus = [s.mu for s in states]
        raise MassNotBracketed(f"mass range [{min(mus):.6g}, {max(mus):.6g}] misses {mu_target}",
                               (min(mus), max(mus)), trace)
    a, b = pair
    trace.bracket = (a.lam, b.lam)
    # Illinois variant of regula falsi on log μ − log μ_target against log λ
    fa = math.log(a.mu / mu_target)
    fb = math.log(b.mu / mu_target)
    side = 0
    for _ in range(60):
        xa, xb = math.log(a.lam), math.log(b.lam)
        xc = (xa * fb - xb * fa) / (fb - fa)
        guess = a.u if abs(xc - xa) < abs(xc - xb) else b.u
        try:
            c = _solve_at(ops, math.exp(xc), rho, p, center, guess=guess, tol=newton_tol)
        except SolverError:
            c = _solve_at(ops, math.exp(xc), rho, p, center, tol=newton_tol)
        trace.entries.append(TraceEntry(c.lam, c.mu, c.newton_iterations, c.residual))
        fc = math.log(c.mu / mu_target)
        if abs(c.mu - mu_target) <= mass_rtol * mu_target:
            return c
        if fc * fb < 0:
            a, fa = b, fb
            b, fb = c, fc
            side = 0
        else:
            b, fb = c, fc
            side += 1
            if side >= 1:
                fa *= 0.5
    raise MassNotBracketed("secant refinement did not reach the mass tolerance", None, trace)


# ------------------------------------------------------------ identities


def lagrange_multiplier(u: GraphFunction, rho: float, p: float) -> float:
    m = l2_mass(u)
    if m == 0:
        raise ValueError("zero function")
    pw = float(u.mesh.weights @ np.abs(u.values) ** p)
    return (rho * pw - dirichlet_energy(u)) / m


def pohozaev_residual(u: GraphFunction, lam: float, rho: float, p: float) -> float:
    pw = float(u.mesh.weights @ np.abs(u.values) ** p)
    return dirichlet_energy(u) + lam * l2_mass(u) - rho * pw


def pohozaev_relative(state: StationaryState) -> float:
    r = pohozaev_residual(state.u, state.lam, state.rho, state.p)
    return abs(r) / (state.grad_sq + state.lam * state.mu)


@dataclass
class ActionIdentity:
    identity: float
    energy_form: float
    action_form: float

    @property
    def worst(self) -> float:
        return max(abs(self.identity), abs(self.energy_form), abs(self.action_form))

    @property
    def critical(self) -> bool:
        return self.worst <= 1e-6


def action_identity_check(state: StationaryState) -> ActionIdentity:
    """Relative residuals of the action identity and its two intermediate forms."""
    p, lam, mu = state.p, state.lam, state.mu
    a = state.grad_sq
    e, L = state.energy, state.action
    scale = abs(a) + abs(lam * mu) + abs(state.rho * state.power_integral)
    if scale == 0:
        return ActionIdentity(0.0, 0.0, 0.0)
    ident = (0.5 - 1 / p) * L - (0.5 + 1 / p) * e - 1.5 * lam * (1 / p - 1 / 6) * mu
    e_form = e - ((0.5 - 1 / p) * a - lam / p * mu)
    l_form = L - ((0.5 + 1 / p) * a - lam * (0.5 - 1 / p) * mu)
    return ActionIdentity(ident / scale, e_form / scale, l_form / scale)


def _edge_hamiltonian_density(state: StationaryState):
    """Per element ∫ ℓ over the element, using the P1 slope and trapezoid values."""
    m = state.mesh
    v = state.u.values
    d = state.u.differences()
    a, b, h = m.elem_a, m.elem_b, m.elem_h
    pot = lambda y: state.rho / state.p * np.abs(y) ** state.p - 0.5 * state.lam * y * y
    return h * (0.5 * d * d + 0.5 * (pot(v[a]) + pot(v[b])))


@dataclass
class EdgeHamiltonians:
    levels: np.ndarray  # per edge, ∫_e ℓ / |e|
    lengths: np.ndarray
    deviation: np.ndarray  # per edge, max |ℓ(node) − mean| / scale
    scale: float

    @property
    def max_deviation(self) -> float:
        return float(np.max(self.deviation)) if self.deviation.size else 0.0


def hamiltonian_scale(lam: float, rho: float, p: float) -> float:
    """|β| for m² = λ: λ^{p/(p−2)} ρ^{−2/(p−2)} (the natural size of ℓ)."""
    return lam ** (p / (p - 2)) * rho ** (-2 / (p - 2))


def edge_hamiltonians(state: StationaryState) -> EdgeHamiltonians:
    m = state.mesh
    dens = _edge_hamiltonian_density(state)
    n_e = len(m.edges)
    total = np.bincount(m.elem_edge, weights=dens, minlength=n_e)
    lengths = np.array([em.length for em in m.edges])
    levels = total / lengths
    scale = hamiltonian_scale(state.lam, state.rho, state.p)
    dev = np.zeros(n_e)
    v = state.u.values
    for em in m.edges:
        y = v[em.nodes]
        if len(y) < 3:
            continue
        dy = (y[2:] - y[:-2]) / (2 * em.h)
        mid = y[1:-1]
        ell = 0.5 * dy * dy + state.rho / state.p * np.abs(mid) ** state.p - 0.5 * state.lam * mid * mid
        if ell.size:
            dev[em.index] = float(np.max(np.abs(ell - np.mean(ell)))) / scale
    return EdgeHamiltonians(levels, lengths, dev, scale)


def kirchhoff_flux(state: StationaryState) -> dict[str, float]:
    """Sum of outgoing derivatives at each graph vertex.

    One-sided differences carry an O(h) error from u'', so each is corrected
    with the ODE: u'(0) ≈ (u₁ − u₀)/h − (h/2)(λu₀ − ρu₀^{p−1}).
    """
    m = state.mesh
    v = state.u.values
    out = {}
    lam, rho, p = state.lam, state.rho, state.p
    fixed = set(np.setdiff1d(np.arange(m.n_nodes), state.ops.free).tolist())
    for name, i in m.vertex_index.items():
        if i in fixed:
            continue
        s = 0.0
        for em in m.edges:
            nodes = em.nodes
            ends = []
            if nodes[0] == i:
                ends.append(nodes[1])
            if nodes[-1] == i and not m.graph.edges[em.index].is_half_line:
                ends.append(nodes[-2])
            for j in ends:
                u0 = v[i]
                s += (v[j] - u0) / em.h - 0.5 * em.h * (lam * u0 - rho * abs(u0) ** (p - 2) * u0)
        out[name] = s
    return out


def max_slope(state: StationaryState) -> float:
    return float(np.max(np.abs(state.u.differences())))


@dataclass
class CorollaryBound:
    lhs: float
    rhs: float
    lhs_without_tails: float

    @property
    def slack(self) -> float:
        return self.lhs - self.rhs

    @property
    def slack_without_tails(self) -> float:
        return self.lhs_without_tails - self.rhs


def corollary_bound_check(state: StationaryState) -> CorollaryBound:
    eh = edge_hamiltonians(state)
    neg = eh.levels < 0
    contrib = eh.lengths * np.abs(eh.levels) * neg
    tails = np.array([e.is_half_line for e in state.graph.edges])
    p, lam = state.p, state.lam
    rhs = -(0.5 + 1 / p) * state.energy + 1.5 * lam * (1 / 6 - 1 / p) * state.mu
    return CorollaryBound(float(contrib.sum()), float(rhs), float(contrib[~tails].sum()))


# ------------------------------------------------------------ mountain pass


def k1(mu: float, p: float, rho: float, K: float) -> float:
    if not p > 6:
        raise ValueError("p must exceed 6")
    if not K > 0:
        raise ValueError("K must be positive")
    return (p / (2 * rho * K)) ** (4 / (p - 6)) * mu ** (-(p + 2) / (p - 6))


def kappa_rho(k: float, k1_value: float, p: float) -> float:
    return 0.5 * k * (1 - (k / k1_value) ** ((p - 6) / 4))


@dataclass
class MPGeometry:
    k1: float
    k0: float
    kappa: float
    kappa_rho1: float  # κ₁(k₀) for comparison


def mp_geometry(mu: float, p: float, rho: float, K: float, k0: float | None = None) -> MPGeometry:
    """k₁ and the mountain-pass gap κ_ρ(k₀); k₀ defaults to half of k₁ at ρ = 1."""
    if not p > 6:
        raise ValueError("p must exceed 6")
    kk = k1(mu, p, rho, K)
    kk1 = k1(mu, p, 1.0, K)
    if k0 is None:
        k0 = 0.5 * kk1
    return MPGeometry(kk, float(k0), kappa_rho(k0, kk, p), kappa_rho(k0, kk1, p))


@dataclass
class ScalingCurve:
    t: np.ndarray
    closed_form: np.ndarray
    direct: np.ndarray
    masses: np.ndarray
    base_mass: float

    @property
    def max_rel_gap(self) -> float:
        den = np.maximum(np.abs(self.closed_form), 1e-300)
        return float(np.max(np.abs(self.closed_form - self.direct) / den))

    @property
    def first_negative(self) -> float | None:
        neg = np.flatnonzero(self.closed_form < 0)
        return float(self.t[neg[0]]) if neg.size else None


def scaling_curve(w: GraphFunction, t_grid, rho: float, p: float) -> ScalingCurve:
    """E_ρ(w_t) for w_t(x) = t^{1/2} w(c + t(x − c)), closed form and direct.

    ``w`` must be supported inside one edge; c is the centre of that support.
    The direct value evaluates the trapezoid/P1 energy on the contracted node
    set, which is exact for the rescaled piecewise-linear function.
    """
    m = w.mesh
    nz = np.flatnonzero(w.values != 0)
    if nz.size == 0:
        raise ValueError("zero function")
    owners = set()
    for em in m.edges:
        if np.intersect1d(em.nodes[1:-1], nz).size:
            owners.add(em.index)
        if (w.values[em.nodes[[0, -1]]] != 0).any():
            raise ValueError("support must stay inside a single edge")
    if len(owners) != 1:
        raise ValueError("support must lie in a single edge")
    em = m.edges[owners.pop()]
    y = w.values[em.nodes]
    s = em.arclength
    inside = np.flatnonzero(y != 0)
    lo, hi = s[max(inside[0] - 1, 0)], s[min(inside[-1] + 1, len(s) - 1)]
    c = 0.5 * (lo + hi)
    a = dirichlet_energy(w)
    b = float(m.weights @ np.abs(w.values) ** p)
    base_mass = l2_mass(w)
    tt = np.asarray(t_grid, float)
    if np.any(tt < 1):
        raise ValueError("t must be >= 1")
    closed, direct, masses = [], [], []
    for t in tt:
        xs = c + (s - c) / t
        if xs[max(inside[0] - 1, 0)] < 0 or xs[min(inside[-1] + 1, len(s) - 1)] > em.length:
            raise ValueError("rescaled support leaves the edge")
        ys = math.sqrt(t) * y
        dx = np.diff(xs)
        slope = np.diff(ys) / dx
        wts = np.zeros_like(xs)
        wts[:-1] += dx / 2
        wts[1:] += dx / 2
        direct.append(0.5 * float(np.sum(slope**2 * dx)) - rho / p * float(wts @ np.abs(ys) ** p))
        masses.append(float(wts @ ys**2))
        closed.append(0.5 * t * t * a - rho * t ** ((p - 2) / 2) / p * b)
    return ScalingCurve(tt, np.array(closed), np.array(direct), np.array(masses), base_mass)


# ------------------------------------------------------------ σ_k fluxes


def _one_sided(y, h, at_start: bool):
    # second-order derivative at an end of a sampled edge
    if len(y) >= 3:
        if at_start:
            return (-3 * y[0] + 4 * y[1] - y[2]) / (2 * h)
        return (3 * y[-1] - 4 * y[-2] + y[-3]) / (2 * h)
    return (y[1] - y[0]) / h


@dataclass
class FluxReport:
    sigma: np.ndarray
    increasing: bool
    decreasing: bool

    @property
    def strictly_monotone(self) -> bool:
        return self.increasing or self.decreasing


def flux_sigma(u: GraphFunction) -> FluxReport:
    """σ_k = sum over edges leaving cell k of u' at their left end.

    Derivatives are taken along the left-to-right orientation of the exiting
    edges, so a concave function gives a strictly decreasing sequence.
    """
    g = u.mesh.graph
    if not g.cells:
        raise ValueError("graph lacks cell metadata")
    sig = []
    for cell in g.cells:
        if not cell.exiting:
            continue
        s = 0.0
        for k in cell.exiting:
            em = u.mesh.edges[k]
            s += _one_sided(u.values[em.nodes], em.h, True)
        sig.append(s)
    sig = np.array(sig)
    d = np.diff(sig)
    return FluxReport(sig, bool(np.all(d > 0)), bool(np.all(d < 0)))


# ------------------------------------------------------------ blow-up


@dataclass
class BlowupRow:
    lam: float
    edge: int
    length: float
    level: float
    rescaled_level: float
    printed_predictor: float
    predictor: float
    quadrature_predictor: float
    actual: float

    @property
    def ratio(self) -> float:
        return self.actual / self.predictor

    @property
    def quadrature_ratio(self) -> float:
        return self.actual / self.quadrature_predictor


def edge_mass_predictors(length: float, level: float, lam: float, rho: float, p: float):
    """Three estimates of ‖u‖²_{L²(e)} for an edge sitting on a level ℓ < 0.

    Returns (printed, logarithmic, quadrature).  The logarithmic law uses
    T₁ ~ −ln(−ℓ̃) and N₁ → 2κ_p; the quadrature one uses |e|·N/T exactly.
    """
    scale = hamiltonian_scale(lam, rho, p)
    x = level / scale
    kap = kappa_p(p)
    amp2 = lam ** (2 / (p - 2)) * rho ** (-2 / (p - 2))
    printed = -length * kap * amp2 / (2 * math.log(-x))
    log_law = -2 * length * kap * amp2 / math.log(-x)
    prm = PhaseParams(p, math.sqrt(lam), rho)
    if classify_level(level, prm).cls is LevelClass.EQUILIBRIUM:
        quad = length * prm.gamma_minus**2  # the orbit is the constant γ₋
    else:
        quad = length * mass_over_period(level, prm) / period(level, prm)
    return printed, log_law, quad


def blowup_diagnostics(states, level_rtol: float = 1e-9) -> list[BlowupRow]:
    """Tabulate negative-level edges of states with increasing λ."""
    states = list(states)
    if len(states) < 3:
        raise ValueError("need at least three states")
    lams = [s.lam for s in states]
    if any(b <= a for a, b in zip(lams, lams[1:])):
        raise ValueError("states must have increasing lambda")
    rows = []
    for st in states:
        eh = edge_hamiltonians(st)
        for k, (lev, L) in enumerate(zip(eh.levels, eh.lengths)):
            if st.graph.edges[k].is_half_line or lev >= -level_rtol * eh.scale:
                continue
            pr, lg, qd = edge_mass_predictors(L, lev, st.lam, st.rho, st.p)
            em = st.mesh.edges[k]
            y = st.u.values[em.nodes]
            actual = float(np.sum(0.5 * em.h * (y[:-1] ** 2 + y[1:] ** 2)))
            rows.append(BlowupRow(st.lam, k, L, lev, lev / eh.scale, pr, lg, qd, actual))
    if not rows:
        raise ValueError("no negative-level edges")
    return rows


def synthetic_orbit_state(lam: float, level_rescaled: float, p: float, rho: float = 1.0,
                          length: float | None = None, h: float | None = None,
                          periods: int = 10, points_per_period: int = 4000) -> StationaryState:
    """A positive periodic phase-plane orbit sampled on a single segment.

    The segment spans ``periods`` full periods starting at the upper turning
    point, so its ends are turning points and Kirchhoff holds there.
    """
    from scipy import integrate as _int
    from .graph import segment
    from .phase import _rhs, _ODE_TOL

    prm = PhaseParams(p, math.sqrt(lam), rho)
    level = level_rescaled * hamiltonian_scale(lam, rho, p)
    T = period(level, prm)
    L = length if length is not None else periods * T
    n = periods * points_per_period
    hh = h if h is not None else L / n
    mesh = Mesh(segment(L), hh)
    em = mesh.edges[0]
    lvl = classify_level(level, prm)
    sol = _int.solve_ivp(_rhs(prm), (0.0, L), [lvl.v_plus, 0.0, 0.0], t_eval=em.arclength,
                         **_ODE_TOL)
    vals = np.empty(mesh.n_nodes)
    vals[em.nodes] = sol.y[0]
    ops = assemble(mesh, far_bc=DIRICHLET, leaf_bc=NEUMANN)
    u = GraphFunction(mesh, vals)
    return StationaryState(ops, u, lam, rho, p, residual=math.nan, meta={"synthetic": True})
