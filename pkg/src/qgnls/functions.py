"""Piecewise-linear functions on meshed metric graphs."""

from __future__ import annotations

import csv
import heapq
import io
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .graph import MetricGraph, GraphError


@dataclass(frozen=True)
class EdgeMesh:
    index: int
    nodes: np.ndarray  # global node ids from tail to head (or to the far end)
    h: float
    length: float  # truncated length for half-lines

    @property
    def arclength(self) -> np.ndarray:
        return self.h * np.arange(len(self.nodes))


class Mesh:
    """Uniform P1 mesh of a graph; vertex nodes are numbered first.

    Each edge gets ``ceil(length / h)`` intervals (at least one, two for loops),
    so the local spacing never exceeds the target ``h``.  Half-lines are cut at
    ``truncation`` (defaults to the graph's own ``truncation_length``) and get a
    free far-end node, numbered last on its edge.
    """

    def __init__(self, graph: MetricGraph, h: float, truncation: float | None = None):
        if not h > 0:
            raise ValueError("mesh spacing h must be positive")
        finite = [e.length for e in graph.edges if not e.is_half_line]
        if finite and h > min(finite) * (1 + 1e-12):
            raise ValueError(f"h={h} exceeds the shortest edge {min(finite)}")
        self.graph = graph
        self.target_h = float(h)
        self.truncation = float(graph.truncation_length if truncation is None else truncation)
        if not self.truncation > 0:
            raise ValueError("truncation must be positive")
        vid = {v: i for i, v in enumerate(graph.vertices)}
        self.vertex_index = vid
        n = len(graph.vertices)
        edges = []
        far = []
        for k, e in enumerate(graph.edges):
            length = self.truncation if e.is_half_line else e.length
            nint = max(1, math.ceil(length / h - 1e-9))
            if e.is_loop:
                nint = max(nint, 2)
            start = vid[e.tail]
            interior = np.arange(n, n + nint - 1)
            n += nint - 1
            if e.is_half_line:
                end = n
                far.append(n)
                n += 1
            else:
                end = vid[e.head]
            nodes = np.concatenate(([start], interior, [end])).astype(np.int64)
            edges.append(EdgeMesh(k, nodes, length / nint, length))
        self.edges: tuple[EdgeMesh, ...] = tuple(edges)
        self.far_nodes = np.array(far, dtype=np.int64)
        self.n_nodes = n
        self.elem_a = np.concatenate([em.nodes[:-1] for em in edges])
        self.elem_b = np.concatenate([em.nodes[1:] for em in edges])
        self.elem_h = np.concatenate([np.full(len(em.nodes) - 1, em.h) for em in edges])
        self.elem_edge = np.concatenate([np.full(len(em.nodes) - 1, em.index) for em in edges])
        w = np.zeros(n)
        np.add.at(w, self.elem_a, self.elem_h / 2)
        np.add.at(w, self.elem_b, self.elem_h / 2)
        self.weights = w

    @property
    def total_length(self) -> float:
        return float(self.elem_h.sum())

    def node_positions(self) -> list[np.ndarray]:
        return [em.arclength for em in self.edges]

    def sample(self, f: Callable[[int, np.ndarray], np.ndarray]) -> "GraphFunction":
        """Build a function from ``f(edge_index, arclength_array)``.

        Vertex values are taken from the first edge that touches the vertex.
        """
        vals = np.full(self.n_nodes, np.nan)
        for em in self.edges:
            fv = np.asarray(f(em.index, em.arclength), dtype=float)
            todo = np.isnan(vals[em.nodes])
            vals[em.nodes[todo]] = fv[todo]
        return GraphFunction(self, vals)


class GraphFunction:
    """Nodal values of a continuous piecewise-linear function on a mesh."""

    def __init__(self, mesh: Mesh, values):
        values = np.asarray(values, dtype=float)
        if values.shape != (mesh.n_nodes,):
            raise ValueError(f"expected {mesh.n_nodes} values, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("function values must be finite")
        self.mesh = mesh
        self.values = values

    def __repr__(self):
        return f"GraphFunction(n={self.mesh.n_nodes}, max={np.max(np.abs(self.values)):.4g})"

    def scaled(self, c: float) -> "GraphFunction":
        return GraphFunction(self.mesh, c * self.values)

    def on_edge(self, k: int) -> np.ndarray:
        return self.values[self.mesh.edges[k].nodes]

    def differences(self) -> np.ndarray:
        """Per-element slopes (u_b - u_a) / h."""
        m = self.mesh
        return (self.values[m.elem_b] - self.values[m.elem_a]) / m.elem_h

    def integral(self, f=None) -> float:
        v = self.values if f is None else f(self.values)
        return float(self.mesh.weights @ v)

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["edge_id", "arclength", "value"])
        for em in self.mesh.edges:
            for s, i in zip(em.arclength, em.nodes):
                wr.writerow([em.index, repr(float(s)), repr(float(self.values[i]))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, mesh: Mesh, text: str) -> "GraphFunction":
        rows = list(csv.DictReader(io.StringIO(text)))
        vals = np.full(mesh.n_nodes, np.nan)
        pos = 0
        for em in mesh.edges:
            chunk = rows[pos:pos + len(em.nodes)]
            if len(chunk) != len(em.nodes) or any(int(r["edge_id"]) != em.index for r in chunk):
                raise ValueError(f"function dump does not match mesh on edge {em.index}")
            vals[em.nodes] = [float(r["value"]) for r in chunk]
            pos += len(em.nodes)
        if pos != len(rows):
            raise ValueError("function dump has extra rows")
        return cls(mesh, vals)


def l2_mass(u: GraphFunction) -> float:
    return float(u.mesh.weights @ u.values**2)


def dirichlet_energy(u: GraphFunction) -> float:
    """∫|u'|² for the P1 interpolant (exact)."""
    d = u.differences()
    return float(np.sum(d * d * u.mesh.elem_h))


def norms(u: GraphFunction, q: float = 2.0) -> tuple[float, float, float]:
    """(‖u‖_q, ‖u‖_∞, ‖u′‖_2) with trapezoid quadrature for the Lq norm."""
    if q < 1:
        raise ValueError("q must be >= 1")
    lq = float(u.mesh.weights @ np.abs(u.values) ** q) ** (1.0 / q)
    return lq, float(np.max(np.abs(u.values))), math.sqrt(dirichlet_energy(u))


def project_mass(u: GraphFunction, mu: float) -> GraphFunction:
    if not mu > 0:
        raise ValueError("mass must be positive")
    m = l2_mass(u)
    if m == 0:
        raise ValueError("cannot project the zero function")
    return u.scaled(math.sqrt(mu / m))


@dataclass
class GNReport:
    lp_lhs: float
    lp_rhs: float
    linf_lhs: float
    linf_rhs: float
    degenerate: bool

    @property
    def lp_slack(self) -> float:
        return self.lp_rhs - self.lp_lhs

    @property
    def linf_slack(self) -> float:
        return self.linf_rhs - self.linf_lhs

    @property
    def ratio(self) -> float:
        return self.lp_lhs / self.lp_rhs * 1.0 if self.lp_rhs > 0 else math.inf


def gn_check(u: GraphFunction, p: float, K: float = 1.0) -> GNReport:
    """Evaluate both Gagliardo-Nirenberg inequalities on ``u``.

    ``ratio`` is ‖u‖_p^p / (‖u‖₂^{p/2+1}‖u′‖₂^{p/2−1}) when K = 1.
    """
    if p <= 2:
        raise ValueError("p must exceed 2")
    lp, linf, d = norms(u, p)
    l2 = math.sqrt(l2_mass(u))
    if l2 == 0:
        raise ValueError("zero function")
    rhs_p = K * l2 ** (p / 2 + 1) * d ** (p / 2 - 1)
    rhs_inf = math.sqrt(2.0) * math.sqrt(l2) * math.sqrt(d)
    return GNReport(lp**p, rhs_p, linf, rhs_inf, degenerate=(d == 0.0))


def gn_ratio(u: GraphFunction, p: float) -> float:
    r = gn_check(u, p, 1.0)
    return math.inf if r.degenerate else r.lp_lhs / r.lp_rhs


def distance_from(mesh: Mesh, center) -> np.ndarray:
    """Shortest-path distance from ``center`` to every node.

    ``center`` is a vertex id or a pair (edge index, arclength).
    """
    n = mesh.n_nodes
    adj_a, adj_b, adj_h = mesh.elem_a, mesh.elem_b, mesh.elem_h
    nbrs: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    for a, b, h in zip(adj_a.tolist(), adj_b.tolist(), adj_h.tolist()):
        nbrs[a].append((b, h))
        nbrs[b].append((a, h))
    dist = np.full(n, np.inf)
    heap: list[tuple[float, int]] = []
    if isinstance(center, str):
        i = mesh.vertex_index[center]
        dist[i] = 0.0
        heap.append((0.0, i))
    else:
        k, s = center
        em = mesh.edges[k]
        for j, x in enumerate(em.arclength):
            d = abs(x - s)
            # only the two bracketing nodes need seeding; the rest follow
            if d <= em.h * (1 + 1e-12):
                i = int(em.nodes[j])
                if d < dist[i]:
                    dist[i] = d
                    heap.append((d, i))
        heapq.heapify(heap)
    while heap:
        d, i = heapq.heappop(heap)
        if d > dist[i]:
            continue
        for j, h in nbrs[i]:
            nd = d + h
            if nd < dist[j]:
                dist[j] = nd
                heapq.heappush(heap, (nd, j))
    return dist


def _soliton_shape(r, width, p):
    return np.cosh(np.minimum(r / width, 700.0)) ** (-2.0 / (p - 2))


def trial_functions(mesh: Mesh, p: float, count: int, seed: int):
    """Random tents, Gaussians and soliton-shaped bumps.

    Each trial is shifted by its minimum so it vanishes somewhere, as every
    element of H¹ on a non-compact graph does in the limit.
    """
    rng = np.random.default_rng(seed)
    scale = max(mesh.total_length, 1e-300)
    for _ in range(count):
        kind = rng.integers(3)
        k = int(rng.integers(len(mesh.edges)))
        em = mesh.edges[k]
        s = float(rng.uniform(0, em.length))
        width = float(np.exp(rng.uniform(np.log(4 * mesh.target_h), np.log(scale / 2))))
        r = distance_from(mesh, (k, s))
        if kind == 0:
            v = np.maximum(0.0, 1 - r / width)
        elif kind == 1:
            v = np.exp(-0.5 * (r / width) ** 2)
        else:
            v = _soliton_shape(r, width, p)
        if np.ptp(v) == 0:
            continue
        yield GraphFunction(mesh, v - v.min())


def empirical_gn_constant(g: MetricGraph, p: float, samples: int = 200, seed: int = 0,
                          h: float = 0.05, truncation: float | None = None,
                          extra_trials=()) -> float:
    """Largest GN ratio over random trial functions (a lower bound for K_p)."""
    if samples < 1:
        raise ValueError("need at least one sample")
    mesh = Mesh(g, h, truncation)
    best = 0.0
    r = distance_from(mesh, g.max_degree_vertex())
    base = GraphFunction(mesh, _soliton_shape(r, 1.0, p))
    for u in [base, *trial_functions(mesh, p, samples, seed), *extra_trials]:
        val = gn_ratio(u, p)
        if math.isfinite(val):
            best = max(best, val)
    return best


def concavity_report(u: GraphFunction, rtol: float = 1e-10) -> list[bool]:
    """Per edge: True when every interior second difference is <= rtol·max|u|."""
    tol = rtol * float(np.max(np.abs(u.values))) if u.values.size else 0.0
    out = []
    for em in u.mesh.edges:
        v = u.values[em.nodes]
        if len(v) < 3:
            raise GraphError(f"edge {em.index} has fewer than 3 nodes")
        out.append(bool(np.all(v[2:] - 2 * v[1:-1] + v[:-2] <= tol)))
    return out
