"""Noncompact metric graphs with Kirchhoff combinatorics.

A graph is a set of vertices, finite edges (intervals glued at their ends) and
half-lines attached to a single vertex.  Half-lines are kept symbolic; they are
cut at ``truncation_length`` only when a mesh is built, so one graph object can
serve a whole truncation study.

The text format understood by :func:`parse_graph` is line based::

    # comment
    p 8
    vertex a
    vertex b
    edge a b 1.0
    halfline b

Edge ids are the 0-based positions of the ``edge``/``halfline`` lines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence


class GraphError(ValueError):
    """Invalid graph description or construction."""


@dataclass(frozen=True)
class Edge:
    tail: str
    head: str | None
    length: float

    @property
    def is_half_line(self) -> bool:
        return self.head is None

    @property
    def is_loop(self) -> bool:
        return self.head == self.tail


@dataclass(frozen=True)
class Cell:
    """One period cell W_k of a Z-periodic graph.

    ``exiting`` lists the edges leaving the cell to the right; each of them has
    its tail in this cell and its head in the next one.
    """

    vertices: tuple[str, ...]
    exiting: tuple[int, ...]


@dataclass(frozen=True)
class MetricGraph:
    vertices: tuple[str, ...]
    edges: tuple[Edge, ...]
    truncation_length: float = 40.0
    p: float | None = None
    name: str = ""
    cells: tuple[Cell, ...] = ()
    incidence: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(self.vertices))
        object.__setattr__(self, "edges", tuple(self.edges))
        if not self.edges:
            raise GraphError("empty edge set")
        if len(set(self.vertices)) != len(self.vertices):
            raise GraphError("duplicate vertex id")
        if not (self.truncation_length > 0 and math.isfinite(self.truncation_length)):
            raise GraphError("truncation_length must be positive and finite")
        known = set(self.vertices)
        inc: dict[str, list[int]] = {v: [] for v in self.vertices}
        for k, e in enumerate(self.edges):
            ends = (e.tail,) if e.head is None else (e.tail, e.head)
            for v in ends:
                if v not in known:
                    raise GraphError(f"dangling vertex {v!r} referenced by edge {k}")
            if e.head is None:
                if e.length != math.inf:
                    raise GraphError("half-line edges must have infinite length")
            elif not (e.length > 0 and math.isfinite(e.length)):
                raise GraphError(f"nonpositive length {e.length} on edge {k}")
            for v in ends:
                inc[v].append(k)  # a loop lists its vertex twice
        object.__setattr__(self, "incidence", {v: tuple(ks) for v, ks in inc.items()})
        if not self._connected():
            raise GraphError("disconnected graph")

    def _connected(self) -> bool:
        adj: dict[str, set[str]] = {v: set() for v in self.vertices}
        for e in self.edges:
            if e.head is not None:
                adj[e.tail].add(e.head)
                adj[e.head].add(e.tail)
        seen = {self.vertices[0]}
        stack = [self.vertices[0]]
        while stack:
            for w in adj[stack.pop()]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == len(self.vertices)

    def degree(self, v: str) -> int:
        return len(self.incidence[v])

    @property
    def has_half_lines(self) -> bool:
        return any(e.is_half_line for e in self.edges)

    def max_degree_vertex(self) -> str:
        # ties broken by declaration order
        return max(self.vertices, key=lambda v: (self.degree(v), -self.vertices.index(v)))

    def with_truncation(self, length: float) -> "MetricGraph":
        return replace(self, truncation_length=float(length))


def total_length(g: MetricGraph) -> float:
    """Sum of the edge lengths; ``math.inf`` as soon as a half-line is present."""
    if g.has_half_lines:
        return math.inf
    return math.fsum(e.length for e in g.edges)


def parse_graph(text: str, truncation_length: float = 40.0, name: str = "") -> MetricGraph:
    vertices: list[str] = []
    edges: list[Edge] = []
    p = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        kw = tok[0]
        try:
            if kw == "p" and len(tok) == 2:
                p = float(tok[1])
            elif kw == "vertex" and len(tok) == 2:
                vertices.append(tok[1])
            elif kw == "edge" and len(tok) == 4:
                length = float(tok[3])
                if not length > 0:
                    raise GraphError(f"nonpositive length {length} on line {lineno}")
                edges.append(Edge(tok[1], tok[2], length))
            elif kw == "halfline" and len(tok) == 2:
                edges.append(Edge(tok[1], None, math.inf))
            else:
                raise GraphError(f"line {lineno}: cannot parse {raw.strip()!r}")
        except ValueError as exc:
            if isinstance(exc, GraphError):
                raise
            raise GraphError(f"line {lineno}: bad number in {raw.strip()!r}") from exc
    return MetricGraph(tuple(vertices), tuple(edges), truncation_length, p, name)


def serialize_graph(g: MetricGraph) -> str:
    """Inverse of :func:`parse_graph`.  Cell metadata is not part of the format."""
    out = []
    if g.name:
        out.append(f"# {g.name}")
    if g.p is not None:
        out.append(f"p {g.p!r}")
    out.extend(f"vertex {v}" for v in g.vertices)
    for e in g.edges:
        if e.is_half_line:
            out.append(f"halfline {e.tail}")
        else:
            out.append(f"edge {e.tail} {e.head} {e.length!r}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------- catalog


def segment(length: float = 1.0) -> MetricGraph:
    return MetricGraph(("a", "b"), (Edge("a", "b", float(length)),), name="segment")


def star_halflines(n: int = 3) -> MetricGraph:
    if n < 1:
        raise GraphError("star needs at least one half-line")
    return MetricGraph(("o",), tuple(Edge("o", None, math.inf) for _ in range(n)),
                       name=f"star_halflines({n})")


def tadpole(loop_length: float = 1.0) -> MetricGraph:
    """A loop of length ``loop_length`` with one half-line hanging off its vertex."""
    return MetricGraph(("v",), (Edge("v", "v", float(loop_length)), Edge("v", None, math.inf)),
                       name="tadpole")


def periodic_chain(cells: int = 5, cell_length: float = 1.0) -> MetricGraph:
    """``cells`` unit cells of the integer line; cell k is the vertex c{k}."""
    if cells < 1:
        raise GraphError("need at least one cell")
    vs = tuple(f"c{k}" for k in range(cells + 1))
    es = tuple(Edge(vs[k], vs[k + 1], float(cell_length)) for k in range(cells))
    cl = tuple(Cell((vs[k],), (k,) if k < cells else ()) for k in range(cells + 1))
    return MetricGraph(vs, es, name=f"periodic_chain({cells})", cells=cl)


def periodic_ladder(cells: int = 5, rail_length: float = 1.0, rung_length: float = 1.0) -> MetricGraph:
    """Ladder with rungs t{k}-b{k}; cell k holds both rung ends and the rung."""
    if cells < 1:
        raise GraphError("need at least one cell")
    vs = []
    for k in range(cells + 1):
        vs += [f"t{k}", f"b{k}"]
    es = [Edge(f"t{k}", f"b{k}", float(rung_length)) for k in range(cells + 1)]
    cl = []
    for k in range(cells + 1):
        exiting = ()
        if k < cells:
            es.append(Edge(f"t{k}", f"t{k + 1}", float(rail_length)))
            es.append(Edge(f"b{k}", f"b{k + 1}", float(rail_length)))
            exiting = (len(es) - 2, len(es) - 1)
        cl.append(Cell((f"t{k}", f"b{k}"), exiting))
    return MetricGraph(tuple(vs), tuple(es), name=f"periodic_ladder({cells})", cells=tuple(cl))


def _rooted_tree(children: int, depth: int, length_of_level) -> tuple[list[str], list[Edge]]:
    vs = ["r", "n1"]
    es = [Edge("r", "n1", length_of_level(0))]
    frontier = ["n1"]
    for level in range(1, depth + 1):
        nxt = []
        for v in frontier:
            for _ in range(children):
                w = f"n{len(vs)}"
                vs.append(w)
                es.append(Edge(v, w, length_of_level(level)))
                nxt.append(w)
        frontier = nxt
    return vs, es


def bethe_tree(degree: int = 3, depth: int = 4, edge_length: float = 1.0) -> MetricGraph:
    """Equilateral tree truncated from a Bethe lattice.

    The root has degree 1 and every interior vertex has ``degree``; edge levels
    run 0..depth, so there are sum((degree-1)**n for n <= depth) edges.
    """
    if degree < 3:
        raise GraphError("bethe_tree needs degree >= 3")
    if depth < 0:
        raise GraphError("depth must be nonnegative")
    vs, es = _rooted_tree(degree - 1, depth, lambda level: float(edge_length))
    return MetricGraph(tuple(vs), tuple(es), name=f"bethe_tree({degree},{depth})")


def doubling_tree(depth: int = 5, branching: int = 2) -> MetricGraph:
    """Rooted tree whose level-n edges (n = 1..depth) have length 2**(n-1)."""
    if depth < 1:
        raise GraphError("depth must be >= 1")
    if branching < 1:
        raise GraphError("branching must be >= 1")
    vs, es = _rooted_tree(branching, depth - 1, lambda level: 2.0 ** level)
    return MetricGraph(tuple(vs), tuple(es), name=f"doubling_tree({depth})")


CATALOG = {
    "segment": segment,
    "star_halflines": star_halflines,
    "tadpole": tadpole,
    "periodic_chain": periodic_chain,
    "periodic_ladder": periodic_ladder,
    "bethe_tree": bethe_tree,
    "doubling_tree": doubling_tree,
}


def catalog(name: str, **params) -> MetricGraph:
    try:
        builder = CATALOG[name]
    except KeyError:
        raise GraphError(f"unknown catalog graph {name!r}") from None
    try:
        return builder(**params)
    except TypeError as exc:
        raise GraphError(f"invalid parameters for {name}: {exc}") from None


def parse_catalog_spec(spec: str) -> MetricGraph:
    """``name`` or ``name:key=value,key=value`` as used on the command line."""
    name, _, rest = spec.partition(":")
    params = {}
    for item in filter(None, rest.split(",")):
        key, sep, value = item.partition("=")
        if not sep:
            raise GraphError(f"bad catalog parameter {item!r}")
        num = float(value)
        params[key.strip()] = int(num) if num.is_integer() and "." not in value else num
    return catalog(name.strip(), **params)


def edge_levels(g: MetricGraph, root: str = "r") -> list[int]:
    """Graph distance (in edges) of each edge from ``root``; level 1 touches the root."""
    level = {root: 0}
    order = [root]
    out = [0] * len(g.edges)
    for v in order:
        for k in g.incidence[v]:
            e = g.edges[k]
            w = e.head if e.tail == v else e.tail
            if w is not None and w not in level:
                level[w] = level[v] + 1
                out[k] = level[w]
                order.append(w)
    return out


def relabel(g: MetricGraph, mapping: dict[str, str]) -> MetricGraph:
    vs = tuple(mapping[v] for v in g.vertices)
    es = tuple(Edge(mapping[e.tail], None if e.head is None else mapping[e.head], e.length) for e in g.edges)
    return MetricGraph(vs, es, g.truncation_length, g.p, g.name)


def same_graph(a: MetricGraph, b: MetricGraph) -> bool:
    """Equality up to vertex relabeling, assuming edges appear in the same order."""
    if len(a.vertices) != len(b.vertices) or len(a.edges) != len(b.edges):
        return False
    mapping: dict[str, str] = {}
    for ea, eb in zip(a.edges, b.edges):
        if ea.length != eb.length or ea.is_half_line != eb.is_half_line:
            return False
        for x, y in ((ea.tail, eb.tail), (ea.head, eb.head)):
            if x is None:
                continue
            if mapping.setdefault(x, y) != y:
                return False
    return len(set(mapping.values())) == len(mapping)


__all__: Sequence[str] = [
    "Cell", "Edge", "GraphError", "MetricGraph", "CATALOG", "bethe_tree", "catalog",
    "doubling_tree", "edge_levels", "parse_catalog_spec", "parse_graph", "periodic_chain",
    "periodic_ladder", "relabel", "same_graph", "segment", "serialize_graph",
    "star_halflines", "tadpole", "total_length",
]
