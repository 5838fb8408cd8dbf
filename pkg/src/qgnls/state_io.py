"""Plain-text state files: a metadata block, the graph, and the function dump."""

from __future__ import annotations

import io
from pathlib import Path

from .functions import GraphFunction, Mesh
from .graph import parse_graph, serialize_graph
from .solver import StationaryState, _residual
from .spectra import assemble

import numpy as np

_FLOAT_KEYS = ("p", "rho", "lambda", "mu", "mu_target", "h", "truncation")


def dumps_state(state: StationaryState, extra: dict | None = None) -> str:
    mesh = state.mesh
    meta = {
        "p": state.p,
        "rho": state.rho,
        "lambda": state.lam,
        "mu": state.mu,
        "h": mesh.target_h,
        "truncation": mesh.truncation,
        "far_bc": state.ops.far_bc,
        "leaf_bc": state.ops.leaf_bc,
    }
    if extra:
        meta.update(extra)
    out = io.StringIO()
    out.write("[metadata]\n")
    for k, v in meta.items():
        out.write(f"{k} = {v!r}\n" if isinstance(v, float) else f"{k} = {v}\n")
    out.write("[graph]\n")
    out.write(serialize_graph(state.graph))
    out.write("[function]\n")
    out.write(state.u.to_csv())
    return out.getvalue()


def save_state(state: StationaryState, path, extra: dict | None = None) -> Path:
    path = Path(path)
    path.write_text(dumps_state(state, extra), encoding="utf-8")
    return path


def _sections(text: str) -> dict[str, str]:
    sec: dict[str, list[str]] = {}
    cur = None
    for line in text.splitlines():
        s = line.strip()
        if s.startswith("[") and s.endswith("]") and "," not in s:
            cur = s[1:-1]
            sec[cur] = []
        elif cur is not None:
            sec[cur].append(line)
    missing = {"metadata", "graph", "function"} - sec.keys()
    if missing:
        raise ValueError(f"state file lacks section(s): {', '.join(sorted(missing))}")
    return {k: "\n".join(v) + "\n" for k, v in sec.items()}


def loads_state(text: str) -> tuple[StationaryState, dict]:
    sec = _sections(text)
    meta: dict = {}
    for line in sec["metadata"].splitlines():
        if not line.strip():
            continue
        k, _, v = line.partition("=")
        k, v = k.strip(), v.strip()
        meta[k] = float(v) if k in _FLOAT_KEYS else v
    first = sec["graph"].lstrip().splitlines()[0] if sec["graph"].strip() else ""
    name = first[1:].strip() if first.startswith("#") else ""
    g = parse_graph(sec["graph"], truncation_length=meta["truncation"], name=name)
    mesh = Mesh(g, meta["h"], meta["truncation"])
    ops = assemble(mesh, far_bc=meta["far_bc"], leaf_bc=meta["leaf_bc"])
    u = GraphFunction.from_csv(mesh, sec["function"])
    x = ops.restrict(u)
    r = _residual(ops, x, meta["lambda"], meta["rho"], meta["p"])
    res = float(np.linalg.norm(r) / max(np.linalg.norm(x), 1e-300))
    st = StationaryState(ops, u, meta["lambda"], meta["rho"], meta["p"], res)
    return st, meta


def load_state(path) -> tuple[StationaryState, dict]:
    return loads_state(Path(path).read_text(encoding="utf-8"))
