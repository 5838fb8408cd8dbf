"""Reference values computed at build time and frozen as CSV files.

Each file starts with ``#`` lines recording the date, the discretization and
the tolerance the values were validated under.  The date comes from
SOURCE_DATE_EPOCH when set, so regeneration can be made byte-reproducible.
"""

from __future__ import annotations

import csv
import datetime as _dt
import io
import os
from importlib import resources
from pathlib import Path

import numpy as np

from . import phase, solver
from .graph import bethe_tree, segment
from .spectra import DIRICHLET, assemble, bottom_spectrum

KAPPA_PS = (7.0, 8.0, 10.0)
BETHE_DEPTHS = (4, 5, 6, 7, 8, 9)
BETHE_H = 0.05
SOLITON_LAMBDAS = (0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0)
SOLITON_LENGTH = 60.0
SOLITON_H = 0.01


def _date() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is not None:
        d = _dt.datetime.fromtimestamp(int(epoch), tz=_dt.timezone.utc).date()
    else:
        d = _dt.date.today()
    return d.isoformat()


def _write(header: list[str], columns: list[str], rows) -> str:
    buf = io.StringIO()
    buf.write(f"# generated {_date()}\n")
    for h in header:
        buf.write(f"# {h}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([x if isinstance(x, str) else repr(float(x)) for x in r])
    return buf.getvalue()


def kappa_table(ps=KAPPA_PS):
    rows = []
    for p in ps:
        a = phase.kappa_p(p, "gauss")
        b = phase.kappa_p(p, "tanh_sinh")
        rows.append((p, a, b, abs(a - b) / abs(a)))
    return rows


def kappa_text(ps=KAPPA_PS) -> str:
    rows = kappa_table(ps)
    worst = max(r[3] for r in rows)
    hdr = ["half homoclinic mass for m = rho = 1",
           "schemes: adaptive Gauss after v = gamma_+ sin(theta); tanh-sinh in v",
           f"agreement tolerance 1e-09; worst relative gap {worst:.3e}"]
    return _write(hdr, ["p", "kappa_gauss", "kappa_tanh_sinh", "rel_gap"], rows)


def bethe_rows(depths=BETHE_DEPTHS, h=BETHE_H):
    rows = []
    for d in depths:
        ops = assemble(bethe_tree(3, d, 1.0), h, leaf_bc=DIRICHLET)
        res = bottom_spectrum(ops, 1)
        rows.append((d, res.eigenvalues[0], res.residuals[0]))
    return rows


def bethe_text(depths=BETHE_DEPTHS, h=BETHE_H) -> str:
    hdr = [f"bottom eigenvalue of bethe_tree(3, depth, 1), dirichlet leaves, neumann root, h={h!r}",
           "eigen residual tolerance 1e-08"]
    return _write(hdr, ["depth", "lambda0", "residual"], bethe_rows(depths, h))


def soliton_rows(lams=SOLITON_LAMBDAS, length=SOLITON_LENGTH, h=SOLITON_H, p=8.0, rho=1.0):
    ops = assemble(segment(length), h, leaf_bc=DIRICHLET)
    rows = []
    for lam in lams:
        st = solver.solve_fixed_lambda(ops, lam, rho, p,
                                       solver.soliton_profile(lam, rho, p, (0, length / 2), ops.mesh))
        exact = solver.line_soliton_mass(lam, rho, p)
        rows.append((lam, st.mu, exact, abs(st.mu - exact) / exact))
    return rows


def soliton_text(lams=SOLITON_LAMBDAS, length=SOLITON_LENGTH, h=SOLITON_H, p=8.0) -> str:
    rows = soliton_rows(lams, length, h, p)
    slope = float(np.polyfit(np.log([r[0] for r in rows]), np.log([r[1] for r in rows]), 1)[0])
    hdr = [f"mass of the segment soliton, segment length {length!r}, dirichlet ends, h={h!r}, p={p!r}",
           f"closed-form law exponent {(6 - p) / (2 * (p - 2))!r}; fitted exponent {slope!r}",
           "agreement tolerance 1e-02 relative; newton tolerance 1e-10"]
    return _write(hdr, ["lambda", "mu_numeric", "mu_closed_form", "rel_err"], rows)


FILES = {
    "kappa_p.csv": kappa_text,
    "bethe_plateau.csv": bethe_text,
    "soliton_mass_law.csv": soliton_text,
}


def regenerate(outdir, allow_update: bool = False, **overrides) -> list[Path]:
    if not allow_update:
        raise PermissionError("refusing to rewrite golden files without --allow-update")
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, fn in FILES.items():
        kw = overrides.get(name, {})
        path = out / name
        path.write_text(fn(**kw), encoding="utf-8")
        written.append(path)
    return written


def read_golden(name: str) -> list[dict]:
    text = resources.files("qgnls").joinpath("golden", name).read_text(encoding="utf-8")
    body = "\n".join(line for line in text.splitlines() if not line.startswith("#"))
    return [{k: float(v) for k, v in row.items()} for row in csv.DictReader(io.StringIO(body))]


def golden_dir() -> Path:
    return Path(str(resources.files("qgnls").joinpath("golden")))


__all__ = ["FILES", "regenerate", "read_golden", "golden_dir", "kappa_table", "bethe_rows", "soliton_rows"]
