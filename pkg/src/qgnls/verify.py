"""Run every identity and bound on a stationary state and collect pass/fail lines."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import morse, solver
from .solver import StationaryState, _residual

TOLERANCES = {
    "euler_lagrange_residual": 1e-9,
    "pohozaev": 1e-6,
    "action_identity": 1e-6,
    "hamiltonian_constancy": 1e-5,
    "kirchhoff_flux": 1e-6,
    "corollary_bound": 1e-6,
    "mass": 1e-8,
    "morse_index": 1,
}


@dataclass
class Check:
    name: str
    value: float
    tolerance: float
    passed: bool
    note: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f"  # {self.note}" if self.note else ""
        return f"{self.name:<26} {self.value: .6e}  tol {self.tolerance:.1e}  {status}{extra}"


def _le(name, value, tol, note=""):
    return Check(name, float(value), float(tol), bool(abs(value) <= tol), note)


def verify_state(state: StationaryState, mu_target: float | None = None, morse_check: bool = True,
                 tolerances: dict | None = None) -> list[Check]:
    tol = dict(TOLERANCES, **(tolerances or {}))
    ops = state.ops
    x = ops.restrict(state.u)
    el = float(np.linalg.norm(_residual(ops, x, state.lam, state.rho, state.p)) / np.linalg.norm(x))
    out = [_le("euler_lagrange_residual", el, tol["euler_lagrange_residual"], "relative, nodal 2-norm")]
    out.append(_le("pohozaev", solver.pohozaev_relative(state), tol["pohozaev"], "relative"))
    out.append(_le("action_identity", solver.action_identity_check(state).worst, tol["action_identity"],
                   "worst of identity and both intermediate forms, relative"))
    eh = solver.edge_hamiltonians(state)
    out.append(_le("hamiltonian_constancy", eh.max_deviation, tol["hamiltonian_constancy"],
                   "max nodal deviation / lambda^(p/(p-2)) rho^(-2/(p-2))"))
    slope = solver.max_slope(state)
    flux = solver.kirchhoff_flux(state)
    worst = max((abs(v) for v in flux.values()), default=0.0) / slope if slope > 0 else 0.0
    out.append(_le("kirchhoff_flux", worst, tol["kirchhoff_flux"], "relative to max|u'|"))
    umin = float(np.min(x))
    out.append(Check("positivity", umin, 0.0, umin > 0, "min over free nodes"))
    out.append(Check("lambda_positive", state.lam, 0.0, state.lam > 0))
    cb = solver.corollary_bound_check(state)
    out.append(Check("corollary_bound", cb.slack, -tol["corollary_bound"], cb.slack >= -tol["corollary_bound"],
                     f"lhs {cb.lhs:.6e} rhs {cb.rhs:.6e} slack without tails {cb.slack_without_tails:.6e}"))
    if mu_target is not None and math.isfinite(mu_target):
        rel = abs(state.mu - mu_target) / mu_target
        out.append(_le("mass", rel, tol["mass"], f"target {mu_target!r}"))
    if morse_check:
        cert = morse.index_certificate(state)
        out.append(Check("morse_index", cert.index_theta, tol["morse_index"], cert.passed,
                         f"theta {cert.theta:g}; theta=0 count {cert.index_theta0}; "
                         f"lowest {', '.join(f'{v:.3e}' for v in cert.eigenvalues)}"))
    return out


def report(checks: list[Check]) -> str:
    lines = [c.line() for c in checks]
    verdict = "PASS" if all(c.passed for c in checks) else "FAIL"
    failed = [c.name for c in checks if not c.passed]
    lines.append(f"verdict {verdict}" + (f" (failed: {', '.join(failed)})" if failed else ""))
    return "\n".join(lines) + "\n"
