"""Phase plane of  v'' = m² v − ρ |v|^{p−2} v.

Conserved quantity ℓ = ½ v'² + π(v) with the well π(v) = (ρ/p)|v|^p − (m²/2) v².
The well has minima at ±γ₋ with value β and crosses zero at ±γ₊.  Bounded
orbits are classified by their level ℓ; period and mass-per-period integrals
are evaluated with singularity-free substitutions.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize, special

from .quadrature import tanh_sinh

TIE_RTOL = 1e-14


class LevelError(ValueError):
    pass


@dataclass(frozen=True)
class PhaseParams:
    p: float
    m: float = 1.0
    rho: float = 1.0

    def __post_init__(self):
        if not self.p > 2:
            raise ValueError("p must exceed 2")
        if self.m < 0:
            raise ValueError("m must be nonnegative")
        if not self.rho > 0:
            raise ValueError("rho must be positive")

    @property
    def gamma_plus(self) -> float:
        p = self.p
        return (p / (2 * self.rho)) ** (1 / (p - 2)) * self.m ** (2 / (p - 2))

    @property
    def gamma_minus(self) -> float:
        p = self.p
        return self.rho ** (-1 / (p - 2)) * self.m ** (2 / (p - 2))

    @property
    def beta(self) -> float:
        p = self.p
        return (1 / p - 0.5) * self.rho ** (-2 / (p - 2)) * self.m ** (2 * p / (p - 2))

    def require_supercritical(self):
        if not self.p > 6:
            raise ValueError("this operation needs p > 6")


def potential(v, params: PhaseParams):
    v = np.asarray(v, dtype=float)
    out = params.rho / params.p * np.abs(v) ** params.p - 0.5 * params.m**2 * v * v
    return float(out) if out.ndim == 0 else out


def hamiltonian(v, dv, params: PhaseParams):
    return 0.5 * np.asarray(dv, dtype=float) ** 2 + potential(v, params)


class LevelClass(str, enum.Enum):
    EMPTY = "Empty"
    EQUILIBRIUM = "EquilibriumMinimum"
    POSITIVE_PERIODIC = "PositivePeriodic"
    HOMOCLINIC = "Homoclinic"
    SIGN_CHANGING = "SignChangingPeriodic"


@dataclass(frozen=True)
class PhaseLevel:
    params: PhaseParams
    ell: float
    cls: LevelClass
    v_minus: float | None
    v_plus: float | None

    @property
    def gamma_plus(self):
        return self.params.gamma_plus

    @property
    def gamma_minus(self):
        return self.params.gamma_minus

    @property
    def beta(self):
        return self.params.beta


def _dd_pow(a, b, p):
    """(a^p − b^p)/(a − b) for a > 0, b ≥ 0, accurate when b ≈ a."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    r = np.where(a > 0, b / np.where(a > 0, a, 1.0), 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.log(r)
        q = np.expm1(p * t) / np.expm1(t)
    q = np.where(r == 0, 1.0, q)
    q = np.where(np.abs(t) < 1e-300, p, q)
    return a ** (p - 1) * q


def _q_minus(v, vm, prm: PhaseParams):
    # (ℓ − π(v)) / (v − v₋)
    return 0.5 * prm.m**2 * (v + vm) - prm.rho / prm.p * _dd_pow(np.maximum(v, vm), np.minimum(v, vm), prm.p)


def _q_plus(v, vp, prm: PhaseParams):
    # (ℓ − π(v)) / (v₊ − v)
    return prm.rho / prm.p * _dd_pow(vp, v, prm.p) - 0.5 * prm.m**2 * (vp + v)


def _root(f, a, b):
    return optimize.brentq(f, a, b, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)


def classify_level(ell: float, params: PhaseParams) -> PhaseLevel:
    p, m, rho = params.p, params.m, params.rho
    ell = float(ell)
    beta = params.beta
    scale = abs(beta) if beta != 0 else 1.0
    if m == 0:
        # π(v) = ρ|v|^p/p ≥ 0; zero is the only bounded orbit at ℓ = 0
        if ell < -TIE_RTOL * scale:
            return PhaseLevel(params, ell, LevelClass.EMPTY, None, None)
        if ell <= TIE_RTOL * scale:
            return PhaseLevel(params, ell, LevelClass.EQUILIBRIUM, 0.0, 0.0)
        vp = (p * ell / rho) ** (1 / p)
        return PhaseLevel(params, ell, LevelClass.SIGN_CHANGING, -vp, vp)
    if abs(ell - beta) <= TIE_RTOL * scale:
        g = params.gamma_minus
        return PhaseLevel(params, ell, LevelClass.EQUILIBRIUM, g, g)
    if ell < beta:
        return PhaseLevel(params, ell, LevelClass.EMPTY, None, None)
    if abs(ell) <= TIE_RTOL * scale:
        return PhaseLevel(params, ell, LevelClass.HOMOCLINIC, 0.0, params.gamma_plus)
    f = lambda v: potential(v, params) - ell
    gm, gp = params.gamma_minus, params.gamma_plus
    if ell < 0:
        vm = _root(f, 0.0, gm)
        vp = _root(f, gm, gp)
        return PhaseLevel(params, ell, LevelClass.POSITIVE_PERIODIC, vm, vp)
    hi = 2 * gp
    while f(hi) <= 0:
        hi *= 2
    vp = _root(f, gp, hi)
    return PhaseLevel(params, ell, LevelClass.SIGN_CHANGING, -vp, vp)


# ----------------------------------------------------------------- inverse g


def _pi11_above_beta(eps, p):
    # π₁,₁(1 − ε) − (1/p − 1/2), written to keep relative accuracy for small ε
    with np.errstate(divide="ignore"):
        return np.expm1(p * np.log1p(-eps)) / p + eps - 0.5 * eps * eps


def inverse_g(z: float, p: float) -> float:
    """Inverse of π₁,₁ restricted to [0, 1]."""
    lo = 1 / p - 0.5
    if not lo <= z <= 0:
        raise ValueError(f"z={z} outside [{lo}, 0]")
    if z == 0:
        return 0.0
    if z == lo:
        return 1.0
    if z > -1e-30:
        # v^p/p is below rounding next to v^2/2 here
        return math.sqrt(-2 * z)
    prm = PhaseParams(p)
    if z - lo < 1e-3:
        d = z - lo
        eps = _root(lambda e: _pi11_above_beta(e, p) - d, 0.0, 1.0)
        return 1.0 - eps
    return _root(lambda v: potential(v, prm) - z, 0.0, 1.0)


def inverse_g_edge(delta: float, p: float) -> float:
    """1 − g(1/p − 1/2 + δ), computed without forming z."""
    if delta == 0:
        return 0.0
    return _root(lambda e: _pi11_above_beta(e, p) - delta, 0.0, 1.0)


@dataclass
class EdgeAsymptotic:
    offsets: np.ndarray
    ratios: np.ndarray  # (1 − g) / sqrt(2δ/(p−2))
    printed_ratios: np.ndarray  # against sqrt(2pδ/((p−2)(p−4)))


def g_edge_asymptotic_check(p: float, offsets) -> EdgeAsymptotic:
    """Compare 1 − g(β₁ + δ) with its square-root law as δ → 0⁺.

    The leading term follows from π₁,₁''(1) = p − 2.  The ratio against the
    alternative coefficient 2p/((p−2)(p−4)) is reported alongside; it tends to
    sqrt((p−4)/p), not 1.
    """
    if not p > 6:
        raise ValueError("p must exceed 6")
    d = np.asarray(offsets, float)
    ratios, printed = [], []
    for delta in d:
        if delta == 0:
            ratios.append(1.0)
            printed.append(1.0)
            continue
        e = inverse_g_edge(float(delta), p)
        ratios.append(e / math.sqrt(2 * delta / (p - 2)))
        printed.append(e / math.sqrt(2 * p * delta / ((p - 2) * (p - 4))))
    return EdgeAsymptotic(d, np.array(ratios), np.array(printed))


# ------------------------------------------------------ period and mass


def _require_periodic(lvl: PhaseLevel):
    if lvl.cls not in (LevelClass.POSITIVE_PERIODIC, LevelClass.SIGN_CHANGING):
        raise LevelError(f"level {lvl.ell} is {lvl.cls.value}, not periodic")


def _quad(f, a, b, points=None):
    val, _ = integrate.quad(f, a, b, epsabs=0.0, epsrel=1e-13, limit=500, points=points)
    return val


def _orbit_integral(lvl: PhaseLevel, power: int) -> float:
    """∫ v^power dv / sqrt(2(ℓ − π(v))) over one period."""
    prm = lvl.params
    vm, vp = lvl.v_minus, lvl.v_plus
    if lvl.cls is LevelClass.SIGN_CHANGING:
        # v = v₊ sin θ on the quarter orbit [0, v₊]
        def f(th):
            v = vp * math.sin(th)
            return v**power * math.sqrt(vp * (1 + math.sin(th)) / (2 * _q_plus(v, vp, prm)))
        return 4.0 * _quad(f, 0.0, 0.5 * math.pi)
    delta = vp - vm

    def f_lo(th):
        s = math.sin(th)
        v = vm + delta * s * s
        return 2 * math.sqrt(delta) * math.cos(th) * v**power / math.sqrt(2 * _q_minus(v, vm, prm))

    def f_hi(th):
        c = math.cos(th)
        v = vp - delta * c * c
        return 2 * math.sqrt(delta) * math.sin(th) * v**power / math.sqrt(2 * _q_plus(v, vp, prm))

    # near ℓ → 0⁻ the lower half has a log-type layer of width ~ sqrt(v₋/Δ)
    layer = math.sqrt(vm / delta)
    pts = [x for x in (layer, 10 * layer, 100 * layer) if x < 0.25 * math.pi]
    lo = _quad(f_lo, 0.0, 0.25 * math.pi, points=pts or None)
    hi = _quad(f_hi, 0.25 * math.pi, 0.5 * math.pi)
    return 2.0 * (lo + hi)


def _orbit_integral_de(lvl: PhaseLevel, power: int) -> float:
    """Same integral by tanh-sinh directly in v."""
    prm = lvl.params
    vm, vp = lvl.v_minus, lvl.v_plus
    if lvl.cls is LevelClass.SIGN_CHANGING:
        def f(v, da, db):
            return v**power / np.sqrt(2 * db * _q_plus(v, vp, prm))
        return 4.0 * tanh_sinh(f, 0.0, vp, tol=1e-14)[0]
    mid = 0.5 * (vm + vp)

    def f(v, da, db):
        lo = da * _q_minus(v, vm, prm)
        hi = db * _q_plus(v, vp, prm)
        return v**power / np.sqrt(2 * np.where(v < mid, lo, hi))
    return 2.0 * tanh_sinh(f, vm, vp, tol=1e-14)[0]


def period(ell: float, params: PhaseParams, method: str = "gauss") -> float:
    lvl = classify_level(ell, params)
    _require_periodic(lvl)
    return (_orbit_integral if method == "gauss" else _orbit_integral_de)(lvl, 0)


def mass_over_period(ell: float, params: PhaseParams, method: str = "gauss") -> float:
    lvl = classify_level(ell, params)
    if lvl.cls is not LevelClass.POSITIVE_PERIODIC:
        raise LevelError(f"level {ell} is {lvl.cls.value}, not positive periodic")
    return (_orbit_integral if method == "gauss" else _orbit_integral_de)(lvl, 2)


def kappa_p(p: float, method: str = "gauss") -> float:
    """Half of the homoclinic mass for m = ρ = 1: ∫₀^{γ₊} v² dv / sqrt(−2π₁,₁(v))."""
    if not p > 2:
        raise ValueError("p must exceed 2")
    gp = PhaseParams(p).gamma_plus
    k = p - 2
    if method == "gauss":
        # v = γ₊ sin θ; 1 − sin^k θ = (1 − sin θ)·dd, 1 − sin θ = cos²θ/(1 + sin θ)
        def f(th):
            s = math.sin(th)
            return gp * gp * s * math.sqrt((1 + s) / float(_dd_pow(1.0, s, k)))
        return _quad(f, 0.0, 0.5 * math.pi)

    def f(v, da, db):
        x = v / gp
        with np.errstate(divide="ignore"):
            one_minus = -np.expm1(k * np.log1p(-db / gp))
        return x * gp / np.sqrt(one_minus)
    return tanh_sinh(f, 0.0, gp, tol=1e-15)[0]


def kappa_p_closed_form(p: float) -> float:
    gp = PhaseParams(p).gamma_plus
    return gp * gp * special.beta(2 / (p - 2), 0.5) / (p - 2)


# -------------------------------------------------------------- scaling


@dataclass(frozen=True)
class ScalingMap:
    params: PhaseParams
    ell: float
    ell_unit: float  # level for (m, ρ) = (1, 1)
    amplitude: float
    length: float

    def period_mismatch(self) -> float:
        """Relative gap between T_{m,ρ}(ℓ) and m⁻¹·T₁,₁(ℓ̃)."""
        p = self.params.p
        t = period(self.ell, self.params)
        t1 = period(self.ell_unit, PhaseParams(p))
        return abs(t - self.length * t1) / abs(t)

    def mass_mismatch(self) -> float:
        p = self.params.p
        n = mass_over_period(self.ell, self.params)
        n1 = mass_over_period(self.ell_unit, PhaseParams(p))
        return abs(n - self.amplitude**2 * self.length * n1) / abs(n)


def scaling_map(params: PhaseParams, ell: float) -> ScalingMap:
    p, m, rho = params.p, params.m, params.rho
    if m == 0:
        raise ValueError("scaling needs m > 0")
    ell_unit = rho ** (2 / (p - 2)) * m ** (-2 * p / (p - 2)) * ell
    amp = rho ** (-1 / (p - 2)) * m ** (2 / (p - 2))
    return ScalingMap(params, ell, ell_unit, amp, 1.0 / m)


# ------------------------------------------------------------ ODE oracle


def _rhs(params: PhaseParams):
    m2, rho, p = params.m**2, params.rho, params.p

    def f(t, y):
        v = y[0]
        return [y[1], m2 * v - rho * abs(v) ** (p - 2) * v, v * v]
    return f


_ODE_TOL = dict(method="DOP853", rtol=1e-13, atol=1e-16)


def integrate_orbit(ell: float, params: PhaseParams) -> tuple[float, float]:
    """(T, N) of a positive periodic orbit by time stepping.

    Two half-orbits: from (v₊, 0) down to the lower turning point, then from
    (v₋, 0) back up, each ended by an event on v' = 0.
    """
    lvl = classify_level(ell, params)
    if lvl.cls is not LevelClass.POSITIVE_PERIODIC:
        raise LevelError("time-domain oracle needs a positive periodic level")
    f = _rhs(params)
    horizon = 10 * (period(ell, params) + 1.0)
    total_t = total_n = 0.0
    for start, direction in ((lvl.v_plus, 1.0), (lvl.v_minus, -1.0)):
        ev = lambda t, y: y[1]
        ev.terminal = True
        ev.direction = direction
        sol = integrate.solve_ivp(f, (0.0, horizon), [start, 0.0, 0.0], events=ev,
                                  dense_output=False, **_ODE_TOL)
        if sol.status != 1:
            raise RuntimeError(f"orbit integration failed: {sol.message}")
        total_t += float(sol.t_events[0][0])
        total_n += float(sol.y_events[0][0][2])
    return total_t, total_n


@dataclass
class OrbitReport:
    cls: LevelClass
    max_v: float
    min_v: float
    hamiltonian_drift: float
    symmetry_error: float
    bounded: bool
    sign_ok: bool
    first_small_time: float | None = None
    predicted_small_time: float | None = None

    @property
    def ok(self) -> bool:
        return self.bounded and self.sign_ok


def orbit_properties(ell: float, params: PhaseParams, periods: int = 10, eps: float = 1e-6) -> OrbitReport:
    """Integrate from the upper turning point and check the qualitative claims."""
    lvl = classify_level(ell, params)
    f = _rhs(params)
    ham = lambda y: hamiltonian(y[0], y[1], params)
    if lvl.cls in (LevelClass.EMPTY,):
        raise LevelError("no real orbit at this level")
    if lvl.cls is LevelClass.EQUILIBRIUM:
        v0 = lvl.v_plus
        sol = integrate.solve_ivp(f, (0.0, 10.0), [v0, 0.0, 0.0], **_ODE_TOL)
        drift = float(np.max(np.abs(ham(sol.y) - ell)))
        dev = float(np.max(np.abs(sol.y[0] - v0)))
        return OrbitReport(lvl.cls, float(sol.y[0].max()), float(sol.y[0].min()), drift, dev,
                           True, dev <= 1e-10 * max(v0, 1.0))
    if lvl.cls is LevelClass.HOMOCLINIC:
        m = params.m
        gp = params.gamma_plus
        # v(t) ~ 2^{2/(p−2)} γ₊ e^{−m t}
        c = 2 ** (2 / (params.p - 2)) * gp
        t_pred = math.log(c / eps) / m
        ev = lambda t, y: y[0] - eps
        ev.terminal = True
        ev.direction = -1
        sol = integrate.solve_ivp(f, (0.0, 40.0 / m), [gp, 0.0, 0.0], events=ev, **_ODE_TOL)
        if sol.status < 0:
            raise RuntimeError(sol.message)
        drift = float(np.max(np.abs(ham(sol.y) - 0.0))) / abs(params.beta)
        t_hit = float(sol.t_events[0][0]) if len(sol.t_events[0]) else None
        ok = t_hit is not None and abs(t_hit - t_pred) <= 0.05 * t_pred
        return OrbitReport(lvl.cls, float(sol.y[0].max()), float(sol.y[0].min()), drift, 0.0,
                           True, bool(ok and sol.y[0].min() > 0), t_hit, t_pred)
    T = period(ell, params)
    t_end = periods * T
    t_eval = np.linspace(0.0, t_end, 40 * periods + 1)
    sol = integrate.solve_ivp(f, (0.0, t_end), [lvl.v_plus, 0.0, 0.0], t_eval=t_eval, dense_output=True,
                              **_ODE_TOL)
    if sol.status != 0:
        raise RuntimeError(f"orbit integration failed: {sol.message}")
    y = sol.y
    scale = max(abs(ell), abs(params.beta), 1e-300)
    drift = float(np.max(np.abs(ham(y) - ell))) / scale
    # symmetry about the critical point at t = T (a return to v₊)
    s = np.linspace(0.0, T, 41)
    fwd = sol.sol(T + s)[0] if 2 * T <= t_end else sol.sol(s)[0]
    bwd = sol.sol(T - s)[0] if 2 * T <= t_end else sol.sol(-s + 0.0)[0]
    sym = float(np.max(np.abs(fwd - bwd))) / lvl.v_plus
    vmax, vmin = float(y[0].max()), float(y[0].min())
    bounded = vmax <= lvl.v_plus * (1 + 1e-9)
    if lvl.cls is LevelClass.POSITIVE_PERIODIC:
        sign_ok = vmin > 0
    else:
        sign_ok = abs(vmax + vmin) <= 1e-6 * vmax
    return OrbitReport(lvl.cls, vmax, vmin, drift, sym, bounded, sign_ok)


def log_levels(params: PhaseParams, n: int = 10, lo: float = 0.9, hi: float = 1e-6) -> np.ndarray:
    """``n`` levels β·10^k log-spaced between lo·β and hi·β."""
    return params.beta * np.logspace(math.log10(lo), math.log10(hi), n)
