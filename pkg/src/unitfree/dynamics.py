"""Integration of unit-free Hamilton's equations ``x' = X_h(x)``.

Along any flow of ``X_h`` the Hamiltonian obeys ``dh/dt = h R[h]``: it is
conserved exactly when ``R[h] = 0`` and otherwise rescales with the unit.
:func:`conservation_diagnostics` measures the deviation from that law on a
stored trajectory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import expr as E
from .contact import ContactSpace
from .errors import ChartMismatch, NonPositiveDefinite, NonSymmetricMetric, StepFailure, TooFewSamples
from .expr import Chart, Expr, Point, as_expr
from .jacobi import (LichnerowiczStructure, _as_points, bracket, evaluate_at,
                     hamiltonian_vector_field)
from .polys import random_polynomial
from .report import Report

__all__ = [
    "IntegratorConfig", "Trajectory", "integrate", "hamilton_flow", "vector_field_function",
    "conservation_diagnostics", "conservation_residuals", "newtonian_energy", "additivity_demo",
]


@dataclass(frozen=True)
class IntegratorConfig:
    """``rk4`` takes uniform steps of at most ``dt``; ``rk45`` adapts from ``dt``."""

    method: str = "rk4"
    dt: float = 1e-3
    t_end: float = 1.0
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_steps: int = 10_000_000

    def __post_init__(self):
        if self.method not in ("rk4", "rk45"):
            raise ValueError(f"unknown method {self.method!r}; use 'rk4' or 'rk45'")
        for name in ("dt", "t_end", "abs_tol", "rel_tol"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be a positive finite number, got {v!r}")
        if int(self.max_steps) < 1:
            raise ValueError("max_steps must be at least 1")


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Trajectory:
    chart: Chart
    times: np.ndarray
    states: np.ndarray
    h_values: np.ndarray = field(default=None)
    residuals: np.ndarray = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "times", _frozen(self.times))
        object.__setattr__(self, "states", _frozen(self.states).reshape(len(self.times), self.chart.dim))
        n = len(self.times)
        for name in ("h_values", "residuals"):
            v = getattr(self, name)
            object.__setattr__(self, name, _frozen(np.full(n, np.nan) if v is None else v))
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} length differs from times")
        if n > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("times must be strictly increasing")

    def __len__(self):
        return len(self.times)

    def points(self) -> list:
        return [Point(self.chart, row) for row in self.states]

    def column(self, name: str) -> np.ndarray:
        return self.states[:, self.chart.index(name)]

    @property
    def final(self) -> Point:
        return Point(self.chart, self.states[-1])


# ---------------------------------------------------------------------------
# integrators

_DP_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])


def _rk4(f, y0, cfg):
    n = max(1, math.ceil(cfg.t_end / cfg.dt - 1e-9))
    if n > cfg.max_steps:
        raise StepFailure(f"rk4 needs {n} steps, above max_steps={cfg.max_steps}")
    h = cfg.t_end / n
    ys = np.empty((n + 1, len(y0)))
    ys[0] = y = np.array(y0, dtype=float)
    comp = np.zeros_like(y)  # Kahan compensation keeps roundoff below the truncation error
    for k in range(n):
        t = k * h
        k1 = f(t, y)
        k2 = f(t + h / 2, y + h / 2 * k1)
        k3 = f(t + h / 2, y + h / 2 * k2)
        k4 = f(t + h, y + h * k3)
        incr = h / 6 * (k1 + 2 * k2 + 2 * k3 + k4) - comp
        new = y + incr
        comp = (new - y) - incr
        y = new
        ys[k + 1] = y
    times = np.arange(n + 1) * h
    times[-1] = cfg.t_end
    return times, ys


def _rk45(f, y0, cfg):
    t, y = 0.0, np.array(y0, dtype=float)
    h = min(cfg.dt, cfg.t_end)
    times, ys = [t], [y.copy()]
    k = np.empty((7, len(y)))
    k[0] = f(t, y)
    steps = 0
    while t < cfg.t_end:
        if steps >= cfg.max_steps:
            raise StepFailure(f"rk45 exceeded max_steps={cfg.max_steps} at t={t:.6g}")
        h = min(h, cfg.t_end - t)
        if h <= 1e-14 * max(1.0, abs(t)):
            raise StepFailure(f"rk45 step size underflow at t={t:.6g}")
        for s in range(1, 7):
            yi = y + h * np.dot(_DP_A[s], k[:s])
            k[s] = f(t + _DP_C[s] * h, yi)
        y5 = y + h * (_DP_B5 @ k)
        err = h * ((_DP_B5 - _DP_B4) @ k)
        scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(y), np.abs(y5))
        enorm = float(np.sqrt(np.mean((err / scale) ** 2)))
        steps += 1
        if not math.isfinite(enorm):
            h *= 0.2
            continue
        if enorm <= 1.0:
            t = cfg.t_end if cfg.t_end - (t + h) <= 1e-12 * cfg.t_end else t + h
            y = y5
            times.append(t)
            ys.append(y.copy())
            k[0] = k[6]  # first-same-as-last
        factor = 0.9 * enorm ** -0.2 if enorm > 0 else 5.0
        h *= min(5.0, max(0.2, factor))
    return np.array(times), np.array(ys)


def integrate(f: Callable[[float, np.ndarray], np.ndarray], x0, cfg: IntegratorConfig) -> tuple:
    """Integrate ``y' = f(t, y)`` from ``t = 0`` to ``cfg.t_end``; returns ``(times, states)``."""
    if cfg.method == "rk4":
        return _rk4(f, x0, cfg)
    return _rk45(f, x0, cfg)


def vector_field_function(L: LichnerowiczStructure, h) -> Callable:
    """Compiled right-hand side ``(t, x) -> X_h(x)``."""
    X = hamiltonian_vector_field(L, h)
    fn = E.compile_many(X.components, L.chart.coords)
    return lambda t, y: np.array(fn(tuple(y)))


def _initial(chart: Chart, x0) -> np.ndarray:
    if isinstance(x0, Point):
        if x0.chart.coords != chart.coords:
            raise ChartMismatch("initial point is on another chart")
        return np.array(x0.values)
    if isinstance(x0, dict):
        return np.array(Point(chart, x0).values)
    arr = np.asarray(x0, dtype=float).ravel()
    if arr.size != chart.dim:
        raise ChartMismatch(f"initial state has {arr.size} values, chart dim is {chart.dim}")
    return arr


def conservation_residuals(L: LichnerowiczStructure, h, times, states) -> tuple:
    """``(h values, |dh/dt - h R[h]|)`` with ``dh/dt`` from second-order finite differences."""
    h = as_expr(h)
    if len(times) < 3:
        raise TooFewSamples(f"need at least 3 samples, got {len(times)}")
    fn = E.compile_many([h, L.r.apply(h)], L.chart.coords)
    vals = np.array([fn(tuple(s)) for s in states])
    hv, rh = vals[:, 0], vals[:, 1]
    hdot = np.gradient(hv, np.asarray(times), edge_order=2)
    return hv, np.abs(hdot - hv * rh)


def hamilton_flow(L: LichnerowiczStructure, h, x0, cfg: IntegratorConfig | None = None) -> Trajectory:
    """Trajectory of ``X_h`` with Hamiltonian values and conservation residuals per sample."""
    cfg = cfg or IntegratorConfig()
    h = as_expr(h)
    L.chart.check(h)
    y0 = _initial(L.chart, x0)
    times, states = integrate(vector_field_function(L, h), y0, cfg)
    if len(times) >= 3:
        hv, res = conservation_residuals(L, h, times, states)
    else:
        fn = E.compile_expr(h, L.chart.coords)
        hv, res = np.array([fn(tuple(s)) for s in states]), None
    return Trajectory(L.chart, times, states, hv, res)


def conservation_diagnostics(L: LichnerowiczStructure, h, traj: Trajectory) -> float:
    """Largest ``|dh/dt - h R[h]|`` along the trajectory."""
    _, res = conservation_residuals(L, h, traj.times, traj.states)
    return float(res.max())


def newtonian_energy(cs: ContactSpace, g_inv, V, kappa: float = 0.0, pts=None, tol: float = 1e-12) -> Expr:
    """``1/2 g^{ij}(q) p_i p_j + V(q) + kappa z`` on the phase space.

    ``g_inv`` is checked for symmetry and positive-definiteness at sample
    points of the base (100 seeded points by default).
    """
    n = cs.n
    g = [[as_expr(e) for e in row] for row in g_inv]
    if len(g) != n or any(len(row) != n for row in g):
        raise ValueError(f"g_inv must be {n}x{n}")
    V = as_expr(V)
    cs.base.check(V, *(e for row in g for e in row))
    pts = _as_points(cs.base, pts) if pts is not None else cs.base.sample(100, 0)
    mats = evaluate_at([e for row in g for e in row], cs.base, pts).reshape(len(pts), n, n)
    asym = np.abs(mats - np.transpose(mats, (0, 2, 1))).max()
    if asym > tol:
        raise NonSymmetricMetric(f"g_inv is not symmetric (max asymmetry {asym:.3g})")
    eig = np.linalg.eigvalsh(mats).min(axis=1)
    if eig.min() <= 0:
        i = int(np.argmin(eig))
        raise NonPositiveDefinite(f"g_inv has eigenvalue {eig[i]:.3g} at {dict(pts[i])}")
    p = [E.Var(m) for m in cs.p]
    kin = E.ZERO
    for i in range(n):
        for j in range(n):
            kin = kin + g[i][j] * p[i] * p[j]
    energy = kin / E.Constant(2.0) + V
    if kappa:
        energy = energy + E.Constant(kappa) * E.Var(cs.z)
    return energy


def additivity_demo(ps, h1, h2, pts=None, tol: float = 1e-9, seed: int = 0) -> Report:
    """Combined energy ``H = P1^*h1 + P2^*h2`` on a product and its decoupling.

    ``h1`` and ``h2`` are written in the factors' original coordinates.
    Reported residuals: the cross bracket ``{P1^*h1, P2^*g}``, both
    projections ``{H, P1^*f} - P1^*{h1, f}`` and
    ``{H, P2^*g} - P2^*{h2, g}``, and ``{H, H}``.
    """
    from .jacobi import _compare
    from .product import _region_points
    h1 = ps.rename_left(h1)
    h2 = ps.rename_right(h2)
    ps.left.chart.check(h1)
    ps.right.chart.check(h2)
    pts = _region_points(ps, pts, count=100, seed=seed)
    H = ps.P1(h1) + ps.P2(h2)
    S = ps.structure
    rng = np.random.default_rng(seed)
    ids = {"H,H": (bracket(S, H, H), E.ZERO)}
    for k in range(3):
        f = random_polynomial(ps.left.chart, 2, rng)
        g = random_polynomial(ps.right.chart, 2, rng)
        ids[f"decoupling {k}"] = (bracket(S, ps.P1(h1), ps.P2(g)), E.ZERO)
        ids[f"left projection {k}"] = (bracket(S, H, ps.P1(f)), ps.P1(bracket(ps.left, h1, f)))
        ids[f"right projection {k}"] = (bracket(S, H, ps.P2(g)), ps.P2(bracket(ps.right, h2, g)))
    detail, witness = _compare(ps.total, pts, ids)
    grouped = {}
    for k, v in detail.items():
        key = k.rsplit(" ", 1)[0] if k[-1].isdigit() else k
        grouped[key] = max(grouped.get(key, 0.0), v)
    worst = max(grouped.values())
    return Report("additivity", worst <= tol, worst, tol, witness, grouped, seed,
                  {"H": E.to_string(H)})
