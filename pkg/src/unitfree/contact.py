"""Canonical contact phase space of the trivial line bundle over a base chart.

The total chart has coordinates ``(q_1..q_n, p_1..p_n, z)``.  A 1-jet of a
section ``s`` at ``q`` sits at ``p = ds``, ``z = s(q)``; ``z`` tracks the
choice of unit.  The contact form is ``theta = dz - sum_i p_i dq_i`` and
the standard pair is

    pi = sum_i d/dp_i ^ (d/dq_i + p_i d/dz),    R = -d/dz,

under which ``X_h = (h_p, -h_q - p h_z, p h_p - h)``.

Factors ``B = (phi, beta)`` between trivial line bundles pull sections
back by ``B^*s = (phi^*s) / beta``; invertible factors lift to contact
maps between the phase spaces.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Sequence

import numpy as np

from . import expr as E
from .errors import ChartMismatch, MissingInverse, ZeroConversionFactor
from .expr import Chart, Expr, as_expr
from .jacobi import (DEFAULT_TOL, Derivation, LichnerowiczStructure, VectorField, _as_points,
                     evaluate_at, integrability_check, nondegeneracy_check, spanning_family)

__all__ = [
    "ContactSpace", "Factor", "build_contact", "lift_observable", "lift_derivation",
    "jet_lift", "jet_lift_factor", "der_pushforward", "compose_maps",
    "load_factors", "momentum_name",
]


def momentum_name(coord: str) -> str:
    """``q`` -> ``p``, ``q2`` -> ``p2``, anything else ``x`` -> ``p_x``."""
    if coord.startswith("q"):
        return "p" + coord[1:]
    return "p_" + coord


@dataclass(frozen=True)
class ContactSpace:
    base: Chart
    total: Chart
    structure: LichnerowiczStructure
    theta: tuple

    @property
    def n(self) -> int:
        return self.base.dim

    @property
    def q(self) -> tuple:
        return self.total.coords[: self.n]

    @property
    def p(self) -> tuple:
        return self.total.coords[self.n: 2 * self.n]

    @property
    def z(self) -> str:
        return self.total.coords[-1]

    def theta_on(self, v: VectorField) -> Expr:
        """``theta(v)``."""
        out = E.ZERO
        for coef, comp in zip(self.theta, v.components):
            out = out + coef * comp
        return out

    def lift_observable(self, s) -> Expr:
        return lift_observable(self, s)

    def lift_derivation(self, a: Derivation) -> Expr:
        return lift_derivation(self, a)


@lru_cache(maxsize=64)
def build_contact(base: Chart, z_name: str = "z") -> ContactSpace:
    """Assemble the standard pair on ``J^1`` of the trivial line over ``base``.

    Before returning, integrability, non-degeneracy and
    ``theta(pi#(dx)) = 0`` for every coordinate ``x`` are checked at 100
    seeded points.
    """
    n = base.dim
    moms = tuple(momentum_name(c) for c in base.coords)
    total = Chart(f"{base.name}_J1", base.coords + moms + (z_name,))
    zi = 2 * n
    upper = {}
    for i in range(n):
        upper[(i, n + i)] = E.Constant(-1.0)
        upper[(n + i, zi)] = E.Var(moms[i])
    r = [E.ZERO] * (2 * n) + [E.Constant(-1.0)]
    structure = LichnerowiczStructure(total, upper, r, name=total.name)
    theta = tuple([-E.Var(m) for m in moms] + [E.ZERO] * n + [E.ONE])
    cs = ContactSpace(base, total, structure, theta)

    pts = total.sample(100, seed=0)
    if not integrability_check(structure, pts).passed:  # pragma: no cover
        raise RuntimeError("standard contact pair failed the Jacobi identity")
    if not nondegeneracy_check(structure, pts).passed:  # pragma: no cover
        raise RuntimeError("standard contact pair is degenerate")
    images = [cs.theta_on(structure.pi.sharp(x)) for x in total.vars()]
    if np.max(np.abs(evaluate_at(images, total, pts))) > 1e-12:  # pragma: no cover
        raise RuntimeError("theta does not annihilate the image of pi#")
    return cs


def lift_observable(cs: ContactSpace, s) -> Expr:
    """A base function read on the phase space (constant along fibres)."""
    s = as_expr(s)
    cs.base.check(s)
    return s


def lift_derivation(cs: ContactSpace, a: Derivation) -> Expr:
    """Fibre-wise linear function ``sum_i p_i X^i(q) + z f0(q)``."""
    if a.chart.coords != cs.base.coords:
        raise ChartMismatch(f"derivation on {a.chart.coords}, base is {cs.base.coords}")
    out = E.ZERO
    for m, comp in zip(cs.p, a.x.components):
        out = out + E.Var(m) * comp
    return out + E.Var(cs.z) * a.f0


# ---------------------------------------------------------------------------
# factors


def _subst_list(exprs, chart_from: Chart, values: Sequence[Expr]):
    mapping = dict(zip(chart_from.coords, values))
    return tuple(E.substitute(e, mapping) for e in exprs)


@dataclass(frozen=True)
class Factor:
    """A factor ``(phi, beta)`` from the trivial line over ``source`` to the one over ``target``.

    ``phi`` lists the target coordinates as expressions on ``source``;
    ``beta`` is a nonvanishing function on ``source``; ``phi_inv`` (optional)
    lists the source coordinates as expressions on ``target``.
    """

    source: Chart
    target: Chart
    phi: tuple
    beta: Expr
    phi_inv: tuple | None = None
    name: str = "B"

    def __post_init__(self):
        phi = tuple(as_expr(c) for c in self.phi)
        beta = as_expr(self.beta)
        if len(phi) != self.target.dim:
            raise ChartMismatch(f"phi has {len(phi)} components, target dim is {self.target.dim}")
        self.source.check(*phi, beta)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "beta", beta)
        if self.phi_inv is not None:
            inv = tuple(as_expr(c) for c in self.phi_inv)
            if len(inv) != self.source.dim:
                raise ChartMismatch(f"phi_inv has {len(inv)} components, source dim is {self.source.dim}")
            self.target.check(*inv)
            object.__setattr__(self, "phi_inv", inv)

    def pullback(self, s) -> Expr:
        """``B^*s = (phi^*s) / beta``."""
        s = as_expr(s)
        self.target.check(s)
        return E.substitute(s, dict(zip(self.target.coords, self.phi))) / self.beta

    def compose(self, first: "Factor") -> "Factor":
        """``self o first``: apply ``first`` then ``self``."""
        if first.target.coords != self.source.coords:
            raise ChartMismatch("factors do not compose: intermediate charts differ")
        phi = _subst_list(self.phi, self.source, first.phi)
        beta = first.beta * E.substitute(self.beta, dict(zip(self.source.coords, first.phi)))
        inv = None
        if self.phi_inv is not None and first.phi_inv is not None:
            inv = _subst_list(first.phi_inv, first.target, self.phi_inv)
        return Factor(first.source, self.target, phi, beta, inv, name=f"{self.name}o{first.name}")

    def inverse(self) -> "Factor":
        """``(phi^-1, 1 / (beta o phi^-1))``."""
        inv = self._require_inverse()
        beta = E.ONE / E.substitute(self.beta, dict(zip(self.source.coords, inv)))
        return Factor(self.target, self.source, inv, beta, self.phi, name=f"{self.name}^-1")

    def _require_inverse(self) -> tuple:
        if self.phi_inv is None:
            raise MissingInverse(f"factor {self.name} has no phi_inv")
        return self.phi_inv

    def check_inverse(self, pts=None, tol: float = DEFAULT_TOL) -> float:
        """Largest ``|phi(phi^-1(y)) - y|`` over target points; raises if above ``tol``."""
        inv = self._require_inverse()
        pts = _as_points(self.target, pts)
        round_trip = _subst_list(self.phi, self.source, inv)
        vals = evaluate_at(round_trip, self.target, pts)
        err = float(np.max(np.abs(vals - np.array([p.values for p in pts]))))
        if err > tol:
            raise ValueError(f"phi_inv is not an inverse of phi (error {err:.3g})")
        return err

    def check_beta(self, pts=None, tol: float = DEFAULT_TOL) -> float:
        pts = _as_points(self.source, pts)
        vals = np.abs(evaluate_at([self.beta], self.source, pts)[:, 0])
        if vals.min() <= tol:
            raise ZeroConversionFactor(f"beta {E.to_string(self.beta)} vanishes at a sample point")
        return float(vals.min())

    @classmethod
    def from_dict(cls, data: dict) -> "Factor":
        source = Chart(data.get("source_name", "Q1"), tuple(data["source"]))
        target = Chart(data.get("target_name", "Q2"), tuple(data["target"]))
        inv = data.get("phi_inv")
        return cls(source, target, tuple(E.parse(x) for x in data["phi"]), E.parse(data["beta"]),
                   tuple(E.parse(x) for x in inv) if inv is not None else None,
                   name=data.get("name", "B"))


def load_factors() -> dict:
    """Bundled example factors keyed by name."""
    text = resources.files("unitfree.data").joinpath("factors.json").read_text()
    return {d["name"]: Factor.from_dict(d) for d in json.loads(text)["factors"]}


def compose_maps(outer: Sequence[Expr], outer_chart: Chart, inner: Sequence[Expr]) -> tuple:
    """``outer o inner`` where ``outer`` is written in ``outer_chart`` coordinates."""
    return _subst_list(outer, outer_chart, inner)


def jet_lift(cs2: ContactSpace, cs1: ContactSpace, B: Factor) -> tuple:
    """Contact map ``J^1 Q2 -> J^1 Q1`` induced by ``B: Q1 -> Q2``.

    A 1-jet ``(q2, p2, z2)`` of a section ``s`` at ``q2 = phi(q1)`` is sent to
    the 1-jet of ``B^*s = (s o phi) / beta`` at ``q1 = phi^-1(q2)``:

        z1   = z2 / beta
        p1_j = (1/beta) sum_i d_j phi^i p2_i - (z2 / beta^2) d_j beta

    with everything on the right evaluated at ``q1``.
    """
    if B.source.coords != cs1.base.coords or B.target.coords != cs2.base.coords:
        raise ChartMismatch("factor charts do not match the contact bases")
    inv = B._require_inverse()
    at_q1 = dict(zip(B.source.coords, inv))
    z2 = E.Var(cs2.z)
    p2 = [E.Var(m) for m in cs2.p]
    beta = E.substitute(B.beta, at_q1)
    dbeta = [E.substitute(E.diff(B.beta, c), at_q1) for c in B.source.coords]
    q1 = list(inv)
    p1 = []
    for j, cj in enumerate(B.source.coords):
        lin = E.ZERO
        for i, phi_i in enumerate(B.phi):
            lin = lin + E.substitute(E.diff(phi_i, cj), at_q1) * p2[i]
        p1.append(lin / beta - z2 / E.ipow(beta, 2) * dbeta[j])
    z1 = z2 / beta
    return tuple(q1 + p1 + [z1])


def jet_lift_factor(cs2: ContactSpace, cs1: ContactSpace, B: Factor) -> Factor:
    """The jet lift as a factor ``J^1 Q2 -> J^1 Q1`` of trivial lines.

    Its conversion function is ``1 / (beta o phi^-1)``: pulling the
    tautological coordinate ``z`` of ``J^1 Q1`` back through the map gives
    ``z2 / beta``, and dividing by ``1 / beta`` returns ``z2``.
    """
    phi = jet_lift(cs2, cs1, B)
    inv = jet_lift(cs1, cs2, B.inverse())
    beta = E.ONE / E.substitute(B.beta, dict(zip(B.source.coords, B.phi_inv)))
    return Factor(cs2.total, cs1.total, phi, beta, inv, name=f"J({B.name})")


def der_pushforward(B: Factor, a: Derivation) -> Derivation:
    """``(phi, beta)_*(X (+) f) = phi_*X (+) (f + beta X[1/beta]) o phi^-1``."""
    inv = B._require_inverse()
    if a.chart.coords != B.source.coords:
        raise ChartMismatch("derivation is not on the factor's source chart")
    B.check_beta()
    at_src = dict(zip(B.source.coords, inv))
    comps = [E.substitute(a.x.apply(phi_k), at_src) for phi_k in B.phi]
    f = a.f0 + B.beta * a.x.apply(E.ONE / B.beta)
    return Derivation(VectorField(B.target, comps), E.substitute(f, at_src))


def spanning_pairs(chart: Chart) -> list:
    fam = spanning_family(chart)
    return [(fam[i], fam[j]) for i in range(len(fam)) for j in range(i + 1, len(fam))]
