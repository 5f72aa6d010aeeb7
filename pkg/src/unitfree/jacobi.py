"""Trivialized Jacobi structures: a bivector ``pi`` and a vector field ``R``.

Fixing a unit identifies sections of the line bundle with functions, and
the Jacobi bracket becomes

    {f, g} = pi(df, dg) + f R[g] - g R[f].

Index conventions used throughout:

* ``pi(df, dg) = sum_ij pi^{ij} d_i f d_j g``;
* the sharp map contracts the first slot, ``pi#(df)^j = sum_i pi^{ij} d_i f``,
  so that ``pi#(df)[g] = pi(df, dg)``;
* the Hamiltonian vector field is ``X_f = f R + pi#(df)``, which gives
  ``X_f[g] = {f, g} + g R[f]``;
* the Hamiltonian derivation is ``D_f = X_f (+) (-R[f])`` so that
  ``D_f(g) = {f, g}``.

Every check here is numeric: expressions are built exactly, then both sides
of an identity are evaluated at sample points and compared.
"""

from __future__ import annotations

import itertools
from typing import Iterable, Mapping, Sequence

import mpmath
import numpy as np

from . import expr as E
from .errors import ChartMismatch, EmptySampleSet, PointOffSurface, ZeroConversionFactor
from .expr import Chart, Expr, Point, as_expr
from .report import Report

__all__ = [
    "VectorField", "BivectorField", "LichnerowiczStructure", "Derivation",
    "bracket", "pi_pair", "hamiltonian_vector_field", "hamiltonian_derivation",
    "jacobiator", "integrability_check", "nondegeneracy_check",
    "conformal_transform", "conformal_law_check", "poisson_unit_test", "symbol_squiggle_suite",
    "coisotropy_test", "jacobi_map_test", "pullback", "sample_points",
    "spanning_family", "evaluate_at", "DEFAULT_TOL", "DEFAULT_POINTS",
]

DEFAULT_TOL = 1e-9
DEFAULT_POINTS = 100


# ---------------------------------------------------------------------------
# sampling and evaluation helpers


def sample_points(chart: Chart, count: int = DEFAULT_POINTS, seed: int = 0, box=None) -> list:
    return chart.sample(count, seed, box)


def _as_points(chart: Chart, pts) -> list:
    if pts is None:
        return sample_points(chart)
    out = []
    for p in pts:
        if isinstance(p, Point):
            if p.chart.coords != chart.coords:
                raise ChartMismatch(
                    f"point on chart {p.chart.coords} used with chart {chart.coords}")
            out.append(p if p.chart == chart else Point(chart, p.values))
        else:
            out.append(Point(chart, p))
    if not out:
        raise EmptySampleSet("no sample points supplied")
    return out


def evaluate_at(exprs: Sequence[Expr], chart: Chart, pts) -> np.ndarray:
    """Values of several expressions at several points, shape ``(len(pts), len(exprs))``."""
    exprs = [as_expr(e) for e in exprs]
    chart.check(*exprs)
    fn = E.compile_many(exprs, chart.coords)
    rows = [fn(p.values) for p in pts]
    return np.asarray(rows, dtype=float).reshape(len(rows), len(exprs))


def _compare(chart: Chart, pts, pairs: Mapping[str, tuple], dps: int | None = None) -> tuple:
    """Evaluate ``lhs - rhs`` for each labelled pair.

    Returns ``(per_label_worst, witness)`` where the witness describes the
    single largest deviation over all labels and points.  With ``dps`` the
    subtraction happens in ``mpmath`` at that precision before rounding, so
    cancellation between large terms does not pollute the residual.
    """
    labels = list(pairs)
    exprs = []
    for lab in labels:
        lhs, rhs = pairs[lab]
        exprs.extend((as_expr(lhs), as_expr(rhs)))
    chart.check(*exprs)
    if dps is None:
        vals = evaluate_at(exprs, chart, pts)
        diffs = np.abs(vals[:, 0::2] - vals[:, 1::2])
    else:
        fn = E.compile_many(exprs, chart.coords, dps=dps)
        vals = np.zeros((len(pts), len(exprs)))
        diffs = np.zeros((len(pts), len(labels)))
        with mpmath.workdps(dps):
            for i, p in enumerate(pts):
                row = fn(p.values)
                vals[i] = [float(v) for v in row]
                diffs[i] = [float(abs(row[2 * k] - row[2 * k + 1])) for k in range(len(labels))]
    per_label = {}
    witness = None
    best = -1.0
    for k, lab in enumerate(labels):
        i = int(np.argmax(diffs[:, k]))
        per_label[lab] = float(diffs[i, k])
        if diffs[i, k] > best:
            best = float(diffs[i, k])
            witness = {
                "identity": lab,
                "point": dict(pts[i]),
                "lhs": float(vals[i, 2 * k]),
                "rhs": float(vals[i, 2 * k + 1]),
            }
    return per_label, witness


def spanning_family(chart: Chart) -> list:
    """``[1, x_1, ..., x_n]``: affine functions span every 1-jet space."""
    return [E.ONE] + chart.vars()


# ---------------------------------------------------------------------------
# fields


class VectorField:
    """Components ``X^i`` of ``sum_i X^i d/dx^i`` on a chart."""

    __slots__ = ("chart", "components")

    def __init__(self, chart: Chart, components: Iterable):
        comps = tuple(as_expr(c) for c in components)
        if len(comps) != chart.dim:
            raise ValueError(f"expected {chart.dim} components, got {len(comps)}")
        chart.check(*comps)
        object.__setattr__(self, "chart", chart)
        object.__setattr__(self, "components", comps)

    def __setattr__(self, name, value):
        raise AttributeError("VectorField is immutable")

    @classmethod
    def zero(cls, chart: Chart) -> "VectorField":
        return cls(chart, [E.ZERO] * chart.dim)

    @classmethod
    def coordinate(cls, chart: Chart, name: str) -> "VectorField":
        """The coordinate field ``d/d name``."""
        i = chart.index(name)
        return cls(chart, [E.ONE if k == i else E.ZERO for k in range(chart.dim)])

    def __getitem__(self, key):
        if isinstance(key, str):
            key = self.chart.index(key)
        return self.components[key]

    def __iter__(self):
        return iter(self.components)

    def __len__(self):
        return len(self.components)

    def __eq__(self, other):
        return (isinstance(other, VectorField) and self.chart == other.chart
                and self.components == other.components)

    def __hash__(self):
        return hash((self.chart, self.components))

    def __repr__(self):
        body = ", ".join(f"{c}: {E.to_string(x)}" for c, x in zip(self.chart.coords, self.components))
        return f"VectorField({body})"

    def _same(self, other):
        if not isinstance(other, VectorField) or other.chart.coords != self.chart.coords:
            raise ChartMismatch("vector fields live on different charts")

    def __add__(self, other):
        self._same(other)
        return VectorField(self.chart, [a + b for a, b in zip(self.components, other.components)])

    def __sub__(self, other):
        self._same(other)
        return VectorField(self.chart, [a - b for a, b in zip(self.components, other.components)])

    def __neg__(self):
        return VectorField(self.chart, [-a for a in self.components])

    def scale(self, f) -> "VectorField":
        f = as_expr(f)
        return VectorField(self.chart, [f * a for a in self.components])

    def apply(self, f) -> Expr:
        """Directional derivative ``X[f]``."""
        f = as_expr(f)
        self.chart.check(f)
        out = E.ZERO
        for c, comp in zip(self.chart.coords, self.components):
            out = out + comp * E.diff(f, c)
        return out

    def lie_bracket(self, other: "VectorField") -> "VectorField":
        """``[X, Y]^j = X[Y^j] - Y[X^j]``."""
        self._same(other)
        return VectorField(self.chart, [self.apply(b) - other.apply(a)
                                        for a, b in zip(self.components, other.components)])

    def at(self, point) -> np.ndarray:
        pts = _as_points(self.chart, [point])
        return evaluate_at(self.components, self.chart, pts)[0]

    def substitute(self, mapping) -> "VectorField":
        return VectorField(self.chart, [E.substitute(c, mapping) for c in self.components])


class BivectorField:
    """Antisymmetric ``pi^{ij}``, stored only for ``i < j``."""

    __slots__ = ("chart", "_upper")

    def __init__(self, chart: Chart, upper: Mapping | None = None):
        store = {}
        for key, value in dict(upper or {}).items():
            i, j = (chart.index(k) if isinstance(k, str) else int(k) for k in key)
            if not (0 <= i < chart.dim and 0 <= j < chart.dim):
                raise ValueError(f"index pair {key} out of range for dim {chart.dim}")
            if i == j:
                raise ValueError(f"diagonal entry {key} of a bivector must be absent")
            value = as_expr(value)
            chart.check(value)
            if i > j:
                i, j, value = j, i, -value
            if (i, j) in store:
                raise ValueError(f"entry {key} given twice")
            if value != E.ZERO:
                store[(i, j)] = value
        object.__setattr__(self, "chart", chart)
        object.__setattr__(self, "_upper", store)

    def __setattr__(self, name, value):
        raise AttributeError("BivectorField is immutable")

    @classmethod
    def zero(cls, chart: Chart) -> "BivectorField":
        return cls(chart, {})

    def component(self, i, j) -> Expr:
        """``pi^{ij}`` for any index pair (names or positions)."""
        i = self.chart.index(i) if isinstance(i, str) else i
        j = self.chart.index(j) if isinstance(j, str) else j
        if i == j:
            return E.ZERO
        if i < j:
            return self._upper.get((i, j), E.ZERO)
        return -self._upper.get((j, i), E.ZERO)

    def upper(self) -> dict:
        """Nonzero strict-upper-triangle entries keyed by position pairs."""
        return dict(self._upper)

    def matrix(self) -> list:
        n = self.chart.dim
        return [[self.component(i, j) for j in range(n)] for i in range(n)]

    def __eq__(self, other):
        return isinstance(other, BivectorField) and self.chart == other.chart and self._upper == other._upper

    def __hash__(self):
        return hash((self.chart, tuple(sorted(self._upper.items()))))

    def __repr__(self):
        c = self.chart.coords
        body = ", ".join(f"{c[i]}^{c[j]}: {E.to_string(v)}" for (i, j), v in sorted(self._upper.items()))
        return f"BivectorField({body})"

    def scale(self, f) -> "BivectorField":
        f = as_expr(f)
        return BivectorField(self.chart, {k: f * v for k, v in self._upper.items()})

    def __neg__(self):
        return self.scale(E.Constant(-1.0))

    def __add__(self, other):
        if not isinstance(other, BivectorField) or other.chart.coords != self.chart.coords:
            raise ChartMismatch("bivector fields live on different charts")
        keys = set(self._upper) | set(other._upper)
        return BivectorField(self.chart, {k: self._upper.get(k, E.ZERO) + other._upper.get(k, E.ZERO)
                                          for k in keys})

    def pair(self, f, g) -> Expr:
        """``pi(df, dg)``."""
        f, g = as_expr(f), as_expr(g)
        self.chart.check(f, g)
        c = self.chart.coords
        out = E.ZERO
        for (i, j), v in sorted(self._upper.items()):
            term = E.diff(f, c[i]) * E.diff(g, c[j]) - E.diff(f, c[j]) * E.diff(g, c[i])
            out = out + v * term
        return out

    def sharp(self, f) -> VectorField:
        """``pi#(df)``, with components ``sum_i pi^{ij} d_i f``."""
        f = as_expr(f)
        self.chart.check(f)
        c = self.chart.coords
        comps = [E.ZERO] * self.chart.dim
        for (i, j), v in sorted(self._upper.items()):
            comps[j] = comps[j] + v * E.diff(f, c[i])
            comps[i] = comps[i] - v * E.diff(f, c[j])
        return VectorField(self.chart, comps)

    def substitute(self, mapping) -> "BivectorField":
        return BivectorField(self.chart, {k: E.substitute(v, mapping) for k, v in self._upper.items()})


class LichnerowiczStructure:
    """A chart with a bivector ``pi`` and a vector field ``r``.

    ``pi`` may be a :class:`BivectorField` or a mapping from index pairs
    (positions or coordinate names) to expressions; ``r`` a
    :class:`VectorField` or a list of expressions.  Integrability is not
    enforced here; run :func:`integrability_check`.
    """

    __slots__ = ("chart", "pi", "r", "name")

    def __init__(self, chart: Chart, pi=None, r=None, name: str | None = None):
        if not isinstance(pi, BivectorField):
            pi = BivectorField(chart, pi or {})
        if r is None:
            r = VectorField.zero(chart)
        elif not isinstance(r, VectorField):
            r = VectorField(chart, r)
        if pi.chart != chart or r.chart != chart:
            raise ChartMismatch("pi and R must share the structure's chart")
        object.__setattr__(self, "chart", chart)
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "name", name or chart.name)

    def __setattr__(self, name, value):
        raise AttributeError("LichnerowiczStructure is immutable")

    def __eq__(self, other):
        return (isinstance(other, LichnerowiczStructure) and self.chart == other.chart
                and self.pi == other.pi and self.r == other.r)

    def __hash__(self):
        return hash((self.chart, self.pi, self.r))

    def __repr__(self):
        return f"LichnerowiczStructure({self.name!r}, pi={self.pi!r}, R={self.r!r})"

    def bracket(self, f, g) -> Expr:
        return bracket(self, f, g)

    def hamiltonian_vector_field(self, f) -> VectorField:
        return hamiltonian_vector_field(self, f)

    def hamiltonian_derivation(self, f) -> "Derivation":
        return hamiltonian_derivation(self, f)

    def conformal(self, zc, pts=None, tol=DEFAULT_TOL) -> "LichnerowiczStructure":
        return conformal_transform(self, zc, pts, tol)

    def opposite(self) -> "LichnerowiczStructure":
        """``(-pi, -R)``: the same bracket with the opposite sign."""
        return LichnerowiczStructure(self.chart, -self.pi, -self.r, name=f"{self.name}_opp")

    def rename(self, mapping: Mapping[str, str], name: str | None = None) -> "LichnerowiczStructure":
        """Relabel coordinates; ``mapping`` sends old names to new ones."""
        coords = tuple(mapping.get(c, c) for c in self.chart.coords)
        chart = Chart(name or self.chart.name, coords)
        sub = {old: E.Var(new) for old, new in mapping.items() if old != new}
        pi = BivectorField(chart, {k: E.substitute(v, sub) for k, v in self.pi.upper().items()})
        r = VectorField(chart, [E.substitute(c, sub) for c in self.r.components])
        return LichnerowiczStructure(chart, pi, r, name=name or self.name)


class Derivation:
    """A derivation of the trivial line bundle, split as ``X (+) f0``.

    It acts on functions (sections in the fixed unit) by
    ``D(g) = X[g] + f0 g``.
    """

    __slots__ = ("x", "f0")

    def __init__(self, x: VectorField, f0=0):
        f0 = as_expr(f0)
        x.chart.check(f0)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "f0", f0)

    def __setattr__(self, name, value):
        raise AttributeError("Derivation is immutable")

    @property
    def chart(self) -> Chart:
        return self.x.chart

    def __eq__(self, other):
        return isinstance(other, Derivation) and self.x == other.x and self.f0 == other.f0

    def __hash__(self):
        return hash((self.x, self.f0))

    def __repr__(self):
        return f"Derivation({self.x!r}, f0={E.to_string(self.f0)})"

    def apply(self, g) -> Expr:
        g = as_expr(g)
        return self.x.apply(g) + self.f0 * g

    def bracket(self, other: "Derivation") -> "Derivation":
        """``[X (+) f, Y (+) g] = [X, Y] (+) (X[g] - Y[f])``."""
        return Derivation(self.x.lie_bracket(other.x), self.x.apply(other.f0) - other.x.apply(self.f0))


# ---------------------------------------------------------------------------
# brackets and Hamiltonian objects


def _bound(L: LichnerowiczStructure, *exprs) -> list:
    out = [as_expr(e) for e in exprs]
    L.chart.check(*out)
    return out


def pi_pair(L: LichnerowiczStructure, f, g) -> Expr:
    return L.pi.pair(f, g)


def bracket(L: LichnerowiczStructure, f, g) -> Expr:
    """``{f, g} = pi(df, dg) + f R[g] - g R[f]``."""
    f, g = _bound(L, f, g)
    return L.pi.pair(f, g) + f * L.r.apply(g) - g * L.r.apply(f)


def hamiltonian_vector_field(L: LichnerowiczStructure, f) -> VectorField:
    """``X_f = f R + pi#(df)``."""
    (f,) = _bound(L, f)
    return L.r.scale(f) + L.pi.sharp(f)


def hamiltonian_derivation(L: LichnerowiczStructure, f) -> Derivation:
    (f,) = _bound(L, f)
    return Derivation(hamiltonian_vector_field(L, f), -L.r.apply(f))


def jacobiator_expr(L: LichnerowiczStructure, f, g, h) -> Expr:
    f, g, h = _bound(L, f, g, h)
    b = lambda a, c: bracket(L, a, c)
    return b(b(f, g), h) + b(b(g, h), f) + b(b(h, f), g)


def jacobiator(L: LichnerowiczStructure, f, g, h, pts=None) -> float:
    """Largest ``|{{f,g},h} + {{g,h},f} + {{h,f},g}|`` over the points."""
    pts = _as_points(L.chart, pts)
    vals = evaluate_at([jacobiator_expr(L, f, g, h)], L.chart, pts)
    return float(np.max(np.abs(vals)))


# ---------------------------------------------------------------------------
# checks


def integrability_check(L: LichnerowiczStructure, pts=None, tol: float = DEFAULT_TOL, seed=None) -> Report:
    """Jacobiator over every triple of distinct members of ``{1, x_1, ..., x_n}``.

    The Jacobiator is a first-order differential operator in each argument,
    so its values on affine functions determine it completely; repeated
    entries are skipped because it is alternating.
    """
    pts = _as_points(L.chart, pts)
    family = spanning_family(L.chart)
    labels = ["1"] + list(L.chart.coords)
    triples = list(itertools.combinations(range(len(family)), 3))
    exprs = [jacobiator_expr(L, *(family[k] for k in t)) for t in triples]
    if exprs:
        vals = evaluate_at(exprs, L.chart, pts)
    else:
        vals = np.zeros((len(pts), 0))
    residuals = {}
    witness = None
    worst = 0.0
    for col, t in enumerate(triples):
        name = ",".join(labels[k] for k in t)
        col_abs = np.abs(vals[:, col])
        i = int(np.argmax(col_abs))
        residuals[name] = float(col_abs[i])
        if col_abs[i] > worst:
            worst = float(col_abs[i])
            witness = {"triple": [labels[k] for k in t], "point": dict(pts[i]), "value": float(vals[i, col])}
    return Report("integrability", worst <= tol, worst, tol, witness, residuals, seed)


def nondegeneracy_matrix(L: LichnerowiczStructure) -> list:
    """``R^i R^j + pi^{ij}`` as a nested list of expressions."""
    n = L.chart.dim
    r = L.r.components
    return [[r[i] * r[j] + L.pi.component(i, j) for j in range(n)] for i in range(n)]


def nondegeneracy_check(L: LichnerowiczStructure, pts=None, tol: float = DEFAULT_TOL, seed=None) -> Report:
    """Pass iff ``|det(R R^T + pi)| >= tol`` at every point; ``worst`` is the smallest ``|det|``."""
    pts = _as_points(L.chart, pts)
    n = L.chart.dim
    flat = [e for row in nondegeneracy_matrix(L) for e in row]
    vals = evaluate_at(flat, L.chart, pts).reshape(len(pts), n, n)
    dets = np.abs(np.linalg.det(vals))
    i = int(np.argmin(dets))
    worst = float(dets[i])
    witness = {"point": dict(pts[i]), "det": float(np.linalg.det(vals[i]))}
    return Report("nondegeneracy", worst >= tol, worst, tol, witness, {"min_abs_det": worst}, seed)


def conformal_transform(L: LichnerowiczStructure, zc, pts=None, tol: float = DEFAULT_TOL) -> LichnerowiczStructure:
    """Structure in the unit ``u' = zc u``: ``(zc pi, zc R + pi#(dzc))``.

    ``zc`` must stay away from zero at the sample points (default: 100
    seeded points in ``[-2, 2]^n``).
    """
    (zc,) = _bound(L, zc)
    pts = _as_points(L.chart, pts)
    vals = evaluate_at([zc], L.chart, pts)[:, 0]
    i = int(np.argmin(np.abs(vals)))
    if abs(vals[i]) <= tol:
        raise ZeroConversionFactor(
            f"conversion factor {E.to_string(zc)} is {vals[i]:.3g} at {dict(pts[i])}")
    new_r = L.r.scale(zc) + L.pi.sharp(zc)
    return LichnerowiczStructure(L.chart, L.pi.scale(zc), new_r, name=L.name)


def poisson_unit_test(L: LichnerowiczStructure, pts=None, tol: float = DEFAULT_TOL) -> bool:
    """True iff ``R`` vanishes (sup norm within ``tol``) at every point."""
    pts = _as_points(L.chart, pts)
    vals = evaluate_at(L.r.components, L.chart, pts)
    return bool(np.max(np.abs(vals), initial=0.0) <= tol)


def symbol_squiggle_identities(L: LichnerowiczStructure, f, g, h, sections=None) -> dict:
    """Both sides of the symbol/squiggle identities in one fixed unit.

    Sections ``alpha, beta, gamma`` (default ``f, g, h``) stand for
    ``alpha u`` etc.; their symbol is ``X_alpha`` and the squiggle of
    ``df (x) beta u`` acts as ``beta pi#(df)``.  Vector-field identities
    are compared component by component, which is their action on the
    coordinate functions.
    """
    f, g, h = _bound(L, f, g, h)
    a, b, c = _bound(L, *(sections if sections is not None else (f, g, h)))
    X = lambda s: hamiltonian_vector_field(L, s)
    P = L.pi.pair
    sq = lambda fn, s: L.pi.sharp(fn).scale(s)
    coords = L.chart.coords
    out = {}

    def vec(label, lhs: VectorField, rhs: VectorField):
        for name, l, r in zip(coords, lhs.components, rhs.components):
            out[f"{label}[{name}]"] = (l, r)

    # symbol of f*alpha
    vec("1 symbol_of_product", X(f * a), X(a).scale(f) + sq(f, a))
    # squiggle antisymmetry
    out["2 squiggle_antisymmetry"] = (a * P(f, g), -(a * P(g, f)))
    # symbol is a Lie algebra map
    vec("3 symbol_bracket", X(bracket(L, a, b)), X(a).lie_bracket(X(b)))
    # commutator of a symbol with a squiggle
    vec("4 symbol_squiggle_commutator",
        X(a).lie_bracket(sq(f, b)),
        sq(X(a).apply(f), b) + sq(f, bracket(L, a, b)))
    # cyclic identity; holds as lhs = -rhs
    lhs5 = (a * c * P(f, b * P(g, h)) + b * a * P(g, c * P(h, f)) + c * b * P(h, a * P(f, g)))
    rhs5 = (X(b).apply(f) * a * c * P(g, h) + X(c).apply(g) * b * a * P(h, f)
            + X(a).apply(h) * c * b * P(f, g))
    out["5 cyclic"] = (lhs5, -rhs5)
    return out


def symbol_squiggle_suite(L: LichnerowiczStructure, f, g, h, pts=None, tol: float = DEFAULT_TOL,
                          sections=None, seed=None, dps: int | None = None) -> Report:
    """Run the symbol/squiggle identities; ``dps`` selects extended precision."""
    pts = _as_points(L.chart, pts)
    pairs = symbol_squiggle_identities(L, f, g, h, sections)
    detail, witness = _compare(L.chart, pts, pairs, dps)
    grouped = {}
    for label, value in detail.items():
        key = label.split("[")[0]
        grouped[key] = max(grouped.get(key, 0.0), value)
    worst = max(grouped.values(), default=0.0)
    return Report("symbol_squiggle", worst <= tol, worst, tol, witness, grouped, seed, {"components": detail})


def coisotropy_test(L: LichnerowiczStructure, constraints, surface_pts, tol: float = DEFAULT_TOL) -> Report:
    """Hamiltonian fields of the constraints must be tangent to their zero set.

    Gates on ``X_a[phi_b] = 0`` on the surface for every ordered pair;
    also reports the bracket ``{phi_a, phi_b}`` on the surface.
    """
    cons = _bound(L, *constraints)
    if not cons:
        raise ValueError("at least one constraint is required")
    pts = _as_points(L.chart, surface_pts)
    on = evaluate_at(cons, L.chart, pts)
    bad = np.argwhere(np.abs(on) > tol)
    if bad.size:
        i, a = bad[0]
        raise PointOffSurface(
            f"constraint {E.to_string(cons[a])} = {on[i, a]:.3g} at {dict(pts[i])} exceeds tol {tol:g}")
    pairs = list(itertools.product(range(len(cons)), repeat=2))
    tangency = [hamiltonian_vector_field(L, cons[a]).apply(cons[b]) for a, b in pairs]
    brackets = [bracket(L, cons[a], cons[b]) for a, b in pairs]
    vals = evaluate_at(tangency + brackets, L.chart, pts)
    tv, bv = vals[:, :len(pairs)], vals[:, len(pairs):]
    worst, witness = 0.0, None
    for k, (a, b) in enumerate(pairs):
        for i in range(len(pts)):
            if abs(tv[i, k]) > worst:
                worst = abs(tv[i, k])
                witness = {"pair": [E.to_string(cons[a]), E.to_string(cons[b])],
                           "point": dict(pts[i]), "value": float(tv[i, k])}
    bracket_worst = float(np.max(np.abs(bv), initial=0.0))
    residuals = {"tangency": float(worst), "bracket_on_surface": bracket_worst}
    return Report("coisotropy", worst <= tol, float(worst), tol, witness, residuals,
                  extra={"bracket_condition_passed": bracket_worst <= tol})


def pullback(phi: Mapping[str, Expr] | Sequence[Expr], target: Chart, beta, f) -> Expr:
    """``(phi^* f) / beta`` for ``f`` on the target chart."""
    if not isinstance(phi, Mapping):
        phi = dict(zip(target.coords, phi))
    f = as_expr(f)
    target.check(f)
    return E.substitute(f, phi) / as_expr(beta)


def jacobi_map_test(source: LichnerowiczStructure, target: LichnerowiczStructure, phi, beta,
                    test_pairs=None, pts=None, tol: float = DEFAULT_TOL, seed=None,
                    dps: int | None = None) -> Report:
    """Does ``B = (phi, beta)`` pull brackets of ``target`` back to brackets of ``source``?

    The residual for a pair ``(f, g)`` on the target chart is
    ``|B^*{f, g}_target - {B^*f, B^*g}_source|`` with ``B^*s = (phi^*s)/beta``.
    The affine spanning family of the target chart is always included, which
    makes the test complete on the sampled points; ``test_pairs`` adds more.
    """
    phi = [as_expr(c) for c in phi]
    if len(phi) != target.chart.dim:
        raise ChartMismatch(f"phi has {len(phi)} components, target chart has dim {target.chart.dim}")
    source.chart.check(*phi)
    (beta,) = _bound(source, beta)
    pts = _as_points(source.chart, pts)
    bvals = evaluate_at([beta], source.chart, pts)[:, 0]
    if np.min(np.abs(bvals)) <= tol:
        raise ZeroConversionFactor(f"beta {E.to_string(beta)} vanishes at a sample point")
    fam = spanning_family(target.chart)
    pairs = list(itertools.combinations(fam, 2))
    pairs += [tuple(as_expr(x) for x in p) for p in (test_pairs or [])]
    phimap = dict(zip(target.chart.coords, phi))
    labelled = {}
    for f, g in pairs:
        lhs = pullback(phimap, target.chart, beta, bracket(target, f, g))
        rhs = bracket(source, pullback(phimap, target.chart, beta, f), pullback(phimap, target.chart, beta, g))
        labelled[f"{{{E.to_string(f)}, {E.to_string(g)}}}"] = (lhs, rhs)
    detail, witness = _compare(source.chart, pts, labelled, dps)
    worst = max(detail.values(), default=0.0)
    return Report("jacobi_map", worst <= tol, worst, tol, witness, detail, seed)


def conformal_law_check(L: LichnerowiczStructure, zc, test_pairs=None, pts=None, tol: float = DEFAULT_TOL,
                        seed: int = 0, random_pairs: int = 5) -> Report:
    """Two-sided check of a unit change by ``zc``.

    ``law``: the bracket of the transformed structure against
    ``zc {f,g} + f pi(dzc, dg) - g pi(dzc, df)``.  ``round_trip``:
    transforming back by ``1/zc`` recovers every coefficient.
    """
    from .polys import random_polynomial
    (zc,) = _bound(L, zc)
    pts = _as_points(L.chart, pts)
    new = conformal_transform(L, zc, pts, tol)
    back = conformal_transform(new, E.ONE / zc, pts, tol)
    fam = spanning_family(L.chart)
    pairs = list(itertools.combinations(fam, 2))
    rng = np.random.default_rng(seed)
    pairs += [(random_polynomial(L.chart, 2, rng), random_polynomial(L.chart, 2, rng)) for _ in range(random_pairs)]
    pairs += [tuple(as_expr(x) for x in p) for p in (test_pairs or [])]
    law = {}
    for k, (f, g) in enumerate(pairs):
        rhs = zc * bracket(L, f, g) + f * L.pi.pair(zc, g) - g * L.pi.pair(zc, f)
        law[f"law {k}"] = (bracket(new, f, g), rhs)
    n = L.chart.dim
    coef = {}
    for i in range(n):
        coef[f"R[{L.chart.coords[i]}]"] = (back.r.components[i], L.r.components[i])
        for j in range(i + 1, n):
            coef[f"pi[{L.chart.coords[i]},{L.chart.coords[j]}]"] = (back.pi.component(i, j), L.pi.component(i, j))
    law_detail, law_wit = _compare(L.chart, pts, law)
    rt_detail, rt_wit = _compare(L.chart, pts, coef)
    residuals = {"law": max(law_detail.values()), "round_trip": max(rt_detail.values())}
    worst = max(residuals.values())
    witness = law_wit if residuals["law"] >= residuals["round_trip"] else rt_wit
    return Report("conformal", worst <= tol, worst, tol, witness, residuals, seed,
                  {"r_new": [E.to_string(c) for c in new.r.components]})
