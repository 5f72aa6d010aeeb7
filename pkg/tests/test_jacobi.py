import itertools

import numpy as np
import pytest
import sympy as sp

from unitfree import expr as E
from unitfree.contact import build_contact
from unitfree.errors import ChartMismatch, EmptySampleSet, PointOffSurface, ZeroConversionFactor
from unitfree.expr import Chart, parse
from unitfree.jacobi import (BivectorField, Derivation, LichnerowiczStructure, VectorField, bracket,
                             coisotropy_test, conformal_law_check, conformal_transform, evaluate_at,
                             hamiltonian_derivation, hamiltonian_vector_field, integrability_check,
                             jacobi_map_test, jacobiator, nondegeneracy_check, poisson_unit_test,
                             symbol_squiggle_suite)
from unitfree.polys import random_polynomial

from oracles import SympyStructure, to_sympy


@pytest.fixture(scope="module")
def contact1():
    return build_contact(Chart("Q", ("q",))).structure


@pytest.fixture(scope="module")
def contact2():
    return build_contact(Chart("Q", ("q1", "q2"))).structure


@pytest.fixture(scope="module")
def plane():
    return LichnerowiczStructure(Chart("P", ("q", "p")), {("q", "p"): 1}, name="plane")


@pytest.fixture(scope="module")
def twisted():
    """``(dx ^ dy, w dw)``: fails the Jacobi identity wherever ``w != 0``."""
    return LichnerowiczStructure(Chart("N", ("x", "y", "w")), {("x", "y"): 1}, [0, 0, "w"], name="twisted")


def _sym_polys(chart, count, seed, degree=2):
    rng = np.random.default_rng(seed)
    return [random_polynomial(chart, degree, rng) for _ in range(count)]


# --- the oracle agrees with the implementation ----------------------------

def test_bracket_matches_sympy_definition(contact2):
    S = SympyStructure(contact2)
    f, g = _sym_polys(contact2.chart, 2, seed=5)
    ours = to_sympy(bracket(contact2, f, g))
    assert sp.simplify(ours - S.bracket(to_sympy(f), to_sympy(g))) == 0


@pytest.mark.parametrize("name", ["contact1", "contact2", "plane"])
def test_jacobi_identity_holds_symbolically(name, request):
    L = request.getfixturevalue(name)
    S = SympyStructure(L)
    f, g, h = (to_sympy(e) for e in _sym_polys(L.chart, 3, seed=9))
    assert S.jacobiator(f, g, h) == 0


def test_jacobiator_of_twisted_structure_is_w(twisted):
    S = SympyStructure(twisted)
    x, y, w = S.syms
    assert sp.simplify(S.jacobiator(x, y, w) - w) == 0
    pts = twisted.chart.sample(50, seed=2)
    for p in pts[:10]:
        assert jacobiator(twisted, "x", "y", "w", [p]) == pytest.approx(abs(p["w"]), abs=1e-14)


# --- integrability and nondegeneracy --------------------------------------

@pytest.mark.parametrize("name", ["contact1", "contact2", "plane"])
def test_integrable_structures_pass(name, request):
    rep = integrability_check(request.getfixturevalue(name), tol=1e-9, seed=0)
    assert rep.passed, rep.summary()
    assert rep.worst <= 1e-9


def test_twisted_structure_fails_with_witness(twisted):
    rep = integrability_check(twisted, tol=1e-9, seed=0)
    assert not rep.passed
    w = rep.witness["point"]["w"]
    assert rep.worst == pytest.approx(abs(w), rel=1e-12)
    assert rep.witness["triple"] == ["x", "y", "w"]
    assert abs(rep.witness["value"]) == pytest.approx(abs(w), rel=1e-12)


def test_integrability_respects_given_points(twisted):
    near_zero = [twisted.chart.point((0.3, -0.2, w)) for w in (0.0, 1e-12)]
    assert integrability_check(twisted, near_zero, tol=1e-9).passed


def test_empty_sample_is_rejected(contact1):
    with pytest.raises(EmptySampleSet):
        integrability_check(contact1, [], tol=1e-9)


@pytest.mark.parametrize("name", ["contact1", "contact2"])
def test_contact_structures_are_nondegenerate(name, request):
    rep = nondegeneracy_check(request.getfixturevalue(name))
    assert rep.passed
    assert rep.worst == pytest.approx(1.0)


def test_degenerate_structure_is_flagged():
    L = LichnerowiczStructure(Chart("M", ("x", "y", "w")), {("x", "y"): 1})
    assert not nondegeneracy_check(L).passed


# --- Hamiltonian objects --------------------------------------------------

def test_contact_hamilton_equations_in_closed_form(contact1):
    h = parse("(q^2 + p^2)/2 + sin(q)*z")
    X = hamiltonian_vector_field(contact1, h)
    S = SympyStructure(contact1)
    q, p, z = S.syms
    hs = to_sympy(h)
    want = [sp.diff(hs, p), -sp.diff(hs, q) - p * sp.diff(hs, z), p * sp.diff(hs, p) - hs]
    for ours, ref in zip(X.components, want):
        assert sp.simplify(to_sympy(ours) - ref) == 0


def test_hamiltonian_field_matches_sympy(contact2):
    S = SympyStructure(contact2)
    (f,) = _sym_polys(contact2.chart, 1, seed=4, degree=3)
    X = hamiltonian_vector_field(contact2, f)
    for ours, ref in zip(X.components, S.hamilton_field(to_sympy(f))):
        assert sp.expand(to_sympy(ours) - ref) == 0


def test_reeb_kernel_of_contact_form(contact2):
    """``dz - sum p dq`` kills every ``pi``-sharp image and pairs with ``R`` to a unit."""
    chart = contact2.chart
    theta = {"z": E.ONE, "q1": -E.Var("p1"), "q2": -E.Var("p2")}
    for c in chart.coords:
        V = contact2.pi.sharp(E.Var(c))
        val = sum((theta.get(k, E.ZERO) * V[i] for i, k in enumerate(chart.coords)), E.ZERO)
        assert np.allclose(evaluate_at([val], chart, chart.sample(20, seed=1)), 0.0)
    reeb = sum((theta.get(k, E.ZERO) * contact2.r[i] for i, k in enumerate(chart.coords)), E.ZERO)
    assert abs(E.evaluate(reeb, {})) == 1.0


def test_derivations_form_a_lie_algebra_homomorphism(contact1):
    f, g = _sym_polys(contact1.chart, 2, seed=12)
    Df, Dg = hamiltonian_derivation(contact1, f), hamiltonian_derivation(contact1, g)
    lhs = Df.bracket(Dg)
    rhs = hamiltonian_derivation(contact1, bracket(contact1, f, g))
    pts = contact1.chart.sample(50, seed=3)
    a = evaluate_at(list(lhs.x.components) + [lhs.f0], contact1.chart, pts)
    b = evaluate_at(list(rhs.x.components) + [rhs.f0], contact1.chart, pts)
    assert np.max(np.abs(a - b)) <= 1e-9


def test_bracket_is_antisymmetric(contact2):
    f, g = _sym_polys(contact2.chart, 2, seed=21)
    s = bracket(contact2, f, g) + bracket(contact2, g, f)
    assert np.max(np.abs(evaluate_at([s], contact2.chart, contact2.chart.sample(30)))) <= 1e-12


def test_coordinate_brackets(contact1):
    pt = {"q": 0.7, "p": -1.3, "z": 0.4}
    assert E.evaluate(bracket(contact1, "q", "p"), pt) == -1.0
    assert E.evaluate(bracket(contact1, "z", "q"), pt) == pytest.approx(0.7)


def test_vector_field_algebra():
    chart = Chart("M", ("x", "y"))
    X = VectorField(chart, ["y", "-x"])
    Y = VectorField.coordinate(chart, "x")
    br = X.lie_bracket(Y)
    # [y d/dx - x d/dy, d/dx] = d/dy by hand
    assert np.allclose(br.at(chart.point((0.2, 0.3))), [0.0, 1.0])
    with pytest.raises(ChartMismatch):
        X + VectorField.coordinate(Chart("N", ("x", "w")), "x")


def test_bivector_storage_is_antisymmetric():
    chart = Chart("M", ("a", "b", "c"))
    P = BivectorField(chart, {("a", "c"): "b"})
    assert E.evaluate(P.component(2, 0) + P.component(0, 2), {"b": 3.0}) == 0.0
    assert E.evaluate(P.component(0, 2), {"b": 3.0}) == 3.0
    assert P.component(1, 1) == E.ZERO


# --- symbol and squiggle identities ---------------------------------------

def test_symbol_squiggle_identities_on_contact(contact1):
    rng = np.random.default_rng(0)
    f, g, h = (random_polynomial(contact1.chart, 3, rng) for _ in range(3))
    rep = symbol_squiggle_suite(contact1, f, g, h, tol=1e-9, seed=0, dps=40)
    assert rep.passed, rep.summary()
    assert len(rep.residuals) == 5


def test_symbol_squiggle_identities_on_plane(plane):
    rng = np.random.default_rng(1)
    f, g, h = (random_polynomial(plane.chart, 3, rng) for _ in range(3))
    assert symbol_squiggle_suite(plane, f, g, h, tol=1e-9, seed=1).passed


def test_symbol_squiggle_identities_detect_the_twist(twisted):
    rng = np.random.default_rng(2)
    f, g, h = (random_polynomial(twisted.chart, 2, rng) for _ in range(3))
    rep = symbol_squiggle_suite(twisted, f, g, h, tol=1e-9, seed=2)
    assert not rep.passed


# --- unit changes ---------------------------------------------------------

def test_conformal_law_against_sympy(contact1):
    zc = parse("2 + q^2")
    new = conformal_transform(contact1, zc)
    S, S2 = SympyStructure(contact1), SympyStructure(new)
    f, g = (to_sympy(e) for e in _sym_polys(contact1.chart, 2, seed=8))
    z = to_sympy(zc)
    n = len(S.syms)
    pi_zg = sum(S.pi[i, j] * sp.diff(z, S.syms[i]) * sp.diff(g, S.syms[j]) for i in range(n) for j in range(n))
    pi_zf = sum(S.pi[i, j] * sp.diff(z, S.syms[i]) * sp.diff(f, S.syms[j]) for i in range(n) for j in range(n))
    want = z * S.bracket(f, g) + f * pi_zg - g * pi_zf
    assert sp.simplify(S2.bracket(f, g) - want) == 0


@pytest.mark.parametrize("zc", ["2 + q^2", "exp(z/2)", "1 + p^2 + q^2"])
def test_conformal_law_check_passes(contact1, zc):
    rep = conformal_law_check(contact1, zc, random_pairs=20, tol=1e-9)
    assert rep.passed, rep.summary()
    assert rep.residuals["round_trip"] <= 1e-10


def test_poisson_unit_change_creates_reeb_field(plane):
    new = conformal_transform(plane, "q")
    pt = {"q": 0.5, "p": 0.1}
    assert [E.evaluate(c, pt) for c in new.r.components] == [0.0, 1.0]
    assert poisson_unit_test(plane)
    assert not poisson_unit_test(new)


def test_unit_change_must_not_vanish(contact1):
    pts = [contact1.chart.point((q, 0.5, 0.5)) for q in (-1.0, 0.0, 1.0)]
    with pytest.raises(ZeroConversionFactor):
        conformal_transform(contact1, "q", pts)
    conformal_transform(contact1, "q", pts[::2])


def test_unit_change_is_a_jacobi_map(contact1):
    zc = parse("2 + q^2")
    new = conformal_transform(contact1, zc)
    ident = list(contact1.chart.vars())
    assert jacobi_map_test(contact1, new, ident, E.ONE / zc, tol=1e-9).passed
    assert not jacobi_map_test(contact1, new, ident, zc, tol=1e-9).passed


# --- coisotropy -----------------------------------------------------------

def test_zero_section_is_coisotropic(contact1):
    pts = [contact1.chart.point((q, p, 0.0)) for q, p in itertools.product((-1.0, 0.3, 1.7), (-0.5, 0.0, 2.0))]
    rep = coisotropy_test(contact1, ["z"], pts)
    assert rep.passed


def test_origin_fibre_is_not_coisotropic(contact1):
    pts = [contact1.chart.point((0.0, 0.0, z)) for z in (-1.0, 0.0, 0.5)]
    rep = coisotropy_test(contact1, ["q", "p"], pts)
    assert not rep.passed
    assert rep.witness["pair"] == ["q", "p"]
    assert rep.witness["value"] == -1.0


def test_points_off_the_surface_are_rejected(contact1):
    with pytest.raises(PointOffSurface):
        coisotropy_test(contact1, ["z"], [contact1.chart.point((0.0, 0.0, 0.1))])


# --- structural helpers ---------------------------------------------------

def test_opposite_and_rename_preserve_integrability(contact1):
    assert integrability_check(contact1.opposite()).passed
    renamed = contact1.rename({"q": "x", "p": "y", "z": "u"})
    assert renamed.chart.coords == ("x", "y", "u")
    assert integrability_check(renamed).passed


def test_derivation_application():
    chart = Chart("M", ("x",))
    D = Derivation(VectorField(chart, ["1"]), "2")
    assert E.evaluate(D.apply(parse("x^2")), {"x": 3.0}) == pytest.approx(6.0 + 2 * 9.0)
