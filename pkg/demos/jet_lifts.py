"""
Lifting a change of coordinates and unit
========================================

A factor (phi, beta) on configuration space lifts to a map of 1-jets that
preserves the contact bracket. The lift also works on composites, in
reverse order. Its graph, inside the product with the opposite structure,
is coisotropic.
"""

import numpy as np

from unitfree import build_product, jacobi_map_test, lgraph_coisotropy_test
from unitfree import expr as E
from unitfree.contact import build_contact, compose_maps, jet_lift, jet_lift_factor, load_factors
from unitfree.jacobi import evaluate_at

factors = load_factors()
B, F = factors["affine_scaled"], factors["shift_exp"]
cs = build_contact(B.source)
print("B: q ->", E.to_string(B.phi[0]), " beta =", E.to_string(B.beta))
print("jet lift of B:")
for name, comp in zip(cs.total.coords, jet_lift(cs, cs, B)):
    print(f"  {name}1 = {E.to_string(comp)}")

J = jet_lift_factor(cs, cs, B)
print("\n" + jacobi_map_test(cs.structure, cs.structure, J.phi, J.beta).summary())
graph_space = build_product(cs.structure, cs.structure.opposite(), validate=False)
print(lgraph_coisotropy_test(graph_space, J).summary())

whole = jet_lift(cs, cs, B.compose(F))
staged = compose_maps(jet_lift(cs, cs, F), cs.total, jet_lift(cs, cs, B))
pts = cs.total.sample(100, seed=0)
gap = np.max(np.abs(evaluate_at(whole, cs.total, pts) - evaluate_at(staged, cs.total, pts)))
print(f"\nlift(B o F) vs lift(F) o lift(B): max gap {gap:.2e}")
