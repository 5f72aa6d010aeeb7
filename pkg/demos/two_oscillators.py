"""
Two systems, one unit
=====================

The product of two unit-free systems lives on x, y and a conversion
coordinate b > 0 between their units. Sections of the right factor pull back
divided by b. The combined energy H = h1 + h2/b evolves each factor by its
own bracket.
"""

from unitfree import additivity_demo, build_product, verify_product
from unitfree import expr as E
from unitfree.contact import build_contact
from unitfree.expr import Chart

L = build_contact(Chart("Q", ("q",))).structure
ps = build_product(L, L)
print("coordinates:", ps.total.coords)
print("nonzero pi entries:")
for (i, j), v in sorted(ps.structure.pi.upper().items()):
    print(f"  pi[{ps.total.coords[i]}, {ps.total.coords[j]}] = {E.to_string(v)}")
print("R =", [E.to_string(c) for c in ps.structure.r.components])

rep = verify_product(ps, ps.sample(50, seed=0))
print("\n" + rep.summary())
for name, worst in rep.residuals.items():
    print(f"  {name:<45} {worst:.2e}")

osc = "(q^2 + p^2)/2"
demo = additivity_demo(ps, osc, osc)
print("\nH =", demo.extra["H"])
print(demo.summary())
for name, worst in demo.residuals.items():
    print(f"  {name:<20} {worst:.2e}")
