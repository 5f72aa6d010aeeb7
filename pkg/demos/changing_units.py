"""
Changing the unit
=================

A Lichnerowicz pair (pi, R) describes the bracket in one chosen unit. Multiplying
the unit by a nonvanishing function zc gives the pair (zc pi, zc R + pi#(dzc)).
A Poisson bracket (R = 0) picks up a Reeb field as soon as zc is not constant.
"""

from unitfree import LichnerowiczStructure, conformal_law_check, conformal_transform, integrability_check
from unitfree import expr as E
from unitfree.errors import ZeroConversionFactor
from unitfree.expr import Chart

plane = LichnerowiczStructure(Chart("P", ("q", "p")), {("q", "p"): 1}, name="plane")
print("plane:", plane)

for zc in ("2 + q^2", "exp(p)"):
    new = conformal_transform(plane, zc)
    print(f"\nzc = {zc}")
    print("  R' =", [E.to_string(c) for c in new.r.components])
    print("  still a Jacobi structure:", integrability_check(new).passed)
    print(" ", conformal_law_check(plane, zc).summary())

# zc = q is only a unit where q != 0; checked on points that include q = 0 it is refused
on_axis = [plane.chart.point((q, 1.0)) for q in (-1.0, 0.0, 1.0)]
try:
    conformal_transform(plane, "q", on_axis)
except ZeroConversionFactor as exc:
    print("\nzc = q:", exc)
pts = plane.chart.sample(100, seed=0, box={"q": (0.5, 2.0)})
new = conformal_transform(plane, "q", pts)
print("zc = q on q > 0.5: R' =", [E.to_string(c) for c in new.r.components])
