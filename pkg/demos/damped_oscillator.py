"""
Energy that leaks through the unit
==================================

A harmonic oscillator on the contact phase space (q, p, z), once with an
energy that ignores z and once with a small z coupling. Without coupling,
h stays put. With coupling, h decays exponentially at the rate of the coupling.
"""

import numpy as np

from unitfree import IntegratorConfig, hamilton_flow, parse
from unitfree.contact import build_contact
from unitfree.expr import Chart

cs = build_contact(Chart("Q", ("q",)))
L = cs.structure
cfg = IntegratorConfig("rk4", dt=1e-3, t_end=10.0)

# z-free energy: ordinary oscillator, z only records the action-like drift
free = hamilton_flow(L, parse("(q^2 + p^2)/2"), (1.0, 0.0, 0.0), cfg)
print("z-free:  max |h - h0| =", np.max(np.abs(free.h_values - 0.5)))

# kappa = 0.5 coupling to z
kappa = 0.5
damped = hamilton_flow(L, parse(f"(q^2 + p^2)/2 + {kappa}*z"), (1.0, 0.0, 0.0), cfg)
law = 0.5 * np.exp(-kappa * damped.times)
print("coupled: max |h - h0 exp(-t/2)| =", np.max(np.abs(damped.h_values - law)))

print("\n   t        h(t)          h0*exp(-t/2)")
for t in (0, 2, 4, 6, 8, 10):
    k = int(np.searchsorted(damped.times, t - 1e-12))
    print(f"{damped.times[k]:5.1f}  {damped.h_values[k]:.12f}  {law[k]:.12f}")

# the same run from the command line:
#   unitfree flow damped-oscillator --hamiltonian damped --t-end 10 --out damped.csv
