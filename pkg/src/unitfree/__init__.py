"""Unit-free Hamiltonian mechanics on coordinate charts.

Trivialized Jacobi structures (Lichnerowicz pairs), their brackets and
Hamiltonian objects, canonical contact phase spaces with jet lifts,
product structures, and integration of unit-free Hamilton's equations.
"""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .expr import Chart, Point, parse, diff, simplify, evaluate, to_string  # noqa: E402
from .jacobi import (LichnerowiczStructure, VectorField, BivectorField, Derivation, bracket,  # noqa: E402
                     hamiltonian_vector_field, hamiltonian_derivation, jacobiator, integrability_check,
                     nondegeneracy_check, conformal_transform, conformal_law_check, poisson_unit_test,
                     symbol_squiggle_suite, coisotropy_test, jacobi_map_test)
from .contact import (ContactSpace, Factor, build_contact, lift_observable, lift_derivation,  # noqa: E402
                      jet_lift, jet_lift_factor, der_pushforward, load_factors)
from .product import (ProductSpace, build_product, corrupt_product, ratio_function,  # noqa: E402
                      verify_product, lgraph_coisotropy_test, uniqueness_check)
from .dynamics import (IntegratorConfig, Trajectory, hamilton_flow, conservation_diagnostics,  # noqa: E402
                       newtonian_energy, additivity_demo)
from .report import Report  # noqa: E402
