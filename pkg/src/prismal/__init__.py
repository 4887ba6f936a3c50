"""Exact barycentric exterior calculus on simplicial and prismal complexes.

The package builds the two prismal sheaves attached to a simplicial
morphism, computes Whitney forms and their relative calculus with exact
rational coefficients, and constructs relative primitives of fiberwise-
exact piecewise-polynomial forms, with every structural identity encoded
as an executable check.
"""

__version__ = "0.1.0"

from .mesh import (Prism, PrismalSet, Simplex, SimplicialComplex,
                   SimplicialMorphism, boundary_chain, faces, fiber_product,
                   incidence_number, join, prism_boundary, prism_incidence)
from .forms import (CoordMap, CoordSystem, Form, Poly, canonicalize, d,
                    de_form, equal_mod_relations, integrate_fiber,
                    integrate_top_form, is_fiberwise_zero, pi_context,
                    poincare_primitive, prism_context, pullback, relative_d,
                    restrict_to_face, simplex_context, vertical_part, wedge,
                    whitney, whitney_antiboundary, whitney_extended,
                    whitney_prism, whitney_relative)
from .sheaf import (PrismalSheaf, build_Pf, build_Sf,
                    check_Pf_characterization, check_Sf_characterization,
                    fiber_structure, is_equidimensional, psi_coordinate_map,
                    psi_morphism, psi_sigma, theta_sigma)
from .primitive import (FiberwiseDecomposition, RelativePrimitive, assemble_C,
                        build_relative_primitive, check_horizontal, extract_A,
                        ode_solve, solve_vertical_gluing, verify_theodg)
