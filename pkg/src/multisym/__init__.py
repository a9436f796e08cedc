"""Covariant Hamiltonian field theory on trivial bundles: Legendre
transform, multisymplectic structure matrices, Noether currents, a box
scheme for 1+1 wave equations and diagonal pattern analysis."""

from .bundle import (FieldSpec, JetPoint, SectionPatch, connection_coeffs,
                     jet_of_section, random_patch)
from .errors import (ConvergenceError, MultisymError, SingularJacobianError,
                     StencilError, UnknownModelError, UnsupportedDimensionError)
from .lagrangian import (CallableLagrangian, LagrangianDensity, PhasePoint,
                         QuadraticLagrangian, elliptic_pattern, hamiltonian,
                         hamiltonian_partials, invert_legendre, legendre,
                         make_lagrangian, nonlinear_wave, particle, regularity_check)
from .multihamiltonian import (assemble_structure_matrices, bridges_form_residual,
                               ddw_as_bridges, ddw_residual, equivalence_check,
                               euler_lagrange_residual)
from .noether import (SymmetryGenerator, divergence_residual, equivariance_check,
                      lift_generator, momentum_map, noether_current, particle_noether)
from .integrate import (FieldState, Grid1P1, exact_solution, initial_state, simulate,
                        step_box)
from .patterns import (constraint_levels, find_periodic_orbit, hessian_index,
                       reduce_diagonal)

__version__ = "0.1.0"
