"""Feedback integrators for nonholonomic mechanical systems.

Nonholonomic equations are extended to the whole phase space so that the
constraints become first integrals, and a Lyapunov feedback term then keeps
any one-step integrator close to the constraint set and energy level.
"""
from .extension import (BundleSetup, CanonicalSetup, ConstraintFrame, DegenerateFrameError, ExtendedField,
                        FirstIntegral, LiePoissonSetup, constraint_momenta, extended_field_bundle,
                        extended_field_canonical, extended_field_lie_poisson, extended_hamiltonian,
                        general_multipliers, multipliers_tilde)
from .feedback import (FeedbackField, IntegralSpec, LyapunovSpec, ManifoldPenalty, feedback_field,
                       gradient_check, lyapunov_gradient, lyapunov_value)
from .steppers import StepperKind, TrajectoryRecord, dla_step, integrate, integrate_dla, step
from .systems import make_entry, system_names

__version__ = "0.1.0"
