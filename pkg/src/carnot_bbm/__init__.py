"""Numerical toolkit for nonlocal Sobolev functionals on Carnot groups."""
from .algebra import (AlgebraError, StratifiedAlgebra, abelian, apply_horizontal_rotation, builtin_group, dilate,
                      engel, heisenberg, horizontal_frame, inverse, multiply)
from .integrate import (Estimate, IntegrationError, IntegratorConfig, ball_volume_constant, folland_radial,
                        integrate_ball)
from .metric import (GaugeError, HomogeneousGauge, HorizontalPath, ballbox_path, cc_distance,
                     estimate_equivalence_lambda, estimate_quasi_triangle_alpha, gauge_distance, gauge_norm, koranyi)
from .mollify import MollifierFamily, make_family, tail_mass, to_one_dim
from .poincare import (OneDimSample, PoincareReport, RadialWeight, ball_poincare, fractional_poincare, g_function,
                       one_dim_inequality, poincare_ponce, scaled_interval_inequality, sigma_rescaled_inequality)
from .sobolev import (BBMResult, ScalarField, bbm_functional, convergence_experiment, horizontal_gradient, kappa,
                      kappa_n, make_field, pansu_remainder)

__version__ = "0.1.0"
