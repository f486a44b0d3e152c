"""Numerical verification of Gaussian interpolation inequalities and their flows."""
from .measure import (Grid1D, GridFunction, MeasureSpec, build_custom, build_gaussian,
                      build_perturbed_cosine, build_scaled_gaussian, integrate,
                      derivative, second_derivative, apply_OU)
from .functionals import (DeficitReport, deficit, entropy, fisher, logsob_deficit,
                          lp_norm, project_pi1)

__version__ = "0.1.0"
