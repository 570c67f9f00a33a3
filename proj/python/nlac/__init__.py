"""1-D nonlinear acoustics toolkit.

Time-domain solvers for the classical and relaxation-augmented wave models
with integer or fractional damping, discrete fractional-derivative kernels,
vanishing-parameter limit sweeps, a multiharmonic periodic-state solver, and
Gauss-Newton recovery of a piecewise-constant nonlinearity coefficient.
"""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
