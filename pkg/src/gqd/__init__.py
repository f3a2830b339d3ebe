"""Two-nucleon scattering from the generalized dynamical equation (GDE).

The T-matrix is obtained from a first-order equation in the complex energy
rather than from a Lippmann-Schwinger equation.  Subpackages cover an exact
separable test model, the pionless 1S0 channel at arbitrary order, effective
range and KSW machinery, external-probe Born amplitudes, a cutoff
renormalization comparison, and contour-integral time evolution.
"""
from .errors import GQDError
from .numerics import ComplexEnergy, QuadratureResult, radial_integral, pv_pole_integral, sqrt_neg

__version__ = "0.1.0"

__all__ = [
    "ComplexEnergy",
    "GQDError",
    "QuadratureResult",
    "pv_pole_integral",
    "radial_integral",
    "sqrt_neg",
]
