"""Exception types raised by the numerical engine."""


class GQDError(Exception):
    """Base class for all engine errors."""


class NonConvergence(GQDError):
    """Adaptive quadrature or an iterative solver ran out of budget."""


class PoleHit(GQDError):
    """A T-matrix denominator vanished (bound-state or resonance pole)."""


class MarginalExponent(GQDError):
    """Form-factor fall-off exponent alpha = 1/2 is excluded."""


class IndexOutOfOrder(GQDError):
    """Requested expansion term lies beyond the stored order."""


class InsufficientOrder(GQDError):
    """Not enough shape parameters to build the requested couplings."""


class SignMismatch(GQDError):
    """Tail scale would be non-positive for the given (c2, J1)."""


class ZeroAmplitude(GQDError):
    pass


class OffShellKinematics(GQDError):
    """Initial and final two-nucleon energies differ."""


class OnAxis(GQDError):
    """Green operator requested on the real energy axis."""


class ContourTooNarrow(GQDError):
    """Contour truncation estimate exceeds the allowed bound."""


class RankDeficient(GQDError):
    pass


class Unidentifiable(GQDError):
    """Requested parameters are not separable with the supplied data."""
