"""Exception and warning types shared across the package."""


class HypCKNError(Exception):
    """Base class for all package errors."""


class DomainError(HypCKNError, ValueError):
    """Argument outside the domain of a geometric primitive."""


class DegenerateError(HypCKNError, ValueError):
    """A denominator or normalisation degenerates (zero function, N-2+alpha <= 0, ...)."""


class IntegrabilityError(HypCKNError, ValueError):
    """Weighted integral is not integrable at the origin."""


class GridError(HypCKNError, ValueError):
    """Invalid grid specification."""


class ValidationError(HypCKNError, ValueError):
    """Parameter bundle violates the constraints of the requested mode."""

    def __init__(self, violations):
        self.violations = list(violations)
        msg = "; ".join(f"{v.constraint}: {v.detail}" for v in self.violations)
        super().__init__(msg or "invalid parameters")


class ConvergenceError(HypCKNError, RuntimeError):
    """Iteration did not reach the requested tolerance."""


class TailError(HypCKNError, RuntimeError):
    """Solution has not decayed at the truncation radius."""


class ShootingError(HypCKNError, RuntimeError):
    """Shooting integration failed (no sign change, step-size collapse)."""


class PohozaevError(HypCKNError, ValueError):
    """Pohozaev evaluation precondition or cross-check failure."""


class TailWarning(UserWarning):
    """Integrand is not negligible at the truncation radius."""
