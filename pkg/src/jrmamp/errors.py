"""Exception hierarchy shared by all jrmamp modules."""


class JrmError(Exception):
    """Base class for numerical failures raised by jrmamp."""


class SolverError(JrmError, ArithmeticError):
    """The segment phase equation did not converge."""

    def __init__(self, phi, alpha, msg="segment solver did not converge"):
        self.phi = phi
        self.alpha = alpha
        super().__init__(f"{msg} (phi={phi!r}, alpha={alpha!r})")


class BranchInstabilityError(JrmError):
    """Implicit derivative is singular: 1 + alpha*cos(chi) <= 0."""


class IterationLimitError(JrmError):
    """Local minimization hit its iteration limit.

    ``best`` holds the best configuration found and ``energy`` its energy.
    """

    def __init__(self, msg, best=None, energy=None):
        self.best = best
        self.energy = energy
        super().__init__(msg)


class NoRootError(JrmError):
    """No Kerr null inside the searched flux window."""


class InstabilityError(JrmError):
    """Negative squared eigenfrequency: expansion about a non-minimum."""

    def __init__(self, flux, omega2):
        self.flux = flux
        self.omega2 = omega2
        super().__init__(
            f"negative squared eigenfrequency {omega2!r} at phi_ext={flux!r}"
        )


class DivergenceError(JrmError):
    """Linear response system is singular (parametric instability)."""

    def __init__(self, omega, msg="scattering matrix diverges"):
        self.omega = omega
        super().__init__(f"{msg}: pole at omega={omega!r}")


class UnreachableGainError(JrmError):
    """Requested gain lies at or beyond the single-pump pole."""


class BandwidthError(JrmError):
    """Gain curve does not cross the half-power level on both sides."""


class FitError(JrmError):
    """Efficiency fit failed to converge or is ill-conditioned."""


class PostselectionError(JrmError):
    """Too few shots survived postselection."""
