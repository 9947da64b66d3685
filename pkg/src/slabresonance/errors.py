"""Exception types shared across the package."""


class SlabError(Exception):
    """Base class for numerical / model errors raised by this package."""


class ConfigError(SlabError):
    """Invalid lattice configuration (schema, invariants, tunable path)."""


class WoodAnomalyError(SlabError):
    """A diffraction order sits too close to its branch point (cutoff)."""


class PendantPoleError(SlabError):
    """omega^2 coincides with an isolated pendant resonance mu."""


class NearSingularError(SlabError):
    """Interaction matrix is numerically singular (resonance proximity).

    Carries the smallest singular value in ``sigma_min``.
    """

    def __init__(self, message, sigma_min=None):
        super().__init__(message)
        self.sigma_min = sigma_min


class NoPropagatingOrderError(SlabError):
    """No propagating diffraction order: far field undefined."""


class BranchCollisionError(SlabError):
    """Eigenvalue-branch continuation became ambiguous (overlap < 0.5)."""


class ConvergenceError(SlabError):
    """Iteration (Newton, tuner, ...) failed to converge."""


class DispersionSignError(SlabError):
    """Im omega > 0 found on a real-kappa dispersion branch.

    The model forbids this; treat as a branch-tracking or model error.
    """
