"""Error taxonomy shared across the toolkit.

The CLI maps these onto its exit-code contract; library users can catch them
individually.  Anything else (bad JSON, malformed rationals, unknown labels)
surfaces as ValueError and counts as invalid input.
"""


class PreconditionError(ValueError):
    """A documented operation precondition was violated by the caller."""


class DegenerateGeometryError(ValueError):
    """An exact check found a configuration excluded by general position."""


class PerturbationBudgetError(RuntimeError):
    """The resample budget ran out before a certificate was achieved."""

    def __init__(self, message, certificate=None):
        super().__init__(message)
        self.certificate = certificate


class ThinRegionError(RuntimeError):
    """Rejection sampling exhausted its draw budget; the probe region is too thin."""


class SeparationError(ValueError):
    """A cover or nerve violates the marked-set separation requirement."""


class SubdivisionCapError(RuntimeError):
    """Iterated subdivision hit its round cap before reaching the target mesh."""

    def __init__(self, message, achieved_diameter_sq=None):
        super().__init__(message)
        self.achieved_diameter_sq = achieved_diameter_sq
