"""Exception types shared across the toolkit.

Errors carry enough context to name the failing stage or quantity; the CLI
maps them onto process exit codes.
"""


class CoopFdtdError(Exception):
    """Base class for all toolkit errors."""


class InvalidArgumentError(CoopFdtdError, ValueError):
    """A precondition on an operation's arguments was violated."""


class NumericalInstabilityError(CoopFdtdError):
    """A non-finite field value was detected during time stepping."""

    def __init__(self, step_index, message=None):
        self.step_index = step_index
        super().__init__(message or f"non-finite field value at step {step_index}")


class RunTimeoutError(CoopFdtdError):
    """The stop criterion was not reached within the step budget."""

    def __init__(self, decay_ratio, max_steps):
        self.decay_ratio = decay_ratio
        self.max_steps = max_steps
        super().__init__(
            f"fields decayed only to {decay_ratio:.3e} of peak "
            f"within {max_steps} steps"
        )


class IllConditionedBandError(CoopFdtdError):
    """The source spectrum is too weak at some analysis frequencies."""

    def __init__(self, frequencies):
        self.frequencies = list(frequencies)
        super().__init__(
            "source spectrum below conditioning floor at frequencies "
            + ", ".join(f"{f:.5g}" for f in self.frequencies[:8])
            + (" ..." if len(self.frequencies) > 8 else "")
        )


class InvalidReferenceError(CoopFdtdError):
    """The vacuum reference power is non-positive inside the band."""


class NonBandlimitedError(CoopFdtdError):
    """A spectrum has not decayed at the window edges."""

    def __init__(self, edge_ratios, message=None):
        self.edge_ratios = edge_ratios
        super().__init__(
            message
            or "spectrum not decayed at window edges: "
            f"lo={edge_ratios[0]:.3e}, hi={edge_ratios[1]:.3e} of in-band peak"
        )


class OutOfBandError(CoopFdtdError):
    """A coupling table was evaluated outside its tabulated band."""


class ConvergenceFailureError(CoopFdtdError):
    """Root iteration failed to converge."""

    def __init__(self, last_iterate, message=None):
        self.last_iterate = last_iterate
        super().__init__(message or f"no convergence; last iterate {last_iterate}")


class MissedRootError(CoopFdtdError):
    """Winding-number count disagrees with the number of roots found."""


class BandCoverageError(CoopFdtdError):
    """The tabulated coupling band does not cover the spectral weight."""


class AmbiguousPeakError(CoopFdtdError):
    """A fit window does not contain exactly one local maximum."""


class PoorFitError(CoopFdtdError):
    """A resonance fit exceeded the residual threshold."""

    def __init__(self, residual, diagnostics=None):
        self.residual = residual
        self.diagnostics = diagnostics or {}
        super().__init__(f"fit residual {residual:.3g} exceeds 0.1")


class ConfigError(CoopFdtdError):
    """A run configuration failed validation."""
