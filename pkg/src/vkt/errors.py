"""Exception types raised across the package."""


class VKTError(Exception):
    """Base class for all package errors."""


class NonZeroMean(VKTError, ValueError):
    """Right-hand side of a periodic elliptic problem has nonzero mean."""


class MeanIncompatible(NonZeroMean):
    """The forcing term sqrt(rho0) * g of the compatibility problem has nonzero mean."""


class NonPositiveDensity(VKTError, ValueError):
    """A strictly positive density was required."""


class NoConvergence(VKTError, RuntimeError):
    def __init__(self, iterations, residual):
        super().__init__(
            f"iterative solve did not converge: {iterations} iterations, "
            f"relative residual {residual:.3e}"
        )
        self.iterations = iterations
        self.residual = residual


class BlowUp(VKTError, RuntimeError):
    def __init__(self, reason, step=None, t=None):
        where = "" if step is None else f" at step {step} (t={t:.6g})"
        super().__init__(f"blow-up{where}: {reason}")
        self.reason = reason
        self.step = step
        self.t = t


class UnknownPreset(VKTError, KeyError):
    pass


class HistoryGap(VKTError, ValueError):
    """Stored velocity frames do not cover the requested time window."""


class VacuumOnPath(VKTError, ValueError):
    """Density at a path endpoint is below the vacuum threshold."""


class ExponentOutOfRange(VKTError, ValueError):
    pass


class BadFormat(VKTError, ValueError):
    """Malformed or truncated snapshot file."""


class ConfigError(VKTError, ValueError):
    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path
