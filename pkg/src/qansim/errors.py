"""Exception types shared across the package.

Each exception carries a short machine-readable ``category`` used by the
CLI to derive exit codes.
"""


class QansimError(Exception):
    category = "error"


class ConfigError(QansimError):
    """Config file could not be parsed or has an invalid structure."""

    category = "config"


class ValidationError(QansimError):
    """Topology or assignment-plan invariants are violated."""

    category = "validation"

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class InfeasibleError(QansimError):
    """A demand cannot be satisfied; the message names the binding constraint."""

    category = "infeasible"


class CalibrationError(QansimError):
    """Calibration targets are unreachable (no bracket for the 1-D fit)."""

    category = "calibration"
