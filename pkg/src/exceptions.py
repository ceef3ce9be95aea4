"""Exception classes for region computation, simulation and configuration."""

from typing import Any


class SwiptError(Exception):
    """Base error class."""

    def __init__(self, detail: str, context: dict[str, Any] | None = None):
        """Initialize error.

        Args:
            detail: Error detail message
            context: Optional values describing where the error occurred
        """
        self.detail = detail
        self.context = context or {}
        super().__init__(detail)


class InvalidParameterError(SwiptError):
    """A parameter lies outside its admissible range."""

    def __init__(self, detail: str, **context: Any):
        """Initialize invalid parameter error.

        Args:
            detail: Error detail
            **context: Offending values
        """
        super().__init__(f"Invalid parameter: {detail}", context)


class DimensionMismatchError(SwiptError):
    """Array shapes do not agree."""

    def __init__(self, what: str, expected: Any, actual: Any):
        """Initialize dimension mismatch error.

        Args:
            what: Name of the mismatching quantity
            expected: Expected shape or length
            actual: Actual shape or length
        """
        super().__init__(
            f"Dimension mismatch for {what}: expected {expected}, got {actual}",
            {"expected": expected, "actual": actual},
        )


class InfeasibleEnergyError(SwiptError):
    """The receiver energy deficit cannot be covered by RF delivery."""

    def __init__(self, deficit: float, deliverable: float):
        """Initialize infeasible energy error.

        Args:
            deficit: Receiver deficit (J/slot)
            deliverable: Largest RF energy that can be delivered (J/slot)
        """
        super().__init__(
            f"Receiver deficit {deficit:.6g} J/slot exceeds deliverable RF energy "
            f"{deliverable:.6g} J/slot",
            {"deficit": deficit, "deliverable": deliverable},
        )


class InfeasibleMinRateError(SwiptError):
    """No power vector on the search grid supports the minimum rates."""

    def __init__(self, detail: str, **context: Any):
        """Initialize infeasible minimum-rate error.

        Args:
            detail: Error detail
            **context: Offending values
        """
        super().__init__(f"Minimum rates infeasible: {detail}", context)


class InfeasibleScenarioError(SwiptError):
    """Minimum rates need more average power than the harvest supports."""

    def __init__(self, user: int, required: float, available: float):
        """Initialize infeasible scenario error.

        Args:
            user: Zero-based user index
            required: Average power needed for the minimum rates (J/slot)
            available: Average harvested energy (J/slot)
        """
        super().__init__(
            f"User {user + 1} needs {required:.6g} J/slot on average for its "
            f"minimum rate but harvests {available:.6g} J/slot",
            {"user": user, "required": required, "available": available},
        )


class UnboundedObjectiveError(SwiptError):
    """The per-state Lagrangian does not penalize transmit power."""

    def __init__(self, user: int, lambda_tx: float, lambda_rx: float, gain: float):
        """Initialize unbounded objective error.

        Args:
            user: Zero-based user index
            lambda_tx: Power multiplier of the user
            lambda_rx: Receiver delivery multiplier
            gain: Fade gain of the user in the offending state
        """
        super().__init__(
            f"Objective unbounded for user {user + 1}: lambda_tx={lambda_tx:.6g} "
            f"<= lambda_rx*h={lambda_rx * gain:.6g} and the grid cap was reached",
            {"user": user, "lambda_tx": lambda_tx, "lambda_rx": lambda_rx, "gain": gain},
        )


class NoFixedPointError(SwiptError):
    """The erasure-fraction iteration did not converge."""

    def __init__(self, iterations: int, residual: float):
        """Initialize no fixed point error.

        Args:
            iterations: Iterations performed
            residual: Final residual |pi - delivered ratio|
        """
        super().__init__(
            f"Erasure fraction did not converge after {iterations} iterations "
            f"(residual {residual:.3g})",
            {"iterations": iterations, "residual": residual},
        )


class ConfigError(SwiptError):
    """Scenario configuration cannot be loaded."""

    def __init__(self, detail: str, path: str | None = None):
        """Initialize config error.

        Args:
            detail: Error detail
            path: Configuration file path, if any
        """
        prefix = f"{path}: " if path else ""
        super().__init__(f"Invalid configuration: {prefix}{detail}", {"path": path})
