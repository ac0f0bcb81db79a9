"""
Named choices used across configuration and the command line.
"""

from enum import Enum
from typing import Any

from spiralrecon.errors import InvalidArgumentError


class Choice(str, Enum):
    """
    Base class for string-valued option sets.

    Subclasses compare equal to their plain string value, so configuration
    files and command-line flags can be matched directly.

    Example:
        ```python
        class Color(Choice):
            RED = "red"

        Color.from_string("red") is Color.RED
        ```
    """

    def __str__(self) -> str:
        return self.value

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}.{self.name}"

    @classmethod
    def from_string(cls, value: str) -> Any:
        """Create a choice from its string value (case-insensitive, '_' == '-')."""
        wanted = value.strip().lower().replace("_", "-")
        for choice in cls:
            if choice.value == wanted:
                return choice
        supported = ", ".join(c.value for c in cls)
        raise InvalidArgumentError(
            f"No {cls.__name__} with value '{value}'. Supported: {supported}"
        )

    def __eq__(self, other: Any) -> bool:
        if isinstance(other, str):
            return self.value == other
        return super().__eq__(other)

    def __hash__(self) -> int:
        return hash(self.value)


class DensityMethod(Choice):
    """Density compensation estimators for gridding."""

    VORONOI = "voronoi"
    RADIAL_SPIRAL = "radial-spiral"
    UNIFORM = "uniform"
    USER_WEIGHTS = "user-weights"


class InitMode(Choice):
    """Optimizer starting points."""

    ZERO = "zero"
    ADJOINT = "adjoint"
    USER = "user"


class FlowProfile(Choice):
    """Phase profiles inside a phantom vessel."""

    PARABOLIC = "parabolic"
    BLUNT = "blunt"


class StopReason(Choice):
    """Why an optimizer run ended."""

    MAX_ITERS = "max-iters"
    CONVERGED = "converged"
    GRADIENT = "gradient"
    STALLED = "stalled"


class Method(Choice):
    """Reconstruction methods compared by the experiments."""

    REGULARIZED = "regularized"
    GRIDDING = "gridding"
