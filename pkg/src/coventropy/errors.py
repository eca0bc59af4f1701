"""Exception types shared across the laboratory modules."""


class StructuralError(ValueError):
    """Malformed or mismatched input structure (space, cover, map, config)."""


class CoveringError(StructuralError):
    """A family of cell sets fails to cover the space."""

    def __init__(self, message: str, missing_cell: int | None = None):
        super().__init__(message)
        self.missing_cell = missing_cell


class InfeasibleColouringError(StructuralError):
    """No refinement fits the colour budget under the adjacency constraints."""

    def __init__(self, message: str, witness_cell: int):
        super().__init__(message)
        self.witness_cell = witness_cell


class DepthExhaustedError(StructuralError):
    """An operation needs more truncation depth than the model carries."""


class ToleranceExceededError(StructuralError):
    """A measured approximation error exceeds the allowed budget."""

    def __init__(self, message: str, measured: float):
        super().__init__(message)
        self.measured = measured


class FamilySizeError(StructuralError):
    """A family or space exceeds a configured hard cap."""
