"""Exception types shared across modules."""


class LadderError(Exception):
    """Base class for domain errors."""


class ConstraintViolation(LadderError):
    """A family parameter predicate failed."""

    def __init__(self, predicate: str, message: str | None = None):
        super().__init__(message or f"constraint violated: {predicate}")
        self.predicate = predicate


class BranchViolation(LadderError):
    """A square root or pole was hit on the bound spectrum."""


class DefectiveError(LadderError):
    """Eigenvector basis too ill-conditioned for the function path."""


class SingularEvaluation(LadderError):
    """An expression is singular on a grid point."""


class GridError(LadderError):
    """Invalid grid or mismatched grids."""


class AlgebraNotRealizable(LadderError):
    """No sign choice gives a positive dressing function."""


class EtaRelationViolated(LadderError):
    """The adjoint of the lowering operator is not a raising operator times eta(b0)."""


class AmbiguousGroundState(LadderError):
    """Near-degenerate null space of the annihilator."""


class FunctionalEquationViolation(LadderError):
    """b0 does not shift by exactly one under the eigenvalue maps."""
