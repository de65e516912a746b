"""Exception hierarchy shared across the package."""


class PaintError(Exception):
    """Base class for all package errors."""

    code = "error"

    def payload(self) -> dict:
        """Machine-readable form, used by the CLI error channel."""
        return {"code": self.code, "message": str(self)}


class ContractError(PaintError):
    """A caller violated an operation precondition."""

    code = "contract"


class ParseError(PaintError):
    """Malformed input stream; carries the offending row when known."""

    code = "parse"

    def __init__(self, message: str, row: int | None = None):
        super().__init__(message if row is None else f"row {row}: {message}")
        self.row = row


class DataError(PaintError):
    """Structurally valid input with unusable values (NaN, inf, ...)."""

    code = "data"


class SchemaError(PaintError):
    """Input metadata violates the declared schema."""

    code = "schema"


class DegenerateCloudError(PaintError):
    """All points are affinely dependent; triangulation is undefined."""

    code = "degenerate_cloud"


class TooFewPointsError(PaintError):
    code = "too_few_points"


class NumericalError(PaintError):
    """A numerical routine failed to converge; message carries diagnostics."""

    code = "numerical"


class InfeasibleScalarizationError(PaintError):
    """No polytope of the surrogate satisfies the requested bounds."""

    code = "infeasible_scalarization"


class GenerationUnderflowError(PaintError):
    """Fewer nondominated outcomes were generated than the pipeline needs."""

    code = "generation_underflow"


class ProjectionError(PaintError):
    code = "projection"
