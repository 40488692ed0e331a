"""Diagnostic models following RFC 7807 Problem Details.

The command-line tool prints these as JSON on stderr. ``status`` carries the
process exit code and ``instance`` the offending file path.
"""

from typing import Any

from pydantic import BaseModel, Field, ValidationError, model_validator

PROBLEM_TYPE_BASE = "https://qvote.dev/problems/"

# Exit code to problem type slug
status_to_type: dict[int, str] = {
    1: "invalid-input",
    2: "election-aborted",
    3: "trace-corrupted",
}


def get_problem_type(status: int) -> str:
    """Get the problem type URI for an exit code.

    Args:
        status: Process exit code.

    Returns:
        The problem type URI.
    """
    return PROBLEM_TYPE_BASE + status_to_type.get(status, "internal-error")


class ValidationErrorDetail(BaseModel):
    """Validation error detail for a specific field.

    Attributes:
        type: Error type (e.g., "value_error", "missing").
        loc: Location of the error in the scenario (e.g., ["adversary", "role"]).
        msg: Human-readable error message.
        input: The invalid input value that caused the error.
    """

    type: str = Field(..., description="Error type")
    loc: tuple[str | int, ...] = Field(..., description="Error location in config")
    msg: str = Field(..., description="Human-readable error message")
    input: Any = Field(None, description="Invalid input value")


class ProblemDetail(BaseModel):
    """Problem Detail document as defined in RFC 7807.

    Attributes:
        type: URI reference to the problem type (derived from status).
        title: Short, human-readable summary of the problem type.
        status: Process exit code.
        detail: Explanation specific to this occurrence.
        instance: Path of the file that caused the problem.
        errors: Field-level errors for invalid scenario files.
    """

    type: str | None = Field(default=None, description="Problem type URI")
    title: str = Field(..., description="Short, human-readable summary")
    status: int = Field(..., description="Process exit code")
    detail: str | None = Field(default=None, description="Explanation")
    instance: str | None = Field(default=None, description="Offending path")
    errors: list[ValidationErrorDetail] | None = Field(
        default=None, description="Validation errors"
    )

    @model_validator(mode="before")
    @classmethod
    def set_default_type(cls, values: dict[str, Any]) -> dict[str, Any]:
        """Set the default type based on the status if not provided."""
        if values.get("type") is None:
            values["type"] = get_problem_type(values.get("status", 1))
        return values

    @classmethod
    def from_validation_error(
        cls, exc: ValidationError, instance: str | None = None
    ) -> "ProblemDetail":
        """Build an invalid-input problem from a pydantic ValidationError.

        Args:
            exc: Validation error raised while parsing a scenario.
            instance: Path of the scenario file.

        Returns:
            ProblemDetail with one entry per field error.
        """
        errors = [
            ValidationErrorDetail(
                type=err["type"],
                loc=tuple(err["loc"]),
                msg=err["msg"],
                input=err.get("input") if _is_jsonable(err.get("input")) else None,
            )
            for err in exc.errors()
        ]
        return cls(
            title="Invalid scenario",
            status=1,
            detail=f"{exc.error_count()} validation error(s)",
            instance=instance,
            errors=errors,
        )


def _is_jsonable(value: Any) -> bool:
    return value is None or isinstance(value, str | int | float | bool | list | dict)
