"""Exception hierarchy shared across the package.

The CLI maps these onto its exit-code contract: ValidationError -> 2,
everything else raised during a run -> 3.
"""


class FrespondError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(FrespondError):
    """Bad user input: config files, membership lists, degenerate fits."""


class DomainError(FrespondError):
    """Arguments outside the mathematical domain of an operation."""


class ResourceBudgetError(FrespondError):
    """A run would exceed a configured compute budget."""


class IngestionError(ValidationError):
    """Measurement CSVs that cannot be ingested; carries row context."""


class PatternLoadError(ValidationError):
    """Tabulated antenna pattern file that fails structural checks."""
