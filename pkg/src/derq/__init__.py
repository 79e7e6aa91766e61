"""Exact computations with derived quotients of finite p-groups."""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    BudgetExceededError,
    CollectionLimitError,
    DerqError,
    InconsistentPresentationError,
    InputError,
    PreconditionError,
    PresentationParseError,
)
from .pc import (  # noqa: F401
    ExponentWord,
    PcPresentation,
    PcSubgroup,
    format_presentation,
    heisenberg,
    parse_presentation,
)
