"""Generalized Zeckendorf decompositions and the statistics of their gaps."""
from .errors import (
    IntervalTooLargeError,
    RecurrenceError,
    RootValidationError,
    TableTooShortError,
    ZeckError,
)
from .recurrence import Recurrence, SequenceTable, parse, validate
from .zeck import (
    Decomposition,
    LegalityAutomaton,
    decompose,
    enumerate_interval,
    gap_list,
    is_legal,
    longest_gap,
    reconstruct,
)

__version__ = "0.1.0"
