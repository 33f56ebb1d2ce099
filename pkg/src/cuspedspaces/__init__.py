"""Finite truncations of cusped spaces over relatively hyperbolic group pairs.

Builds Cayley 2-complex balls with combinatorial horoballs glued over
peripheral cosets, answers certified metric and hyperbolicity queries on
the truncation, produces replayable combinatorial-homotopy certificates,
and runs disk-pair excision on colored simplicial strip maps.
"""

from .words import Word, free_reduce, invert, multiply, parse_word, format_word
from .presentations import (
    GroupPresentation,
    PeripheralSpec,
    NormalFormProvider,
    FreeProvider,
    FreeAbelianProvider,
    SurfaceProvider,
    DirectProductProvider,
    TableProvider,
    parse_presentation,
    group_provider,
    peripheral_provider,
    peripheral_member,
    PresentationError,
    UnsupportedFamilyError,
    NormalFormError,
)

__version__ = "0.1.0"

__all__ = [
    "Word",
    "free_reduce",
    "invert",
    "multiply",
    "parse_word",
    "format_word",
    "GroupPresentation",
    "PeripheralSpec",
    "NormalFormProvider",
    "FreeProvider",
    "FreeAbelianProvider",
    "SurfaceProvider",
    "DirectProductProvider",
    "TableProvider",
    "parse_presentation",
    "group_provider",
    "peripheral_provider",
    "peripheral_member",
    "PresentationError",
    "UnsupportedFamilyError",
    "NormalFormError",
]
