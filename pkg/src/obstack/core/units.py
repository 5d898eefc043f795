"""Unit alignment: every incoming symbol maps to one canonical unit.

Conversion is exact multiplication by the table factor so repeated
round-trips through the wire format stay bit-for-bit identical. Decimal
prefixes (kB, MB, GB) are powers of ten; binary prefixes (KiB, MiB, GiB)
are powers of two, following the symbols' standard meanings.
"""

from __future__ import annotations

from typing import Tuple

from obstack.core.errors import UnknownUnit
from obstack.core.model import CANONICAL_SYMBOL, Canonical, Unit

# symbol -> (multiplier into canonical unit, canonical unit)
CONVERSIONS: dict[str, Tuple[float, Canonical]] = {
    "ms": (1e-3, Canonical.SECONDS),
    "s": (1.0, Canonical.SECONDS),
    "min": (60.0, Canonical.SECONDS),
    "h": (3600.0, Canonical.SECONDS),
    "B": (1.0, Canonical.BYTES),
    "kB": (1e3, Canonical.BYTES),
    "MB": (1e6, Canonical.BYTES),
    "GB": (1e9, Canonical.BYTES),
    "KiB": (2.0**10, Canonical.BYTES),
    "MiB": (2.0**20, Canonical.BYTES),
    "GiB": (2.0**30, Canonical.BYTES),
    "J": (1.0, Canonical.JOULES),
    "Wh": (3600.0, Canonical.JOULES),
    "kWh": (3.6e6, Canonical.JOULES),
    "mWh": (3.6, Canonical.JOULES),
    "W": (1.0, Canonical.WATTS),
    "mW": (1e-3, Canonical.WATTS),
    "kW": (1e3, Canonical.WATTS),
    "%": (1e-2, Canonical.RATIO),
    "ratio": (1.0, Canonical.RATIO),
    "degC": (1.0, Canonical.CELSIUS),
    "count": (1.0, Canonical.COUNT),
    "": (1.0, Canonical.NONE),
    # Wire token for the empty symbol; fields on the wire are
    # whitespace-delimited so "" cannot appear there.
    "none": (1.0, Canonical.NONE),
}


def convert_unit(value: float, source_symbol: str) -> Tuple[float, Unit]:
    """Express ``value`` in the canonical unit for ``source_symbol``.

    Raises UnknownUnit for symbols outside the table; the caller must
    reject the sample rather than pass it through unconverted.
    """
    try:
        factor, canonical = CONVERSIONS[source_symbol]
    except KeyError:
        raise UnknownUnit(f"unknown unit symbol {source_symbol!r}") from None
    return value * factor, Unit(canonical, source_symbol)


def canonical_unit(canonical: Canonical) -> Unit:
    """Unit already expressed canonically (source symbol == canonical symbol)."""
    return Unit(canonical, CANONICAL_SYMBOL[canonical])


def wire_symbol(unit: Unit) -> str:
    """Symbol written on the wire; "none" stands in for the empty symbol."""
    sym = CANONICAL_SYMBOL[unit.canonical]
    return sym if sym else "none"
