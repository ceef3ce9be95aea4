"""Energy unit conversion.

All quantities are held internally as joules per slot. Configuration values
may be given as plain numbers in a declared power unit or as strings carrying
their own unit ("5 W", "10 uW", "-20 dBm", "1e-11 J").
"""

import math
import re

from src.exceptions import InvalidParameterError

# Watts per unit
POWER_UNITS = {
    "W": 1.0,
    "mW": 1e-3,
    "uW": 1e-6,
    "µW": 1e-6,
    "nW": 1e-9,
}

ENERGY_UNIT = "J"

_QUANTITY = re.compile(r"^\s*([-+]?[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s*([A-Za-zµ]+)?\s*$")


def dbm_to_watts(dbm: float) -> float:
    """Convert a dBm level to watts."""
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts: float) -> float:
    """Convert watts to dBm."""
    if watts <= 0:
        raise InvalidParameterError("dBm needs a positive power", watts=watts)
    return 10.0 * math.log10(watts) + 30.0


def to_joules_per_slot(
    value: float | int | str, default_unit: str, slot_seconds: float
) -> float:
    """Convert a configured power or energy value to joules per slot.

    Args:
        value: Number in ``default_unit`` or a string with a unit suffix
        default_unit: Unit applied to bare numbers (a power unit or "J")
        slot_seconds: Slot duration in seconds

    Returns:
        Energy per slot in joules
    """
    if slot_seconds <= 0:
        raise InvalidParameterError("slot duration must be positive", slot_seconds=slot_seconds)

    if isinstance(value, bool):
        raise InvalidParameterError("boolean is not a quantity", value=value)

    if isinstance(value, int | float):
        number, unit = float(value), default_unit
    else:
        match = _QUANTITY.match(value)
        if match is None:
            raise InvalidParameterError(f"cannot parse quantity '{value}'")
        number = float(match.group(1))
        unit = match.group(2) or default_unit

    if unit == ENERGY_UNIT:
        return number
    if unit == "dBm":
        return dbm_to_watts(number) * slot_seconds
    if unit not in POWER_UNITS:
        raise InvalidParameterError(f"unknown unit '{unit}'", value=value)
    return number * POWER_UNITS[unit] * slot_seconds


def format_joules(value: float) -> str:
    """Canonical text form of an energy per slot, exact under round trip."""
    return f"{value!r} {ENERGY_UNIT}"
