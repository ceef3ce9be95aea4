"""Unit tests for energy unit conversion."""

import pytest

from src.exceptions import InvalidParameterError
from src.utils.units import dbm_to_watts, format_joules, to_joules_per_slot, watts_to_dbm

SLOT = 1e-6


class TestToJoulesPerSlot:
    """Test cases for to_joules_per_slot."""

    def test_bare_number_uses_default_unit(self):
        """A plain number is read in the declared power unit."""
        assert to_joules_per_slot(5, "W", SLOT) == pytest.approx(5e-6)
        assert to_joules_per_slot(2.5, "mW", SLOT) == pytest.approx(2.5e-9)

    def test_string_with_unit(self):
        """Unit suffixes override the default unit."""
        assert to_joules_per_slot("10 uW", "W", SLOT) == pytest.approx(1e-11)
        assert to_joules_per_slot("3 W", "mW", SLOT) == pytest.approx(3e-6)

    def test_dbm(self):
        """-20 dBm is 10 uW."""
        assert to_joules_per_slot("-20 dBm", "W", SLOT) == pytest.approx(1e-11)

    def test_joules_pass_through(self):
        """Energies per slot are not rescaled."""
        assert to_joules_per_slot("1e-11 J", "W", SLOT) == 1e-11
        assert to_joules_per_slot(0.25, "J", SLOT) == 0.25

    def test_string_without_unit(self):
        """A numeric string falls back to the default unit."""
        assert to_joules_per_slot("4", "W", 0.5) == pytest.approx(2.0)

    @pytest.mark.parametrize("value", [0.1 + 0.2, 1e-11, 5e-06, 123456.789])
    def test_canonical_form_is_exact(self, value):
        """format_joules text parses back to the identical float."""
        assert to_joules_per_slot(format_joules(value), "W", SLOT) == value

    @pytest.mark.parametrize("value", ["5 furlongs", "abc", "1..2 W"])
    def test_invalid_text(self, value):
        """Unknown units and garbage are rejected."""
        with pytest.raises(InvalidParameterError):
            to_joules_per_slot(value, "W", SLOT)

    def test_bool_rejected(self):
        """Booleans are not quantities."""
        with pytest.raises(InvalidParameterError):
            to_joules_per_slot(True, "W", SLOT)

    def test_slot_must_be_positive(self):
        """Slot duration must be positive."""
        with pytest.raises(InvalidParameterError):
            to_joules_per_slot(1.0, "W", 0.0)


class TestDbm:
    """Test cases for dBm conversion."""

    def test_reference_levels(self):
        """0 dBm is 1 mW and 30 dBm is 1 W."""
        assert dbm_to_watts(0.0) == pytest.approx(1e-3)
        assert dbm_to_watts(30.0) == pytest.approx(1.0)
        assert watts_to_dbm(1e-3) == pytest.approx(0.0)

    def test_nonpositive_power(self):
        """dBm of zero power is undefined."""
        with pytest.raises(InvalidParameterError):
            watts_to_dbm(0.0)
