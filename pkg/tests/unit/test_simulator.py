"""Unit tests for the slotted energy simulator."""

import numpy as np
import pytest

from src.channel.fading import MarginalFading, joint_states
from src.channel.region import PolicyTable, RateVector, ReceiverEnergetics, ReceiverModel
from src.exceptions import InvalidParameterError
from src.simulation.harvest import HarvestKind
from src.simulation.simulator import (
    Banking,
    BufferState,
    SimulationOptions,
    SlotInputs,
    SwitchingRule,
    XiMode,
    advance_transmitters,
    rf_energy,
    run,
    run_seeds,
    step_ideal,
    step_power_splitting,
    step_time_switching,
    trace_header,
    truncated_policy_step,
)
from src.solver.optimizer import Scenario

CONSTANT = SimulationOptions(
    harvest_kind_tx=HarvestKind.CONSTANT,
    harvest_kind_rx=HarvestKind.CONSTANT,
    xi_mode=XiMode.EXPECTATION,
)


def constant_scenario(model: ReceiverModel, consumption: float = 0.0) -> Scenario:
    """One user, unit gain and unit harvest."""
    return Scenario(
        mean_harvest_tx=np.array([1.0]),
        fading=joint_states([MarginalFading.constant(1.0)]),
        rho=RateVector.zeros(1),
        sigma2=1.0,
        energetics=ReceiverEnergetics(0.0, consumption, 0.5),
        model=model,
    )


def slot(nominal=(1.0,), tx_harvest=(0.0,), rx_harvest=0.0, consumption=1.0, switch=1.0, gains=(4.0,)):
    """Slot inputs with expectation-mode RF energy."""
    return SlotInputs(
        gains=gains,
        tx_harvest=tx_harvest,
        rx_harvest=rx_harvest,
        rx_consumption=consumption,
        nominal=nominal,
        switch=switch,
    )


class TestTransmitters:
    """Test cases for transmitter buffers."""

    def test_truncated_policy_step(self):
        """Nominal energy is capped by what is available."""
        assert truncated_policy_step((1.0, 2.0), (0.5, 3.0)) == (0.5, 2.0)

    def test_advance(self):
        """Harvest is credited before spending."""
        after, powers, clipped = advance_transmitters((0.0, 1.0), slot(nominal=(2.0, 1.0), tx_harvest=(1.0, 1.0)))
        assert powers == (1.0, 1.0)
        assert clipped == (True, False)
        assert after == (0.0, 1.0)

    def test_negative_buffer_rejected(self):
        """Buffers never go negative."""
        with pytest.raises(AssertionError):
            BufferState((-1.0,), 0.0)


class TestRfEnergy:
    """Test cases for rf_energy."""

    def test_expectation(self):
        """eta * sum h t."""
        assert rf_energy((1.0, 4.0), (2.0, 1.0), 0.5) == pytest.approx(3.0)

    def test_sampled(self):
        """eta * (sum sqrt(h t) x)^2."""
        value = rf_energy((1.0, 4.0), (2.0, 1.0), 0.5, XiMode.SAMPLED, (1.0, 0.0))
        assert value == pytest.approx(1.0)

    def test_sampled_needs_symbols(self):
        """Sampled mode needs one symbol per user."""
        with pytest.raises(InvalidParameterError):
            rf_energy((1.0,), (1.0,), 0.5, XiMode.SAMPLED)


class TestReceiverSteps:
    """Test cases for the per-slot receiver rules."""

    def test_threshold_harvests_when_short(self):
        """An empty buffer forces a harvest slot."""
        state, record = step_time_switching(
            BufferState((1.0,), 0.0), slot(), 0.5, SwitchingRule.THRESHOLD
        )
        assert record.erased and not record.received
        assert record.banked == pytest.approx(2.0)
        assert state.rx_buffer == pytest.approx(2.0)

    def test_threshold_decodes_when_funded(self):
        """A funded buffer pays for decoding."""
        state, record = step_time_switching(
            BufferState((1.0,), 1.5), slot(), 0.5, SwitchingRule.THRESHOLD
        )
        assert record.received
        assert state.rx_buffer == pytest.approx(0.5)

    def test_bernoulli_outage(self):
        """An uncovered decode slot is an outage and leaves the buffer alone."""
        state, record = step_time_switching(
            BufferState((1.0,), 0.2), slot(switch=0.9), 0.5, SwitchingRule.BERNOULLI, pi_e=0.1
        )
        assert record.rx_outage and not record.erased
        assert state.rx_buffer == pytest.approx(0.2)

    def test_bernoulli_harvest(self):
        """A switch draw below pi_e harvests even with a full buffer."""
        state, record = step_time_switching(
            BufferState((1.0,), 5.0), slot(switch=0.05), 0.5, SwitchingRule.BERNOULLI, pi_e=0.1
        )
        assert record.erased
        assert state.rx_buffer == pytest.approx(7.0)

    @pytest.mark.parametrize("banking,expected", [(Banking.AS_WRITTEN, 2.0), (Banking.STRICT_FRACTION, 0.5)])
    def test_power_splitting_erasure(self, banking, expected):
        """An unpaid slot is erased; banking decides what is kept."""
        state, record = step_power_splitting(
            BufferState((1.0,), 0.0), slot(), 0.5, 0.25, banking=banking
        )
        assert record.erased
        assert state.rx_buffer == pytest.approx(expected)

    def test_power_splitting_decode(self):
        """The split share tops up the buffer before decoding."""
        state, record = step_power_splitting(BufferState((1.0,), 1.0), slot(), 0.5, 0.25)
        assert record.received
        assert record.banked == pytest.approx(0.5)
        assert state.rx_buffer == pytest.approx(0.5)

    def test_ideal(self):
        """The ideal receiver uses the slot's RF energy at once."""
        state, record = step_ideal(BufferState((1.0,), 0.0), slot(), 0.5)
        assert record.received
        assert state.rx_buffer == pytest.approx(1.0)


class TestRun:
    """Test cases for full runs."""

    def test_balanced_constant_harvest(self):
        """Harvest equal to spend never clips and a free receiver never erases."""
        scenario = constant_scenario(ReceiverModel.IDEAL)
        policy = PolicyTable(np.array([[1.0]]), rates=np.array([[0.5]]))
        stats = run(scenario, policy, 0.0, 5000, options=CONSTANT)
        assert stats.tx_clip_fraction[0] == 0.0
        assert stats.erasure_fraction == 0.0
        assert stats.avg_tx_power[0] == pytest.approx(1.0)
        assert stats.achieved_rate_estimate[0] == pytest.approx(0.5)
        assert stats.final_tx_buffers[0] == 0.0

    def test_bernoulli_erasure_fraction(self):
        """Bernoulli switching harvests a pi_e fraction of the slots."""
        scenario = constant_scenario(ReceiverModel.TIME_SWITCHING)
        options = SimulationOptions(harvest_kind_tx=HarvestKind.CONSTANT, switching=SwitchingRule.BERNOULLI)
        stats = run(scenario, PolicyTable(np.array([[1.0]])), 0.3, 50_000, seed=4, options=options)
        assert stats.erasure_fraction == pytest.approx(0.3, abs=0.01)
        assert stats.rx_outage_fraction == 0.0

    def test_burn_in_excluded(self):
        """Averages cover the slots after burn-in."""
        scenario = constant_scenario(ReceiverModel.IDEAL)
        stats = run(scenario, PolicyTable(np.array([[1.0]])), 0.0, 1000, burn_in=400, options=CONSTANT)
        assert stats.slots == 600

    def test_deterministic(self):
        """Equal seeds give equal statistics."""
        scenario = constant_scenario(ReceiverModel.POWER_SPLITTING, consumption=0.4)
        policy = PolicyTable(np.array([[1.0]]))
        a = run(scenario, policy, 0.5, 3000, seed=11)
        b = run(scenario, policy, 0.5, 3000, seed=11)
        assert a.erasure_fraction == b.erasure_fraction
        np.testing.assert_array_equal(a.final_tx_buffers, b.final_tx_buffers)

    def test_checkpoints_independent_of_horizon(self):
        """Buffers at a checkpoint do not depend on the total horizon."""
        scenario = constant_scenario(ReceiverModel.POWER_SPLITTING, consumption=0.4)
        policy = PolicyTable(np.array([[1.0]]))
        options = SimulationOptions(checkpoints=(1000,))
        short = run(scenario, policy, 0.5, 2000, seed=5, options=options)
        long = run(scenario, policy, 0.5, 4000, seed=5, options=options)
        np.testing.assert_array_equal(short.checkpoints[1000], long.checkpoints[1000])

    def test_checkpoint_clip_fractions(self):
        """Clip fractions are recorded over the slots before each checkpoint."""
        scenario = constant_scenario(ReceiverModel.IDEAL)
        options = SimulationOptions(
            harvest_kind_tx=HarvestKind.CONSTANT, xi_mode=XiMode.EXPECTATION, checkpoints=(10, 40)
        )
        # Spending 2 from a harvest of 1 clips every slot
        stats = run(scenario, PolicyTable(np.array([[2.0]])), 0.0, 40, options=options)
        assert set(stats.checkpoint_clips) == {10, 40}
        assert stats.checkpoint_clips[10][0] == pytest.approx(1.0)
        assert stats.checkpoint_clips[40][0] == pytest.approx(stats.tx_clip_fraction[0])

    def test_run_seeds_matches_single_runs(self):
        """Each seed reproduces its own run, in and out of a process pool."""
        scenario = constant_scenario(ReceiverModel.POWER_SPLITTING, consumption=0.4)
        policy = PolicyTable(np.array([[1.0]]))
        serial = run_seeds(scenario, policy, 0.5, 2000, [3, 4])
        pooled = run_seeds(scenario, policy, 0.5, 2000, [3, 4], workers=2)
        for seed, a, b in zip([3, 4], serial, pooled):
            single = run(scenario, policy, 0.5, 2000, seed=seed)
            np.testing.assert_array_equal(a.final_tx_buffers, single.final_tx_buffers)
            np.testing.assert_array_equal(b.final_tx_buffers, single.final_tx_buffers)
        assert not np.array_equal(serial[0].final_tx_buffers, serial[1].final_tx_buffers)

    def test_trace(self):
        """Trace rows follow the header."""
        scenario = constant_scenario(ReceiverModel.IDEAL)
        options = SimulationOptions(trace_slots=5)
        stats = run(scenario, PolicyTable(np.array([[1.0]])), 0.0, 100, options=options)
        assert len(stats.trace) == 5
        assert all(len(row) == len(trace_header(1)) for row in stats.trace)
        assert [row[0] for row in stats.trace] == [0, 1, 2, 3, 4]

    @pytest.mark.parametrize("horizon,burn_in,pi_e", [(0, 0, 0.0), (10, 10, 0.0), (10, 0, 1.5)])
    def test_invalid_arguments(self, horizon, burn_in, pi_e):
        """Horizon must exceed burn-in and pi_e lie in [0, 1]."""
        scenario = constant_scenario(ReceiverModel.IDEAL)
        with pytest.raises(InvalidParameterError):
            run(scenario, PolicyTable(np.array([[1.0]])), pi_e, horizon, burn_in=burn_in)
