"""Slotted Monte Carlo simulation of transmitter and receiver energy buffers.

Each slot credits the harvested energy first, then the transmitters spend
their nominal policy energy truncated to what their buffers hold, and the
receiver either decodes, harvests or both depending on its architecture.
"""

import logging
import math
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from src.channel.region import PolicyTable, ReceiverModel
from src.exceptions import InvalidParameterError
from src.simulation.harvest import HarvestKind, HarvestProcess, SlotStream
from src.solver.optimizer import Scenario

logger = logging.getLogger(__name__)


class SwitchingRule(str, Enum):
    """How a time-switching receiver picks harvest slots."""

    THRESHOLD = "threshold"
    BERNOULLI = "bernoulli"


class XiMode(str, Enum):
    """How the RF energy of a slot is evaluated."""

    SAMPLED = "sampled"
    EXPECTATION = "expectation"


class Banking(str, Enum):
    """What a power-splitting receiver banks on an erased slot."""

    AS_WRITTEN = "as_written"
    STRICT_FRACTION = "strict_fraction"


@dataclass(frozen=True)
class BufferState:
    """Energy held at the start of a slot (J)."""

    tx_buffers: tuple[float, ...]
    rx_buffer: float

    def __post_init__(self) -> None:
        """Buffers are never negative."""
        if self.rx_buffer < 0 or any(b < 0 for b in self.tx_buffers):
            raise AssertionError(f"negative buffer: {self}")


@dataclass(frozen=True)
class SlotInputs:
    """Random inputs of one slot and the nominal policy energy."""

    gains: tuple[float, ...]
    tx_harvest: tuple[float, ...]
    rx_harvest: float
    rx_consumption: float
    nominal: tuple[float, ...]
    symbols: tuple[float, ...] = ()
    switch: float = 1.0


@dataclass(frozen=True)
class SlotRecord:
    """Outcome of one slot."""

    powers: tuple[float, ...]
    clipped: tuple[bool, ...]
    xi: float
    banked: float
    erased: bool
    rx_outage: bool = False

    @property
    def received(self) -> bool:
        """Whether the receiver decoded this slot."""
        return not (self.erased or self.rx_outage)


@dataclass(frozen=True)
class SimulationOptions:
    """Knobs of a simulation run."""

    switching: SwitchingRule = SwitchingRule.BERNOULLI
    xi_mode: XiMode = XiMode.SAMPLED
    ps_banking: Banking = Banking.AS_WRITTEN
    harvest_kind_tx: HarvestKind = HarvestKind.EXPONENTIAL
    harvest_kind_rx: HarvestKind = HarvestKind.EXPONENTIAL
    consumption_kind_rx: HarvestKind = HarvestKind.CONSTANT
    initial_tx_buffer: float = 0.0
    initial_rx_buffer: float | None = None
    trace_slots: int = 0
    checkpoints: tuple[int, ...] = ()


@dataclass
class SimStats:
    """Empirical quantities measured after burn-in."""

    slots: int
    erasure_fraction: float
    avg_tx_power: np.ndarray
    avg_delivered: float
    avg_rf_incident: float
    rx_outage_fraction: float
    tx_clip_fraction: np.ndarray
    final_tx_buffers: np.ndarray
    final_rx_buffer: float
    achieved_rate_estimate: np.ndarray
    checkpoints: dict[int, np.ndarray] = field(default_factory=dict)
    checkpoint_clips: dict[int, np.ndarray] = field(default_factory=dict)
    trace: list[list[float | int]] = field(default_factory=list)


def truncated_policy_step(
    nominal: Sequence[float], available: Sequence[float]
) -> tuple[float, ...]:
    """Spend the nominal energy, or everything available if that is less."""
    return tuple(t if t <= a else a for t, a in zip(nominal, available))


def rf_energy(
    h: Sequence[float],
    t: Sequence[float],
    eta: float,
    mode: XiMode = XiMode.EXPECTATION,
    symbols: Sequence[float] | None = None,
) -> float:
    """RF energy reaching the rectenna in one slot.

    Args:
        h: Fade gains
        t: Energies actually transmitted
        eta: Harvesting efficiency
        mode: Mean over code symbols, or one draw with ``symbols``
        symbols: Standard normal code symbols, one per user (sampled mode)

    Returns:
        eta * sum h t, or eta * (sum sqrt(h t) x)^2
    """
    if mode is XiMode.EXPECTATION:
        return eta * math.fsum(g * p for g, p in zip(h, t))
    if symbols is None or len(symbols) != len(h):
        raise InvalidParameterError("sampled RF energy needs one symbol per user")
    amplitude = math.fsum(math.sqrt(g * p) * x for g, p, x in zip(h, t, symbols))
    return eta * amplitude * amplitude


def advance_transmitters(
    tx_buffers: Sequence[float], inputs: SlotInputs
) -> tuple[tuple[float, ...], tuple[float, ...], tuple[bool, ...]]:
    """Credit harvests, spend the truncated policy energy.

    Returns:
        Tuple of (next buffers, energies spent, clip flags)
    """
    available = tuple(e + y for e, y in zip(tx_buffers, inputs.tx_harvest))
    powers = truncated_policy_step(inputs.nominal, available)
    clipped = tuple(t > a for t, a in zip(inputs.nominal, available))
    after = tuple(a - t for a, t in zip(available, powers))
    return after, powers, clipped


def _slot_rf(inputs: SlotInputs, powers: tuple[float, ...], eta: float, mode: XiMode) -> float:
    return rf_energy(inputs.gains, powers, eta, mode, inputs.symbols or None)


def step_time_switching(
    state: BufferState,
    inputs: SlotInputs,
    eta: float,
    rule: SwitchingRule,
    pi_e: float = 0.0,
    xi_mode: XiMode = XiMode.EXPECTATION,
) -> tuple[BufferState, SlotRecord]:
    """One slot of a time-switching receiver.

    Harvest slots bank the RF energy and are erasures. Under the threshold
    rule the receiver harvests whenever its buffer cannot pay for decoding;
    under the Bernoulli rule it harvests with probability ``pi_e`` and an
    uncovered decode slot is an outage that leaves the buffer untouched.
    """
    tx_after, powers, clipped = advance_transmitters(state.tx_buffers, inputs)
    xi = _slot_rf(inputs, powers, eta, xi_mode)
    available = state.rx_buffer + inputs.rx_harvest

    if rule is SwitchingRule.THRESHOLD:
        harvest = available < inputs.rx_consumption
    else:
        harvest = inputs.switch < pi_e

    if harvest:
        rx_after, banked, erased, outage = available + xi, xi, True, False
    elif available >= inputs.rx_consumption:
        rx_after, banked, erased, outage = available - inputs.rx_consumption, 0.0, False, False
    else:
        rx_after, banked, erased, outage = available, 0.0, False, True

    record = SlotRecord(powers, clipped, xi, banked, erased, outage)
    return BufferState(tx_after, rx_after), record


def step_power_splitting(
    state: BufferState,
    inputs: SlotInputs,
    eta: float,
    pi_e: float,
    xi_mode: XiMode = XiMode.EXPECTATION,
    banking: Banking = Banking.AS_WRITTEN,
) -> tuple[BufferState, SlotRecord]:
    """One slot of a power-splitting receiver.

    The split fraction ``pi_e`` of the RF energy is always harvested. If the
    buffer plus that share cannot pay for decoding the slot is erased, and
    the full RF energy is banked unless ``banking`` is strict.
    """
    tx_after, powers, clipped = advance_transmitters(state.tx_buffers, inputs)
    xi = _slot_rf(inputs, powers, eta, xi_mode)
    available = state.rx_buffer + inputs.rx_harvest
    share = pi_e * xi

    if available + share < inputs.rx_consumption:
        banked = xi if banking is Banking.AS_WRITTEN else share
        rx_after, erased = available + banked, True
    else:
        banked = share
        rx_after, erased = max(available + share - inputs.rx_consumption, 0.0), False

    record = SlotRecord(powers, clipped, xi, banked, erased)
    return BufferState(tx_after, rx_after), record


def step_ideal(
    state: BufferState,
    inputs: SlotInputs,
    eta: float,
    xi_mode: XiMode = XiMode.EXPECTATION,
) -> tuple[BufferState, SlotRecord]:
    """One slot of a receiver that decodes and harvests at once."""
    tx_after, powers, clipped = advance_transmitters(state.tx_buffers, inputs)
    xi = _slot_rf(inputs, powers, eta, xi_mode)
    available = state.rx_buffer + inputs.rx_harvest + xi

    if available < inputs.rx_consumption:
        rx_after, erased = available, True
    else:
        rx_after, erased = max(available - inputs.rx_consumption, 0.0), False

    record = SlotRecord(powers, clipped, xi, xi, erased)
    return BufferState(tx_after, rx_after), record


def _processes(
    scenario: Scenario, options: SimulationOptions
) -> tuple[list[HarvestProcess], HarvestProcess, HarvestProcess]:
    energetics = scenario.energetics
    tx = [HarvestProcess(options.harvest_kind_tx, float(m)) for m in scenario.mean_harvest_tx]
    rx = HarvestProcess(options.harvest_kind_rx, energetics.mean_harvest_rx)
    consumption = HarvestProcess(options.consumption_kind_rx, energetics.mean_consumption_rx)
    return tx, rx, consumption


def run(
    scenario: Scenario,
    policy: PolicyTable,
    pi_e: float,
    horizon: int,
    burn_in: int = 0,
    seed: int = 0,
    options: SimulationOptions | None = None,
) -> SimStats:
    """Simulate the slotted system under ``policy``.

    Args:
        scenario: Problem instance (its ``model`` selects the receiver)
        policy: Nominal energy per joint state; its ``rates`` (rates of a
            decoded slot) drive the achieved-rate estimate
        pi_e: Erasure fraction (Bernoulli probability, or PS split)
        horizon: Total number of slots
        burn_in: Leading slots excluded from every average
        seed: Root random seed
        options: Simulation knobs

    Returns:
        Statistics over slots ``burn_in .. horizon - 1``
    """
    options = options or SimulationOptions()
    if horizon <= 0 or not 0 <= burn_in < horizon:
        raise InvalidParameterError(
            "need horizon > burn_in >= 0", horizon=horizon, burn_in=burn_in
        )
    if not 0.0 <= pi_e <= 1.0:
        raise InvalidParameterError("erasure fraction must lie in [0, 1]", pi_e=pi_e)
    table = scenario.fading
    policy.check_table(table)

    num_users = scenario.num_users
    eta = scenario.energetics.eta
    model = scenario.model
    mode = XiMode(options.xi_mode)
    tx_processes, rx_process, consumption = _processes(scenario, options)
    stream = SlotStream(seed, tx_processes, rx_process, consumption, table.probs)

    initial_rx = (
        options.initial_rx_buffer
        if options.initial_rx_buffer is not None
        else scenario.energetics.mean_consumption_rx
    )
    state = BufferState((options.initial_tx_buffer,) * num_users, initial_rx)
    rates = policy.rates if policy.rates is not None else np.zeros_like(policy.powers)
    wanted = set(options.checkpoints)

    spent = np.zeros(num_users)
    clips = np.zeros(num_users)
    rate_sum = np.zeros(num_users)
    erasures = outages = 0
    banked_sum = incident_sum = 0.0
    checkpoints: dict[int, np.ndarray] = {}
    checkpoint_clips: dict[int, np.ndarray] = {}
    trace: list[list[float | int]] = []

    slot = 0
    for chunk in stream.chunks(horizon):
        states = chunk["state"]
        gains = table.states[states].tolist()
        nominal = policy.powers[states].tolist()
        harvest = chunk["tx"].tolist()
        rx_harvest = chunk["rx_harvest"].tolist()
        rx_consumption = chunk["rx_consumption"].tolist()
        symbols = chunk["symbols"].tolist() if mode is XiMode.SAMPLED else None
        switches = chunk["switch"].tolist()
        slot_rates = rates[states]

        for k in range(len(states)):
            inputs = SlotInputs(
                gains=tuple(gains[k]),
                tx_harvest=tuple(harvest[k]),
                rx_harvest=rx_harvest[k],
                rx_consumption=rx_consumption[k],
                nominal=tuple(nominal[k]),
                symbols=tuple(symbols[k]) if symbols is not None else (),
                switch=switches[k],
            )
            if model is ReceiverModel.TIME_SWITCHING:
                state, record = step_time_switching(
                    state, inputs, eta, SwitchingRule(options.switching), pi_e, mode
                )
            elif model is ReceiverModel.POWER_SPLITTING:
                state, record = step_power_splitting(
                    state, inputs, eta, pi_e, mode, Banking(options.ps_banking)
                )
            else:
                state, record = step_ideal(state, inputs, eta, mode)

            if slot < options.trace_slots:
                trace.append(_trace_row(slot, int(states[k]), record, state))
            if slot >= burn_in:
                spent += record.powers
                clips += record.clipped
                banked_sum += record.banked
                incident_sum += record.xi
                erasures += record.erased
                outages += record.rx_outage
                if record.received:
                    rate_sum += slot_rates[k]
            slot += 1
            if slot in wanted:
                checkpoints[slot] = np.array(state.tx_buffers)
                checkpoint_clips[slot] = clips / max(slot - burn_in, 1)

    measured = horizon - burn_in
    stats = SimStats(
        slots=measured,
        erasure_fraction=erasures / measured,
        avg_tx_power=spent / measured,
        avg_delivered=banked_sum / measured,
        avg_rf_incident=incident_sum / measured,
        rx_outage_fraction=outages / measured,
        tx_clip_fraction=clips / measured,
        final_tx_buffers=np.array(state.tx_buffers),
        final_rx_buffer=state.rx_buffer,
        achieved_rate_estimate=rate_sum / measured,
        checkpoints=checkpoints,
        checkpoint_clips=checkpoint_clips,
        trace=trace,
    )
    logger.info(
        "Simulated %d slots (%s, seed %d): erasures %.4f, outages %.4f, clips %s",
        horizon,
        model.value,
        seed,
        stats.erasure_fraction,
        stats.rx_outage_fraction,
        np.round(stats.tx_clip_fraction, 6).tolist(),
    )
    return stats


def _run_job(job: tuple) -> SimStats:
    return run(*job)


def run_seeds(
    scenario: Scenario,
    policy: PolicyTable,
    pi_e: float,
    horizon: int,
    seeds: Sequence[int],
    burn_in: int = 0,
    options: SimulationOptions | None = None,
    workers: int = 1,
) -> list[SimStats]:
    """Independent runs of :func:`run`, one per seed, returned in seed order."""
    jobs = [(scenario, policy, pi_e, horizon, burn_in, seed, options) for seed in seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run_job, jobs))
    return [_run_job(job) for job in jobs]


def _trace_row(
    slot: int, state_index: int, record: SlotRecord, state: BufferState
) -> list[float | int]:
    return [
        slot,
        state_index,
        *record.powers,
        *(int(c) for c in record.clipped),
        *state.tx_buffers,
        state.rx_buffer,
        record.xi,
        int(record.erased),
    ]


def trace_header(num_users: int) -> list[str]:
    """Column names of a slot trace."""
    users = range(1, num_users + 1)
    return [
        "slot",
        "state",
        *(f"t{i}" for i in users),
        *(f"clip{i}" for i in users),
        *(f"E{i}" for i in users),
        "E_r",
        "xi",
        "erased",
    ]
