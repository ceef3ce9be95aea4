"""I.i.d. energy arrival and consumption processes."""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from src.exceptions import InvalidParameterError

CHUNK_SLOTS = 65536


class HarvestKind(str, Enum):
    """Per-slot distribution of harvested or consumed energy."""

    CONSTANT = "constant"
    EXPONENTIAL = "exponential"
    UNIFORM = "uniform"
    TWO_POINT = "two-point"


@dataclass(frozen=True)
class HarvestProcess:
    """Stationary i.i.d. energy process with a given mean (J/slot).

    Uniform draws on [0, 2 mean]; two-point takes 0 or 2 mean with equal
    probability.
    """

    kind: HarvestKind
    mean: float

    def __post_init__(self) -> None:
        """Check the mean."""
        object.__setattr__(self, "kind", HarvestKind(self.kind))
        if self.mean < 0:
            raise InvalidParameterError("harvest mean must be nonnegative", mean=self.mean)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw ``size`` slots."""
        if self.kind is HarvestKind.CONSTANT or self.mean == 0:
            return np.full(size, self.mean)
        if self.kind is HarvestKind.EXPONENTIAL:
            return rng.exponential(self.mean, size)
        if self.kind is HarvestKind.UNIFORM:
            return rng.uniform(0.0, 2.0 * self.mean, size)
        return 2.0 * self.mean * rng.integers(0, 2, size)


class SlotStream:
    """Chunked random draws of every per-slot input.

    Each chunk is generated from its own child seed, so the first ``n`` slots
    are identical whatever the total horizon.
    """

    def __init__(
        self,
        seed: int,
        tx_processes: list[HarvestProcess],
        rx_harvest: HarvestProcess,
        rx_consumption: HarvestProcess,
        state_probs: np.ndarray,
        chunk: int = CHUNK_SLOTS,
    ):
        """Initialize the stream.

        Args:
            seed: Root seed
            tx_processes: One harvest process per transmitter
            rx_harvest: Receiver harvest process
            rx_consumption: Receiver consumption process
            state_probs: Joint fade state probabilities
            chunk: Slots per chunk
        """
        self.seed_sequence = np.random.SeedSequence(seed)
        self.tx_processes = tx_processes
        self.rx_harvest = rx_harvest
        self.rx_consumption = rx_consumption
        self.cumulative = np.cumsum(state_probs)
        self.cumulative[-1] = 1.0
        self.chunk = chunk

    def chunks(self, horizon: int):
        """Yield per-chunk dictionaries of arrays until ``horizon`` slots."""
        produced = 0
        while produced < horizon:
            (child,) = self.seed_sequence.spawn(1)
            rng = np.random.default_rng(child)
            size = self.chunk
            draws = {
                "state": np.searchsorted(self.cumulative, rng.random(size), side="right"),
                "tx": np.stack([p.sample(rng, size) for p in self.tx_processes], axis=1),
                "rx_harvest": self.rx_harvest.sample(rng, size),
                "rx_consumption": self.rx_consumption.sample(rng, size),
                "symbols": rng.standard_normal((size, len(self.tx_processes))),
                "switch": rng.random(size),
            }
            take = min(size, horizon - produced)
            yield {key: value[:take] for key, value in draws.items()}
            produced += take
