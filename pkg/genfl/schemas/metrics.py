"""
Per-round metric records and the ordered trace of one run.
"""
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

CSV_COLUMNS = (
    "round",
    "mode",
    "test_accuracy",
    "test_loss",
    "mean_client_emd",
    "round_time_sec",
    "round_energy_joules",
    "pool_size",
)


@dataclass(frozen=True)
class RoundMetrics:
    round: int
    test_accuracy: float
    test_loss: float
    mean_client_emd: float
    round_time_sec: float
    round_energy_joules: float
    pool_size: int
    mode: str

    def __post_init__(self):
        if not 0.0 <= self.test_accuracy <= 1.0:
            raise ValueError(f"test_accuracy out of range: {self.test_accuracy}")
        if self.round_time_sec < 0 or self.round_energy_joules < 0:
            raise ValueError("round time and energy must be non-negative")

    def as_row(self) -> Tuple[str, ...]:
        """Column values in CSV order; floats use the shortest round-trip repr"""
        return (
            str(self.round),
            self.mode,
            repr(float(self.test_accuracy)),
            repr(float(self.test_loss)),
            repr(float(self.mean_client_emd)),
            repr(float(self.round_time_sec)),
            repr(float(self.round_energy_joules)),
            str(self.pool_size),
        )


@dataclass
class MetricsTable:
    """Ordered RoundMetrics of one run plus what identifies the run"""
    rows: List[RoundMetrics] = field(default_factory=list)
    config_hash: str = ""
    seed: int = 0
    label: str = ""

    def __post_init__(self):
        for expected, row in enumerate(self.rows):
            if row.round != expected:
                raise ValueError(f"rounds must increase from 0 (row {expected} has round {row.round})")

    def __len__(self) -> int:
        return len(self.rows)

    def accuracies(self) -> List[float]:
        return [r.test_accuracy for r in self.rows]

    @property
    def final_accuracy(self) -> Optional[float]:
        return self.rows[-1].test_accuracy if self.rows else None

    def plateau_accuracy(self, window: int) -> Optional[float]:
        return plateau_accuracy(self.rows, window)

    @property
    def best_accuracy(self) -> Optional[float]:
        return max(self.accuracies()) if self.rows else None

    @property
    def total_time_sec(self) -> float:
        return sum(r.round_time_sec for r in self.rows)

    @property
    def total_energy_joules(self) -> float:
        return sum(r.round_energy_joules for r in self.rows)


def rounds_to_threshold(rows: List[RoundMetrics], threshold: float) -> Optional[int]:
    """First round whose test accuracy reaches threshold, or None"""
    for row in rows:
        if row.test_accuracy >= threshold:
            return row.round
    return None


def plateau_accuracy(rows: List[RoundMetrics], window: int) -> Optional[float]:
    """Mean test accuracy of the last `window` rounds (fewer if the run is shorter)"""
    if window < 1:
        raise ValueError(f"window must be at least 1, got {window}")
    tail = rows[-window:]
    if not tail:
        return None
    return sum(r.test_accuracy for r in tail) / len(tail)
