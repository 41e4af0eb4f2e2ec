"""Cost meter shared by the walk, reflection and search code."""

from __future__ import annotations

import dataclasses


@dataclasses.dataclass
class CostMeter:
    """Setup / update / check unit counts.

    Every (controlled) walk application costs 4 update units, so
    ``4 * cwalk_calls`` is the part of ``update_units`` due to the walk.
    """

    setup_units: int = 0
    update_units: int = 0
    check_units: int = 0
    cwalk_calls: int = 0

    def charge_walk(self, calls: int = 1) -> None:
        self.cwalk_calls += calls
        self.update_units += 4 * calls

    def snapshot(self) -> "CostMeter":
        return dataclasses.replace(self)

    def __add__(self, other: "CostMeter") -> "CostMeter":
        return CostMeter(*(a + b for a, b in zip(dataclasses.astuple(self), dataclasses.astuple(other))))

    def __sub__(self, other: "CostMeter") -> "CostMeter":
        return CostMeter(*(a - b for a, b in zip(dataclasses.astuple(self), dataclasses.astuple(other))))

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)
