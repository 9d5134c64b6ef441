"""Closed interval value type shared by pilot and CI layers."""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = ["Interval"]


@dataclass(frozen=True)
class Interval:
    """Closed interval [lower, upper]; empty intervals carry NaN endpoints."""

    lower: float
    upper: float
    empty: bool = False

    def __post_init__(self) -> None:
        if self.empty:
            if not (math.isnan(self.lower) and math.isnan(self.upper)):
                raise ValueError("empty intervals must have NaN endpoints")
        else:
            if not (math.isfinite(self.lower) and math.isfinite(self.upper)):
                raise ValueError("interval endpoints must be finite")
            if self.lower > self.upper:
                raise ValueError("lower endpoint exceeds upper endpoint")

    @staticmethod
    def empty_interval() -> "Interval":
        return Interval(math.nan, math.nan, empty=True)

    @property
    def length(self) -> float:
        return 0.0 if self.empty else self.upper - self.lower

    def contains(self, x: float) -> bool:
        return (not self.empty) and self.lower <= x <= self.upper
