"""Geometric sample grids descending toward zero.

Grids are described by decimal strings so that two runs with the same
configuration regenerate bit-identical points at any working precision.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List


@dataclass(frozen=True)
class GridSpec:
    """Points x_j = start * 10^(j * step_log10), j = 0, 1, ... down to floor.

    step_log10 must be negative; the default quarter-decade step gives
    log-uniform coverage, which matches power-law behavior near zero.
    """

    start: str = "1e-2"
    floor: str = "1e-25"
    step_log10: str = "-0.25"

    def points(self, ctx) -> List:
        start = ctx.mpf(self.start)
        floor = ctx.mpf(self.floor)
        step = ctx.mpf(self.step_log10)
        if not (start > floor > 0):
            raise ValueError("grid requires start > floor > 0")
        if not step < 0:
            raise ValueError("grid step_log10 must be negative")
        # closed-form point count avoids drift in the loop condition
        span = ctx.log10(start / floor)
        last = int(ctx.floor(span / (-step) + ctx.mpf("1e-9")))
        return [start * ctx.power(10, step * j) for j in range(last + 1)]


PROBE_GRID = GridSpec()

VALIDATION_FLOOR = "1e-30"


def validation_grid(start: str = "1") -> GridSpec:
    """Hypothesis-checking grid; spans (0, start] down to a deep floor."""
    return GridSpec(start=start, floor=VALIDATION_FLOOR, step_log10="-0.25")
