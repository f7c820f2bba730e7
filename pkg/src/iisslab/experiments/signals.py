"""Input signals for the scenario runs.

All signals are piecewise constant in time with switch times aligned to the
integration grid, which keeps the per-step input integrals exact.
"""

from __future__ import annotations

import numpy as np

__all__ = ["PiecewiseConstantSignal", "constant_signal", "random_field_signal"]


class PiecewiseConstantSignal:
    """Field-valued signal holding values[k] on [k*segment_time, (k+1)*...)."""

    def __init__(self, values: np.ndarray, segment_time: float):
        values = np.atleast_2d(np.asarray(values, dtype=float))
        if segment_time <= 0:
            raise ValueError("segment_time must be positive")
        self.values = values
        self.segment_time = segment_time

    def __call__(self, t: float) -> np.ndarray:
        # nudge absorbs roundoff in t = k*dt at segment boundaries
        seg = int(t / self.segment_time + 1e-9)
        return self.values[min(seg, len(self.values) - 1)]


def constant_signal(values: np.ndarray):
    """Time-invariant field."""
    values = np.asarray(values, dtype=float)
    return lambda t: values


def random_field_signal(rng: np.random.Generator, n: int, amplitude: float,
                        horizon: float, switch_every: float, dt: float) -> PiecewiseConstantSignal:
    """Uniform[-amplitude, amplitude] node values redrawn at each switch time;
    the switch interval is snapped to a whole number of steps."""
    seg_steps = max(1, int(round(switch_every / dt)))
    segment_time = seg_steps * dt
    segments = max(1, int(np.ceil(horizon / segment_time - 1e-9)))
    values = rng.uniform(-amplitude, amplitude, size=(segments, n))
    return PiecewiseConstantSignal(values, segment_time)
