"""Exponential-forgetting intensity estimator for marked point processes.

One estimator tracks one event rate (offers/sec). At every observed event
time the previous value decays by max{0, 1 - dt/T} and, if the event counts
for this estimator (chi = 1), an impulse 1/T is added:

    value' = chi/T + value * max(0, 1 - dt/T)

T is the forgetting horizon of the *current* event (it may differ event to
event when priorities carry different timers); the T used at the most
recent update is kept on the state so variants that decay with the previous
timer can be added without a state change.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DomainError, TimeRegression


def step(value: float, dt: float, chi: int, T: float) -> float:
    """One raw estimator transition; no argument checking (hot path)."""
    decay = 1.0 - dt / T
    if decay <= 0.0:
        return chi / T
    return chi / T + value * decay


@dataclass(frozen=True, slots=True)
class EstimatorState:
    """Estimator value (events/sec), its clock, and the last timer used."""

    value: float = 0.0
    last_time: float = 0.0
    last_T: float = 1.0


def estimator_peek(state: EstimatorState, t: float, chi: int, T: float) -> float:
    """Value the estimator would take at event time t, without committing."""
    if T <= 0.0:
        raise DomainError(f"timer must be positive, got {T}")
    dt = t - state.last_time
    if dt < 0.0:
        raise TimeRegression(f"event at {t} precedes state clock {state.last_time}")
    return step(state.value, dt, chi, T)


def estimator_update(state: EstimatorState, t: float, chi: int, T: float) -> EstimatorState:
    """Commit one event observation; returns the new state."""
    return EstimatorState(estimator_peek(state, t, chi, T), t, T)
