"""The four queue-free admission strategies.

* TokenBucket          -- inverted-fill bucket with per-priority watermarks
* TokenBucketRateModel -- the bucket rewritten as a rate variable (b = a*T)
* RateGapper           -- rate-estimation gapping with class fairness
* MixedGapper          -- gapper admission test relaxed by the bucket fill

All throttles expose the same stateful surface: ``decide(offer)`` returns a
DecisionRecord and commits the state change; ``admit(t, class_id, priority)``
is the diagnostics-free fast path; ``clone()`` copies the state for what-if
probing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import (
    NonPositiveStep,
    TimeRegression,
    UnknownClass,
    UnknownPriority,
)
from .types import CapacityProfile, Decision, Offer

_DENOM_EPS = 1e-12


@dataclass(frozen=True, slots=True)
class DecisionRecord:
    offer: Offer
    verdict: Decision
    diagnostics: dict[str, float] = field(default_factory=dict)


def compute_used_capacity(rho_hats, shares, c: float):
    """Capacity consumed by classes up to their agreed shares.

    Returns (u, u1, u2): u1 sums the offered-rate estimates of classes at or
    under their share, u2 sums the share allotments of over-share classes,
    u = u1 + u2.
    """
    u1 = 0.0
    u2 = 0.0
    for rho_i, s_i in zip(rho_hats, shares):
        sc = s_i * c
        if rho_i <= sc:
            u1 += rho_i
        else:
            u2 += sc
    return u1 + u2, u1, u2


def compute_bound_rates(rho_hats, shares, c: float, variant: str = "G",
                        normalize: bool = False):
    """Per-class admission ceilings g_i.

    Classes at or under their share are never capped below their offered
    rate (g_i = rho_hat_i); over-share classes receive their agreed share
    plus a proportional cut of the surplus capacity.  Variant "G" measures
    the surplus against the full used capacity u; variant "GPrime" against
    the under-share part u1 only (its sum is exported as a diagnostic, not
    guaranteed to equal c).  ``normalize`` rescales the over-share surplus
    so the total is exactly c; off by default.
    """
    if variant not in ("G", "GPrime"):
        raise ValueError(f"unknown bound-rate variant {variant!r}")
    n = len(rho_hats)
    u1 = 0.0
    u2 = 0.0
    rho = 0.0
    over = [False] * n
    for i in range(n):
        rho_i = rho_hats[i]
        rho += rho_i
        sc = shares[i] * c
        if rho_i <= sc:
            u1 += rho_i
        else:
            u2 += sc
            over[i] = True
    u_eff = u1 if variant == "GPrime" else u1 + u2
    denom = rho - u_eff
    frac = (c - u_eff) / denom if denom > _DENOM_EPS else 0.0
    g = [0.0] * n
    surplus_total = 0.0
    for i in range(n):
        if over[i]:
            extra = (rho_hats[i] - shares[i] * c) * frac
            surplus_total += extra
            g[i] = shares[i] * c + extra
        else:
            g[i] = rho_hats[i]
    if normalize and surplus_total > _DENOM_EPS:
        scale = (c - (u1 + u2)) / surplus_total
        for i in range(n):
            if over[i]:
                g[i] = shares[i] * c + (g[i] - shares[i] * c) * scale
    return g


class TokenBucket:
    """Inverted-fill token bucket with per-priority watermarks.

    The fill b rises by 1 per admitted offer and drains at the token rate
    r(t); an offer of priority j is admitted while the provisional fill
    stays at or under W_j.  The drain uses the rate observed at the previous
    event (r is piecewise-constant, so this only matters across breakpoints).
    """

    kind = "token_bucket"

    def __init__(self, watermarks, rate: CapacityProfile, start_time: float = 0.0):
        self.watermarks = tuple(float(w) for w in watermarks)
        self.rate = rate
        self.b = 0.0
        self.last_time = float(start_time)

    @property
    def num_priorities(self) -> int:
        return len(self.watermarks)

    def clone(self) -> "TokenBucket":
        other = TokenBucket.__new__(TokenBucket)
        other.watermarks = self.watermarks
        other.rate = self.rate
        other.b = self.b
        other.last_time = self.last_time
        return other

    def admit(self, t: float, class_id: int = 0, priority: int = 0) -> bool:
        dt = t - self.last_time
        if dt < 0.0:
            raise TimeRegression(f"offer at {t} precedes last event {self.last_time}")
        if not 0 <= priority < len(self.watermarks):
            raise UnknownPriority(f"priority {priority} not configured")
        drained = self.b - self.rate.rate_at(self.last_time) * dt
        provisional = drained + 1.0
        if provisional < 1.0:
            provisional = 1.0
        admitted = provisional <= self.watermarks[priority]
        self.b = provisional if admitted else max(0.0, drained)
        self.last_time = t
        return admitted

    def decide(self, offer: Offer) -> DecisionRecord:
        admitted = self.admit(offer.arrival, offer.class_id, offer.priority)
        return DecisionRecord(
            offer,
            Decision.ADMIT if admitted else Decision.REJECT,
            {"b": self.b},
        )


class TokenBucketRateModel:
    """Token bucket restated as a rate variable a_tilde with T = W/r.

    Defined for a constant token rate r; the decision sequence matches
    TokenBucket((W,), constant r) exactly, with b = a_tilde * T.
    """

    kind = "rate_model"

    def __init__(self, rate: float, watermark: float, start_time: float = 0.0):
        if rate <= 0.0:
            raise ValueError("rate must be positive")
        self.r = float(rate)
        self.W = float(watermark)
        self.T = self.W / self.r
        self.a_tilde = 0.0
        self.last_time = float(start_time)

    num_priorities = 1

    def clone(self) -> "TokenBucketRateModel":
        other = TokenBucketRateModel.__new__(TokenBucketRateModel)
        other.r, other.W, other.T = self.r, self.W, self.T
        other.a_tilde = self.a_tilde
        other.last_time = self.last_time
        return other

    def admit(self, t: float, class_id: int = 0, priority: int = 0) -> bool:
        dt = t - self.last_time
        if dt < 0.0:
            raise TimeRegression(f"offer at {t} precedes last event {self.last_time}")
        T = self.T
        decayed = (T * self.a_tilde - dt * self.r) / T
        if decayed < 0.0:
            decayed = 0.0
        provisional = 1.0 / T + decayed
        admitted = provisional <= self.r
        self.a_tilde = provisional if admitted else decayed
        self.last_time = t
        return admitted

    def decide(self, offer: Offer) -> DecisionRecord:
        admitted = self.admit(offer.arrival, offer.class_id, offer.priority)
        return DecisionRecord(
            offer,
            Decision.ADMIT if admitted else Decision.REJECT,
            {"a_tilde": self.a_tilde},
        )


class RateGapper:
    """Rate-estimation call gapping with class fairness.

    Keeps one offered-rate estimate rho_hat_i and one admitted-rate estimate
    a_hat_i per class.  Every event decays all estimators with the timer T_j
    of the arriving offer's priority; only the offered class receives the
    impulse.  The offer is admitted iff the provisional admitted rate of its
    class stays within the class's bound rate g_i.  Rejected offers still
    count as offered traffic (rho_hat keeps the impulse) but never raise any
    a_hat.
    """

    kind = "rate_gapper"

    def __init__(self, num_classes: int, shares, timers,
                 capacity: CapacityProfile, variant: str = "G",
                 start_time: float = 0.0, normalize: bool = False):
        self.num_classes = int(num_classes)
        self.shares = tuple(float(s) for s in shares)
        self.timers = tuple(float(x) for x in timers)
        self.capacity = capacity
        self.variant = variant
        self.normalize = normalize
        self.rho = [0.0] * self.num_classes
        self.a_hat = [0.0] * self.num_classes
        self.last_time = float(start_time)

    @property
    def num_priorities(self) -> int:
        return len(self.timers)

    def clone(self) -> "RateGapper":
        other = RateGapper.__new__(RateGapper)
        other.__dict__.update(self.__dict__)
        other.rho = list(self.rho)
        other.a_hat = list(self.a_hat)
        return other

    def _decide(self, t: float, class_id: int, priority: int):
        dt = t - self.last_time
        if dt < 0.0:
            raise TimeRegression(f"offer at {t} precedes last event {self.last_time}")
        if not 0 <= class_id < self.num_classes:
            raise UnknownClass(f"class {class_id} not configured")
        if not 0 <= priority < len(self.timers):
            raise UnknownPriority(f"priority {priority} not configured")
        T = self.timers[priority]
        decay = 1.0 - dt / T
        if decay < 0.0:
            decay = 0.0
        impulse = 1.0 / T
        rho = self.rho
        a_hat = self.a_hat
        for i in range(self.num_classes):
            rho[i] *= decay
        rho[class_id] += impulse
        alpha = [v * decay for v in a_hat]
        alpha[class_id] += impulse
        c = self.capacity.rate_at(t)
        g = compute_bound_rates(rho, self.shares, c, self.variant, self.normalize)
        admitted = alpha[class_id] <= g[class_id]
        if admitted:
            self.a_hat = alpha
        else:
            for i in range(self.num_classes):
                a_hat[i] *= decay
        self.last_time = t
        return admitted, alpha, g, c

    def admit(self, t: float, class_id: int = 0, priority: int = 0) -> bool:
        return self._decide(t, class_id, priority)[0]

    def decide(self, offer: Offer) -> DecisionRecord:
        admitted, alpha, g, c = self._decide(offer.arrival, offer.class_id, offer.priority)
        diag = {"u": compute_used_capacity(self.rho, self.shares, c)[0]}
        for i in range(self.num_classes):
            diag[f"rho_hat_{i}"] = self.rho[i]
            diag[f"alpha_hat_{i}"] = alpha[i]
            diag[f"a_hat_{i}"] = self.a_hat[i]
            diag[f"g_{i}"] = g[i]
        return DecisionRecord(
            offer, Decision.ADMIT if admitted else Decision.REJECT, diag)


class MixedGapper:
    """Rate gapping with bucket-type aggregate characteristics.

    Runs the RateGapper bookkeeping and a token bucket side by side; the
    admission test is the gapper's, relaxed by the relative bucket fill:
    (b/W_j) * alpha_hat_k <= g_k.  The fill used in the test and committed on
    admission is clamped to W_max = max_j W_j.  Timers default to
    T_j = W_j / r(t); pass explicit timers to decouple them from the
    watermarks.
    """

    kind = "mixed"

    def __init__(self, num_classes: int, shares, watermarks,
                 capacity: CapacityProfile, rate: CapacityProfile | None = None,
                 timers=None, variant: str = "G", start_time: float = 0.0,
                 normalize: bool = False):
        self.num_classes = int(num_classes)
        self.shares = tuple(float(s) for s in shares)
        self.watermarks = tuple(float(w) for w in watermarks)
        self.w_max = max(self.watermarks)
        self.capacity = capacity
        self.rate = rate if rate is not None else capacity
        self.timers = tuple(float(x) for x in timers) if timers is not None else None
        self.variant = variant
        self.normalize = normalize
        self.rho = [0.0] * self.num_classes
        self.a_hat = [0.0] * self.num_classes
        self.b = 0.0
        self.last_time = float(start_time)

    @property
    def num_priorities(self) -> int:
        return len(self.watermarks)

    def clone(self) -> "MixedGapper":
        other = MixedGapper.__new__(MixedGapper)
        other.__dict__.update(self.__dict__)
        other.rho = list(self.rho)
        other.a_hat = list(self.a_hat)
        return other

    def _decide(self, t: float, class_id: int, priority: int):
        dt = t - self.last_time
        if dt < 0.0:
            raise TimeRegression(f"offer at {t} precedes last event {self.last_time}")
        if not 0 <= class_id < self.num_classes:
            raise UnknownClass(f"class {class_id} not configured")
        if not 0 <= priority < len(self.watermarks):
            raise UnknownPriority(f"priority {priority} not configured")
        r_prev = self.rate.rate_at(self.last_time)
        r_now = self.rate.rate_at(t)
        w_j = self.watermarks[priority]
        T = self.timers[priority] if self.timers is not None else w_j / r_now
        decay = 1.0 - dt / T
        if decay < 0.0:
            decay = 0.0
        impulse = 1.0 / T
        rho = self.rho
        a_hat = self.a_hat
        for i in range(self.num_classes):
            rho[i] *= decay
        rho[class_id] += impulse
        alpha = [v * decay for v in a_hat]
        alpha[class_id] += impulse
        c = self.capacity.rate_at(t)
        g = compute_bound_rates(rho, self.shares, c, self.variant, self.normalize)
        drained = self.b - r_prev * dt
        provisional = drained + 1.0
        if provisional < 1.0:
            provisional = 1.0
        if provisional > self.w_max:
            provisional = self.w_max
        admitted = (provisional / w_j) * alpha[class_id] <= g[class_id]
        if admitted:
            self.a_hat = alpha
            self.b = provisional
        else:
            for i in range(self.num_classes):
                a_hat[i] *= decay
            self.b = max(0.0, drained)
        self.last_time = t
        return admitted, alpha, g, c

    def admit(self, t: float, class_id: int = 0, priority: int = 0) -> bool:
        return self._decide(t, class_id, priority)[0]

    def decide(self, offer: Offer) -> DecisionRecord:
        admitted, alpha, g, c = self._decide(offer.arrival, offer.class_id, offer.priority)
        diag = {
            "b": self.b,
            "u": compute_used_capacity(self.rho, self.shares, c)[0],
        }
        for i in range(self.num_classes):
            diag[f"rho_hat_{i}"] = self.rho[i]
            diag[f"alpha_hat_{i}"] = alpha[i]
            diag[f"a_hat_{i}"] = self.a_hat[i]
            diag[f"g_{i}"] = g[i]
        return DecisionRecord(
            offer, Decision.ADMIT if admitted else Decision.REJECT, diag)


def probe_recovery_times(throttle, t0: float, step: float, horizon: float,
                         class_id: int = 0) -> dict[int, float | None]:
    """Earliest admit time per priority after a rejection at t0.

    Each probe clones the throttle and offers a single event at
    t0 + k*step, k = 1, 2, ...; the first admitted probe time is recorded,
    or None if nothing is admitted within the horizon.  The original state
    is never mutated.
    """
    if step <= 0.0:
        raise NonPositiveStep(f"probe step must be positive, got {step}")
    times: dict[int, float | None] = {}
    n_steps = int(horizon / step + 1e-9)
    for j in range(throttle.num_priorities):
        times[j] = None
        for k in range(1, n_steps + 1):
            t = t0 + k * step
            if throttle.clone().admit(t, class_id, j):
                times[j] = t
                break
    return times
