"""Fluid drain times after one huge service, and the tail scale factors u_k.

When a single service at station k takes time x (huge), work piles up behind
it. On the fluid scale (time and queue mass both measured in units of x) the
picture is deterministic and piecewise linear:

* [0, 1): station k is stuck on the big job and emits nothing; its queue
  fills at a constant rate while every other station passes its inflow
  through (a stable network cannot saturate anywhere else in this phase);
* from 1 on: backlogged stations drain at capacity 1/b_j, empty stations
  pass inflow through or saturate and start growing; rates are piecewise
  constant, changing only when some station empties.

tau_k is the time until the system is fluid-empty again; busy periods scale
like B ~ tau_k * x, so u_k = 1/tau_k multiplies x in the tail formula.

Rates within a regime come from a saturation iteration: assume every
station with unknown status is saturated (output pinned at capacity), solve
the pass-through balance for the free set, and move any assumed-saturated
station whose implied inflow does not exceed capacity into the free set.
Boundary equality (inflow = capacity within 1e-12) counts as free: its
level would stay at zero either way.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .network import NetworkSpec, _solve, first_visit_probabilities, stability_margin

_TINY = 1e-12
_SAT_TOL = 1e-12


class FluidInstability(RuntimeError):
    """The fluid picture fails to drain; the network is at or past critical
    load for this purpose."""


def saturated_rates(spec: NetworkSpec, fixed_rates: dict[int, float]):
    """Flow balance with some stations' output rates pinned.

    Returns (abar, dbar, free) where free is the set of non-pinned stations
    that end up passing their inflow through (dbar_j = abar_j <= 1/b_j); the
    remaining non-pinned stations are saturated at capacity with strictly
    larger inflow.
    """
    K = spec.n_stations
    a = spec.a
    cap = 1.0 / spec.b
    P = spec.interior
    free: list[int] = []
    while True:
        dbar = cap.copy()
        for j, r in fixed_rates.items():
            dbar[j] = r
        if free:
            idx = np.array(free)
            others = [j for j in range(K) if j not in free]
            c = spec.p0[idx] / a
            for j in others:
                c += P[j, idx] * dbar[j]
            x = _solve(np.eye(len(free)) - P[np.ix_(free, free)].T, c,
                       "fluid pass-through rates")
            dbar[idx] = x
        abar = spec.p0 / a + P.T @ dbar
        newly_free = [j for j in range(K)
                      if j not in fixed_rates and j not in free
                      and abar[j] <= cap[j] + _SAT_TOL]
        if not newly_free:
            return abar, dbar, frozenset(free)
        free.extend(newly_free)


@dataclass(frozen=True)
class FrozenRates:
    abar: np.ndarray
    dbar: np.ndarray
    level_at_end: float  # mass piled at the blocked station after unit time


def frozen_period_rates(spec: NetworkSpec, k: int) -> FrozenRates:
    """Rates while station k is blocked on the huge job (output 0). The
    blocked station fills at rate beta_k/a; nothing else accumulates."""
    abar, dbar, free = saturated_rates(spec, {k: 0.0})
    if len(free) != spec.n_stations - 1:
        sat = sorted(set(range(spec.n_stations)) - set(free) - {k})
        raise FluidInstability(
            f"stations {sat} saturate while {k} is blocked; network cannot be stable"
        )
    return FrozenRates(abar=abar, dbar=dbar, level_at_end=float(abar[k]))


@dataclass(frozen=True)
class Interval1:
    free_set: frozenset[int]
    abar: np.ndarray
    dbar: np.ndarray
    drain_rate: float          # net drain of station k: 1/b_k - abar_k > 0
    gamma: dict[int, float]    # growth rates of the saturated stations


def interval1_free_set(spec: NetworkSpec, k: int) -> Interval1:
    """Regime right after the huge job finishes: k drains its pile at
    capacity, saturated stations grow at gamma_l, the rest stay free."""
    cap = 1.0 / spec.b
    abar, dbar, free = saturated_rates(spec, {k: float(cap[k])})
    drain = float(cap[k] - abar[k])
    if drain <= 0:
        raise FluidInstability(
            f"instability detected: station {k} cannot drain its pile "
            f"(inflow {abar[k]:.6g} >= capacity {cap[k]:.6g})"
        )
    gamma = {j: float(abar[j] - cap[j]) for j in range(spec.n_stations)
             if j != k and j not in free}
    return Interval1(free_set=free, abar=abar, dbar=dbar, drain_rate=drain,
                     gamma=gamma)


@dataclass(frozen=True)
class Segment:
    t0: float
    t1: float
    levels: np.ndarray  # at t0
    abar: np.ndarray
    dbar: np.ndarray

    @property
    def slopes(self) -> np.ndarray:
        return self.abar - self.dbar


def _piecewise_drain(spec: NetworkSpec, levels: np.ndarray, t_start: float,
                     max_phases: int) -> list[Segment]:
    """Event-driven integration from a backlogged state until empty. Within
    a subinterval, positive stations are pinned at capacity and the rest
    partition into free/saturated; the subinterval ends when the earliest
    draining station empties (coinciding emptying times merge)."""
    cap = 1.0 / spec.b
    levels = np.array(levels, dtype=float)
    t = t_start
    segs: list[Segment] = []
    for _ in range(max_phases):
        if levels.max() <= _TINY:
            return segs
        positive = np.flatnonzero(levels > _TINY)
        abar, dbar, _ = saturated_rates(spec, {int(j): float(cap[j]) for j in positive})
        slopes = abar - dbar
        draining = [j for j in positive if slopes[j] < -_TINY]
        if not draining:
            raise FluidInstability(
                "instability detected: backlogged stations "
                f"{positive.tolist()} cannot drain (net rates "
                f"{[float(slopes[j]) for j in positive]})"
            )
        dt = min(levels[j] / -slopes[j] for j in draining)
        segs.append(Segment(t, t + dt, levels.copy(), abar, dbar))
        levels = levels + slopes * dt
        levels[levels <= _TINY] = 0.0  # merge stations emptying together
        t += dt
    raise FluidInstability(f"fluid levels did not settle within {max_phases} phases")


def interval2_drain(spec: NetworkSpec, k: int, levels_at_start) -> tuple[tuple[Segment, ...], float]:
    """Drain the leftover piles after station k's own pile is gone. Returns
    the subintervals (clock starting at 0) and their total duration."""
    levels = np.array(levels_at_start, dtype=float)
    if levels[k] > _TINY:
        raise ValueError(f"station {k} must be empty at the start of this phase")
    segs = _piecewise_drain(spec, levels, 0.0, 2 * spec.n_stations)
    return tuple(segs), (segs[-1].t1 if segs else 0.0)


@dataclass(frozen=True)
class FluidTimeline:
    station: int
    tau: float
    t_frozen: float
    t_drain_k: float      # interval-1 length: station k's own pile vanishes
    t_settle: float       # interval-2 length: the rest of the system drains
    frozen_rate: float    # fill rate of station k while blocked = beta_k/a
    free_set: frozenset[int]
    segments: tuple[Segment, ...]

    @property
    def u(self) -> float:
        return 1.0 / self.tau

    def levels_at(self, t: float) -> np.ndarray:
        K = self.segments[0].levels.size
        if t < 0:
            return np.zeros(K)
        for seg in self.segments:
            if t < seg.t1:
                return seg.levels + seg.slopes * (t - seg.t0)
        return np.zeros(K)

    def breakpoints(self) -> np.ndarray:
        return np.array([self.segments[0].t0] + [s.t1 for s in self.segments])


def drain_timeline(spec: NetworkSpec, k: int, *, frozen_duration: float = 1.0) -> FluidTimeline:
    """Full fluid trajectory after a huge service of unit fluid size at
    station k; tau = frozen_duration + interval 1 + interval 2. All times
    scale linearly in frozen_duration."""
    K = spec.n_stations
    if not 0 <= k < K:
        raise ValueError(f"station index {k} out of range")
    beta = first_visit_probabilities(spec)
    if beta[k] <= _TINY:
        raise ValueError(f"station {k} is unreachable; no fluid picture for it")
    if stability_margin(spec) <= 0:
        raise FluidInstability("network is unstable; fluid mass never drains")

    frozen = frozen_period_rates(spec, k)
    seg0 = Segment(0.0, frozen_duration, np.zeros(K), frozen.abar, frozen.dbar)
    info1 = interval1_free_set(spec, k)  # also surfaces the instability error early
    levels = np.maximum(seg0.slopes * frozen_duration, 0.0)

    segs = [seg0] + _piecewise_drain(spec, levels, frozen_duration, 2 * K + 2)
    t_drain_k = None
    for s in segs[2:]:
        if s.levels[k] <= _TINY:  # first subinterval that starts with k empty
            t_drain_k = s.t0 - frozen_duration
            break
    if t_drain_k is None:
        t_drain_k = segs[-1].t1 - frozen_duration
    tau = segs[-1].t1
    return FluidTimeline(
        station=k, tau=float(tau), t_frozen=frozen_duration,
        t_drain_k=float(t_drain_k),
        t_settle=float(tau - frozen_duration - t_drain_k),
        frozen_rate=frozen.level_at_end, free_set=info1.free_set,
        segments=tuple(segs),
    )


def solve_tau(spec: NetworkSpec, k: int) -> float:
    return drain_timeline(spec, k).tau


@dataclass(frozen=True)
class FluidCoefficients:
    """tau_k and u_k = 1/tau_k per station; unreachable stations carry nan
    and an explanation."""

    tau: np.ndarray
    u: np.ndarray
    skipped: dict[int, str] = field(default_factory=dict)


def all_coefficients(spec: NetworkSpec) -> FluidCoefficients:
    K = spec.n_stations
    beta = first_visit_probabilities(spec)
    tau = np.full(K, np.nan)
    skipped: dict[int, str] = {}
    for k in range(K):
        if beta[k] <= _TINY:
            skipped[k] = (
                f"unreachable (beta_{k} = 0): no service there can start a long period"
            )
            continue
        tau[k] = drain_timeline(spec, k).tau
    with np.errstate(invalid="ignore"):
        u = 1.0 / tau
    return FluidCoefficients(tau=tau, u=u, skipped=skipped)
