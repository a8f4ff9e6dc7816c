"""Event-driven simulation of the network on a fixed tape.

The engine never tracks customer identity. FIFO single servers consume each
station's service and routing sequences strictly in start order, so queue
lengths, start counts and the next-arrival pointer are the whole state. Two
run modes share the loop:

* cycle(): run one busy cycle, from an arrival into an empty system until
  the system empties again with no arrival strictly earlier (an arrival
  landing exactly at the emptying instant starts a new cycle).
* finite(): serve an explicit list of arrival epochs to exhaustion; with all
  epochs equal this is the group-saturation model, with the true first L
  arrival epochs it is the L-customer-constrained one.

Ties are resolved departures before arrivals, then by station index. An
Engine owns the tape cursors (next customer, per-station start counts), so
consecutive calls consume consecutive stretches of the tape; fork() copies
the cursors for side computations on the same stretch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tape import Tape

MAX_EVENTS = 10_000_000
MAX_TIME = 1e8


class CycleOverflow(RuntimeError):
    """A run exceeded its event or time cap. Carries partial progress so
    callers can report how far it got."""

    def __init__(self, msg: str, *, n_events: int, time: float, arrived: int):
        super().__init__(msg)
        self.n_events = n_events
        self.time = time
        self.arrived = arrived


@dataclass(frozen=True)
class BusyCycleSample:
    B: float
    nu: int
    start_customer: int
    start_time: float
    end_time: float
    counts: np.ndarray
    max_jump: float
    max_jump_station: int
    second_jump: float
    n_events: int
    departures: tuple | None = None  # per station: ((time, dest), ...)
    trace: list | None = None


@dataclass(frozen=True)
class FiniteResult:
    empty_time: float
    makespan: float
    counts: np.ndarray
    max_jump: float
    max_jump_station: int
    second_jump: float
    n_events: int
    departures: tuple | None = None
    trace: list | None = None


class Engine:
    def __init__(self, tape: Tape):
        self.tape = tape
        self.next_customer = 1
        self.started = np.zeros(tape.spec.n_stations, dtype=np.int64)

    def fork(self) -> "Engine":
        """Engine on the same tape with an independent copy of the cursors."""
        other = Engine(self.tape)
        other.next_customer = self.next_customer
        other.started = self.started.copy()
        return other

    def _start_service(self, k: int, now: float, comp, jumps, trace):
        self.started[k] += 1
        i = int(self.started[k])
        s = self.tape.sigma(k, i)
        comp[k] = now + s
        if s > jumps[0]:
            jumps[1] = jumps[0]
            jumps[0] = s
            jumps[2] = k
        elif s > jumps[1]:
            jumps[1] = s
        if trace is not None:
            trace.append(("start", now, k, i))

    def cycle(self, *, max_events: int = MAX_EVENTS, max_time: float = MAX_TIME,
              record_trace: bool = False, record_departures: bool = False) -> BusyCycleSample:
        """Run one busy cycle and advance the cursors past it."""
        tape, K = self.tape, self.tape.spec.n_stations
        n0 = self.next_customer
        t0 = tape.T(n0)
        q = np.zeros(K, dtype=np.int64)
        comp = np.full(K, np.inf)
        counts = np.zeros(K, dtype=np.int64)
        jumps = [0.0, 0.0, -1]  # max, runner-up, argmax station
        trace = [] if record_trace else None
        deps = [[] for _ in range(K)] if record_departures else None
        occupancy = 0
        arrived = 0
        next_arr_n, next_arr_t = n0, t0
        n_events = 0
        while True:
            k = int(comp.argmin())
            tdep = comp[k]
            n_events += 1
            if n_events > max_events or min(tdep, next_arr_t) - t0 > max_time:
                raise CycleOverflow(
                    f"busy cycle starting at customer {n0} exceeded "
                    f"{max_events} events / {max_time:g} time units",
                    n_events=n_events, time=float(min(tdep, next_arr_t) - t0),
                    arrived=arrived,
                )
            if tdep <= next_arr_t:
                dest = tape.alpha(k, int(self.started[k]))
                q[k] -= 1
                occupancy -= 1
                counts[k] += 1
                if trace is not None:
                    trace.append(("depart", tdep, k, dest))
                if deps is not None:
                    deps[k].append((tdep, dest))
                comp[k] = np.inf
                if q[k] > 0:
                    self._start_service(k, tdep, comp, jumps, trace)
                if dest < K:
                    q[dest] += 1
                    occupancy += 1
                    if q[dest] == 1:
                        self._start_service(dest, tdep, comp, jumps, trace)
                elif occupancy == 0:
                    self.next_customer = n0 + arrived
                    return BusyCycleSample(
                        B=tdep - t0, nu=arrived, start_customer=n0, start_time=t0,
                        end_time=tdep, counts=counts, max_jump=jumps[0],
                        max_jump_station=int(jumps[2]), second_jump=jumps[1],
                        n_events=n_events,
                        departures=None if deps is None else tuple(tuple(d) for d in deps),
                        trace=trace,
                    )
            else:
                k = tape.entry(next_arr_n)
                q[k] += 1
                occupancy += 1
                arrived += 1
                if trace is not None:
                    trace.append(("arrive", next_arr_t, k, next_arr_n))
                if q[k] == 1:
                    self._start_service(k, next_arr_t, comp, jumps, trace)
                next_arr_n += 1
                next_arr_t = tape.T(next_arr_n)

    def finite(self, arrival_times, *, max_events: int = MAX_EVENTS,
               record_trace: bool = False, record_departures: bool = False) -> FiniteResult:
        """Serve customers next_customer, next_customer+1, ... at the given
        epochs (nondecreasing), then run the system empty."""
        tape, K = self.tape, self.tape.spec.n_stations
        arr = np.asarray(arrival_times, dtype=float)
        m = arr.size
        if m == 0:
            raise ValueError("finite run needs at least one customer")
        if (np.diff(arr) < 0).any():
            raise ValueError("arrival epochs must be nondecreasing")
        n0 = self.next_customer
        q = np.zeros(K, dtype=np.int64)
        comp = np.full(K, np.inf)
        counts = np.zeros(K, dtype=np.int64)
        jumps = [0.0, 0.0, -1]
        trace = [] if record_trace else None
        deps = [[] for _ in range(K)] if record_departures else None
        occupancy = 0
        idx = 0
        last = arr[0]
        n_events = 0
        while occupancy > 0 or idx < m:
            k = int(comp.argmin())
            tdep = comp[k]
            next_arr_t = arr[idx] if idx < m else np.inf
            n_events += 1
            if n_events > max_events:
                raise CycleOverflow(
                    f"finite run of {m} customers exceeded {max_events} events",
                    n_events=n_events, time=float(last - arr[0]), arrived=idx,
                )
            if tdep <= next_arr_t:
                dest = tape.alpha(k, int(self.started[k]))
                q[k] -= 1
                occupancy -= 1
                counts[k] += 1
                last = tdep
                if trace is not None:
                    trace.append(("depart", tdep, k, dest))
                if deps is not None:
                    deps[k].append((tdep, dest))
                comp[k] = np.inf
                if q[k] > 0:
                    self._start_service(k, tdep, comp, jumps, trace)
                if dest < K:
                    q[dest] += 1
                    occupancy += 1
                    if q[dest] == 1:
                        self._start_service(dest, tdep, comp, jumps, trace)
            else:
                k = tape.entry(n0 + idx)
                q[k] += 1
                occupancy += 1
                if trace is not None:
                    trace.append(("arrive", next_arr_t, k, n0 + idx))
                if q[k] == 1:
                    self._start_service(k, next_arr_t, comp, jumps, trace)
                idx += 1
        self.next_customer = n0 + m
        return FiniteResult(
            empty_time=float(last), makespan=float(last - arr[0]), counts=counts,
            max_jump=jumps[0], max_jump_station=int(jumps[2]), second_jump=jumps[1],
            n_events=n_events,
            departures=None if deps is None else tuple(tuple(d) for d in deps),
            trace=trace,
        )
