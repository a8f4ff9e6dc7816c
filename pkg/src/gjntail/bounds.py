"""Auxiliary models and pathwise busy-period bounds on a shared tape.

Everything here replays the same tape the real network consumes, so the
comparisons are exact per realization, not just in law:

* customer blocks / isolation totals: what each customer would consume on
  its own (tape.block_* views);
* saturated groups: batches of L consecutive customers served from an empty
  system with all arrivals collapsed to one instant, cursors running on;
* the group-level single-server queue fed by group makespans sigma_hat and
  group inter-arrival times t_hat, whose busy periods dominate the real one
  up to a factor K+1.

The main entry point cycle_bounds_audit() runs one real busy cycle and
evaluates every bound against it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import Engine
from .streams import raw_state
from .tape import Tape

_REL_TOL = 1e-9


def isolation_run(tape: Tape, n: int):
    """Customers 1..n traversing the network one at a time: per-customer
    total service content, per-station visit counts, per-station service
    sums. With nobody else in the system, each customer consumes exactly
    its own block of the tape."""
    totals = tape.customer_totals(n).copy()
    return totals, tape.block_counts(n).copy(), tape.block_sums(n).copy()


def coupled_perturbation(spec, seed: int, *, sigma_add=None, t_override=None,
                         n_customers: int | None = None):
    """Run the same randomness twice, once verbatim and once with the given
    edits, and return both results with departure schedules for comparison.

    With n_customers set, both runs serve exactly that many customers at
    their (possibly edited) tape arrival epochs and drain; otherwise both
    run one busy cycle from customer 1.
    """
    out = []
    for edits in ({}, {"sigma_add": sigma_add, "t_override": t_override}):
        tape = Tape(spec, seed, **{k: v for k, v in edits.items() if v})
        eng = Engine(tape)
        if n_customers is None:
            out.append(eng.cycle(record_departures=True))
        else:
            arr = tape.arrival_times(n_customers)
            out.append(eng.finite(arr, record_departures=True))
    return tuple(out)


def group_makespans(eng: Engine, L: int, n_groups: int) -> np.ndarray:
    """Saturated makespans of the next n_groups batches of L customers,
    consuming the tape from eng's cursor position (eng itself untouched)."""
    e = eng.fork()
    return np.array([e.finite(np.zeros(L)).makespan for _ in range(n_groups)])


def constrained_makespan(eng: Engine, L: int) -> float:
    """Time to finish the next L customers arriving at their true epochs,
    measured from the first of those arrivals."""
    e = eng.fork()
    n0 = e.next_customer
    arr = e.tape.arrival_times(n0 + L - 1)[n0 - 1:]
    return e.finite(arr).makespan


def station_block_window(tape: Tape, n0: int, L: int) -> np.ndarray:
    """Per-station totals of the service blocks of customers n0..n0+L-1."""
    return tape.block_sums(n0 + L - 1)[n0 - 1:].sum(axis=0)


def first_customer_floor(tape: Tape, n0: int) -> float:
    """A busy period lasts at least as long as its first customer's services
    at its busiest station."""
    return float(tape.block_sums(n0)[n0 - 1].max())


@dataclass(frozen=True)
class UbqResult:
    """Certificate from the group-level queue: B <= U and the cycle holds at
    most nu_bound customers."""

    U: float
    J: int
    n_hat: int       # groups consumed by the first J group-level busy periods
    nu_bound: int    # n_hat * L
    L: int
    B_hats: tuple[float, ...]


def ubq_upper(eng: Engine, L: int, *, max_group_customers: int = 10**7) -> UbqResult:
    """Upper-bound the busy cycle starting at eng's cursor.

    Groups of L consecutive customers are served saturated; sigma_hat_g is
    group g's makespan and t_hat_g the span of true arrival epochs it
    replaces. The Lindley recursion on (sigma_hat, t_hat) yields group-level
    busy periods. After each one (and once before the first), a
    full-information test asks whether the real system provably emptied
    inside the group window; the first success at group-level cycle count m
    gives J = m + 1 and U = (K+1) * (B_hat_1 + ... + B_hat_J).
    """
    tape = eng.tape
    K = tape.spec.n_stations
    n0 = eng.next_customer
    base = n0 - 1
    e = eng.fork()
    sig: list[float] = []    # sigma_hat_g at index g-1
    W: list[float] = [0.0]   # W_hat_g at index g-1, W_hat_1 = 0
    Nhat = [0]
    Bhat: list[float] = []

    def t_hat(g: int) -> float:
        return tape.T(base + L * g) - tape.T(base + L * (g - 1))

    def ensure_group(g: int) -> None:
        while len(sig) < g:
            if (len(sig) + 1) * L > max_group_customers:
                raise RuntimeError(
                    f"group-level queue consumed over {max_group_customers} customers "
                    "without certifying the cycle end; the network is too close to critical "
                    "for this group size"
                )
            sig.append(e.finite(np.zeros(L)).makespan)
            g_done = len(sig)
            W.append(max(0.0, W[g_done - 1] + sig[g_done - 1] - t_hat(g_done + 1)))

    def run_hat_cycle() -> None:
        g = Nhat[-1] + 1
        while True:
            ensure_group(g)
            if W[g - 1] + sig[g - 1] <= t_hat(g + 1):
                Nhat.append(g)
                Bhat.append(float(np.sum(sig[Nhat[-2]:g])))
                return
            g += 1

    def emptied_within(n: int) -> bool:
        """Did the real system provably empty inside group window n+1?

        For n = 0 the window is the first group itself: the cycle empties
        before the j-th arrival if the first j-1 customers' total work fits
        in the gap since the cycle start. For n >= 1 the residual work is
        dominated by W_hat_n + sigma_hat_n, then the same argument runs over
        the next L arrivals.
        """
        totals = tape.customer_totals(base + L * (n + 1))
        if n == 0:
            t_start = tape.T(n0)
            cum = totals[n0 - 1]
            # no float slop here: a false positive would invalidate the bound,
            # a false negative only runs one more group-level cycle
            for j in range(2, L + 1):
                if cum <= tape.T(n0 + j - 1) - t_start:
                    return True
                cum += totals[n0 + j - 2]
            return False
        w = W[n - 1] + sig[n - 1]
        t_anchor = tape.T(base + L * n)
        cum = 0.0
        for i in range(1, L + 1):
            if w + cum <= tape.T(base + L * n + i) - t_anchor:
                return True
            cum += totals[base + L * n + i - 1]
        return False

    m = 0
    while not emptied_within(Nhat[m]):
        run_hat_cycle()
        m += 1
    J = m + 1
    while len(Bhat) < J:
        run_hat_cycle()
    U = (K + 1) * float(np.sum(Bhat[:J]))
    return UbqResult(U=U, J=J, n_hat=Nhat[J], nu_bound=Nhat[J] * L, L=L,
                     B_hats=tuple(Bhat[:J]))


def cycle_bounds_audit(eng: Engine, L: int) -> dict:
    """Run the next real busy cycle and evaluate every pathwise bound on it.

    Returns the raw numbers plus per-bound booleans; eng advances past the
    cycle so audits can run back to back over a long tape.
    """
    tape = eng.tape
    K = tape.spec.n_stations
    pre = eng.fork()
    sample = eng.cycle()
    n0 = sample.start_customer

    ub = ubq_upper(pre, L)
    floor = first_customer_floor(tape, n0)
    x0_first = float(group_makespans(pre, L, 1)[0])
    x_con = constrained_makespan(pre, L)
    span = tape.T(n0 + L - 1) - tape.T(n0)
    s_k = station_block_window(tape, n0, L)
    s_tot = float(s_k.sum())
    s_max = float(s_k.max())

    tol = 1e-9 + _REL_TOL * max(1.0, sample.B, ub.U, s_tot)
    return {
        "B": sample.B,
        "nu": sample.nu,
        "U": ub.U,
        "J": ub.J,
        "nu_bound": ub.nu_bound,
        "floor": floor,
        "x0_first": x0_first,
        "x_constrained": x_con,
        "arrival_span": float(span),
        "station_sums": s_k,
        "upper_ok": sample.B <= ub.U + tol,
        "nu_ok": sample.nu <= ub.nu_bound,
        "floor_ok": floor <= sample.B + tol,
        "constrained_ok": x0_first <= x_con + tol
        and x_con <= span + x0_first + tol,
        "work_ok": s_tot / K <= s_max + tol
        and s_max <= x0_first + tol
        and x0_first <= s_tot + tol,
    }


def select_group_size(spec, seed: int, *, slack: float = 0.9, pilot_groups: int = 200,
                      max_log2: int = 20) -> int:
    """Smallest power-of-two group size whose pilot mean saturated makespan
    stays under slack * L * a, so group service stays subcritical for the
    group-level queue. Uses the compiled kernel for the pilots."""
    from ._kernel import kernel_args, sim_saturated

    ka = kernel_args(spec)
    a = spec.a
    L = 1
    for _ in range(max_log2 + 1):
        state = raw_state(seed, "group-pilot", L)
        x0 = sim_saturated(state, L, pilot_groups, ka["scodes"], ka["sp1"], ka["sp2"],
                           ka["p0cum"], ka["rcum"], 10**9)
        if np.isnan(x0).any():
            raise RuntimeError("saturated pilot run overflowed its event cap")
        if float(x0.mean()) < slack * L * a:
            return L
        L *= 2
    raise RuntimeError(
        f"no group size up to 2^{max_log2} gives mean saturated makespan below "
        f"{slack} * L * a; the network is too close to critical for the group-level bound"
    )
