"""Sample-path guarantee suites.

Three families of pathwise facts make the bounds machinery trustworthy,
and all three are cheap to check by brute force on coupled runs:

  * inflating any single service duration can only push departures later
    and can only lengthen the busy cycle (in time and in customers);
  * the per-station service counts needed to fully serve a fixed customer
    set do not depend on arrival timing at all;
  * every certified bound (group-level upper bound, customer-count bound,
    first-customer floor, saturated/constrained sandwiches) holds on the
    realised cycle.

Arrival-time edits, by contrast, move busy-period length both ways; that
counterexample lives in the test suite, not here, because it needs a
hand-picked network.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bounds import coupled_perturbation, cycle_bounds_audit, select_group_size
from .engine import Engine
from .network import NetworkSpec, validate
from .streams import substream
from .tape import Tape

_TOL = 1e-9


@dataclass(frozen=True)
class SuiteResult:
    name: str
    n_trials: int
    n_pass: int
    failures: tuple[str, ...]   # first few failure descriptions

    @property
    def ok(self) -> bool:
        return self.n_pass == self.n_trials

    def line(self) -> str:
        word = "pass" if self.ok else "FAIL"
        return f"{self.name}: {word} {self.n_pass}/{self.n_trials}"


def _suite(name, n_trials, fails):
    return SuiteResult(name=name, n_trials=n_trials, n_pass=n_trials - len(fails),
                       failures=tuple(f"trial {i}: {msg}" for i, msg in fails[:5]))


def _departures_later(base, edited, tol):
    for k, (db, de) in enumerate(zip(base.departures, edited.departures)):
        if len(db) != len(de):
            return f"station {k} departure count changed {len(db)} -> {len(de)}"
        for (tb, _), (te, _) in zip(db, de):
            if te < tb - tol:
                return f"station {k} departure moved earlier: {tb} -> {te}"
    return None


def check_service_monotonicity(spec: NetworkSpec, seed: int, n_trials: int = 100,
                               *, n_customers: int = 25):
    """Inflate one service duration, replay the same randomness, and demand
    (a) no departure among a fixed customer set gets earlier and (b) the
    busy cycle does not shrink in length or customer count."""
    dep_fails, cycle_fails = [], []
    for i in range(n_trials):
        rng = substream(seed, "edits", i)
        k = int(rng.integers(spec.n_stations))
        j = 1 + int(rng.integers(8))
        add = {(k, j): float(rng.exponential(spec.b[k] + 1.0))}

        base, edited = coupled_perturbation(spec, seed + i, sigma_add=add,
                                            n_customers=n_customers)
        tol = _TOL * max(1.0, base.makespan)
        msg = _departures_later(base, edited, tol)
        if msg is not None:
            dep_fails.append((i, msg))

        base, edited = coupled_perturbation(spec, seed + i, sigma_add=add)
        tol = _TOL * max(1.0, base.B)
        if edited.B < base.B - tol:
            cycle_fails.append((i, f"B shrank {base.B} -> {edited.B}"))
        elif edited.nu < base.nu:
            cycle_fails.append((i, f"nu shrank {base.nu} -> {edited.nu}"))
    return (_suite("departure monotonicity under service inflation", n_trials, dep_fails),
            _suite("cycle monotonicity under service inflation", n_trials, cycle_fails))


def check_timing_invariance(spec: NetworkSpec, seed: int, n_trials: int = 100,
                            *, n_customers: int = 30) -> SuiteResult:
    """Rewrite a random batch of inter-arrival times and demand the engine
    consume exactly the same per-station service counts for the same
    customer set, matching the tape's block totals."""
    fails = []
    for i in range(n_trials):
        rng = substream(seed, "timing", i)
        picks = rng.choice(np.arange(1, n_customers + 1),
                           size=1 + int(rng.integers(n_customers)), replace=False)
        ov = {int(m): float(rng.exponential(spec.a) + 1e-6) for m in picks}
        base, edited = coupled_perturbation(spec, seed + i, t_override=ov,
                                            n_customers=n_customers)
        blocks = Tape(spec, seed + i).block_counts(n_customers).sum(axis=0)
        if not np.array_equal(base.counts, edited.counts):
            fails.append((i, f"counts changed {base.counts} -> {edited.counts}"))
        elif not np.array_equal(base.counts, blocks):
            fails.append((i, f"engine counts {base.counts} != block totals {blocks}"))
    return _suite("service counts invariant to arrival timing", n_trials, fails)


def check_cycle_bounds(spec: NetworkSpec, seed: int, n_cycles: int = 100,
                       *, L: int | None = None) -> SuiteResult:
    """Audit every pathwise bound on n_cycles consecutive real busy cycles."""
    if L is None:
        L = select_group_size(spec, seed)
    eng = Engine(Tape(spec, seed))
    fails = []
    checks = ("upper_ok", "nu_ok", "floor_ok", "constrained_ok", "work_ok")
    for i in range(n_cycles):
        audit = cycle_bounds_audit(eng, L)
        bad = [c for c in checks if not audit[c]]
        if bad:
            fails.append((i, f"violated {bad}; B={audit['B']}, U={audit['U']}"))
    return _suite("pathwise cycle bounds", n_cycles, fails)


@dataclass(frozen=True)
class VerifyReport:
    suites: tuple[SuiteResult, ...]

    @property
    def ok(self) -> bool:
        return all(s.ok for s in self.suites)

    def lines(self) -> list[str]:
        out = [s.line() for s in self.suites]
        for s in self.suites:
            out.extend(f"  {f}" for f in s.failures)
        return out


def run_all(spec: NetworkSpec, seed: int, *, n_perturb: int = 100,
            n_bound_cycles: int = 100, L: int | None = None) -> VerifyReport:
    report = validate(spec)
    if not report.ok:
        raise ValueError("; ".join(report.problems))
    mp1, mp2 = check_service_monotonicity(spec, seed, n_perturb)
    ip = check_timing_invariance(spec, seed, n_perturb)
    bounds = check_cycle_bounds(spec, seed, n_bound_cycles, L=L)
    return VerifyReport(suites=(mp1, mp2, ip, bounds))
