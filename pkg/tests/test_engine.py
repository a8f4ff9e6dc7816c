import numpy as np
import pytest

from conftest import mg1, random_stable_spec, tandem
from gjntail import CycleOverflow, Deterministic, Engine, Exponential, ShiftedPareto
from gjntail.tape import Tape


def run_cycles(spec, seed, n):
    eng = Engine(Tape(spec, seed))
    return eng, [eng.cycle() for _ in range(n)]


def test_single_customer_cycle_is_block_total():
    # arrivals far apart: almost every cycle is one customer traversing alone
    spec = mg1(0.5, a=50.0, service=Exponential(0.5))
    eng, samples = run_cycles(spec, 1, 200)
    tape = eng.tape
    for s in samples:
        if s.nu == 1:
            assert s.B == pytest.approx(
                float(tape.customer_totals(s.start_customer)[s.start_customer - 1]),
                rel=1e-12)
    assert sum(s.nu == 1 for s in samples) > 150


def test_cycle_counts_match_blocks():
    # services consumed in a cycle = block totals of the customers it served
    spec = random_stable_spec(np.random.default_rng(2), K=3)
    eng, samples = run_cycles(spec, 21, 300)
    tape = eng.tape
    for s in samples:
        rows = tape.block_counts(s.start_customer + s.nu - 1)[s.start_customer - 1:]
        assert np.array_equal(s.counts, rows.sum(axis=0))


def test_cycle_bookkeeping_chains():
    spec = mg1(0.7)
    eng, samples = run_cycles(spec, 31, 100)
    tape = eng.tape
    cust = 1
    for s in samples:
        assert s.start_customer == cust
        assert s.start_time == pytest.approx(tape.T(cust), rel=1e-15)
        assert s.B == pytest.approx(s.end_time - s.start_time, rel=1e-12)
        assert s.B > 0 and s.nu >= 1
        cust += s.nu


def test_mg1_means():
    # E B = b/(1-rho), E nu = 1/(1-rho): classical busy-period identities
    rho, n = 0.5, 40_000
    spec = mg1(rho, service=Exponential(rho))
    _, samples = run_cycles(spec, 77, n)
    B = np.array([s.B for s in samples])
    nu = np.array([s.nu for s in samples])
    for emp, true in ((B, rho / (1 - rho)), (nu, 1 / (1 - rho))):
        se = emp.std() / np.sqrt(n)
        assert abs(emp.mean() - true) < 4 * se, (emp.mean(), true)


def test_cycles_look_independent():
    # regeneration: lag-1 autocorrelation of (B_i) compatible with 0
    spec = mg1(0.6, service=Exponential(0.6))
    _, samples = run_cycles(spec, 13, 4000)
    B = np.array([s.B for s in samples])
    r = np.corrcoef(B[:-1], B[1:])[0, 1]
    assert abs(r) < 4 / np.sqrt(B.size)


def test_departures_recorded():
    spec = random_stable_spec(np.random.default_rng(4), K=2)
    eng = Engine(Tape(spec, 8))
    s = eng.cycle(record_departures=True)
    per_station = [len(d) for d in s.departures]
    assert np.array_equal(per_station, s.counts)
    exits = sum(1 for d in s.departures for (_, dest) in d if dest == spec.n_stations)
    assert exits == s.nu
    all_times = [t for d in s.departures for (t, _) in d]
    assert max(all_times) == pytest.approx(s.end_time, rel=1e-15)
    assert min(all_times) >= s.start_time


def test_bit_identical_reruns():
    spec = random_stable_spec(np.random.default_rng(6), K=2)
    _, s1 = run_cycles(spec, 99, 50)
    _, s2 = run_cycles(spec, 99, 50)
    assert [(s.B, s.nu) for s in s1] == [(s.B, s.nu) for s in s2]


def test_finite_mode_basics():
    spec = random_stable_spec(np.random.default_rng(8), K=3)
    tape = Tape(spec, 12)
    eng = Engine(tape)
    L = 20
    arr = tape.arrival_times(L)
    res = eng.fork().finite(arr)
    assert res.empty_time >= arr[-1]
    assert res.counts.sum() == tape.block_counts(L).sum()
    # saturated run of the same customers: at least as fast, and bounded by
    # the total work; with real arrivals only the span-shifted bound holds
    sat = eng.fork().finite(np.zeros(L))
    s_tot = float(tape.block_sums(L).sum())
    assert sat.makespan <= s_tot + 1e-9
    assert sat.makespan <= res.makespan + 1e-9
    assert res.makespan <= (arr[-1] - arr[0]) + sat.makespan + 1e-9


def test_finite_advances_cursor_like_cycle_stream():
    spec = mg1(0.5)
    tape = Tape(spec, 3)
    eng = Engine(tape)
    eng.finite(np.zeros(5))
    assert eng.next_customer == 6
    assert eng.started[0] == tape.block_counts(5).sum()


def test_overflow_on_unstable_spec():
    spec = mg1(1.3)
    eng = Engine(Tape(spec, 5))
    with pytest.raises(CycleOverflow) as err:
        eng.cycle(max_events=2000)
    assert err.value.n_events >= 2000
    assert err.value.arrived > 0


def test_max_time_overflow():
    spec = mg1(1.3)
    eng = Engine(Tape(spec, 5))
    with pytest.raises(CycleOverflow) as err:
        eng.cycle(max_time=50.0)
    assert err.value.time >= 50.0


def witness_cycle_B(t2: float) -> float:
    spec = tandem(Exponential(1.5), Deterministic(1.0), Deterministic(1.0))
    tape = Tape(spec, 1, t_override={1: 1.0, 2: t2, 3: 100.0})
    return Engine(tape).cycle().B


def test_arrival_time_nonmonotonicity_witness():
    # moving one arrival later can either stretch or cut the busy period
    assert witness_cycle_B(0.5) == pytest.approx(3.0, abs=1e-12)
    assert witness_cycle_B(1.9) == pytest.approx(3.9, abs=1e-12)
    assert witness_cycle_B(2.1) == pytest.approx(2.0, abs=1e-12)


def test_bounded_arrivals_never_empty():
    # unit deterministic tandem services, arrivals at most 1.75 apart: each
    # customer spends >= 2 units in system, so occupancy never hits 0 again
    from gjntail import Uniform
    spec = tandem(Uniform(1.25, 1.75), Deterministic(1.0), Deterministic(1.0))
    eng = Engine(Tape(spec, 17))
    with pytest.raises(CycleOverflow) as err:
        eng.cycle(max_time=2000.0)
    assert err.value.time >= 2000.0
    assert err.value.arrived >= 2000.0 / 1.75
