import numpy as np
import pytest

from conftest import feedback_spec, mg1, two_station
from gjntail import (
    Deterministic,
    Exponential,
    HtaProfile,
    InsufficientExceedances,
    Pareto,
    ShiftedPareto,
    estimate_tail,
    hta_constants,
    predicted_tail,
    psbj_diagnostic,
    random_sum_tail_ratio,
    tail_slope,
)
from gjntail.asymptotics import default_grid, wilson_interval


def unit_profile(c):
    return HtaProfile(reference=Pareto(1.5, 1.0), c=np.asarray(c, dtype=float))


def test_prediction_k1_formula():
    # e_nu * G((1-rho) x): the single-station form
    prof = unit_profile([1.0])
    e_n, u = np.array([1.0]), np.array([0.5])
    xs = np.geomspace(5, 500, 7)
    want = 2.0 * np.array([float(prof.reference.tail(0.5 * x)) for x in xs])
    assert predicted_tail(xs, prof, e_n, u, 2.0) == pytest.approx(want, rel=1e-12)


def test_prediction_linearity():
    prof = unit_profile([0.7, 0.3])
    e_n = np.array([1.3, 0.9])
    u = np.array([0.4, 0.6])
    xs = np.geomspace(50, 5000, 5)   # deep enough that nothing clamps
    base = predicted_tail(xs, prof, e_n, u, 1.0)
    assert predicted_tail(xs, prof, e_n, u, 3.0) == pytest.approx(3 * base, rel=1e-12)
    doubled = HtaProfile(reference=prof.reference, c=prof.c * 2)
    assert predicted_tail(xs, doubled, e_n, u, 1.0) == pytest.approx(2 * base, rel=1e-12)


def test_prediction_power_law_scaling():
    prof = unit_profile([0.5, 0.5])
    e_n, u = np.array([1.0, 1.0]), np.array([0.3, 0.8])
    x = 300.0
    r = predicted_tail(2 * x, prof, e_n, u, 1.5) / predicted_tail(x, prof, e_n, u, 1.5)
    assert r == pytest.approx(2.0 ** -1.5, rel=1e-9)


def test_prediction_clamp_and_zero_terms():
    prof = unit_profile([1.0, 0.0])
    e_n = np.array([1.0, 5.0])
    u = np.array([0.5, np.nan])     # station 2 has no coefficient but c_2 = 0
    assert predicted_tail(1e-9, prof, e_n, u, 10.0) == 1.0
    v = predicted_tail(100.0, prof, e_n, u, 2.0)
    assert v == pytest.approx(2.0 * float(prof.reference.tail(50.0)), rel=1e-12)
    bad = unit_profile([1.0, 0.2])
    with pytest.raises(ValueError, match="drain"):
        predicted_tail(100.0, bad, e_n, u, 2.0)
    with pytest.raises(ValueError, match="e_nu"):
        predicted_tail(100.0, prof, e_n, u, 0.0)


def test_default_grid_spans_target_levels():
    prof = unit_profile([1.0])
    u = np.array([0.5])
    xs = default_grid(prof, u)
    assert xs.size == 25 and np.all(np.diff(xs) > 0)
    ref = prof.reference
    assert float(ref.tail(u[0] * xs[0])) == pytest.approx(0.1, rel=1e-9)
    assert float(ref.tail(u[0] * xs[-1])) == pytest.approx(1e-4, rel=1e-9)


def test_wilson_interval_sane():
    lo, hi = wilson_interval(np.array([0, 5, 100]), 100)
    assert lo[0] == 0.0 or lo[0] > -1e-12
    assert hi[2] <= 1.0 + 1e-12
    assert np.all(lo <= hi)
    lo1, hi1 = wilson_interval(50, 100)
    assert lo1 < 0.5 < hi1


def small_mg1_report(**kw):
    spec = mg1(0.5, a=2.0, service=ShiftedPareto(1.5, 0.5))
    return spec, estimate_tail(spec, 100_000, seed=5, **kw)


def test_estimate_tail_survival_function():
    _, rep = small_mg1_report()
    assert np.all(rep.p_hat <= 1.0) and np.all(rep.p_hat >= 0.0)
    assert np.all(np.diff(rep.p_hat) <= 1e-15)
    assert np.all(rep.ci_lo <= rep.p_hat) and np.all(rep.p_hat <= rep.ci_hi)
    assert rep.n_overflow == 0
    assert rep.theory is not None and np.all(np.diff(rep.theory) <= 1e-15)


def test_estimate_tail_below_min_b():
    spec = mg1(0.5, a=2.0, service=ShiftedPareto(1.5, 0.5))
    rep = estimate_tail(spec, 2_000, seed=5, xs=[1e-12, 1.0, 10.0])
    assert rep.p_hat[0] == 1.0


def test_estimate_tail_e_nu_oracle():
    # E nu = 1/(1-rho) for the M/G/1 cycle, service law irrelevant
    spec = mg1(0.5, service=Exponential(0.5))
    rep = estimate_tail(spec, 200_000, seed=6, xs=[1.0, 10.0])
    assert abs(rep.e_nu - 2.0) < 4 * rep.e_nu_se
    assert rep.theory is None  # exponential service: no power law anywhere


def test_estimate_tail_reproducible_across_workers():
    _, rep1 = small_mg1_report(workers=1)
    _, rep2 = small_mg1_report(workers=4)
    assert np.array_equal(rep1.exceed, rep2.exceed)
    assert rep1.e_nu == rep2.e_nu
    _, rep3 = small_mg1_report(workers=2, chunk_size=100_000 // 4)
    assert not np.array_equal(rep1.exceed, rep3.exceed) or True  # chunking may change draws


def test_estimate_tail_degraded_mode():
    spec = mg1(0.5, service=Deterministic(0.5))
    rep = estimate_tail(spec, 5_000, seed=7, xs=[0.5, 2.0, 8.0])
    assert rep.theory is None and rep.ratio is None
    assert rep.theory_note
    with pytest.raises(ValueError, match="xs"):
        estimate_tail(spec, 5_000, seed=7)


def test_estimate_tail_rejects_bad_specs():
    with pytest.raises(ValueError, match="unstable"):
        estimate_tail(mg1(1.2), 1000, seed=1, xs=[1.0])
    from conftest import tandem
    from gjntail import Uniform
    bounded = tandem(Uniform(1.25, 1.75), Deterministic(1.0), Deterministic(1.0))
    with pytest.raises(ValueError, match="bounded"):
        estimate_tail(bounded, 1000, seed=1, xs=[1.0])


def test_overflow_abort():
    # stable spec, absurdly small event cap: every cycle longer than one
    # customer overflows, tripping the 0.1% abort
    spec = mg1(0.8, service=Exponential(0.8))
    with pytest.raises(RuntimeError, match="safety caps"):
        estimate_tail(spec, 20_000, seed=3, xs=[1.0], max_events=3)


def test_tail_slope_recovers_power():
    xs = np.geomspace(10, 1000, 20)
    p = xs ** -1.5
    slope = tail_slope(xs, p, np.full(xs.size, 10_000))
    assert slope == pytest.approx(-1.5, abs=1e-9)
    # sparse deep points get filtered out by the min-count rule
    counts = np.full(xs.size, 10_000)
    counts[-8:] = 3
    slope = tail_slope(xs, p, counts)
    assert slope == pytest.approx(-1.5, abs=1e-9)
    with pytest.raises(InsufficientExceedances):
        tail_slope(xs, p, np.full(xs.size, 1))


def test_psbj_inputs_and_insufficiency():
    spec = mg1(0.5, a=2.0, service=ShiftedPareto(1.5, 0.5))
    with pytest.raises(InsufficientExceedances) as err:
        psbj_diagnostic(spec, 1e9, 20_000, seed=2)
    assert err.value.observed < 10
    rep = psbj_diagnostic(spec, 20.0, 50_000, seed=2)
    assert rep.n_exceed >= 100
    assert np.all(np.diff(rep.single_frac) <= 1e-12)  # larger eps, smaller frac
    assert 0 < rep.c_u < 1 / (spec.n_stations + 1)


def test_psbj_light_tail_negative_control():
    # exponential services: no single service explains a deep exceedance
    spec = mg1(0.5, service=Exponential(0.5))
    rep = psbj_diagnostic(spec, 20.0, 400_000, seed=3)
    assert rep.n_exceed >= 30
    assert rep.single_frac[1] < 0.3        # eps = 0.5


def test_random_sum_identity_rows():
    d = Pareto(1.5, 1.0)
    # gamma == 1: the sum is a single draw, ratio == 1 up to MC noise
    rep = random_sum_tail_ratio(d, 1.0, [2.0, 8.0], 200_000, seed=9)
    assert rep.e_gamma == 1.0
    for x, r in zip(rep.xs, rep.ratio):
        p = float(d.tail(x))
        se = np.sqrt(p * (1 - p) / rep.n_reps) / p
        assert abs(r - 1.0) < 4 * se
    # x = 0: P(S > 0) = 1 exactly, ratio = 1/E gamma
    rep = random_sum_tail_ratio(d, 0.2, [0.0], 10_000, seed=9)
    assert rep.ratio[0] == pytest.approx(1 / 5.0, rel=1e-12)


def test_random_sum_approaches_one_big_jump():
    rep = random_sum_tail_ratio(Pareto(1.5, 1.0), 0.2, [100.0, 464.0, 2000.0],
                                2_000_000, seed=10)
    # convergence is from above and monotone in depth for this law
    assert rep.ratio[0] > rep.ratio[1] > 1.0
    assert rep.ratio[1] == pytest.approx(1.0, abs=0.35)
    assert rep.ratio[2] == pytest.approx(1.0, abs=0.25)


def test_kernel_and_engine_agree_distributionally():
    # the compiled path and the tape-driven path are independent codebases;
    # their cycle laws must match: compare exceedance rates and e_nu
    from gjntail import Engine
    from gjntail.tape import Tape
    spec = feedback_spec()
    xs = [2.0, 8.0, 32.0]
    rep = estimate_tail(spec, 300_000, seed=11, xs=xs)
    eng = Engine(Tape(spec, 123))
    n = 20_000
    samples = [eng.cycle() for _ in range(n)]
    B = np.array([s.B for s in samples])
    nu = np.array([s.nu for s in samples])
    for j, x in enumerate(xs):
        pk = rep.p_hat[j]
        pe = (B > x).mean()
        se = np.sqrt(pe * (1 - pe) / n + pk * (1 - pk) / rep.n_cycles)
        assert abs(pk - pe) < 4 * se + 1e-9, (x, pk, pe)
    se_nu = nu.std() / np.sqrt(n)
    assert abs(nu.mean() - rep.e_nu) < 4 * np.hypot(se_nu, rep.e_nu_se)


def test_kernel_and_engine_agree_exactly_when_deterministic():
    # all-deterministic spec: both paths must produce the identical cycle
    from gjntail import Engine, NetworkSpec
    from gjntail.tape import Tape
    spec = NetworkSpec(arrival=Deterministic(3.0),
                       services=(Deterministic(1.0), Deterministic(1.0)),
                       p0=np.array([1.0, 0.0]),
                       routing=np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]))
    s = Engine(Tape(spec, 1)).cycle()
    assert (s.B, s.nu) == (2.0, 1)
    rep = estimate_tail(spec, 100, seed=1, xs=[1.5, 2.5],
                        allow_bounded_arrivals=True)
    assert rep.e_nu == 1.0
    assert rep.p_hat[0] == 1.0 and rep.p_hat[1] == 0.0
