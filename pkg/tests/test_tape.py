import numpy as np
import pytest

from conftest import mg1, random_stable_spec, two_station
from gjntail import Exponential, NetworkSpec
from gjntail.tape import Tape


def manual_blocks(spec, seed, n):
    """Reconstruct customer service blocks from the primitive streams only:
    walk each customer through the chain in arrival order, consuming each
    station's service/routing streams sequentially."""
    tape = Tape(spec, seed)
    K = spec.n_stations
    cursors = [0] * K
    counts = np.zeros((n, K), dtype=np.int64)
    sums = np.zeros((n, K))
    for cust in range(1, n + 1):
        k = tape.entry(cust)
        while k != K:
            cursors[k] += 1
            i = cursors[k]
            counts[cust - 1, k] += 1
            sums[cust - 1, k] += tape.sigma(k, i)
            k = tape.alpha(k, i)
    return counts, sums


def test_blocks_match_manual_walk():
    spec = random_stable_spec(np.random.default_rng(1), K=3)
    tape = Tape(spec, 77)
    counts, sums = manual_blocks(spec, 77, 200)
    assert np.array_equal(tape.block_counts(200), counts)
    assert np.allclose(tape.block_sums(200), sums, rtol=0, atol=0)
    assert np.allclose(tape.customer_totals(200), sums.sum(axis=1))


def test_prefix_stability():
    spec = two_station(1.0, 0.3, 0.2, 0.6, 0.4, 0.5)
    tape = Tape(spec, 5)
    first = tape.block_sums(10).copy()
    t10 = tape.inter_arrivals(10).copy()
    tape.block_sums(500)
    tape.inter_arrivals(2000)
    assert np.array_equal(tape.block_sums(500)[:10], first)
    assert np.array_equal(tape.inter_arrivals(2000)[:10], t10)
    # growth order does not matter either
    other = Tape(spec, 5)
    other.block_sums(500)
    assert np.array_equal(other.block_sums(500), tape.block_sums(500))


def test_determinism_and_seed_separation():
    spec = mg1(0.5)
    a = Tape(spec, 3)
    b = Tape(spec, 3)
    c = Tape(spec, 4)
    assert np.array_equal(a.inter_arrivals(100), b.inter_arrivals(100))
    assert np.array_equal(a.block_sums(50), b.block_sums(50))
    assert not np.array_equal(a.inter_arrivals(100), c.inter_arrivals(100))


def test_arrival_times_cumsum():
    spec = mg1(0.5)
    tape = Tape(spec, 8)
    t = tape.inter_arrivals(40)
    assert np.allclose(tape.arrival_times(40), np.cumsum(t))
    assert tape.T(0) == 0.0
    assert tape.T(7) == pytest.approx(np.cumsum(t)[6], rel=1e-15)


def test_entry_frequencies():
    spec = two_station(1.0, 0.3, 0.2, 0.7, 0.4, 0.5)
    tape = Tape(spec, 2)
    hits = np.bincount([tape.entry(n) for n in range(1, 100_001)], minlength=2)
    n = 100_000
    for k in (0, 1):
        se = np.sqrt(spec.p0[k] * (1 - spec.p0[k]) / n)
        assert abs(hits[k] / n - spec.p0[k]) < 4 * se


def test_sigma_add_edits():
    spec = two_station(1.0, 0.3, 0.2, 0.6, 0.4, 0.5)
    plain = Tape(spec, 9)
    edited = Tape(spec, 9, sigma_add={(0, 3): 2.5})
    assert edited.sigma(0, 3) == pytest.approx(plain.sigma(0, 3) + 2.5, rel=1e-15)
    assert edited.sigma(0, 2) == plain.sigma(0, 2)
    assert edited.sigma(1, 3) == plain.sigma(1, 3)
    # the edit flows into whichever customer block consumes (0, 3)
    diff = edited.block_sums(50) - plain.block_sums(50)
    assert diff[:, 1] == pytest.approx(0.0, abs=0.0)
    assert diff[:, 0].sum() == pytest.approx(2.5, rel=1e-12)
    assert np.count_nonzero(np.abs(diff[:, 0]) > 1e-15) == 1
    assert np.array_equal(edited.block_counts(50), plain.block_counts(50))

    with pytest.raises(ValueError, match="non-positive"):
        Tape(spec, 9, sigma_add={(0, 3): -100.0}).sigma(0, 3)


def test_t_override_edits():
    spec = mg1(0.5)
    plain = Tape(spec, 4)
    edited = Tape(spec, 4, t_override={2: 9.0})
    assert edited.t(2) == 9.0
    assert edited.t(1) == plain.t(1)
    ia = edited.inter_arrivals(5)
    assert ia[1] == 9.0
    assert np.allclose(edited.arrival_times(5), np.cumsum(ia))
    # service-side randomness untouched
    assert np.array_equal(edited.block_sums(20), plain.block_sums(20))
    with pytest.raises(ValueError):
        Tape(spec, 4, t_override={0: 1.0})
    with pytest.raises(ValueError):
        Tape(spec, 4, t_override={2: 0.0})


def test_self_loop_block_counts_geometric():
    q = 0.4
    spec = NetworkSpec(arrival=Exponential(2.0), services=(Exponential(0.5),),
                       p0=np.array([1.0]), routing=np.array([[q, 1.0 - q]]))
    tape = Tape(spec, 6)
    counts = tape.block_counts(30_000)[:, 0]
    n = counts.size
    # N is geometric on {1,2,...} with success 1-q
    for m in (1, 2, 3):
        p = q ** (m - 1) * (1 - q)
        se = np.sqrt(p * (1 - p) / n)
        assert abs((counts == m).mean() - p) < 4 * se
    assert counts.mean() == pytest.approx(1 / (1 - q), abs=4 * np.sqrt(q) / np.sqrt(n) / (1 - q))
