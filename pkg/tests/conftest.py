"""Shared builders: hand-sized networks and random stable specs."""

import numpy as np
import pytest

from gjntail import Exponential, NetworkSpec, ShiftedPareto


def mg1(rho: float, a: float = 1.0, service=None) -> NetworkSpec:
    """Single station, everything exits after one service."""
    return NetworkSpec(
        arrival=Exponential(a),
        services=(service if service is not None else Exponential(rho * a),),
        p0=np.array([1.0]),
        routing=np.array([[0.0, 1.0]]),
    )


def two_station(a, b1, b2, p01, p12, p21, *, dist1=None, dist2=None) -> NetworkSpec:
    """Two stations, no self-loops; b1/b2 are ignored when dists are given."""
    d1 = dist1 if dist1 is not None else Exponential(b1)
    d2 = dist2 if dist2 is not None else Exponential(b2)
    return NetworkSpec(
        arrival=Exponential(a),
        services=(d1, d2),
        p0=np.array([p01, 1.0 - p01]),
        routing=np.array([[0.0, p12, 1.0 - p12],
                          [p21, 0.0, 1.0 - p21]]),
    )


def tandem(a_dist, *service_dists) -> NetworkSpec:
    """Chain 1 -> 2 -> ... -> K -> exit, all arrivals at station 1."""
    K = len(service_dists)
    routing = np.zeros((K, K + 1))
    for k in range(K - 1):
        routing[k, k + 1] = 1.0
    routing[K - 1, K] = 1.0
    p0 = np.zeros(K)
    p0[0] = 1.0
    return NetworkSpec(arrival=a_dist, services=tuple(service_dists),
                       p0=p0, routing=routing)


def feedback_spec(scale1: float = 0.25, mean2: float = 1.0) -> NetworkSpec:
    """Two stations with symmetric feedback 0.3, heavy service at station 1.
    Utilisations ~0.55 and ~0.33."""
    return two_station(1.0, None, None, 1.0, 0.3, 0.3,
                       dist1=ShiftedPareto(1.5, scale1),
                       dist2=Exponential(mean2))


def random_stable_spec(rng: np.random.Generator, K: int | None = None,
                       rho_range=(0.2, 0.7)) -> NetworkSpec:
    """Random spec with exponential laws everywhere, exit mass bounded away
    from zero, and per-station utilisation drawn from rho_range."""
    K = int(rng.integers(1, 6)) if K is None else K
    M = rng.random((K, K + 1)) + 0.05
    M[:, K] += 0.6
    routing = M / M.sum(axis=1, keepdims=True)
    p0 = rng.random(K) + 0.1
    p0 = p0 / p0.sum()
    a = 1.0
    e_n = np.linalg.solve(np.eye(K) - routing[:, :K].T, p0)
    rho = rng.uniform(*rho_range, K)
    b = rho * a / e_n
    return NetworkSpec(arrival=Exponential(a),
                       services=tuple(Exponential(float(v)) for v in b),
                       p0=p0, routing=routing)


def drain_oracle_two_station(a, b1, b2, p01, p12, p21):
    """Independently hand-solved drain time for station 1 of a two-station
    spec without self-loops: freeze station 1 for one time unit, then serve
    at capacity until the fluid is gone. Returns (tau, case) or (None, why)
    when the trajectory leaves the two closed-form shapes."""
    p02 = 1.0 - p01
    if p02 / a > 1.0 / b2:
        return None, "other station saturates while frozen"
    z1 = (p01 + p02 * p21) / a
    in2 = p02 / a + p12 / b1            # input to station 2 while 1 drains at capacity
    if 1.0 / b2 >= in2:
        delta = 1.0 / b1 - p01 / a - in2 * p21
        if delta <= 0:
            return None, "station 1 cannot drain"
        return 1.0 + z1 / delta, 1
    abar1 = p01 / a + p21 / b2          # station 2 pinned at capacity
    d1 = 1.0 / b1 - abar1
    if d1 <= 0:
        return None, "station 1 cannot drain against a saturated peer"
    t1 = z1 / d1
    gamma2 = in2 - 1.0 / b2
    beta22 = 1.0 / b2 - p02 / a - abar1 * p12
    if beta22 <= 0:
        return None, "station 2 cannot drain afterwards"
    return 1.0 + (1.0 + gamma2 / beta22) * t1, 2


def random_two_station_case(rng: np.random.Generator, case: int,
                            margin: float = 0.05):
    """Random stable two-station spec whose station-1 drain falls squarely in
    the requested closed-form case, with both orientations well defined."""
    while True:
        p01 = float(rng.uniform(0.1, 0.9))
        p12 = float(rng.uniform(0.1, 0.7))
        p21 = float(rng.uniform(0.1, 0.7))
        b1 = float(rng.uniform(0.15, 0.8))
        b2 = float(rng.uniform(0.15, 0.8))
        a = 1.0
        gap = 1.0 / b2 - (1.0 - p01) / a - p12 / b1
        if case == 1 and gap < margin:
            continue
        if case == 2 and gap > -margin:
            continue
        tau1, c1 = drain_oracle_two_station(a, b1, b2, p01, p12, p21)
        tau2, _ = drain_oracle_two_station(a, b2, b1, 1.0 - p01, p21, p12)
        if tau1 is None or tau2 is None or c1 != case:
            continue
        spec = two_station(a, b1, b2, p01, p12, p21)
        lam = np.linalg.solve(np.eye(2) - spec.routing[:, :2].T, spec.p0) / a
        if np.max(lam * spec.b) > 0.95:
            continue
        return spec, tau1, tau2


@pytest.fixture
def rng():
    return np.random.default_rng(20260814)
