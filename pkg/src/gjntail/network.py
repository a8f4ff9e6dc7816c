"""Open multiclass-free network description and routing-chain statistics.

A network has K single-server FIFO stations, one renewal arrival stream and
Markovian routing. Customers enter at station k with probability p0[k]; after
service at station j they move to station l with probability routing[j, l],
where column K is the exit. Expected visit counts and first-visit
probabilities are linear-algebra functionals of the routing chain and drive
both the stability condition and the shape of the fluid picture.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .distributions import Dist

_ATOL = 1e-12


def matrix_problems(p0: np.ndarray, routing: np.ndarray) -> list[str]:
    """Probability-structure violations of an entry vector and routing
    matrix of the right shapes. No silent renormalization: a row summing to
    0.9 is reported, never fixed."""
    problems = []
    if (p0 < 0).any() or (routing < 0).any():
        problems.append("routing probabilities must be nonnegative")
    if abs(p0.sum() - 1.0) > _ATOL:
        problems.append(f"p0 sums to {p0.sum()!r}, not 1")
    rows = routing.sum(axis=1)
    for j in np.flatnonzero(np.abs(rows - 1.0) > _ATOL):
        problems.append(f"routing row {j} sums to {rows[j]!r}, not 1 (exit column included)")
    if not problems:
        interior = routing[:, : routing.shape[0]]
        radius = float(np.abs(np.linalg.eigvals(interior)).max())
        if radius >= 1.0 - _ATOL:
            problems.append(
                f"interior routing block spectral radius {radius:.12g} >= 1; "
                "some customers never reach the exit"
            )
    return problems


@dataclass(frozen=True)
class NetworkSpec:
    arrival: Dist
    services: tuple[Dist, ...]
    p0: np.ndarray
    routing: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "services", tuple(self.services))
        object.__setattr__(self, "p0", np.asarray(self.p0, dtype=float))
        object.__setattr__(self, "routing", np.asarray(self.routing, dtype=float))
        K = len(self.services)
        if K == 0:
            raise ValueError("need at least one station")
        if self.p0.shape != (K,):
            raise ValueError(f"p0 must have shape ({K},), got {self.p0.shape}")
        if self.routing.shape != (K, K + 1):
            raise ValueError(
                f"routing must have shape ({K}, {K + 1}) with an exit column, "
                f"got {self.routing.shape}"
            )
        problems = matrix_problems(self.p0, self.routing)
        if problems:
            raise ValueError("; ".join(problems))
        self.p0.setflags(write=False)
        self.routing.setflags(write=False)

    @property
    def n_stations(self) -> int:
        return len(self.services)

    @property
    def a(self) -> float:
        return self.arrival.mean

    @property
    def b(self) -> np.ndarray:
        return np.array([s.mean for s in self.services])

    @property
    def interior(self) -> np.ndarray:
        """Station-to-station block of the routing matrix."""
        return self.routing[:, : self.n_stations]


@dataclass(frozen=True)
class VisitStats:
    """Routing-chain functionals: expected visits, first-visit probabilities,
    per-station utilizations, and the stability margin a - max_k b_k E N_k."""

    e_n: np.ndarray
    beta: np.ndarray
    rho: np.ndarray
    margin: float
    unreachable: tuple[int, ...] = field(default=())


def _solve(mat: np.ndarray, rhs: np.ndarray, what: str) -> np.ndarray:
    lu, piv = lu_factor(mat)
    if np.abs(lu.diagonal()).min() < _ATOL:
        raise ValueError(f"{what}: customers cannot all reach the exit")
    return lu_solve((lu, piv), rhs)


def expected_visits(spec: NetworkSpec) -> np.ndarray:
    """E N_k, the mean number of services a customer receives at station k:
    solves (I - Q^T) n = p0 with Q the interior routing block."""
    K = spec.n_stations
    return _solve(np.eye(K) - spec.interior.T, spec.p0, "expected visits")


def first_visit_probabilities(spec: NetworkSpec) -> np.ndarray:
    """beta_k = P(customer ever visits station k).

    For each target k, h_j = P(reach k before exiting | at j) satisfies
    h_j = p_{j,k} + sum_{l != k} p_{j,l} h_l over the other stations.
    """
    K = spec.n_stations
    Q = spec.interior
    beta = np.empty(K)
    for k in range(K):
        others = [j for j in range(K) if j != k]
        if others:
            sub = np.eye(K - 1) - Q[np.ix_(others, others)]
            h = _solve(sub, Q[others, k], f"first-visit probability of station {k}")
        else:
            h = np.empty(0)
        beta[k] = spec.p0[k] + spec.p0[others] @ h
    return beta


def visit_stats(spec: NetworkSpec) -> VisitStats:
    e_n = expected_visits(spec)
    beta = first_visit_probabilities(spec)
    rho = spec.b * e_n / spec.a
    margin = spec.a - float((spec.b * e_n).max())
    unreachable = tuple(int(k) for k in np.flatnonzero(beta < _ATOL))
    return VisitStats(e_n=e_n, beta=beta, rho=rho, margin=margin, unreachable=unreachable)


def stability_margin(spec: NetworkSpec) -> float:
    """a - max_k b_k E N_k; positive iff every station drains faster than
    work arrives."""
    return spec.a - float((spec.b * expected_visits(spec)).max())


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    problems: tuple[str, ...]
    warnings: tuple[str, ...]
    stats: VisitStats
    margin: float


def validate(spec: NetworkSpec, allow_bounded_arrivals: bool = False) -> ValidationReport:
    """Model-level checks beyond shape validation.

    Problems (fatal): non-positive stability margin; bounded inter-arrival
    support without the explicit override, since with bounded arrivals a busy
    period can be infinite. Unreachable stations only warn: they carry no
    traffic but do not break anything.
    """
    stats = visit_stats(spec)
    margin = stats.margin
    problems = []
    warnings = []
    if margin <= 0:
        k = int((spec.b * stats.e_n).argmax())
        problems.append(
            f"unstable: station {k} needs b_k * E N_k = {spec.b[k] * stats.e_n[k]:.6g} "
            f"< a = {spec.a:.6g}"
        )
    if not spec.arrival.unbounded_support:
        msg = (
            f"inter-arrival distribution {spec.arrival.kind!r} has bounded support; "
            "busy periods need not terminate"
        )
        if allow_bounded_arrivals:
            warnings.append(msg + " (override in effect)")
        else:
            problems.append(msg)
    for k in stats.unreachable:
        warnings.append(f"station {k} is unreachable (beta_{k} = 0)")
    return ValidationReport(
        ok=not problems,
        problems=tuple(problems),
        warnings=tuple(warnings),
        stats=stats,
        margin=margin,
    )
