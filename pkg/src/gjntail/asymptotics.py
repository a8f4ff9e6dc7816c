"""Tail prediction and regenerative Monte Carlo estimation of P(B > x).

The prediction for a stable network with heavy-tailed services is

    P(B > x) ~ E nu_B * sum_k c_k * E N_k * tail_ref(u_k x),

one term per station whose service tail matters (c_k > 0): a busy period
exceeds x essentially only because a single huge service lands somewhere,
and a huge service at station k stretches into a busy period 1/u_k times
its own length. E nu_B has no closed form in general and is estimated from
the same cycles as the empirical tail, so the ratio column carries the
correlation through a delta-method interval.

Estimation fans fixed-size chunks of cycles across threads; each chunk
seeds its own generator from (seed, tag, chunk index), so results are
byte-identical for a given seed regardless of worker count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernel
from .distributions import Dist, HtaProfile, NoCommonReferenceError, _power_law, hta_constants
from .engine import MAX_EVENTS, MAX_TIME
from .fluid import all_coefficients
from .network import NetworkSpec, validate, visit_stats
from .streams import raw_state, substream

_Z95 = 1.959963984540054


class InsufficientExceedances(RuntimeError):
    """Too few cycles crossed the threshold for the requested statistic."""

    def __init__(self, needed: int, observed: int, x: float):
        super().__init__(
            f"need at least {needed} cycles with B > {x:g}, observed {observed}"
        )
        self.needed = needed
        self.observed = observed


def predicted_tail(x, profile: HtaProfile, e_n: np.ndarray, u: np.ndarray,
                   e_nu: float) -> np.ndarray:
    """Prediction at x (scalar or grid), clamped to [0, 1]. Stations with
    c_k = 0 contribute exactly nothing; c_k > 0 without a finite u_k is a
    configuration error."""
    if e_nu <= 0:
        raise ValueError("e_nu must be positive")
    x = np.asarray(x, dtype=float)
    total = np.zeros(x.shape)
    for k, ck in enumerate(profile.c):
        if ck == 0.0:
            continue
        if not np.isfinite(u[k]) or u[k] <= 0:
            raise ValueError(
                f"station {k} has tail constant {ck} but no drain coefficient; "
                "heavy service at an unreachable station makes no sense"
            )
        total += ck * e_n[k] * np.asarray(profile.reference.tail(u[k] * x))
    return np.minimum(e_nu * total, 1.0)[()]


def default_grid(profile: HtaProfile, u: np.ndarray, *, points: int = 25,
                 p_hi: float = 0.1, p_lo: float = 1e-4) -> np.ndarray:
    """Geometric x-grid covering reference tail levels [p_lo, p_hi] at the
    slowest drain coefficient, where the prediction is informative but
    exceedances stay countable."""
    u_used = [u[k] for k, ck in enumerate(profile.c) if ck > 0]
    u_min = min(u_used)
    lo = profile.reference.tail_inverse(p_hi) / u_min
    hi = profile.reference.tail_inverse(p_lo) / u_min
    return np.geomspace(lo, hi, points)


def wilson_interval(count, n, z: float = _Z95):
    """Binomial score interval; behaves sanely at 0 and n."""
    count = np.asarray(count, dtype=float)
    p = count / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * np.sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom
    return center - half, center + half


@dataclass(frozen=True)
class TailReport:
    xs: np.ndarray
    exceed: np.ndarray        # raw counts of B > x
    p_hat: np.ndarray
    ci_lo: np.ndarray
    ci_hi: np.ndarray
    e_nu: float
    e_nu_se: float
    n_cycles: int
    n_overflow: int
    theory: np.ndarray | None          # None when no usable heavy-tail reference
    ratio: np.ndarray | None
    ratio_lo: np.ndarray | None
    ratio_hi: np.ndarray | None
    u: np.ndarray | None
    c: np.ndarray | None
    e_n: np.ndarray
    reference: Dist | None
    theory_note: str | None = None     # why theory is absent, when it is


def _auto_reference(spec: NetworkSpec) -> Dist | None:
    """Heaviest power-law service law: smallest tail index, largest scale on
    ties, so every c_k <= 1."""
    best = None
    for d in spec.services:
        pl = _power_law(d)
        if pl is None:
            continue
        if best is None or pl[0] < best[0] - 1e-9 or (
                abs(pl[0] - best[0]) <= 1e-9 and pl[1] > best[1]):
            best, best_d = pl, d
    return None if best is None else best_d


def _run_tally(spec: NetworkSpec, n_cycles: int, seed: int, xs: np.ndarray,
               workers: int | None, chunk_size: int, max_events: int,
               max_time: float, big_threshold: float = np.inf,
               keep_exceed_above: float | None = None):
    """Chunked kernel runs reduced to grid tallies (and, optionally, raw
    per-cycle jump data for cycles with B above a threshold)."""
    ka = _kernel.kernel_args(spec)
    sizes = [chunk_size] * (n_cycles // chunk_size)
    if n_cycles % chunk_size:
        sizes.append(n_cycles % chunk_size)

    def one(args):
        ci, size = args
        state = raw_state(seed, "cycles", ci)
        B, nu, smax, kmax, s2nd, nbig, ovf = _kernel.sim_cycles(
            state, size, ka["acode"], ka["ap1"], ka["ap2"], ka["scodes"],
            ka["sp1"], ka["sp2"], ka["p0cum"], ka["rcum"], big_threshold,
            max_events, max_time)
        ok = ovf == 0
        Bv, nuv = B[ok], nu[ok]
        idx = np.searchsorted(xs, Bv, side="left")
        binc = np.bincount(idx, minlength=xs.size + 1)
        nubinc = np.bincount(idx, weights=nuv.astype(float), minlength=xs.size + 1)
        tail_cnt = Bv.size - np.cumsum(binc)[:-1]
        tail_nu = nuv.sum() - np.cumsum(nubinc)[:-1]
        extra = None
        if keep_exceed_above is not None:
            sel = ok & (B > keep_exceed_above)
            extra = (B[sel], smax[sel], kmax[sel], s2nd[sel])
        return (Bv.size, int((~ok).sum()), float(nuv.sum()),
                float((nuv.astype(float) ** 2).sum()), tail_cnt, tail_nu, extra)

    nw = workers or min(os.cpu_count() or 1, 8)
    with ThreadPoolExecutor(max_workers=nw) as pool:
        parts = list(pool.map(one, enumerate(sizes)))

    n_ok = sum(p[0] for p in parts)
    n_ovf = sum(p[1] for p in parts)
    sum_nu = sum(p[2] for p in parts)
    sum_nu2 = sum(p[3] for p in parts)
    exceed = np.sum([p[4] for p in parts], axis=0)
    nu_exceed = np.sum([p[5] for p in parts], axis=0)
    extras = None
    if keep_exceed_above is not None:
        extras = tuple(np.concatenate([p[6][i] for p in parts]) for i in range(4))
    return n_ok, n_ovf, sum_nu, sum_nu2, exceed, nu_exceed, extras


def estimate_tail(spec: NetworkSpec, n_cycles: int, *, seed: int,
                  xs=None, reference: Dist | None = None,
                  workers: int | None = None, allow_bounded_arrivals: bool = False,
                  chunk_size: int = 1_000_000, max_events: int = MAX_EVENTS,
                  max_time: float = MAX_TIME, grid_points: int = 25) -> TailReport:
    """Empirical busy-period tail over n_cycles regeneration cycles, with
    the prediction and the empirical/predicted ratio when a heavy-tail
    reference is usable (absent otherwise, with the reason recorded)."""
    report = validate(spec, allow_bounded_arrivals=allow_bounded_arrivals)
    if not report.ok:
        raise ValueError("; ".join(report.problems))
    stats = visit_stats(spec)

    profile = None
    u = None
    theory_note = None
    ref = reference if reference is not None else _auto_reference(spec)
    if ref is None:
        theory_note = "no power-law service law; prediction undefined"
    else:
        try:
            profile = hta_constants(spec.services, ref)
        except NoCommonReferenceError as exc:
            theory_note = str(exc)
    if profile is not None:
        u = all_coefficients(spec).u

    if xs is None:
        if profile is None:
            raise ValueError(
                f"no default grid without a heavy-tail reference ({theory_note}); "
                "pass xs explicitly"
            )
        xs = default_grid(profile, u, points=grid_points)
    xs = np.asarray(xs, dtype=float)
    if xs.size == 0 or (np.diff(xs) <= 0).any():
        raise ValueError("xs must be a nonempty strictly increasing grid")

    n_ok, n_ovf, sum_nu, sum_nu2, exceed, nu_exceed, _ = _run_tally(
        spec, n_cycles, seed, xs, workers, chunk_size, max_events, max_time)
    if n_ovf > 0.001 * n_cycles:
        raise RuntimeError(
            f"{n_ovf} of {n_cycles} cycles exceeded the safety caps "
            f"({max_events} events / {max_time:g} time units); the network is "
            "effectively unstable at these parameters"
        )

    p_hat = exceed / n_ok
    ci_lo, ci_hi = wilson_interval(exceed, n_ok)
    e_nu = sum_nu / n_ok
    var_nu = max(sum_nu2 / n_ok - e_nu ** 2, 0.0)
    e_nu_se = float(np.sqrt(var_nu / n_ok))

    theory = ratio = ratio_lo = ratio_hi = None
    if profile is not None:
        theory = predicted_tail(xs, profile, stats.e_n, u, e_nu)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = p_hat / theory
            # delta method on (p_hat, nu_bar), correlated through shared cycles
            var_p = p_hat * (1.0 - p_hat) / n_ok
            cov = (nu_exceed / n_ok - p_hat * e_nu) / n_ok
            rel = (var_p / p_hat ** 2 + (var_nu / n_ok) / e_nu ** 2
                   - 2.0 * cov / (p_hat * e_nu))
            half = _Z95 * ratio * np.sqrt(np.maximum(rel, 0.0))
            ratio_lo = np.where(exceed > 0, ratio - half, np.nan)
            ratio_hi = np.where(exceed > 0, ratio + half, np.nan)
            ratio = np.where(exceed > 0, ratio, np.nan)

    return TailReport(
        xs=xs, exceed=exceed.astype(np.int64), p_hat=p_hat, ci_lo=ci_lo, ci_hi=ci_hi,
        e_nu=float(e_nu), e_nu_se=e_nu_se, n_cycles=n_ok, n_overflow=int(n_ovf),
        theory=theory, ratio=ratio, ratio_lo=ratio_lo, ratio_hi=ratio_hi,
        u=u, c=None if profile is None else profile.c, e_n=stats.e_n,
        reference=None if profile is None else profile.reference,
        theory_note=theory_note,
    )


def tail_slope(xs, p_hat, exceed, *, min_count: int = 100, decade: float = 10.0) -> float:
    """Least-squares log-log slope of the empirical tail over the top decade
    of grid points that still have at least min_count exceedances."""
    xs = np.asarray(xs, dtype=float)
    p = np.asarray(p_hat, dtype=float)
    ok = (np.asarray(exceed) >= min_count) & (p > 0)
    if ok.sum() < 2:
        raise InsufficientExceedances(min_count, int(np.asarray(exceed)[ok].min(initial=0)),
                                      float(xs[-1]))
    xq, pq = xs[ok], p[ok]
    sel = xq >= xq.max() / decade
    if sel.sum() < 2:
        sel = np.zeros(xq.size, dtype=bool)
        sel[-2:] = True
    return float(np.polyfit(np.log(xq[sel]), np.log(pq[sel]), 1)[0])


@dataclass(frozen=True)
class PsbjReport:
    """How often a single huge service explains an exceedance: among cycles
    with B > x, the fraction whose largest consumed service sigma* at
    station k* satisfies sigma* >= eps * u_{k*} * x, per eps; plus the
    fraction with two services both above the full threshold u_{k*} * x.
    c_u is the upper-bound queue margin constant, reported for reference."""

    x: float
    n_cycles: int
    n_exceed: int
    eps: tuple[float, ...]
    single_frac: np.ndarray
    double_frac: float
    c_u: float
    L: int
    u: np.ndarray


def upper_queue_margin(spec: NetworkSpec, seed: int, *, L: int | None = None,
                       pilot_groups: int = 200) -> tuple[float, int]:
    """(c_u, L): c_u = (1 - rho_hat)/(K+1) with rho_hat = E sigma_hat/(L a),
    the load of the group-level queue at group size L."""
    from .bounds import select_group_size

    if L is None:
        L = select_group_size(spec, seed)
    ka = _kernel.kernel_args(spec)
    state = raw_state(seed, "cu-pilot", L)
    x0 = _kernel.sim_saturated(state, L, pilot_groups, ka["scodes"], ka["sp1"],
                               ka["sp2"], ka["p0cum"], ka["rcum"], 10 ** 9)
    rho_hat = float(x0.mean()) / (L * spec.a)
    return (1.0 - rho_hat) / (spec.n_stations + 1), L


def psbj_diagnostic(spec: NetworkSpec, x: float, n_cycles: int, *, seed: int,
                    u: np.ndarray | None = None, eps=(0.25, 0.5, 0.75, 0.9),
                    workers: int | None = None, L: int | None = None,
                    chunk_size: int = 1_000_000, max_events: int = MAX_EVENTS,
                    max_time: float = MAX_TIME, min_exceed: int = 10) -> PsbjReport:
    """Single-big-jump diagnostic at threshold x."""
    report = validate(spec)
    if not report.ok:
        raise ValueError("; ".join(report.problems))
    if u is None:
        u = all_coefficients(spec).u
    c_u, L = upper_queue_margin(spec, seed, L=L)

    xs = np.array([x])
    n_ok, n_ovf, _, _, exceed, _, extras = _run_tally(
        spec, n_cycles, seed, xs, workers, chunk_size, max_events, max_time,
        keep_exceed_above=float(x))
    if n_ovf > 0.001 * n_cycles:
        raise RuntimeError(f"{n_ovf} of {n_cycles} cycles exceeded the safety caps")
    _, smax, kmax, s2nd = extras
    n_exc = smax.size
    if n_exc < min_exceed:
        raise InsufficientExceedances(min_exceed, n_exc, x)

    u_at_max = u[kmax]
    if not np.isfinite(u_at_max).all():
        bad = sorted(set(kmax[~np.isfinite(u_at_max)].tolist()))
        raise ValueError(f"largest jump landed at stations {bad} with no drain coefficient")
    single = np.array([np.mean(smax >= e * u_at_max * x) for e in eps])
    # two services each above the full drain threshold; the margin constant
    # c_u is reported alongside but is far too small to separate scales at
    # reachable x (x * Gbar(c_u x) decays like x^{1-alpha})
    double = float(np.mean(s2nd > u_at_max * x))
    return PsbjReport(x=float(x), n_cycles=n_ok, n_exceed=int(n_exc),
                      eps=tuple(eps), single_frac=single, double_frac=double,
                      c_u=float(c_u), L=int(L), u=u)


@dataclass(frozen=True)
class RandomSumReport:
    xs: np.ndarray
    p_hat: np.ndarray
    ratio: np.ndarray
    e_gamma: float
    n_reps: int


def random_sum_tail_ratio(dist: Dist, p_stop: float, xs, n_reps: int, *,
                          seed: int, chunk_size: int = 1_000_000) -> RandomSumReport:
    """Calibration of the sampling stack against the one-big-jump law for
    random sums: S = sum of a geometric(p_stop) number of i.i.d. draws
    satisfies P(S > x) ~ E[count] * tail(x). Returns the empirical tail and
    its ratio to that limit over the grid."""
    if not 0 < p_stop <= 1:
        raise ValueError("p_stop must be in (0, 1]")
    xs = np.asarray(xs, dtype=float)
    e_gamma = 1.0 / p_stop
    counts = np.zeros(xs.size, dtype=np.int64)
    done = 0
    ci = 0
    while done < n_reps:
        m = min(chunk_size, n_reps - done)
        rng = substream(seed, "random-sum", ci)
        gamma = rng.geometric(p_stop, m)
        draws = dist.sample(rng, int(gamma.sum()))
        offsets = np.concatenate(([0], np.cumsum(gamma)[:-1]))
        sums = np.add.reduceat(draws, offsets)
        counts += (sums[:, None] > xs[None, :]).sum(axis=0)
        done += m
        ci += 1
    p_hat = counts / n_reps
    ratio = p_hat / (e_gamma * np.asarray(dist.tail(xs), dtype=float))
    return RandomSumReport(xs=xs, p_hat=p_hat, ratio=ratio, e_gamma=e_gamma,
                           n_reps=n_reps)
