"""Index-addressed randomness shared by every model built on one seed.

The tape fixes, for one seed, every primitive random variable a run can
consume: inter-arrival times t_n, entry stations, and per station k the
sequences sigma_{k,i} (duration of the i-th service started at k) and
alpha_{k,i} (where that service's customer goes next, K meaning exit).
Consumers address values by index and each underlying stream is drawn
sequentially through its own generator, so the values are independent of
which consumer touches the tape first and in what order. Coupled
experiments perturb single entries while everything else stays identical.

Customer blocks are a derived view: walking the routing chain customer by
customer with per-station cursors partitions each station's sequence into
consecutive blocks. Block n at station k tells what customer n would
consume on its own; the running network consumes the same sequences in
service-start order instead, which generally interleaves blocks.
"""

from __future__ import annotations

import numpy as np

from .network import NetworkSpec
from .streams import substream

_CHAIN_STEP_CAP = 10**6


class _Stream:
    """Lazily extended i.i.d. sequence with 1-based indexing. Values are a
    pure function of a block of uniforms, so prefix stability holds no
    matter how far ahead any consumer reads."""

    def __init__(self, rng: np.random.Generator, from_uniforms):
        self._rng = rng
        self._from_u = from_uniforms
        self._buf = self._from_u(np.empty(0))

    def upto(self, n: int) -> np.ndarray:
        if n > self._buf.size:
            grow = max(64, 2 * self._buf.size, n) - self._buf.size
            self._buf = np.concatenate([self._buf, self._from_u(self._rng.random(grow))])
        return self._buf

    def __getitem__(self, i: int):
        return self.upto(i)[i - 1]


def _categorical(cum: np.ndarray, top: int):
    """Inverse-CDF draw over {0..top} given cumulative weights."""
    return lambda u: np.minimum(np.searchsorted(cum, u, side="right"), top).astype(np.int64)


class Tape:
    """All primitive randomness for one (spec, seed) pair, plus optional
    pointwise edits for coupling experiments.

    sigma_add maps (station, start-index) to an additive tweak of that
    service duration; t_override maps n to a replacement inter-arrival
    time t_n. Edits feed through to every derived quantity, including
    customer blocks.
    """

    def __init__(self, spec: NetworkSpec, seed: int, *, sigma_add=None, t_override=None):
        self.spec = spec
        self.seed = int(seed)
        K = spec.n_stations
        self._t = _Stream(substream(seed, "arrivals"), spec.arrival.quantile)
        self._entry = _Stream(substream(seed, "entries"), _categorical(np.cumsum(spec.p0), K - 1))
        self._sigma = [
            _Stream(substream(seed, "service", k), spec.services[k].quantile) for k in range(K)
        ]
        self._alpha = [
            _Stream(substream(seed, "routing", k), _categorical(np.cumsum(spec.routing[k]), K))
            for k in range(K)
        ]
        self._sigma_add = {(int(k), int(i)): float(v) for (k, i), v in (sigma_add or {}).items()}
        self._t_override = {int(n): float(v) for n, v in (t_override or {}).items()}
        for n, v in self._t_override.items():
            if n < 1 or v <= 0:
                raise ValueError(f"t_override[{n}] = {v} must be a positive time at index >= 1")
        # arrival-time prefix sums, rebuilt when the t stream grows
        self._T = np.empty(0)
        # customer-block state: per-station cursors and per-customer rows
        self._V = np.zeros(K, dtype=np.int64)
        self._bc = np.empty((0, K), dtype=np.int64)
        self._bs = np.empty((0, K))
        self._n_blocks = 0

    # primitive streams -------------------------------------------------

    def t(self, n: int) -> float:
        v = self._t_override.get(n)
        return float(self._t[n]) if v is None else v

    def inter_arrivals(self, n: int) -> np.ndarray:
        """t_1..t_n with overrides applied."""
        out = self._t.upto(n)[:n].copy()
        for m, v in self._t_override.items():
            if m <= n:
                out[m - 1] = v
        return out

    def arrival_times(self, n: int) -> np.ndarray:
        """T_1..T_n, T_m = t_1 + ... + t_m."""
        if self._T.size < n:
            full = self._t.upto(n).copy()
            for m, v in self._t_override.items():
                if m <= full.size:
                    full[m - 1] = v
            self._T = np.cumsum(full)
        return self._T[:n]

    def T(self, n: int) -> float:
        return 0.0 if n == 0 else float(self.arrival_times(n)[n - 1])

    def entry(self, n: int) -> int:
        return int(self._entry[n])

    def sigma(self, k: int, i: int) -> float:
        v = float(self._sigma[k][i]) + self._sigma_add.get((k, i), 0.0)
        if v <= 0:
            raise ValueError(f"edit makes sigma[{k},{i}] = {v} non-positive")
        return v

    def alpha(self, k: int, i: int) -> int:
        return int(self._alpha[k][i])

    # derived customer blocks -------------------------------------------

    def _ensure_blocks(self, n: int) -> None:
        K = self.spec.n_stations
        if n > self._bc.shape[0]:
            cap = max(64, 2 * self._bc.shape[0], n)
            self._bc = np.vstack([self._bc, np.zeros((cap - self._bc.shape[0], K), np.int64)])
            self._bs = np.vstack([self._bs, np.zeros((cap - self._bs.shape[0], K))])
        while self._n_blocks < n:
            m = self._n_blocks
            k = self.entry(m + 1)
            steps = 0
            while k < K:
                i = int(self._V[k]) + 1
                self._bs[m, k] += self.sigma(k, i)
                self._bc[m, k] += 1
                self._V[k] = i
                k = self.alpha(k, i)
                steps += 1
                if steps > _CHAIN_STEP_CAP:
                    raise RuntimeError(
                        f"customer {m + 1} exceeded {_CHAIN_STEP_CAP} routing steps; "
                        "routing matrix is effectively non-terminating"
                    )
            self._n_blocks += 1

    def block_counts(self, n: int) -> np.ndarray:
        """(n, K) matrix: row m-1 holds customer m's service counts N_{m,k}."""
        self._ensure_blocks(n)
        return self._bc[:n]

    def block_sums(self, n: int) -> np.ndarray:
        """(n, K) matrix of per-station block service totals."""
        self._ensure_blocks(n)
        return self._bs[:n]

    def customer_totals(self, n: int) -> np.ndarray:
        """Total service each of customers 1..n brings, summed over stations."""
        return self.block_sums(n).sum(axis=1)
