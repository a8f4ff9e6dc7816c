"""Service and inter-arrival time distributions.

All sampling goes through the inverse CDF, so coupled experiments can reuse
uniforms and a tape replay reproduces values bit-for-bit. The closed set of
families below is what the tail bookkeeping understands: the two Pareto
variants are the heavy-tailed ones, everything else counts as light.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# codes used by the compiled simulation kernel
DET, UNI, EXP, PAR, SPAR = 0, 1, 2, 3, 4

_ALPHA_TOL = 1e-9


class NoCommonReferenceError(ValueError):
    """Raised when the per-station tails cannot all be expressed as
    c_k * (reference tail) with some c_k > 0."""


class Dist:
    """Common interface; concrete families are frozen dataclasses."""

    kind: str = ""

    # families with P(t > x) > 0 for every x
    unbounded_support: bool = False

    def tail(self, x):
        raise NotImplementedError

    def cdf(self, x):
        return 1.0 - self.tail(x)

    def quantile(self, u):
        raise NotImplementedError

    def tail_inverse(self, p: float) -> float:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, n=None):
        return self.quantile(rng.random(n))

    def kernel_params(self) -> tuple[int, float, float]:
        raise NotImplementedError

    def as_config(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Deterministic(Dist):
    value: float
    kind = "deterministic"

    def __post_init__(self):
        if self.value <= 0:
            raise ValueError("deterministic value must be positive")

    @property
    def mean(self) -> float:
        return self.value

    def tail(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < self.value, 1.0, 0.0)[()]

    def quantile(self, u):
        return np.broadcast_to(np.float64(self.value), np.shape(u)).copy()[()]

    def tail_inverse(self, p: float) -> float:
        return self.value

    def kernel_params(self):
        return DET, self.value, 0.0

    def as_config(self):
        return {"kind": "deterministic", "value": self.value}


@dataclass(frozen=True)
class Uniform(Dist):
    lo: float
    hi: float
    kind = "uniform"

    def __post_init__(self):
        if not 0 <= self.lo < self.hi:
            raise ValueError("uniform needs 0 <= lo < hi")

    @property
    def mean(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def tail(self, x):
        x = np.asarray(x, dtype=float)
        return np.clip((self.hi - x) / (self.hi - self.lo), 0.0, 1.0)[()]

    def quantile(self, u):
        return self.lo + (self.hi - self.lo) * np.asarray(u, dtype=float)[()]

    def tail_inverse(self, p: float) -> float:
        return self.hi - (self.hi - self.lo) * p

    def kernel_params(self):
        return UNI, self.lo, self.hi

    def as_config(self):
        return {"kind": "uniform", "lo": self.lo, "hi": self.hi}


@dataclass(frozen=True)
class Exponential(Dist):
    mean: float
    kind = "exponential"
    unbounded_support = True

    def __post_init__(self):
        if self.mean <= 0:
            raise ValueError("exponential mean must be positive")

    def tail(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x <= 0, 1.0, np.exp(-np.maximum(x, 0.0) / self.mean))[()]

    def quantile(self, u):
        # -log1p keeps precision for small u
        return (-self.mean * np.log1p(-np.asarray(u, dtype=float)))[()]

    def tail_inverse(self, p: float) -> float:
        return -self.mean * math.log(p)

    def kernel_params(self):
        return EXP, self.mean, 0.0

    def as_config(self):
        return {"kind": "exponential", "mean": self.mean}


@dataclass(frozen=True)
class Pareto(Dist):
    """P(X > x) = (xm/x)^alpha for x >= xm; support starts at xm > 0."""

    alpha: float
    xm: float
    kind = "pareto"
    unbounded_support = True

    def __post_init__(self):
        if self.alpha <= 1:
            raise ValueError("pareto needs alpha > 1 for a finite mean")
        if self.xm <= 0:
            raise ValueError("pareto scale xm must be positive")

    @property
    def mean(self) -> float:
        return self.alpha * self.xm / (self.alpha - 1.0)

    def tail(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            t = np.where(x < self.xm, 1.0, (self.xm / np.maximum(x, self.xm)) ** self.alpha)
        return t[()]

    def quantile(self, u):
        return (self.xm * (1.0 - np.asarray(u, dtype=float)) ** (-1.0 / self.alpha))[()]

    def tail_inverse(self, p: float) -> float:
        return self.xm * p ** (-1.0 / self.alpha)

    def kernel_params(self):
        return PAR, self.alpha, self.xm

    def as_config(self):
        return {"kind": "pareto", "alpha": self.alpha, "xm": self.xm}


@dataclass(frozen=True)
class ShiftedPareto(Dist):
    """P(X > x) = (1 + x/scale)^{-alpha} on [0, inf).

    Same tail index as Pareto(alpha) but with full support at 0, which avoids
    the atom-at-xm artifacts in short busy periods.
    """

    alpha: float
    scale: float
    kind = "shifted_pareto"
    unbounded_support = True

    def __post_init__(self):
        if self.alpha <= 1:
            raise ValueError("shifted pareto needs alpha > 1 for a finite mean")
        if self.scale <= 0:
            raise ValueError("shifted pareto scale must be positive")

    @property
    def mean(self) -> float:
        return self.scale / (self.alpha - 1.0)

    def tail(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x <= 0, 1.0, (1.0 + np.maximum(x, 0.0) / self.scale) ** -self.alpha)[()]

    def quantile(self, u):
        return (self.scale * ((1.0 - np.asarray(u, dtype=float)) ** (-1.0 / self.alpha) - 1.0))[()]

    def tail_inverse(self, p: float) -> float:
        return self.scale * (p ** (-1.0 / self.alpha) - 1.0)

    def kernel_params(self):
        return SPAR, self.alpha, self.scale

    def as_config(self):
        return {"kind": "shifted_pareto", "alpha": self.alpha, "scale": self.scale}


_KINDS = {
    "deterministic": (Deterministic, ("value",)),
    "uniform": (Uniform, ("lo", "hi")),
    "exponential": (Exponential, ("mean",)),
    "pareto": (Pareto, ("alpha", "xm")),
    "shifted_pareto": (ShiftedPareto, ("alpha", "scale")),
}


def parse_dist(cfg: dict) -> Dist:
    """Build a distribution from its config mapping, e.g.
    {"kind": "pareto", "alpha": 1.5, "xm": 1.0}."""
    if not isinstance(cfg, dict) or "kind" not in cfg:
        raise ValueError(f"distribution config must be a mapping with a 'kind': {cfg!r}")
    kind = cfg["kind"]
    if kind not in _KINDS:
        raise ValueError(f"unknown distribution kind {kind!r}")
    cls, fields = _KINDS[kind]
    extra = set(cfg) - {"kind"} - set(fields)
    if extra:
        raise ValueError(f"unexpected parameters {sorted(extra)} for kind {kind!r}")
    kwargs = {f: float(cfg[f]) for f in fields if f in cfg}
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ValueError(f"bad parameters for kind {kind!r}: {exc}") from None


def _power_law(d: Dist):
    """(alpha, asymptotic scale) for the Pareto families, else None.
    Both families satisfy tail(x) ~ (scale/x)^alpha."""
    if isinstance(d, Pareto):
        return d.alpha, d.xm
    if isinstance(d, ShiftedPareto):
        return d.alpha, d.scale
    return None


@dataclass(frozen=True)
class HtaProfile:
    """Reference heavy-tail distribution G plus per-station constants c_k,
    meaning P(sigma_k > x) ~ c_k * tail_G(x)."""

    reference: Dist
    c: np.ndarray

    @property
    def total(self) -> float:
        return float(self.c.sum())


def hta_constants(services, reference: Dist) -> HtaProfile:
    """Tail constants c_k of each service law against the reference.

    Stations whose law shares the reference's tail index get the analytic
    scale ratio; strictly lighter tails get 0; a heavier tail (or no heavy
    station at all) means the reference cannot be common and is an error.
    Accepts a network spec or a plain sequence of service laws.
    """
    services = getattr(services, "services", services)
    ref = _power_law(reference)
    if ref is None:
        raise NoCommonReferenceError(
            f"reference must be a power-law family, got {reference.kind!r}"
        )
    alpha_ref, scale_ref = ref
    c = np.zeros(len(services))
    for k, d in enumerate(services):
        pl = _power_law(d)
        if pl is None:
            continue
        alpha_k, scale_k = pl
        if alpha_k < alpha_ref - _ALPHA_TOL:
            raise NoCommonReferenceError(
                f"station {k} tail index {alpha_k} is heavier than the reference {alpha_ref}"
            )
        if alpha_k <= alpha_ref + _ALPHA_TOL:
            c[k] = (scale_k / scale_ref) ** alpha_ref
    if c.sum() <= 0:
        raise NoCommonReferenceError("no common reference: all tail constants are zero")
    return HtaProfile(reference=reference, c=c)


@dataclass(frozen=True)
class ProbeResult:
    xs: np.ndarray
    ratios: np.ndarray
    truncated: bool


def irv_ratio_probe(d: Dist, y: float, xs) -> ProbeResult:
    """tail(y*x)/tail(x) over the grid; constant y^{-alpha} for a pure power
    law. Points where either tail underflows below 1e-300 are dropped and
    flagged."""
    if y <= 1:
        raise ValueError("probe factor y must exceed 1")
    xs = np.asarray(xs, dtype=float)
    lo = np.asarray(d.tail(xs), dtype=float)
    hi = np.asarray(d.tail(y * xs), dtype=float)
    keep = (lo >= 1e-300) & (hi >= 1e-300)
    return ProbeResult(xs=xs[keep], ratios=hi[keep] / lo[keep], truncated=bool(~keep.all()))
