"""JSON run configuration.

A config file pins down one network plus optional run defaults:

    {
      "schema": 1,
      "arrival": {"kind": "exp", "mean": 2.0},
      "services": [{"kind": "shifted_pareto", "alpha": 1.5, "scale": 0.5}],
      "p0": [1.0],
      "routing": [[0.0, 1.0]],
      "seed": 7, "cycles": 1000000, "x": 50.0, "xs": [...], "name": "m/g/1"
    }

routing rows have K+1 entries, the last being the exit probability.
Parsing collects every problem it can find instead of stopping at the
first, so a bad file is fixable in one pass.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .distributions import Dist, parse_dist
from .network import NetworkSpec, matrix_problems

SCHEMA_VERSION = 1

_TOP_KEYS = {"schema", "arrival", "services", "p0", "routing",
             "seed", "cycles", "workers", "x", "xs", "reference", "name"}


class ConfigError(ValueError):
    def __init__(self, problems: list[str]):
        super().__init__("invalid config: " + "; ".join(problems))
        self.problems = problems


@dataclass(frozen=True)
class RunConfig:
    spec: NetworkSpec
    seed: int = 1
    cycles: int = 1_000_000
    workers: int | None = None
    x: float | None = None                 # psbj threshold
    xs: tuple[float, ...] | None = None    # explicit evaluation grid
    reference: Dist | None = None
    name: str = ""
    raw: dict = field(repr=False, default_factory=dict)

    @property
    def sha256(self) -> str:
        return canonical_hash(self.raw)


def canonical_hash(cfg: dict) -> str:
    """Hash of the canonical JSON text, so re-ordered or re-indented files
    that mean the same thing hash the same."""
    text = json.dumps(cfg, sort_keys=True, separators=(",", ":"), allow_nan=False)
    return hashlib.sha256(text.encode()).hexdigest()


def _dist_or_problem(obj, where: str, problems: list[str]) -> Dist | None:
    if not isinstance(obj, dict):
        problems.append(f"{where}: expected an object, got {type(obj).__name__}")
        return None
    try:
        return parse_dist(obj)
    except (ValueError, TypeError) as exc:
        problems.append(f"{where}: {exc}")
        return None


def parse_config(cfg: dict) -> RunConfig:
    """Build a RunConfig or raise ConfigError listing every problem found."""
    problems: list[str] = []
    if not isinstance(cfg, dict):
        raise ConfigError([f"top level must be an object, got {type(cfg).__name__}"])
    for key in sorted(set(cfg) - _TOP_KEYS):
        problems.append(f"unknown key {key!r}")
    if cfg.get("schema") != SCHEMA_VERSION:
        problems.append(f"schema must be {SCHEMA_VERSION}, got {cfg.get('schema')!r}")

    arrival = None
    if "arrival" not in cfg:
        problems.append("missing key 'arrival'")
    else:
        arrival = _dist_or_problem(cfg["arrival"], "arrival", problems)

    services: list[Dist] = []
    if "services" not in cfg:
        problems.append("missing key 'services'")
    elif not isinstance(cfg["services"], list) or not cfg["services"]:
        problems.append("services must be a nonempty list")
    else:
        for k, obj in enumerate(cfg["services"]):
            d = _dist_or_problem(obj, f"services[{k}]", problems)
            if d is not None:
                services.append(d)

    p0 = routing = None
    n = len(cfg.get("services", [])) if isinstance(cfg.get("services"), list) else 0
    for key, shape in (("p0", (n,)), ("routing", (n, n + 1))):
        if key not in cfg:
            problems.append(f"missing key {key!r}")
            continue
        try:
            arr = np.asarray(cfg[key], dtype=float)
        except (ValueError, TypeError):
            problems.append(f"{key} is not numeric")
            continue
        if n and arr.shape != shape:
            problems.append(f"{key} has shape {arr.shape}, expected {shape}")
        elif key == "p0":
            p0 = arr
        else:
            routing = arr
    if p0 is not None and routing is not None:
        problems.extend(matrix_problems(p0, routing))

    seed = cfg.get("seed", 1)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        problems.append(f"seed must be a nonnegative integer, got {seed!r}")
    cycles = cfg.get("cycles", 1_000_000)
    if not isinstance(cycles, int) or isinstance(cycles, bool) or cycles <= 0:
        problems.append(f"cycles must be a positive integer, got {cycles!r}")
    workers = cfg.get("workers")
    if workers is not None and (not isinstance(workers, int) or workers <= 0):
        problems.append(f"workers must be a positive integer, got {workers!r}")
    x = cfg.get("x")
    if x is not None and (not isinstance(x, (int, float)) or isinstance(x, bool)
                          or not x > 0):
        problems.append(f"x must be a positive number, got {x!r}")
    xs = cfg.get("xs")
    if xs is not None:
        good = (isinstance(xs, list) and xs
                and all(isinstance(v, (int, float)) and not isinstance(v, bool)
                        and v > 0 for v in xs)
                and all(b > a for a, b in zip(xs, xs[1:])))
        if not good:
            problems.append("xs must be a strictly increasing list of positive numbers")
    reference = None
    if "reference" in cfg:
        reference = _dist_or_problem(cfg["reference"], "reference", problems)
    name = cfg.get("name", "")
    if not isinstance(name, str):
        problems.append(f"name must be a string, got {name!r}")

    if problems:
        raise ConfigError(problems)
    spec = NetworkSpec(arrival=arrival, services=tuple(services), p0=p0, routing=routing)
    return RunConfig(spec=spec, seed=seed, cycles=cycles, workers=workers,
                     x=None if x is None else float(x),
                     xs=None if xs is None else tuple(float(v) for v in xs),
                     reference=reference, name=name, raw=cfg)


def load_config(path: str) -> RunConfig:
    with open(path) as fh:
        try:
            cfg = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError([f"not valid JSON: {exc}"]) from exc
    return parse_config(cfg)


def spec_to_config(spec: NetworkSpec, **extra) -> dict:
    """Round-trip helper, mostly for tests and demo scripts."""
    cfg = {
        "schema": SCHEMA_VERSION,
        "arrival": spec.arrival.as_config(),
        "services": [d.as_config() for d in spec.services],
        "p0": spec.p0.tolist(),
        "routing": spec.routing.tolist(),
    }
    cfg.update(extra)
    return cfg
