import json

import pytest

from conftest import two_station
from gjntail import ConfigError, load_config, parse_config
from gjntail.config import canonical_hash, spec_to_config


def good_config():
    return {
        "schema": 1,
        "arrival": {"kind": "exponential", "mean": 1.0},
        "services": [
            {"kind": "shifted_pareto", "alpha": 1.5, "scale": 0.25},
            {"kind": "exponential", "mean": 1.0},
        ],
        "p0": [1.0, 0.0],
        "routing": [[0.0, 0.3, 0.7], [0.3, 0.0, 0.7]],
        "seed": 42,
        "cycles": 1000,
    }


def test_parse_roundtrip():
    run = parse_config(good_config())
    assert run.seed == 42 and run.cycles == 1000
    assert run.spec.n_stations == 2
    assert run.spec.services[0].alpha == 1.5
    again = parse_config(spec_to_config(run.spec, seed=42, cycles=1000))
    assert again.spec.arrival == run.spec.arrival
    assert (again.spec.p0 == run.spec.p0).all()
    assert (again.spec.routing == run.spec.routing).all()


def test_defaults():
    cfg = good_config()
    del cfg["seed"], cfg["cycles"]
    run = parse_config(cfg)
    assert run.seed == 1 and run.cycles == 1_000_000
    assert run.workers is None and run.x is None and run.xs is None


def test_hash_ignores_key_order():
    a = good_config()
    b = dict(reversed(list(a.items())))
    assert json.dumps(a) != json.dumps(b)
    assert parse_config(a).sha256 == parse_config(b).sha256
    c = good_config()
    c["seed"] = 43
    assert parse_config(a).sha256 != parse_config(c).sha256
    assert canonical_hash(a) == parse_config(a).sha256


def test_all_problems_reported_at_once():
    cfg = good_config()
    cfg["schema"] = 7
    cfg["typo_key"] = 1
    cfg["seed"] = "abc"
    cfg["cycles"] = True
    cfg["services"][1] = {"kind": "exponential"}          # missing mean
    cfg["p0"] = [0.5, 0.4, 0.1]                           # wrong length
    with pytest.raises(ConfigError) as err:
        parse_config(cfg)
    text = str(err.value)
    probs = err.value.problems
    assert len(probs) >= 5
    for frag in ("schema", "typo_key", "seed", "cycles", "mean", "p0"):
        assert frag in text, frag


def test_matrix_problems_surface():
    cfg = good_config()
    cfg["routing"][0] = [0.0, 0.8, 0.8]
    with pytest.raises(ConfigError, match="row 0"):
        parse_config(cfg)
    cfg = good_config()
    cfg["routing"] = [[0.0, 1.0, 0.0], [1.0, 0.0, 0.0]]   # no exit: sr = 1
    with pytest.raises(ConfigError, match="spectral"):
        parse_config(cfg)


def test_xs_validation():
    cfg = good_config()
    cfg["xs"] = [1.0, 1.0, 2.0]
    with pytest.raises(ConfigError, match="increasing"):
        parse_config(cfg)
    cfg["xs"] = [-1.0, 2.0]
    with pytest.raises(ConfigError, match="positive"):
        parse_config(cfg)
    cfg["xs"] = [0.5, 2.0]
    assert parse_config(cfg).xs == (0.5, 2.0)


def test_reference_and_name():
    cfg = good_config()
    cfg["reference"] = {"kind": "pareto", "alpha": 1.5, "xm": 1.0}
    cfg["name"] = "demo"
    run = parse_config(cfg)
    assert run.reference.alpha == 1.5 and run.name == "demo"
    cfg["reference"] = {"kind": "nope"}
    with pytest.raises(ConfigError, match="kind"):
        parse_config(cfg)


def test_load_config_errors(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ConfigError, match="JSON"):
        load_config(p)
    q = tmp_path / "good.json"
    q.write_text(json.dumps(good_config()))
    assert load_config(q).seed == 42


def test_spec_to_config_parses_back():
    spec = two_station(1.0, 0.4, 0.5, 0.6, 0.2, 0.1)
    cfg = spec_to_config(spec, seed=9, x=30.0)
    run = parse_config(cfg)
    assert run.x == 30.0
    assert run.spec.p0[0] == pytest.approx(0.6)
