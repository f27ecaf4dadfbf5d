import pytest

from regsim.config import ConfigError, parse_scenario


def minimal(**over):
    data = {
        "n": 3,
        "t": 1,
        "algorithm": "teff",
        "network": {"kind": "bounded_delay", "Delta": 10},
        "ops": [
            {"time": 0, "process": 1, "op": "write", "value": "a"},
            {"time": 50, "process": 2, "op": "read"},
        ],
        "seed": 1,
    }
    data.update(over)
    return data


def test_valid_scenario_parses():
    cfg = parse_scenario(minimal())
    assert cfg.n == 3 and cfg.t == 1
    assert cfg.ops[0].value == b"a"
    assert cfg.digest


def test_model_constraint_rejected():
    with pytest.raises(ConfigError, match="2t < n"):
        parse_scenario(minimal(n=4, t=2))


def test_unknown_algorithm_rejected():
    with pytest.raises(ConfigError, match="algorithm"):
        parse_scenario(minimal(algorithm="paxos"))


def test_write_by_non_writer_rejected():
    ops = [{"time": 0, "process": 2, "op": "write", "value": "a"}]
    with pytest.raises(ConfigError, match="writer"):
        parse_scenario(minimal(ops=ops))


def test_too_many_crashes_rejected():
    crashes = [{"process": 2, "at": 5}, {"process": 3, "at": 5}]
    with pytest.raises(ConfigError, match="t=1"):
        parse_scenario(minimal(crashes=crashes))


def test_crash_trigger_must_be_single():
    crashes = [{"process": 2, "at": 5, "during_forward": {"wsn": 1, "deliver_to": []}}]
    with pytest.raises(ConfigError, match="exactly one"):
        parse_scenario(minimal(crashes=crashes))


def test_during_broadcast_ownership_checked():
    crashes = [
        {"process": 2, "during_broadcast": {"op_index": 0, "deliver_to": []}}
    ]
    with pytest.raises(ConfigError, match="belongs to process"):
        parse_scenario(minimal(crashes=crashes))


def test_crash_window_needs_async_time():
    crashes = [
        {
            "process": 1,
            "during_broadcast": {"op_index": 0, "deliver_to": [], "crash_at": 3},
        }
    ]
    cfg = parse_scenario(minimal(crashes=crashes))
    assert cfg.crashes[0].crash_at == 3

    with pytest.raises(ConfigError, match="round_sync"):
        parse_scenario(
            minimal(network={"kind": "round_sync", "delta": 1}, crashes=crashes)
        )


def test_during_forward_is_register_protocol_only():
    crashes = [{"process": 2, "during_forward": {"wsn": 1, "deliver_to": [3]}}]
    with pytest.raises(ConfigError, match="teff only"):
        parse_scenario(minimal(algorithm="abd", crashes=crashes))


def test_delay_schedule_bounded_by_delta():
    net = {
        "kind": "bounded_delay",
        "Delta": 10,
        "schedule": {"mode": "fixed", "delay": 11},
    }
    with pytest.raises(ConfigError, match="exceeds Delta"):
        parse_scenario(minimal(network=net))


def test_increasing_schedule_is_async_only():
    net = {
        "kind": "bounded_delay",
        "Delta": 10,
        "schedule": {"mode": "increasing"},
    }
    with pytest.raises(ConfigError, match="async only"):
        parse_scenario(minimal(network=net))


def test_round_sync_rejects_schedules_and_overrides():
    net = {"kind": "round_sync", "delta": 2, "schedule": {"mode": "fixed", "delay": 2}}
    with pytest.raises(ConfigError, match="no schedule"):
        parse_scenario(minimal(network=net))
    net = {"kind": "round_sync", "delta": 2, "overrides": [{"from": 1, "to": 2, "delay": 1}]}
    with pytest.raises(ConfigError, match="no overrides"):
        parse_scenario(minimal(network=net))


def test_unknown_option_rejected():
    with pytest.raises(ConfigError, match="unknown option"):
        parse_scenario(minimal(options={"typo": True}))


def test_empty_write_value_rejected():
    ops = [{"time": 0, "process": 1, "op": "write", "value": ""}]
    with pytest.raises(ConfigError, match="value"):
        parse_scenario(minimal(ops=ops))
