import json
from fractions import Fraction

import pytest

from spreadcode.harness import (
    ConfigError,
    SEED_ENV_VAR,
    TraceError,
    config_from_dict,
    ingest_trace,
    load_config,
    run_experiment,
)


def write_trace(tmp_path, content):
    path = tmp_path / "trace.txt"
    path.write_text(content)
    return path


def base_config(**overrides):
    cfg = {
        "tau": 2,
        "b": 1,
        "m": 2,
        "source": {"kind": "trace", "sizes": [2]},
        "schemes": ["offline", "naive-f=k", "naive-f=0"],
        "loss": {"kind": "enumerate", "max_bursts": 2},
        "trials": 1,
        "seed": 5,
    }
    cfg.update(overrides)
    return cfg


def test_ingest_trace(tmp_path):
    assert ingest_trace(write_trace(tmp_path, "2\n0\n1\n")) == [2, 0, 1]
    assert ingest_trace(write_trace(tmp_path, "")) == []
    with pytest.raises(TraceError, match="trace.txt:1"):
        ingest_trace(write_trace(tmp_path, "x\n"))


def test_config_requires_schemes():
    with pytest.raises(ConfigError, match="schemes"):
        config_from_dict(base_config(schemes=[]))


def test_config_rejects_bare_online():
    with pytest.raises(ConfigError, match="online"):
        config_from_dict(base_config(schemes=["online"]))
    with pytest.raises(ConfigError, match="unknown scheme"):
        config_from_dict(base_config(schemes=["bogus"]))


def test_config_resolves_trace_path(tmp_path):
    trace = write_trace(tmp_path, "1\n2\n")
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(
        json.dumps(base_config(source={"kind": "trace", "path": "trace.txt"}))
    )
    cfg = load_config(cfg_path)
    assert cfg.trace == (1, 2)


def test_env_var_seed(monkeypatch):
    data = base_config()
    del data["seed"]
    monkeypatch.setenv(SEED_ENV_VAR, "123")
    assert config_from_dict(data).seed == 123
    monkeypatch.delenv(SEED_ENV_VAR)
    assert config_from_dict(data).seed == 0


def test_offline_row_on_worked_instance():
    result = run_experiment(config_from_dict(base_config()))
    rows = {r.scheme: r for r in result.rows}
    assert rows["offline"].rate == Fraction(2, 3)
    assert rows["offline"].sum_k == 2 and rows["offline"].sum_n == 3
    assert rows["offline"].regret == 0
    assert result.all_decoded
    assert all(r.decode_ok for r in result.rows)


def test_offline_never_loses_to_naive_baselines():
    for sizes in ([2], [1, 2, 0, 1], [2, 2, 2], [0, 1]):
        cfg = config_from_dict(
            base_config(source={"kind": "trace", "sizes": sizes})
        )
        rows = {r.scheme: r for r in run_experiment(cfg).rows}
        for naive in ("naive-f=k", "naive-f=0"):
            assert rows["offline"].rate >= rows[naive].rate
            assert rows[naive].regret >= 0


def test_empty_trace_gives_header_only_csv():
    cfg = config_from_dict(base_config(source={"kind": "trace", "sizes": []}))
    result = run_experiment(cfg)
    assert result.rows == ()
    assert result.csv == "trial,scheme,sum_k,sum_n,rate,regret,decode_ok,ms\n"


def test_csv_layout_and_reproducibility(tmp_path):
    data = base_config(
        source={"kind": "dist", "spec": {"kind": "iid", "probs": [0.3, 0.4, 0.3]}},
        schemes=["offline", {"name": "online", "samples": 10}, "naive-f=k"],
        trials=3,
        output=str(tmp_path / "out.csv"),
    )
    first = run_experiment(config_from_dict(data))
    second = run_experiment(config_from_dict(data))
    assert first.csv == second.csv
    assert (tmp_path / "out.csv").read_text() == first.csv
    header, *lines = first.csv.strip().split("\n")
    assert header == "trial,scheme,sum_k,sum_n,rate,regret,decode_ok,ms"
    assert len(lines) == 9
    for line in lines:
        fields = line.split(",")
        assert fields[6] == "true"
        assert fields[7] == "0"  # timing disabled by default


def test_timing_flag_emits_real_ms():
    result = run_experiment(config_from_dict(base_config(timing=True)))
    line = result.csv.strip().split("\n")[1]
    assert line.split(",")[7] != "0"


def test_online_scheme_requires_distribution():
    data = base_config(schemes=[{"name": "online", "samples": 5}])
    with pytest.raises(ConfigError, match="distribution"):
        run_experiment(config_from_dict(data))


def test_count_headers_increases_sum_n():
    plain = run_experiment(config_from_dict(base_config())).rows[0]
    counted = run_experiment(
        config_from_dict(base_config(count_headers=True))
    ).rows[0]
    # three nonempty packets, one extra header symbol each
    assert counted.sum_n == plain.sum_n + 3
    assert counted.rate == Fraction(2, 6)


def test_random_loss_mode():
    cfg = config_from_dict(
        base_config(loss={"kind": "random", "prob": 0.5, "seed": 3}, trials=4)
    )
    result = run_experiment(cfg)
    assert result.all_decoded
    assert len(result.rows) == 12
