import json
from pathlib import Path

import pytest

from market_rounds.core import ConfigurationError
from market_rounds.harness import (
    ExperimentConfig,
    compare_algos,
    load_config,
    run_batch,
    xos_exact_optimal_welfare,
)
from oracles import xos_opt_by_submask_dp
from market_rounds.instance_gen import gen_random_xos


def test_exact_protocol_ratio_one():
    config = ExperimentConfig(
        dist="w-random", dist_params={"n": 6, "w": 6}, algo="exact", seed_count=1
    )
    report = run_batch(config)
    assert report.records[0].ratio == 1.0
    assert report.records[0].opt_kind == "exact"


def test_w_random_simul_det_recovers_everything():
    config = ExperimentConfig(
        dist="w-random",
        dist_params={"n": 10, "w": 4},
        algo="simul-det",
        algo_params={"l": 16},
        seed_count=15,
    )
    report = run_batch(config)
    assert all(r.ratio == 1.0 for r in report.records)


def test_batch_replay_is_byte_identical(tmp_path):
    config = ExperimentConfig(
        dist="match-hard",
        dist_params={"n": 16},
        algo="k-round",
        algo_params={"k": 1},
        seed_count=200,
        out=str(tmp_path / "run"),
    )
    first = run_batch(config)
    csv_a = (tmp_path / "run.csv").read_bytes()
    json_a = (tmp_path / "run.json").read_bytes()
    run_batch(config)
    assert (tmp_path / "run.csv").read_bytes() == csv_a
    assert (tmp_path / "run.json").read_bytes() == json_a
    assert first.aggregates["ratio"]["mean"] >= 1.0


def test_parallel_workers_match_sequential(tmp_path):
    base = dict(
        dist="uniform",
        dist_params={"n": 8, "degree": 3},
        algo="auction",
        algo_params={"delta": "1/2"},
        seed_count=12,
    )
    seq = run_batch(ExperimentConfig(**base, workers=1, out=str(tmp_path / "seq")))
    par = run_batch(ExperimentConfig(**base, workers=2, out=str(tmp_path / "par")))
    assert (tmp_path / "seq.csv").read_text() == (tmp_path / "par.csv").read_text()
    assert seq.records == par.records


def test_per_seed_failures_recorded_and_batch_continues():
    # exact-mode proxy optimization over the cap fails per seed, batch survives
    config = ExperimentConfig(
        dist="planted-t",
        dist_params={"n_active": 3, "t": 4, "m": 30, "extra_clauses": 6},
        algo="ca-simul",
        algo_params={"t": 4, "mode": "exact"},
        seed_count=4,
    )
    report = run_batch(config)
    assert len(report.failed_seeds) == 4
    assert all("ProxyCapExceededError" in r.error for r in report.records)


def test_config_validation_rejects_mismatched_family():
    with pytest.raises(ConfigurationError):
        ExperimentConfig(
            dist="w-random", dist_params={"n": 4, "w": 2}, algo="ca-simul"
        ).validate()
    with pytest.raises(ConfigurationError):
        ExperimentConfig(
            dist="planted-t",
            dist_params={"n_active": 2, "t": 4, "m": 12},
            algo="auction",
        ).validate()


def test_planted_fallback_flagged():
    config = ExperimentConfig(
        dist="xos-hard",
        dist_params={"k": 2, "t_sets": 8},
        algo="ca-simul",
        algo_params={"t": 2},
        seed_count=2,
        combo_cap=1000,  # 8^8 clause combos blow past this
    )
    report = run_batch(config)
    assert all(r.opt_kind == "planted" for r in report.records)
    assert report.aggregates["ratio_basis"] == "planted-lower-bound"


def test_exact_welfare_oracle_agrees_with_dp():
    for seed in range(8):
        players, _ = gen_random_xos(2, 7, 2, 6, seed)
        assert xos_exact_optimal_welfare(players) == xos_opt_by_submask_dp(players, 7)


def test_compare_same_algo_twice_identical_columns(tmp_path):
    config = ExperimentConfig(
        dist="match-hard",
        dist_params={"n": 16},
        algo="k-round",
        algo_params={"k": 1},
        seed_count=10,
        out=str(tmp_path / "cmp"),
    )
    report = compare_algos(config, [("k-round", {"k": 1}), ("k-round", {"k": 1})])
    a, b = report.reports
    assert [r.welfare_alg for r in a.records] == [r.welfare_alg for r in b.records]
    assert report.paired["k-round_vs_k-round"]["mean_delta_welfare"] == 0.0


def test_compare_auction_deltas_paired():
    config = ExperimentConfig(
        dist="uniform",
        dist_params={"n": 12, "degree": 3},
        algo="auction",
        seed_count=40,
    )
    report = compare_algos(
        config,
        [("auction", {"delta": "1/2"}), ("auction", {"delta": "1/4"})],
    )
    coarse, fine = report.reports
    mean_coarse = coarse.aggregates["welfare"]["mean"]
    mean_fine = fine.aggregates["welfare"]["mean"]
    stderr = report.paired["auction_vs_auction"]["stderr_delta_welfare"]
    assert mean_fine >= mean_coarse - 3 * stderr


def test_k_round_ratio_nonincreasing_in_k():
    config = ExperimentConfig(
        dist="match-hard",
        dist_params={"n": 16},
        algo="k-round",
        seed_count=80,
    )
    report = compare_algos(
        config,
        [("k-round", {"k": 1}), ("k-round", {"k": 2}), ("k-round", {"k": 3})],
    )
    means = [rep.aggregates["ratio"]["mean"] for rep in report.reports]
    stderrs = [
        rep.aggregates["ratio"]["stddev"] / len(rep.records) ** 0.5
        for rep in report.reports
    ]
    for i in range(1, 3):
        assert means[i] <= means[i - 1] + 2 * (stderrs[i] + stderrs[i - 1])


def test_load_config_toml_and_json(tmp_path):
    toml_path = tmp_path / "cfg.toml"
    toml_path.write_text(
        """
dist = "w-random"
algo = "exact"
seed_count = 2

[dist_params]
n = 5
w = 3
""",
        encoding="utf-8",
    )
    cfg = load_config(toml_path)
    assert cfg.dist == "w-random"
    assert cfg.dist_params == {"n": 5, "w": 3}

    json_path = tmp_path / "cfg.json"
    json_path.write_text(
        json.dumps(
            {
                "dist": "uniform",
                "dist_params": {"n": 6, "degree": 2},
                "algo": "auction",
                "algo_params": {"delta": "1/2"},
                "seed_count": 3,
            }
        ),
        encoding="utf-8",
    )
    cfg2 = load_config(json_path)
    assert cfg2.algo == "auction"
    assert cfg2.seed_count == 3


def test_load_config_rejects_unknown_keys(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"dist": "uniform", "algo": "exact", "bogus": 1}))
    with pytest.raises(ConfigurationError):
        load_config(path)


def test_bits_match_transcript_recomputation():
    config = ExperimentConfig(
        dist="match-hard",
        dist_params={"n": 16},
        algo="auction",
        algo_params={"delta": "1/4"},
        seed_count=5,
        keep_transcripts=True,
    )
    report = run_batch(config)
    for r in report.records:
        assert r.transcript["total_bits"] == r.total_bits
        recomputed = sum(
            bits for rnd in r.transcript["rounds"] for _, _, bits in rnd
        )
        assert recomputed == r.total_bits
