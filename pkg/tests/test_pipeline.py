import dataclasses

import numpy as np
import pytest

from conftest import config_path
from rulenet.pipeline import (ConfigError, Prepared, RunConfig, StageError,
                              config_from_dict, load_config, run_experiment,
                              run_pipeline)
from rulenet.training import TrainConfig


def golf_config(**over):
    cfg = load_config(config_path("golf"))
    return dataclasses.replace(cfg, **over) if over else cfg


def test_load_config_round_trip():
    cfg = load_config(config_path("breast_cancer"))
    assert cfg.split == (350, 349)
    assert cfg.validation_fraction == 0.2
    assert cfg.train.valid_error_target == 5.0
    assert cfg.prune.retrain_epochs_cap == 30
    assert cfg.seeds == tuple(range(10))


def test_load_config_overrides():
    cfg = load_config(config_path("golf"), ["train.learning_rate=0.9",
                                            "seeds=[1,2]"])
    assert cfg.train.learning_rate == 0.9
    assert cfg.seeds == (1, 2)


def test_config_rejects_unknown_keys():
    with pytest.raises(ConfigError, match="unknown"):
        config_from_dict({"dataset": "x", "schema": "y", "bogus": 1})
    with pytest.raises(ConfigError, match="unknown train"):
        config_from_dict({"dataset": "x", "schema": "y",
                          "train": {"momentum": 0.9}})


def test_config_validates_values():
    with pytest.raises(ConfigError):
        config_from_dict({"dataset": "x", "schema": "y", "seeds": []})
    with pytest.raises(ConfigError):
        config_from_dict({"dataset": "x", "schema": "y",
                          "train": {"learning_rate": 5.0}})
    with pytest.raises(ConfigError):
        config_from_dict({"dataset": "x", "schema": "y",
                          "rule_delete_order": "random"})


def test_degenerate_single_pattern_dataset(tmp_path):
    data = tmp_path / "one.csv"
    data.write_text("1.0,first\n")
    schema = tmp_path / "one.schema.json"
    schema.write_text('{"attributes": [{"name": "x", "kind": "continuous"}],'
                      ' "classes": ["first", "second"]}')
    cfg = RunConfig(dataset=str(data), schema=str(schema), split=None,
                    validation_fraction=0.0,
                    train=TrainConfig(max_epochs=40,
                                      valid_error_target=float("inf")))
    res = run_pipeline(cfg, seed=0)
    assert res.row.rules == 1              # default only
    assert res.row.acc_train_rules == 1.0
    assert res.ruleset.rules == []


def test_pipeline_row_counts_are_consistent(experiments):
    report, results = experiments["golf"]
    for row in report.rows:
        assert row.epochs == row.epochs_constructive + row.epochs_pruning
        assert row.init_nodes == 7 + 1 + 2      # one-hot golf inputs
        assert row.init_conns == 7 + 2
        res = results[row.seed]
        assert row.final_conns == res.network.connection_count()
        assert row.rules == len(res.ruleset.rules) + 1


def test_experiment_aggregates_match_recomputation(experiments):
    report, _ = experiments["golf"]
    agg = report.aggregate()
    for name, (mean, lo, hi) in agg.items():
        vals = [getattr(r, name) for r in report.rows]
        assert mean == pytest.approx(float(np.mean(vals)))
        assert lo == min(vals)
        assert hi == max(vals)


def test_single_seed_mean_min_max_coincide():
    cfg = golf_config(seeds=(3,))
    report, _ = run_experiment(cfg)
    for name, (mean, lo, hi) in report.aggregate().items():
        assert mean == pytest.approx(lo) == pytest.approx(hi)


def test_experiment_reports_are_reproducible():
    cfg = golf_config(seeds=(0, 1))
    a, _ = run_experiment(cfg)
    b, _ = run_experiment(cfg)
    assert a.to_csv() == b.to_csv()
    assert a.to_text() == b.to_text()


def test_report_csv_parses_back(experiments):
    report, _ = experiments["golf"]
    lines = report.to_csv().strip().splitlines()
    header = lines[0].split(",")
    assert header[0] == "seed"
    assert lines[-3].split(",")[0] == "mean"
    data_rows = lines[1:1 + len(report.rows)]
    got = [float(r.split(",")[header.index("acc_train_rules")])
           for r in data_rows]
    assert got == [r.acc_train_rules for r in report.rows]


def test_stage_errors_carry_the_stage_tag(monkeypatch):
    import rulenet.pipeline as P

    def boom(*a, **k):
        raise RuntimeError("synthetic failure")

    monkeypatch.setattr(P, "search_epsilon", boom)
    cfg = golf_config(seeds=(0,))
    with pytest.raises(StageError) as err:
        run_pipeline(cfg, 0)
    assert err.value.stage == "cluster"


def test_experiment_records_failures_and_continues(monkeypatch):
    import rulenet.pipeline as P

    real = P.run_pipeline

    def flaky(cfg, seed, prepared=None):
        if seed == 1:
            raise StageError("train", RuntimeError("synthetic"))
        return real(cfg, seed, prepared=prepared)

    monkeypatch.setattr(P, "run_pipeline", flaky)
    report, _ = P.run_experiment(golf_config(seeds=(0, 1, 2)))
    assert len(report.rows) == 2
    assert report.failures == [(1, "train", "synthetic")]
    assert "seed 1 failed in train" in report.to_text()


def test_step6_loop_reverts_below_floor(monkeypatch):
    """If rule pruning drops accuracy below the floor, the previous rule
    set is kept."""
    import rulenet.pipeline as P
    from rulenet.rules import RuleSet

    calls = {"n": 0}
    real = P.prune_rules

    def lossy(rs, table, order="largest"):
        calls["n"] += 1
        out = real(rs, table, order)
        if calls["n"] == 1:
            out = RuleSet([], 0, rs.attributes, rs.class_names)  # destroy it
        return out

    monkeypatch.setattr(P, "prune_rules", lossy)
    cfg = golf_config(seeds=(0,))
    res = P.run_pipeline(cfg, 0)
    assert res.row.acc_train_rules == 1.0  # revert kept the merged rules
    assert len(res.ruleset.rules) >= 1


def test_validation_is_carved_from_train_block():
    cfg = load_config(config_path("breast_cancer"))
    prep = Prepared(cfg)
    assert len(prep.X_tr) == 280
    assert len(prep.X_va) == 70
    assert len(prep.X_tb) == 350
    assert len(prep.X_te) == 349
