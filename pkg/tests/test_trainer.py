import json
import math
import os

import numpy as np
import pytest

from code_lab import generator as gen
from code_lab.nn import RandomStream
from code_lab.trainer import (Trainer, TrainingConfig, alp_reward, cl_design, dr_design, metrics_header,
                              read_metrics, rows_to_csv)
from code_lab.webenv import SKIP


def tiny(**kw):
    base = dict(seed=3, iterations=4, catalog="restricted", max_pages=2, budget=4, gen_hidden=8,
                learner_embed=6, learner_hidden=8, eval_suite="none")
    base.update(kw)
    return TrainingConfig(**base)


def test_config_validation():
    with pytest.raises(ValueError):
        TrainingConfig(beta=0.0, delta=0.5)
    with pytest.raises(ValueError):
        TrainingConfig(alpha=1.5)
    with pytest.raises(ValueError):
        TrainingConfig(population=1, algo="code")
    with pytest.raises(ValueError):
        TrainingConfig(algo="nope")
    with pytest.raises(KeyError):
        TrainingConfig().with_overrides({"learning_rate": "1"})
    cfg = TrainingConfig().with_overrides({"alpha": "0.9", "frozen_learners": "true", "seed": "4"})
    assert cfg.alpha == 0.9 and cfg.frozen_learners and cfg.seed == 4
    assert TrainingConfig.from_dict(json.loads(cfg.to_json())) == cfg


def test_dr_design_statistics():
    cfg = TrainingConfig(seed=0)
    rng = RandomStream(0)
    n_steps, non_skip, k_zero = 0, 0, 0
    counts = {}
    for _ in range(3000):
        d = dr_design(rng, cfg)
        k_zero += d.num_pages == 0
        n_steps += len(d.placements)
        for p in d.real():
            non_skip += 1
            counts[p.primitive] = counts.get(p.primitive, 0) + 1
            assert 0 <= p.page < d.num_pages
    K, n = cfg.max_pages, len(cfg.primitive_names())
    expected = K / (K + 1) * n / (n + 1)
    assert abs(non_skip / n_steps - expected) < 0.01
    assert k_zero / 3000 == pytest.approx(1 / (K + 1), abs=0.02)
    mean = non_skip / n
    chi2 = sum((c - mean) ** 2 / mean for c in counts.values())
    assert len(counts) == n and chi2 < n - 1 + 3 * math.sqrt(2 * (n - 1))


def test_cl_design_probabilities():
    cfg = TrainingConfig(seed=0)
    rng = RandomStream(0)
    assert cl_design(rng, 0, cfg, p=0.0).real() == []
    assert len(cl_design(rng, 0, cfg, p=1.0).real()) == 40
    mean = np.mean([len(cl_design(rng, 0, cfg, p=0.5).real()) for _ in range(2000)])
    assert mean == pytest.approx(20, abs=0.5)
    assert len(cl_design(rng, cfg.iterations - 1, cfg).real()) == 40


def test_alp_reward():
    assert alp_reward(0.3, 0.3) == 0.0
    assert alp_reward(-1.0, 1.0) == 2.0


def test_code_step_regret_matches_returns():
    tr = Trainer(tiny())
    row = tr.step()
    returns = [row["return_agent_0"], row["return_agent_1"]]
    assert row["regret"] == pytest.approx(gen.pop_regret(returns))
    assert row["best_return"] == max(returns)
    assert row["gen_reward"] == pytest.approx(gen.generator_reward(row["regret"], row["difficulty"], 0.8))


def test_alpha_one_ignores_regret():
    tr = Trainer(tiny(alpha=1.0))
    for _ in range(3):
        row = tr.step()
        assert row["gen_reward"] == row["difficulty"]


def test_minimax_reward_sign():
    tr = Trainer(tiny(algo="minimax"))
    row = tr.step()
    assert row["gen_reward"] == -row["return_agent_0"]


def test_paired_fixed_roles():
    tr = Trainer(tiny(algo="paired"))
    for _ in range(3):
        row = tr.step()
        assert row["best_agent"] == 0


def test_dr_has_no_generator_update():
    tr = Trainer(tiny(algo="dr"))
    before = [p.value.copy() for p in tr.generator.parameters()]
    tr.step()
    assert all(np.array_equal(a, p.value) for a, p in zip(before, tr.generator.parameters()))


def test_frozen_learners_do_not_change():
    tr = Trainer(tiny(frozen_learners=True))
    before = [p.value.copy() for p in tr.agents[0].params.parameters()]
    tr.step()
    assert all(np.array_equal(a, p.value) for a, p in zip(before, tr.agents[0].params.parameters()))


def test_grid_domain_runs():
    tr = Trainer(tiny(domain="grid", grid_size=5, grid_hidden=8))
    row = tr.step()
    assert row["passive_count"] == 0 and row["non_skip"] == row["active_count"]


def test_run_outputs(tmp_path):
    cfg = tiny(checkpoint_every=2, eval_suite="login1", eval_episodes=1)
    Trainer(cfg).run(str(tmp_path))
    rows = read_metrics(str(tmp_path / "metrics.csv"))
    assert len(rows) == 4 and list(rows[0]) == metrics_header(cfg)
    for r in rows:
        returns = [float(r["return_agent_0"]), float(r["return_agent_1"])]
        assert float(r["regret"]) == gen.pop_regret(returns)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert "metrics.csv" in manifest["files"] and "eval.json" in manifest["files"]
    for tag in ("iter_000002", "iter_000004", "final"):
        names = os.listdir(tmp_path / "checkpoints" / tag)
        assert sorted(names) == ["agent_0.json", "agent_1.json", "config.json", "generator.json"]


def test_metrics_round_trip():
    cfg = tiny()
    rows = Trainer(cfg).run(iterations=2)
    text = rows_to_csv(rows, metrics_header(cfg))
    assert text.splitlines()[0].split(",") == metrics_header(cfg)
    assert text == rows_to_csv(Trainer(cfg).run(iterations=2), metrics_header(cfg))


def test_workers_match_serial():
    cfg = tiny()
    serial = rows_to_csv(Trainer(cfg).run(iterations=3), metrics_header(cfg))
    tr = Trainer(cfg.with_overrides({"workers": 2}))
    parallel = rows_to_csv(tr.run(iterations=3), metrics_header(cfg))
    tr.close()
    assert serial == parallel


def test_seed_required():
    with pytest.raises(ValueError):
        Trainer(TrainingConfig())
