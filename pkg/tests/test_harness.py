"""
Test Suite for the meta-learning harness

Meta-training, meta-evaluation, generalization sweeps, baselines, worker
pools and the CSV/JSON reports.
"""
import io
import json
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from episodes import gen_sine_episode, make_generator
from episodes.seeding import BASELINE, INIT, META_TEST, derive_rng
from exceptions.sbmcl_exceptions import (
    ConfigException,
    DivergenceException,
    HeadMismatchException,
    SBMCLException,
)
from harness import (
    LOSS_CURVE_COLUMNS,
    NUM_THREADS_ENV,
    MetaTrainer,
    TrainerState,
    baseline_offline,
    baseline_online,
    episode_scores,
    map_ordered,
    meta_eval,
    meta_train,
    metrics_csv,
    read_metrics_csv,
    summarize,
    sweep_generalization,
    trunk_model,
    worker_count,
    write_loss_curve_csv,
    write_metrics_csv,
    write_metrics_json,
)
from harness.baselines import trunk_score
from mocks import MockEpisodeGenerator
from models import Domain, HeadKind, MetaConfig, MetricsRow, PredictMode, StreamSpec
from networks import build_head

SINE = StreamSpec(domain=Domain.SINE, num_tasks=2, shots=3, test_per_task=2, seed=31, task_slots=4)
CLASSIFY = StreamSpec(domain=Domain.CLASSIFY, num_tasks=3, shots=2, test_per_task=2, seed=32,
                      input_dim=3)


def tiny_config(head=HeadKind.ALPACA, stream=SINE, **overrides):
    base = dict(head=head, stream=stream, z_dim=2, hidden_sizes=(4,), feature_dim=3, n_z=2,
                meta_batch=2, steps=3, meta_train_episodes=50, eval_episodes=4, max_classes=4,
                mixture_components=2, lr=1e-2, offline_steps=4, offline_batch=3,
                offline_eval_every=2, log_every=1)
    base.update(overrides)
    return MetaConfig(**base)


def same_params(a, b):
    return list(a) == list(b) and all(a[k].tobytes() == b[k].tobytes() for k in a)


class TestMetaTrainer:
    """Meta-training loop."""

    def test_zero_steps_returns_initialization(self):
        config = tiny_config(steps=0)
        checkpoint = meta_train(config)
        expected = build_head(config).init_params(derive_rng(config.seed, INIT))
        assert same_params(checkpoint.params, expected)
        assert checkpoint.loss_curve == []

    def test_state_and_loss_curve(self):
        trainer = MetaTrainer(tiny_config())
        assert trainer.get_state() is TrainerState.IDLE
        checkpoint = trainer.train()
        assert trainer.get_state() is TrainerState.FINISHED
        assert [step for step, _ in checkpoint.loss_curve] == [0, 1, 2]
        assert all(np.isfinite(loss) for _, loss in checkpoint.loss_curve)
        assert trainer.step_count == 3

    def test_parameters_change(self):
        config = tiny_config(steps=1)
        checkpoint = meta_train(config)
        initial = build_head(config).init_params(derive_rng(config.seed, INIT))
        assert not same_params(checkpoint.params, initial)

    @pytest.mark.parametrize("head,stream", [
        (HeadKind.ALPACA, SINE), (HeadKind.GENERIC, SINE), (HeadKind.PN, CLASSIFY),
    ])
    def test_runs_are_bit_reproducible(self, head, stream):
        config = tiny_config(head, stream)
        assert same_params(meta_train(config).params, meta_train(config).params)

    def test_thread_count_does_not_change_result(self):
        config = tiny_config(HeadKind.GEMCL, CLASSIFY, meta_batch=4)
        single = meta_train(config, num_threads=1)
        pooled = meta_train(config, num_threads=4)
        assert same_params(single.params, pooled.params)
        assert single.loss_curve == pooled.loss_curve

    def test_different_seeds_differ(self):
        a = meta_train(tiny_config(seed=1, steps=0))
        b = meta_train(tiny_config(seed=2, steps=0))
        assert not same_params(a.params, b.params)

    def test_episodes_drawn_in_order_with_wraparound(self):
        episodes = [gen_sine_episode(SINE, i) for i in range(3)]
        generator = MockEpisodeGenerator(episodes)
        trainer = MetaTrainer(tiny_config(steps=2), generator=generator, num_threads=1)
        trainer.train()
        assert generator.requested == [0, 1, 2, 0]
        assert trainer.episode_indices(2) == [1, 2]

    def test_non_finite_episode_diverges(self):
        episode = gen_sine_episode(SINE)
        episode.train_x[0, 0] = np.nan
        trainer = MetaTrainer(tiny_config(HeadKind.GENERIC), generator=MockEpisodeGenerator([episode]))
        with pytest.raises(DivergenceException) as exc_info:
            trainer.train()
        assert exc_info.value.step == 0
        assert trainer.get_state() is TrainerState.DIVERGED
        with pytest.raises(SBMCLException):
            trainer.train()

    def test_explicit_step_count(self):
        trainer = MetaTrainer(tiny_config(steps=10))
        checkpoint = trainer.train(steps=1)
        assert len(checkpoint.loss_curve) == 1


class TestMetaEval:
    """Meta-test scoring of a checkpoint."""

    @pytest.fixture(scope="class")
    def checkpoint(self):
        return meta_train(tiny_config(steps=2))

    def test_row_fields(self, checkpoint):
        row = meta_eval(checkpoint)
        assert row.head == "alpaca" and row.metric == "mse"
        assert (row.num_tasks, row.shots, row.n_runs, row.seed) == (2, 3, 4, 31)
        assert np.isfinite(row.mean) and row.std >= 0.0

    def test_repeatable_and_thread_independent(self, checkpoint):
        a = meta_eval(checkpoint, num_threads=1)
        b = meta_eval(checkpoint, num_threads=3)
        assert a == b

    def test_parameters_are_not_modified(self, checkpoint):
        before = {k: v.copy() for k, v in checkpoint.params.items()}
        meta_eval(checkpoint, mode=PredictMode.MC)
        assert same_params(before, checkpoint.params)

    def test_sequential_and_batch_paths_agree(self, checkpoint):
        seq = meta_eval(checkpoint, sequential=True)
        bat = meta_eval(checkpoint, sequential=False)
        assert seq.mean == pytest.approx(bat.mean, rel=1e-8, abs=1e-12)

    def test_scores_come_from_meta_test_episodes(self, checkpoint):
        generator = make_generator(SINE, META_TEST, 4)
        assert episode_scores(checkpoint, SINE, 4) == episode_scores(checkpoint, SINE, 4,
                                                                     generator=generator)

    def test_other_domain_rejected(self, checkpoint):
        with pytest.raises(HeadMismatchException):
            meta_eval(checkpoint, CLASSIFY)

    def test_other_input_width_rejected(self, checkpoint):
        wider = StreamSpec(domain=Domain.SINE, num_tasks=2, shots=3, seed=31, task_slots=5)
        with pytest.raises(HeadMismatchException):
            meta_eval(checkpoint, wider)

    def test_classification_error_rate_in_range(self):
        checkpoint = meta_train(tiny_config(HeadKind.PN, CLASSIFY, steps=1))
        row = meta_eval(checkpoint)
        assert row.metric == "error_rate" and 0.0 <= row.mean <= 1.0

    def test_untrained_generic_classifier_is_near_chance(self):
        """Ten classes and no meta-training: about nine queries in ten are wrong."""
        stream = StreamSpec(domain=Domain.CLASSIFY, num_tasks=10, shots=2, test_per_task=5, seed=33)
        config = tiny_config(HeadKind.GENERIC, stream, steps=0, z_dim=4, hidden_sizes=(16,),
                             max_classes=10, eval_episodes=40)
        row = meta_eval(meta_train(config))
        assert 0.75 <= row.mean <= 1.0

    def test_summarize_uses_population_std(self):
        row = summarize("pn", CLASSIFY, "error_rate", [0.0, 1.0])
        assert row.mean == 0.5 and row.std == 0.5 and row.n_runs == 2


class TestSweep:
    """Generalization sweeps over (K, shots) grids."""

    @pytest.fixture(scope="class")
    def checkpoint(self):
        return meta_train(tiny_config(steps=1))

    def test_rows_follow_grid_order(self, checkpoint):
        rows = sweep_generalization(checkpoint, task_grid=[1, 3], shot_grid=[2, 1], n_episodes=2)
        assert [row.setting for row in rows] == [(1, 2), (1, 1), (3, 2), (3, 1)]
        assert all(row.n_runs == 2 for row in rows)

    def test_cells_match_direct_evaluation(self, checkpoint):
        rows = sweep_generalization(checkpoint, task_grid=[3], shot_grid=[2], n_episodes=2)
        direct = meta_eval(checkpoint, SINE.with_setting(3, 2), 2)
        assert rows[0] == direct

    def test_empty_grid_rejected(self, checkpoint):
        with pytest.raises(ValueError):
            sweep_generalization(checkpoint, task_grid=[], shot_grid=[1])


class TestBaselines:
    """Online and offline reference learners."""

    def _untrained_scores(self, config, spec, n):
        model = trunk_model(config, spec)
        generator = make_generator(spec, META_TEST, n)
        return [trunk_score(model, model.init_params(derive_rng(spec.seed, BASELINE, i)),
                            generator.episode(i)) for i in range(n)]

    def test_online_with_zero_rate_scores_initialization(self):
        config = tiny_config()
        row = baseline_online(config, n_episodes=3, lr=0.0)
        assert row.head == "online" and row.metric == "mse"
        assert row.mean == pytest.approx(np.mean(self._untrained_scores(config, SINE, 3)), rel=1e-12)

    def test_offline_with_zero_cap_scores_initialization(self):
        config = tiny_config()
        row = baseline_offline(config, n_episodes=3, steps=0)
        assert row.head == "offline"
        assert row.mean == pytest.approx(np.mean(self._untrained_scores(config, SINE, 3)), rel=1e-12)

    def test_offline_best_score_never_worse_than_initialization(self):
        config = tiny_config()
        trained = baseline_offline(config, n_episodes=3, steps=4)
        untrained = self._untrained_scores(config, SINE, 3)
        assert trained.mean <= np.mean(untrained) + 1e-12

    def test_classification_baselines(self):
        config = tiny_config(HeadKind.PN, CLASSIFY)
        online = baseline_online(config, n_episodes=2)
        offline = baseline_offline(config, n_episodes=2)
        assert online.metric == offline.metric == "error_rate"
        assert 0.0 <= online.mean <= 1.0 and 0.0 <= offline.mean <= 1.0

    def test_baselines_are_reproducible(self):
        config = tiny_config()
        assert baseline_online(config, n_episodes=2) == baseline_online(config, n_episodes=2)
        assert baseline_offline(config, n_episodes=2) == baseline_offline(config, n_episodes=2)


class TestWorkers:
    """Ordered thread pool."""

    def test_worker_count_from_environment(self, monkeypatch):
        monkeypatch.delenv(NUM_THREADS_ENV, raising=False)
        assert worker_count() == 1
        monkeypatch.setenv(NUM_THREADS_ENV, "3")
        assert worker_count() == 3

    @pytest.mark.parametrize("raw", ["zero", "0", "-2"])
    def test_bad_worker_count(self, monkeypatch, raw):
        monkeypatch.setenv(NUM_THREADS_ENV, raw)
        with pytest.raises(ConfigException) as exc_info:
            worker_count()
        assert exc_info.value.key == NUM_THREADS_ENV

    def test_results_keep_item_order(self):
        assert map_ordered(lambda i: i * i, range(20), workers=4) == [i * i for i in range(20)]
        assert map_ordered(lambda i: i * i, [], workers=4) == []


class TestReporting:
    """CSV and JSON artifacts."""

    @pytest.fixture
    def rows(self):
        return [
            MetricsRow("pn", 10, 5, "error_rate", 0.125, 0.03125, 512, seed=7),
            MetricsRow("pn", 20, 5, "error_rate", 1 / 3, 0.1, 512, seed=7),
        ]

    def test_csv_layout(self, rows):
        lines = metrics_csv(rows).splitlines()
        assert lines[0] == "head,K,shots,metric,mean,std,n,seed"
        assert lines[1] == "pn,10,5,error_rate,0.125,0.03125,512,7"

    def test_csv_reads_back(self, rows, tmp_path):
        path = str(tmp_path / "metrics.csv")
        write_metrics_csv(rows, path)
        assert read_metrics_csv(path) == rows
        buffer = io.StringIO()
        write_metrics_csv(rows, buffer)
        assert read_metrics_csv(io.StringIO(buffer.getvalue())) == rows

    def test_bad_header_rejected(self):
        with pytest.raises(ValueError):
            read_metrics_csv(io.StringIO("a,b\n1,2\n"))

    def test_json_summary(self, rows):
        buffer = io.StringIO()
        write_metrics_json(rows, buffer, extra={"checkpoint": "run.ckpt"})
        document = json.loads(buffer.getvalue())
        assert document["checkpoint"] == "run.ckpt"
        assert document["rows"][1]["K"] == 20 and document["rows"][1]["mean"] == 1 / 3

    def test_loss_curve_csv(self):
        buffer = io.StringIO()
        write_loss_curve_csv([(0, 2.5), (1, 0.1)], buffer)
        assert buffer.getvalue() == ",".join(LOSS_CURVE_COLUMNS) + "\n0,2.5\n1,0.1\n"
