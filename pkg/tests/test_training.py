import numpy as np
import pytest

from relex.errors import ConfigError, TrainingDivergedError
from relex.formats import PairSample
from relex.projection import ArchConfig
from relex.synth import SynthSpec, generate_synthetic
from relex.training import AdamW, GridCell, TrainConfig, grid_search, train


def toy_dataset(noise=0.0, samples=30, seed=0):
    spec = SynthSpec(
        num_classes=2,
        samples_per_cluster=samples,
        input_dim=6,
        cluster_count=2,
        label_sets_per_cluster=(frozenset({0}), frozenset({1})),
        noise_scale=noise,
        seed=seed,
    )
    return generate_synthetic(spec)


def toy_arch():
    return ArchConfig(input_dim=6, num_layers=2, width=16, output_dim=4)


def toy_config(**overrides):
    fields = dict(temperature=0.1, learning_rate=1e-2, batch_size=16,
                  max_epochs=8, patience=3, seed=0)
    fields.update(overrides)
    return TrainConfig(**fields)


class TestAdamW:
    def test_decoupled_decay_shrinks_weights_without_gradient(self):
        p = np.ones(4) * 2.0
        opt = AdamW(lr=0.1, weight_decay=0.5)
        opt.step([p], [np.zeros(4)])
        np.testing.assert_allclose(p, 2.0 - 0.1 * 0.5 * 2.0)

    def test_minimizes_quadratic(self):
        p = np.array([5.0])
        opt = AdamW(lr=0.1, weight_decay=0.0)
        for _ in range(300):
            opt.step([p], [2.0 * p])
        assert abs(p[0]) < 1e-2


class TestTrain:
    def test_loss_decreases_on_separable_toy(self):
        train_set, _ = toy_dataset(noise=0.0)
        model, history = train(train_set, None, toy_arch(), toy_config())
        assert history.train_losses[-1] < history.train_losses[0]
        assert history.best_epoch == int(np.argmin(history.monitored()))
        assert model.distance_mode == "euclidean"
        assert model.tau == pytest.approx(0.1)

    def test_early_stopping_on_plateau(self):
        train_set, _ = toy_dataset(noise=0.05)
        # learning rate so small that updates vanish below double precision:
        # monitored loss never strictly improves after the first epoch
        config = toy_config(learning_rate=1e-300, max_epochs=30, patience=4)
        _, history = train(train_set, train_set, toy_arch(), config)
        assert history.stop_reason == "early_stopping"
        assert history.best_epoch == 0
        assert len(history.train_losses) == 1 + config.patience
        assert history.val_losses is not None

    def test_runs_to_max_epochs_when_improving(self):
        train_set, _ = toy_dataset(noise=0.0)
        config = toy_config(max_epochs=4, patience=10)
        _, history = train(train_set, None, toy_arch(), config)
        assert history.stop_reason == "max_epochs"
        assert len(history.train_losses) == 4

    def test_returned_weights_are_best_epoch_weights(self):
        train_set, _ = toy_dataset(noise=0.1)
        # diverging learning rate makes late epochs worse than early ones
        config = toy_config(learning_rate=2.0, max_epochs=6, patience=6)
        model, history = train(train_set, train_set, toy_arch(), config)
        from relex.formats import inputs_matrix, labels_matrix
        from relex.training import evaluate_loss
        X = inputs_matrix(train_set)
        Y = labels_matrix(train_set, 2).astype(float)
        final = evaluate_loss(model, X, Y, config)
        assert final == pytest.approx(min(history.val_losses), abs=1e-9)

    def test_deterministic_given_seed(self):
        train_set, _ = toy_dataset(noise=0.1)
        model_a, hist_a = train(train_set, None, toy_arch(), toy_config(seed=7))
        model_b, hist_b = train(train_set, None, toy_arch(), toy_config(seed=7))
        assert hist_a.to_dict() == hist_b.to_dict()
        for wa, wb in zip(model_a.weights, model_b.weights):
            np.testing.assert_array_equal(wa, wb)

    def test_seed_changes_trajectory(self):
        train_set, _ = toy_dataset(noise=0.1)
        _, hist_a = train(train_set, None, toy_arch(), toy_config(seed=1))
        _, hist_b = train(train_set, None, toy_arch(), toy_config(seed=2))
        assert hist_a.train_losses != hist_b.train_losses

    def test_empty_train_set_rejected(self):
        with pytest.raises(ConfigError, match="empty train set"):
            train([], None, toy_arch(), toy_config())

    def test_batch_size_larger_than_train_set_rejected(self):
        train_set, _ = toy_dataset()
        with pytest.raises(ConfigError, match="batch_size"):
            train(train_set[:4], None, toy_arch(), toy_config(batch_size=16))

    def test_non_finite_loss_aborts_with_location(self):
        train_set, _ = toy_dataset()
        poisoned = list(train_set)
        poisoned[0] = PairSample("nan", np.full(6, np.nan), frozenset({0}))
        with pytest.raises(TrainingDivergedError, match="epoch 0"):
            train(poisoned, None, toy_arch(), toy_config())

    def test_config_invariants(self):
        with pytest.raises(ConfigError):
            toy_config(temperature=0.0)
        with pytest.raises(ConfigError):
            toy_config(batch_size=1)
        with pytest.raises(ConfigError):
            toy_config(patience=0)


class TestGridSearch:
    def test_single_cell_grid(self):
        train_set, test_set = toy_dataset(noise=0.05)
        cell = GridCell(arch=toy_arch(), config=toy_config(max_epochs=3),
                        k=5, c=0.5)
        results = grid_search(train_set, test_set, [cell])
        assert len(results) == 1
        assert results[0].status == "ok"
        assert 0.0 <= results[0].micro_f1 <= 1.0

    def test_failing_cell_is_marked_and_others_ranked(self):
        train_set, test_set = toy_dataset(noise=0.05)
        good = GridCell(arch=toy_arch(), config=toy_config(max_epochs=2), k=5, c=0.5)
        bad = GridCell(arch=toy_arch(), config=toy_config(max_epochs=2),
                       k=10_000, c=0.5)  # k exceeds the datastore
        results = grid_search(train_set, test_set, [bad, good])
        assert [r.status for r in results] == ["ok", "failed"]
        assert "exceeds" in results[1].error

    def test_absurd_learning_rate_ranks_last(self):
        train_set, test_set = toy_dataset(noise=0.0)
        sane = GridCell(arch=toy_arch(), config=toy_config(max_epochs=4), k=5, c=0.5)
        absurd = GridCell(arch=toy_arch(),
                          config=toy_config(max_epochs=4, learning_rate=10.0),
                          k=5, c=0.5)
        results = grid_search(train_set, test_set, [absurd, sane])
        ok = [r for r in results if r.status == "ok"]
        if len(ok) == 2:  # the absurd cell may instead have diverged outright
            assert ok[0].cell.config.learning_rate == pytest.approx(1e-2)
            assert ok[0].micro_f1 >= ok[1].micro_f1
        else:
            assert ok[0].cell.config.learning_rate == pytest.approx(1e-2)

    def test_ties_break_on_k_then_c(self):
        train_set, test_set = toy_dataset(noise=0.0)
        config = toy_config(max_epochs=2)
        cells = [GridCell(arch=toy_arch(), config=config, k=k, c=c)
                 for k, c in [(7, 0.5), (5, 0.6), (5, 0.5)]]
        results = grid_search(train_set, test_set, cells)
        scores = [r.micro_f1 for r in results]
        if scores[0] == scores[1] == scores[2]:
            assert [(r.cell.k, r.cell.c) for r in results] == \
                [(5, 0.5), (5, 0.6), (7, 0.5)]

    def test_empty_grid_rejected(self):
        train_set, test_set = toy_dataset()
        with pytest.raises(ConfigError, match="empty grid"):
            grid_search(train_set, test_set, [])

    def test_shared_train_config_is_trained_once(self, monkeypatch):
        import relex.training as train_mod
        calls = []
        original = train_mod.train

        def counting_train(*args, **kwargs):
            calls.append(1)
            return original(*args, **kwargs)

        monkeypatch.setattr(train_mod, "train", counting_train)
        train_set, test_set = toy_dataset(noise=0.05)
        config = toy_config(max_epochs=2)
        cells = [GridCell(arch=toy_arch(), config=config, k=k, c=0.5)
                 for k in (3, 5, 7)]
        grid_search(train_set, test_set, cells)
        assert len(calls) == 1
