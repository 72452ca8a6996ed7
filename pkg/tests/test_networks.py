"""
Test Suite for the learner and model networks and the episode objectives
"""
import math
import os
import sys
from dataclasses import replace

import numpy as np
import pytest
from scipy.integrate import trapezoid
from scipy.special import expit, softmax

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from episodes import gen_classify_episode, gen_density_episode, gen_sine_episode, make_generator
from exceptions.sbmcl_exceptions import (
    HeadMismatchException,
    NonFiniteException,
    ShapeMismatchException,
)
from mocks import MockLearner
from models import Domain, HeadKind, MetaConfig, PredictMode, StreamSpec
from networks import (
    MLP,
    GenericHead,
    LearnerNet,
    Likelihood,
    ModelNet,
    Prediction,
    TargetKind,
    as_constants,
    elbo_supervised,
    elbo_unsupervised,
    encode_targets,
    error_rate,
    learn_stream,
    mse,
    nll,
    predict,
)
from posteriors import FactorizedGaussian
from tests.gradcheck import analytic_grads, numeric_grad, relative_error

SINE = StreamSpec(domain=Domain.SINE, num_tasks=2, shots=3, test_per_task=2, seed=4, task_slots=4)
CLASSIFY = StreamSpec(domain=Domain.CLASSIFY, num_tasks=3, shots=2, test_per_task=2, seed=5,
                      input_dim=3)
DENSITY = StreamSpec(domain=Domain.DENSITY, num_tasks=2, shots=3, test_per_task=2, seed=6,
                     input_dim=2)


def tiny_config(spec, **overrides):
    base = dict(head=HeadKind.GENERIC, stream=spec, z_dim=2, hidden_sizes=(4, 4), n_z=3,
                max_classes=4, mixture_components=3)
    base.update(overrides)
    return MetaConfig(**base)


def softplus(v):
    return np.logaddexp(0.0, v)


def numpy_mlp(params, prefix, x, layers, activate_output=False):
    h = x
    for i in range(layers):
        h = h @ params[f"{prefix}.w{i}"] + params[f"{prefix}.b{i}"]
        if i < layers - 1 or activate_output:
            h = np.tanh(h)
    return h


class TestMLP:
    """Fully connected tanh network."""

    def test_parameter_layout(self):
        mlp = MLP("net", [3, 5, 2])
        params = mlp.init_params(np.random.default_rng(0))
        assert list(params) == ["net.w0", "net.b0", "net.w1", "net.b1"] == mlp.param_names()
        assert params["net.w0"].shape == (3, 5) and params["net.b1"].shape == (2,)
        assert np.all(params["net.b0"] == 0.0)

    def test_forward_matches_numpy(self):
        mlp = MLP("net", [3, 5, 2])
        params = mlp.init_params(np.random.default_rng(1))
        x = np.random.default_rng(2).normal(size=(4, 3))
        np.testing.assert_allclose(mlp(as_constants(params), x).data,
                                   numpy_mlp(params, "net", x, 2), rtol=1e-12)

    def test_activated_output_is_bounded(self):
        mlp = MLP("net", [2, 3], activate_output=True)
        params = mlp.init_params(np.random.default_rng(0))
        out = mlp(as_constants(params), np.full((2, 2), 100.0)).data
        assert np.all(np.abs(out) <= 1.0)

    def test_input_width_checked(self):
        mlp = MLP("net", [3, 2])
        with pytest.raises(ShapeMismatchException):
            mlp(as_constants(mlp.init_params(np.random.default_rng(0))), np.zeros((2, 4)))

    def test_needs_two_widths(self):
        with pytest.raises(ValueError):
            MLP("net", [3])


class TestLearner:
    """Observation emission and stream learning."""

    @pytest.fixture
    def learner(self):
        return LearnerNet(x_dim=SINE.x_dim, z_dim=2, hidden_sizes=(4, 4),
                          target_kind=TargetKind.REGRESSION)

    @pytest.fixture
    def params(self, learner):
        return as_constants(learner.init_params(np.random.default_rng(3)))

    def test_encode_targets(self):
        np.testing.assert_array_equal(encode_targets([2, 0], TargetKind.LABEL, 3),
                                      [[0, 0, 1], [1, 0, 0]])
        assert encode_targets(np.arange(3.0), TargetKind.REGRESSION, 3).shape == (3, 1)
        with pytest.raises(ValueError):
            encode_targets([3], TargetKind.LABEL, 3)

    def test_observation_shapes_and_positive_precision(self, learner, params):
        episode = gen_sine_episode(SINE)
        z_hat, precision = learner.observe(params, episode.train_x, episode.train_y)
        assert z_hat.shape == precision.shape == (SINE.stream_length, 2)
        assert np.all(precision.data >= 1e-6)

    def test_supervised_learner_needs_targets(self, learner, params):
        with pytest.raises(ShapeMismatchException):
            learner.observe(params, np.zeros((2, SINE.x_dim)))

    def test_non_finite_input_rejected(self, learner, params):
        x = np.zeros((2, SINE.x_dim))
        x[1, 0] = np.nan
        with pytest.raises(NonFiniteException):
            learner.observe(params, x, np.zeros((2, 1)))

    def test_sequential_and_batch_paths_agree(self, learner, params):
        episode = gen_sine_episode(SINE)
        prior = FactorizedGaussian.unit(2)
        seq = learn_stream(learner, params, prior, episode.train_x, episode.train_y, sequential=True)
        bat = learn_stream(learner, params, prior, episode.train_x, episode.train_y, sequential=False)
        np.testing.assert_allclose(seq.mu.data, bat.mu.data, atol=1e-9)
        np.testing.assert_allclose(seq.lam.data, bat.lam.data, atol=1e-9)

    def test_batch_path_ignores_stream_order(self, learner, params):
        episode = gen_sine_episode(SINE)
        shuffled = episode.permuted(np.random.default_rng(0).permutation(episode.stream_length))
        prior = FactorizedGaussian.unit(2)
        a = learn_stream(learner, params, prior, episode.train_x, episode.train_y, sequential=False)
        b = learn_stream(learner, params, prior, shuffled.train_x, shuffled.train_y, sequential=False)
        np.testing.assert_allclose(a.mu.data, b.mu.data, rtol=1e-12, atol=1e-14)

    def test_empty_stream_returns_prior(self, learner, params):
        prior = FactorizedGaussian.unit(2)
        assert learn_stream(learner, params, prior, np.zeros((0, SINE.x_dim)), np.zeros((0, 1))) is prior

    def test_unsupervised_learner(self):
        learner = LearnerNet(x_dim=2, z_dim=3, hidden_sizes=(4,))
        params = as_constants(learner.init_params(np.random.default_rng(0)))
        assert list(params) == ["learner.net.w0", "learner.net.b0", "learner.net.w1", "learner.net.b1"]
        z_hat, precision = learner.observe(params, np.zeros((5, 2)))
        assert z_hat.shape == (5, 3)

    def test_mock_learner_leaves_prior_unchanged(self):
        mock = MockLearner(z_dim=2)
        prior = FactorizedGaussian.from_arrays([0.5, -0.5], [2.0, 3.0])
        post = learn_stream(mock, {}, prior, np.zeros((4, 1)), sequential=True)
        np.testing.assert_array_equal(post.mu.data, prior.mu.data)
        np.testing.assert_array_equal(post.lam.data, prior.lam.data)
        assert mock.calls == 1


class TestModelNet:
    """Likelihoods conditioned on the latent."""

    def test_gaussian_log_likelihood_matches_numpy(self):
        model = ModelNet(Likelihood.GAUSSIAN, x_dim=3, z_dim=2, hidden_sizes=(4, 5))
        params = model.init_params(np.random.default_rng(0))
        rng = np.random.default_rng(1)
        x, y, z = rng.normal(size=(6, 3)), rng.normal(size=(6, 1)), rng.normal(size=2)
        h = numpy_mlp(params, "model.encoder", x, 1, activate_output=True)
        mean = numpy_mlp(params, "model.decoder", np.hstack([h, np.tile(z, (6, 1))]), 2)
        var = softplus(params["model.raw_noise"]) + 1e-6
        expected = -0.5 * np.sum(np.log(2 * np.pi * var) + (y - mean) ** 2 / var, axis=1)
        np.testing.assert_allclose(model.log_likelihood(as_constants(params), x, y, z).data,
                                   expected, rtol=1e-10)

    def test_initial_noise_variance_is_one(self):
        model = ModelNet(Likelihood.GAUSSIAN, x_dim=1, z_dim=1, hidden_sizes=(2,))
        params = as_constants(model.init_params(np.random.default_rng(0)))
        assert model.noise_variance(params).data[0] == pytest.approx(1.0 + 1e-6)

    def test_categorical_probabilities_sum_to_one(self):
        model = ModelNet(Likelihood.CATEGORICAL, x_dim=3, z_dim=2, hidden_sizes=(4,), out_dim=4)
        params = as_constants(model.init_params(np.random.default_rng(0)))
        x, z = np.random.default_rng(1).normal(size=(1, 3)), np.zeros(2)
        total = sum(math.exp(model.log_likelihood(params, x, [c], z).item()) for c in range(4))
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_mixture_density_integrates_to_one(self):
        model = ModelNet(Likelihood.MIXTURE, x_dim=1, z_dim=2, hidden_sizes=(4,), components=3)
        params = as_constants(model.init_params(np.random.default_rng(0)))
        grid = np.linspace(-25.0, 25.0, 5001).reshape(-1, 1)
        density = np.exp(model.log_likelihood(params, grid, None, np.array([0.3, -0.2])).data)
        assert trapezoid(density, grid[:, 0]) == pytest.approx(1.0, abs=1e-4)

    def test_mixture_matches_explicit_sum(self):
        model = ModelNet(Likelihood.MIXTURE, x_dim=2, z_dim=2, hidden_sizes=(4,), components=3)
        params = as_constants(model.init_params(np.random.default_rng(2)))
        z, x = np.array([0.1, 0.4]), np.random.default_rng(3).normal(size=(5, 2))
        means, log_w, var = model.mixture(params, z)
        dens = sum(np.exp(log_w.data[m]) * np.exp(-0.5 * np.sum((x - means.data[m]) ** 2, axis=1) / var.data)
                   / (2 * np.pi * var.data) for m in range(3))
        np.testing.assert_allclose(model.log_likelihood(params, x, None, z).data, np.log(dens), rtol=1e-10)

    def test_latent_shape_checked(self):
        model = ModelNet(Likelihood.GAUSSIAN, x_dim=1, z_dim=2, hidden_sizes=(2,))
        params = as_constants(model.init_params(np.random.default_rng(0)))
        with pytest.raises(ShapeMismatchException):
            model.log_likelihood(params, np.zeros((1, 1)), np.zeros((1, 1)), np.zeros(3))


class TestELBO:
    """Episode evidence lower bounds."""

    @pytest.fixture
    def head(self):
        return GenericHead(tiny_config(SINE))

    @pytest.fixture
    def params(self, head):
        return head.init_params(np.random.default_rng(7))

    def test_terms_add_up(self, head, params):
        report = head.elbo(as_constants(params), gen_sine_episode(SINE), np.random.default_rng(0))
        assert report.elbo == pytest.approx(-(report.nll_test + report.nll_train + report.kl))
        assert report.loss.item() == pytest.approx(-report.elbo)
        assert report.kl >= 0.0
        assert report.z_draws.shape == (3, 2)

    def test_prior_only_learner_has_zero_kl(self, head, params):
        """With a zero-precision learner the posterior is the unit prior."""
        report = elbo_supervised(head.model, MockLearner(2), as_constants(params),
                                 FactorizedGaussian.unit(2), gen_sine_episode(SINE), n_z=2,
                                 eps=np.zeros((2, 2)))
        assert report.kl == 0.0

    def test_matches_independent_computation(self, head, params):
        """Unit posterior and zero noise: the bound is the likelihood at z = 0."""
        episode = gen_sine_episode(SINE)
        report = elbo_supervised(head.model, MockLearner(2), as_constants(params),
                                 FactorizedGaussian.unit(2), episode, n_z=1, eps=np.zeros((1, 2)))

        def log_lik(x, y):
            h = numpy_mlp(params, "model.encoder", x, 1, activate_output=True)
            mean = numpy_mlp(params, "model.decoder", np.hstack([h, np.zeros((len(x), 2))]), 2)
            var = softplus(params["model.raw_noise"]) + 1e-6
            return np.sum(-0.5 * (np.log(2 * np.pi * var) + (y - mean) ** 2 / var))

        expected = log_lik(episode.train_x, episode.train_y) + log_lik(episode.test_x, episode.test_y)
        assert report.elbo == pytest.approx(expected, rel=1e-10)

    def test_zero_noise_draws_equal_map(self, head, params):
        values, episode = as_constants(params), gen_sine_episode(SINE)
        many = head.elbo(values, episode, eps=np.zeros((3, 2)))
        one = elbo_supervised(head.model, head.learner, values, head.prior(values), episode,
                              n_z=1, eps=np.zeros((1, 2)))
        assert many.nll_test == pytest.approx(one.nll_test, rel=1e-12)
        assert many.nll_train == pytest.approx(one.nll_train, rel=1e-12)

    def test_batch_path_is_order_free(self, head, params):
        values, episode = as_constants(params), gen_sine_episode(SINE)
        shuffled = episode.permuted(np.arange(episode.stream_length)[::-1])
        eps = np.random.default_rng(1).standard_normal((3, 2))
        a = head.elbo(values, episode, eps=eps)
        b = head.elbo(values, shuffled, eps=eps)
        assert a.kl == pytest.approx(b.kl, rel=1e-12, abs=1e-14)
        assert a.nll_test == pytest.approx(b.nll_test, rel=1e-12)

    def test_n_z_must_be_positive(self, head, params):
        with pytest.raises(ValueError):
            elbo_supervised(head.model, head.learner, as_constants(params), FactorizedGaussian.unit(2),
                            gen_sine_episode(SINE), n_z=0)

    def test_wrong_bound_for_model(self, head, params):
        with pytest.raises(ShapeMismatchException):
            elbo_unsupervised(head.model, head.learner, as_constants(params),
                              FactorizedGaussian.unit(2), gen_sine_episode(SINE))

    def test_unsupervised_bound(self):
        head = GenericHead(tiny_config(DENSITY))
        params = as_constants(head.init_params(np.random.default_rng(0)))
        report = head.elbo(params, gen_density_episode(DENSITY), np.random.default_rng(1))
        assert np.isfinite(report.elbo) and report.kl >= 0.0
        with pytest.raises(ShapeMismatchException):
            elbo_supervised(head.model, head.learner, params, head.prior(params),
                            gen_density_episode(DENSITY))

    def test_more_z_draws_reduce_gradient_variance(self):
        """Over 100 seeds the 16-draw gradient is far less noisy than the 1-draw one."""
        episode = gen_sine_episode(SINE)
        arrays = GenericHead(tiny_config(SINE)).init_params(np.random.default_rng(7))

        def total_variance(n_z):
            head = GenericHead(tiny_config(SINE, n_z=n_z))
            draws = []
            for seed in range(100):
                rng = np.random.default_rng(seed)
                grads = analytic_grads(lambda values: head.elbo(values, episode, rng).loss, arrays)
                draws.append(np.concatenate([g.ravel() for g in grads.values()]))
            return float(np.var(np.stack(draws), axis=0).sum())

        one, sixteen = total_variance(1), total_variance(16)
        assert one > 0.0
        assert sixteen < 0.25 * one

    @pytest.mark.parametrize("spec", [SINE, CLASSIFY, DENSITY], ids=lambda s: s.domain.value)
    def test_gradient_matches_finite_differences(self, spec):
        """T=4 training rows, N=2 queries, D_z=4; at least 100 parameter entries checked."""
        spec = replace(spec, num_tasks=2, shots=2, test_per_task=1)
        head = GenericHead(tiny_config(spec, z_dim=4, n_z=2))
        arrays = head.init_params(np.random.default_rng(11))
        arrays["prior.mu"] = np.array([0.2, -0.1, 0.05, 0.3])
        arrays["prior.log_lam"] = np.array([0.3, -0.2, 0.1, 0.0])
        episode = make_generator(spec).episode(0)
        assert episode.stream_length == 4 and len(episode.test_x) == 2
        eps = np.random.default_rng(12).standard_normal((2, 4))

        def loss(values):
            return head.elbo(values, episode, eps=eps).loss

        grads = analytic_grads(loss, arrays)
        entries = [(name, index) for name, array in arrays.items() for index in np.ndindex(array.shape)]
        assert len(entries) >= 100
        picker = np.random.default_rng(13)
        for i in picker.choice(len(entries), size=min(120, len(entries)), replace=False):
            name, index = entries[i]
            numeric = numeric_grad(loss, arrays, name, index)
            assert relative_error(grads[name][index], numeric, floor=1e-4) < 1e-3, (name, index)


class TestPredict:
    """Posterior predictions and metrics."""

    @pytest.fixture
    def head(self):
        return GenericHead(tiny_config(SINE))

    def test_sharp_posterior_makes_mc_equal_map(self, head):
        params = as_constants(head.init_params(np.random.default_rng(0)))
        posterior = FactorizedGaussian.from_arrays([0.4, -0.3], [1e14, 1e14])
        x = gen_sine_episode(SINE).test_x
        map_pred = predict(head.model, params, posterior, x, PredictMode.MAP)
        mc_pred = predict(head.model, params, posterior, x, PredictMode.MC, n_z=4,
                          rng=np.random.default_rng(1))
        np.testing.assert_allclose(mc_pred.mean, map_pred.mean, atol=1e-5)
        np.testing.assert_allclose(mc_pred.variance, map_pred.variance, atol=1e-5)

    def test_mc_variance_adds_spread(self, head):
        params = as_constants(head.init_params(np.random.default_rng(0)))
        posterior = FactorizedGaussian.unit(2)
        x = gen_sine_episode(SINE).test_x
        pred = predict(head.model, params, posterior, x, PredictMode.MC, n_z=8,
                       rng=np.random.default_rng(2))
        noise = head.model.noise_variance(params).data
        assert np.all(pred.variance >= noise - 1e-15)

    def test_classification_probabilities(self):
        head = GenericHead(tiny_config(CLASSIFY))
        params = as_constants(head.init_params(np.random.default_rng(0)))
        episode = gen_classify_episode(CLASSIFY)
        pred = head.predict(params, episode, PredictMode.MC, np.random.default_rng(1))
        assert pred.probs.shape == (CLASSIFY.test_size, 4)
        np.testing.assert_allclose(pred.probs.sum(axis=1), 1.0)
        assert pred.labels == [0, 1, 2, 3]

    def test_density_prediction_averages_densities(self):
        head = GenericHead(tiny_config(DENSITY))
        params = as_constants(head.init_params(np.random.default_rng(0)))
        posterior = FactorizedGaussian.unit(2)
        x = gen_density_episode(DENSITY).test_x
        eps = np.random.default_rng(3).standard_normal((3, 2))
        pred = predict(head.model, params, posterior, x, PredictMode.MC, n_z=3, eps=eps)
        per_draw = [head.model.log_likelihood(params, x, None, posterior.mu.data + e).data for e in eps]
        np.testing.assert_allclose(pred.log_density, np.log(np.mean(np.exp(per_draw), axis=0)),
                                   rtol=1e-10)

    def test_metrics(self):
        assert mse(Prediction(mean=np.array([[1.0], [3.0]])), [1.0, 1.0]) == pytest.approx(2.0)
        probs = softmax(np.array([[2.0, 0.0], [0.0, 2.0], [2.0, 0.0]]), axis=1)
        assert error_rate(Prediction(probs=probs, labels=["a", "b"]), ["a", "b", "b"]) == pytest.approx(1 / 3)
        assert nll(Prediction(log_density=np.log(expit(np.array([0.0, 0.0]))))) == pytest.approx(math.log(2))

    def test_prediction_to_dict(self):
        pred = Prediction(probs=np.array([[0.25, 0.75]]), labels=[3, 7])
        assert pred.to_dict() == {"probs": [[0.25, 0.75]], "labels": [3, 7]}
        np.testing.assert_array_equal(pred.predicted_labels(), [7])
        with pytest.raises(ValueError):
            Prediction(mean=np.zeros((1, 1))).predicted_labels()

    def test_generic_head_rejects_wrong_width(self):
        head = GenericHead(tiny_config(SINE))
        params = as_constants(head.init_params(np.random.default_rng(0)))
        other = gen_sine_episode(replace(SINE, task_slots=5))
        with pytest.raises(HeadMismatchException):
            head.predict(params, other, PredictMode.MAP)
