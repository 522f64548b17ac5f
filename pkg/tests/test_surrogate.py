import logging

import numpy as np
import pytest

from conftest import tiny_train_config
from diffcore import InvalidInputError, TrainConfig
from surrogate import (
    ArchConfig,
    SurrogateModel,
    SurrogateTrainConfig,
    evaluate_r2,
    evaluate_reconstruction,
    imq_mmd,
    predict,
    split_holdout,
    train_autoencoder,
    train_surrogate,
    x_cycle_rms,
)
from toydata import INPUT_NAMES, SCALAR_NAMES, DesignPoint, normalize, sample_inputs

MID = dict(scale=1.2, asym_mode10=0.005, asym_mode20_t1=-0.03, asym_mode20_t2=0.0, trough_adj=0.1,
           power_adj=0.1, energy_adj=0.1, preheat=25.0, dopant_fraction=0.002)


def test_predict_shapes_for_batch_and_single_point(tiny_model):
    batch = predict(tiny_model, sample_inputs(6, seed=0))
    assert batch.scalars.shape == (6, len(SCALAR_NAMES))
    assert batch.image.shape == (6, 8, 8)
    assert np.all(batch.image >= 0)
    single = predict(tiny_model, DesignPoint(**MID))
    assert single.scalars.shape == (len(SCALAR_NAMES),)
    assert single.image.shape == (8, 8)
    assert single.sigma is None


def test_predict_accepts_the_models_own_input_columns(tiny_model):
    x = sample_inputs(4, seed=1)
    own = x[:, [INPUT_NAMES.index(n) for n in tiny_model.input_names]]
    np.testing.assert_array_equal(predict(tiny_model, x).scalars, predict(tiny_model, own).scalars)


def test_predict_rejects_wrong_column_count(tiny_model):
    with pytest.raises(InvalidInputError, match="input columns"):
        predict(tiny_model, np.zeros((2, 3)))


def test_predict_warns_when_extrapolating(tiny_model, caplog):
    x = sample_inputs(2, seed=2)
    x[0, INPUT_NAMES.index("power_adj")] = 5.0
    with caplog.at_level(logging.WARNING):
        predict(tiny_model, x)
    assert "extrapolating" in caplog.text
    assert "power_adj" in caplog.text


def test_evaluate_r2_reports_every_scalar_and_pixels(tiny_model, campaign):
    sim, _, _ = campaign
    held = sim.subset(range(20))
    for table in (evaluate_r2(tiny_model, held), evaluate_reconstruction(tiny_model, held)):
        assert list(table) == SCALAR_NAMES + ["pixels"]
        assert all(np.isfinite(v) for v in table.values())


def test_evaluate_r2_needs_two_samples(tiny_model, campaign):
    with pytest.raises(InvalidInputError, match="at least 2"):
        evaluate_r2(tiny_model, campaign[0].subset([0]))


def test_evaluate_r2_rejects_foreign_normalization(tiny_model, campaign):
    _, train, _ = campaign
    foreign, _ = normalize(train)
    with pytest.raises(InvalidInputError, match="statistics"):
        evaluate_r2(tiny_model, foreign)


def test_fit_report_holds_traces_and_held_out_scores(tiny_fit):
    _, fit = tiny_fit
    assert fit.n_train + fit.n_holdout == 120
    assert fit.n_holdout == 24
    assert len(fit.autoencoder_trace) == 41
    assert np.mean(fit.autoencoder_trace[-5:]) < np.mean(fit.autoencoder_trace[:5])
    assert {"forward", "inverse", "cycle_x", "cycle_z", "reg"} <= set(fit.forward_inverse_terms)
    assert set(fit.forward_r2) == set(SCALAR_NAMES) | {"pixels"}
    assert fit.x_cycle_rms is not None and fit.x_cycle_rms >= 0


def test_zero_cycle_weights_drop_the_cycle_terms(campaign):
    cfg = tiny_train_config(iterations=2).model_copy(update={"cycle_x_weight": 0.0, "cycle_z_weight": 0.0})
    _, fit = train_surrogate(campaign[0], cfg)
    assert "cycle_x" not in fit.forward_inverse_terms
    assert "cycle_z" not in fit.forward_inverse_terms
    assert {"forward", "inverse"} <= set(fit.forward_inverse_terms)


def test_training_is_deterministic_per_seed(campaign):
    cfg = tiny_train_config(iterations=3)
    first, _ = train_surrogate(campaign[0], cfg)
    second, _ = train_surrogate(campaign[0], cfg)
    assert first.content_hash() == second.content_hash()
    other, _ = train_surrogate(campaign[0], tiny_train_config(seed=1, iterations=3))
    assert other.content_hash() != first.content_hash()


def test_training_rejects_unnormalized_data_at_stage_level(campaign):
    with pytest.raises(InvalidInputError, match="normalized"):
        train_autoencoder(campaign[0], tiny_train_config(iterations=1))


def test_content_hash_tracks_component_swaps(tiny_model):
    same = tiny_model.with_components(decoder=tiny_model.decoder)
    assert same.content_hash() == tiny_model.content_hash()
    name = tiny_model.arch.decoder_innermost
    bumped = tiny_model.decoder.replace({name: {"bias": tiny_model.decoder.tensor(f"{name}.bias") + 1.0}})
    assert tiny_model.with_components(decoder=bumped).content_hash() != tiny_model.content_hash()


def test_model_rejects_input_names_that_do_not_fit_the_forward_model(tiny_model):
    with pytest.raises(InvalidInputError, match="input names"):
        SurrogateModel(tiny_model.encoder, tiny_model.decoder, tiny_model.forward, tiny_model.inverse,
                       tiny_model.arch, tiny_model.stats, list(INPUT_NAMES))


def test_x_cycle_rms_needs_normalized_data(tiny_model, campaign):
    with pytest.raises(InvalidInputError):
        x_cycle_rms(tiny_model, campaign[0])


def test_split_holdout_partitions_the_indices():
    train, held = split_holdout(50, 0.2, seed=7)
    assert len(held) == 10
    assert sorted(np.concatenate([train, held]).tolist()) == list(range(50))
    np.testing.assert_array_equal(split_holdout(50, 0.2, seed=7)[1], held)


def test_split_holdout_at_zero_fraction_keeps_everything_for_training():
    train, held = split_holdout(50, 0.0, seed=7)
    assert len(held) == 0
    np.testing.assert_array_equal(train, np.arange(50))


def test_training_without_holdout_uses_every_simulation(campaign):
    cfg = tiny_train_config(iterations=2).model_copy(update={"holdout_fraction": 0.0})
    _, fit = train_surrogate(campaign[0], cfg)
    assert (fit.n_train, fit.n_holdout) == (120, 0)
    assert fit.forward_r2 == {} and fit.x_cycle_rms is None


def test_imq_mmd_gradient_matches_finite_differences():
    rng = np.random.default_rng(0)
    z, prior = rng.normal(size=(5, 3)), rng.normal(size=(5, 3))
    _, grad = imq_mmd(z, prior, 6.0)
    eps = 1e-6
    numeric = np.zeros_like(z)
    for idx in np.ndindex(z.shape):
        up, down = z.copy(), z.copy()
        up[idx] += eps
        down[idx] -= eps
        numeric[idx] = (imq_mmd(up, prior, 6.0)[0] - imq_mmd(down, prior, 6.0)[0]) / (2 * eps)
    np.testing.assert_allclose(grad, numeric, rtol=1e-5, atol=1e-9)


def test_imq_mmd_is_non_positive_for_identical_samples():
    z = np.random.default_rng(1).normal(size=(4, 2))
    value, _ = imq_mmd(z, z, 4.0)
    # diagonal of the cross term is kept, so identical sets give a small negative value
    assert value <= 0
    assert imq_mmd(z[:1], z[:1], 4.0)[0] == 0.0


# -- architecture ablations (training runs) ------------------------------------

def ablation_config(latent_dim, **arch):
    sizes = dict(conv_channels=[4, 8], image_dense=32, scalar_branch=16, shared_width=32, fi_width=16, fi_depth=2)
    sizes.update(arch)
    stage = TrainConfig(iterations=1500, learning_rate=3e-3, batch_size=64)
    return SurrogateTrainConfig(arch=ArchConfig(latent_dim=latent_dim, **sizes), autoencoder=stage,
                                forward_inverse=TrainConfig(iterations=1), holdout_fraction=0.2, seed=0)


@pytest.mark.slow
def test_one_latent_reconstructs_pixels_worse_than_thirty_two(campaign):
    _, narrow = train_surrogate(campaign[0], ablation_config(1))
    _, wide = train_surrogate(campaign[0], ablation_config(32))
    assert narrow.reconstruction_r2["pixels"] < wide.reconstruction_r2["pixels"]


@pytest.mark.slow
def test_linear_autoencoder_without_bottleneck_reconstructs_almost_exactly(campaign):
    sim = campaign[0]
    total = len(SCALAR_NAMES) + sim.side * sim.side
    cfg = ablation_config(total, conv_channels=[8, 32], image_dense=128, shared_width=128,
                          hidden_activation="linear")
    stage = TrainConfig(iterations=3000, learning_rate=1e-3, batch_size=len(sim))
    cfg = cfg.model_copy(update={"autoencoder": stage, "prior_weight": 0.0, "holdout_fraction": 0.0})
    model, _ = train_surrogate(sim, cfg)
    scores = evaluate_reconstruction(model, sim)
    assert min(scores.values()) >= 0.999, scores
