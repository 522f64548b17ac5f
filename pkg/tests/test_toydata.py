import numpy as np
import pytest
from pydantic import ValidationError

from diffcore import InvalidInputError
from metrics import DESCRIPTOR_NAMES, describe_images
from toydata import (
    INPUT_NAMES,
    INPUT_RANGES,
    NOMINAL_FIXED,
    PERTURBED_FIXED,
    SCALAR_NAMES,
    CampaignSpec,
    Dataset,
    DesignPoint,
    MultiModalOutput,
    compute_stats,
    denormalize,
    load_physics,
    make_campaign,
    normalize,
    sample_inputs,
    simulate,
    simulate_batch,
)

MID = dict(scale=1.2, asym_mode10=0.005, asym_mode20_t1=-0.03, asym_mode20_t2=0.0, trough_adj=0.1,
           power_adj=0.1, energy_adj=0.1, preheat=25.0, dopant_fraction=0.002)


@pytest.fixture(scope="module")
def physics():
    return load_physics()


def test_design_point_rejects_out_of_range_value():
    with pytest.raises(InvalidInputError, match="scale"):
        DesignPoint(**dict(MID, scale=2.0))


def test_design_point_array_round_trip():
    point = DesignPoint(**MID)
    assert DesignPoint.from_array(point.as_array()) == point


def test_simulate_is_deterministic_and_shaped(physics):
    a = simulate(DesignPoint(**MID), physics, side=16)
    b = simulate(DesignPoint(**MID), physics, side=16)
    assert a.scalars.shape == (len(SCALAR_NAMES),)
    assert a.image.shape == (16, 16)
    np.testing.assert_array_equal(a.scalars, b.scalars)
    np.testing.assert_array_equal(a.image, b.image)
    assert np.all(a.image >= 0) and np.all(a.sigma > 0)


def test_bang_time_channels_differ_by_fixed_offset(physics):
    x = sample_inputs(50, seed=1)
    scalars, _, _ = simulate_batch(x, physics, side=8)
    offset = scalars[:, SCALAR_NAMES.index("BT_SPIDER")] - scalars[:, SCALAR_NAMES.index("BT_GRH")]
    np.testing.assert_allclose(offset, physics.bang_time_offset)


def test_measurement_noise_changes_only_scalars(physics):
    x = sample_inputs(5, seed=2)
    clean = simulate_batch(x, physics, side=8)
    noisy = simulate_batch(x, physics, side=8, noise_rng=np.random.default_rng(0))
    assert not np.allclose(clean[0], noisy[0])
    np.testing.assert_array_equal(clean[1], noisy[1])


def test_simulate_batch_rejects_out_of_range_inputs(physics):
    x = sample_inputs(3, seed=0)
    x[1, INPUT_NAMES.index("preheat")] = 80.0
    with pytest.raises(InvalidInputError, match="preheat"):
        simulate_batch(x, physics)


def test_sample_inputs_holds_fixed_columns_and_stays_in_range():
    x = sample_inputs(200, NOMINAL_FIXED, seed=4)
    for name, value in NOMINAL_FIXED.items():
        assert np.all(x[:, INPUT_NAMES.index(name)] == value)
    free = [i for i, n in enumerate(INPUT_NAMES) if n not in NOMINAL_FIXED]
    assert np.all(np.ptp(x[:, free], axis=0) > 0)


def test_multimodal_output_rejects_negative_pixels():
    with pytest.raises(InvalidInputError, match="non-negative"):
        MultiModalOutput(np.zeros(10), -np.ones((4, 4)))


def test_multimodal_output_rejects_non_square_image():
    with pytest.raises(InvalidInputError, match="square"):
        MultiModalOutput(np.zeros(10), np.ones((4, 5)))


def test_campaign_is_reproducible_per_seed():
    spec = CampaignSpec(n_sim=20, n_train=3, n_validation=4, image_side=8, seed=11)
    first, second = make_campaign(spec), make_campaign(spec)
    for a, b in zip(first, second):
        np.testing.assert_array_equal(a.inputs, b.inputs)
        np.testing.assert_array_equal(a.images, b.images)
    other = make_campaign(spec.model_copy(update={"seed": 12}))
    assert not np.array_equal(first[0].inputs, other[0].inputs)


def test_campaign_applies_nominal_and_perturbed_settings():
    sim, train, validation = make_campaign(CampaignSpec(n_sim=10, n_train=2, n_validation=3, image_side=8))
    col = INPUT_NAMES.index("preheat")
    assert np.all(sim.inputs[:, col] == NOMINAL_FIXED["preheat"])
    assert np.all(train.inputs[:, col] == PERTURBED_FIXED["preheat"])
    assert validation.meta["role"] == "exp_validation"
    assert len(sim) == 10 and len(train) == 2 and len(validation) == 3


def test_campaign_spec_rejects_mismatched_fixed_keys():
    with pytest.raises(ValidationError):
        CampaignSpec(perturbed_fixed={"preheat": 20.0})


def test_campaign_spec_free_inputs_and_null_bias():
    spec = CampaignSpec()
    assert spec.free_inputs == ["asym_mode10", "asym_mode20_t2", "trough_adj", "power_adj", "energy_adj"]
    assert spec.null_bias().perturbed_fixed == spec.nominal_fixed


def test_normalize_maps_scalars_to_unit_interval_and_images_to_unit_mean(campaign):
    sim, _, _ = campaign
    normed, stats = normalize(sim)
    assert normed.normalized
    np.testing.assert_allclose(normed.scalars.min(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(normed.scalars.max(axis=0), 1.0, atol=1e-12)
    np.testing.assert_allclose(normed.images.mean(axis=(1, 2)), 1.0)
    assert normed.meta["norm_stats"] == stats.model_dump()


def test_denormalize_restores_the_raw_dataset(campaign):
    sim, _, _ = campaign
    normed, stats = normalize(sim)
    back = denormalize(normed, stats)
    np.testing.assert_allclose(back.scalars, sim.scalars, rtol=1e-12)
    np.testing.assert_allclose(back.images, sim.images, rtol=1e-12)
    np.testing.assert_allclose(back.inputs, sim.inputs, rtol=1e-12, atol=1e-15)


def test_constant_scalar_column_is_rejected_by_name():
    n = 4
    scalars = np.tile(np.arange(1.0, 11.0), (n, 1)) + np.arange(n)[:, None]
    scalars[:, 3] = 7.0
    dataset = Dataset(sample_inputs(n, seed=0), scalars, np.ones((n, 10)), np.ones((n, 4, 4)))
    with pytest.raises(InvalidInputError, match=SCALAR_NAMES[3]):
        compute_stats(dataset)


def test_dataset_subset_and_concat_keep_alignment(campaign):
    sim, train, _ = campaign
    part = sim.subset([3, 1])
    np.testing.assert_array_equal(part.inputs, sim.inputs[[3, 1]])
    joined = Dataset.concat([train, part])
    assert len(joined) == len(train) + 2
    np.testing.assert_array_equal(joined.images[-1], sim.images[1])


# -- generator and campaign invariants -----------------------------------------

def mean_z_scores(a, b):
    """Two-sample difference of column means in standard errors."""
    se = np.sqrt(a.var(axis=0, ddof=1) / len(a) + b.var(axis=0, ddof=1) / len(b))
    return np.abs(a.mean(axis=0) - b.mean(axis=0)) / se


def test_fully_fixed_sampling_returns_that_point():
    x = sample_inputs(1, fixed=MID, seed=5)
    np.testing.assert_array_equal(x[0], DesignPoint(**MID).as_array())


def test_uniform_sampling_reaches_every_range_end():
    x = sample_inputs(10000, seed=2)
    lo, hi = np.array([INPUT_RANGES[n] for n in INPUT_NAMES]).T
    width = hi - lo
    assert np.all(x.min(axis=0) - lo <= 0.01 * width)
    assert np.all(hi - x.max(axis=0) <= 0.01 * width)


def test_symmetric_drive_gives_zero_shape_mode(physics):
    x = sample_inputs(20, fixed={"asym_mode20_t1": 0.0, "asym_mode20_t2": 0.0}, seed=4)
    _, images, _ = simulate_batch(x, physics, side=32)
    shape = describe_images(images)[:, DESCRIPTOR_NAMES.index("shape_mode")]
    assert np.max(np.abs(shape)) < 1e-6


def test_radius_grows_along_a_scale_ramp(physics):
    lo, hi = INPUT_RANGES["scale"]
    x = np.tile(DesignPoint(**MID).as_array(), (10, 1))
    x[:, INPUT_NAMES.index("scale")] = np.linspace(lo, hi, 10)
    scalars, _, _ = simulate_batch(x, physics, side=8)
    radius = scalars[:, SCALAR_NAMES.index("P0_HGXD_090-078_TI")]
    assert np.all(np.diff(radius) > 0)


def test_perturbed_campaign_shifts_most_scalar_means():
    sim, _, validation = make_campaign(CampaignSpec(n_sim=4000, n_train=7, n_validation=4000, image_side=8))
    assert np.sum(mean_z_scores(sim.scalars, validation.scalars) > 3.0) >= 8


def test_null_bias_campaign_keeps_scalar_means():
    spec = CampaignSpec(n_sim=4000, n_train=7, n_validation=4000, image_side=8).null_bias()
    sim, _, validation = make_campaign(spec)
    assert np.all(mean_z_scores(sim.scalars, validation.scalars) < 3.0)


@pytest.mark.slow
def test_generator_outputs_are_finite_over_a_large_sample(physics):
    for chunk in range(10):
        x = sample_inputs(10000, seed=100 + chunk)
        scalars, images, sigmas = simulate_batch(x, physics, side=16)
        assert np.all(np.isfinite(scalars))
        assert np.all(np.isfinite(images))
        assert np.all(np.isfinite(sigmas))
