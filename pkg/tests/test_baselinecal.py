import numpy as np
import pytest

from baselinecal import (
    BaselineCalibrator,
    BaselineConfig,
    BaselineModel,
    LinearCalibrator,
    aggregate_outputs,
    apply_baseline,
    bagged_predict,
    compressor_for,
    fit_baseline,
    fit_compressor,
    fit_linear,
)
from diffcore import InvalidInputError, SingularSystemError
from surrogate import predict
from toydata import DesignPoint

MID = dict(scale=1.2, asym_mode10=0.005, asym_mode20_t1=-0.03, asym_mode20_t2=0.0, trough_adj=0.1,
           power_adj=0.1, energy_adj=0.1, preheat=25.0, dopant_fraction=0.002)


def random_outputs(n=40, side=4, seed=0):
    rng = np.random.default_rng(seed)
    scalars = rng.normal(size=(n, 10)) * np.arange(1.0, 11.0)
    images = rng.random((n, side, side)) * np.linspace(0.5, 2.0, side * side).reshape(side, side)
    return scalars, images


@pytest.fixture(scope="module")
def compressor(tiny_model, campaign):
    return compressor_for(tiny_model, campaign[0], BaselineConfig())


# -- compressor -----------------------------------------------------------------

def test_image_basis_is_orthonormal():
    comp = fit_compressor(*random_outputs(), k_img=6)
    np.testing.assert_allclose(comp.image_basis @ comp.image_basis.T, np.eye(6), atol=1e-10)
    assert comp.dim == 16
    assert comp.fitted_on["n_samples"] == 40


def test_basis_matches_covariance_eigenvectors_up_to_sign():
    scalars, images = random_outputs()
    comp = fit_compressor(scalars, images, k_img=3)
    flat = images.reshape(40, -1)
    centered = flat - flat.mean(axis=0)
    values, vectors = np.linalg.eigh(centered.T @ centered)
    top = vectors[:, np.argsort(values)[::-1][:3]]
    np.testing.assert_allclose(np.abs(comp.image_basis @ top), np.eye(3), atol=1e-8)


def test_full_rank_compression_round_trips():
    scalars, images = random_outputs()
    comp = fit_compressor(scalars, images, k_img=16)
    back_scalars, back_images = comp.decompress(comp.compress(scalars, images))
    np.testing.assert_allclose(back_scalars, scalars, atol=1e-9)
    np.testing.assert_allclose(back_images, images, atol=1e-9)


def test_all_output_pca_round_trips_at_full_width():
    scalars, images = random_outputs()
    comp = fit_compressor(scalars, images, k_img=16, k_all=26)
    assert comp.dim == 26
    back_scalars, back_images = comp.decompress(comp.compress(scalars, images))
    np.testing.assert_allclose(back_scalars, scalars, atol=1e-8)
    np.testing.assert_allclose(back_images, images, atol=1e-8)


def test_round_trip_error_does_not_grow_with_more_components():
    scalars, images = random_outputs()
    errors = []
    for k in (1, 2, 4, 8, 16):
        comp = fit_compressor(scalars, images, k_img=k)
        errors.append(np.mean((comp.decompress(comp.compress(scalars, images))[1] - images) ** 2))
    assert all(b <= a + 1e-12 for a, b in zip(errors, errors[1:]))
    assert errors[-1] < 1e-18


@pytest.mark.parametrize("k_img", [0, 40, 17])
def test_component_count_bounds(k_img):
    with pytest.raises(InvalidInputError, match="k_img"):
        fit_compressor(*random_outputs(), k_img=k_img)


def test_compress_rejects_other_image_sizes():
    comp = fit_compressor(*random_outputs(), k_img=2)
    scalars, images = random_outputs(n=3, side=8)
    with pytest.raises(InvalidInputError, match="pixels"):
        comp.compress(scalars, images)


def test_decompress_output_clips_negative_pixels():
    scalars, images = random_outputs()
    comp = fit_compressor(scalars, images, k_img=2)
    codes = comp.compress(scalars[:1], images[:1])
    codes[0, 0] = -50.0
    assert np.all(comp.decompress_output(codes).image >= 0)


def test_images_on_one_intensity_ray_fill_the_first_component():
    rng = np.random.default_rng(3)
    base = rng.random((4, 4)) + 0.1
    images = rng.uniform(0.5, 2.0, 40)[:, None, None] * base
    comp = fit_compressor(rng.normal(size=(40, 10)), images, k_img=2)
    assert comp.fitted_on["explained_variance_ratio"][0] > 0.9999


# -- linear map -------------------------------------------------------------------

def test_fit_linear_recovers_an_exact_affine_map():
    rng = np.random.default_rng(3)
    x = rng.normal(size=(30, 5))
    coef, intercept = rng.normal(size=(5, 5)), rng.normal(size=5)
    fitted = fit_linear(x, x @ coef + intercept, ridge=0.0)
    np.testing.assert_allclose(fitted.coef, coef, atol=1e-10)
    np.testing.assert_allclose(fitted.intercept, intercept, atol=1e-10)


def test_unregularized_underdetermined_fit_is_singular():
    rng = np.random.default_rng(4)
    x = rng.normal(size=(4, 6))
    with pytest.raises(SingularSystemError, match="ridge"):
        fit_linear(x, x, ridge=0.0)


def test_ridge_makes_a_single_shot_fit_well_posed():
    y_sim, y_exp = np.arange(6.0)[None], np.full((1, 6), 2.0)
    fitted = fit_linear(y_sim, y_exp, ridge=1e-2)
    np.testing.assert_array_equal(fitted.coef, np.zeros((6, 6)))
    np.testing.assert_allclose(fitted.apply(np.ones((3, 6))), np.full((3, 6), 2.0))


def test_larger_ridge_shrinks_the_coefficients():
    rng = np.random.default_rng(5)
    x = rng.normal(size=(20, 4))
    y = x @ rng.normal(size=(4, 4))
    norms = [np.linalg.norm(fit_linear(x, y, ridge=r).coef) for r in (0.0, 1.0, 100.0)]
    assert norms[0] > norms[1] > norms[2]


def test_fit_linear_rejects_bad_arguments():
    with pytest.raises(InvalidInputError, match="non-negative"):
        fit_linear(np.ones((3, 2)), np.ones((3, 2)), ridge=-1.0)
    with pytest.raises(InvalidInputError, match="equally shaped"):
        fit_linear(np.ones((3, 2)), np.ones((3, 3)))


def test_linear_calibrator_validates_its_tensors():
    with pytest.raises(InvalidInputError, match="intercept"):
        LinearCalibrator(np.eye(3), np.zeros(2))
    with pytest.raises(InvalidInputError, match="finite"):
        LinearCalibrator(np.full((2, 2), np.nan), np.zeros(2))
    with pytest.raises(InvalidInputError, match="components"):
        LinearCalibrator(np.eye(3), np.zeros(3)).apply(np.ones((1, 2)))


# -- baseline against the surrogate -----------------------------------------------------

def test_identity_map_reproduces_the_surrogate(tiny_model, campaign):
    comp = compressor_for(tiny_model, campaign[0], BaselineConfig(k_img=64))
    identity = LinearCalibrator(np.eye(comp.dim), np.zeros(comp.dim))
    x = campaign[2].inputs[:5]
    expected, got = predict(tiny_model, x), apply_baseline(tiny_model, comp, identity, x)
    np.testing.assert_allclose(got.scalars, expected.scalars, rtol=1e-9, atol=1e-9)
    np.testing.assert_allclose(got.image, expected.image, atol=1e-8)


def test_single_design_point_gives_an_unbatched_output(tiny_model, compressor, campaign):
    calibrator = fit_baseline(tiny_model, compressor, campaign[1])
    out = apply_baseline(tiny_model, compressor, calibrator, DesignPoint(**MID))
    assert out.scalars.shape == (10,)
    assert out.image.shape == (8, 8)


def test_bagging_a_single_map_equals_applying_it(tiny_model, compressor, campaign):
    calibrator = fit_baseline(tiny_model, compressor, campaign[1])
    x = campaign[2].inputs[:4]
    single = apply_baseline(tiny_model, compressor, calibrator, x)
    for bag in ([calibrator], [calibrator, calibrator]):
        bagged = bagged_predict(bag, tiny_model, compressor, x)
        np.testing.assert_allclose(bagged.scalars, single.scalars)
        np.testing.assert_allclose(bagged.image, single.image)


def test_bagged_prediction_is_the_mean(tiny_model, compressor, campaign):
    x = campaign[2].inputs[:4]
    maps = [fit_baseline(tiny_model, compressor, campaign[1].subset(idx)) for idx in ([0, 1, 2], [3, 4, 5, 6])]
    parts = [apply_baseline(tiny_model, compressor, m, x) for m in maps]
    bagged = BaselineModel(compressor, tuple(maps)).predict(tiny_model, x)
    np.testing.assert_allclose(bagged.scalars, (parts[0].scalars + parts[1].scalars) / 2)


def test_bagging_fifteen_maps_lowers_prediction_variance(tiny_model, compressor, campaign):
    pool, x = campaign[2], campaign[1].inputs[:3]
    rng = np.random.default_rng(0)
    maps = [fit_baseline(tiny_model, compressor, pool.subset(np.sort(rng.choice(len(pool), 7, replace=False))))
            for _ in range(120)]
    single = np.stack([apply_baseline(tiny_model, compressor, m, x).scalars for m in maps])
    bagged = np.stack([bagged_predict(maps[i:i + 15], tiny_model, compressor, x).scalars
                       for i in range(0, len(maps), 15)])
    single_var = single.var(axis=0, ddof=1).sum(axis=-1)
    bagged_var = bagged.var(axis=0, ddof=1).sum(axis=-1)
    assert np.all(bagged_var < single_var), (bagged_var, single_var)


def test_empty_inputs_are_rejected(tiny_model, compressor, campaign):
    with pytest.raises(InvalidInputError):
        bagged_predict([], tiny_model, compressor, campaign[2].inputs[:2])
    with pytest.raises(InvalidInputError):
        aggregate_outputs([])
    with pytest.raises(InvalidInputError, match="at least one"):
        fit_baseline(tiny_model, compressor, campaign[1].subset([]))


def test_baseline_calibrator_runs_one_split(tiny_model, compressor, campaign):
    calibrator = BaselineCalibrator(tiny_model, compressor, BaselineConfig())
    fitted, output = calibrator.run(campaign[1], campaign[2].inputs[:3], seed=0)
    assert isinstance(fitted, LinearCalibrator)
    assert output.scalars.shape == (3, 10)
    assert calibrator.describe()["dim"] == 14


def test_baseline_config_rejects_unknown_keys():
    with pytest.raises(ValueError):
        BaselineConfig(k_pixels=3)
