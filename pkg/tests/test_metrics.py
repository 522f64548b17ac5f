import numpy as np
import pytest
from scipy.special import eval_genlaguerre
from sklearn.metrics import r2_score

from diffcore import InvalidInputError
from metrics import (
    BasisConfig,
    bulk_shift,
    chi2n,
    chi2n_columns,
    describe_images,
    image_descriptors,
    r2,
    r2_columns,
)


def blob(side=32, sx=5.0, sy=5.0, cx=None, cy=None):
    rows, cols = np.indices((side, side), dtype=np.float64)
    cx = (side - 1) / 2 if cx is None else cx
    cy = (side - 1) / 2 if cy is None else cy
    return np.exp(-0.5 * (((cols - cx) / sx) ** 2 + ((rows - cy) / sy) ** 2))


# -- R² and χ²/N --------------------------------------------------------------

def test_r2_perfect_null_and_negative():
    obs = np.array([0.0, 1.0, 2.0, 3.0])
    assert r2(obs, obs) == 1.0
    assert r2(obs, np.full(4, obs.mean())) == 0.0
    assert r2(obs, obs[::-1]) == pytest.approx(-3.0)


def test_r2_matches_sklearn_and_is_permutation_invariant():
    rng = np.random.default_rng(0)
    obs, pred = rng.normal(size=30), rng.normal(size=30)
    assert r2(obs, pred) == pytest.approx(r2_score(obs, pred))
    order = rng.permutation(30)
    assert r2(obs[order], pred[order]) == pytest.approx(r2(obs, pred))


def test_r2_pools_images_pixel_wise():
    rng = np.random.default_rng(1)
    obs, pred = rng.random((4, 3, 3)), rng.random((4, 3, 3))
    assert r2(obs, pred) == pytest.approx(r2_score(obs.ravel(), pred.ravel()))


def test_r2_rejects_constant_observations():
    with pytest.raises(InvalidInputError, match="constant"):
        r2(np.ones(5), np.arange(5.0))


def test_r2_columns_scores_each_column():
    obs = np.array([[0.0, 1.0], [1.0, 3.0], [2.0, 5.0]])
    np.testing.assert_allclose(r2_columns(obs, obs), [1.0, 1.0])


def test_chi2n_examples():
    assert chi2n([1.0, 2.0], [1.0, 2.0], [1.0, 1.0]) == 0.0
    sigma = np.array([0.5, 2.0, 3.0])
    assert chi2n(np.zeros(3), sigma, sigma) == pytest.approx(1.0)
    assert chi2n([1.0, 2.0], [2.0, 4.0], [1.0, 1.0]) == pytest.approx(2.5)


def test_chi2n_rejects_non_positive_sigma():
    with pytest.raises(InvalidInputError):
        chi2n([1.0, 2.0], [1.0, 2.0], [1.0, 0.0])


def test_chi2n_columns_and_permutation_invariance():
    rng = np.random.default_rng(2)
    obs, pred, sig = rng.normal(size=(6, 3)), rng.normal(size=(6, 3)), rng.random((6, 3)) + 0.1
    values = chi2n_columns(obs, pred, sig)
    order = rng.permutation(6)
    np.testing.assert_allclose(chi2n_columns(obs[order], pred[order], sig[order]), values)
    assert values[1] == pytest.approx(np.mean(((obs[:, 1] - pred[:, 1]) / sig[:, 1]) ** 2))


def test_bulk_shift_is_mean_residual_over_spread():
    obs = np.array([[0.0], [2.0]])
    np.testing.assert_allclose(bulk_shift(obs, obs + 3.0), [3.0])
    np.testing.assert_allclose(bulk_shift(obs, obs), [0.0])


# -- Gauss-Laguerre descriptors -----------------------------------------------

def test_circular_blob_has_zero_shape_mode():
    assert abs(image_descriptors(blob()).shape_mode) < 1e-6


def test_oblate_blob_is_positive_and_rotation_negates_it():
    oblate = blob(sx=7.0, sy=4.0)
    wide, tall = image_descriptors(oblate), image_descriptors(np.rot90(oblate))
    assert wide.shape_mode > 0
    assert tall.shape_mode < 0
    assert wide.shape_mode == pytest.approx(-tall.shape_mode, abs=1e-6)
    assert wide.radius_mode == pytest.approx(tall.radius_mode, abs=1e-9)
    assert wide.max_amplitude == tall.max_amplitude


def test_radius_mode_grows_with_blob_width():
    cfg = BasisConfig(waist=8.0)
    values = [image_descriptors(blob(sx=w, sy=w), cfg).radius_mode for w in (2.0, 3.0, 4.0, 6.0)]
    assert all(b > a for a, b in zip(values, values[1:]))


def test_descriptors_match_brute_force_quadrature():
    image = blob(sx=6.0, sy=4.0, cx=16.3, cy=15.2)
    waist = 8.0
    rows, cols = np.indices(image.shape, dtype=np.float64)
    total = image.sum()
    cx, cy = (cols * image).sum() / total, (rows * image).sum() / total
    expected = []
    for p, m in ((0, 0), (0, 2)):
        acc = 0.0
        for i in range(32):
            for j in range(32):
                dx, dy = j - cx, cy - i
                rr = (dx * dx + dy * dy) / waist ** 2
                acc += image[i, j] * eval_genlaguerre(p, m, rr) * np.exp(-rr / 2) * np.cos(m * np.arctan2(dy, dx))
        expected.append(acc)
    got = image_descriptors(image, BasisConfig(waist=waist))
    assert got.radius_mode == pytest.approx(expected[0], abs=1e-8)
    assert got.shape_mode == pytest.approx(expected[1], abs=1e-8)
    assert got.max_amplitude == image.max()


def test_descriptors_are_linear_in_intensity():
    image = blob(sx=6.0, sy=4.0)
    once, twice = image_descriptors(image), image_descriptors(2.0 * image)
    assert twice.radius_mode == pytest.approx(2.0 * once.radius_mode, rel=1e-12)
    assert twice.shape_mode == pytest.approx(2.0 * once.shape_mode, rel=1e-12)


def test_circular_blob_centered_on_a_pixel_has_zero_shape_mode():
    image = blob(side=31, sx=4.0, sy=4.0)
    assert abs(image_descriptors(image).shape_mode) < 1e-6


def test_all_zero_image_is_rejected():
    with pytest.raises(InvalidInputError, match="all-zero"):
        image_descriptors(np.zeros((8, 8)))


def test_non_square_image_is_rejected():
    with pytest.raises(InvalidInputError, match="square"):
        image_descriptors(np.ones((8, 6)))


def test_describe_images_stacks_descriptor_rows():
    table = describe_images([blob(16, 3, 3), blob(16, 4, 2)])
    assert table.shape == (2, 3)
    assert table[0, 1] == pytest.approx(0.0, abs=1e-6)
    assert table[1, 1] > 0
