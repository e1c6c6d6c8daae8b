import math

import numpy as np

from octglaucoma.imaging import bilinear, downsample_half, erode_square, snap, support_inside


def test_snap_removes_trig_residue():
    assert snap(math.cos(math.pi / 2)) == 0.0
    assert snap(math.sin(math.pi)) == 0.0
    assert snap(-1e-17) == 0.0


def test_bilinear_is_exact_on_the_lattice():
    rng = np.random.default_rng(0)
    pixels = rng.uniform(0, 255, size=(6, 7))
    rows, cols = np.meshgrid(np.arange(6.0), np.arange(7.0), indexing='ij')
    assert np.array_equal(bilinear(pixels, rows, cols), pixels)


def test_bilinear_midpoint_is_the_mean_of_four_pixels():
    pixels = np.array([[0.0, 10.0], [20.0, 30.0]])
    assert bilinear(pixels, np.array([0.5]), np.array([0.5]))[0] == 15.0


def test_support_inside_checks_every_weighted_pixel():
    mask = np.ones((4, 4), dtype=bool)
    mask[1, 2] = False
    assert support_inside(mask, np.array([1.0]), np.array([1.0]))[0]
    assert not support_inside(mask, np.array([1.0]), np.array([1.5]))[0]
    assert not support_inside(mask, np.array([0.5]), np.array([2.0]))[0]


def test_erode_square_drops_the_border():
    mask = np.ones((5, 6), dtype=bool)
    eroded = erode_square(mask, 1)
    assert eroded.sum() == 3 * 4
    assert not eroded[0].any() and not eroded[:, -1].any()


def test_downsample_half_averages_blocks():
    pixels = np.arange(20.0).reshape(4, 5)
    result = downsample_half(pixels)
    assert result.shape == (2, 2)
    assert result[0, 0] == (0 + 1 + 5 + 6) / 4
