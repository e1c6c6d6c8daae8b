import math

import numpy as np
import pytest

from octglaucoma.errors import DimensionMismatchError, EmptyPairsError, EmptyRegionError
from octglaucoma.texture import (
    DEFAULT_OFFSETS,
    GLCM_STATS,
    INVALID,
    Glcm,
    LbpParams,
    glcm,
    glcm_features,
    lbp_riu2,
    lbpv_histogram,
    local_variance,
    quantize,
    texture_features,
)


def naive_glcm(grid, offset, levels):
    dr, dc = offset
    counts = np.zeros((levels, levels))
    height, width = grid.shape
    for r in range(height):
        for c in range(width):
            r2, c2 = r + dr, c + dc
            if not (0 <= r2 < height and 0 <= c2 < width):
                continue
            a, b = grid[r, c], grid[r2, c2]
            if a < 0 or b < 0:
                continue
            counts[a, b] += 1
            counts[b, a] += 1
    return counts / counts.sum()


def naive_features(p):
    levels = p.shape[0]
    px = [sum(p[i, j] for j in range(levels)) for i in range(levels)]
    mean = sum(i * px[i] for i in range(levels))
    var = sum((i - mean) ** 2 * px[i] for i in range(levels))
    out = {'contrast': 0.0, 'correlation': 0.0, 'energy': 0.0, 'homogeneity': 0.0, 'entropy': 0.0}
    for i in range(levels):
        for j in range(levels):
            v = p[i, j]
            out['contrast'] += (i - j) ** 2 * v
            out['energy'] += v * v
            out['homogeneity'] += v / (1 + abs(i - j))
            if v > 0:
                out['entropy'] -= v * math.log2(v)
            if var > 0:
                out['correlation'] += (i - mean) * (j - mean) * v / var
    out['mean'] = mean
    out['std'] = math.sqrt(var)
    return out


def naive_bilinear(pixels, r, c):
    r0, c0 = int(math.floor(r)), int(math.floor(c))
    fr, fc = r - r0, c - c0
    r1, c1 = min(r0 + 1, pixels.shape[0] - 1), min(c0 + 1, pixels.shape[1] - 1)
    return ((1 - fr) * (1 - fc) * pixels[r0, c0] + (1 - fr) * fc * pixels[r0, c1]
            + fr * (1 - fc) * pixels[r1, c0] + fr * fc * pixels[r1, c1])


def naive_lbp_var(pixels, P=8, R=1):
    """Labels and VAR of every pixel at least ceil(R) away from the border."""
    height, width = pixels.shape
    margin = math.ceil(R)
    labels = np.full(pixels.shape, -1)
    var = np.full(pixels.shape, np.nan)
    for r in range(margin, height - margin):
        for c in range(margin, width - margin):
            samples = []
            for p in range(P):
                angle = 2 * math.pi * p / P
                dr = round(-R * math.sin(angle), 12)
                dc = round(R * math.cos(angle), 12)
                samples.append(naive_bilinear(pixels, r + dr, c + dc))
            bits = [1 if s - pixels[r, c] >= 0 else 0 for s in samples]
            transitions = sum(bits[p] != bits[(p + 1) % P] for p in range(P))
            labels[r, c] = sum(bits) if transitions <= 2 else P + 1
            mean = sum(samples) / P
            var[r, c] = sum((s - mean) ** 2 for s in samples) / P
    return labels, var


def full(shape):
    return np.ones(shape, dtype=bool)


def test_quantize_examples():
    pixels = np.array([[0.0, 255.0, 32.0, 31.0]])
    assert quantize(pixels, full(pixels.shape)).tolist() == [[0, 7, 1, 0]]
    assert np.unique(quantize(np.full((5, 5), 140.0), full((5, 5)))).tolist() == [4]
    region = np.array([[True, False, True, True]])
    assert quantize(pixels, region)[0, 1] == INVALID
    with pytest.raises(EmptyRegionError):
        quantize(pixels, np.zeros(pixels.shape, dtype=bool))


@pytest.mark.parametrize('seed', range(10))
@pytest.mark.parametrize('offset', DEFAULT_OFFSETS)
def test_glcm_matches_pair_enumeration(seed, offset):
    rng = np.random.default_rng(seed)
    pixels = rng.integers(0, 256, size=(16, 16)).astype(float)
    region = rng.random((16, 16)) > 0.2
    grid = quantize(pixels, region, 8)
    g = glcm(grid, offset, 8)
    oracle = naive_glcm(grid, offset, 8)
    np.testing.assert_allclose(g.matrix, oracle, rtol=0, atol=1e-12)
    features = glcm_features(g)
    expected = naive_features(oracle)
    for name in GLCM_STATS:
        assert features[name] == pytest.approx(expected[name], abs=1e-12)


def test_glcm_properties():
    rng = np.random.default_rng(11)
    grid = quantize(rng.integers(0, 256, size=(24, 24)).astype(float), full((24, 24)))
    g = glcm(grid, (-2, 2))
    assert np.allclose(g.matrix, g.matrix.T)
    assert g.matrix.sum() == pytest.approx(1.0, abs=1e-9)
    features = glcm_features(g)
    assert 0 < features['energy'] < 1
    assert 0 < features['homogeneity'] <= 1
    assert 0 <= features['entropy'] <= 2 * math.log2(8)


def test_constant_grid_gives_single_entry():
    g = glcm(quantize(np.full((6, 6), 70.0), full((6, 6))), (-2, 0))
    assert g.matrix[2, 2] == 1.0
    features = glcm_features(g)
    assert features['contrast'] == 0.0
    assert features['energy'] == 1.0
    assert features['homogeneity'] == 1.0
    assert features['entropy'] == 0.0
    assert features['correlation'] == 0.0


def test_glcm_symmetrizes_a_single_pair():
    grid = np.array([[1], [INVALID], [6]])
    g = glcm(grid, (-2, 0))
    assert g.pairs == 1
    assert g.matrix[1, 6] == 0.5 and g.matrix[6, 1] == 0.5


def test_glcm_errors():
    grid = np.array([[1, INVALID], [INVALID, 2]])
    with pytest.raises(EmptyPairsError):
        glcm(grid, (-2, 0))
    with pytest.raises(ValueError):
        glcm(grid, (0, 0))


def test_two_entry_features():
    matrix = np.zeros((8, 8))
    matrix[0, 7] = matrix[7, 0] = 0.5
    features = glcm_features(Glcm(levels=8, offset=(-2, 0), matrix=matrix, pairs=1))
    assert features['contrast'] == pytest.approx(49.0)
    assert features['energy'] == pytest.approx(0.5)
    assert features['entropy'] == pytest.approx(1.0)
    assert features['mean'] == pytest.approx(3.5)


@pytest.mark.parametrize('seed', range(10))
def test_lbp_and_var_match_definition(seed):
    rng = np.random.default_rng(100 + seed)
    pixels = rng.uniform(0, 255, size=(32, 32))
    params = LbpParams(8, 1)
    labels = lbp_riu2(pixels, full(pixels.shape), params)
    var = local_variance(pixels, full(pixels.shape), params)
    oracle_labels, oracle_var = naive_lbp_var(pixels)
    assert np.array_equal(labels, oracle_labels)
    assert np.array_equal(np.isnan(var), np.isnan(oracle_var))
    inside = ~np.isnan(var)
    np.testing.assert_allclose(var[inside], oracle_var[inside], rtol=1e-9, atol=1e-9)

    histogram = lbpv_histogram(labels, var, params)
    weights = np.zeros(10)
    for label, v in zip(oracle_labels[inside], oracle_var[inside]):
        weights[label] += v
    np.testing.assert_allclose(histogram.bins, weights / weights.sum(), rtol=0, atol=1e-12)
    assert histogram.bins.size == 10
    assert histogram.bins.sum() == pytest.approx(1.0, abs=1e-9)


def test_constant_image():
    pixels = np.full((10, 10), 90.0)
    labels = lbp_riu2(pixels, full(pixels.shape))
    assert set(labels[labels != INVALID].tolist()) == {8}
    var = local_variance(pixels, full(pixels.shape))
    assert np.all(var[~np.isnan(var)] == 0)
    histogram = lbpv_histogram(labels, var)
    assert histogram.degenerate
    assert np.all(histogram.bins == 0)


def test_isolated_bright_pixel_is_label_zero():
    pixels = np.full((9, 9), 10.0)
    pixels[4, 4] = 200.0
    assert lbp_riu2(pixels, full(pixels.shape))[4, 4] == 0


def test_var_shift_and_scale():
    rng = np.random.default_rng(5)
    pixels = rng.uniform(0, 100, size=(20, 20))
    region = full(pixels.shape)
    var = local_variance(pixels, region)
    inside = ~np.isnan(var)
    np.testing.assert_allclose(local_variance(pixels + 50.0, region)[inside], var[inside], rtol=1e-9, atol=1e-9)
    np.testing.assert_allclose(local_variance(pixels * 2.0, region)[inside], 4.0 * var[inside], rtol=1e-12)


def _label_counts(labels, P=8):
    return np.bincount(labels[labels != INVALID], minlength=P + 2)


@pytest.mark.parametrize('seed', range(100))
def test_lbp_histogram_invariant_under_increasing_affine_maps(seed):
    """Only affine maps: bilinear neighbours commute with them but not with other increasing maps."""
    rng = np.random.default_rng(1000 + seed)
    pixels = rng.uniform(0, 100, size=(24, 24))
    a, b = rng.uniform(0.5, 2.0), rng.uniform(0.0, 50.0)
    region = full(pixels.shape)
    before = _label_counts(lbp_riu2(pixels, region))
    after = _label_counts(lbp_riu2(a * pixels + b, region))
    assert np.array_equal(before, after)


@pytest.mark.parametrize('seed', range(100))
def test_lbpv_invariant_under_shift(seed):
    rng = np.random.default_rng(2000 + seed)
    pixels = rng.uniform(0, 150, size=(24, 24))
    shift = rng.uniform(1.0, 100.0)
    region = full(pixels.shape)
    before = lbpv_histogram(lbp_riu2(pixels, region), local_variance(pixels, region))
    after = lbpv_histogram(lbp_riu2(pixels + shift, region), local_variance(pixels + shift, region))
    np.testing.assert_allclose(after.bins, before.bins, rtol=0, atol=1e-12)


def test_lbpv_invariant_under_positive_scaling():
    rng = np.random.default_rng(7)
    pixels = rng.uniform(0, 100, size=(24, 24))
    region = full(pixels.shape)
    before = lbpv_histogram(lbp_riu2(pixels, region), local_variance(pixels, region))
    after = lbpv_histogram(lbp_riu2(2.5 * pixels, region), local_variance(2.5 * pixels, region))
    np.testing.assert_allclose(after.bins, before.bins, rtol=0, atol=1e-12)


@pytest.mark.parametrize('seed', range(100))
def test_riu2_labels_invariant_under_quarter_turn(seed):
    rng = np.random.default_rng(3000 + seed)
    pixels = rng.uniform(0, 255, size=(20, 20))
    region = full(pixels.shape)
    before = _label_counts(lbp_riu2(pixels, region))
    after = _label_counts(lbp_riu2(np.rot90(pixels), region))
    assert np.array_equal(before, after)


def test_lbp_errors():
    pixels = np.full((6, 6), 5.0)
    region = np.zeros((6, 6), dtype=bool)
    region[2:4, 2:4] = True
    with pytest.raises(EmptyRegionError):
        lbp_riu2(pixels, region)
    with pytest.raises(DimensionMismatchError):
        lbp_riu2(pixels, np.ones((5, 6), dtype=bool))
    labels = lbp_riu2(pixels, full((6, 6)))
    with pytest.raises(DimensionMismatchError):
        lbpv_histogram(labels, np.zeros((6, 5)))


def test_lbp_params_validation():
    with pytest.raises(ValueError):
        LbpParams(P=3)
    with pytest.raises(ValueError):
        LbpParams(R=0)
    assert LbpParams().n_bins == 10


def test_texture_feature_names(make_scan):
    rng = np.random.default_rng(9)
    scan = make_scan(rng.uniform(0, 255, size=(40, 40)).round())
    features = texture_features(scan)
    assert len(features) == 24
    assert list(features)[:7] == [f'glcm.{s}.o1' for s in GLCM_STATS]
    assert [k for k in features if k.startswith('lbpv')] == [f'lbpv.b{k}' for k in range(10)]

    extended = texture_features(scan, lbp_pairs=((8, 1), (16, 2)), use_glcm=False)
    assert len(extended) == 10 + 18
    assert 'lbpv.p16r2.b17' in extended
