import numpy as np
import pytest

from nabm3d.cfa import (
    PATTERNS,
    BayerMosaic,
    add_cfa_noise,
    demosaick_bilinear,
    denoise_cfa,
    merge_subplanes,
    mosaic_from_color,
    split_subplanes,
)
from nabm3d.harness import psnr
from nabm3d.pipeline import denoise, select_profile


def const_color(h, w, rgb):
    return np.broadcast_to(np.asarray(rgb, float), (h, w, 3)).copy()


def test_mosaic_rggb_tile():
    m = mosaic_from_color(const_color(2, 2, (10, 20, 30)), "RGGB")
    np.testing.assert_array_equal(m.plane, [[10, 20], [20, 30]])


@pytest.mark.parametrize("pattern, tile", [
    ("GRBG", [[20, 10], [30, 20]]), ("GBRG", [[20, 30], [10, 20]]), ("BGGR", [[30, 20], [20, 10]]),
])
def test_mosaic_other_patterns(pattern, tile):
    np.testing.assert_array_equal(mosaic_from_color(const_color(2, 2, (10, 20, 30)), pattern).plane, tile)


def test_mosaic_of_gray_is_gray():
    gray = np.random.default_rng(0).integers(0, 256, (6, 8)).astype(float)
    m = mosaic_from_color(np.repeat(gray[..., None], 3, axis=2), "GBRG")
    np.testing.assert_array_equal(m.plane, gray)


def test_odd_dimensions_rejected():
    with pytest.raises(ValueError, match="even"):
        mosaic_from_color(np.zeros((5, 4, 3)))
    with pytest.raises(ValueError, match="pattern"):
        mosaic_from_color(np.zeros((4, 4, 3)), "RGBG")


@pytest.mark.parametrize("pattern", PATTERNS)
def test_split_recovers_channel_samples(pattern):
    img = np.random.default_rng(1).uniform(0, 255, (8, 10, 3))
    r, g1, g2, b = split_subplanes(mosaic_from_color(img, pattern))
    offsets = {(0, 0): 0, (0, 1): 1, (1, 0): 2, (1, 1): 3}
    phase = {ph: pattern[i] for ph, i in offsets.items()}
    rph = [ph for ph, c in phase.items() if c == "R"][0]
    bph = [ph for ph, c in phase.items() if c == "B"][0]
    gph = sorted(ph for ph, c in phase.items() if c == "G")
    np.testing.assert_array_equal(r, img[rph[0]::2, rph[1]::2, 0])
    np.testing.assert_array_equal(b, img[bph[0]::2, bph[1]::2, 2])
    np.testing.assert_array_equal(g1, img[gph[0][0]::2, gph[0][1]::2, 1])
    np.testing.assert_array_equal(g2, img[gph[1][0]::2, gph[1][1]::2, 1])


@pytest.mark.parametrize("pattern", PATTERNS)
def test_split_merge_bit_exact(pattern):
    plane = np.random.default_rng(2).normal(size=(12, 14)) * 1e3
    m = BayerMosaic(plane, pattern, (1, 2, 3))
    back = merge_subplanes(split_subplanes(m), pattern, (1, 2, 3))
    assert np.array_equal(back.plane, plane)


def test_split_2x2_and_index_algebra():
    m = BayerMosaic(np.array([[1.0, 2.0], [3.0, 4.0]]), "RGGB")
    assert [s.shape for s in split_subplanes(m)] == [(1, 1)] * 4
    big = BayerMosaic(np.arange(48.0).reshape(6, 8), "RGGB")
    r, g1, g2, b = split_subplanes(big)
    for (sub, (dy, dx)) in zip((r, g1, g2, b), [(0, 0), (0, 1), (1, 0), (1, 1)]):
        for v in range(sub.shape[0]):
            for u in range(sub.shape[1]):
                assert sub[v, u] == big.plane[2 * v + dy, 2 * u + dx]


def test_cfa_noise_identity_and_determinism():
    m = BayerMosaic(np.full((8, 8), 50.0), "RGGB", (0, 0, 0))
    np.testing.assert_array_equal(add_cfa_noise(m, 3).plane, m.plane)
    m2 = BayerMosaic(np.full((8, 8), 50.0), "RGGB", (3, 2, 1))
    assert np.array_equal(add_cfa_noise(m2, 9).plane, add_cfa_noise(m2, 9).plane)
    assert not np.array_equal(add_cfa_noise(m2, 9).plane, add_cfa_noise(m2, 10).plane)


def test_cfa_noise_per_channel_std():
    m = BayerMosaic(np.full((512, 512), 128.0), "RGGB", (30, 27, 25))
    noisy = add_cfa_noise(m, 0)
    cmap = m.channel_map()
    for ch, sigma in enumerate((30, 27, 25)):
        std = (noisy.plane - 128.0)[cmap == ch].std()
        assert abs(std - sigma) <= 0.03 * sigma


def test_demosaick_constant_exact():
    for pattern in PATTERNS:
        img = const_color(10, 12, (10, 200, 37))
        np.testing.assert_array_equal(demosaick_bilinear(mosaic_from_color(img, pattern)), img)


def test_demosaick_gray_constant_exact():
    img = const_color(8, 10, (77, 77, 77))
    np.testing.assert_array_equal(demosaick_bilinear(mosaic_from_color(img, "GRBG")), img)


@pytest.mark.parametrize("pattern", PATTERNS)
def test_demosaick_gray_ramp_interior_exact(pattern):
    # bilinear taps are symmetric, so a planar grey ramp is reproduced away from the border
    ramp = np.add.outer(np.arange(10.0) * 3, np.arange(12.0) * 5)
    img = np.repeat(ramp[..., None], 3, axis=2)
    out = demosaick_bilinear(mosaic_from_color(img, pattern))
    np.testing.assert_allclose(out[1:-1, 1:-1], img[1:-1, 1:-1], atol=1e-12)


def test_demosaick_taps():
    rng = np.random.default_rng(5)
    img = rng.integers(0, 256, (8, 8, 3)).astype(float)
    m = mosaic_from_color(img, "RGGB")
    out = demosaick_bilinear(m)
    p = m.plane
    # interior B pixel at (3,3): R from the four diagonals, G from the four edge neighbours
    assert out[3, 3, 0] == pytest.approx((p[2, 2] + p[2, 4] + p[4, 2] + p[4, 4]) / 4)
    assert out[3, 3, 1] == pytest.approx((p[2, 3] + p[4, 3] + p[3, 2] + p[3, 4]) / 4)
    assert out[3, 3, 2] == p[3, 3]
    # G pixel on an R row at (2,3): R from left/right, B from up/down
    assert out[2, 3, 0] == pytest.approx((p[2, 2] + p[2, 4]) / 2)
    assert out[2, 3, 2] == pytest.approx((p[1, 3] + p[3, 3]) / 2)
    # border R pixel at (0,0): B from its single diagonal neighbour
    assert out[0, 0, 2] == p[1, 1]
    # known samples pass through
    cmap = m.channel_map()
    for ch in range(3):
        np.testing.assert_array_equal(out[..., ch][cmap == ch], p[cmap == ch])


def test_denoise_cfa_passthrough():
    plane = np.random.default_rng(6).uniform(0, 255, (48, 48))
    m = BayerMosaic(plane, "RGGB", (0, 0, 0))
    out = denoise_cfa(m, overrides={"ht.lambda_3d": 0})
    assert np.abs(out.plane - plane).max() < 1e-6


def test_denoise_cfa_constant_mean_preserved():
    c = 120.0
    sigmas = (30, 27, 25)
    m = add_cfa_noise(BayerMosaic(np.full((64, 64), c), "RGGB", sigmas), 1)
    out = denoise_cfa(m)
    cmap = m.channel_map()
    count = 32 * 32
    for ch, sigma in enumerate(sigmas):
        sel = cmap == ch
        tol = 2 * sigma / np.sqrt(count)
        assert abs(out.plane[sel].mean() - c) <= tol


def test_denoise_cfa_too_small():
    m = BayerMosaic(np.zeros((12, 12)), "RGGB", (30, 27, 25))
    with pytest.raises(ValueError, match="at least 16x16"):
        denoise_cfa(m)


@pytest.mark.slow
def test_denoise_first_beats_demosaick_first(astronaut_color512):
    skdata = pytest.importorskip("skimage.data")
    sigmas = (30, 27, 25)
    for clean in (astronaut_color512[:256, :256], skdata.chelsea()[:256, :256].astype(float)):
        noisy = add_cfa_noise(mosaic_from_color(clean, "RGGB", sigmas), seed=0)
        first = np.clip(demosaick_bilinear(denoise_cfa(noisy)), 0, 255)
        dem = demosaick_bilinear(noisy)
        # conventional order: demosaick, then denoise every channel as a grey plane
        later = np.stack([denoise(dem[..., k], s, select_profile(s)).final
                          for k, s in enumerate(sigmas)], axis=2)
        assert psnr(clean, first) >= psnr(clean, later)
