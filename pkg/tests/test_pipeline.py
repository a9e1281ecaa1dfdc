
import numpy as np
import pytest

from nabm3d.pipeline import (
    Band,
    Mode,
    ParameterProfile,
    denoise,
    noise_band,
    parse_profile_text,
    select_profile,
)


@pytest.mark.parametrize("sigma, band", [
    (0.5, Band.LOW), (29.99, Band.LOW), (30, Band.MEDIUM), (49.9, Band.MEDIUM),
    (50, Band.HIGH), (79.9, Band.HIGH), (80, Band.VERY_HIGH), (100, Band.VERY_HIGH),
])
def test_band_edges(sigma, band):
    assert noise_band(sigma) is band


def test_improved_low_row():
    p = select_profile(25, "improved")
    assert (p.ht.tau_match, p.wie.nstep) == (3000, 2)


def test_improved_high_row():
    p = select_profile(60, "improved")
    assert (p.ht.n1, p.ht.n2, p.ht.tau_match) == (8, 32, 15000)


def test_baseline_very_high_row():
    p = select_profile(90, "baseline")
    assert (p.ht.n1, p.ht.n2, p.ht.tau_match) == (11, 16, 5000)


def test_satellite_high_row():
    p = select_profile(60, "satellite")
    assert (p.ht.tau_match, p.ht.ns, p.ht.n1) == (18000, 99, 8)
    assert p.wie == select_profile(60, "improved").wie


def test_defaults_for_unlisted_fields():
    p = select_profile(10, "baseline")
    assert (p.ht.n1, p.ht.n2, p.ht.nstep, p.ht.ns, p.ht.lambda_3d) == (8, 16, 3, 39, 2.7)
    assert (p.wie.n1, p.wie.n2, p.wie.tau_match, p.wie.ns) == (8, 32, 400, 39)
    assert p.window_beta == 2.0


def test_baseline_prefilter_from_40():
    assert select_profile(39.9, "baseline").ht.lambda_2d is None
    assert select_profile(40, "baseline").ht.lambda_2d == 2.0
    assert select_profile(90, "baseline").ht.lambda_2d == 2.0


@pytest.mark.parametrize("mode", list(Mode))
def test_profile_sweep_invariants(mode):
    for sigma in range(1, 101):
        p = select_profile(sigma, mode)
        for stage in (p.ht, p.wie):
            assert stage.n2 & (stage.n2 - 1) == 0
            assert min(stage.n1, stage.n2, stage.nstep, stage.ns) >= 1
            assert stage.tau_match >= 0
        if mode is not Mode.BASELINE:
            assert p.ht.lambda_2d is None


def test_sigma_out_of_range():
    with pytest.raises(ValueError):
        select_profile(0, "improved")
    with pytest.raises(ValueError):
        select_profile(-3, "baseline")
    with pytest.warns(UserWarning, match="exceeds 100"):
        p = select_profile(150, "improved")
    assert p == select_profile(100, "improved")
    with pytest.raises(ValueError):
        select_profile(20, "fancy")


def test_profile_text_round_trip():
    for sigma, mode in [(25, "improved"), (45, "baseline"), (90, "satellite")]:
        p = select_profile(sigma, mode)
        assert ParameterProfile().with_overrides(parse_profile_text(p.to_text())) == p


def test_profile_text_format():
    text = select_profile(90, "improved").to_text()
    assert "ht.n2 = 64\n" in text
    assert "ht.tau_match = 30000\n" in text
    assert "ht.lambda_2d = none\n" in text


def test_overrides_and_errors():
    p = select_profile(25).with_overrides({"ht.lambda_3d": "0", "window_beta": 0, "wie.nstep": "1"})
    assert (p.ht.lambda_3d, p.window_beta, p.wie.nstep) == (0.0, 0.0, 1)
    with pytest.raises(KeyError):
        p.with_overrides({"ht.bogus": 1})
    with pytest.raises(KeyError):
        p.with_overrides({"ht": 1})
    with pytest.raises(ValueError, match="power of two"):
        p.with_overrides({"ht.n2": 12})
    with pytest.raises(ValueError, match="integer"):
        p.with_overrides({"ht.n1": 7.5})
    with pytest.raises(ValueError, match="nstep"):
        p.with_overrides({"ht.nstep": 9})


def test_parse_profile_text_comments_and_errors():
    assert parse_profile_text("# c\n\nht.n1 = 8  # trailing\n") == {"ht.n1": 8}
    with pytest.raises(ValueError, match="line 1"):
        parse_profile_text("ht.n1 8")
    with pytest.raises(ValueError, match="line 2"):
        parse_profile_text("ht.n1 = 8\nht.n2 = lots")


def passthrough(profile):
    return profile.with_overrides({"ht.lambda_3d": 0, "window_beta": 0})


@pytest.mark.parametrize("sigma, mode", [(25, "improved"), (60, "baseline"), (90, "satellite")])
def test_passthrough_identity(sigma, mode):
    noisy = np.random.default_rng(0).uniform(0, 255, (40, 40))
    res = denoise(noisy, 1e-7, passthrough(select_profile(sigma, mode)))
    assert np.abs(res.basic - noisy).max() < 1e-8
    assert np.abs(res.final - noisy).max() < 1e-6


@pytest.mark.parametrize("sigma", [5, 25, 60])
def test_constant_plane(sigma):
    c = 100.0
    res = denoise(np.full((40, 40), c), sigma, select_profile(sigma))
    assert np.abs(res.basic - c).max() < 1e-8
    # the empirical Wiener gain also attenuates the group DC: |DC| >= c*n1, depth >= 1
    n1 = select_profile(sigma).wie.n1
    bound = c * sigma ** 2 / ((c * n1) ** 2 + sigma ** 2)
    assert np.all(res.final <= c + 1e-8)
    assert np.abs(res.final - c).max() <= bound


def test_outputs_are_clamped():
    rng = np.random.default_rng(1)
    noisy = np.clip(rng.normal(250, 40, (32, 32)), -50, 400)
    res = denoise(noisy, 40, select_profile(40))
    for plane in res:
        assert plane.min() >= 0 and plane.max() <= 255


def test_deterministic_single_worker():
    noisy = np.random.default_rng(2).uniform(0, 255, (36, 36))
    a = denoise(noisy, 30, select_profile(30))
    b = denoise(noisy, 30, select_profile(30))
    assert np.array_equal(a.final, b.final) and np.array_equal(a.basic, b.basic)


def test_multi_worker_matches_single():
    noisy = np.random.default_rng(3).uniform(0, 255, (40, 40))
    one = denoise(noisy, 30, select_profile(30), workers=1)
    three = denoise(noisy, 30, select_profile(30), workers=3)
    assert np.abs(one.final - three.final).max() < 1e-9
    assert np.abs(one.basic - three.basic).max() < 1e-9


def test_plane_too_small():
    with pytest.raises(ValueError, match="at least 11x11"):
        denoise(np.zeros((10, 10)), 60, select_profile(60, "baseline"))


def test_denoise_rejects_bad_input():
    with pytest.raises(ValueError):
        denoise(np.full((16, 16), np.nan), 10, select_profile(10))
    with pytest.raises(ValueError):
        denoise(np.zeros((16, 16)), 0, select_profile(10))


def test_denoising_reduces_error(camera256):
    img = camera256[64:160, 64:160]
    noisy = img + np.random.default_rng(0).normal(0, 25, img.shape)
    res = denoise(noisy, 25, select_profile(25))
    err = lambda x: np.mean((x - img) ** 2)
    assert err(res.final) < err(res.basic) < err(noisy) / 4
