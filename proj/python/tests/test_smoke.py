import math

import numpy as np
import pytest

import mixlab


def test_scene_is_valid_and_deterministic():
    a = mixlab.sample_scene(42)
    assert a == mixlab.sample_scene(42)
    assert 7.6 <= a["room_dims_m"][0] <= 8.4
    assert mixlab.validate_scene(a) == []


def test_rir_split_is_exact():
    rirs = mixlab.simulate_rir(mixlab.sample_scene(3))
    np.testing.assert_array_equal(rirs["h_early"] + rirs["h_late"], rirs["h"])
    assert rirs["h"].shape[:2] == (2, 6)


def test_stft_round_trip():
    x = np.random.default_rng(0).standard_normal((3, 4000))
    tf = mixlab.stft(x)
    assert tf.shape[0] == 3 and tf.shape[2] == 257
    np.testing.assert_allclose(mixlab.istft(tf, x.shape[1]), x, atol=1e-10)


def test_metrics():
    rng = np.random.default_rng(1)
    s = rng.standard_normal(4000)
    assert mixlab.sdr(s, s) == math.inf
    assert mixlab.si_sdr(s, 2.0 * s) == math.inf
    e = rng.standard_normal(4000)
    e -= e @ s / (s @ s) * s
    e *= math.sqrt((s @ s) / 100.0 / (e @ e))
    assert mixlab.sdr(s, s + e) == pytest.approx(20.0, abs=1e-9)
    assert mixlab.bss_eval_sdr(s, s + e, 64) >= mixlab.si_sdr(s, s + e) - 1e-6
    assert mixlab.resolve_permutation(np.array([[0.0, 10.0], [10.0, 0.0]])) == [1, 0]


def test_mvdr_is_distortionless():
    rng = np.random.default_rng(2)
    d = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    a = rng.standard_normal((4, 8)) + 1j * rng.standard_normal((4, 8))
    w = mixlab.mvdr_souden(np.outer(d, d.conj()), a @ a.conj().T, 1)
    assert np.vdot(w, d) == pytest.approx(d[1], rel=1e-8)


def test_cacgmm_and_separation():
    config = mixlab.default_config()
    config["synthetic"]["duration_s"] = [1.5, 1.5]
    config["em_iterations"] = 10
    scene = mixlab.simulate_scene(5, 0, config)
    np.testing.assert_array_equal(scene["y"], scene["x"].sum(axis=0) + scene["n"])
    masks, ll = mixlab.fit_cacgmm(mixlab.stft(scene["y"]), 2, iterations=5, seed=1)
    assert masks.shape[0] == 3
    np.testing.assert_allclose(masks.sum(axis=0), 1.0, atol=1e-9)
    assert len(ll) == 5
    estimates, rows = mixlab.separate_scene(5, 0, "cacgmm-mvdr", config)
    assert estimates.shape == (2, scene["y"].shape[1])
    assert {r["speaker"] for r in rows} == {0, 1}
    assert all(r["invasive_sdr"] is not None for r in rows)


def test_errors_map_to_python():
    with pytest.raises(ValueError):
        mixlab.stft(np.zeros((1, 10)))
