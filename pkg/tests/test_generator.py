import warnings

import numpy as np
import pytest

from scaledsm.generator import GeneratorParams, fading_gains, generate_scenario


def test_same_seed_same_bytes():
    p = GeneratorParams(N=16)
    assert generate_scenario(p, 7).to_json() == generate_scenario(p, 7).to_json()
    assert generate_scenario(p, 7).to_json() != generate_scenario(p, 8).to_json()


def test_shapes_and_units():
    s = generate_scenario(GeneratorParams(N=32, noise_dbm=-30, p_total_dbm=20, gamma_db=3), 1)
    assert (s.K, s.N) == (4, 32)
    np.testing.assert_allclose(s.noise, 1e-3)
    np.testing.assert_allclose(s.p_total, 100.0)
    np.testing.assert_allclose(s.p_mask, 100.0)
    assert s.gamma == pytest.approx(10 ** 0.3)
    np.testing.assert_array_equal(s.weight, [1, 1, 2, 2])


def test_reference_distance_calibration():
    # one link 10 m long: average received power 30 dB below transmitted
    params = GeneratorParams(K=1, N=8, tx_xy=[[0, 0]], rx_xy=[[0, 10]], weights=[1.0])
    gains = np.concatenate([generate_scenario(params, seed).gain.ravel() for seed in range(10_000)])
    assert 10 * np.log10(gains.mean()) == pytest.approx(-30.0, abs=1.0)


def test_path_loss_exponent():
    params = GeneratorParams(K=2, N=4, tx_xy=[[0, 0], [0, 0]], rx_xy=[[0, 10], [0, 20]], weights=[1, 1])
    g = params.mean_gain()
    assert g[1, 0] / g[0, 0] == pytest.approx(2.0 ** -3)


def test_fading_unit_mean():
    h = fading_gains(np.random.default_rng(0), (20_000,), 16, 8, 1.0)
    assert h.mean() == pytest.approx(1.0, abs=0.02)
    assert np.all(h >= 0)


def test_frequency_selective():
    s = generate_scenario(GeneratorParams(), 3)
    assert np.ptp(np.log(s.direct[0])) > 1.0


def test_default_topology_max_gain():
    # statistical: reported as a warning, never a failure
    over = [seed for seed in range(1, 21) if generate_scenario(GeneratorParams(), seed).gain.max() >= 1e-3]
    if over:
        warnings.warn(f"max gain >= 1e-3 for seeds {over}", stacklevel=1)


def test_params_validation():
    with pytest.raises(ValueError):
        GeneratorParams(K=2)
    with pytest.raises(ValueError):
        GeneratorParams(K=1, tx_xy=[[0, 0]], rx_xy=[[0, 0]], weights=[1])
    with pytest.raises(ValueError):
        GeneratorParams(N=0)


def test_params_json_round_trip(tmp_path):
    p = GeneratorParams(N=8, gamma_db=2.0)
    path = tmp_path / "g.json"
    p.to_json(path)
    assert GeneratorParams.from_json(path) == p
