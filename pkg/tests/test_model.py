import numpy as np
import pytest

from risfair import model
from risfair.model import Geometry, SystemConfig

from conftest import make_setup


def test_path_loss_los_reference_value():
    # gain 10^((0+0-35.95)/10) at 1 m, exponent 2.2
    assert model.path_loss_los(1.0) == pytest.approx(10 ** (-3.595), rel=1e-12)
    assert model.path_loss_los(10.0) == pytest.approx(10 ** (-3.595) / 10**2.2, rel=1e-12)


def test_path_loss_nlos_reference_value():
    assert model.path_loss_nlos(1.0) == pytest.approx(10 ** (-3.305), rel=1e-12)
    assert model.path_loss_nlos(5.0) == pytest.approx(10 ** (-3.305) / 5**3.67, rel=1e-12)


def test_path_loss_antenna_gains_add():
    base = model.path_loss_los(3.0)
    assert model.path_loss_los(3.0, g_t=5.0, g_r=3.0) == pytest.approx(
        base * 10 ** 0.8, rel=1e-12)


def test_path_loss_rejects_nonpositive_distance():
    with pytest.raises(ValueError):
        model.path_loss_los(0.0)
    with pytest.raises(ValueError):
        model.path_loss_nlos(-1.0)


def test_exp_correlation_structure():
    r = model.exp_correlation_matrix(0.5, 4)
    assert r[0, 3] == pytest.approx(0.125)
    assert np.allclose(np.diag(r), 1.0)
    assert np.allclose(r, r.conj().T)
    w = np.linalg.eigvalsh(r)
    assert w.min() > 0


def test_exp_correlation_identity_at_zero():
    assert np.allclose(model.exp_correlation_matrix(0.0, 5), np.eye(5))


def test_exp_correlation_rejects_bad_eta():
    for eta in (-0.1, 1.0, 1.5):
        with pytest.raises(ValueError):
            model.exp_correlation_matrix(eta, 3)


def test_hermitian_sqrt_squares_back():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
    r = x @ x.conj().T
    s = model.hermitian_sqrt(r)
    assert np.allclose(s @ s, r)
    assert np.allclose(s, s.conj().T)


def test_hermitian_sqrt_rejects_indefinite():
    with pytest.raises(ValueError):
        model.hermitian_sqrt(np.diag([1.0, -0.5]))


def test_noise_power_100mhz():
    # -174 dBm/Hz + 80 dB = -94 dBm
    assert model.noise_power_watts(100e6) == pytest.approx(10 ** (-9.4) * 1e-3, rel=1e-12)


def test_system_config_defaults():
    cfg = SystemConfig(M=4, N=8, K=2)
    assert cfg.d_bs == pytest.approx(0.5 * cfg.carrier_wavelength)
    assert cfg.d_ris == pytest.approx(0.5 * cfg.carrier_wavelength)
    assert cfg.noise_power == pytest.approx(model.noise_power_watts(100e6))


@pytest.mark.parametrize("bad", [
    dict(M=0, N=8, K=2),
    dict(M=4, N=8, K=2, rician_kappa=-1.0),
    dict(M=4, N=8, K=2, corr_eta_ris=1.0),
    dict(M=4, N=8, K=2, p_max_w=0.0),
    dict(M=4, N=8, K=2, noise_bandwidth_hz=0.0),
])
def test_system_config_validation(bad):
    with pytest.raises(ValueError):
        SystemConfig(**bad)


def test_geometry_distances():
    geom = Geometry(np.zeros(3), np.array([3.0, 4.0, 0.0]),
                    np.array([[3.0, 4.0, 5.0]]))
    assert geom.bs_ris_distance == pytest.approx(5.0)
    assert geom.user_ris_distances[0] == pytest.approx(5.0)


def test_geometry_rejects_coincident_positions():
    with pytest.raises(ValueError):
        Geometry(np.zeros(3), np.zeros(3), np.ones((1, 3)))
    with pytest.raises(ValueError):
        Geometry(np.zeros(3), np.ones(3), np.ones((1, 3)))


def test_sample_geometry_within_rectangle():
    cfg = SystemConfig(M=4, N=8, K=50)
    geom = model.sample_geometry(cfg, np.random.default_rng(0))
    x, y, z = geom.user_positions.T
    assert np.all((x >= 10.0) & (x <= 15.0))
    assert np.all((y >= 5.0) & (y <= 10.0))
    assert np.all(z == 1.5)


def test_sample_h1_determinism_regression():
    # frozen draw; guards the channel generator against silent changes
    cfg = SystemConfig(M=4, N=6, K=3)
    rng = np.random.default_rng(2024)
    geom = model.sample_geometry(cfg, rng)
    h1 = model.sample_H1(cfg, geom, rng)
    assert geom.user_positions[0, 0] == pytest.approx(13.37915669, abs=1e-7)
    assert h1[0, 0] == pytest.approx(0.0004772159866334402 - 0.0001413475282576651j, rel=1e-12)
    assert h1[2, 3] == pytest.approx(0.0005052294499485006 - 0.00011253608356100346j, rel=1e-12)
    assert h1[3, 5] == pytest.approx(0.0004436227818215438 + 0.0002667816108866942j, rel=1e-12)
    assert np.linalg.norm(h1) == pytest.approx(0.002737643061260835, rel=1e-12)


def test_sample_h1_pure_los_magnitudes():
    # kappa -> infinity: every entry has magnitude sqrt(pl / N)
    cfg = SystemConfig(M=4, N=6, K=2, rician_kappa=1e12)
    rng = np.random.default_rng(1)
    geom = model.sample_geometry(cfg, rng)
    h1 = model.sample_H1(cfg, geom, rng)
    pl = model.path_loss_los(geom.bs_ris_distance, cfg.gain_bs_dbi, cfg.gain_ris_dbi)
    assert np.allclose(np.abs(h1), np.sqrt(pl / cfg.N), rtol=1e-5)


def test_build_statistics_shapes_and_invariants(small_setup):
    cfg, _, stats, real = small_setup
    assert stats.H1.shape == (cfg.M, cfg.N)
    assert stats.R_ris.shape == (cfg.N, cfg.N)
    assert stats.ell.shape == (cfg.K,)
    assert real.H2_tilde.shape == (cfg.N, cfg.K)
    assert stats.sigma2 == pytest.approx(stats.noise_power / cfg.K)
    s = stats.R_ris_sqrt
    assert np.allclose(s @ s, stats.R_ris)


def test_effective_channels_definition(small_setup):
    cfg, _, stats, real = small_setup
    rng = np.random.default_rng(3)
    phi = np.exp(1j * rng.uniform(0, 2 * np.pi, cfg.N))
    g, u = model.effective_channels(stats, phi, real)
    expect_u = (stats.H1 @ stats.R_ris_sqrt) @ np.diag(phi) @ stats.R_users_sqrt
    assert np.allclose(u, expect_u)
    assert np.allclose(g, (u @ real.H2_tilde) * np.sqrt(stats.ell)[None, :])


def test_effective_channels_rejects_non_unit_phases(small_setup):
    cfg, _, stats, real = small_setup
    with pytest.raises(ValueError):
        model.effective_channels(stats, np.full(cfg.N, 0.5 + 0j), real)
    with pytest.raises(ValueError):
        model.effective_channels(stats, np.ones(cfg.N + 1, dtype=complex), real)


def test_sample_h2_reproducible():
    cfg, geom, _, _ = make_setup(4, 8, 2, seed=5)
    a, ell_a = model.sample_H2(cfg, geom, np.random.default_rng(9))
    b, ell_b = model.sample_H2(cfg, geom, np.random.default_rng(9))
    assert np.array_equal(a.H2_tilde, b.H2_tilde)
    assert np.array_equal(ell_a, ell_b)
    assert np.all(ell_a > 0)
