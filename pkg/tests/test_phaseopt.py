import numpy as np
import pytest

from risfair import emf, model, phaseopt, power
from risfair.phaseopt import PgaOptions, PhaseVector

from conftest import make_setup


def stat_instance(m=8, n=16, k=4, seed=0, **overrides):
    cfg, _, stats, real = make_setup(m, n, k, seed=seed, **overrides)
    caps = emf.physical_power_caps(emf.ExposureSpec.from_config(cfg), k)
    alpha0 = power.min_power_budget(stats.ell, caps, k)
    return cfg, stats, real, alpha0


def fd_gradient(stats, theta, alpha0, noise, h=1e-5):
    out = np.empty(theta.size)
    for i in range(theta.size):
        up, dn = theta.copy(), theta.copy()
        up[i] += h
        dn[i] -= h
        f_up = phaseopt.taubar_of_phases(stats, PhaseVector(up), alpha0, noise)
        f_dn = phaseopt.taubar_of_phases(stats, PhaseVector(dn), alpha0, noise)
        out[i] = (f_up - f_dn) / (2 * h)
    return out


def test_phase_vector_unit_modulus_and_roundtrip():
    theta = np.array([0.1, 2.0, 5.0])
    pv = PhaseVector(theta)
    assert np.allclose(np.abs(pv.phi), 1.0)
    back = PhaseVector.from_phi(pv.phi)
    assert np.allclose(np.exp(1j * back.theta), pv.phi)


def test_phase_vector_projection_idempotent():
    pv = PhaseVector(np.array([7.0, -1.0]))
    twice = PhaseVector(pv.theta)
    assert np.allclose(pv.theta, twice.theta)
    assert np.all((pv.theta >= 0) & (pv.theta < 2 * np.pi))


def test_phase_vector_rejects_non_unit_phi():
    with pytest.raises(ValueError):
        PhaseVector.from_phi(np.array([0.5 + 0.0j]))


def test_gradient_matches_finite_differences():
    for seed in range(3):
        cfg, stats, real, alpha0 = stat_instance(seed=seed)
        rng = np.random.default_rng(100 + seed)
        theta = rng.uniform(0, 2 * np.pi, cfg.N)
        grad, tau = phaseopt.taubar_theta_gradient(
            stats, PhaseVector(theta), alpha0, stats.noise_power)
        fd = fd_gradient(stats, theta, alpha0, stats.noise_power)
        scale = max(np.max(np.abs(fd)), 1e-300)
        assert np.max(np.abs(grad - fd)) / scale < 1e-5
        assert tau > 0


def test_gradient_scalar_case_n1():
    cfg, stats, real, alpha0 = stat_instance(m=2, n=1, k=1, seed=1)
    theta = np.array([0.7])
    grad, _ = phaseopt.taubar_theta_gradient(
        stats, PhaseVector(theta), alpha0, stats.noise_power)
    fd = fd_gradient(stats, theta, alpha0, stats.noise_power)
    assert grad[0] == pytest.approx(fd[0], abs=1e-8 * max(1.0, abs(fd[0])))


def test_gradient_zero_under_identity_correlations():
    # with R_users = R_ris = I the factor UU^H does not depend on the phases
    cfg, stats, real, alpha0 = stat_instance(
        seed=2, corr_eta_ris=0.0, corr_eta_users=0.0)
    theta = np.random.default_rng(0).uniform(0, 2 * np.pi, cfg.N)
    grad, _ = phaseopt.taubar_theta_gradient(
        stats, PhaseVector(theta), alpha0, stats.noise_power)
    assert np.max(np.abs(grad)) < 1e-12


def test_taubar_global_phase_invariance():
    cfg, stats, real, alpha0 = stat_instance(seed=3)
    rng = np.random.default_rng(5)
    theta = rng.uniform(0, 2 * np.pi, cfg.N)
    base = phaseopt.taubar_of_phases(stats, PhaseVector(theta), alpha0,
                                     stats.noise_power)
    shifted = phaseopt.taubar_of_phases(stats, PhaseVector(theta + 1.234),
                                        alpha0, stats.noise_power)
    assert shifted == pytest.approx(base, rel=1e-9)


def test_statistical_ascent_improves_and_monotone():
    cfg, stats, real, alpha0 = stat_instance(m=8, n=25, k=4, seed=4)
    rng = np.random.default_rng(6)
    init = PhaseVector.random(cfg.N, rng)
    tau_init = phaseopt.taubar_of_phases(stats, init, alpha0, stats.noise_power)
    phases, trace = phaseopt.optimize_phases_statistical(
        stats, alpha0, stats.noise_power, init=init)
    tau_final = phaseopt.taubar_of_phases(stats, phases, alpha0, stats.noise_power)
    assert tau_final >= tau_init
    assert np.all(np.diff(trace.objective) >= 0)
    assert trace.termination in ("objective_stalled", "max_iter",
                                 "zero_gradient", "no_ascent_step")


def test_statistical_ascent_zero_gradient_returns_init():
    cfg, stats, real, alpha0 = stat_instance(
        seed=5, corr_eta_ris=0.0, corr_eta_users=0.0)
    init = PhaseVector.zeros(cfg.N)
    phases, trace = phaseopt.optimize_phases_statistical(
        stats, alpha0, stats.noise_power, init=init)
    assert np.allclose(phases.theta, init.theta)
    # gradient is numerically ~1e-16, so either exit branch is acceptable
    assert trace.termination in ("zero_gradient", "no_ascent_step")


def test_statistical_ascent_restarts_keep_best():
    cfg, stats, real, alpha0 = stat_instance(m=8, n=16, k=4, seed=6)
    opts = PgaOptions(restarts=2, max_iter=50)
    phases, _ = phaseopt.optimize_phases_statistical(
        stats, alpha0, stats.noise_power, opts=opts,
        rng=np.random.default_rng(7))
    single, _ = phaseopt.optimize_phases_statistical(
        stats, alpha0, stats.noise_power, opts=PgaOptions(max_iter=50))
    tau_multi = phaseopt.taubar_of_phases(stats, phases, alpha0, stats.noise_power)
    tau_single = phaseopt.taubar_of_phases(stats, single, alpha0, stats.noise_power)
    assert tau_multi >= tau_single - 1e-12


def test_smoothed_min_bounds_true_min():
    cfg, _, stats, real = make_setup(6, 12, 3, seed=8)
    from risfair.beamforming import sinr_post_mmse

    rng = np.random.default_rng(9)
    theta = rng.uniform(0, 2 * np.pi, cfg.N)
    p = np.full(cfg.K, cfg.p_max_w)
    g, _ = model.effective_channels(stats, PhaseVector(theta), real)
    true_min = sinr_post_mmse(g, p, stats.noise_power).tau
    rho = 50.0
    smooth = phaseopt.smoothed_min_sinr(stats, real, PhaseVector(theta), p,
                                        stats.noise_power, rho=rho)
    assert smooth <= true_min + 1e-12
    assert smooth >= true_min - np.log(cfg.K) / rho - 1e-12


def test_instantaneous_ascent_unit_modulus_and_monotone():
    cfg, _, stats, real = make_setup(6, 12, 3, seed=10)
    p = np.full(cfg.K, cfg.p_max_w)
    opts = PgaOptions(max_iter=40)
    phases, trace = phaseopt.optimize_phases_instantaneous(
        stats, real, p, stats.noise_power, opts=opts)
    assert np.allclose(np.abs(phases.phi), 1.0)
    assert np.all(np.diff(trace.objective) >= 0)


def test_instantaneous_ascent_k1_improves_norm():
    improved = 0
    for seed in range(10):
        cfg, _, stats, real = make_setup(4, 8, 1, seed=seed)
        rng = np.random.default_rng(200 + seed)
        init = PhaseVector.random(cfg.N, rng)
        p = np.full(1, cfg.p_max_w)
        before = phaseopt.smoothed_min_sinr(stats, real, init, p, stats.noise_power)
        phases, _ = phaseopt.optimize_phases_instantaneous(
            stats, real, p, stats.noise_power, init=init,
            opts=PgaOptions(max_iter=60))
        after = phaseopt.smoothed_min_sinr(stats, real, phases, p, stats.noise_power)
        if after > before + 1e-12:
            improved += 1
    assert improved >= 9  # strict improvement on at least 95% of seeds


def test_instantaneous_gradient_matches_loop_fd():
    # batched rank-one finite differences equal the naive per-coordinate loop
    cfg, _, stats, real = make_setup(5, 8, 2, seed=12)
    p = np.full(cfg.K, cfg.p_max_w)
    rho, h = 50.0, 1e-5
    rng = np.random.default_rng(13)
    theta = rng.uniform(0, 2 * np.pi, cfg.N)

    value, _, _ = phaseopt._stacked_objective_factory(stats, real, p,
                                                      stats.noise_power, rho)
    naive = np.empty(cfg.N)
    for i in range(cfg.N):
        up, dn = theta.copy(), theta.copy()
        up[i] += h
        dn[i] -= h
        naive[i] = (value(up) - value(dn)) / (2 * h)

    opts = PgaOptions(max_iter=1)
    a1 = stats.H1 @ stats.R_ris_sqrt
    # reproduce the optimizer's batched gradient through one ascent step probe
    import risfair.phaseopt as po

    factory_value, a1_, v = po._stacked_objective_factory(
        stats, real, p, stats.noise_power, rho)
    phi = np.exp(1j * theta)
    g0 = a1_ @ (phi[:, None] * v)
    deltas = np.stack([(np.exp(1j * h) - 1.0) * phi,
                       (np.exp(-1j * h) - 1.0) * phi])
    pert = np.einsum("sn,mn,nk->snmk", deltas, a1_, v)
    from risfair.beamforming import sinr_post_mmse_stack
    from scipy.special import logsumexp

    sinr = sinr_post_mmse_stack(g0[None, None] + pert, p, stats.noise_power)
    f = -logsumexp(-rho * sinr, axis=-1) / rho
    batched = (f[0] - f[1]) / (2 * h)
    assert np.allclose(batched, naive, atol=1e-9, rtol=1e-6)
