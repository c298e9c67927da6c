"""Deterministic equivalents of the equal-SINR level and RMT validation tools.

The two fixed-point solvers operate on the eigenvalues of U U^H, so each
bisection step costs O(M) after one Hermitian eigendecomposition.  The
``noise`` argument of the solvers is the per-user constant
sigma^2 = sigma_tilde^2 / K (see :attr:`ChannelStatistics.sigma2`).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError
from .model import sample_complex_gaussian

SOLVER_RESIDUAL_TOL = 1e-12
_BISECT_ITERS = 200


@dataclass(frozen=True)
class DeterministicEquivalent:
    """Deterministic limits of the equal-SINR level and interference variables."""

    tau_bar: float
    d_bar: float
    alpha0: float
    tau_residual: float
    d_residual: float


@dataclass(frozen=True)
class ConvergenceReport:
    """Monte-Carlo spread of a random quantity around its deterministic limit."""

    dims: tuple
    mean: np.ndarray
    std: np.ndarray

    @property
    def decreasing(self):
        return bool(np.all(np.diff(self.mean) < 0))


def _gram_eigvals(u):
    u = np.asarray(u, dtype=complex)
    w = np.linalg.eigvalsh(u @ u.conj().T)
    return np.clip(w, 0.0, None)


def solve_dbar(tau, u, noise, k, *, eigvals=None):
    """Unique solution d_bar(tau) of the interference deterministic equivalent.

    Solves d = (1/K) Tr{U U^H (U U^H tau/(d (1+tau)) + sigma^2 I)^-1} by
    bisection on the normalized monotone form; requires K < M.
    """
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    if noise <= 0:
        raise ValueError("noise must be positive")
    lam = _gram_eigvals(u) if eigvals is None else np.asarray(eigvals, dtype=float)
    m = lam.shape[0]
    if k >= m:
        raise ValueError(f"K={k} must be smaller than M={m}")

    if tau == 0.0:
        return float(np.sum(lam) / (k * noise))

    a = tau / (1.0 + tau)

    def excess(d):
        # Trace{UU^H (UU^H a + sigma^2 d I)^-1} - K, strictly decreasing in d
        return float(np.sum(lam / (lam * a + noise * d))) - k

    hi = float(np.sum(lam) / (k * noise))
    lo = 0.0
    if excess(hi) > 0:  # rank-deficient corner; expand upward
        while excess(hi) > 0:
            hi *= 2.0
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if excess(mid) > 0:
            lo = mid
        else:
            hi = mid
    d = 0.5 * (lo + hi)
    rhs = float(np.sum(lam / (lam * a / d + noise))) / k
    if abs(d - rhs) > SOLVER_RESIDUAL_TOL * max(d, 1e-300) * 10:
        raise ConvergenceError("solve_dbar residual above tolerance",
                               residual=abs(d - rhs) / d)
    return d


def solve_taubar(alpha0, u, noise, k, *, eigvals=None):
    """Unique solution tau_bar of the deterministic equal-SINR fixed point.

    Solves tau = (alpha0/K) Tr{U U^H (U U^H alpha0/(1+tau) + sigma^2 I)^-1}
    by bisection on the equivalent decreasing form.
    """
    if alpha0 <= 0:
        raise ValueError("alpha0 must be positive")
    if noise <= 0:
        raise ValueError("noise must be positive")
    lam = _gram_eigvals(u) if eigvals is None else np.asarray(eigvals, dtype=float)

    def excess(tau):
        # (alpha0/K) Tr{UU^H (UU^H alpha0 tau/(1+tau) + sigma^2 tau I)^-1} - 1
        s = tau / (1.0 + tau)
        return float(alpha0 / k * np.sum(lam / (lam * alpha0 * s + noise * tau))) - 1.0

    lo = 0.0
    hi = 1.0
    while excess(hi) > 0:
        hi *= 2.0
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if excess(mid) > 0:
            lo = mid
        else:
            hi = mid
    tau = 0.5 * (lo + hi)
    rhs = float(alpha0 / k * np.sum(lam / (lam * alpha0 / (1.0 + tau) + noise)))
    if abs(tau - rhs) > SOLVER_RESIDUAL_TOL * max(tau, 1e-300) * 10:
        raise ConvergenceError("solve_taubar residual above tolerance",
                               residual=abs(tau - rhs) / tau)
    return tau


def deterministic_equivalent(alpha0, u, noise, k):
    """Solve both fixed points and report residuals plus tau_bar = alpha0 d_bar."""
    lam = _gram_eigvals(u)
    tau_bar = solve_taubar(alpha0, None, noise, k, eigvals=lam)
    d_bar = solve_dbar(tau_bar, None, noise, k, eigvals=lam)
    a = tau_bar / (1.0 + tau_bar)
    d_rhs = float(np.sum(lam / (lam * a / d_bar + noise))) / k
    t_rhs = float(alpha0 / k * np.sum(lam / (lam * alpha0 / (1.0 + tau_bar) + noise)))
    return DeterministicEquivalent(
        tau_bar=tau_bar,
        d_bar=d_bar,
        alpha0=alpha0,
        tau_residual=abs(tau_bar - t_rhs) / tau_bar,
        d_residual=abs(d_bar - d_rhs) / d_bar,
    )


def _scaled_setup(config, dims, seed):
    """Statistics + identity-phase factor U for each (K, M, N) size."""
    from dataclasses import replace

    from . import model

    out = []
    for i, (kk, mm, nn) in enumerate(dims):
        cfg = replace(config, M=mm, N=nn, K=kk)
        rng = np.random.default_rng(np.random.SeedSequence([seed, i]))
        geom = model.sample_geometry(cfg, rng)
        stats = model.build_statistics(cfg, geom, rng)
        u = model.deterministic_factor(stats, np.ones(nn, dtype=complex))
        out.append((cfg, stats, u, rng))
    return out


def validate_theorem1(tau, config, n_trials, dims, seed=0):
    """Monte-Carlo spread of the interference fixed point around d_bar(tau).

    For each size in ``dims`` (a list of (K, M, N) at roughly fixed ratios),
    reports mean and std over trials of max_k |d_k(tau) - d_bar| / d_bar.
    """
    from . import model
    from .power import interference_fixed_point

    means, stds = [], []
    for cfg, stats, u, rng in _scaled_setup(config, dims, seed):
        dbar = solve_dbar(tau, u, stats.sigma2, cfg.K)
        errs = []
        for _ in range(n_trials):
            h2 = sample_complex_gaussian(rng, (cfg.N, cfg.K))
            state = interference_fixed_point(tau, u, h2, stats.noise_power)
            errs.append(np.max(np.abs(state.d - dbar)) / dbar)
        errs = np.asarray(errs)
        means.append(errs.mean())
        stds.append(errs.std())
    return ConvergenceReport(dims=tuple(map(tuple, dims)),
                             mean=np.asarray(means), std=np.asarray(stds))


def validate_theorem2(config, n_trials, dims, seed=0):
    """Monte-Carlo convergence of (tau*, powers) to (tau_bar, alpha0/ell).

    Reports two ConvergenceReports: relative |tau* - tau_bar| / tau_bar and
    max_k |K p_phys_k ell_k - alpha0| / alpha0.
    """
    from .power import allocate_power_instantaneous, min_power_budget

    tau_means, tau_stds, pow_means, pow_stds = [], [], [], []
    for cfg, stats, u, rng in _scaled_setup(config, dims, seed):
        caps = np.full(cfg.K, cfg.p_max_w / cfg.K)
        alpha0 = min_power_budget(stats.ell, caps, cfg.K)
        tau_bar = solve_taubar(alpha0, u, stats.sigma2, cfg.K)
        tau_errs, pow_errs = [], []
        for _ in range(n_trials):
            h2 = sample_complex_gaussian(rng, (cfg.N, cfg.K))
            alloc = allocate_power_instantaneous(u, h2, stats.ell, caps,
                                                 stats.noise_power)
            tau_errs.append(abs(alloc.tau_star - tau_bar) / tau_bar)
            pow_errs.append(
                np.max(np.abs(cfg.K * alloc.p_phys * stats.ell - alpha0)) / alpha0)
        tau_means.append(np.mean(tau_errs))
        tau_stds.append(np.std(tau_errs))
        pow_means.append(np.mean(pow_errs))
        pow_stds.append(np.std(pow_errs))
    dims_t = tuple(map(tuple, dims))
    return (
        ConvergenceReport(dims=dims_t, mean=np.asarray(tau_means), std=np.asarray(tau_stds)),
        ConvergenceReport(dims=dims_t, mean=np.asarray(pow_means), std=np.asarray(pow_stds)),
    )


def resolvent_trace_equivalent(c_mat, u, z, k, *, tol=1e-12, max_iter=10_000):
    """Deterministic equivalent of (1/K) Tr{C (B - z I)^-1}, B = (1/K) U X X^H U^H.

    e(z) is solved by fixed-point iteration of
    e = (1/K) Tr{R (-z I + R / (1 + e))^-1} with R = U U^H; the returned
    value is (1/K) Tr{C (-z I + R / (1 + e))^-1}.
    """
    if not (np.isreal(z) and z < 0):
        raise ValueError("z must be a negative real number")
    z = float(np.real(z))
    u = np.asarray(u, dtype=complex)
    r = u @ u.conj().T
    lam, q = np.linalg.eigh(r)
    lam = np.clip(lam, 0.0, None)

    e = max(float(np.sum(lam)) / (k * -z), 1e-16)
    for _ in range(max_iter):
        e_new = float(np.sum(lam / (-z + lam / (1.0 + e)))) / k
        if abs(e_new - e) <= tol * max(abs(e), 1e-300):
            e = e_new
            break
        e = e_new
    else:
        raise ConvergenceError("resolvent fixed point did not converge")

    c_rot = np.einsum("im,ij,jm->m", q.conj(), np.asarray(c_mat, dtype=complex), q).real
    return float(np.sum(c_rot / (-z + lam / (1.0 + e)))) / k


def quadratic_form_concentration(a, n_trials, rng=None):
    """Empirical statistics of (1/M) y^H A y for y ~ CN(0, I_M).

    Returns (mean, std, trace/M); the std shrinks like 1/sqrt(M) as the
    dimension grows, which callers check by comparing two sizes.
    """
    a = np.asarray(a, dtype=complex)
    m = a.shape[0]
    rng = np.random.default_rng(0) if rng is None else rng
    y = sample_complex_gaussian(rng, (n_trials, m))
    vals = np.einsum("tm,mn,tn->t", y.conj(), a, y).real / m
    return float(vals.mean()), float(vals.std()), float(np.trace(a).real / m)
