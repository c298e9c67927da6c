"""Max-min power allocation with per-user caps.

The instantaneous allocator solves the equal-SINR problem by bisecting over
the common SINR level tau; for each candidate tau the interference variables
d_k(tau) are obtained as the unique fixed point of a standard interference
function.  The asymptotic allocator is the closed-form large-system limit
p_k = alpha_0 / ell_k.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as sla

from .beamforming import sinr_post_mmse
from .errors import ConvergenceError

FIXED_POINT_TOL = 1e-10
FIXED_POINT_MAX_ITER = 10_000
BISECTION_REL_TOL = 1e-9
CAP_ACTIVE_REL_TOL = 1e-6
_NEWTON_ENTRY_REL = 1e-2
_PLAIN_WARMUP_ITERS = 25
_STAGNATION_REL = 1e-8


@dataclass(frozen=True)
class InterferenceState:
    """Fixed point d_k(tau) of the standard interference map at SINR target tau."""

    d: np.ndarray
    tau: float
    residual: float
    iterations: int


@dataclass(frozen=True)
class PowerAllocation:
    """Physical per-user powers (Watts) and the achieved equal-SINR level."""

    p_phys: np.ndarray
    tau_star: float | None
    binding_users: np.ndarray
    d: np.ndarray | None = None
    sinr: np.ndarray | None = field(default=None, repr=False)


def _gram_channels(u, h2_tilde):
    g = np.asarray(u, dtype=complex) @ np.asarray(h2_tilde, dtype=complex)
    return g


def _interference_map(g_tilde, d, tau, sigma2, *, cross=False):
    """One application of the interference map h(d; tau), all users at once.

    Uses A = sum_i c_i g_i g_i^H + sigma^2 I with c_i = tau / (K d_i) and the
    rank-one identity g_k^H A_k^-1 g_k = q_k / (1 - c_k q_k); the c_i carry
    the 1/K scaling so that the fixed point certifies the equal-SINR property
    of the exact allocation.  With ``cross`` the full matrix of squared
    cross terms |g_k^H A_k^-1 g_i|^2 is returned as well (for the Newton
    Jacobian), at the cost of a K x K Gram product.
    """
    m, k = g_tilde.shape
    c = tau / (k * d)
    a = (g_tilde * c[None, :]) @ g_tilde.conj().T + sigma2 * np.eye(m)
    cho = sla.cho_factor(a, lower=True)
    w = sla.cho_solve(cho, g_tilde)
    q = np.einsum("mk,mk->k", g_tilde.conj(), w).real
    denom = np.maximum(1.0 - c * q, np.finfo(float).tiny)
    h = (q / denom) / k
    if not cross:
        return h
    # g_k^H A_k^-1 g_i = q_ki / (1 - c_k q_kk) by the same rank-one identity
    q_full = g_tilde.conj().T @ w
    cross_sq = np.abs(q_full) ** 2 / denom[:, None] ** 2
    return h, cross_sq


def interference_fixed_point(tau, u, h2_tilde, noise_power, *, g_tilde=None,
                             d0=None):
    """Unique fixed point d_1(tau), ..., d_K(tau) of the interference map.

    The plain iteration (convergent by the standard interference function
    property, but only linearly and slowly at large tau) is run until the
    iterate is in the Newton basin, then Newton's method with the analytic
    Jacobian finishes at quadratic rate.  ``d0`` warm-starts the solve.
    """
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    if noise_power <= 0:
        raise ValueError("noise power must be positive")
    if g_tilde is None:
        g_tilde = _gram_channels(u, h2_tilde)
    k = g_tilde.shape[1]
    sigma2 = noise_power / k

    d_init = np.linalg.norm(g_tilde, axis=0) ** 2 / (k * sigma2)
    if tau == 0.0:
        return InterferenceState(d=d_init, tau=0.0, residual=0.0, iterations=1)
    d = d_init if d0 is None else np.asarray(d0, dtype=float).copy()

    rel = np.inf
    best_rel = np.inf
    stalled = 0
    for it in range(1, FIXED_POINT_MAX_ITER + 1):
        if rel < _NEWTON_ENTRY_REL or it > _PLAIN_WARMUP_ITERS:
            h, cross_sq = _interference_map(g_tilde, d, tau, sigma2, cross=True)
            rel = float(np.max(np.abs(h - d) / d))
            if rel < FIXED_POINT_TOL:
                return InterferenceState(d=h, tau=float(tau), residual=rel,
                                         iterations=it)
            # accept roundoff-limited stagnation near the fixed point
            stalled = stalled + 1 if rel > 0.5 * best_rel else 0
            best_rel = min(best_rel, rel)
            if stalled >= 10 and best_rel < _STAGNATION_REL:
                return InterferenceState(d=h, tau=float(tau), residual=rel,
                                         iterations=it)
            # Newton on F(d) = d - h(d): J = I - (tau/K^2) cross_sq / d_i^2
            jac = np.eye(k) - (tau / k**2) * cross_sq / d[None, :] ** 2
            np.fill_diagonal(jac, 1.0)
            try:
                step = np.linalg.solve(jac, d - h)
            except np.linalg.LinAlgError:
                step = d - h
            # damp the step to preserve positivity instead of discarding it
            d_new = d - step
            halvings = 0
            while np.any(d_new <= 0) and halvings < 60:
                step *= 0.5
                d_new = d - step
                halvings += 1
            d = h if np.any(d_new <= 0) else d_new
        else:
            d_new = _interference_map(g_tilde, d, tau, sigma2)
            rel = float(np.max(np.abs(d_new - d) / d))
            d = d_new
            if rel < FIXED_POINT_TOL:
                return InterferenceState(d=d, tau=float(tau), residual=rel,
                                         iterations=it)
    raise ConvergenceError(
        f"interference fixed point did not converge at tau={tau}",
        residual=rel, iterations=FIXED_POINT_MAX_ITER,
    )


def allocate_power_instantaneous(u, h2_tilde, ell, p_max, noise_power):
    """Exact max-min power allocation under per-user caps.

    Bisects over tau on the feasibility test tau / d_k(tau) <= K ell_k
    p_max_k; at the optimum every user attains the same SINR tau_star and at
    least one cap is active.  ``p_max`` holds the physical per-user caps.
    """
    ell = np.asarray(ell, dtype=float)
    p_max = np.broadcast_to(np.asarray(p_max, dtype=float), ell.shape)
    if np.any(ell <= 0) or np.any(p_max <= 0):
        raise ValueError("path losses and power caps must be positive")
    if not np.isfinite(noise_power) or noise_power <= 0:
        raise ValueError("noise power must be positive and finite")

    g_tilde = _gram_channels(u, h2_tilde)
    k = g_tilde.shape[1]
    budget = k * ell * p_max  # K ell_k p_max_k

    warm = {"d": None}

    def feasible(tau):
        state = interference_fixed_point(tau, None, None, noise_power,
                                         g_tilde=g_tilde, d0=warm["d"])
        warm["d"] = state.d
        return bool(np.all(tau / state.d <= budget)), state

    d0 = interference_fixed_point(0.0, None, None, noise_power, g_tilde=g_tilde)
    lo = 0.0
    hi = float(np.max(budget) * np.max(d0.d))
    if hi <= 0 or not np.isfinite(hi):
        raise ValueError("infeasible bisection bracket")
    ok, _ = feasible(hi)
    doublings = 0
    while ok:
        hi *= 2.0
        doublings += 1
        if doublings > 200:
            raise ValueError("could not bracket the optimal SINR level")
        ok, _ = feasible(hi)

    while (hi - lo) > BISECTION_REL_TOL * hi:
        mid = 0.5 * (lo + hi)
        ok, _ = feasible(mid)
        if ok:
            lo = mid
        else:
            hi = mid

    tau_star = lo
    state = interference_fixed_point(tau_star, None, None, noise_power,
                                     g_tilde=g_tilde, d0=warm["d"])
    p_phys = tau_star / (k * ell * state.d)

    ratio = p_phys / p_max
    binding = np.flatnonzero(ratio >= 1.0 - CAP_ACTIVE_REL_TOL)
    if binding.size == 0:
        binding = np.array([int(np.argmax(ratio))])

    g = g_tilde * np.sqrt(ell)[None, :]
    sinr = sinr_post_mmse(g, k * p_phys, noise_power)
    return PowerAllocation(
        p_phys=p_phys,
        tau_star=float(tau_star),
        binding_users=binding,
        d=state.d,
        sinr=sinr.per_user,
    )


def allocate_power_asymptotic(ell, p_max, k):
    """Large-system power allocation: p_phys_k = alpha_0 / (K ell_k).

    alpha_0 = min_k K ell_k p_max_k, so the user attaining the minimum sits
    exactly at its cap and everyone else is below.
    """
    ell = np.asarray(ell, dtype=float)
    p_max = np.broadcast_to(np.asarray(p_max, dtype=float), ell.shape)
    if np.any(ell <= 0) or np.any(p_max <= 0):
        raise ValueError("path losses and power caps must be positive")
    budget = k * ell * p_max
    alpha0 = float(np.min(budget))
    p_phys = alpha0 / (k * ell)
    binding = np.flatnonzero(budget <= alpha0 * (1.0 + CAP_ACTIVE_REL_TOL))
    return PowerAllocation(p_phys=p_phys, tau_star=None, binding_users=binding)


def min_power_budget(ell, p_max, k):
    """alpha_0 = min_k K ell_k p_max_k, the binding interference budget."""
    ell = np.asarray(ell, dtype=float)
    p_max = np.broadcast_to(np.asarray(p_max, dtype=float), ell.shape)
    return float(np.min(k * ell * p_max))
