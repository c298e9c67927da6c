"""RIS phase design.

Two projected-gradient-ascent routines over the unit-modulus torus, both
parametrized by the real phase vector theta (so the projection is exact by
construction):

* a statistical-CSI design maximizing the deterministic equivalent tau_bar,
  with an analytic implicit-function gradient, and
* an instantaneous-CSI baseline maximizing a log-sum-exp smoothed minimum of
  the exact post-MMSE SINRs with central finite differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .asymptotics import solve_taubar
from .beamforming import sinr_post_mmse_stack
from .errors import GradientSingularityError
from .model import deterministic_factor

IMPLICIT_SINGULARITY_TOL = 1e-12


@dataclass(frozen=True)
class PhaseVector:
    """N RIS phases theta_n with unit-modulus responses phi_n = exp(j theta_n)."""

    theta: np.ndarray

    def __post_init__(self):
        theta = np.mod(np.asarray(self.theta, dtype=float).reshape(-1), 2.0 * np.pi)
        object.__setattr__(self, "theta", theta)

    @property
    def phi(self):
        return np.exp(1j * self.theta)

    @classmethod
    def zeros(cls, n):
        return cls(theta=np.zeros(n))

    @classmethod
    def random(cls, n, rng):
        return cls(theta=rng.uniform(0.0, 2.0 * np.pi, size=n))

    @classmethod
    def from_phi(cls, phi):
        phi = np.asarray(phi, dtype=complex).reshape(-1)
        if not np.allclose(np.abs(phi), 1.0, atol=1e-10):
            raise ValueError("RIS responses must be unit modulus")
        return cls(theta=np.angle(phi))


@dataclass
class AscentTrace:
    """Per-iteration log of a projected-gradient-ascent run."""

    objective: list = field(default_factory=list)
    step_sizes: list = field(default_factory=list)
    grad_norms: list = field(default_factory=list)
    termination: str = ""

    @property
    def n_iter(self):
        return len(self.step_sizes)


@dataclass(frozen=True)
class PgaOptions:
    max_iter: int = 500
    rel_tol: float = 1e-8
    initial_step: float = 1.0
    contraction: float = 0.5
    armijo_c: float = 1e-4
    min_step: float = 1e-14
    fd_step: float = 1e-5
    smoothing: float = 50.0
    restarts: int = 0


def taubar_of_phases(stats, phases, alpha0, noise_power):
    """Deterministic-equivalent minimum SINR achieved by a phase vector."""
    u = deterministic_factor(stats, phases)
    return solve_taubar(alpha0, u, noise_power / stats.K, stats.K)


def grad_taubar_phases(stats, phases, alpha0, noise_power, *, tau_bar=None):
    """Wirtinger partials d tau_bar / d phi_n via the implicit function theorem.

    Returns (gradient, tau_bar).  The ascent direction over the real phases
    is 2 Re{j phi_n grad_n} (see :func:`taubar_theta_gradient`).
    """
    k = stats.K
    sigma2 = noise_power / k
    phi = np.asarray(getattr(phases, "phi", phases), dtype=complex).reshape(-1)
    a1 = stats.H1 @ stats.R_ris_sqrt                      # M x N
    u = a1 @ (phi[:, None] * stats.R_users_sqrt)
    gram = u @ u.conj().T

    lam, q = np.linalg.eigh(gram)
    lam = np.clip(lam, 0.0, None)
    if tau_bar is None:
        tau_bar = solve_taubar(alpha0, None, sigma2, k, eigvals=lam)

    scale = alpha0 / (1.0 + tau_bar)
    t_diag = 1.0 / (scale * lam + sigma2)                  # eigenvalues of T

    dg_dtau = 1.0 - (scale**2 / k) * float(np.sum((lam * t_diag) ** 2))
    if abs(dg_dtau) <= IMPLICIT_SINGULARITY_TOL:
        raise GradientSingularityError(
            "implicit-function denominator vanished; gradient undefined")

    # C1 = W^H T W and C2 = W^H (T UU^H T) W with W = H1 R_ris^(1/2)
    qa = q.conj().T @ a1                                   # M x N in the T eigenbasis
    c1 = qa.conj().T @ (t_diag[:, None] * qa)
    c2 = qa.conj().T @ ((t_diag**2 * lam)[:, None] * qa)

    # diag of R_users Phi^H C for both C matrices
    ru_phi = stats.R_users * phi.conj()[None, :]
    d1 = np.einsum("nj,jn->n", ru_phi, c1)
    d2 = np.einsum("nj,jn->n", ru_phi, c2)

    dg_dphi = -(alpha0 / k) * d1 + (alpha0 * scale / k) * d2
    return -dg_dphi / dg_dtau, tau_bar


def taubar_theta_gradient(stats, phases, alpha0, noise_power, *, tau_bar=None):
    """Gradient of tau_bar with respect to the real phases theta."""
    phi = np.asarray(getattr(phases, "phi", phases), dtype=complex).reshape(-1)
    grad_phi, tau_bar = grad_taubar_phases(stats, phases, alpha0, noise_power,
                                           tau_bar=tau_bar)
    return 2.0 * np.real(1j * phi * grad_phi), tau_bar


def _ascend(theta0, value_fn, grad_fn, opts):
    """Projected gradient ascent with Armijo backtracking over theta."""
    theta = np.asarray(theta0, dtype=float).copy()
    trace = AscentTrace()
    f = value_fn(theta)
    trace.objective.append(f)

    for _ in range(opts.max_iter):
        g = grad_fn(theta)
        gnorm2 = float(g @ g)
        trace.grad_norms.append(math.sqrt(gnorm2))
        if gnorm2 == 0.0:
            trace.termination = "zero_gradient"
            break
        step = opts.initial_step
        accepted = False
        while step >= opts.min_step:
            f_new = value_fn(theta + step * g)
            if f_new >= f + opts.armijo_c * step * gnorm2:
                accepted = True
                break
            step *= opts.contraction
        if not accepted:
            trace.step_sizes.append(0.0)
            trace.termination = "no_ascent_step"
            break
        theta = theta + step * g
        trace.step_sizes.append(step)
        trace.objective.append(f_new)
        gain = (f_new - f) / max(abs(f), 1e-300)
        f = f_new
        if gain < opts.rel_tol:
            trace.termination = "objective_stalled"
            break
    else:
        trace.termination = "max_iter"
    return np.mod(theta, 2.0 * np.pi), f, trace


def optimize_phases_statistical(stats, alpha0, noise_power, init=None, opts=None,
                                rng=None):
    """Maximize the deterministic-equivalent SINR tau_bar over the RIS phases.

    Runs projected gradient ascent with the analytic implicit-function
    gradient; with ``opts.restarts`` > 0, additional uniform-random starting
    points are tried and the best result kept.
    """
    opts = opts or PgaOptions()
    n = stats.N
    init = PhaseVector.zeros(n) if init is None else init

    def value(theta):
        return taubar_of_phases(stats, PhaseVector(theta), alpha0, noise_power)

    def grad(theta):
        return taubar_theta_gradient(stats, PhaseVector(theta), alpha0,
                                     noise_power)[0]

    starts = [init.theta]
    if opts.restarts > 0:
        rng = np.random.default_rng(0) if rng is None else rng
        starts += [rng.uniform(0.0, 2.0 * np.pi, size=n)
                   for _ in range(opts.restarts)]

    best = None
    for theta0 in starts:
        theta, f, trace = _ascend(theta0, value, grad, opts)
        if best is None or f > best[1]:
            best = (theta, f, trace)
    theta, _, trace = best
    return PhaseVector(theta), trace


def smoothed_min_sinr(stats, realization, phases, p, noise_power, rho=50.0):
    """Log-sum-exp lower bound on the minimum post-MMSE SINR."""
    value, _, _ = _stacked_objective_factory(stats, realization, p, noise_power, rho)
    theta = np.asarray(getattr(phases, "theta", phases), dtype=float)
    return float(value(theta))


def _stacked_objective_factory(stats, realization, p, noise_power, rho):
    """Smoothed-min objective over theta with precomputed channel factors."""
    a1 = stats.H1 @ stats.R_ris_sqrt                        # M x N
    v = stats.R_users_sqrt @ realization.H2_tilde           # N x K
    v = v * np.sqrt(stats.ell)[None, :]

    def value(theta):
        g = a1 @ (np.exp(1j * theta)[:, None] * v)
        sinr = sinr_post_mmse_stack(g, p, noise_power)
        return -logsumexp(-rho * sinr) / rho

    return value, a1, v


def optimize_phases_instantaneous(stats, realization, p, noise_power, init=None,
                                  opts=None):
    """Exact-CSI phase baseline: ascend a smoothed minimum of the user SINRs.

    The objective is -(1/rho) log sum_k exp(-rho SINR_k) with the SINRs
    evaluated in closed form under MMSE beamforming; gradients are central
    finite differences over theta, batched across all N perturbed phase
    vectors.  ``p`` is the raw power vector (physical power p_k / K).
    """
    opts = opts or PgaOptions()
    n = stats.N
    init = PhaseVector.zeros(n) if init is None else init
    rho = opts.smoothing
    h = opts.fd_step

    value, a1, v = _stacked_objective_factory(stats, realization, p, noise_power, rho)

    def grad(theta):
        phi = np.exp(1j * theta)
        g0 = a1 @ (phi[:, None] * v)
        # rank-one perturbed channel stacks for theta_n +/- h, all n at once
        deltas = np.stack([(np.exp(1j * h) - 1.0) * phi,
                           (np.exp(-1j * h) - 1.0) * phi])        # (2, N)
        pert = np.einsum("sn,mn,nk->snmk", deltas, a1, v)          # (2, N, M, K)
        g_stack = g0[None, None, :, :] + pert
        sinr = sinr_post_mmse_stack(g_stack, p, noise_power)       # (2, N, K)
        f = -logsumexp(-rho * sinr, axis=-1) / rho                 # (2, N)
        return (f[0] - f[1]) / (2.0 * h)

    theta, _, trace = _ascend(init.theta, value, grad, opts)
    return PhaseVector(theta), trace
