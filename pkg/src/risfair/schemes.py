"""Alternating-optimization driver for the six compared allocation schemes.

Scheme semantics (BF / power / phases):
  S1  instantaneous / instantaneous / instantaneous (smoothed-min ascent)
  S2  instantaneous / instantaneous / statistical (deterministic equivalent)
  S3  instantaneous / statistical   / statistical
  S4  instantaneous / statistical   / theta_n = 0
  S5  instantaneous / instantaneous / theta_n = 0
  S6  instantaneous / instantaneous / theta_n ~ unif[0, 2 pi]

Statistical quantities (phases, asymptotic powers) depend only on the channel
statistics, so they are computed once and reused across fading realizations;
only S1 re-optimizes phases inside the per-realization alternation loop.
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field

import numpy as np

from . import emf, model, phaseopt, power
from .beamforming import Beamformer, SinrReport, mmse_beamformer, sinr_per_user

OUTER_REL_TOL = 1e-6
OUTER_MAX_ROUNDS = 20


class SchemeId(enum.Enum):
    S1 = "S1"
    S2 = "S2"
    S3 = "S3"
    S4 = "S4"
    S5 = "S5"
    S6 = "S6"

    @property
    def statistical_power(self):
        return self in (SchemeId.S3, SchemeId.S4)

    @property
    def statistical_phases(self):
        return self in (SchemeId.S2, SchemeId.S3)

    @property
    def instantaneous_phases(self):
        return self is SchemeId.S1


@dataclass(frozen=True)
class AllocationResult:
    """Full output of one scheme run on one channel realization."""

    scheme: SchemeId
    beamformer: Beamformer
    power: power.PowerAllocation
    phases: phaseopt.PhaseVector
    sinr: SinrReport
    seed: int | None
    rounds: int
    converged: bool
    stat_time_s: float
    solve_time_s: float


@dataclass(frozen=True)
class MonteCarloSummary:
    """Aggregate min-SINR statistics of one scheme over fading realizations."""

    scheme: SchemeId
    n_trials: int
    seed: int
    min_sinr: np.ndarray          # per-trial minimum SINR (linear)
    power_sum: np.ndarray         # per-trial total transmit power (Watts)
    stat_time_s: float            # one-time statistical computation
    trial_times_s: np.ndarray

    @property
    def mean(self):
        return float(self.min_sinr.mean())

    @property
    def std(self):
        return float(self.min_sinr.std())

    @property
    def min(self):
        return float(self.min_sinr.min())

    @property
    def max(self):
        return float(self.min_sinr.max())

    @property
    def mean_trial_time_s(self):
        return float(self.trial_times_s.mean())

    @property
    def amortized_time_s(self):
        """One-time statistical cost spread over the trials, plus per-trial work."""
        return self.stat_time_s / self.n_trials + self.mean_trial_time_s


def statistical_phase_design(stats, caps_phys, opts=None, rng=None):
    """One-time statistical phase optimization; returns (phases, seconds)."""
    alpha0 = power.min_power_budget(stats.ell, caps_phys, stats.K)
    t0 = time.perf_counter()
    phases, _ = phaseopt.optimize_phases_statistical(
        stats, alpha0, stats.noise_power, opts=opts, rng=rng)
    return phases, time.perf_counter() - t0


def run_scheme(scheme, stats, realization, config, rng=None, *,
               statistical_phases=None, phase_opts=None, seed=None):
    """Run one scheme on one fading realization.

    ``statistical_phases`` lets Monte-Carlo callers reuse the one-time
    statistical design across realizations (its cost is then excluded from
    this call's ``stat_time_s``).
    """
    scheme = SchemeId(scheme)
    rng = np.random.default_rng(config.rng_seed) if rng is None else rng
    k, n = stats.K, stats.N
    caps_phys = emf.physical_power_caps(emf.ExposureSpec.from_config(config), k)
    noise = stats.noise_power

    stat_time = 0.0
    if scheme.statistical_phases:
        if statistical_phases is None:
            statistical_phases, stat_time = statistical_phase_design(
                stats, caps_phys, opts=phase_opts, rng=rng)
        phases = statistical_phases
    elif scheme is SchemeId.S6:
        phases = phaseopt.PhaseVector.random(n, rng)
    elif scheme is SchemeId.S1:
        phases = phaseopt.PhaseVector.zeros(n)
    else:  # S4, S5
        phases = phaseopt.PhaseVector.zeros(n)

    t0 = time.perf_counter()
    p_phys = caps_phys.copy()
    best_tau = -np.inf
    converged = False
    rounds = 0
    alloc = beta = report = None

    max_rounds = OUTER_MAX_ROUNDS if scheme.instantaneous_phases else 1
    for rounds in range(1, max_rounds + 1):
        if scheme.instantaneous_phases:
            phases, _ = phaseopt.optimize_phases_instantaneous(
                stats, realization, k * p_phys, noise, init=phases,
                opts=phase_opts)
        g, u = model.effective_channels(stats, phases, realization)
        if scheme.statistical_power:
            alloc = power.allocate_power_asymptotic(stats.ell, caps_phys, k)
        else:
            alloc = power.allocate_power_instantaneous(
                u, realization.H2_tilde, stats.ell, caps_phys, noise)
        p_phys = alloc.p_phys
        beta = mmse_beamformer(g, k * p_phys, noise)
        report = sinr_per_user(g, k * p_phys, beta, noise)
        if report.tau <= best_tau * (1.0 + OUTER_REL_TOL):
            converged = True
            break
        best_tau = report.tau
    else:
        converged = not scheme.instantaneous_phases
    solve_time = time.perf_counter() - t0

    return AllocationResult(
        scheme=scheme,
        beamformer=beta,
        power=alloc,
        phases=phases,
        sinr=report,
        seed=seed,
        rounds=rounds,
        converged=converged,
        stat_time_s=stat_time,
        solve_time_s=solve_time,
    )


def _trial_rng(seed, scheme, trial):
    return np.random.default_rng(
        np.random.SeedSequence([int(seed), list(SchemeId).index(scheme), trial]))


def monte_carlo(scheme, config, n_trials, seed, *, redraw_h1=False,
                phase_opts=None, geometry_kwargs=None):
    """Independent fading draws under one fixed set of channel statistics.

    All randomness derives from (seed, scheme, trial index), so summaries are
    reproducible regardless of evaluation order.  Statistical phases are
    designed once and reused across trials; their cost is reported separately
    as ``stat_time_s``.  ``geometry_kwargs`` overrides the default placement
    of the BS, the RIS, and the user rectangle.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    scheme = SchemeId(scheme)
    setup_rng = np.random.default_rng(np.random.SeedSequence([int(seed), 997]))
    geometry = model.sample_geometry(config, setup_rng, **(geometry_kwargs or {}))
    stats = model.build_statistics(config, geometry, setup_rng)
    caps_phys = emf.physical_power_caps(emf.ExposureSpec.from_config(config),
                                        config.K)

    stat_time = 0.0
    statistical_phases = None
    if scheme.statistical_phases:
        statistical_phases, stat_time = statistical_phase_design(
            stats, caps_phys, opts=phase_opts,
            rng=np.random.default_rng(np.random.SeedSequence([int(seed), 998])))

    min_sinr = np.empty(n_trials)
    power_sum = np.empty(n_trials)
    times = np.empty(n_trials)
    for trial in range(n_trials):
        rng = _trial_rng(seed, scheme, trial)
        if redraw_h1:
            trial_stats = model.build_statistics(config, geometry, rng)
            trial_phases = None
            if scheme.statistical_phases:
                trial_phases, extra = statistical_phase_design(
                    trial_stats, caps_phys, opts=phase_opts, rng=rng)
                stat_time += extra
        else:
            trial_stats = stats
            trial_phases = statistical_phases
        realization, _ = model.sample_H2(config, geometry, rng)
        t0 = time.perf_counter()
        result = run_scheme(scheme, trial_stats, realization, config, rng,
                            statistical_phases=trial_phases,
                            phase_opts=phase_opts, seed=seed)
        times[trial] = time.perf_counter() - t0
        min_sinr[trial] = result.sinr.tau
        power_sum[trial] = float(np.sum(result.power.p_phys))

    return MonteCarloSummary(
        scheme=scheme,
        n_trials=n_trials,
        seed=int(seed),
        min_sinr=min_sinr,
        power_sum=power_sum,
        stat_time_s=stat_time,
        trial_times_s=times,
    )
