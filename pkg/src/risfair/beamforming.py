"""Receive beamforming and per-user SINR evaluation.

Conventions follow the uplink model: the ``p`` argument of every function is
the raw power vector whose physical per-user transmit power is ``p_k / K``,
and the effective noise constant is ``sigma^2 = noise_power / K``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla


@dataclass(frozen=True)
class Beamformer:
    """K unit-norm receive vectors, one per user (rows of a K x M matrix)."""

    rows: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=complex)
        object.__setattr__(self, "rows", rows)
        norms = np.linalg.norm(rows, axis=1)
        if not np.allclose(norms, 1.0, atol=1e-10):
            raise ValueError("beamformer rows must be unit norm")


@dataclass(frozen=True)
class SinrReport:
    """Per-user linear SINRs with the minimum singled out."""

    per_user: np.ndarray
    min_index: int
    tau: float

    @classmethod
    def from_values(cls, sinr):
        sinr = np.asarray(sinr, dtype=float)
        idx = int(np.argmin(sinr))
        return cls(per_user=sinr, min_index=idx, tau=float(sinr[idx]))


def _interference_matrix(g, p, noise_power):
    """A = sum_i (p_i/K) g_i g_i^H + sigma^2 I with sigma^2 = noise_power/K."""
    m, k = g.shape
    c = np.asarray(p, dtype=float) / k
    sigma2 = noise_power / k
    return (g * c[None, :]) @ g.conj().T + sigma2 * np.eye(m), c, sigma2


def sinr_per_user(g, p, beta, noise_power):
    """Exact SINR of every user for an arbitrary beamformer.

    Direct evaluation of
    SINR_k = (p_k/K) |b_k^H g_k|^2 / (sum_{i != k} (p_i/K) |b_k^H g_i|^2
             + sigma^2 ||b_k||^2).
    """
    g = np.asarray(g, dtype=complex)
    k = g.shape[1]
    p = np.asarray(p, dtype=float)
    if np.any(p < 0):
        raise ValueError("powers must be nonnegative")
    rows = beta.rows if isinstance(beta, Beamformer) else np.asarray(beta, dtype=complex)
    c = p / k
    sigma2 = noise_power / k

    cross = np.abs(rows.conj() @ g) ** 2          # (K, K): |b_k^H g_i|^2
    signal = c * np.diag(cross)
    norms2 = np.linalg.norm(rows, axis=1) ** 2
    interference = cross @ c - signal
    return SinrReport.from_values(signal / (interference + sigma2 * norms2))


def mmse_beamformer(g, p, noise_power):
    """SINR-optimal unit-norm receive vectors b_k ~ (Sigma_k + sigma^2 I)^-1 g_k."""
    g = np.asarray(g, dtype=complex)
    if noise_power <= 0:
        raise ValueError("noise power must be positive")
    a, _, _ = _interference_matrix(g, p, noise_power)
    # A and A_k = A - (p_k/K) g_k g_k^H give parallel solutions for g_k,
    # so one HPD factorization covers every user.
    cho = sla.cho_factor(a, lower=True)
    w = sla.cho_solve(cho, g)
    rows = (w / np.linalg.norm(w, axis=0)[None, :]).T
    return Beamformer(rows=rows)


def sinr_post_mmse(g, p, noise_power):
    """Closed-form SINR under MMSE beamforming, without forming the beamformer.

    Uses the rank-one identity g_k^H A_k^-1 g_k = q_k / (1 - c_k q_k) with
    q_k = g_k^H A^-1 g_k, so a single factorization serves all K users.
    """
    g = np.asarray(g, dtype=complex)
    if noise_power <= 0:
        raise ValueError("noise power must be positive")
    a, c, _ = _interference_matrix(g, p, noise_power)
    cho = sla.cho_factor(a, lower=True)
    w = sla.cho_solve(cho, g)
    q = np.einsum("mk,mk->k", g.conj(), w).real
    denom = np.maximum(1.0 - c * q, np.finfo(float).tiny)
    return SinrReport.from_values(c * q / denom)


def sinr_post_mmse_stack(g_stack, p, noise_power):
    """Batched variant of :func:`sinr_post_mmse` over a (..., M, K) stack.

    Returns the per-user SINRs with shape (..., K).  Used by the
    finite-difference phase optimizer where many perturbed channel sets are
    evaluated at once.
    """
    g_stack = np.asarray(g_stack, dtype=complex)
    m, k = g_stack.shape[-2:]
    c = np.asarray(p, dtype=float) / k
    sigma2 = noise_power / k
    a = np.einsum("...mk,k,...nk->...mn", g_stack, c, g_stack.conj())
    a = a + sigma2 * np.eye(m)
    w = np.linalg.solve(a, g_stack)
    q = np.einsum("...mk,...mk->...k", g_stack.conj(), w).real
    denom = np.maximum(1.0 - c * q, np.finfo(float).tiny)
    return c * q / denom
