"""Geometry, path loss, spatial correlation, and channel sampling.

All quantities are kept in linear units (Watts, meters); dB/dBm values are
converted once at construction time.  Channel draws are pure functions of an
explicit :class:`numpy.random.Generator`, so identical seeds give identical
channels.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0

# 3GPP UMi at 2.5 GHz: PL(d) = 10^((Gt+Gr-offset)/10) / d^exponent
_LOS_OFFSET_DB = 35.95
_LOS_EXPONENT = 2.2
_NLOS_OFFSET_DB = 33.05
_NLOS_EXPONENT = 3.67


def path_loss_los(d, g_t=0.0, g_r=0.0):
    """Line-of-sight path loss (linear power gain) at distance ``d`` meters.

    ``g_t`` and ``g_r`` are the transmit/receive antenna gains in dBi.
    """
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ValueError("path_loss_los: distance must be positive")
    gain = 10.0 ** ((g_t + g_r - _LOS_OFFSET_DB) / 10.0)
    out = gain / d**_LOS_EXPONENT
    return float(out) if out.ndim == 0 else out


def path_loss_nlos(d, g_t=0.0, g_r=0.0):
    """Non-line-of-sight path loss (linear power gain) at distance ``d`` meters."""
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ValueError("path_loss_nlos: distance must be positive")
    gain = 10.0 ** ((g_t + g_r - _NLOS_OFFSET_DB) / 10.0)
    out = gain / d**_NLOS_EXPONENT
    return float(out) if out.ndim == 0 else out


def exp_correlation_matrix(eta, n):
    """Exponential correlation matrix with entry (i, j) = eta^|i-j|."""
    if not 0.0 <= eta < 1.0:
        raise ValueError(f"exp_correlation_matrix: eta must be in [0, 1), got {eta}")
    idx = np.arange(n)
    return (eta ** np.abs(idx[:, None] - idx[None, :])).astype(complex)


def hermitian_sqrt(r, tol=1e-12):
    """Hermitian PSD square root S with S @ S = r.

    Eigenvalues in [-tol, 0) are clipped to zero (rounding guard); anything
    more negative is rejected.
    """
    r = np.asarray(r)
    w, v = np.linalg.eigh(r)
    scale = max(abs(w[-1]), 1.0)
    if w[0] < -tol * scale:
        raise ValueError("hermitian_sqrt: matrix is not positive semidefinite")
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def noise_power_watts(bandwidth_hz):
    """Thermal noise power in Watts: -174 dBm/Hz over ``bandwidth_hz``."""
    if bandwidth_hz <= 0:
        raise ValueError("bandwidth must be positive")
    return 10.0 ** ((-174.0 + 10.0 * np.log10(bandwidth_hz)) / 10.0) * 1e-3


def sample_complex_gaussian(rng, shape):
    """i.i.d. standard circularly-symmetric complex Gaussian entries."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


@dataclass(frozen=True)
class SystemConfig:
    """Dimensions, physical constants, and power/exposure limits.

    ``p_max_w`` is the per-user transmit power budget of the exposure-aware
    problem; the per-user cap fed to the power allocator is ``p_max_w / K``
    (see :mod:`risfair.emf`).
    """

    M: int
    N: int
    K: int
    carrier_wavelength: float = SPEED_OF_LIGHT / 2.5e9
    rician_kappa: float = 10.0
    corr_eta_ris: float = 0.95
    corr_eta_users: float = 0.95
    noise_bandwidth_hz: float = 100e6
    gain_bs_dbi: float = 5.0
    gain_user_dbi: float = 0.0
    gain_ris_dbi: float = 0.0
    p_max_w: float = 0.5
    sar_ref: float = 63e-4
    sar_max: float = 0.0029
    d_bs: float | None = None
    d_ris: float | None = None
    rng_seed: int = 0

    def __post_init__(self):
        if self.M < 1 or self.N < 1 or self.K < 1:
            raise ValueError("M, N, K must all be >= 1")
        if self.rician_kappa < 0:
            raise ValueError("rician_kappa must be >= 0")
        for eta in (self.corr_eta_ris, self.corr_eta_users):
            if not 0.0 <= eta < 1.0:
                raise ValueError("correlation eta must be in [0, 1)")
        if self.noise_bandwidth_hz <= 0:
            raise ValueError("noise_bandwidth_hz must be positive")
        if self.p_max_w <= 0:
            raise ValueError("p_max_w must be positive")
        if self.carrier_wavelength <= 0:
            raise ValueError("carrier_wavelength must be positive")
        # default half-wavelength element spacing
        if self.d_bs is None:
            object.__setattr__(self, "d_bs", 0.5 * self.carrier_wavelength)
        if self.d_ris is None:
            object.__setattr__(self, "d_ris", 0.5 * self.carrier_wavelength)

    @property
    def noise_power(self):
        """Thermal noise power (sigma_tilde^2) in Watts."""
        return noise_power_watts(self.noise_bandwidth_hz)


@dataclass(frozen=True)
class Geometry:
    """3D positions (meters) of the BS, the RIS, and the K users."""

    bs_position: np.ndarray
    ris_position: np.ndarray
    user_positions: np.ndarray  # (K, 3)

    def __post_init__(self):
        bs = np.asarray(self.bs_position, dtype=float).reshape(3)
        ris = np.asarray(self.ris_position, dtype=float).reshape(3)
        users = np.atleast_2d(np.asarray(self.user_positions, dtype=float))
        object.__setattr__(self, "bs_position", bs)
        object.__setattr__(self, "ris_position", ris)
        object.__setattr__(self, "user_positions", users)
        if np.allclose(bs, ris):
            raise ValueError("BS and RIS positions must be distinct")
        d = np.linalg.norm(users - ris[None, :], axis=1)
        if np.any(d == 0):
            raise ValueError("user positions must be distinct from the RIS position")

    @property
    def bs_ris_distance(self):
        return float(np.linalg.norm(self.bs_position - self.ris_position))

    @property
    def user_ris_distances(self):
        return np.linalg.norm(self.user_positions - self.ris_position[None, :], axis=1)


def sample_geometry(config, rng, x_range=(10.0, 15.0), y_range=(5.0, 10.0),
                    user_height=1.5, bs_position=(0.0, 0.0, 10.0),
                    ris_position=(10.0, 10.0, 15.0)):
    """Draw K user positions uniformly over the configured ground rectangle."""
    x = rng.uniform(*x_range, size=config.K)
    y = rng.uniform(*y_range, size=config.K)
    users = np.stack([x, y, np.full(config.K, user_height)], axis=1)
    return Geometry(np.asarray(bs_position), np.asarray(ris_position), users)


@dataclass(eq=False)
class ChannelStatistics:
    """Slow-varying quantities known under statistical CSI.

    ``H1`` already includes the BS-RIS path loss and Rician structure; the
    LOS angles behind it are drawn once and frozen.  ``noise_power`` is the
    thermal noise sigma_tilde^2 in Watts.
    """

    H1: np.ndarray          # (M, N)
    R_ris: np.ndarray       # (N, N)
    R_users: np.ndarray     # (N, N)
    ell: np.ndarray         # (K,) linear power gains user -> RIS
    noise_power: float

    def __post_init__(self):
        self.H1 = np.asarray(self.H1, dtype=complex)
        self.R_ris = np.asarray(self.R_ris, dtype=complex)
        self.R_users = np.asarray(self.R_users, dtype=complex)
        self.ell = np.asarray(self.ell, dtype=float)
        if np.any(self.ell <= 0):
            raise ValueError("path losses must be positive")
        if self.noise_power <= 0:
            raise ValueError("noise power must be positive")
        for name, r in (("R_ris", self.R_ris), ("R_users", self.R_users)):
            if not np.allclose(r, r.conj().T):
                raise ValueError(f"{name} must be Hermitian")
            if not np.allclose(np.diag(r).real, 1.0):
                raise ValueError(f"{name} must have unit diagonal")

    @property
    def M(self):
        return self.H1.shape[0]

    @property
    def N(self):
        return self.H1.shape[1]

    @property
    def K(self):
        return self.ell.shape[0]

    @property
    def sigma2(self):
        """Per-user noise constant sigma^2 = sigma_tilde^2 / K."""
        return self.noise_power / self.K

    @cached_property
    def R_ris_sqrt(self):
        return hermitian_sqrt(self.R_ris)

    @cached_property
    def R_users_sqrt(self):
        return hermitian_sqrt(self.R_users)


@dataclass(frozen=True)
class ChannelRealization:
    """One fast-fading draw: columns are the i.i.d. CN(0, I_N) user channels."""

    H2_tilde: np.ndarray  # (N, K)

    def __post_init__(self):
        object.__setattr__(self, "H2_tilde", np.asarray(self.H2_tilde, dtype=complex))


def sample_H1(config, geometry, rng):
    """One draw of the BS-RIS channel with Rician LOS structure.

    The LOS steering phases use per-element angles drawn uniformly on
    [0, pi] (elevation) and [0, 2*pi] (azimuth); the diffuse part is i.i.d.
    standard complex Gaussian.  Path loss and the 1/N normalization are
    folded in.
    """
    M, N = config.M, config.N
    kappa = config.rician_kappa
    pl = path_loss_los(geometry.bs_ris_distance, config.gain_bs_dbi, config.gain_ris_dbi)

    theta_1 = rng.uniform(0.0, np.pi, size=N)
    phi_1 = rng.uniform(0.0, 2.0 * np.pi, size=N)
    theta_2 = rng.uniform(0.0, np.pi, size=M)
    phi_2 = rng.uniform(0.0, 2.0 * np.pi, size=M)

    m = np.arange(M)[:, None]
    n = np.arange(N)[None, :]
    phase = (2.0 * np.pi / config.carrier_wavelength) * (
        m * config.d_bs * (np.sin(theta_1) * np.sin(phi_1))[None, :]
        + n * config.d_ris * (np.sin(theta_2) * np.sin(phi_2))[:, None]
    )
    h_los = np.exp(1j * phase)
    h_nlos = sample_complex_gaussian(rng, (M, N))

    mix = np.sqrt(kappa / (kappa + 1.0)) * h_los + np.sqrt(1.0 / (kappa + 1.0)) * h_nlos
    return np.sqrt(pl / N) * mix


def user_path_losses(config, geometry):
    """NLOS path loss of each user -> RIS link (linear power gain)."""
    return path_loss_nlos(geometry.user_ris_distances,
                          config.gain_user_dbi, config.gain_ris_dbi)


def sample_H2(config, geometry, rng):
    """Fast-fading draw for the user-RIS links plus the per-user path losses."""
    ell = user_path_losses(config, geometry)
    h2 = sample_complex_gaussian(rng, (config.N, config.K))
    return ChannelRealization(h2), ell


def build_statistics(config, geometry, rng):
    """Assemble the statistical-CSI bundle: H1, correlations, path losses, noise."""
    return ChannelStatistics(
        H1=sample_H1(config, geometry, rng),
        R_ris=exp_correlation_matrix(config.corr_eta_ris, config.N),
        R_users=exp_correlation_matrix(config.corr_eta_users, config.N),
        ell=user_path_losses(config, geometry),
        noise_power=config.noise_power,
    )


def _phi_array(phases, n):
    """Unit-modulus response vector from a PhaseVector or raw array."""
    phi = np.asarray(getattr(phases, "phi", phases), dtype=complex).reshape(-1)
    if phi.shape[0] != n:
        raise ValueError(f"expected {n} phase responses, got {phi.shape[0]}")
    if not np.allclose(np.abs(phi), 1.0, atol=1e-10):
        raise ValueError("RIS responses must be unit modulus")
    return phi


def deterministic_factor(stats, phases):
    """U = H1 R_ris^(1/2) Phi R_users^(1/2), the Phi-dependent channel factor."""
    phi = _phi_array(phases, stats.N)
    return (stats.H1 @ stats.R_ris_sqrt) @ (phi[:, None] * stats.R_users_sqrt)


def effective_channels(stats, phases, realization):
    """Per-user effective channels G (M x K) and the deterministic factor U.

    Column k of G is sqrt(ell_k) * U @ h2_tilde_k.
    """
    u = deterministic_factor(stats, phases)
    g = (u @ realization.H2_tilde) * np.sqrt(stats.ell)[None, :]
    return g, u
