"""EMF exposure constraints mapped into per-user power caps.

The exposure-aware problem only tightens the power budget: the SAR bound
SAR_ref_k * p_k <= SAR_max_k combines with the transmit budget into
p_tilde_max_k = min(p_tilde_max, SAR_max_k / SAR_ref_k).  These caps bound
the raw powers p_k; the physical per-user caps consumed by
:mod:`risfair.power` carry the one-time 1/K scaling (p_max_k =
p_tilde_max_k / K).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ExposureSpec:
    """Per-user SAR constants and the common transmit power budget (Watts)."""

    sar_ref: np.ndarray   # W/kg per Watt
    sar_max: np.ndarray   # W/kg
    p_max_common: float

    def __post_init__(self):
        sar_ref = np.atleast_1d(np.asarray(self.sar_ref, dtype=float))
        sar_max = np.atleast_1d(np.asarray(self.sar_max, dtype=float))
        sar_ref, sar_max = np.broadcast_arrays(sar_ref, sar_max)
        object.__setattr__(self, "sar_ref", sar_ref.copy())
        object.__setattr__(self, "sar_max", sar_max.copy())
        if np.any(self.sar_ref <= 0) or np.any(self.sar_max < 0):
            raise ValueError("SAR constants must be positive (sar_max may be 0)")
        if self.p_max_common <= 0:
            raise ValueError("p_max_common must be positive")

    @classmethod
    def from_config(cls, config):
        k = config.K
        return cls(sar_ref=np.full(k, config.sar_ref),
                   sar_max=np.full(k, config.sar_max),
                   p_max_common=config.p_max_w)


def emf_to_power_bounds(spec):
    """Combined per-user caps on the raw powers: min(p_max, SAR_max/SAR_ref)."""
    return np.minimum(spec.p_max_common, spec.sar_max / spec.sar_ref)


def physical_power_caps(spec, k):
    """Physical per-user caps p_max_k = p_tilde_max_k / K for the allocator."""
    return emf_to_power_bounds(spec) / k
