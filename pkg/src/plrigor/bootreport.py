"""Shared bootstrap-report container.

Every bootstrap in the toolkit reports the same way: the observed
statistic, the B synthetic replicate statistics, and the weak-inequality
p-value  p = #{T* >= T_obs} / B.  A p of exactly zero is rendered as
"< 1/B" in human-readable output, since that is the resolution limit.
"""

from dataclasses import dataclass

import numpy as np

__all__ = ["BootstrapReport", "bootstrap_p", "format_p"]


def bootstrap_p(observed, synthetic):
    """Fraction of synthetic statistics >= the observed one (weak inequality)."""
    synthetic = np.asarray(synthetic, dtype=float)
    return float(np.count_nonzero(synthetic >= observed)) / synthetic.size


def format_p(p_value, B):
    """Human rendering of a bootstrap p-value at resolution 1/B."""
    if p_value <= 0.0:
        return f"< {1.0 / B:g}"
    return f"{p_value:g}"


@dataclass(frozen=True)
class BootstrapReport:
    statistic_name: str
    observed: float
    synthetic: np.ndarray
    p_value: float
    B: int
    seed: int

    def __post_init__(self):
        syn = np.asarray(self.synthetic, dtype=float)
        syn.flags.writeable = False
        object.__setattr__(self, "synthetic", syn)

    @property
    def p_display(self):
        return format_p(self.p_value, self.B)
