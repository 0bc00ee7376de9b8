"""Closed-form regularity exponents of the trace in capacity time.

All quantities are elementary functions of kappa: the variation order
d, the Holder exponent alpha with its logarithmic power beta, and the
variation power p = 1/beta.  alpha degenerates to 0 at kappa = 8, where
the modulus becomes purely logarithmic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


def variation_order(kappa: float) -> float:
    """min(1 + kappa/8, 2): the optimal variation power of the trace."""
    if kappa <= 0.0:
        raise ValueError(f"kappa must be > 0, got {kappa}")
    return min(1.0 + kappa / 8.0, 2.0)


def holder_alpha(kappa: float) -> float:
    """1 - kappa / (24 + 2 kappa - 8 sqrt(8 + kappa)); zero at kappa = 8."""
    if kappa <= 0.0:
        raise ValueError(f"kappa must be > 0, got {kappa}")
    return 1.0 - kappa / (24.0 + 2.0 * kappa - 8.0 * math.sqrt(8.0 + kappa))


def log_power_beta(kappa: float) -> float:
    """kappa / ((12 + kappa) sqrt(8 + kappa) - 4 (8 + kappa))."""
    if kappa <= 0.0:
        raise ValueError(f"kappa must be > 0, got {kappa}")
    rt = math.sqrt(8.0 + kappa)
    return kappa / ((12.0 + kappa) * rt - 4.0 * (8.0 + kappa))


def beta_via_moment_exponent(kappa: float) -> float:
    """1/p with p = 2 - a^2 kappa/8 - a kappa/4 + a at the optimising
    moment parameter a = (16 - 4 sqrt(kappa + 8)) / kappa; algebraically
    equal to log_power_beta, kept as an independent cross-check."""
    if kappa <= 0.0:
        raise ValueError(f"kappa must be > 0, got {kappa}")
    a = (16.0 - 4.0 * math.sqrt(kappa + 8.0)) / kappa
    p = 2.0 - a * a * kappa / 8.0 - a * kappa / 4.0 + a
    return 1.0 / p


@dataclass(frozen=True)
class ExponentTable:
    """Exponent bundle at one kappa.

    log_only marks the boundary case alpha = 0, where the power-law
    modulus carries no information and only the logarithmic factor
    remains.
    """

    kappa: float
    d: float
    alpha: float
    beta: float
    p: float

    @property
    def log_only(self) -> bool:
        return self.alpha == 0.0

    def as_csv_row(self):
        return (self.kappa, self.d, self.alpha, self.beta, self.p)


def exponent_formulas(kappa: float) -> ExponentTable:
    beta = log_power_beta(kappa)
    return ExponentTable(
        kappa=float(kappa),
        d=variation_order(kappa),
        alpha=holder_alpha(kappa),
        beta=beta,
        p=1.0 / beta,
    )
