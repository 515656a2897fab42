"""Radial Littlewood-Paley cutoffs.

The low-pass profile is 1 on [0, 3/4] and 0 beyond 4/3.  On the transition
interval it follows an integrated bump polynomial: the regularized
incomplete beta function ``I_t(q+1, q+1)``, which is a polynomial of degree
``2q+1`` whose first ``q`` derivatives vanish at both ends.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import betainc

CHI_INNER = 0.75
CHI_OUTER = 4.0 / 3.0
PHI_PLATEAU = (4.0 / 3.0, 1.5)
PHI_SUPPORT = (0.75, 8.0 / 3.0)


def smoothstep(t, order: int) -> np.ndarray:
    """C^order step rising from 0 at t <= 0 to 1 at t >= 1."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    return betainc(order + 1.0, order + 1.0, t)


@dataclass(frozen=True)
class CutoffProfile:
    """The pair (chi, phi) with phi(rho) = chi(rho/2) - chi(rho).

    Parameters
    ----------
    smoothness_order : int
        Number of continuous derivatives of the transition spline.
    """

    smoothness_order: int = 8

    def __post_init__(self):
        if int(self.smoothness_order) != self.smoothness_order or self.smoothness_order < 1:
            raise ValueError("smoothness_order must be an integer >= 1")

    def chi(self, rho) -> np.ndarray:
        rho = np.asarray(rho, dtype=float)
        t = (CHI_OUTER - rho) / (CHI_OUTER - CHI_INNER)
        return smoothstep(t, self.smoothness_order)

    def phi(self, rho) -> np.ndarray:
        rho = np.asarray(rho, dtype=float)
        return self.chi(0.5 * rho) - self.chi(rho)

    def block_symbol(self, rho, j: int) -> np.ndarray:
        """phi(2^{-j} rho)."""
        return self.phi(np.ldexp(np.asarray(rho, dtype=float), -int(j)))


def build_cutoffs(smoothness_order: int = 8) -> CutoffProfile:
    """Return the cutoff pair with a C^smoothness_order transition."""
    return CutoffProfile(int(smoothness_order))
