"""Torus boxes sized for a given family.

The outer frequency must be a lattice frequency of axis 0 so that the
outer sine is periodic; the box along the inner-modulation axis is set by
the finest atom.  Both choices are expressed as Nyquist ratios.
"""

from __future__ import annotations

import math

import numpy as np

from chemotaxis_lab.construction.atoms import AtomSpec
from chemotaxis_lab.construction.family import ConstructionParams
from chemotaxis_lab.spectral_core.grid import GridSpec


def design_grid(params: ConstructionParams, spec: AtomSpec, points: int,
                axis0_ratio: float = 2.7, other_ratio: float = 2.2) -> GridSpec:
    """Grid with Nyq_0 >= axis0_ratio * 2^m and Nyq_i >= other_ratio * band_i.

    Parameters
    ----------
    params : ConstructionParams
        Family; fixes m, K and the outer frequency.
    spec : AtomSpec
        Atom profile; fixes the inner band (w + beta) 2^{max K}.
    points : int
        Points per axis.
    axis0_ratio : float
        Lower bound of Nyq_0 / 2^m.  2.7 keeps shell m resolvable and the
        data inside the 2/3 box; about 3 is needed to square the data
        without aliasing.
    other_ratio : float
        Lower bound of Nyq_i / ((w + beta) 2^{max K}) on the other axes.
    """
    om = params.outer_frequency
    lattice = math.floor(points * om / (2.0 * axis0_ratio * 2.0**params.m))
    if lattice < 1:
        raise ValueError("too few points to place the outer frequency on the lattice")
    lengths = [2.0 * np.pi * lattice / om]
    band = (spec.modulation_inner + spec.beta) * 2.0 ** max(params.K)
    for _ in range(1, params.d):
        lengths.append(np.pi * points / (other_ratio * band))
    return GridSpec(params.d, points, tuple(lengths))
