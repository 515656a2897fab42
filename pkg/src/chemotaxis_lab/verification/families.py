"""Default parameter families used by the checks and the experiment.

All families use d = 2, r = 1, beta = 0.2 with atoms separated along the
inner-modulation axis.  Grid sizes follow two resolution rules measured
during calibration: at least four lattice points inside ``beta 2^{min K}``
on axis 0 for norms of the data, and about eight for the shell-derivative
split, where periodization of the block kernel is visible below that.
"""

from __future__ import annotations

from dataclasses import dataclass

from chemotaxis_lab.construction.atoms import AtomSpec
from chemotaxis_lab.construction.design import design_grid
from chemotaxis_lab.construction.family import ConstructionParams
from chemotaxis_lab.spectral_core.grid import GridSpec

DEFAULT_BETA = 0.2
SPLIT_AXIS0_RATIO = 3.05


@dataclass(frozen=True)
class FamilyMember:
    """A family parameter set with its atom profile and grid."""

    params: ConstructionParams
    spec: AtomSpec
    grid: GridSpec

    def describe(self) -> dict:
        return {"d": self.params.d, "r": self.params.r, "m": self.params.m,
                "K": list(self.params.K), "beta": self.spec.beta,
                "points": self.grid.points_per_axis,
                "offsets": None if self.params.offsets is None else list(self.params.offsets)}


def member(m: int, K, points: int, beta: float = DEFAULT_BETA, r: float = 1.0,
           offsets=None, axis0_ratio: float = 2.7, amplitude: float = 1.0) -> FamilyMember:
    params = ConstructionParams(2, r, m, tuple(K), offsets=offsets, offset_axis=1,
                                amplitude=amplitude)
    spec = AtomSpec(beta)
    return FamilyMember(params, spec, design_grid(params, spec, points, axis0_ratio))


def block_identity_family() -> list[FamilyMember]:
    """Members over m and |K| used by the block-identity check."""
    return [
        member(6, (4,), 1024),
        member(7, (5,), 1024),
        member(7, (4, 5), 1024, axis0_ratio=SPLIT_AXIS0_RATIO),
        member(7, (3, 4, 5), 2048),
        member(8, (5, 6), 2048),
    ]


def broken_beta_member() -> FamilyMember:
    """Member whose beta violates the support inequalities (negative test)."""
    return member(7, (4, 5), 1024, beta=1.5, axis0_ratio=SPLIT_AXIS0_RATIO)


def split_member(points: int = 2048, offsets=None) -> FamilyMember:
    """Family used by the spectral-vanishing and K1/K2 checks."""
    return member(7, (4, 5), points, offsets=offsets, axis0_ratio=SPLIT_AXIS0_RATIO)


def lp_calibration_member(points: int = 4096) -> FamilyMember:
    """Two-atom family whose torus leaves room for three offset doublings."""
    return member(7, (4, 5), points)


def lp_diagonal_family() -> list[tuple[int, tuple, int]]:
    """(m, K, points) of the members used for the diagonal-sum prediction."""
    return [(6, (4,), 1024), (7, (5,), 1024), (7, (4, 5), 1024), (7, (3, 4, 5), 2048),
            (8, (5, 6), 2048)]


def headline_member(count: int, m: int = 10, points: int = 4096, top: int | None = None,
                    r: float = 1.0) -> FamilyMember:
    """Headline family: ``count`` adjacent scales ending at ``m - 2``."""
    top = m - 2 if top is None else top
    K = tuple(range(top - count + 1, top + 1))
    return member(m, K, points, r=r)
