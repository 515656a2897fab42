"""Periodic grids and real fields with paired physical/spectral storage.

The spectral layout is the one produced by ``scipy.fft.rfftn`` over all
axes: every axis except the last carries the full set of signed
frequencies, the last axis carries only the non-negative half.  Spectral
arrays are stored unnormalized, so the Fourier coefficient of the mode
``xi`` is ``spectral / grid.n_points``.
"""

from __future__ import annotations

import functools
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.fft as sfft

from chemotaxis_lab.errors import IoError

FFT_WORKERS = -1


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid on a d-dimensional torus.

    Parameters
    ----------
    d : int
        Spatial dimension.
    points_per_axis : int
        Samples per axis, a power of two no smaller than 4.
    box_length : float or tuple of float
        Circumference of the torus along each axis.  A scalar is broadcast
        to every axis.
    """

    d: int
    points_per_axis: int
    box_length: tuple[float, ...]

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise ValueError(f"d must be a positive integer, got {self.d}")
        n = self.points_per_axis
        if int(n) != n or n < 4 or (n & (n - 1)) != 0:
            raise ValueError(f"points_per_axis must be a power of two >= 4, got {n}")
        box = self.box_length
        if np.ndim(box) == 0:
            box = (float(box),) * self.d
        box = tuple(float(b) for b in box)
        if len(box) != self.d:
            raise ValueError(f"box_length needs {self.d} entries, got {len(box)}")
        if any(not math.isfinite(b) or b <= 0.0 for b in box):
            raise ValueError(f"box_length entries must be positive, got {box}")
        object.__setattr__(self, "box_length", box)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points_per_axis,) * self.d

    @property
    def spectral_shape(self) -> tuple[int, ...]:
        n = self.points_per_axis
        return (n,) * (self.d - 1) + (n // 2 + 1,)

    @property
    def n_points(self) -> int:
        return self.points_per_axis**self.d

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(b / self.points_per_axis for b in self.box_length)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def volume(self) -> float:
        return float(np.prod(self.box_length))

    @property
    def fundamental(self) -> tuple[float, ...]:
        """Lattice spacing 2*pi/L per axis."""
        return tuple(2.0 * np.pi / b for b in self.box_length)

    @property
    def nyquist_per_axis(self) -> tuple[float, ...]:
        return tuple(np.pi * self.points_per_axis / b for b in self.box_length)

    @property
    def nyquist(self) -> float:
        """Largest frequency represented along any axis."""
        return max(self.nyquist_per_axis)

    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        """Broadcastable signed lattice frequencies, one array per axis."""
        return _wavenumbers(self)

    def wavenumber_sq(self) -> np.ndarray:
        """Squared modulus of the lattice frequency on the spectral layout."""
        return _wavenumber_sq(self)

    def wavenumber_abs(self) -> np.ndarray:
        return _wavenumber_abs(self)

    def coordinates(self) -> tuple[np.ndarray, ...]:
        """Broadcastable physical coordinates x_i in [0, L_i)."""
        out = []
        for axis, (b, h) in enumerate(zip(self.box_length, self.spacing)):
            shape = [1] * self.d
            shape[axis] = self.points_per_axis
            out.append((np.arange(self.points_per_axis) * h).reshape(shape))
        return tuple(out)

    def parseval_weights(self) -> np.ndarray:
        """Multiplicities of half-spectrum entries, broadcast along the last axis.

        Entries with 0 < k_last < N/2 stand for themselves and their mirror.
        """
        return _parseval_weights(self.points_per_axis, self.d)

    def to_dict(self) -> dict:
        return {"d": self.d, "points_per_axis": self.points_per_axis,
                "box_length": list(self.box_length)}

    @classmethod
    def from_dict(cls, data: dict) -> "GridSpec":
        return cls(int(data["d"]), int(data["points_per_axis"]), tuple(data["box_length"]))


@functools.lru_cache(maxsize=8)
def _wavenumbers(grid: GridSpec) -> tuple[np.ndarray, ...]:
    n = grid.points_per_axis
    out = []
    for axis, b in enumerate(grid.box_length):
        shape = [1] * grid.d
        if axis == grid.d - 1:
            k = sfft.rfftfreq(n, d=b / n) * 2.0 * np.pi
            shape[axis] = n // 2 + 1
        else:
            k = sfft.fftfreq(n, d=b / n) * 2.0 * np.pi
            shape[axis] = n
        k = k.reshape(shape)
        k.setflags(write=False)
        out.append(k)
    return tuple(out)


@functools.lru_cache(maxsize=4)
def _wavenumber_sq(grid: GridSpec) -> np.ndarray:
    ks = _wavenumbers(grid)
    out = np.zeros(grid.spectral_shape)
    for k in ks:
        out = out + k * k
    out.setflags(write=False)
    return out


@functools.lru_cache(maxsize=4)
def _wavenumber_abs(grid: GridSpec) -> np.ndarray:
    out = np.sqrt(_wavenumber_sq(grid))
    out.setflags(write=False)
    return out


@functools.lru_cache(maxsize=8)
def _parseval_weights(n: int, d: int) -> np.ndarray:
    w = np.full(n // 2 + 1, 2.0)
    w[0] = 1.0
    w[-1] = 1.0
    w = w.reshape((1,) * (d - 1) + (n // 2 + 1,))
    w.setflags(write=False)
    return w


def forward(values: np.ndarray, d: int) -> np.ndarray:
    """Real-to-half-complex transform over the trailing ``d`` axes."""
    axes = tuple(range(values.ndim - d, values.ndim))
    return sfft.rfftn(values, axes=axes, workers=FFT_WORKERS)


def inverse(coeffs: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Inverse of :func:`forward` returning real samples."""
    axes = tuple(range(coeffs.ndim - grid.d, coeffs.ndim))
    return sfft.irfftn(coeffs, s=grid.shape, axes=axes, workers=FFT_WORKERS)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    if a.flags.writeable:
        a = a.copy() if not a.flags.owndata else a
        a.setflags(write=False)
    return a


class Field:
    """Real scalar or vector field sampled on a :class:`GridSpec`.

    Exactly one representation is required at construction; the other is
    computed on first access and cached.  Both arrays are read-only.

    Parameters
    ----------
    grid : GridSpec
        Sampling grid.
    physical : ndarray, optional
        Samples with shape ``grid.shape`` (scalar) or ``(d,) + grid.shape``.
    spectral : ndarray, optional
        Half-spectrum in the layout of :func:`forward`.
    kind : {"scalar", "vector"}
        Field type.
    """

    __slots__ = ("grid", "kind", "_physical", "_spectral")

    def __init__(self, grid: GridSpec, physical=None, spectral=None, kind: str = "scalar"):
        if kind not in ("scalar", "vector"):
            raise ValueError(f"unknown field kind {kind!r}")
        if (physical is None) == (spectral is None):
            raise ValueError("provide exactly one of physical or spectral")
        lead = () if kind == "scalar" else (grid.d,)
        if physical is not None:
            physical = np.asarray(physical, dtype=float)
            if physical.shape != lead + grid.shape:
                raise ValueError(f"physical shape {physical.shape} != {lead + grid.shape}")
            physical = _frozen(physical)
        else:
            spectral = np.asarray(spectral, dtype=complex)
            if spectral.shape != lead + grid.spectral_shape:
                raise ValueError(
                    f"spectral shape {spectral.shape} != {lead + grid.spectral_shape}")
            spectral = _frozen(spectral)
        self.grid = grid
        self.kind = kind
        self._physical = physical
        self._spectral = spectral

    @classmethod
    def zeros(cls, grid: GridSpec, kind: str = "scalar") -> "Field":
        lead = () if kind == "scalar" else (grid.d,)
        return cls(grid, spectral=np.zeros(lead + grid.spectral_shape, complex), kind=kind)

    @classmethod
    def from_function(cls, grid: GridSpec, func, kind: str = "scalar") -> "Field":
        """Sample ``func(*coordinates)`` on the grid."""
        vals = func(*grid.coordinates())
        lead = () if kind == "scalar" else (grid.d,)
        vals = np.broadcast_to(np.asarray(vals, dtype=float), lead + grid.shape)
        return cls(grid, physical=np.array(vals), kind=kind)

    @classmethod
    def vector(cls, components: Sequence["Field"]) -> "Field":
        """Stack scalar fields into a vector field."""
        grid = components[0].grid
        if len(components) != grid.d:
            raise ValueError(f"need {grid.d} components, got {len(components)}")
        spec = np.stack([c.spectral for c in components])
        return cls(grid, spectral=spec, kind="vector")

    @property
    def physical(self) -> np.ndarray:
        if self._physical is None:
            self._physical = _frozen(inverse(self._spectral, self.grid))
        return self._physical

    @property
    def spectral(self) -> np.ndarray:
        if self._spectral is None:
            self._spectral = _frozen(forward(self._physical, self.grid.d))
        return self._spectral

    @property
    def has_physical(self) -> bool:
        return self._physical is not None

    @property
    def has_spectral(self) -> bool:
        return self._spectral is not None

    def component(self, i: int) -> "Field":
        if self.kind != "vector":
            raise ValueError("component() needs a vector field")
        if self._spectral is not None:
            return Field(self.grid, spectral=self._spectral[i])
        return Field(self.grid, physical=self._physical[i])

    def _combine(self, other: "Field", op) -> "Field":
        if not isinstance(other, Field):
            return NotImplemented
        if other.grid != self.grid or other.kind != self.kind:
            raise ValueError("fields live on different grids or have different kinds")
        if self.has_spectral and other.has_spectral:
            return Field(self.grid, spectral=op(self.spectral, other.spectral), kind=self.kind)
        return Field(self.grid, physical=op(self.physical, other.physical), kind=self.kind)

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __mul__(self, c):
        if isinstance(c, Field):
            return NotImplemented
        c = float(c)
        if self.has_spectral:
            return Field(self.grid, spectral=self.spectral * c, kind=self.kind)
        return Field(self.grid, physical=self.physical * c, kind=self.kind)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def mean(self) -> float | np.ndarray:
        """Spatial average (per component for vectors)."""
        idx = (...,) + (0,) * self.grid.d
        return np.real(self.spectral[idx]) / self.grid.n_points

    def l2_norm(self) -> float:
        """L2 norm over the torus by Parseval, exact for the sampled trigonometric polynomial."""
        w = self.grid.parseval_weights()
        s = np.sum(w * np.abs(self.spectral) ** 2)
        return float(np.sqrt(s * self.grid.volume) / self.grid.n_points)

    def roundtrip_error(self) -> float:
        """Relative error of physical -> spectral -> physical."""
        back = inverse(forward(self.physical, self.grid.d), self.grid)
        scale = max(np.max(np.abs(self.physical)), np.finfo(float).tiny)
        return float(np.max(np.abs(back - self.physical)) / scale)

    def __repr__(self) -> str:
        return f"Field(kind={self.kind!r}, grid={self.grid!r})"


def hermitian_defect(field: Field) -> float:
    """Relative departure of the spectrum from the symmetry of a real field.

    Only the self-conjugate planes of the half layout (k_last = 0 and, for
    even sizes, k_last = N/2) can break the symmetry; those are checked.
    """
    spec = field.spectral
    n = field.grid.points_per_axis
    d = field.grid.d
    worst = 0.0
    scale = max(np.max(np.abs(spec)), np.finfo(float).tiny)
    for last in (0, n // 2):
        plane = spec[..., last]
        mirrored = plane
        lead = plane.ndim - (d - 1)
        for ax in range(lead, plane.ndim):
            mirrored = np.roll(np.flip(mirrored, axis=ax), 1, axis=ax)
        worst = max(worst, float(np.max(np.abs(plane - np.conj(mirrored)))))
    return worst / scale


def save_field(path: str | Path, field: Field, representation: str = "spectral") -> None:
    """Write a field to a self-describing ``.npz`` container.

    Parameters
    ----------
    path : str or Path
        Destination file.
    field : Field
        Field to store.
    representation : {"spectral", "physical"}
        Which array to store.
    """
    meta = {"format": "chemotaxis_lab.field", "version": 1, "kind": field.kind,
            "representation": representation, "grid": field.grid.to_dict()}
    data = field.spectral if representation == "spectral" else field.physical
    try:
        with open(path, "wb") as fh:
            np.savez(fh, meta=np.array(json.dumps(meta, sort_keys=True)), data=data)
    except OSError as exc:
        raise IoError(f"cannot write field to {path}: {exc}") from exc


def load_field(path: str | Path) -> Field:
    """Read a field written by :func:`save_field`."""
    try:
        with np.load(path, allow_pickle=False) as npz:
            meta = json.loads(str(npz["meta"]))
            data = np.array(npz["data"])
    except (OSError, KeyError, ValueError) as exc:
        raise IoError(f"cannot read field from {path}: {exc}") from exc
    if meta.get("format") != "chemotaxis_lab.field":
        raise IoError(f"{path} is not a field container")
    grid = GridSpec.from_dict(meta["grid"])
    if meta["representation"] == "spectral":
        return Field(grid, spectral=data, kind=meta["kind"])
    return Field(grid, physical=data, kind=meta["kind"])
