"""The perturbation ladder u = U1 + U2,1 + U2,2 + U3, v = V1 + V2 + V3.

Every rung is stored through its time integral I = int_0^t U, since the
companion fields are gradients: V1 = v0 + grad I1, V2 = grad (I21 + I22),
V3 = grad I3.  Rungs with explicitly known sources use closed forms or
Gauss-Legendre slabs with exact heat propagation; U3 solves its Duhamel
equation slab by slab with an exponential trapezoid, iterated to a fixed
point on each slab.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Callable

import numpy as np

from chemotaxis_lab.errors import NonContraction
from chemotaxis_lab.evolution.duhamel import gauss_nodes, phi_functions
from chemotaxis_lab.evolution.solver import ProductOperator, SolverConfig, TimeGrid
from chemotaxis_lab.spectral_core.grid import Field, GridSpec

RUNGS = ("U1", "U21", "U22", "U3")


@dataclass
class RungState:
    """Spectra of one rung and of its time integral at a single time."""

    U: np.ndarray
    I: np.ndarray


@dataclass
class PerturbationLadder:
    """Time-sampled rungs of the ladder.

    Attributes
    ----------
    grid : GridSpec
        Common grid.
    times : ndarray
        Sample times (the time grid nodes).
    states : dict
        ``states[name][i]`` is the :class:`RungState` of rung ``name`` at
        ``times[i]``; only the final entry is kept when built with
        ``store="final"``.
    v0 : Field
        Initial chemotactic gradient.
    picard_iterations : list of int
        Iterations used on each slab by the U3 solve.
    picard_residual : float
        Largest final relative update over all slabs.
    samples : dict
        Output of the per-time observers, keyed by observer name.
    """

    grid: GridSpec
    times: np.ndarray
    states: dict
    v0: Field
    picard_iterations: list = dc_field(default_factory=list)
    picard_residual: float = 0.0
    samples: dict = dc_field(default_factory=dict)
    stored_indices: list = dc_field(default_factory=list)

    def _grad(self, spec: np.ndarray) -> np.ndarray:
        return np.stack([1j * k * spec for k in self.grid.wavenumbers()])

    def U(self, name: str, index: int = -1) -> Field:
        return Field(self.grid, spectral=self.states[name][index].U)

    def V(self, name: str, index: int = -1) -> Field:
        """Companion of a rung: V1, V2 (from U21 + U22) or V3."""
        if name == "V1":
            spec = self.v0.spectral + self._grad(self.states["U1"][index].I)
        elif name == "V2":
            spec = self._grad(self.states["U21"][index].I + self.states["U22"][index].I)
        elif name == "V3":
            spec = self._grad(self.states["U3"][index].I)
        else:
            raise KeyError(name)
        return Field(self.grid, spectral=spec, kind="vector")

    def U2(self, index: int = -1) -> Field:
        return Field(self.grid, spectral=self.states["U21"][index].U
                     + self.states["U22"][index].U)

    def u(self, index: int = -1) -> Field:
        return Field(self.grid, spectral=sum(self.states[n][index].U for n in RUNGS))

    def v(self, index: int = -1) -> Field:
        integ = sum(self.states[n][index].I for n in RUNGS)
        return Field(self.grid, spectral=self.v0.spectral + self._grad(integ), kind="vector")

    def F(self, op: ProductOperator, index: int = -1) -> Field:
        """U3 source u v - U1 V1, which expands to the five-term sum."""
        u_p = op.to_physical(self.u(index).spectral)
        v_p = op.to_physical(self.v(index).spectral)
        u1 = op.to_physical(self.states["U1"][index].U)
        v1 = op.to_physical(self.V("V1", index).spectral)
        return Field(self.grid, spectral=op.to_spectral(u_p[None] * v_p - u1[None] * v1),
                     kind="vector")


Observer = Callable[[float, dict], object]


def _u1_state(u0_hat: np.ndarray, lam: np.ndarray, t: float) -> RungState:
    if t == 0.0:
        return RungState(u0_hat.copy(), np.zeros_like(u0_hat))
    (p1,) = phi_functions(-t * lam, 1)
    return RungState(np.exp(-t * lam) * u0_hat, t * p1 * u0_hat)


def build_U1_V1(u0: Field, v0: Field, tgrid: TimeGrid) -> tuple[list[Field], list[Field]]:
    """U1 = e^{t Lap} u0 and V1 = v0 + int_0^t grad U1 at every node, in closed form."""
    grid = u0.grid
    lam = grid.wavenumber_sq()
    ks = grid.wavenumbers()
    us, vs = [], []
    for t in tgrid.times:
        st = _u1_state(np.asarray(u0.spectral), lam, float(t))
        us.append(Field(grid, spectral=st.U))
        vs.append(Field(grid, spectral=v0.spectral + np.stack([1j * k * st.I for k in ks]),
                        kind="vector"))
    return us, vs


def _u21_state(src: np.ndarray, lam: np.ndarray, t: float) -> RungState:
    if t == 0.0:
        z = np.zeros_like(src)
        return RungState(z, z.copy())
    p1, p2 = phi_functions(-t * lam, 2)
    return RungState(t * p1 * src, t * t * p2 * src)


class LadderBuilder:
    """Builds the ladder on a time grid.

    Parameters
    ----------
    u0, v0 : Field
        Initial data.
    tgrid : TimeGrid
        Time grid; rung values are produced at its nodes.
    cfg : SolverConfig
        Dealiasing, Gauss nodes per slab and Picard controls.
    """

    def __init__(self, u0: Field, v0: Field, tgrid: TimeGrid, cfg: SolverConfig | None = None):
        self.cfg = cfg or SolverConfig()
        self.grid = u0.grid
        self.u0 = u0
        self.v0 = v0
        self.tgrid = tgrid
        self.op = ProductOperator(self.grid, self.cfg.dealias_fraction)
        self.lam = self.grid.wavenumber_sq()
        self.u0_phys = self.op.to_physical(u0.spectral)
        self.v0_phys = self.op.to_physical(v0.spectral)
        # constant U2,1 source div(u0 v0)
        self.src21 = self.op.div_product(self.u0_phys, self.v0_phys)

    def _grad(self, spec):
        return self.op.grad_spectral(spec)

    def source22(self, t: float) -> np.ndarray:
        """div(U1 V1 - u0 v0) = div(U1 int grad U1 + (U1 - u0) v0)."""
        st = _u1_state(self.u0.spectral, self.lam, t)
        u1 = self.op.to_physical(st.U)
        gi = self.op.grad_physical(st.I)
        del st
        du = u1 - self.u0_phys
        return self.op.div_components(lambda i: u1 * gi[i] + du * self.v0_phys[i])

    def _slab22(self, state: RungState, t0: float, h: float) -> RungState:
        """Advance (U22, I22) across [t0, t0 + h] by Gauss nodes."""
        s_nodes, weights = gauss_nodes(0.0, h, self.cfg.quadrature_nodes)
        (p1,) = phi_functions(-h * self.lam, 1)
        U = np.exp(-h * self.lam) * state.U
        I = state.I + h * p1 * state.U
        del p1
        for s, w in zip(s_nodes, weights):
            src = self.source22(t0 + s)
            sigma = h - s
            (q1,) = phi_functions(-sigma * self.lam, 1)
            U += w * np.exp(-sigma * self.lam) * src
            I += (w * sigma) * q1 * src
        return RungState(U, I)

    def _lower_physical(self, t: float, u22: RungState):
        """Physical u_low = U1 + U2, v_low = V1 + V2 and div(u_low v_low - U1 V1) at t."""
        st1 = _u1_state(self.u0.spectral, self.lam, t)
        st21 = _u21_state(self.src21, self.lam, t)
        u_low = self.op.to_physical(st1.U + st21.U + u22.U)
        v_low = self.op.grad_physical(st1.I + st21.I + u22.I)
        v_low += self.v0_phys
        del st21
        u1 = self.op.to_physical(st1.U)
        v1 = self.op.grad_physical(st1.I)
        del st1
        v1 += self.v0_phys

        def comp(i):
            out = u_low * v_low[i]
            out -= u1 * v1[i]
            return out

        return u_low, v_low, self.op.div_components(comp)

    def _source3(self, low, U3: np.ndarray, I3: np.ndarray) -> np.ndarray:
        """div F with F = (u_low + U3)(v_low + V3) - U1 V1."""
        return self._source3_from(low, lambda: (U3, I3))

    def _source3_from(self, low, make_state) -> np.ndarray:
        u_low, v_low, div_cross = low
        U3, I3 = make_state()
        u3p = self.op.to_physical(U3)
        del U3
        v3p = self.op.grad_physical(I3)
        del I3

        def comp(i):
            out = v_low[i] + v3p[i]
            out *= u3p
            out += u_low * v3p[i]
            return out

        out = self.op.div_components(comp)
        out += div_cross
        return out

    def build(self, store: str = "all", observers: dict[str, Observer] | None = None,
              with_u3: bool = True) -> PerturbationLadder:
        """Run the ladder.

        Parameters
        ----------
        store : {"all", "final"}
            Keep every time sample or only the last one.
        observers : dict, optional
            ``observer(t, states)`` is called at every node with the current
            rung states; results are collected in ``ladder.samples``.
        with_u3 : bool
            Skip the U3 solve (U3 stays zero) when False.

        Raises
        ------
        NonContraction
            When the slab iteration for U3 does not settle.
        """
        cfg = self.cfg
        h = self.tgrid.dt
        times = self.tgrid.times
        observers = observers or {}
        zero = np.zeros_like(self.u0.spectral)
        u22 = RungState(zero, zero.copy())
        u3 = RungState(zero.copy(), zero.copy())

        def snapshot(t, u22, u3):
            return {"U1": _u1_state(self.u0.spectral, self.lam, t),
                    "U21": _u21_state(self.src21, self.lam, t), "U22": u22, "U3": u3}

        need_all = store == "all" or bool(observers)
        states = {n: [] for n in RUNGS}
        samples = {}
        if need_all:
            cur = snapshot(0.0, u22, u3)
            states = {n: [cur[n]] for n in RUNGS}
            samples = {name: [obs(0.0, cur)] for name, obs in observers.items()}
            del cur
        iters, worst = [], 0.0
        (_, p2, p3) = phi_functions(-h * self.lam, 3)
        # U3(t1) = base_U + w_u1 s(t1), I3(t1) = base_I + w_i1 s(t1)
        w_u1, w_i1 = h * p2, h * h * p3
        del p2, p3
        s_prev = None
        if with_u3:
            s_prev = self._source3(self._lower_physical(0.0, u22), u3.U, u3.I)
        scale = 0.0
        for step in range(self.tgrid.steps):
            t0 = times[step]
            t1 = times[step + 1]
            u22 = self._slab22(u22, t0, h)
            if with_u3:
                base_U, base_I = self._u3_base(u3, s_prev, h, w_u1, w_i1)
                del u3
                low = self._lower_physical(t1, u22)
                s_g = s_prev
                count, change = 0, math.inf
                while True:
                    s_new = self._source3_from(
                        low, lambda: (base_U + w_u1 * s_g, base_I + w_i1 * s_g))
                    diff = _l2(w_u1 * (s_new - s_g), self.grid)
                    size = _l2(base_U + w_u1 * s_new, self.grid)
                    scale = max(scale, size)
                    prev_change = change
                    change = diff / scale if scale > 0 else 0.0
                    s_g = s_new
                    del s_new
                    count += 1
                    if change <= cfg.picard_tol:
                        break
                    if count >= cfg.picard_max_iters or (count > 3 and change > prev_change):
                        raise NonContraction(
                            f"U3 iteration stalled on slab {step} (t = {t1:.4e}): "
                            f"relative update {change:.3e} after {count} iterations")
                u3 = RungState(base_U + w_u1 * s_g, base_I + w_i1 * s_g)
                del base_U, base_I, s_g
                s_prev = self._source3(low, u3.U, u3.I)
                del low
                iters.append(count)
                worst = max(worst, change)
            if need_all or step == self.tgrid.steps - 1:
                cur = snapshot(float(t1), u22, u3)
                for name, obs in observers.items():
                    samples[name].append(obs(float(t1), cur))
                for n in RUNGS:
                    if store == "all":
                        states[n].append(cur[n])
                    else:
                        states[n] = [cur[n]]
                del cur
        ladder = PerturbationLadder(self.grid, times, states, self.v0, iters, worst, samples)
        ladder.stored_indices = list(range(len(times))) if store == "all" else [len(times) - 1]
        return ladder

    def _u3_base(self, u3: RungState, s_prev: np.ndarray, h: float, w_u1, w_i1):
        """Parts of the exponential trapezoid that do not involve the new source."""
        e_h = np.exp(-h * self.lam)
        (p1,) = phi_functions(-h * self.lam, 1)
        # w_u0 = h (p1 - p2) and w_i0 = h^2 (p2 - p3)
        base_U = e_h * u3.U
        del e_h
        base_U += (h * p1) * s_prev
        base_U -= w_u1 * s_prev
        base_I = u3.I + (h * p1) * u3.U
        del p1
        base_I += h * w_u1 * s_prev
        base_I -= w_i1 * s_prev
        return base_U, base_I


def build_ladder(u0: Field, v0: Field, tgrid: TimeGrid, cfg: SolverConfig | None = None,
                 store: str = "all", observers: dict | None = None,
                 with_u3: bool = True) -> PerturbationLadder:
    """Convenience wrapper around :class:`LadderBuilder`."""
    return LadderBuilder(u0, v0, tgrid, cfg).build(store, observers, with_u3)


def _l2(spec: np.ndarray, grid: GridSpec) -> float:
    w = grid.parseval_weights()
    return math.sqrt(float(np.sum(w * (spec.real**2 + spec.imag**2))) * grid.volume) / grid.n_points


def build_U2(u0: Field, v0: Field, tgrid: TimeGrid, cfg: SolverConfig | None = None,
             store: str = "all") -> PerturbationLadder:
    """Ladder with U1, U2,1 and U2,2 only (U3 and V3 stay zero)."""
    return LadderBuilder(u0, v0, tgrid, cfg).build(store, with_u3=False)


def build_U3(u0: Field, v0: Field, tgrid: TimeGrid, cfg: SolverConfig | None = None,
             store: str = "all", observers: dict | None = None) -> PerturbationLadder:
    """Full ladder including the fixed-point solve for U3."""
    return LadderBuilder(u0, v0, tgrid, cfg).build(store, observers, with_u3=True)
