"""Time steppers for the four dynamics of the model.

All integration is explicit Euler-Maruyama: the Cartesian noise is
additive, so nothing fancier is warranted, and the zero-noise step then
degenerates to one explicit-Euler step of the noiseless flow bit for bit.

Conventions shared by every stepper:
  * one noise increment per step drives EVERY point of an ensemble (the
    sampled stochastic flow), replicas differ only through their stream;
  * angles are unwrapped reals, circle distance is taken mod 2*pi only
    at measurement sites;
  * a divergence guard aborts when any point leaves the ball of radius
    `guard` (default 1e6);
  * the squared radius of the polar pair must stay above a positivity
    floor (default 1e-8); stepping below it raises RadiusCollapse since
    the angle equation is singular at the origin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .potential import RadialPotential

DEFAULT_DT = 1e-3
DEFAULT_DT_ACCELERATED = 1e-4
DEFAULT_GUARD = 1e6
RADIUS_FLOOR = 1e-8
ORIGIN_EXCLUSION = 1e-3
CHUNK_STEPS = 4096


class DivergenceError(RuntimeError):
    """A trajectory left the guard ball; the step size cannot resolve it."""


class RadiusCollapse(RuntimeError):
    """The squared radius fell below the positivity floor: the trajectory
    entered the coordinate singularity of the angle equation."""


@dataclass
class Ensemble:
    """Phase-space points advanced under one shared noise path."""

    points: np.ndarray
    t: float = 0.0
    eps: float = 0.0
    labels: list = field(default_factory=list)

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float)).copy()
        if not self.labels:
            self.labels = list(range(self.points.shape[0]))
        if len(self.labels) != self.points.shape[0]:
            raise ValueError("one label per point required")

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]


@dataclass
class PolarState:
    r_sq: float
    phi: float
    t: float = 0.0


@dataclass
class CircleState:
    z: float
    t: float = 0.0


# -- noiseless flow ----------------------------------------------------

def ode_flow(p: RadialPotential, x0, T: float, dt: float = DEFAULT_DT,
             guard: float = DEFAULT_GUARD, record: bool = False):
    """Explicit-Euler trajectory of the noiseless flow.

    Returns the final point, or the (n_steps+1, d) path when record=True.
    """
    if dt > T:
        raise ValueError(f"dt must not exceed T (dt={dt}, T={T})")
    x = np.asarray(x0, dtype=float).copy()
    n_steps = int(round(T / dt))
    path = np.empty((n_steps + 1, x.shape[-1])) if record else None
    if record:
        path[0] = x
    g2 = guard * guard
    for k in range(n_steps):
        x = x + (-p.gradient(x)) * dt
        if np.sum(x * x) > g2:
            raise DivergenceError(f"noiseless flow left the guard ball at t={k * dt}")
        if record:
            path[k + 1] = x
    return path if record else x


# -- shared-noise Cartesian flow ---------------------------------------

def sde_step(p: RadialPotential, ensemble: Ensemble, dW,
             dt: float = DEFAULT_DT, guard: float = DEFAULT_GUARD) -> Ensemble:
    """One Euler-Maruyama step; the same increment moves every point."""
    if ensemble.eps < 0:
        raise ValueError("noise intensity must be nonnegative")
    dW = np.asarray(dW, dtype=float)
    sqeps = math.sqrt(ensemble.eps)
    pts = ensemble.points
    ensemble.points = pts + (-p.gradient(pts)) * dt + sqeps * dW
    ensemble.t += dt
    if np.max(np.sum(ensemble.points ** 2, axis=-1)) > guard * guard:
        raise DivergenceError(f"ensemble left the guard ball at t={ensemble.t}")
    return ensemble


def advance_ensemble(p: RadialPotential, ensemble: Ensemble, path, n_steps: int,
                     guard: float = DEFAULT_GUARD) -> Ensemble:
    """Advance n_steps with increments taken sequentially from `path`,
    chunked through the compiled kernel."""
    sqeps = math.sqrt(ensemble.eps)
    dcoef = np.asarray(p.dcoeffs)
    done = 0
    while done < n_steps:
        n = min(CHUNK_STEPS, n_steps - done)
        w = path.take(n)
        status = _kernels.advance_ensemble(ensemble.points, dcoef, path.dt,
                                           sqeps, w, guard)
        if status != _kernels.NO_HIT:
            raise DivergenceError(
                f"ensemble left the guard ball at t={ensemble.t + (done + status + 1) * path.dt}")
        done += n
    ensemble.t += n_steps * path.dt
    return ensemble


# -- accelerated polar pair and circle process --------------------------

def polar_step(p: RadialPotential, state: PolarState, eps: float, dW,
               dt: float = DEFAULT_DT_ACCELERATED,
               floor: float = RADIUS_FLOOR) -> PolarState:
    """One Euler-Maruyama step of the coupled squared-radius/angle pair
    on the accelerated clock (radial drift carries the 1/eps factor, the
    +2dt term is the Ito correction of the radial noise)."""
    if eps <= 0:
        raise ValueError("accelerated dynamics requires eps > 0")
    if state.r_sq < floor:
        raise RadiusCollapse(f"squared radius {state.r_sq} below floor at t={state.t}")
    w1, w2 = float(dW[0]), float(dW[1])
    r_sq, phi = state.r_sq, state.phi
    r = math.sqrt(r_sq)
    up = float(p.dprofile(r_sq))
    r_new = r_sq + (-(4.0 / eps) * r_sq * up + 2.0) * dt \
        + 2.0 * r * (math.cos(phi) * w1 + math.sin(phi) * w2)
    phi_new = phi + (1.0 / r) * (-math.sin(phi) * w1 + math.cos(phi) * w2)
    if r_new < floor:
        raise RadiusCollapse(f"squared radius {r_new} below floor at t={state.t + dt}")
    return PolarState(r_sq=r_new, phi=phi_new, t=state.t + dt)


def circle_step(state: CircleState, dW, dt: float = DEFAULT_DT_ACCELERATED) -> CircleState:
    """One Euler-Maruyama step of the circle process; two states advanced
    with shared increments realize the coupled two-point motion."""
    w1, w2 = float(dW[0]), float(dW[1])
    z = state.z + (-math.sin(state.z) * w1 + math.cos(state.z) * w2)
    return CircleState(z=z, t=state.t + dt)


def circle_distance(a: float, b: float) -> float:
    gap = (b - a) % (2.0 * math.pi)
    return min(gap, 2.0 * math.pi - gap)


# -- pullback attractor proxy -------------------------------------------

def pullback_attractor_sample(p: RadialPotential, eps: float, base_path,
                              T_pullback: float, grid,
                              guard: float = DEFAULT_GUARD,
                              exclude_origin: bool = False) -> np.ndarray:
    """Image at time 0 of `grid` flowed from time -T_pullback under the
    base path's own past increments (negative step indices).

    This cloud is the numerical stand-in for the random attractor at the
    base path's time origin; advancing it in lockstep with a trajectory
    keeps it the pullback image with an ever-growing window.  With
    exclude_origin=True, grid points within ORIGIN_EXCLUSION of 0 are
    dropped first: the origin is an unstable fixed point whose basin is
    a null set but pollutes finite grids.
    """
    from .noise import ShiftView

    if T_pullback <= 0:
        raise ValueError("T_pullback must be positive")
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    if exclude_origin:
        keep = np.linalg.norm(grid, axis=1) > ORIGIN_EXCLUSION
        grid = grid[keep]
    if grid.shape[0] == 0:
        raise ValueError("pullback grid is empty")
    n_steps = int(round(T_pullback / base_path.dt))
    view = ShiftView(base_path, shift_steps=-n_steps)
    ens = Ensemble(points=grid, t=-T_pullback, eps=eps)
    advance_ensemble(p, ens, view, n_steps, guard=guard)
    return ens.points


# -- point geometry helpers ---------------------------------------------

def sphere_sample(n: int, radius: float = 1.0, d: int = 2) -> np.ndarray:
    """Deterministic equispaced sample of the circle of given radius."""
    if d != 2:
        raise NotImplementedError("sphere sampling is built for d = 2")
    angles = 2.0 * np.pi * np.arange(n) / n
    return radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)


def square_grid(extent: float, n_side: int) -> np.ndarray:
    """n_side x n_side lattice on [-extent, extent]^2."""
    xs = np.linspace(-extent, extent, n_side)
    gx, gy = np.meshgrid(xs, xs)
    return np.stack([gx.ravel(), gy.ravel()], axis=1)
