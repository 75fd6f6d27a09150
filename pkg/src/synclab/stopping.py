"""Stopping-time measurements over simulated shared-noise flows.

Each measurement advances one replica's ensemble with the compiled
kernels and reports the first step at which its condition holds, as a
StoppingRecord.  Reported times are integer multiples of the step size;
a condition already true in the initial state reports time 0.  A run
that reaches its horizon yields a censored record carrying the horizon
rather than an error: censoring is a value.

Conditions quantified over all points of the sphere or of space are
measured on finite samples (sphere samples, ball grids, pullback proxy
clouds).  Sampled synchronization times under-estimate their continuum
counterparts by sample resolution; campaign summaries report the sample
sizes next to the results for that reason.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .flow import (
    DEFAULT_GUARD,
    DivergenceError,
    Ensemble,
    pullback_attractor_sample,
    sphere_sample,
)
from .potential import (
    NotContractingError,
    PreconditionError,
    RadialPotential,
    is_strongly_contracting,
    quasi_potential,
    strong_contraction_radius,
)

CHUNK_STEPS = 4096

CSV_COLUMNS = ("kind", "eps", "delta", "r_inner", "r_outer", "n_points",
               "time", "censored", "horizon", "seed", "stream_id")


class ProxyEmpty(RuntimeError):
    """The attractor proxy cloud is empty after origin exclusion."""


@dataclass(frozen=True)
class Annulus:
    r_inner: float
    r_outer: float

    def __post_init__(self):
        if not self.r_inner < self.r_outer:
            raise PreconditionError(
                f"requires r_inner < r_outer (got {self.r_inner}, {self.r_outer})")

    def contains(self, radii) -> np.ndarray:
        return (np.asarray(radii) > self.r_inner) & (np.asarray(radii) < self.r_outer)


@dataclass
class StoppingRecord:
    kind: str
    time: float
    censored: bool
    horizon: float
    eps: float
    seed: int
    stream_id: int
    n_points: int
    delta: Optional[float] = None
    r_inner: Optional[float] = None
    r_outer: Optional[float] = None
    exit_side: Optional[str] = None  # summary metadata, not a CSV column

    def csv_row(self) -> list:
        return [self.kind, self.eps, self.delta, self.r_inner, self.r_outer,
                self.n_points, self.time, int(self.censored), self.horizon,
                self.seed, self.stream_id]


def default_sync_horizon(p: RadialPotential, eps: float, factor: float = 10.0) -> float:
    """factor * exp(barrier/eps): censors a vanishing fraction of runs."""
    return factor * math.exp(quasi_potential(p, 0.0, 1.0, math.inf) / eps)


def _radii(points) -> np.ndarray:
    return np.linalg.norm(np.atleast_2d(points), axis=1)


def _record(kind, step, n_horizon, dt, path, *, eps, n_points, **kw) -> StoppingRecord:
    censored = step is None
    time = n_horizon * dt if censored else step * dt
    return StoppingRecord(kind=kind, time=time, censored=censored,
                          horizon=n_horizon * dt, eps=eps,
                          seed=path.master_seed if hasattr(path, "master_seed")
                          else path.base.master_seed,
                          stream_id=path.stream_id if hasattr(path, "stream_id")
                          else path.base.stream_id,
                          n_points=n_points, **kw)


def exit_time(p: RadialPotential, ensemble: Ensemble, path, annulus: Annulus,
              horizon: float, guard: float = DEFAULT_GUARD) -> StoppingRecord:
    """First time ANY ensemble point leaves the annulus."""
    radii = _radii(ensemble.points)
    if not np.all(annulus.contains(radii)):
        bad = int(np.argmin(annulus.contains(radii)))
        raise PreconditionError(
            f"point {bad} starts outside the annulus: |x|={radii[bad]:.6g} "
            f"not in ({annulus.r_inner}, {annulus.r_outer})")
    r_out = min(annulus.r_outer, guard)
    dcoef = np.asarray(p.dcoeffs)
    sqeps = math.sqrt(ensemble.eps)
    n_horizon = int(round(horizon / path.dt))
    side = np.zeros(1, dtype=np.int64)
    step = None
    done = 0
    while done < n_horizon:
        n = min(CHUNK_STEPS, n_horizon - done)
        w = path.take(n)
        status = _kernels.exit_annulus(ensemble.points, dcoef, path.dt, sqeps,
                                       w, guard, annulus.r_inner, r_out, side)
        if status == _kernels.DIVERGED:
            raise DivergenceError("ensemble left the guard ball before exiting")
        if status != _kernels.NO_HIT:
            step = done + status + 1
            break
        done += n
    rec = _record("exit_annulus", step, n_horizon, path.dt, path,
                  eps=ensemble.eps, n_points=ensemble.n,
                  r_inner=annulus.r_inner, r_outer=annulus.r_outer)
    if step is not None:
        rec.exit_side = "inner" if side[0] == 1 else "outer"
    return rec


def entry_time(p: RadialPotential, ensemble: Ensemble, path, annulus: Annulus,
               horizon: float, guard: float = DEFAULT_GUARD) -> StoppingRecord:
    """First time ALL ensemble points are inside the annulus."""
    if np.all(annulus.contains(_radii(ensemble.points))):
        return _record("enter_annulus", 0, int(round(horizon / path.dt)),
                       path.dt, path, eps=ensemble.eps, n_points=ensemble.n,
                       r_inner=annulus.r_inner, r_outer=annulus.r_outer)
    dcoef = np.asarray(p.dcoeffs)
    sqeps = math.sqrt(ensemble.eps)
    n_horizon = int(round(horizon / path.dt))
    step = None
    done = 0
    while done < n_horizon:
        n = min(CHUNK_STEPS, n_horizon - done)
        w = path.take(n)
        status = _kernels.enter_annulus(ensemble.points, dcoef, path.dt, sqeps,
                                        w, guard, annulus.r_inner, annulus.r_outer)
        if status == _kernels.DIVERGED:
            raise DivergenceError("ensemble left the guard ball before entering")
        if status != _kernels.NO_HIT:
            step = done + status + 1
            break
        done += n
    return _record("enter_annulus", step, n_horizon, path.dt, path,
                   eps=ensemble.eps, n_points=ensemble.n,
                   r_inner=annulus.r_inner, r_outer=annulus.r_outer)


def _diameter(points) -> float:
    diff = points[:, None, :] - points[None, :, :]
    return float(np.max(np.linalg.norm(diff, axis=-1)))


def _sync_run(p, points, eps, path, delta, horizon, guard, kind) -> StoppingRecord:
    pts = np.atleast_2d(np.asarray(points, dtype=float)).copy()
    n_horizon = int(round(horizon / path.dt))
    if _diameter(pts) <= delta:
        return _record(kind, 0, n_horizon, path.dt, path, eps=eps,
                       n_points=pts.shape[0], delta=delta)
    dcoef = np.asarray(p.dcoeffs)
    sqeps = math.sqrt(eps)
    step = None
    done = 0
    while done < n_horizon:
        n = min(CHUNK_STEPS, n_horizon - done)
        w = path.take(n)
        status = _kernels.sync_diameter(pts, dcoef, path.dt, sqeps, w, guard, delta)
        if status == _kernels.DIVERGED:
            raise DivergenceError("ensemble left the guard ball before syncing")
        if status != _kernels.NO_HIT:
            step = done + status + 1
            break
        done += n
    return _record(kind, step, n_horizon, path.dt, path, eps=eps,
                   n_points=pts.shape[0], delta=delta)


def sphere_sync_time(p: RadialPotential, eps: float, sample, delta: float,
                     path, horizon: float, guard: float = DEFAULT_GUARD) -> StoppingRecord:
    """First time the sampled unit-sphere diameter is <= delta.

    `sample` is either a point count (equispaced circle sample) or an
    explicit (n, d) array of sphere points.
    """
    if delta <= 0:
        raise PreconditionError(f"requires delta > 0 (got {delta})")
    pts = sphere_sample(int(sample)) if np.isscalar(sample) else np.asarray(sample)
    if pts.shape[0] < 2:
        raise PreconditionError(f"requires n >= 2 sphere points (got {pts.shape[0]})")
    return _sync_run(p, pts, eps, path, delta, horizon, guard, "sphere_sync")


def grid_sync_time(p: RadialPotential, eps: float, grid, delta: float,
                   path, horizon: float, guard: float = DEFAULT_GUARD) -> StoppingRecord:
    """Sampled whole-space synchronization time on a ball-covering grid.

    A documented under-estimate of the true whole-space time by grid
    resolution.  Refuses profiles that are not strongly contracting: the
    grid then covers no absorbing ball.
    """
    if not is_strongly_contracting(p):
        raise NotContractingError(
            "whole-space synchronization needs a strongly contracting profile")
    info = strong_contraction_radius(p)
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    if np.max(np.abs(grid)) < info.radius - 1e-12:
        raise PreconditionError(
            f"grid extent {np.max(np.abs(grid)):.3g} does not cover the "
            f"contraction ball of radius {info.radius:.3g}")
    return _sync_run(p, grid, eps, path, delta, horizon, guard, "grid_sync")


def _proxy_cloud(p, eps, path, pullback_time, proxy_grid, guard) -> np.ndarray:
    """Pullback image of the proxy grid, origin-proximal sources dropped."""
    from .flow import ORIGIN_EXCLUSION

    proxy_grid = np.atleast_2d(np.asarray(proxy_grid, dtype=float))
    keep = np.linalg.norm(proxy_grid, axis=1) > ORIGIN_EXCLUSION
    proxy_grid = proxy_grid[keep]
    if proxy_grid.shape[0] == 0:
        raise ProxyEmpty("attractor proxy cloud empty after origin exclusion")
    return pullback_attractor_sample(p, eps, path, pullback_time, proxy_grid,
                                     guard=guard)


def point_to_attractor_times(p: RadialPotential, eps: float, x, delta: float,
                             path, horizon: float, proxy_grid,
                             pullback_time: float,
                             guard: float = DEFAULT_GUARD
                             ) -> tuple[StoppingRecord, StoppingRecord]:
    """Times for the point started at x to come within delta of the
    NEAREST and of the FARTHEST attractor-proxy point (d = 2).

    The proxy cloud is the pullback image of proxy_grid over
    [-pullback_time, 0] under the replica's own noise, advanced in
    lockstep with the trajectory afterwards, so at measurement time t it
    is the pullback image with window t + pullback_time.  Distances are
    evaluated at every step.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (2,):
        raise PreconditionError("point-to-attractor measurement is built for d = 2")
    cloud = _proxy_cloud(p, eps, path, pullback_time, proxy_grid, guard)
    pts = np.vstack([x[None, :], cloud])
    n_horizon = int(round(horizon / path.dt))
    dists = np.linalg.norm(cloud - x, axis=1)
    at_zero = np.array([dists.min() <= delta, dists.max() <= delta])
    hits = np.where(at_zero, 10 ** 18, -1).astype(np.int64)
    dcoef = np.asarray(p.dcoeffs)
    sqeps = math.sqrt(eps)
    done = 0
    while done < n_horizon and np.any(hits < 0):
        n = min(CHUNK_STEPS, n_horizon - done)
        w = path.take(n)
        status = _kernels.point_to_proxy(pts, dcoef, path.dt, sqeps, w, guard,
                                         delta, done, hits)
        if status == _kernels.DIVERGED:
            raise DivergenceError("trajectory left the guard ball")
        done += n

    def make(kind, idx):
        if at_zero[idx]:
            step = 0
        elif hits[idx] < 0:
            step = None
        else:
            step = int(hits[idx]) + 1
        return _record(kind, step, n_horizon, path.dt, path, eps=eps,
                       n_points=cloud.shape[0], delta=delta)

    return make("attractor_sync_lower", 0), make("attractor_sync_upper", 1)


@dataclass
class SandwichResult:
    sphere_2delta: StoppingRecord
    attractor_delta: StoppingRecord
    grid_delta: StoppingRecord

    def ordered(self) -> bool:
        """Pathwise chain: sphere at 2*delta, then proxy, then full grid.

        Censored times compare as their horizon (a lower bound on the
        unobserved time), so a censored later stage never falsifies the
        chain.
        """
        def effective(r):
            return r.time if not r.censored else math.inf
        t1 = effective(self.sphere_2delta)
        t2 = effective(self.attractor_delta)
        t3 = effective(self.grid_delta)
        return t1 <= t2 <= t3


def sync_sandwich(p: RadialPotential, eps: float, delta: float, path,
                  horizon: float, n_sphere: int, grid, proxy_grid,
                  pullback_time: float, guard: float = DEFAULT_GUARD) -> SandwichResult:
    """Co-measure the three synchronization times on ONE noise path.

    The advanced ensemble is sphere sample + ball grid + pullback proxy
    cloud; every proxy point is the flow image of a time-0 point, so the
    chain sphere@2delta <= proxy@delta <= full@delta holds pathwise by
    set inclusion.
    """
    sphere = sphere_sample(n_sphere)
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    cloud = _proxy_cloud(p, eps, path, pullback_time, proxy_grid, guard)
    pts = np.vstack([sphere, grid, cloud])
    n_horizon = int(round(horizon / path.dt))
    dcoef = np.asarray(p.dcoeffs)
    sqeps = math.sqrt(eps)
    cross = np.linalg.norm(sphere[:, None, :] - cloud[None, :, :], axis=-1)
    at_zero = np.array([_diameter(sphere) <= 2 * delta,
                        cross.max() <= delta,
                        _diameter(pts) <= delta])
    hits = np.where(at_zero, 10 ** 18, -1).astype(np.int64)
    done = 0
    while done < n_horizon and np.any(hits < 0):
        n = min(CHUNK_STEPS, n_horizon - done)
        w = path.take(n)
        status = _kernels.sync_sandwich(pts, n_sphere, grid.shape[0], dcoef,
                                        path.dt, sqeps, w, guard, delta,
                                        done, hits)
        if status == _kernels.DIVERGED:
            raise DivergenceError("sandwich ensemble left the guard ball")
        done += n

    def make(kind, idx, n_points, delta_used):
        if at_zero[idx]:
            step = 0
        elif hits[idx] < 0:
            step = None
        else:
            step = int(hits[idx]) + 1
        return _record(kind, step, n_horizon, path.dt, path, eps=eps,
                       n_points=n_points, delta=delta_used)

    return SandwichResult(
        sphere_2delta=make("sphere_sync", 0, n_sphere, 2 * delta),
        attractor_delta=make("attractor_sync_upper", 1, cloud.shape[0], delta),
        grid_delta=make("grid_sync", 2, pts.shape[0], delta),
    )
