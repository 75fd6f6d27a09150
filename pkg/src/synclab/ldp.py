"""Path action functionals and the constructive synchronizing control.

The action of an absolutely continuous forcing path g is half the time
integral of its squared velocity.  Pushing a forcing path through the
controlled flow

    f(t) = f(0) - integral of gradient(f) + g(t)

yields trajectories whose action dominates twice the potential increase
along them; that inequality is the engine of every lower bound measured
by the experiments, and is exposed here as `action_lower_bound`.

`build_sync_control` constructs the explicit low-action forcing that
drags the whole phase space into a delta-ball: relax, push the leftmost
point off the sphere, climb the potential hill along the reversed flow,
cross the unstable origin, rotate stragglers into the right half-plane
with a long weak push, relax again, and finally contract everything onto
a controlled fixed point right of the well.  The forcing acts in the
first coordinate only.  `verify_control` replays the construction from a
grid and checks each phase's position predicate plus the final diameter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .flow import DEFAULT_GUARD, DivergenceError
from .potential import (
    PreconditionError,
    RadialPotential,
    contraction_time,
    is_strongly_contracting,
)


class AlphaTooLarge(ValueError):
    """The push amplitude alpha violates the derivative floor at radius 2."""


class ReversedFlowStall(RuntimeError):
    """The hill-climb flow failed to reach its target within budget."""


class PhasePredicateFailed(AssertionError):
    """A phase invariant of the constructive control broke during replay."""


# -- control representation ---------------------------------------------

@dataclass(frozen=True)
class ConstantPiece:
    t_start: float
    t_end: float
    h: np.ndarray  # control velocity, shape (d,)
    label: str = ""

    def cum_first(self, t):
        """Integral of the first coordinate of h over [t_start, min(t, t_end)]."""
        return self.h[0] * (np.minimum(t, self.t_end) - self.t_start)


@dataclass(frozen=True)
class SampledPiece:
    """First-coordinate velocity sampled on an increasing time grid,
    interpreted piecewise-linearly; used for the hill-climb phase."""

    t_start: float
    t_end: float
    times: np.ndarray   # relative to t_start, first 0, last t_end - t_start
    values: np.ndarray  # h first coordinate at those times
    label: str = ""


@dataclass
class Control:
    """Forcing path g(t) = integral of a piecewise velocity h(t).

    Pieces are stored with explicit boundaries and never resampled, so
    per-phase action bookkeeping is exact.  g(0) = 0 and g is continuous.
    """

    pieces: list
    d: int = 2

    @property
    def duration(self) -> float:
        return self.pieces[-1].t_end if self.pieces else 0.0

    def velocity(self, t: float) -> np.ndarray:
        h = np.zeros(self.d)
        for piece in self.pieces:
            if piece.t_start <= t < piece.t_end:
                if isinstance(piece, ConstantPiece):
                    h[:] = piece.h
                else:
                    h[0] = np.interp(t - piece.t_start, piece.times, piece.values)
                break
        return h

    def cum_integral_first(self, times) -> np.ndarray:
        """Exact integral of the first velocity coordinate from 0 to each t."""
        times = np.asarray(times, dtype=float)
        out = np.zeros_like(times)
        for piece in self.pieces:
            rel = np.clip(times - piece.t_start, 0.0, piece.t_end - piece.t_start)
            if isinstance(piece, ConstantPiece):
                out += piece.h[0] * rel
            else:
                nodes = piece.times
                vals = piece.values
                cum = np.concatenate([[0.0], np.cumsum(
                    0.5 * (vals[1:] + vals[:-1]) * np.diff(nodes))])
                idx = np.clip(np.searchsorted(nodes, rel, side="right") - 1,
                              0, nodes.size - 2)
                frac = rel - nodes[idx]
                h_at = vals[idx] + (vals[idx + 1] - vals[idx]) * np.where(
                    np.diff(nodes)[idx] > 0, frac / np.diff(nodes)[idx], 0.0)
                out += cum[idx] + 0.5 * (vals[idx] + h_at) * frac
        return out

    def g_increments(self, t0: float, dt: float, n_steps: int) -> np.ndarray:
        """(n_steps, d) exact forcing increments on a uniform step grid."""
        times = t0 + dt * np.arange(n_steps + 1)
        first = self.cum_integral_first(times)
        out = np.zeros((n_steps, self.d))
        out[:, 0] = np.diff(first)
        if any(isinstance(p, ConstantPiece) and np.any(p.h[1:] != 0.0)
               for p in self.pieces):
            for j in range(1, self.d):
                comp = np.zeros(times.shape)
                for piece in self.pieces:
                    if isinstance(piece, ConstantPiece):
                        rel = np.clip(times - piece.t_start, 0.0,
                                      piece.t_end - piece.t_start)
                        comp += piece.h[j] * rel
                out[:, j] = np.diff(comp)
        return out

    def piece_action(self, piece) -> float:
        if isinstance(piece, ConstantPiece):
            return 0.5 * float(piece.h @ piece.h) * (piece.t_end - piece.t_start)
        return 0.5 * float(np.trapezoid(piece.values ** 2, piece.times))


def schilder_action(control: Control) -> float:
    """Half the integral of |velocity|^2: exact for constant pieces,
    trapezoidal over the stored samples for sampled pieces."""
    return float(sum(control.piece_action(piece) for piece in control.pieces))


def controlled_flow(p: RadialPotential, x0, control: Control,
                    dt: float = 1e-3, t0: float = 0.0, t1: float | None = None,
                    record: bool = False, guard: float = DEFAULT_GUARD):
    """Explicit-Euler integration of the forced flow.

    Each step adds the exact forcing increment over its interval, so
    piece boundaries need not align with the step grid.
    """
    if t1 is None:
        t1 = control.duration
    n_steps = int(round((t1 - t0) / dt))
    x = np.atleast_2d(np.asarray(x0, dtype=float)).copy()
    g_inc = control.g_increments(t0, dt, n_steps)
    path = np.empty((n_steps + 1, x.shape[0], x.shape[1])) if record else None
    if record:
        path[0] = x
    g2 = guard * guard
    for k in range(n_steps):
        x = x + (-p.gradient(x)) * dt + g_inc[k]
        if np.max(np.sum(x * x, axis=-1)) > g2:
            raise DivergenceError(f"controlled flow left the guard ball at step {k}")
        if record:
            path[k + 1] = x
    return path if record else x


def _driven_advance(p, pts, dt, g_inc, guard):
    """Kernel-backed controlled advance; forcing increments play the role
    of shared noise increments with unit amplitude."""
    status = _kernels.advance_ensemble(pts, np.asarray(p.dcoeffs), dt, 1.0,
                                       g_inc, guard)
    if status != _kernels.NO_HIT:
        raise DivergenceError("controlled flow left the guard ball")
    return pts


def action_lower_bound(p: RadialPotential, trajectory, dt: float,
                       t_from: float, t_to: float) -> float:
    """Twice the potential increase along the trajectory between two
    times: every forcing achieving this trajectory costs at least this
    much action (callers assert action >= bound - tolerance)."""
    if not t_from < t_to:
        raise PreconditionError(f"requires t_from < t_to (got {t_from}, {t_to})")
    traj = np.asarray(trajectory)
    i0 = int(round(t_from / dt))
    i1 = int(round(t_to / dt))
    if i1 >= traj.shape[0]:
        raise PreconditionError("t_to beyond the trajectory span")
    e0 = np.max(p.energy(traj[i0])) if traj[i0].ndim > 1 else p.energy(traj[i0])
    e1 = np.max(p.energy(traj[i1])) if traj[i1].ndim > 1 else p.energy(traj[i1])
    return 2.0 * float(e1 - e0)


def random_piecewise_control(rng, T: float = 2.0, max_pieces: int = 6,
                             h_max: float = 1.5, d: int = 2) -> Control:
    """Random piecewise-linear forcing path (piecewise-constant velocity)."""
    n = int(rng.integers(1, max_pieces + 1))
    cuts = np.sort(rng.uniform(0.0, T, size=n - 1))
    bounds = np.concatenate([[0.0], cuts, [T]])
    pieces = []
    for i in range(n):
        h = rng.uniform(-h_max, h_max, size=d)
        pieces.append(ConstantPiece(bounds[i], bounds[i + 1], h))
    return Control(pieces=pieces, d=d)


# -- the constructive synchronizing control ------------------------------

@dataclass
class ControlSchedule:
    """Phase boundaries, derived constants and per-phase action of the
    constructive control."""

    alpha: float
    delta: float
    c1: float
    c2: float
    beta: float
    eta: float
    phase_times: tuple  # (T1, ..., T7); phase k spans (T_{k-1}, T_k], T0 = 0
    per_phase_action: tuple
    labels: tuple = ("relax", "push off the sphere", "climb the hill",
                     "cross the origin", "rotate stragglers", "settle",
                     "contract onto the pivot")

    @property
    def total_action(self) -> float:
        return float(sum(self.per_phase_action))

    def csv_rows(self) -> list[list]:
        rows = []
        bounds = (0.0,) + self.phase_times
        for k in range(7):
            rows.append([k + 1, bounds[k], bounds[k + 1], self.labels[k],
                         self.per_phase_action[k]])
        return rows


def _root_of_dprofile(p: RadialPotential, target: float, lo: float, hi: float) -> float:
    from scipy.optimize import brentq
    return float(brentq(lambda s: p.dprofile(s) - target, lo, hi, xtol=1e-14))


def _hill_profile(p: RadialPotential, c1: float, alpha: float,
                  dt_hill: float = 1e-4, budget: float = 200.0):
    """Integrate the reversed flow from -c1 until it reaches -alpha,
    clamping the crossing step by linear interpolation; returns the
    sample times and the forcing values 2*|ascent speed| along it."""
    phi = -c1
    times = [0.0]
    speeds = [2.0 * 2.0 * p.dprofile(phi * phi) * phi]
    max_steps = int(budget / dt_hill)
    for k in range(max_steps):
        speed = 2.0 * p.dprofile(phi * phi) * phi  # ascent velocity of the hill climb
        phi_next = phi + speed * dt_hill
        if phi_next >= -alpha:
            frac = (-alpha - phi) / (phi_next - phi)
            t_cross = (k + frac) * dt_hill
            times.append(t_cross)
            speeds.append(2.0 * 2.0 * p.dprofile(alpha * alpha) * (-alpha))
            return np.asarray(times), np.asarray(speeds)
        phi = phi_next
        times.append((k + 1) * dt_hill)
        speeds.append(2.0 * 2.0 * p.dprofile(phi * phi) * phi)
    raise ReversedFlowStall(
        f"hill climb failed to reach -alpha={-alpha} within {budget} time units")


def _angular_sample(radius: float, n: int) -> np.ndarray:
    angles = np.pi * 2.0 * np.arange(n) / n
    return radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)


def _realization_sample(alpha: float, n_angular: int) -> np.ndarray:
    """Boundary sphere sample plus interior filler for realizing phase
    boundaries over the closed ball."""
    rings = [_angular_sample(1.0 + alpha, n_angular)]
    for frac in (0.75, 0.5, 0.25):
        rings.append(_angular_sample((1.0 + alpha) * frac, 24))
    rings.append(np.zeros((1, 2)))
    return np.vstack(rings)


def build_sync_control(p: RadialPotential, alpha: float, delta: float,
                       dt_realize: float = 1e-3, dt_hill: float = 1e-4,
                       n_eta: int = 720) -> tuple[Control, ControlSchedule]:
    """Construct the seven-phase forcing that contracts the whole space
    to diameter <= delta, together with its schedule.

    The rotation margin eta is estimated numerically: phases 2-4 are
    replayed from a fine angular sample of the sphere of radius 1+alpha,
    and eta is half the smallest first-coordinate threshold above the
    bottom point that captures every sample NOT ending in the right
    half-plane.  The final contraction window uses the linearized
    tangential rate 4*alpha at the pivot (the derivative floor 2*alpha
    at radius c2 doubles under the chain rule), which the verification
    confirms by monitoring the diameter decay.
    """
    if not 0 < alpha < 1:
        raise AlphaTooLarge(f"alpha must lie in (0, 1) (got {alpha})")
    if p.dprofile(4.0) < 2.0 * alpha:
        raise AlphaTooLarge(
            f"requires profile'(4) >= 2*alpha (got {p.dprofile(4.0):.4g} < {2 * alpha:.4g})")
    if delta <= 0:
        raise PreconditionError(f"delta must be positive (got {delta})")
    if not is_strongly_contracting(p):
        raise PreconditionError("constructive control needs a strongly contracting profile")

    # derived constants
    if p.dprofile(0.0) <= -alpha:
        s_star = _root_of_dprofile(p, -alpha, 0.0, 1.0)
        c1 = max(1.0 - alpha, math.sqrt(s_star))
    else:
        c1 = 1.0 - alpha
    c2 = math.sqrt(_root_of_dprofile(p, 2.0 * alpha, 1.0, 4.0))

    t1 = contraction_time(p, 1.0 + alpha)
    t2 = t1 + 2.0
    hill_times, hill_values = _hill_profile(p, c1, alpha, dt_hill=dt_hill)
    t3 = t2 + float(hill_times[-1])
    t4 = t3 + 2.0
    h2 = 3.0 * alpha
    h4 = (-2.0 * float(p.dprofile(0.0)) + 1.0) * alpha

    def piece(a, b, hx, label):
        return ConstantPiece(a, b, np.array([hx, 0.0]), label)

    prefix = [
        piece(0.0, t1, 0.0, "relax"),
        piece(t1, t2, h2, "push off the sphere"),
        SampledPiece(t2, t3, hill_times, hill_values, "climb the hill"),
        piece(t3, t4, h4, "cross the origin"),
    ]

    # eta: replay phases 2-4 from the boundary sphere sample
    sample = _angular_sample(1.0 + alpha, n_eta)
    pts = sample.copy()
    ctrl_prefix = Control(pieces=prefix, d=2)
    n_steps = int(round((t4 - t1) / dt_realize))
    g_inc = ctrl_prefix.g_increments(t1, dt_realize, n_steps)
    _driven_advance(p, pts, dt_realize, g_inc, DEFAULT_GUARD)
    bad = pts[:, 0] <= 0.0
    if bad.any():
        margins = sample[bad, 0] + 1.0 + alpha
        m = float(margins.min())
        if m <= 0:
            raise PhasePredicateFailed(
                "cross the origin: the bottom axis point failed to end in "
                "the right half-plane")
    else:
        m = 2.0 * (1.0 + alpha)
    eta = 0.5 * m
    beta = alpha * eta
    t5 = t4 + 8.0 / (alpha * eta * eta)

    # realize the settling boundary over the closed ball
    ball = _realization_sample(alpha, n_eta)
    pts = ball.copy()
    pieces_through_5 = prefix + [piece(t4, t5, beta, "rotate stragglers")]
    ctrl5 = Control(pieces=pieces_through_5, d=2)
    n_steps = int(round((t5 - t1) / dt_realize))
    _driven_advance(p, pts, dt_realize, ctrl5.g_increments(t1, dt_realize, n_steps),
                    DEFAULT_GUARD)
    if not np.all(pts[:, 0] > 0.0):
        raise PhasePredicateFailed(
            "rotate stragglers: some sample still left of the origin at its end")
    settle_budget = int(round(60.0 / dt_realize))
    zero_inc = np.zeros((64, 2))
    settled = 0
    while settled < settle_budget:
        radii = np.linalg.norm(pts, axis=1)
        if radii.min() >= c1 and radii.max() <= 2.0:
            break
        _driven_advance(p, pts, dt_realize, zero_inc, DEFAULT_GUARD)
        settled += zero_inc.shape[0]
    else:
        raise PhasePredicateFailed("settle: radii failed to enter [c1, 2] in budget")
    t6 = t5 + settled * dt_realize

    h7 = 4.0 * alpha * c2
    t7 = t6 + math.log(8.0 / delta) / (4.0 * alpha)

    pieces = pieces_through_5 + [
        piece(t5, t6, 0.0, "settle"),
        piece(t6, t7, h7, "contract onto the pivot"),
    ]
    control = Control(pieces=pieces, d=2)
    # closed forms, independent of Control.piece_action
    per_phase = (
        0.0,
        0.5 * h2 * h2 * (t2 - t1),
        0.5 * float(np.trapezoid(hill_values ** 2, hill_times)),
        0.5 * h4 * h4 * (t4 - t3),
        0.5 * beta * beta * (t5 - t4),
        0.0,
        0.5 * h7 * h7 * (t7 - t6),
    )
    schedule = ControlSchedule(alpha=alpha, delta=delta, c1=c1, c2=c2,
                               beta=beta, eta=eta,
                               phase_times=(t1, t2, t3, t4, t5, t6, t7),
                               per_phase_action=per_phase)
    return control, schedule


def verification_grid(n: int = 16, r_max: float = 1.45) -> np.ndarray:
    """Deterministic spread of n points over the contraction ball."""
    if n != 16:
        shells = _angular_sample(r_max, n - 1)
        return np.vstack([shells, np.zeros((1, 2))])
    return np.vstack([
        _angular_sample(r_max, 8),
        _angular_sample(0.8, 4),
        _angular_sample(0.3, 3),
        np.zeros((1, 2)),
    ])


@dataclass
class VerificationReport:
    predicates: list = field(default_factory=list)  # (name, ok, detail)
    final_diameter: float = math.nan
    total_action: float = math.nan
    per_phase_action: tuple = ()
    phase7_diameters: tuple = ()
    n_grid: int = 0
    dt: float = math.nan

    @property
    def all_passed(self) -> bool:
        return all(ok for _name, ok, _detail in self.predicates)

    def __str__(self) -> str:
        lines = [f"controlled-flow verification over {self.n_grid} grid points "
                 f"(dt={self.dt:g})"]
        for name, ok, detail in self.predicates:
            lines.append(f"  {'pass' if ok else 'FAIL'}  {name}  {detail}")
        lines.append(f"  final diameter      {self.final_diameter:.6g}")
        lines.append(f"  total action        {self.total_action:.6g}")
        for k, a in enumerate(self.per_phase_action):
            lines.append(f"    phase {k + 1} action  {a:.6g}")
        return "\n".join(lines)


def _diam(pts) -> float:
    diff = pts[:, None, :] - pts[None, :, :]
    return float(np.max(np.sqrt(np.sum(diff * diff, axis=-1))))


def verify_control(p: RadialPotential, control: Control, schedule: ControlSchedule,
                   grid=None, dt: float = 1e-3, strict: bool = True) -> VerificationReport:
    """Replay the constructive control from every grid point under the
    SAME forcing and check the per-phase position predicates, the
    monotone diameter decay of the final phase, and the final diameter.
    """
    if grid is None:
        grid = verification_grid()
    pts = np.atleast_2d(np.asarray(grid, dtype=float)).copy()
    report = VerificationReport(n_grid=pts.shape[0], dt=dt,
                                per_phase_action=schedule.per_phase_action,
                                total_action=schedule.total_action)
    t1, t2, t3, t4, t5, t6, t7 = schedule.phase_times

    def advance_to(t_from, t_to, current_pts):
        n = int(round((t_to - t_from) / dt))
        if n > 0:
            _driven_advance(p, current_pts, dt,
                            control.g_increments(t_from, dt, n), DEFAULT_GUARD)
        return t_from + n * dt

    t = advance_to(0.0, t1, pts)
    report.predicates.append((
        "relax: all points inside the 1+alpha ball",
        bool(np.all(np.linalg.norm(pts, axis=1) <= 1.0 + schedule.alpha + 5e-3)),
        f"max radius {np.linalg.norm(pts, axis=1).max():.4g}"))

    t = advance_to(t, t5, pts)
    report.predicates.append((
        "rotate stragglers: all first coordinates positive",
        bool(np.all(pts[:, 0] > 0.0)),
        f"min first coordinate {pts[:, 0].min():.4g}"))

    t = advance_to(t, t6, pts)
    radii = np.linalg.norm(pts, axis=1)
    report.predicates.append((
        "settle: radii within [c1, 2] and right half-plane kept",
        bool(radii.min() >= schedule.c1 - 5e-3 and radii.max() <= 2.0 + 5e-3
             and np.all(pts[:, 0] > 0.0)),
        f"radii in [{radii.min():.4g}, {radii.max():.4g}]"))

    # pivot stationarity during the final phase
    pivot = np.array([[schedule.c2, 0.0]])
    n7 = int(round((t7 - t6) / dt))
    pivot_end = pivot.copy()
    _driven_advance(p, pivot_end, dt, control.g_increments(t, dt, n7), DEFAULT_GUARD)
    drift_residual = float(np.linalg.norm(pivot_end - pivot))
    report.predicates.append((
        "contract onto the pivot: pivot point is stationary",
        drift_residual <= dt,
        f"residual {drift_residual:.3g}"))

    diams = []
    checkpoints = np.linspace(t, t + n7 * dt, 11)
    for k in range(10):
        t = advance_to(t, checkpoints[k + 1], pts)
        diams.append(_diam(pts))
    report.phase7_diameters = tuple(diams)
    monotone = all(a >= b - 1e-12 for a, b in zip(diams, diams[1:]))
    report.predicates.append((
        "contract onto the pivot: diameter monotone non-increasing",
        monotone, f"diameters {['%.3g' % v for v in diams]}"))

    report.final_diameter = diams[-1]
    report.predicates.append((
        "final diameter within delta",
        report.final_diameter <= schedule.delta,
        f"{report.final_diameter:.4g} vs delta={schedule.delta}"))

    if strict and not report.all_passed:
        failed = [name for name, ok, _ in report.predicates if not ok]
        raise PhasePredicateFailed("; ".join(failed) + "\n" + str(report))
    return report
