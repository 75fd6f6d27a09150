"""Campaign orchestration: multi-noise-level replica sweeps and the
scaling-law fits they feed.

Every campaign is a pure function of (configuration, master seed): stream
ids are allocated deterministically over (noise level, replicate) cells,
cells are mutually independent through the counter-based noise, and all
aggregation happens over sorted values, so reruns and row permutations
reproduce fits exactly.  Workers parallelize over cells with no shared
state; the reduction order is fixed regardless of scheduling.

Conventions: means summarize exit times (the theory speaks about expected
exit times), medians summarize synchronization times (their small-noise
distributions are right-skewed by censoring).  A fit is only reported
when every contributing noise level is at least 90% non-censored;
otherwise the campaign result carries a flag and no fit.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .flow import Ensemble, sphere_sample, square_grid
from .noise import NoisePath
from .potential import RadialPotential, quasi_potential
from .stopping import (
    CSV_COLUMNS,
    Annulus,
    exit_time,
    point_to_attractor_times,
    sphere_sync_time,
    sync_sandwich,
)


class CampaignFlag(RuntimeError):
    """Statistical failure that flags the run (CLI exit code 2)."""


class NoFitPossible(CampaignFlag):
    pass


class TooCensored(CampaignFlag):
    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


@dataclass
class Campaign:
    """One campaign's full parameterization; epsilons kept sorted
    descending so cheap cells run first and ids are stable."""

    kind: str
    potential: RadialPotential
    master_seed: int = 0
    epsilons: tuple = ()
    replicas: int = 100
    dt: float = 1e-3
    dt_accelerated: float = 1e-4
    guard: float = 1e6
    # annulus / escape geometry
    r_inner: float = 0.3
    r_outer: float = 2.0
    n_start: int = 32
    start_radius: float = 1.0
    # synchronization geometry
    delta: float = 0.2
    n_sphere: int = 64
    grid_extent: float = 1.5
    grid_n: int = 15
    sandwich_replicas: int = 20
    proxy_grid_extent: float = 1.4
    proxy_grid_n: int = 4
    pullback_factor: float = 12.0
    horizon_factor: float = 10.0
    point_horizon_factor: float = 60.0
    x0: tuple = (2.0, 0.0)
    # window-style campaigns
    T: float = 1.0
    separation: float = math.pi / 2.0
    sample_interval: float = 0.1
    noise_amplitude: float = 1.0
    radial_noise: bool = True
    jobs: int = 1

    def __post_init__(self):
        self.epsilons = tuple(sorted((float(e) for e in self.epsilons), reverse=True))


@dataclass
class FitResult:
    slope: float
    intercept: float
    slope_stderr: float
    intercept_stderr: float
    r_squared: float
    n: int

    def to_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept,
                "slope_stderr": self.slope_stderr,
                "intercept_stderr": self.intercept_stderr,
                "r_squared": self.r_squared, "n": self.n}


@dataclass
class CampaignResult:
    kind: str
    columns: tuple
    rows: list
    summary: dict
    fit: FitResult | None = None
    flags: list = field(default_factory=list)
    plot_data: list = field(default_factory=list)  # (x, y, err) triples


def fit_loglinear(xs, ys) -> FitResult:
    """Ordinary least squares with standard errors; the workhorse behind
    every scaling-law estimate."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size != ys.size:
        raise ValueError("x and y lengths differ")
    if np.unique(xs).size < 3:
        raise NoFitPossible(f"need >= 3 distinct x values (got {np.unique(xs).size})")
    n = xs.size
    x_mean = xs.mean()
    y_mean = ys.mean()
    sxx = float(np.sum((xs - x_mean) ** 2))
    slope = float(np.sum((xs - x_mean) * (ys - y_mean)) / sxx)
    intercept = y_mean - slope * x_mean
    resid = ys - (slope * xs + intercept)
    ssr = float(np.sum(resid ** 2))
    sst = float(np.sum((ys - y_mean) ** 2))
    s2 = ssr / (n - 2) if n > 2 else math.nan
    slope_se = math.sqrt(s2 / sxx)
    intercept_se = math.sqrt(s2 * (1.0 / n + x_mean ** 2 / sxx))
    r2 = 1.0 if ssr <= 1e-300 else (1.0 - ssr / sst if sst > 0 else 0.0)
    return FitResult(slope, intercept, slope_se, intercept_se, r2, int(n))


def _sorted_values(values) -> np.ndarray:
    return np.sort(np.asarray(values, dtype=float))


def _censor_rule(records_by_eps, flags, what) -> bool:
    """The 90% rule; returns True when a fit may be reported."""
    for eps, recs in records_by_eps.items():
        frac = np.mean([r.censored for r in recs])
        if frac > 0.10:
            flags.append(f"too_censored: {what} at eps={eps:g} "
                         f"({frac:.0%} censored)")
            return False
    return True


def _wilson(k: int, n: int, z: float = 1.96) -> tuple[float, float]:
    if n == 0:
        return (0.0, 1.0)
    phat = k / n
    denom = 1.0 + z * z / n
    center = (phat + z * z / (2 * n)) / denom
    half = z * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


def _run_cells(fn, cells, jobs):
    """Deterministic map over independent cells; scheduling never changes
    the result because each cell is keyed and self-seeded."""
    if jobs <= 1:
        return [fn(cell) for cell in cells]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, cells, chunksize=1))


# -- escape / Arrhenius -------------------------------------------------

def _escape_cell(args):
    c, eps, stream = args
    path = NoisePath(c.master_seed, stream, c.dt)
    ens = Ensemble(points=sphere_sample(c.n_start, c.start_radius), eps=eps)
    annulus = Annulus(c.r_inner, c.r_outer)
    v = quasi_potential(c.potential, c.r_inner, 1.0, c.r_outer)
    horizon = c.horizon_factor * math.exp(v / eps)
    rec = exit_time(c.potential, ens, path, annulus, horizon, guard=c.guard)
    return rec


def escape_scaling(c: Campaign) -> CampaignResult:
    """Mean exit time per noise level, fitted as log(mean) against 1/eps;
    the slope estimates the escape barrier."""
    v_ref = quasi_potential(c.potential, c.r_inner, 1.0, c.r_outer)
    cells = [(c, eps, ei * c.replicas + r)
             for ei, eps in enumerate(c.epsilons) for r in range(c.replicas)]
    records = _run_cells(_escape_cell, cells, c.jobs)
    by_eps = {}
    for (_c, eps, _s), rec in zip(cells, records):
        by_eps.setdefault(eps, []).append(rec)

    flags, per_eps, xs, ys = [], [], [], []
    outer_proxy = math.isinf(c.r_outer) or c.r_outer >= c.guard
    fit_ok = _censor_rule(by_eps, flags, "escape")
    for eps in c.epsilons:
        recs = by_eps[eps]
        times = _sorted_values([r.time for r in recs if not r.censored])
        outer_frac = float(np.mean([r.exit_side == "outer" for r in recs
                                    if not r.censored])) if times.size else 0.0
        entry = {"eps": eps, "n": len(recs),
                 "n_censored": int(sum(r.censored for r in recs)),
                 "mean_time": float(times.mean()) if times.size else math.nan,
                 "median_time": float(np.median(times)) if times.size else math.nan,
                 "outer_exit_fraction": outer_frac}
        per_eps.append(entry)
        if times.size:
            xs.append(1.0 / eps)
            ys.append(math.log(entry["mean_time"]))
        if outer_proxy and outer_frac >= 0.01:
            flags.append(f"outer_boundary_escapes: {outer_frac:.1%} at eps={eps:g} "
                         "through the guard-radius stand-in for an unbounded annulus")

    fit = None
    if fit_ok:
        try:
            fit = fit_loglinear(xs, ys)
        except NoFitPossible as err:
            flags.append(f"no_fit_possible: {err}")
    summary = {"campaign": "escape_scaling", "per_eps": per_eps,
               "v_hat": fit.slope if fit else None, "v_reference": v_ref,
               "fit": fit.to_dict() if fit else None, "flags": flags}
    rows = [r.csv_row() for r in records]
    plot = [(x, y, 0.0) for x, y in zip(xs, ys)]
    return CampaignResult("escape_scaling", CSV_COLUMNS, rows, summary, fit,
                          flags, plot)


# -- fixed-window exit probability ---------------------------------------

def _exit_prob_cell(args):
    c, eps, stream = args
    path = NoisePath(c.master_seed, stream, c.dt)
    ens = Ensemble(points=sphere_sample(c.n_start, c.start_radius), eps=eps)
    r_out = c.r_outer if not math.isinf(c.r_outer) else c.guard
    rec = exit_time(c.potential, ens, path, Annulus(c.r_inner, r_out),
                    horizon=c.T, guard=c.guard)
    return rec


def exit_probability(c: Campaign, slack: float = 0.4) -> CampaignResult:
    """Empirical P(exit by T) per noise level with Wilson intervals, and
    the barrier bound eps*log(P) <= -barrier + slack checked per cell."""
    v_ref = quasi_potential(c.potential, c.r_inner, 1.0, c.r_outer)
    cells = [(c, eps, ei * c.replicas + r)
             for ei, eps in enumerate(c.epsilons) for r in range(c.replicas)]
    records = _run_cells(_exit_prob_cell, cells, c.jobs)
    by_eps = {}
    for (_c, eps, _s), rec in zip(cells, records):
        by_eps.setdefault(eps, []).append(rec)

    flags, per_eps, plot = [], [], []
    for eps in c.epsilons:
        recs = by_eps[eps]
        k = int(sum(not r.censored for r in recs))
        n = len(recs)
        lo, hi = _wilson(k, n)
        entry = {"eps": eps, "n": n, "n_exited": k, "p_hat": k / n,
                 "wilson_lo": lo, "wilson_hi": hi, "bound_only": k == 0}
        if k > 0:
            entry["eps_log_p"] = eps * math.log(k / n)
            entry["bound_ok"] = entry["eps_log_p"] <= -v_ref + slack
            if not entry["bound_ok"]:
                flags.append(f"exit_probability_bound_violated at eps={eps:g}")
        per_eps.append(entry)
        plot.append((eps, k / n, hi - lo))
    summary = {"campaign": "exit_probability", "T": c.T, "slack": slack,
               "v_reference": v_ref, "per_eps": per_eps, "flags": flags}
    rows = [r.csv_row() for r in records]
    return CampaignResult("exit_probability", CSV_COLUMNS, rows, summary,
                          None, flags, plot)


# -- set synchronization --------------------------------------------------

def _set_sync_cell(args):
    c, eps, stream = args
    path = NoisePath(c.master_seed, stream, c.dt)
    v = quasi_potential(c.potential, 0.0, 1.0, math.inf)
    horizon = c.horizon_factor * math.exp(v / eps)
    return sphere_sync_time(c.potential, eps, c.n_sphere, c.delta, path,
                            horizon, guard=c.guard)


def _sandwich_cell(args):
    c, eps, stream = args
    path = NoisePath(c.master_seed, stream, c.dt)
    v = quasi_potential(c.potential, 0.0, 1.0, math.inf)
    horizon = c.horizon_factor * math.exp(v / eps)
    res = sync_sandwich(c.potential, eps, c.delta, path, horizon,
                        n_sphere=c.n_sphere,
                        grid=square_grid(c.grid_extent, c.grid_n),
                        proxy_grid=square_grid(c.proxy_grid_extent, c.proxy_grid_n),
                        pullback_time=c.pullback_factor / eps,
                        guard=c.guard)
    return res


def set_sync_scaling(c: Campaign) -> CampaignResult:
    """Median sphere synchronization time per noise level fitted against
    1/eps, plus the pathwise three-way ordering co-measured on dedicated
    replicas (sphere at 2*delta, attractor proxy, whole grid)."""
    cells = [(c, eps, ei * c.replicas + r)
             for ei, eps in enumerate(c.epsilons) for r in range(c.replicas)]
    records = _run_cells(_set_sync_cell, cells, c.jobs)
    by_eps = {}
    for (_c, eps, _s), rec in zip(cells, records):
        by_eps.setdefault(eps, []).append(rec)

    sandwich_cells = [(c, eps, 500_000 + ei * c.sandwich_replicas + r)
                      for ei, eps in enumerate(c.epsilons)
                      for r in range(c.sandwich_replicas)]
    sandwiches = _run_cells(_sandwich_cell, sandwich_cells, c.jobs)

    flags, per_eps, xs, ys = [], [], [], []
    fit_ok = _censor_rule(by_eps, flags, "sphere sync")
    for eps in c.epsilons:
        recs = by_eps[eps]
        times = _sorted_values([r.time for r in recs if not r.censored])
        entry = {"eps": eps, "n": len(recs),
                 "n_censored": int(sum(r.censored for r in recs)),
                 "median_time": float(np.median(times)) if times.size else math.nan,
                 "n_sphere": c.n_sphere, "delta": c.delta}
        per_eps.append(entry)
        if times.size:
            xs.append(1.0 / eps)
            ys.append(math.log(entry["median_time"]))

    n_ordered = sum(s.ordered() for s in sandwiches)
    ordering = {"n_co_measured": len(sandwiches), "n_ordered": int(n_ordered),
                "all_ordered": n_ordered == len(sandwiches)}
    if not ordering["all_ordered"]:
        flags.append("sandwich_ordering_violated")

    fit = None
    if fit_ok:
        try:
            fit = fit_loglinear(xs, ys)
        except NoFitPossible as err:
            flags.append(f"no_fit_possible: {err}")
    v_ref = quasi_potential(c.potential, 0.0, 1.0, math.inf)
    summary = {"campaign": "set_sync_scaling", "per_eps": per_eps,
               "exponent_hat": fit.slope if fit else None,
               "v_reference": v_ref,
               "sample_resolution_note": (
                   "sampled sphere/grid synchronization under-estimates the "
                   "continuum times by sample resolution"),
               "ordering": ordering,
               "fit": fit.to_dict() if fit else None, "flags": flags}
    rows = [r.csv_row() for r in records]
    for s in sandwiches:
        rows.extend([s.sphere_2delta.csv_row(), s.attractor_delta.csv_row(),
                     s.grid_delta.csv_row()])
    plot = [(x, y, 0.0) for x, y in zip(xs, ys)]
    return CampaignResult("set_sync_scaling", CSV_COLUMNS, rows, summary,
                          fit, flags, plot)


# -- point synchronization -------------------------------------------------

def _point_sync_cell(args):
    c, eps, stream = args
    path = NoisePath(c.master_seed, stream, c.dt)
    return point_to_attractor_times(
        c.potential, eps, np.asarray(c.x0, dtype=float), c.delta, path,
        horizon=c.point_horizon_factor / eps,
        proxy_grid=square_grid(c.proxy_grid_extent, c.proxy_grid_n),
        pullback_time=c.pullback_factor / eps, guard=c.guard)


def point_sync_scaling(c: Campaign) -> CampaignResult:
    """Median point-to-attractor times for a fixed start, fitted in the
    log-log frame against 1/eps; a slope near one is the linear law."""
    cells = [(c, eps, ei * c.replicas + r)
             for ei, eps in enumerate(c.epsilons) for r in range(c.replicas)]
    pairs = _run_cells(_point_sync_cell, cells, c.jobs)
    lower_by_eps, upper_by_eps = {}, {}
    for (_c, eps, _s), (lo, hi) in zip(cells, pairs):
        lower_by_eps.setdefault(eps, []).append(lo)
        upper_by_eps.setdefault(eps, []).append(hi)

    flags, per_eps, xs, ys = [], [], [], []
    fit_ok = _censor_rule(lower_by_eps, flags, "point sync (nearest)")
    fit_ok = _censor_rule(upper_by_eps, flags, "point sync (farthest)") and fit_ok
    for eps in c.epsilons:
        lows = _sorted_values([r.time for r in lower_by_eps[eps] if not r.censored])
        highs = _sorted_values([r.time for r in upper_by_eps[eps] if not r.censored])
        entry = {"eps": eps, "n": len(lower_by_eps[eps]),
                 "n_censored": int(sum(r.censored for r in lower_by_eps[eps])),
                 "median_lower": float(np.median(lows)) if lows.size else math.nan,
                 "median_upper": float(np.median(highs)) if highs.size else math.nan}
        entry["eps_times_median_lower"] = eps * entry["median_lower"]
        entry["eps_times_median_upper"] = eps * entry["median_upper"]
        per_eps.append(entry)
        if lows.size:
            xs.append(math.log(1.0 / eps))
            ys.append(math.log(entry["median_lower"]))

    fit = None
    if fit_ok:
        try:
            fit = fit_loglinear(xs, ys)
        except NoFitPossible as err:
            flags.append(f"no_fit_possible: {err}")
    scaled = [e["eps_times_median_lower"] for e in per_eps
              if not math.isnan(e["eps_times_median_lower"])]
    window = {"min": min(scaled) if scaled else math.nan,
              "max": max(scaled) if scaled else math.nan,
              "stable_within_factor_two":
                  bool(scaled and max(scaled) <= 2.0 * min(scaled))}
    ordering_ok = all(
        (lo.time if not lo.censored else math.inf)
        <= (hi.time if not hi.censored else math.inf)
        for eps in c.epsilons
        for lo, hi in zip(lower_by_eps[eps], upper_by_eps[eps]))
    if not ordering_ok:
        flags.append("nearest_exceeds_farthest")
    summary = {"campaign": "point_sync_scaling", "per_eps": per_eps,
               "slope_hat": fit.slope if fit else None,
               "window_scaled_lower": window,
               "lower_never_exceeds_upper": ordering_ok,
               "fit": fit.to_dict() if fit else None, "flags": flags}
    rows = []
    for eps in c.epsilons:
        for lo, hi in zip(lower_by_eps[eps], upper_by_eps[eps]):
            rows.append(lo.csv_row())
            rows.append(hi.csv_row())
    plot = [(x, y, 0.0) for x, y in zip(xs, ys)]
    return CampaignResult("point_sync_scaling", CSV_COLUMNS, rows, summary,
                          fit, flags, plot)


# -- circle-process campaigns ----------------------------------------------

LYAPUNOV_COLUMNS = ("kind", "T", "dt", "replicate", "seed", "stream_id",
                    "lambda_hat")


def lyapunov_circle(T: float = 1e4, dt: float = 1e-3, replicas: int = 16,
                    master_seed: int = 0, noise_amplitude: float = 1.0,
                    jobs: int = 1) -> CampaignResult:
    """Top Lyapunov exponent of the circle process from its linearization
    along replicated paths, with a normal confidence interval."""
    if T < dt:
        raise ValueError("T must exceed dt")
    n_steps = int(round(T / dt))
    rows, lams = [], []
    for r in range(replicas):
        path = NoisePath(master_seed, r, dt)
        state = np.array([0.0])
        total = 0.0
        done = 0
        while done < n_steps:
            n = min(1 << 16, n_steps - done)
            total += _kernels.circle_lyapunov(state, path.take(n), noise_amplitude)
            done += n
        lam = total / T
        lams.append(lam)
        rows.append(["lyapunov", T, dt, r, master_seed, r, lam])
    lams_sorted = _sorted_values(lams)
    mean = float(lams_sorted.mean())
    std = float(lams_sorted.std(ddof=1)) if replicas > 1 else 0.0
    half = 1.96 * std / math.sqrt(replicas) if replicas > 1 else 0.0
    summary = {"campaign": "lyapunov_circle", "T": T, "dt": dt,
               "replicas": replicas, "noise_amplitude": noise_amplitude,
               "lambda_hat": mean, "ci_lo": mean - half, "ci_hi": mean + half,
               "ci_width": 2 * half, "reference": -0.5 * noise_amplitude ** 2,
               "flags": []}
    plot = [(T, mean, half)]
    return CampaignResult("lyapunov_circle", LYAPUNOV_COLUMNS, rows, summary,
                          None, [], plot)


CIRCLE_SYNC_COLUMNS = ("kind", "T", "separation", "replicate", "seed",
                       "stream_id", "mu_hat", "collapsed_to_zero")


def circle_sync_rate(c: Campaign) -> CampaignResult:
    """Per-replica exponential decay rate of the circle distance between
    two shared-noise copies, fitted over the second half of the window."""
    dt = c.dt
    n_steps = int(round(c.T / dt))
    every = max(1, int(round(c.sample_interval / dt)))
    n_samples = n_steps // every
    t_grid = dt * every * np.arange(1, n_samples + 1)
    half = t_grid >= c.T / 2.0
    rows, mus = [], []
    for r in range(c.replicas):
        path = NoisePath(c.master_seed, r, dt)
        state = np.array([0.0, c.separation])
        logd = np.empty(n_samples)
        filled = 0
        done = 0
        while done < n_steps:
            n = min(1 << 16, n_steps - done)
            n = (n // every) * every if n >= every else n
            out = np.empty(n // every) if n >= every else np.empty(0)
            m = _kernels.circle_pair_decay(state, path.take(n), every, out)
            logd[filled:filled + m] = out[:m]
            filled += m
            done += n
        ys = logd[:filled][half[:filled]]
        ts = t_grid[:filled][half[:filled]]
        slope = float(np.polyfit(ts, ys, 1)[0])
        mu = -slope
        floored = bool(np.any(ys <= math.log(1e-290)))
        mus.append(mu)
        rows.append(["circle_sync", c.T, c.separation, r, c.master_seed, r,
                     mu, int(floored)])
    mus_sorted = _sorted_values(mus)
    summary = {"campaign": "circle_sync_rate", "T": c.T,
               "separation": c.separation, "replicas": c.replicas,
               "median_mu": float(np.median(mus_sorted)),
               "fraction_mu_ge_0.4": float(np.mean(mus_sorted >= 0.4)),
               "reference_rate": 0.5, "flags": []}
    plot = [(c.T, summary["median_mu"], 0.0)]
    return CampaignResult("circle_sync_rate", CIRCLE_SYNC_COLUMNS, rows,
                          summary, None, [], plot)


GRONWALL_COLUMNS = ("kind", "eps", "T", "replicate", "seed", "stream_id",
                    "max_angle_dev", "max_radius_dev", "collapsed")


def gronwall_comparison(c: Campaign) -> CampaignResult:
    """Shared-noise deviation between the accelerated polar pair and the
    circle process over a fixed window, per noise level."""
    dt = c.dt_accelerated
    n_steps = int(round(c.T / dt))
    dcoef = np.asarray(c.potential.dcoeffs)
    rows = []
    per_eps, flags = [], []
    medians = []
    for ei, eps in enumerate(c.epsilons):
        devs, rdevs, n_collapsed = [], [], 0
        for r in range(c.replicas):
            path = NoisePath(c.master_seed, ei * c.replicas + r, dt)
            state = np.array([1.0, 0.0, 0.0])  # r_sq, angle, circle angle
            track = np.zeros(2)
            status = _kernels.polar_circle_pair(
                state, dcoef, dt, eps, path.take(n_steps), 1e-8,
                c.radial_noise, track)
            collapsed = status != _kernels.NO_HIT
            if collapsed:
                n_collapsed += 1
            else:
                devs.append(track[0])
                rdevs.append(track[1])
            rows.append(["gronwall", eps, c.T, r, c.master_seed,
                         ei * c.replicas + r, track[0], track[1],
                         int(collapsed)])
        devs = _sorted_values(devs)
        rdevs = _sorted_values(rdevs)
        entry = {"eps": eps, "n": c.replicas, "n_collapsed": n_collapsed,
                 "median_max_angle_dev": float(np.median(devs)) if devs.size else math.nan,
                 "median_max_radius_dev": float(np.median(rdevs)) if rdevs.size else math.nan}
        medians.append(entry["median_max_angle_dev"])
        per_eps.append(entry)
    strictly_decreasing = all(a > b for a, b in zip(medians, medians[1:]))
    if not strictly_decreasing:
        flags.append("gronwall_trend_violated")
    summary = {"campaign": "gronwall_comparison", "T": c.T,
               "radial_noise": c.radial_noise, "per_eps": per_eps,
               "median_angle_dev_strictly_decreasing": strictly_decreasing,
               "flags": flags}
    plot = [(e["eps"], e["median_max_angle_dev"], 0.0) for e in per_eps]
    return CampaignResult("gronwall_comparison", GRONWALL_COLUMNS, rows,
                          summary, None, flags, plot)


def radius_window_fraction(c: Campaign, eps: float, r_lo: float = 0.9,
                           r_hi: float = 1.1) -> float:
    """Fraction of replicas whose accelerated radius ends inside
    (r_lo, r_hi) at time T; approaches one as the noise vanishes."""
    dt = c.dt_accelerated
    n_steps = int(round(c.T / dt))
    dcoef = np.asarray(c.potential.dcoeffs)
    inside = 0
    for r in range(c.replicas):
        path = NoisePath(c.master_seed, 900_000 + r, dt)
        state = np.array([1.0, 0.0, 0.0])
        track = np.zeros(2)
        status = _kernels.polar_circle_pair(state, dcoef, dt, eps,
                                            path.take(n_steps), 1e-8, True, track)
        if status == _kernels.NO_HIT and r_lo < math.sqrt(state[0]) < r_hi:
            inside += 1
    return inside / c.replicas


_RUNNERS = {
    "escape": escape_scaling,
    "exit_probability": exit_probability,
    "set_sync": set_sync_scaling,
    "point_sync": point_sync_scaling,
    "circle_sync": circle_sync_rate,
    "gronwall": gronwall_comparison,
}

FITTED_KINDS = ("escape", "exit_probability", "set_sync", "point_sync",
                "circle_sync")


def run_campaign(c: Campaign) -> CampaignResult:
    if c.kind == "lyapunov":
        return lyapunov_circle(T=c.T, dt=c.dt, replicas=c.replicas,
                               master_seed=c.master_seed,
                               noise_amplitude=c.noise_amplitude, jobs=c.jobs)
    if c.kind not in _RUNNERS:
        raise ValueError(f"unknown campaign kind {c.kind!r}")
    return _RUNNERS[c.kind](c)
