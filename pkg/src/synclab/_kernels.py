"""Compiled stepping loops.

Every long-running simulation loop lives here as a numba kernel working
on one replica's state for one chunk of pre-generated noise increments.
Drivers in `flow`, `stopping` and `experiments` generate the noise chunks
(counter-based, per replica) and handle censoring, compaction and record
keeping.  Keeping the kernels per-replica makes campaign runs bitwise
identical to single-replica runs of the same stream.

Status codes returned by the stopping kernels:
  >= 0  in-chunk step index at which the condition first held
  -1    chunk exhausted without the condition holding
  -2    divergence guard tripped
"""

import numpy as np
from numba import njit

DIVERGED = -2
NO_HIT = -1


@njit(cache=True, inline="always")
def _dprofile(dcoef, s):
    out = 0.0
    for i in range(dcoef.shape[0] - 1, -1, -1):
        out = out * s + dcoef[i]
    return out


@njit(cache=True, inline="always")
def _step_points(pts, dcoef, dt, sqeps, w, k):
    """One shared-noise Euler-Maruyama step for all points of a replica."""
    n, d = pts.shape
    for i in range(n):
        s = 0.0
        for j in range(d):
            s += pts[i, j] * pts[i, j]
        c = 2.0 * _dprofile(dcoef, s)
        for j in range(d):
            pts[i, j] = pts[i, j] + (-(c * pts[i, j])) * dt + sqeps * w[k, j]


@njit(cache=True, inline="always")
def _max_sq_radius(pts):
    m = 0.0
    for i in range(pts.shape[0]):
        s = 0.0
        for j in range(pts.shape[1]):
            s += pts[i, j] * pts[i, j]
        if s > m:
            m = s
    return m


@njit(cache=True)
def advance_ensemble(pts, dcoef, dt, sqeps, w, guard):
    """Plain advance over the whole chunk; only the guard can stop it."""
    g2 = guard * guard
    for k in range(w.shape[0]):
        _step_points(pts, dcoef, dt, sqeps, w, k)
        if _max_sq_radius(pts) > g2:
            return k
    return NO_HIT


@njit(cache=True)
def exit_annulus(pts, dcoef, dt, sqeps, w, guard, r_in, r_out, side_out):
    """First step at which ANY point leaves {r_in < |x| < r_out}.

    side_out[0] is set to 1 for an inner crossing, 2 for an outer one.
    """
    g2 = guard * guard
    lo2 = r_in * r_in
    hi2 = r_out * r_out
    for k in range(w.shape[0]):
        _step_points(pts, dcoef, dt, sqeps, w, k)
        for i in range(pts.shape[0]):
            s = 0.0
            for j in range(pts.shape[1]):
                s += pts[i, j] * pts[i, j]
            if s <= lo2:
                side_out[0] = 1
                return k
            if s >= hi2:
                side_out[0] = 2
                return k
            if s > g2:
                return DIVERGED
    return NO_HIT


@njit(cache=True)
def enter_annulus(pts, dcoef, dt, sqeps, w, guard, r_in, r_out):
    """First step at which ALL points are inside {r_in < |x| < r_out}."""
    g2 = guard * guard
    lo2 = r_in * r_in
    hi2 = r_out * r_out
    for k in range(w.shape[0]):
        _step_points(pts, dcoef, dt, sqeps, w, k)
        all_in = True
        for i in range(pts.shape[0]):
            s = 0.0
            for j in range(pts.shape[1]):
                s += pts[i, j] * pts[i, j]
            if s > g2:
                return DIVERGED
            if not (lo2 < s < hi2):
                all_in = False
        if all_in:
            return k
    return NO_HIT


@njit(cache=True, inline="always")
def _centroid_gap_sq(pts, i0, i1):
    """Max squared distance to the centroid over pts[i0:i1]; a lower
    bound on the squared diameter, used to gate the exact pairwise test."""
    n = i1 - i0
    d = pts.shape[1]
    c = np.zeros(d)
    for i in range(i0, i1):
        for j in range(d):
            c[j] += pts[i, j]
    for j in range(d):
        c[j] /= n
    m = 0.0
    for i in range(i0, i1):
        s = 0.0
        for j in range(d):
            diff = pts[i, j] - c[j]
            s += diff * diff
        if s > m:
            m = s
    return m


@njit(cache=True, inline="always")
def _diam_le(pts, i0, i1, delta):
    if _centroid_gap_sq(pts, i0, i1) > delta * delta:
        return False
    d2 = delta * delta
    for a in range(i0, i1):
        for b in range(a + 1, i1):
            s = 0.0
            for j in range(pts.shape[1]):
                diff = pts[a, j] - pts[b, j]
                s += diff * diff
            if s > d2:
                return False
    return True


@njit(cache=True)
def sync_diameter(pts, dcoef, dt, sqeps, w, guard, delta):
    """First step at which the sampled diameter is <= delta."""
    g2 = guard * guard
    for k in range(w.shape[0]):
        _step_points(pts, dcoef, dt, sqeps, w, k)
        if _max_sq_radius(pts) > g2:
            return DIVERGED
        if _diam_le(pts, 0, pts.shape[0], delta):
            return k
    return NO_HIT


@njit(cache=True)
def sync_sandwich(pts, n_sphere, n_grid, dcoef, dt, sqeps, w, guard,
                  delta, base_step, hits):
    """Co-measure the three synchronization times on one noise path.

    Point layout: [0:n_sphere] sphere sample, [n_sphere:n_sphere+n_grid]
    ball grid, remainder the pullback proxy cloud.  hits[0] is the first
    global step with sphere diameter <= 2*delta, hits[1] the first with
    every sphere point within delta of EVERY proxy point, hits[2] the
    first with the full ensemble diameter <= delta (-1 while unmet).
    """
    g2 = guard * guard
    n_tot = pts.shape[0]
    p0 = n_sphere + n_grid
    d2 = delta * delta
    for k in range(w.shape[0]):
        _step_points(pts, dcoef, dt, sqeps, w, k)
        if _max_sq_radius(pts) > g2:
            return DIVERGED
        if hits[0] < 0 and _diam_le(pts, 0, n_sphere, 2.0 * delta):
            hits[0] = base_step + k
        if hits[1] < 0:
            ok = True
            for a in range(n_sphere):
                for b in range(p0, n_tot):
                    s = 0.0
                    for j in range(pts.shape[1]):
                        diff = pts[a, j] - pts[b, j]
                        s += diff * diff
                    if s > d2:
                        ok = False
                        break
                if not ok:
                    break
            if ok:
                hits[1] = base_step + k
        if hits[2] < 0 and _diam_le(pts, 0, n_tot, delta):
            hits[2] = base_step + k
        if hits[0] >= 0 and hits[1] >= 0 and hits[2] >= 0:
            return k
    return NO_HIT


@njit(cache=True)
def point_to_proxy(pts, dcoef, dt, sqeps, w, guard, delta, base_step, hits):
    """pts[0] is the tracked point, pts[1:] the attractor proxy cloud,
    all advanced under the same noise.  hits[0]: first global step with
    the NEAREST proxy point within delta; hits[1]: same for the FARTHEST.
    """
    g2 = guard * guard
    d2 = delta * delta
    for k in range(w.shape[0]):
        _step_points(pts, dcoef, dt, sqeps, w, k)
        if _max_sq_radius(pts) > g2:
            return DIVERGED
        dmin = 1e300
        dmax = 0.0
        for i in range(1, pts.shape[0]):
            s = 0.0
            for j in range(pts.shape[1]):
                diff = pts[0, j] - pts[i, j]
                s += diff * diff
            if s < dmin:
                dmin = s
            if s > dmax:
                dmax = s
        if hits[0] < 0 and dmin <= d2:
            hits[0] = base_step + k
        if hits[1] < 0 and dmax <= d2:
            hits[1] = base_step + k
        if hits[0] >= 0 and hits[1] >= 0:
            return k
    return NO_HIT


@njit(cache=True)
def polar_circle_pair(state, dcoef, dt, eps, w, floor, radial_noise, track):
    """Coupled accelerated-clock step loop for the squared-radius/angle
    pair and the circle process under shared noise.

    state = [r_sq, phi, z]; track = [max |phi - z|, max |R - 1|], both
    updated in place.  radial_noise=False drops the radial martingale
    term together with its Ito +2dt correction (they vanish together),
    which freezes a unit starting radius exactly.
    """
    r_sq = state[0]
    phi = state[1]
    z = state[2]
    for k in range(w.shape[0]):
        w1 = w[k, 0]
        w2 = w[k, 1]
        r = np.sqrt(r_sq)
        up = _dprofile(dcoef, r_sq)
        if radial_noise:
            r_new = r_sq + (-(4.0 / eps) * r_sq * up + 2.0) * dt \
                + 2.0 * r * (np.cos(phi) * w1 + np.sin(phi) * w2)
        else:
            r_new = r_sq + (-(4.0 / eps) * r_sq * up) * dt
        phi = phi + (1.0 / r) * (-np.sin(phi) * w1 + np.cos(phi) * w2)
        z = z + (-np.sin(z) * w1 + np.cos(z) * w2)
        if r_new < floor:
            state[0] = r_new
            state[1] = phi
            state[2] = z
            return k
        r_sq = r_new
        dev = abs(phi - z)
        if dev > track[0]:
            track[0] = dev
        dr = abs(np.sqrt(r_sq) - 1.0)
        if dr > track[1]:
            track[1] = dr
    state[0] = r_sq
    state[1] = phi
    state[2] = z
    return NO_HIT


@njit(cache=True)
def cartesian_polar_pair(state, dcoef, dt, eps, w, floor, track):
    """Accelerated-clock Cartesian integration against the polar pair on
    the same noise; track[0] accumulates the max Euclidean deviation of
    the polar reconstruction from the Cartesian path."""
    y1 = state[0]
    y2 = state[1]
    r_sq = state[2]
    phi = state[3]
    for k in range(w.shape[0]):
        w1 = w[k, 0]
        w2 = w[k, 1]
        s = y1 * y1 + y2 * y2
        c = 2.0 * _dprofile(dcoef, s) / eps
        y1 = y1 + (-(c * y1)) * dt + w1
        y2 = y2 + (-(c * y2)) * dt + w2
        r = np.sqrt(r_sq)
        up = _dprofile(dcoef, r_sq)
        r_new = r_sq + (-(4.0 / eps) * r_sq * up + 2.0) * dt \
            + 2.0 * r * (np.cos(phi) * w1 + np.sin(phi) * w2)
        phi = phi + (1.0 / r) * (-np.sin(phi) * w1 + np.cos(phi) * w2)
        if r_new < floor:
            state[0] = y1
            state[1] = y2
            state[2] = r_new
            state[3] = phi
            return k
        r_sq = r_new
        rr = np.sqrt(r_sq)
        dx = rr * np.cos(phi) - y1
        dy = rr * np.sin(phi) - y2
        dev = np.sqrt(dx * dx + dy * dy)
        if dev > track[0]:
            track[0] = dev
    state[0] = y1
    state[1] = y2
    state[2] = r_sq
    state[3] = phi
    return NO_HIT


@njit(cache=True)
def circle_pair_decay(state, w, sample_every, out_logdist):
    """Two circle processes under shared noise; log circle-distance is
    recorded every sample_every steps into out_logdist."""
    z1 = state[0]
    z2 = state[1]
    two_pi = 2.0 * np.pi
    m = 0
    for k in range(w.shape[0]):
        w1 = w[k, 0]
        w2 = w[k, 1]
        z1 = z1 + (-np.sin(z1) * w1 + np.cos(z1) * w2)
        z2 = z2 + (-np.sin(z2) * w1 + np.cos(z2) * w2)
        if (k + 1) % sample_every == 0:
            gap = (z2 - z1) % two_pi
            if gap > np.pi:
                gap = two_pi - gap
            if gap < 1e-300:
                gap = 1e-300
            out_logdist[m] = np.log(gap)
            m += 1
    state[0] = z1
    state[1] = z2
    return m


@njit(cache=True)
def circle_lyapunov(state, w, amp):
    """Advance the circle process and accumulate the log growth of its
    linearization; returns the partial sum of log |1 + dW-term|."""
    z = state[0]
    total = 0.0
    for k in range(w.shape[0]):
        w1 = amp * w[k, 0]
        w2 = amp * w[k, 1]
        factor = 1.0 + (-np.cos(z) * w1 - np.sin(z) * w2)
        total += np.log(np.abs(factor))
        z = z + (-np.sin(z) * w1 + np.cos(z) * w2)
    state[0] = z
    return total
