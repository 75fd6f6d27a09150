"""Radial polynomial potentials and their derived quantities.

Every simulation in this package is driven by the gradient of an energy
surface of the form  energy(x) = profile(|x|^2)  where ``profile`` is a
convex polynomial in s = |x|^2 with a unique interior minimum at s = 1.
Restricting the profile to polynomials keeps first and second derivatives
exact (no numerical differentiation in the stepping loops) while covering
the canonical quartic double-well-in-radius example.

The module also evaluates the escape barrier ``quasi_potential`` that
governs the exponential exit-time law, decides strong contraction (does
the noiseless flow absorb all of space into a bounded ball in finite
time), and validates a configured potential against the standing
assumptions by dense sampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate


class NotContractingError(Exception):
    """The noiseless flow does not absorb all of space in finite time."""


class PreconditionError(ValueError):
    """An operation was called with arguments violating its contract."""


@dataclass(frozen=True)
class RadialPotential:
    """Polynomial radial profile; immutable, safe to share across workers.

    ``coeffs[k]`` is the coefficient of s^k in profile(s), s = |x|^2.
    """

    coeffs: tuple[float, ...]
    family: str = "custom"
    r_star: float = 1.0

    # -- constructors -------------------------------------------------

    @staticmethod
    def quartic(a: float = 0.5) -> "RadialPotential":
        """profile(s) = a*(s-1)^2: the default well on the unit sphere."""
        if a <= 0:
            raise PreconditionError(f"quartic family requires a > 0 (got {a})")
        return RadialPotential(coeffs=(a, -2.0 * a, a), family="quartic")

    @staticmethod
    def shifted_quadratic(a: float = 0.5) -> "RadialPotential":
        """profile(s) = a*s.

        Linear drift decay; not strongly contracting and without an
        interior minimum.  Used only as a negative fixture.
        """
        if a <= 0:
            raise PreconditionError(f"shifted_quadratic family requires a > 0 (got {a})")
        return RadialPotential(coeffs=(0.0, a), family="shifted_quadratic")

    @staticmethod
    def custom(coeffs) -> "RadialPotential":
        c = tuple(float(v) for v in coeffs)
        if not c:
            raise PreconditionError("custom family requires at least one coefficient")
        return RadialPotential(coeffs=c, family="custom")

    # -- profile evaluation (Horner, vectorized) ----------------------

    def profile(self, s):
        return _horner(self.coeffs, s)

    def dprofile(self, s):
        return _horner(_derive(self.coeffs), s)

    def d2profile(self, s):
        return _horner(_derive(_derive(self.coeffs)), s)

    @property
    def dcoeffs(self) -> tuple[float, ...]:
        """Coefficients of the profile derivative, for the stepping kernels."""
        return _derive(self.coeffs)

    # -- the potential on R^d -----------------------------------------

    def energy(self, x):
        x = np.asarray(x, dtype=float)
        return self.profile(np.sum(x * x, axis=-1))

    def gradient(self, x):
        """2 * profile'(|x|^2) * x, exact for polynomial profiles."""
        x = np.asarray(x, dtype=float)
        s = np.sum(x * x, axis=-1)
        scale = np.asarray(2.0 * self.dprofile(s))
        return scale[..., None] * x


def _horner(coeffs, s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    for c in reversed(coeffs):
        out = out * s + c
    return out if out.ndim else float(out)


def _derive(coeffs) -> tuple[float, ...]:
    if len(coeffs) <= 1:
        return (0.0,)
    return tuple(k * c for k, c in enumerate(coeffs))[1:]


def eval_u(p: RadialPotential, s: float) -> float:
    """Value of the radial profile at s = |x|^2 >= 0."""
    if np.any(np.asarray(s) < 0):
        raise PreconditionError(f"profile argument must be >= 0 (got {s})")
    return p.profile(s)


def quasi_potential(p: RadialPotential, r1: float, r2: float, r3: float) -> float:
    """Cost of forcing the flow started on the sphere of radius r2 out of
    the annulus (r1, r3): twice the smaller of the two barrier heights.

    r3 = math.inf selects the inner barrier exactly (the outer barrier is
    treated as infinitely high), not via a large-float surrogate.
    """
    if not 0 <= r1:
        raise PreconditionError(f"requires r1 >= 0 (got r1={r1})")
    if not r1 < r2:
        raise PreconditionError(f"requires r1 < r2 (got r1={r1}, r2={r2})")
    if not r2 < r3:
        raise PreconditionError(f"requires r2 < r3 (got r2={r2}, r3={r3})")
    if not r1 < 1:
        raise PreconditionError(f"requires r1 < 1 (got r1={r1})")
    if not 1 < r3:
        raise PreconditionError(f"requires r3 > 1 (got r3={r3})")
    inner = p.profile(r1 * r1) - p.profile(min(r2 * r2, 1.0))
    if math.isinf(r3):
        return 2.0 * inner
    outer = p.profile(r3 * r3) - p.profile(max(r2 * r2, 1.0))
    return 2.0 * min(inner, outer)


@dataclass(frozen=True)
class ContractionInfo:
    """Absorbing ball of the noiseless flow and the time to enter it from
    arbitrarily far out (finite exactly when the tail integral of the
    inverse gradient converges)."""

    radius: float
    time: float


def is_strongly_contracting(p: RadialPotential) -> bool:
    """Tail-growth test: the inverse-gradient tail integral converges iff
    the profile has degree >= 2 in s with positive leading coefficient."""
    coeffs = np.asarray(p.coeffs)
    nz = np.nonzero(coeffs)[0]
    if nz.size == 0:
        return False
    degree = int(nz[-1])
    return degree >= 2 and coeffs[degree] > 0


def contraction_time(p: RadialPotential, r_target: float) -> float:
    """Time for the noiseless flow to bring any starting point (including
    the limit of arbitrarily large radius) inside the ball of radius
    r_target, computed by quadrature of the radial speed."""
    if not is_strongly_contracting(p):
        raise NotContractingError(
            f"{p.family} potential has sub-quadratic drift growth; "
            "the inverse-gradient tail integral diverges"
        )
    if p.dprofile(r_target * r_target) <= 0:
        raise PreconditionError(
            f"r_target={r_target} is not outside the well; radial speed vanishes"
        )

    def inv_speed(r):
        return 1.0 / (2.0 * r * p.dprofile(r * r))

    val, _err = integrate.quad(inv_speed, r_target, np.inf, limit=200)
    return float(val)


def strong_contraction_radius(p: RadialPotential, radius: float = 1.5) -> ContractionInfo:
    """Decide strong contraction and return an absorbing ball.

    Raises NotContractingError for profiles whose drift decays too slowly
    (degree <= 1 in s, e.g. the shifted_quadratic family).
    """
    return ContractionInfo(radius=radius, time=contraction_time(p, radius))


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    witness: float | None = None
    detail: str = ""


@dataclass
class ValidationReport:
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __str__(self) -> str:
        lines = []
        for c in self.checks:
            status = "pass" if c.passed else "FAIL"
            extra = "" if c.passed else f"  witness={c.witness!r} {c.detail}"
            lines.append(f"{status:4s}  {c.name}{extra}")
        return "\n".join(lines)


def validate(p: RadialPotential, s_max: float = 9.0, n_grid: int = 2001,
             seed: int = 0) -> ValidationReport:
    """Sampled check of the standing assumptions; a report, not a proof.

    Convexity and the unique interior minimum are checked on a dense grid
    in s; the one-sided Lipschitz property of the drift and the inward
    orientation outside the unit sphere are checked on random point pairs.
    """
    report = ValidationReport()
    s = np.linspace(0.0, s_max, n_grid)
    d2 = np.atleast_1d(p.d2profile(s))
    d1 = np.atleast_1d(p.dprofile(s))

    bad = np.nonzero(d2 < -1e-12)[0]
    report.checks.append(CheckResult(
        "profile convex on sample grid", bad.size == 0,
        witness=float(s[bad[0]]) if bad.size else None,
        detail="second derivative negative"))

    min_ok = abs(p.dprofile(1.0)) <= 1e-9
    below = s[(s < 1.0 - 1e-9)]
    above = s[(s > 1.0 + 1e-9)]
    sign_ok = bool(np.all(p.dprofile(below) < 0)) and bool(np.all(p.dprofile(above) > 0))
    witness = None
    if not sign_ok:
        wrong_lo = below[np.atleast_1d(p.dprofile(below)) >= 0]
        wrong_hi = above[np.atleast_1d(p.dprofile(above)) <= 0]
        witness = float(wrong_lo[0]) if wrong_lo.size else float(wrong_hi[0])
    report.checks.append(CheckResult(
        "unique interior minimum at s = 1", min_ok and sign_ok,
        witness=witness if not (min_ok and sign_ok) else None,
        detail="derivative sign pattern broken" if not sign_ok else "derivative nonzero at s=1"))

    rng = np.random.default_rng(seed)
    x = rng.normal(size=(1000, 2)) * 1.5
    x = x[np.sum(x * x, axis=1) >= 1.0]
    inward = np.einsum("nd,nd->n", x, -p.gradient(x))
    bad_i = np.nonzero(inward > 1e-12)[0]
    report.checks.append(CheckResult(
        "drift points inward outside the unit sphere", bad_i.size == 0,
        witness=float(np.linalg.norm(x[bad_i[0]])) if bad_i.size else None,
        detail="outward drift"))

    # Sampled sufficient test: with convexity the constant -2*profile'(0)
    # bounds the one-sided Lipschitz quantity from above.
    c_lip = max(0.0, -2.0 * float(p.dprofile(0.0))) + 1e-9
    a = rng.normal(size=(1000, 2)) * 2.0
    b = rng.normal(size=(1000, 2)) * 2.0
    lhs = np.einsum("nd,nd->n", a - b, -p.gradient(a) + p.gradient(b))
    rhs = c_lip * np.sum((a - b) ** 2, axis=1)
    bad_l = np.nonzero(lhs > rhs + 1e-9)[0]
    report.checks.append(CheckResult(
        "one-sided Lipschitz drift (sampled)", bad_l.size == 0,
        witness=float(lhs[bad_l[0]] - rhs[bad_l[0]]) if bad_l.size else None,
        detail=f"exceeds constant {c_lip:.3g}"))

    report.checks.append(CheckResult(
        "strongly contracting", is_strongly_contracting(p),
        detail="inverse-gradient tail integral diverges"))
    return report
