"""Homogeneous Sobolev and absolute-sum norms, and audits of the interpolation
inequalities that control the convection term.

Every audit returns an :class:`AuditResult` holding both sides of the
inequality, the constant that was used and the intermediate quantities, so
slack is reported rather than assumed.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import integrate, signal

from .exceptions import DegenerateFieldError, InadmissibleIndexError
from .spectral_core import Lattice, SpectralField

AUDIT_TOL = 1e-10
CSV_COLUMNS = ("name", "s", "r", "lhs", "rhs", "constant", "slack", "pass")
HALF_DIAGONAL = math.sqrt(3.0) / 2.0


@dataclass
class AuditResult:
    """One checked inequality lhs <= rhs."""

    name: str
    lhs: float
    rhs: float
    constant_used: float
    detail: dict = field(default_factory=dict)
    s: float | None = None
    r: float | None = None
    tol: float = AUDIT_TOL
    exploratory: bool = False

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def passed(self) -> bool:
        return bool(self.slack >= -self.tol * abs(self.rhs))

    def row(self) -> dict:
        return {
            "name": self.name,
            "s": self.s,
            "r": self.r,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "constant": self.constant_used,
            "slack": self.slack,
            "pass": self.passed,
        }


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, str):
        return x
    return f"{float(x):.17g}"


def write_audit_csv(results, path) -> Path:
    """Write audit rows as ``name,s,r,lhs,rhs,constant,slack,pass``."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for res in results:
            row = res.row()
            w.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
    return path


# --------------------------------------------------------------------------
# norms


def _amplitudes(u: SpectralField):
    lat = u.lattice
    amp = np.sqrt(np.sum(np.abs(u.coeff) ** 2, axis=0))[lat.nonzero]
    return lat.kmag[lat.nonzero], amp


def sobolev_norm(u: SpectralField, s: float) -> float:
    """Homogeneous H^s norm (sum_{k != 0} |k|^{2s} |u_hat_k|^2)^{1/2}."""
    kmag, amp = _amplitudes(u)
    return float(np.sqrt(np.sum(kmag ** (2.0 * s) * amp**2)))


def fr_norm(u: SpectralField, r: float) -> float:
    """Absolute-sum norm sum_{k != 0} |k|^r |u_hat_k|."""
    if not 0.0 <= r <= 1.0:
        raise InadmissibleIndexError(f"F^r norm needs 0 <= r <= 1, got r={r}")
    kmag, amp = _amplitudes(u)
    return float(np.sum(kmag**r * amp))


# --------------------------------------------------------------------------
# quadrature constants


def _check_carlson_range(s):
    if not 0.5 < s < 2.5:
        raise InadmissibleIndexError(
            f"integral of y^(3/2-s)/(1+y^2) diverges unless 1/2 < s < 5/2 (got s={s})"
        )


def carlson_integral_constant(s: float, tol: float = 1e-12) -> float:
    """Quadrature value of int_0^inf y^(3/2-s)/(1+y^2) dy for 1/2 < s < 5/2.

    The range is split at y = 1 and the tail mapped by y -> 1/y, which leaves
    two integrals over (0, 1) with algebraic endpoint weights t^(+-alpha).
    """
    _check_carlson_range(s)
    alpha = 1.5 - s
    f = lambda t: 1.0 / (1.0 + t * t)  # noqa: E731
    head, _ = integrate.quad(f, 0.0, 1.0, weight="alg", wvar=(alpha, 0.0), epsabs=tol, epsrel=tol)
    tail, _ = integrate.quad(f, 0.0, 1.0, weight="alg", wvar=(-alpha, 0.0), epsabs=tol, epsrel=tol)
    return head + tail


def carlson_closed_form(s: float) -> float:
    """(pi/2) sec(pi (3/2 - s)/2)."""
    _check_carlson_range(s)
    return 0.5 * math.pi / math.cos(0.5 * math.pi * (1.5 - s))


def _check_euler_range(s):
    if not s > 2.5:
        raise InadmissibleIndexError(
            f"integral of y^2/(1+y^(2s-2)) diverges unless s > 5/2 (got s={s})"
        )


def euler_integral_constant(s: float, tol: float = 1e-12) -> float:
    """Quadrature value of int_0^inf y^2/(1+y^(2s-2)) dy for s > 5/2."""
    _check_euler_range(s)
    m = 2.0 * s - 2.0
    head, _ = integrate.quad(lambda y: y * y / (1.0 + y**m), 0.0, 1.0, epsabs=tol, epsrel=tol)
    # y -> 1/t turns the tail into int_0^1 t^(m-4)/(1+t^m) dt
    tail, _ = integrate.quad(
        lambda t: 1.0 / (1.0 + t**m), 0.0, 1.0, weight="alg", wvar=(m - 4.0, 0.0), epsabs=tol, epsrel=tol
    )
    return head + tail


def euler_closed_form(s: float) -> float:
    """(pi/m)/sin(3 pi/m) with m = 2s - 2 (beta-function evaluation)."""
    _check_euler_range(s)
    m = 2.0 * s - 2.0
    return (math.pi / m) / math.sin(3.0 * math.pi / m)


# --------------------------------------------------------------------------
# lattice sums of radial, decreasing functions


BALL_RADIUS = 2048


@lru_cache(maxsize=8)
def _cube_counts(N: int):
    """Distinct nonzero |k|^2 in {-N..N}^3 with multiplicities."""
    k = np.arange(-N, N + 1)
    kx, ky, kz = np.meshgrid(k, k, k, indexing="ij", sparse=True)
    ksq, counts = np.unique((kx * kx + ky * ky + kz * kz).ravel(), return_counts=True)
    return ksq[1:], counts[1:]


@lru_cache(maxsize=2)
def _ball_counts(R: int):
    """r3(n) = #{k in Z^3 : |k|^2 = n} for n <= R^2, as a triple convolution of squares."""
    n = R * R
    r1 = np.zeros(n + 1)
    j = np.arange(1, R + 1)
    r1[0] = 1.0
    r1[j * j] = 2.0
    r3 = signal.fftconvolve(signal.fftconvolve(r1, r1)[: n + 1], r1)[: n + 1]
    counts = np.rint(r3)
    if np.max(np.abs(r3 - counts)) > 0.25:
        raise FloatingPointError("lattice point counts lost integrality")
    occupied = np.flatnonzero(counts[1:]) + 1
    return np.sqrt(occupied.astype(float)), counts[occupied], float(np.sum(counts))


def _radial_sum(f, ksq, counts):
    keep = ksq > 0
    return float(np.sum(counts[keep] * f(np.sqrt(ksq[keep].astype(float)))))


def lattice_sum_with_tail(f, N: int, radius: int = BALL_RADIUS):
    """Sum f(|k|) over {-N..N}^3 minus the origin, plus a bound on the rest of Z^3.

    Points outside the cube but inside the ball |k| <= R are summed exactly from
    lattice point counts.  Beyond the ball, with n(r) = #{|k| <= r} and
    n(r) <= V(r + sqrt(3)/2) (V the ball volume), summing by parts gives for
    decreasing f with f(r) r^3 -> 0
        sum_{|k| > R} f(|k|) <= f(R) (V(R + sqrt3/2) - n(R)) + 4 pi int_R^inf f(r) (r + sqrt3/2)^2 dr.
    Returns (cube_sum, tail_bound).
    """
    R = max(radius, math.ceil(math.sqrt(3.0) * N) + 1)
    cube = _radial_sum(f, *_cube_counts(N))
    radii, counts, inside = _ball_counts(R)
    ball = float(np.sum(counts * f(radii)))
    excess = 4.0 / 3.0 * math.pi * (R + HALF_DIAGONAL) ** 3 - inside
    # r = R e^x keeps slowly decaying tails well conditioned
    def integrand(x):
        r = R * np.exp(x)
        v = f(r) * (r + HALF_DIAGONAL) ** 2 * r
        return v if np.isfinite(v) else 0.0  # r overflows only where the integrand is negligible

    with np.errstate(over="ignore", invalid="ignore"):
        tail, _ = integrate.quad(integrand, 0.0, np.inf, epsabs=1e-14, epsrel=1e-11, limit=400)
    return cube, (ball - cube) + f(float(R)) * excess + 4.0 * math.pi * tail


def lattice_reciprocal_sum_audit(a: float, b: float, s: float, N: int = 16) -> AuditResult:
    """Compare sum_k 1/(a|k|^(s+1/2) + b|k|^(s+5/2)) with its integral majorant.

    lhs is the exact sum over the working cube plus the analytic tail bound,
    rhs = (4 pi/sqrt(ab)) (sqrt(a)/sqrt(b))^(3/2-s) * carlson_integral_constant(s).
    """
    if not (a > 0 and b > 0):
        raise ValueError(f"weights must be positive, got a={a}, b={b}")
    _check_carlson_range(s)
    f = lambda r: 1.0 / (a * r ** (s + 0.5) + b * r ** (s + 2.5))  # noqa: E731
    cube, tail = lattice_sum_with_tail(f, N)
    J = carlson_integral_constant(s)
    rhs = 4.0 * math.pi / math.sqrt(a * b) * (math.sqrt(a) / math.sqrt(b)) ** (1.5 - s) * J
    return AuditResult(
        "lattice_reciprocal_sum",
        cube + tail,
        rhs,
        J,
        detail={"a": a, "b": b, "N": N, "cube_sum": cube, "tail_bound": tail},
        s=s,
    )


def _carlson_parts(u: SpectralField, s: float):
    X = sobolev_norm(u, s)
    Y = sobolev_norm(u, s + 1)
    if X == 0:
        raise DegenerateFieldError("Carlson split needs a nonzero field")
    a, b = Y * Y, X * X
    return X, Y, a, b


def carlson_majorant_audit(u: SpectralField, s: float) -> AuditResult:
    """Hardy's weighted Cauchy-Schwarz split of sum |u_hat_k| |k|^((s-1/2)/2).

    The weights are a = ||u||_{s+1}^2, b = ||u||_s^2.  Two bounds are carried:
    the Cauchy-Schwarz bound with the true lattice sum (plus tail), and the
    final bound where that sum is replaced by its integral majorant (rhs).
    """
    _check_carlson_range(s)
    X, Y, a, b = _carlson_parts(u, s)
    r = 0.5 * (s - 0.5)
    lhs = fr_norm(u, r)
    quadratic = math.sqrt(a * X * X + b * Y * Y)
    f = lambda k: 1.0 / (a * k ** (s + 0.5) + b * k ** (s + 2.5))  # noqa: E731
    cube, tail = lattice_sum_with_tail(f, u.lattice.N)
    J = carlson_integral_constant(s)
    majorant = 4.0 * math.pi / math.sqrt(a * b) * (math.sqrt(a) / math.sqrt(b)) ** (1.5 - s) * J
    return AuditResult(
        "carlson_majorant",
        lhs,
        quadratic * math.sqrt(majorant),
        J,
        detail={
            "a": a,
            "b": b,
            "quadratic_factor": quadratic,
            "lattice_sum": cube + tail,
            "integral_majorant": majorant,
            "cauchy_schwarz_bound": quadratic * math.sqrt(cube + tail),
            "integral_comparison_slack": majorant - (cube + tail),
        },
        s=s,
        r=r,
    )


def interpolation_audit(u: SpectralField, s0: float, s1: float, theta: float) -> AuditResult:
    """||u||_{theta s0 + (1-theta) s1} <= ||u||_{s0}^theta ||u||_{s1}^(1-theta)."""
    if not 0.0 <= theta <= 1.0:
        raise InadmissibleIndexError(f"interpolation weight must lie in [0, 1], got {theta}")
    if not s0 < s1:
        raise ValueError(f"need s0 < s1, got s0={s0}, s1={s1}")
    mid = theta * s0 + (1.0 - theta) * s1
    n0, n1 = sobolev_norm(u, s0), sobolev_norm(u, s1)
    return AuditResult(
        "interpolation",
        sobolev_norm(u, mid),
        n0**theta * n1 ** (1.0 - theta),
        theta,
        detail={"s0": s0, "s1": s1, "theta": theta, "index": mid, "norm_s0": n0, "norm_s1": n1},
        s=mid,
    )


def interpolation_weight(s: float) -> float:
    """theta with theta*s + (1-theta)*(s+1) = s/2 + 5/4."""
    return 0.5 * s - 0.25


def f1_constant(s: float) -> float:
    """sqrt(8 pi E(s)) with E the normalised integral of y^2/(1+y^(2s-2))."""
    return math.sqrt(8.0 * math.pi * euler_integral_constant(s))


def f1_majorant_audit(u: SpectralField, s: float) -> AuditResult:
    """||u||_{F^1} <= c_s ||u||_{L^2}^((2s-5)/(2s)) ||u||_s^(5/(2s)) for s > 5/2.

    Chain lines in ``detail``: Cauchy-Schwarz with weights a = ||u||_s^2,
    b = ||u||_1^2 and the true lattice sum; the same with the integral
    majorant; the substituted form; and (rhs) the form after interpolating
    ||u||_1 between L^2 and H^s.
    """
    _check_euler_range(s)
    L = sobolev_norm(u, 0.0)
    W = sobolev_norm(u, 1.0)
    S = sobolev_norm(u, s)
    if S == 0:
        raise DegenerateFieldError("F^1 estimate needs a nonzero field")
    a, b = S * S, W * W
    lhs = fr_norm(u, 1.0)
    quadratic = math.sqrt(a * W * W + b * S * S)
    f = lambda k: 1.0 / (a + b * k ** (2 * s - 2))  # noqa: E731
    cube, tail = lattice_sum_with_tail(f, u.lattice.N)
    E = euler_integral_constant(s)
    integral = 4.0 * math.pi * E / a * (a / b) ** (3.0 / (2 * s - 2))
    c = math.sqrt(8.0 * math.pi * E)
    substituted = c * W ** ((2 * s - 5) / (2 * s - 2)) * S ** (3 / (2 * s - 2))
    rhs = c * L ** ((2 * s - 5) / (2 * s)) * S ** (5 / (2 * s))
    return AuditResult(
        "f1_majorant",
        lhs,
        rhs,
        c,
        detail={
            "a": a,
            "b": b,
            "cauchy_schwarz": quadratic * math.sqrt(cube + tail),
            "integral_majorant": quadratic * math.sqrt(integral),
            "substituted": substituted,
            "interpolated": rhs,
            "lattice_sum": cube + tail,
            "integral": integral,
            "euler_integral": E,
        },
        s=s,
        r=1.0,
    )
