"""Explicit constants of the blow-up-rate argument, assembled factor by factor.

Chain for 1/2 < s < 5/2, with X = ||u||_s, Y = ||u||_{s+1}, r = (s - 1/2)/2:

    |(B(u,u), u)_{H^s}| = 2 pi |T_s|
                        <= 2 pi * s 2^{s+1} ||u||_{F^r} X ||u||_{s/2+5/4}      (trilinear bound)
    ||u||_{F^r}         <= sqrt(8 pi J(s)) X^{s/2-1/4} Y^{5/4-s/2}             (Carlson split)
    ||u||_{s/2+5/4}     <= X^{s/2-1/4} Y^{5/4-s/2}                              (interpolation)

so the nonlinear term is at most C1 X^{s+1/2} Y^{5/2-s}.  Young's inequality
with the conjugate pair p = 2/(s-1/2), q = 2/(5/2-s) absorbs the Y factor
into the dissipation 4 pi^2 nu Y^2, leaving

    (1/2) d/dt X^2 <= c_s (X^2)^{1 + 1/(s-1/2)}.
"""
from __future__ import annotations

import math

from .exceptions import InadmissibleIndexError
from .norm_audit import carlson_integral_constant, euler_integral_constant, f1_constant


def _ns_range(s):
    if not 0.5 < s < 2.5:
        raise InadmissibleIndexError(f"Navier-Stokes constants need 1/2 < s < 5/2, got s={s}")


def lemma_constant(s: float) -> float:
    """s 2^{s+1}, the constant of the trilinear bound."""
    return s * 2.0 ** (s + 1)


def young_pair(s: float) -> tuple:
    """Conjugate exponents (p, q) = (2/(s-1/2), 2/(5/2-s))."""
    _ns_range(s)
    return 2.0 / (s - 0.5), 2.0 / (2.5 - s)


def unpaired_young_pair(s: float) -> tuple:
    """The non-conjugate variant p = 2(s+1/2)/(s-1/2), q = 2/(5/2-s); not conjugate."""
    _ns_range(s)
    return 2.0 * (s + 0.5) / (s - 0.5), 2.0 / (2.5 - s)


def young_typo(s: float) -> bool:
    p, q = unpaired_young_pair(s)
    return not math.isclose(1.0 / p + 1.0 / q, 1.0, rel_tol=1e-12)


def carlson_factor(s: float) -> float:
    """sqrt(8 pi J(s)): ||u||_{F^r} <= this * X^{s/2-1/4} Y^{5/4-s/2}."""
    return math.sqrt(8.0 * math.pi * carlson_integral_constant(s))


def nonlinear_constant(s: float) -> float:
    """C1 with |(B(u,u),u)_{H^s}| <= C1 X^{s+1/2} Y^{5/2-s}."""
    _ns_range(s)
    return 2.0 * math.pi * lemma_constant(s) * carlson_factor(s)


def ns_constant(s: float, nu: float = 1.0) -> float:
    """c_s in (1/2) d/dt X^2 <= c_s (X^2)^{1+1/(s-1/2)} after Young's inequality.

    Writing C1 X^a Y^b = (C1 X^a / eps)(eps Y^b) and choosing eps^q/q = 4 pi^2 nu
    cancels the dissipation exactly; the remainder is (C1/eps)^p X^{ap} / p.
    """
    if not nu > 0:
        raise ValueError("the Young step needs positive viscosity")
    p, q = young_pair(s)
    eps = (4.0 * math.pi**2 * nu * q) ** (1.0 / q)
    return (nonlinear_constant(s) / eps) ** p / p


def blowup_exponent(s: float) -> float:
    """gamma in ||u(T-t)||_s >= C t^{-gamma}: (s - 1/2)/2."""
    return 0.5 * (s - 0.5)


def comparison_beta(s: float) -> float:
    """beta = 1/(s - 1/2) in X' <= 2 c X^{1+beta}, X = ||u||_s^2."""
    return 1.0 / (s - 0.5)


def existence_constant(s: float, nu: float = 1.0) -> float:
    """K_s = (s - 1/2)/(2 c_s), from integrating X' <= 2 c_s X^{1+beta} exactly."""
    return (s - 0.5) / (2.0 * ns_constant(s, nu))


def envelope_constant(s: float, nu: float = 1.0) -> float:
    """C_s with ||u(T-t)||_s >= C_s t^{-(s-1/2)/2}: (2 c_s beta)^{-(s-1/2)/2}."""
    return (2.0 * ns_constant(s, nu) * comparison_beta(s)) ** (-blowup_exponent(s))


def euler_constant(s: float, u0_l2: float) -> float:
    """c with d/dt ||u||_s^2 <= c ||u||_s^{2 + 5/(2s)} for Euler, s > 5/2.

    d/dt X^2 = -2 (B,u)_{H^s} <= 4 pi s 2^{s+1} ||u||_{F^1} X^2, then the F^1
    estimate and ||u(t)||_{L^2} <= ||u(0)||_{L^2}.
    """
    if not s > 2.5:
        raise InadmissibleIndexError(f"Euler constants need s > 5/2, got s={s}")
    return 4.0 * math.pi * lemma_constant(s) * f1_constant(s) * u0_l2 ** ((2 * s - 5) / (2 * s))


def euler_rate_exponent(s: float) -> float:
    """Exponent obtained by integrating the Euler inequality: 2s/5 (= 1 + 2 delta/5)."""
    return 2.0 * s / 5.0


def stated_euler_exponent(delta: float) -> float:
    """Stated Euler exponent 2 + 2 delta/5."""
    return 2.0 + 0.4 * delta


def constants_row(s: float, nu: float = 1.0) -> dict:
    """All constants admissible at s; inadmissible entries are None with a note."""
    row = {"s": s, "lemma_constant": lemma_constant(s) if s > 1 else None, "notes": []}
    if s <= 1:
        row["notes"].append("trilinear bound needs s > 1")
    if 0.5 < s < 2.5:
        p, q = young_pair(s)
        pp, _ = unpaired_young_pair(s)
        row.update(
            carlson_integral=carlson_integral_constant(s),
            young_p=p,
            young_q=q,
            unpaired_young_p=pp,
            young_typo=young_typo(s),
            c_s=ns_constant(s, nu),
            K_s=existence_constant(s, nu),
            blowup_exponent=blowup_exponent(s),
            envelope_constant=envelope_constant(s, nu),
        )
    else:
        row["notes"].append("out of range for Navier-Stokes constants (need 1/2 < s < 5/2)")
    if s > 2.5:
        delta = s - 2.5
        row.update(
            euler_integral=euler_integral_constant(s),
            f1_constant=f1_constant(s),
            euler_exponent=euler_rate_exponent(s),
            stated_euler_exponent=stated_euler_exponent(delta),
            euler_mismatch=not math.isclose(euler_rate_exponent(s), stated_euler_exponent(delta)),
        )
    else:
        row["notes"].append("Euler constants need s > 5/2")
    return row
