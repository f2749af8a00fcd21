"""Galerkin-truncated Navier-Stokes / Euler integration with norm monitors.

The truncated system is

    d/dt u_hat_k = -4 pi^2 nu |k|^2 u_hat_k - B(u, u)_k,      k retained,

with B(u,u) = P(u . grad u) evaluated pseudo-spectrally.  The viscous factor
is applied exactly through an integrating factor inside classical RK4.

No finite-time singularity is reachable at this scale: rate formulas are
checked on the scalar comparison ODE, solver runs check the inequalities.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import solve_ivp

from . import constants
from .exceptions import BlowUpDetected, CFLViolation, InadmissibleIndexError
from .norm_audit import AuditResult, fr_norm, sobolev_norm
from .spectral_core import Lattice, SpectralField, _from_grid, _to_grid, to_physical
from .trilinear import _convection_coeffs, hs_pairing

INTEGRATORS = ("if-rk4",)


@dataclass(frozen=True)
class SolverConfig:
    N: int = 16
    nu: float = 1.0
    dt: float = 1e-3
    t_end: float = 0.5
    s_values: tuple = (1.5,)
    dealias: str = "two-thirds"
    integrator: str = "if-rk4"
    sample_every: int = 10
    cfl_limit: float = 0.5

    def __post_init__(self):
        if self.nu < 0:
            raise ValueError(f"viscosity must be >= 0, got {self.nu}")
        if not self.dt > 0:
            raise ValueError(f"time step must be positive, got {self.dt}")
        if self.t_end < 0:
            raise ValueError(f"horizon must be >= 0, got {self.t_end}")
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"unknown integrator {self.integrator!r}; expected one of {INTEGRATORS}")
        if int(self.sample_every) != self.sample_every or self.sample_every < 1:
            raise ValueError(f"sample_every must be a positive integer, got {self.sample_every}")
        object.__setattr__(self, "s_values", tuple(float(s) for s in self.s_values))
        object.__setattr__(self, "sample_every", int(self.sample_every))

    @property
    def lattice(self) -> Lattice:
        return Lattice(self.N, self.dealias)

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    @property
    def sample_interval(self) -> float:
        return self.dt * self.sample_every


def lemma_r(s: float) -> float:
    """Absolute-sum index paired with s: (s - 1/2)/2 clipped to [0, 1]."""
    return min(max(0.5 * (s - 0.5), 0.0), 1.0)


@dataclass
class TrajectorySample:
    """Monitors at one instant.  Dicts are keyed by the monitored index s."""

    t: float
    l2_norm: float
    f1_norm: float
    max_velocity: float
    hs_norms: dict = field(default_factory=dict)
    hs1_norms: dict = field(default_factory=dict)
    hs_mid_norms: dict = field(default_factory=dict)
    fr_norms: dict = field(default_factory=dict)
    trilinear_s: dict = field(default_factory=dict)
    pairing: dict = field(default_factory=dict)
    lemma_rhs: dict = field(default_factory=dict)
    dissipation: dict = field(default_factory=dict)


@dataclass
class Trajectory:
    """Samples of one run plus its outcome; iterates over the samples."""

    config: SolverConfig
    samples: list = field(default_factory=list)
    status: str = "running"
    final: SpectralField | None = None
    final_time: float = 0.0
    snapshots: dict = field(default_factory=dict)

    def __iter__(self):
        return iter(self.samples)

    def __len__(self):
        return len(self.samples)

    def __getitem__(self, i):
        return self.samples[i]

    def column(self, name, s=None) -> np.ndarray:
        if s is None:
            return np.array([getattr(x, name) for x in self.samples])
        return np.array([getattr(x, name)[s] for x in self.samples])


def monitor(u: SpectralField, t: float, s_values, nu: float) -> TrajectorySample:
    """Evaluate every monitored norm and pairing of u."""
    v = SpectralField(u.lattice, _convection_coeffs(u.coeff, u.lattice))
    phys = to_physical(u).values
    sample = TrajectorySample(
        t=t,
        l2_norm=sobolev_norm(u, 0.0),
        f1_norm=fr_norm(u, 1.0),
        max_velocity=float(np.sqrt(np.max(np.sum(phys**2, axis=0)))),
    )
    for s in s_values:
        r = lemma_r(s)
        hs, hs1, mid = sobolev_norm(u, s), sobolev_norm(u, s + 1), sobolev_norm(u, s + 1 - r)
        fr = fr_norm(u, r)
        pair = hs_pairing(v, u, s)
        sample.hs_norms[s] = hs
        sample.hs1_norms[s] = hs1
        sample.hs_mid_norms[s] = mid
        sample.fr_norms[s] = fr
        sample.pairing[s] = pair
        sample.trilinear_s[s] = pair / (2 * math.pi)
        sample.lemma_rhs[s] = 2 * math.pi * constants.lemma_constant(s) * fr * hs * mid
        sample.dissipation[s] = 4 * math.pi**2 * nu * hs1**2
    return sample


@lru_cache(maxsize=16)
def _factors(lattice: Lattice, nu: float, dt: float):
    decay = -4.0 * math.pi**2 * nu * lattice.ksq
    return np.exp(decay * dt * 0.5), np.exp(decay * dt)


_PAIRS = ((0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2))


def _flux_divergence(c: np.ndarray, lattice: Lattice) -> np.ndarray:
    """div(u u^T) with dealiasing: equals u . grad u for solenoidal u, in 9 transforms instead of 15."""
    g = lattice.product_grid_size
    mask = lattice.dealias_mask
    vel = _to_grid(c * mask, lattice, g)
    flux = _from_grid(np.stack([vel[i] * vel[j] for i, j in _PAIRS]), lattice, g)
    full = np.empty((3, 3) + flux.shape[1:], dtype=complex)
    for n, (i, j) in enumerate(_PAIRS):
        full[i, j] = full[j, i] = flux[n]
    return 2j * np.pi * np.einsum("j...,ij...->i...", lattice.kvec, full) * mask


def _tendency(c: np.ndarray, lattice: Lattice) -> np.ndarray:
    """-B(u,u) on the retained modes."""
    adv = _flux_divergence(c, lattice)
    k = lattice.kvec
    ksq = np.where(lattice.nonzero, lattice.ksq, 1.0)
    adv = adv - k * (np.sum(k * adv, axis=0) / ksq)
    return -adv * lattice.retained


def _if_rk4(c: np.ndarray, lattice: Lattice, nu: float, dt: float) -> np.ndarray:
    half, full = _factors(lattice, nu, dt)
    k1 = _tendency(c, lattice)
    k2 = _tendency(half * (c + 0.5 * dt * k1), lattice)
    k3 = _tendency(half * c + 0.5 * dt * k2, lattice)
    k4 = _tendency(full * c + dt * half * k3, lattice)
    return full * c + dt / 6.0 * (full * k1 + 2.0 * half * (k2 + k3) + k4)


def step(u: SpectralField, cfg: SolverConfig, t: float | None = None) -> SpectralField:
    """One integrating-factor RK4 step of size cfg.dt."""
    lat = u.lattice
    if lat != cfg.lattice:
        raise ValueError(f"field lattice {lat} does not match config lattice {cfg.lattice}")
    c = _if_rk4(u.coeff * lat.retained, lat, cfg.nu, cfg.dt)
    if not np.all(np.isfinite(c)):
        raise BlowUpDetected("non-finite coefficients after time step", last_time=t)
    return SpectralField(lat, c)


def courant_number(sample: TrajectorySample, cfg: SolverConfig) -> float:
    return cfg.dt * sample.max_velocity * 2 * math.pi * cfg.N


def run(cfg: SolverConfig, u0: SpectralField, snapshot_times=()) -> Trajectory:
    """Integrate to cfg.t_end, sampling every cfg.sample_every steps.

    Stops early with status "blowup" on non-finite values.  A Courant number
    dt max|u| 2 pi N above cfg.cfl_limit at a sample raises CFLViolation,
    which carries the trajectory so far (diagnostic sample last).
    """
    if u0.lattice != cfg.lattice:
        raise ValueError(f"initial field lattice {u0.lattice} does not match config lattice {cfg.lattice}")
    traj = Trajectory(cfg)
    snap_steps = {int(round(t / cfg.dt)): t for t in snapshot_times}
    c = u0.coeff * cfg.lattice.retained
    u = SpectralField(cfg.lattice, c)
    for n in range(cfg.n_steps + 1):
        t = n * cfg.dt
        if n in snap_steps:
            traj.snapshots[snap_steps[n]] = u
        if n % cfg.sample_every == 0:
            sample = monitor(u, t, cfg.s_values, cfg.nu)
            traj.samples.append(sample)
            cfl = courant_number(sample, cfg)
            if cfl > cfg.cfl_limit:
                traj.status = "cfl"
                traj.final, traj.final_time = u, t
                raise CFLViolation(
                    f"Courant number {cfl:.3g} exceeds {cfg.cfl_limit} at t={t:.6g}",
                    trajectory=traj,
                    courant=cfl,
                )
        if n == cfg.n_steps:
            break
        try:
            u = step(u, cfg, t)
        except BlowUpDetected:
            traj.status = "blowup"
            traj.final, traj.final_time = u, t
            return traj
    traj.status = "complete"
    traj.final, traj.final_time = u, cfg.n_steps * cfg.dt
    return traj


def _uniform_times(traj) -> np.ndarray:
    t = np.array([x.t for x in traj])
    if len(t) < 3:
        raise ValueError(f"need at least 3 samples, got {len(t)}")
    h = np.diff(t)
    if not np.allclose(h, h[0], rtol=1e-9, atol=0):
        raise ValueError("samples are not uniformly spaced")
    return t


def _match_index(traj, s):
    for key in traj[0].hs_norms:
        if math.isclose(key, s, rel_tol=0, abs_tol=1e-12):
            return key
    raise KeyError(f"index s={s} is not monitored (monitored: {sorted(traj[0].hs_norms)})")


def energy_identity_audit(traj, s: float, cfg: SolverConfig | None = None) -> AuditResult:
    """Check d/dt (1/2)||u||_s^2 + 4 pi^2 nu ||u||_{s+1}^2 = -(B(u,u),u)_{H^s} along a run.

    The derivative is a central difference of sampled values, so the identity
    residual is a discretisation error of order (sample interval)^2 and is
    reported in ``detail``.  The pass flag is the inequality
    |(B(u,u),u)_{H^s}| <= 2 pi s 2^{s+1} ||u||_{F^r} ||u||_s ||u||_{s+1-r}
    at every sample, r = (s - 1/2)/2; lhs/rhs hold the tightest sample.
    """
    t = _uniform_times(traj)
    key = _match_index(traj, s)
    h = t[1] - t[0]
    X = 0.5 * np.array([x.hs_norms[key] for x in traj]) ** 2
    diss = np.array([x.dissipation[key] for x in traj])
    pair = np.array([x.pairing[key] for x in traj])
    rhs = np.array([x.lemma_rhs[key] for x in traj])
    fd = (X[2:] - X[:-2]) / (2 * h)
    expected = -diss[1:-1] - pair[1:-1]
    resid = np.abs(fd - expected)
    scale = np.abs(diss[1:-1]) + np.abs(pair[1:-1])
    rel = np.where(scale > 0, resid / np.where(scale > 0, scale, 1.0), resid)
    lhs = np.abs(pair)
    ratio = np.where(rhs > 0, lhs / np.where(rhs > 0, rhs, 1.0), np.where(lhs > 0, np.inf, 0.0))
    worst = int(np.argmax(ratio))
    res = AuditResult(
        "energy_inequality",
        float(lhs[worst]),
        float(rhs[worst]),
        constants.lemma_constant(s),
        detail={
            "worst_t": float(t[worst]),
            "all_samples_pass": bool(np.all(rhs - lhs >= -1e-10 * np.abs(rhs))),
            "identity_residuals": resid.tolist(),
            "relative_identity_residuals": rel.tolist(),
            "max_identity_residual": float(np.max(resid)),
            "max_relative_identity_residual": float(np.max(rel)),
            "sample_interval": float(h),
            "interior_times": t[1:-1].tolist(),
        },
        s=s,
        r=lemma_r(s),
    )
    return res


def identity_residuals(traj, s: float) -> np.ndarray:
    """Central-difference identity residuals at interior samples (NaN at the ends)."""
    audit = energy_identity_audit(traj, s)
    out = np.full(len(traj), np.nan)
    out[1:-1] = audit.detail["identity_residuals"]
    return out


# --------------------------------------------------------------------------
# existence time and blow-up rates


def _check_ns_index(s):
    if not 0.5 < s < 2.5:
        raise InadmissibleIndexError(f"existence-time bound needs 1/2 < s < 5/2, got s={s}")


def existence_time_bound(u0: SpectralField, s: float, nu: float = 1.0) -> float:
    """K_s ||u0||_s^{-4/(2s-1)}; infinite for the zero datum."""
    _check_ns_index(s)
    norm = sobolev_norm(u0, s)
    if norm == 0:
        return math.inf
    return constants.existence_constant(s, nu) * norm ** (-4.0 / (2 * s - 1))


@dataclass
class RateReport:
    s: float
    C_s: float
    T_bound: float
    exponent: float
    c_s: float
    euler_exponent: float | None = None

    def envelope(self, t):
        """Lower envelope C_s t^{-(s-1/2)/2} for ||u(T - t)||_s."""
        return self.C_s * np.asarray(t, dtype=float) ** (-self.exponent)


def rate_report(u0: SpectralField, s: float, nu: float = 1.0,
                euler_delta: float | None = None) -> RateReport:
    """Navier-Stokes rate constants at s; with ``euler_delta`` also the Euler exponent 2s'/5, s' = 5/2 + delta."""
    _check_ns_index(s)
    if euler_delta is not None and not euler_delta > 0:
        raise InadmissibleIndexError(f"delta must be positive, got {euler_delta}")
    return RateReport(
        s=s,
        C_s=constants.envelope_constant(s, nu),
        T_bound=existence_time_bound(u0, s, nu),
        exponent=constants.blowup_exponent(s),
        c_s=constants.ns_constant(s, nu),
        euler_exponent=None if euler_delta is None else constants.euler_rate_exponent(2.5 + euler_delta),
    )


@dataclass
class ComparisonOracle:
    s: float
    X0: float
    c_s: float
    beta: float
    T_blow: float
    exponent: float
    envelope_constant: float
    envelope_residual: float
    max_rel_error: float
    fitted_exponent: float

    @property
    def passed(self) -> bool:
        return self.max_rel_error <= 0.01


def comparison_ode_oracle(s: float, X0: float, c_s: float, rtol: float = 1e-11) -> ComparisonOracle:
    """Solve X' = 2 c X^{1+beta}, beta = 1/(s - 1/2), in closed form and numerically.

    Closed form X(t) = (X0^-beta - 2 c beta t)^{-1/beta} blows up at
    T = X0^-beta/(2 c beta), and sqrt(X(T - t)) = (2 c beta t)^{-1/(2 beta)},
    whose exponent 1/(2 beta) = (s - 1/2)/2 is the blow-up rate.
    """
    if not X0 > 0:
        raise ValueError(f"X0 must be positive, got {X0}")
    beta = 1.0 / (s - 0.5)
    T = X0 ** (-beta) / (2 * c_s * beta)
    gamma = 0.5 / beta
    C = (2 * c_s * beta) ** (-gamma)

    def closed(t):
        return (X0 ** (-beta) - 2 * c_s * beta * np.asarray(t)) ** (-1.0 / beta)

    tau = T * np.geomspace(0.01, 0.9, 25)
    env_resid = float(np.max(np.abs(np.sqrt(closed(T - tau)) / (C * tau ** (-gamma)) - 1.0)))

    t_end = 0.99 * T
    near_blow = T - tau
    t_eval = np.union1d(np.linspace(0.0, t_end, 200), near_blow[near_blow <= t_end])
    sol = solve_ivp(
        lambda t, x: 2 * c_s * x ** (1 + beta),
        (0.0, t_end),
        [X0],
        t_eval=t_eval,
        method="DOP853",
        rtol=rtol,
        atol=0.0,
    )
    ts, xs = sol.t, sol.y[0]
    err = float(np.max(np.abs(xs / closed(ts) - 1.0)))
    near = ts >= T - 0.9 * T
    slope = np.polyfit(np.log(T - ts[near]), np.log(np.sqrt(xs[near])), 1)[0]
    return ComparisonOracle(
        s=s, X0=X0, c_s=c_s, beta=beta, T_blow=T, exponent=gamma, envelope_constant=C,
        envelope_residual=env_resid, max_rel_error=err, fitted_exponent=float(-slope),
    )


def euler_rate_audit(traj, delta: float, u0_l2: float) -> AuditResult:
    """d/dt ||u||_s^2 <= c ||u||_s^{2 + 5/(2s)} at interior samples, s = 5/2 + delta.

    The derivative is a central difference of sampled values; c combines the
    trilinear bound (r = 1), the F^1 estimate and L^2 monotonicity with
    ||u(0)||_{L^2} = u0_l2.  ``detail`` carries the implied rate exponent 2s/5
    alongside the stated exponent 2 + 2 delta/5.
    """
    if not delta > 0:
        raise InadmissibleIndexError(f"delta must be positive, got {delta}")
    s = 2.5 + delta
    key = _match_index(traj, s)
    t = _uniform_times(traj)
    h = t[1] - t[0]
    X = np.array([x.hs_norms[key] for x in traj]) ** 2
    l2 = np.array([x.l2_norm for x in traj])
    c = constants.euler_constant(s, u0_l2)
    lhs = (X[2:] - X[:-2]) / (2 * h)
    rhs = c * X[1:-1] ** (1 + 5 / (4 * s))
    ratio = np.where(rhs > 0, lhs / np.where(rhs > 0, rhs, 1.0), np.where(lhs > 0, np.inf, -np.inf))
    worst = int(np.argmax(ratio))
    exponent = constants.euler_rate_exponent(s)
    stated = constants.stated_euler_exponent(delta)
    return AuditResult(
        "euler_rate",
        float(lhs[worst]),
        float(rhs[worst]),
        c,
        detail={
            "worst_t": float(t[1:-1][worst]),
            "all_samples_pass": bool(np.all(rhs - lhs >= -1e-10 * np.abs(rhs))),
            "l2_nonincreasing": bool(np.all(l2 <= u0_l2 * (1 + 1e-10))),
            "rate_exponent": exponent,
            "stated_exponent": stated,
            "exponent_mismatch": not math.isclose(exponent, stated),
        },
        s=s,
        r=1.0,
    )
