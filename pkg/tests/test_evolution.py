import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from torus_lab import (
    CFLViolation,
    InadmissibleIndexError,
    Lattice,
    SolverConfig,
    SpectralField,
    comparison_ode_oracle,
    energy_identity_audit,
    euler_rate_audit,
    existence_time_bound,
    random_solenoidal,
    rate_report,
    run,
    sobolev_norm,
    step,
    taylor_green,
)
from torus_lab import constants as C
from torus_lab.evolution import identity_residuals, lemma_r


def shear(lattice, amp=1.0):
    return SpectralField.from_modes(lattice, {(1, 0, 0): (0, amp / 2, 0)})


def thin(traj, every):
    return dataclasses.replace(traj, samples=traj.samples[::every])


# configuration ---------------------------------------------------------------------


@pytest.mark.parametrize(
    "kwargs", [dict(nu=-1.0), dict(dt=0.0), dict(t_end=-1.0), dict(integrator="euler"), dict(sample_every=0)]
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        SolverConfig(**kwargs)


def test_config_derived_quantities():
    cfg = SolverConfig(N=8, dt=1e-3, t_end=0.5, sample_every=10)
    assert cfg.n_steps == 500
    assert cfg.sample_interval == pytest.approx(1e-2)
    assert cfg.lattice == Lattice(8)


def test_lemma_r():
    assert lemma_r(1.5) == 0.5
    assert lemma_r(3.0) == 1.0
    assert lemma_r(0.25) == 0.0


# single steps ------------------------------------------------------------------------


@pytest.mark.parametrize("nu", [1.0, 0.3])
def test_single_mode_decay_per_step(lattice8, nu):
    cfg = SolverConfig(N=8, nu=nu, dt=1e-3)
    u = shear(lattice8)
    v = step(u, cfg)
    expected = u.coeff * math.exp(-4 * math.pi**2 * nu * cfg.dt)
    assert np.max(np.abs(v.coeff - expected)) <= 1e-12


def test_euler_shear_is_steady(lattice8):
    cfg = SolverConfig(N=8, nu=0.0, dt=1e-2)
    u = shear(lattice8)
    v = u
    for _ in range(10):
        v = step(v, cfg)
    assert np.max(np.abs(v.coeff - u.coeff)) <= 1e-15


def test_step_preserves_solenoidal(lattice8):
    cfg = SolverConfig(N=8, nu=0.1, dt=1e-3)
    u = random_solenoidal(lattice8, 2.0, 3)
    v = step(step(u, cfg), cfg)
    assert v.is_solenoidal()
    assert v.hermitian_defect() <= 1e-15 * v.max_amplitude()


def test_step_lattice_mismatch(lattice8):
    with pytest.raises(ValueError):
        step(shear(lattice8), SolverConfig(N=6))


# runs --------------------------------------------------------------------------------


def test_zero_datum(lattice8):
    cfg = SolverConfig(N=8, t_end=0.05, sample_every=5, s_values=(1.5,))
    traj = run(cfg, SpectralField.zeros(lattice8))
    assert traj.status == "complete"
    assert len(traj) == 11
    assert np.all(traj.column("l2_norm") == 0)
    assert np.all(traj.column("hs_norms", 1.5) == 0)
    assert np.all(traj.final.coeff == 0)


def test_run_is_deterministic(lattice8):
    cfg = SolverConfig(N=8, t_end=0.02, sample_every=5)
    u0 = random_solenoidal(lattice8, 2.0, 0)
    a, b = run(cfg, u0), run(cfg, u0)
    np.testing.assert_array_equal(a.final.coeff, b.final.coeff)
    np.testing.assert_array_equal(a.column("hs_norms", 1.5), b.column("hs_norms", 1.5))


def test_run_snapshots_and_samples(lattice8):
    cfg = SolverConfig(N=8, dt=1e-3, t_end=0.02, sample_every=4, s_values=(1.5, 2.0))
    traj = run(cfg, taylor_green(lattice8), snapshot_times=(0.0, 0.01, 0.02))
    assert sorted(traj.snapshots) == [0.0, 0.01, 0.02]
    np.testing.assert_array_equal(traj.snapshots[0.02].coeff, traj.final.coeff)
    t = traj.column("t")
    np.testing.assert_allclose(np.diff(t), 4e-3)
    s = traj[2]
    assert set(s.hs_norms) == {1.5, 2.0}
    assert s.dissipation[2.0] == pytest.approx(4 * math.pi**2 * s.hs1_norms[2.0] ** 2)
    assert s.trilinear_s[1.5] == pytest.approx(s.pairing[1.5] / (2 * math.pi))


def test_ns_l2_strictly_decreasing(lattice8):
    cfg = SolverConfig(N=8, nu=1.0, dt=1e-3, t_end=0.2, sample_every=10)
    l2 = run(cfg, taylor_green(lattice8)).column("l2_norm")
    assert np.all(np.diff(l2) < 0)


def test_cfl_guard(lattice8):
    cfg = SolverConfig(N=8, dt=0.05, t_end=1.0, sample_every=1)
    with pytest.raises(CFLViolation) as info:
        run(cfg, taylor_green(lattice8, 5.0))
    assert info.value.courant > 0.5
    assert info.value.trajectory.status == "cfl"
    assert len(info.value.trajectory) >= 1


def test_blowup_signal(lattice8):
    c = np.array(taylor_green(lattice8).coeff)
    c[0, 9, 9, 9] = np.nan
    traj = run(SolverConfig(N=8, t_end=0.01, sample_every=1), SpectralField(lattice8, c))
    assert traj.status == "blowup"
    assert traj.final_time == 0.0


def test_run_lattice_mismatch(lattice8):
    with pytest.raises(ValueError):
        run(SolverConfig(N=6), taylor_green(lattice8))


# energy identity -----------------------------------------------------------------------


def test_identity_single_mode_closed_form(lattice8):
    # X(t) = (1/2)||u||_s^2 = exp(-w t)/4 with w = 8 pi^2; the central
    # difference over h overshoots the derivative by the factor sinh(wh)/(wh)
    cfg = SolverConfig(N=8, nu=1.0, dt=1e-3, t_end=0.05, sample_every=5, s_values=(1.5,))
    traj = run(cfg, shear(lattice8))
    audit = energy_identity_audit(traj, 1.5, cfg)
    w, h = 8 * math.pi**2, cfg.sample_interval
    t = np.array(audit.detail["interior_times"])
    expected = w * 0.25 * np.exp(-w * t) * (math.sinh(w * h) / (w * h) - 1)
    np.testing.assert_allclose(audit.detail["identity_residuals"], expected, rtol=1e-8)
    assert audit.passed and audit.lhs == 0.0


def test_identity_single_mode_small_interval(lattice8):
    cfg = SolverConfig(N=8, nu=1.0, dt=1e-7, t_end=2e-7, sample_every=1, s_values=(1.5,))
    audit = energy_identity_audit(run(cfg, shear(lattice8)), 1.5)
    assert audit.detail["max_identity_residual"] <= 1e-8


def test_identity_residual_second_order(lattice8):
    # one fine run, sampled at h, 2h and 4h; compare residuals at t = 0.024
    cfg = SolverConfig(N=8, nu=1.0, dt=2.5e-4, t_end=0.048, sample_every=4, s_values=(1.5,))
    traj = run(cfg, taylor_green(lattice8))
    res = []
    for every in (1, 2, 4):
        sub = thin(traj, every)
        r = identity_residuals(sub, 1.5)
        t = sub.column("t")
        res.append(r[int(np.argmin(np.abs(t - 0.024)))])
    orders = np.log2(np.array(res[1:]) / np.array(res[:-1]))
    np.testing.assert_allclose(orders, 2.0, atol=0.1)


def test_identity_residuals_nan_ends(lattice8):
    cfg = SolverConfig(N=8, t_end=0.01, sample_every=2)
    r = identity_residuals(run(cfg, taylor_green(lattice8)), 1.5)
    assert np.isnan(r[0]) and np.isnan(r[-1]) and np.all(np.isfinite(r[1:-1]))


def test_identity_audit_errors(lattice8):
    short = run(SolverConfig(N=8, t_end=0.001, sample_every=1), taylor_green(lattice8))
    with pytest.raises(ValueError, match="3 samples"):
        energy_identity_audit(short, 1.5)
    traj = run(SolverConfig(N=8, t_end=0.004, sample_every=1), taylor_green(lattice8))
    with pytest.raises(KeyError):
        energy_identity_audit(traj, 2.0)
    uneven = dataclasses.replace(traj, samples=[traj[0], traj[1], traj[3]])
    with pytest.raises(ValueError, match="uniform"):
        energy_identity_audit(uneven, 1.5)


def test_inequality_on_random_runs(lattice8):
    cfg = SolverConfig(N=8, nu=1.0, dt=2e-4, t_end=0.03, sample_every=15, s_values=(1.25, 1.5, 2.0, 2.4))
    traj = run(cfg, random_solenoidal(lattice8, 2.0, 4) * 3.0)
    for s in cfg.s_values:
        audit = energy_identity_audit(traj, s, cfg)
        assert audit.passed and audit.detail["all_samples_pass"]


# existence time and rates ------------------------------------------------------------


@pytest.mark.parametrize("s, ratio", [(1.5, 1 / 4), (2.0, 2 ** (-4 / 3))])
def test_existence_time_scaling(lattice8, s, ratio):
    u = random_solenoidal(lattice8, 3.0, 1)
    assert existence_time_bound(u * 2.0, s) / existence_time_bound(u, s) == pytest.approx(ratio, rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(s=st.floats(0.55, 2.45), lam=st.floats(0.1, 10.0))
def test_existence_time_scaling_property(s, lam):
    u = taylor_green(Lattice(4))
    ratio = existence_time_bound(u * lam, s) / existence_time_bound(u, s)
    assert ratio == pytest.approx(lam ** (-4 / (2 * s - 1)), rel=1e-10)


def test_existence_time_formula_and_errors(lattice8):
    u = taylor_green(lattice8)
    expected = C.existence_constant(1.5) * sobolev_norm(u, 1.5) ** -2
    assert existence_time_bound(u, 1.5) == pytest.approx(expected, rel=1e-14)
    assert existence_time_bound(SpectralField.zeros(lattice8), 1.5) == math.inf
    with pytest.raises(InadmissibleIndexError):
        existence_time_bound(u, 2.5)


def test_rate_report(lattice8):
    u = taylor_green(lattice8)
    rep = rate_report(u, 1.5)
    assert rep.exponent == 0.5
    assert rep.T_bound == existence_time_bound(u, 1.5)
    assert rep.euler_exponent is None
    assert rep.envelope(4.0) == pytest.approx(rep.C_s / 2)
    assert rate_report(u, 1.5, euler_delta=0.5).euler_exponent == pytest.approx(1.2)
    with pytest.raises(InadmissibleIndexError):
        rate_report(u, 1.5, euler_delta=0.0)


def test_comparison_oracle_reference_case():
    o = comparison_ode_oracle(1.5, 1.0, 1.0)
    assert o.beta == 1.0 and o.T_blow == 0.5
    assert o.passed
    assert o.envelope_residual <= 1e-12
    assert o.fitted_exponent == pytest.approx(0.5, abs=1e-3)


@pytest.mark.parametrize("s", [0.75, 1.0, 1.5, 2.0, 2.25])
def test_comparison_oracle_exponents(s):
    o = comparison_ode_oracle(s, 2.0, 3.0)
    assert o.exponent == pytest.approx((s - 0.5) / 2)
    assert o.fitted_exponent == pytest.approx(o.exponent, abs=1e-3)
    assert o.max_rel_error <= 0.01


def test_comparison_oracle_time_rescaling():
    assert comparison_ode_oracle(1.5, 1.0, 2.0).T_blow == pytest.approx(0.25)
    with pytest.raises(ValueError):
        comparison_ode_oracle(1.5, 0.0, 1.0)


# Euler rate audit ------------------------------------------------------------------------


def test_euler_rate_steady_shear(lattice8):
    cfg = SolverConfig(N=8, nu=0.0, dt=5e-3, t_end=0.1, sample_every=4, s_values=(3.0,))
    u = shear(lattice8)
    audit = euler_rate_audit(run(cfg, u), 0.5, sobolev_norm(u, 0.0))
    assert audit.lhs == 0.0 and audit.passed
    assert audit.detail["exponent_mismatch"] and audit.detail["rate_exponent"] == pytest.approx(1.2)


def test_euler_rate_errors(lattice8):
    cfg = SolverConfig(N=8, nu=0.0, dt=5e-3, t_end=0.05, sample_every=2, s_values=(3.0,))
    traj = run(cfg, shear(lattice8))
    with pytest.raises(KeyError):
        euler_rate_audit(traj, 1.0, 1.0)
    with pytest.raises(InadmissibleIndexError):
        euler_rate_audit(traj, 0.0, 1.0)
