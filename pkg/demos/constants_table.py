"""Constants entering the blow-up rate, and the comparison ODE behind it.

Run: python3 demos/constants_table.py
"""
import numpy as np

from torus_lab import Lattice, comparison_ode_oracle, rate_report, taylor_green
from torus_lab.cli import format_constants
from torus_lab.constants import ns_constant

print(format_constants([0.75, 1.25, 1.5, 2.0, 2.25, 3.0]))

# X' = 2 c X^{1+beta} with beta = 1/(s - 1/2) blows up at T = X0^{-beta}/(2 c beta)
o = comparison_ode_oracle(1.5, 1.0, 1.0)
print(f"\nT_blow = {o.T_blow} for (s=1.5, X0=1, c=1); numerical rel error {o.max_rel_error:.1e}")
print(f"envelope exponent {o.exponent}, fitted {o.fitted_exponent:.6f}")

# the same constants applied to a Taylor-Green datum
u0 = taylor_green(Lattice(8))
for s in (1.25, 1.5, 2.0):
    rep = rate_report(u0, s)
    tau = np.array([1e-3, 1e-2, 1e-1])
    print(f"s={s}: c_s {ns_constant(s):.4g}, T_bound {rep.T_bound:.4e}, "
          f"envelope at tau={tau.tolist()}: {np.round(rep.envelope(tau), 3).tolist()}")
