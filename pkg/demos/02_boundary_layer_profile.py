"""
A boundary-layer profile
========================

The steady problem on the half-line is a six-dimensional first-order
boundary value problem. Three conditions come from the data at x = 0; the
other three are projective conditions at the truncation point M. They
suppress the growing and neutral modes of the endstate.
"""

# %%
import numpy as np

from mtevans.model import BoundaryCondition, endstate_from_c, fig3_params, jacobian_at_infinity
from mtevans.profile import refine, residual, solve_profile

params = fig3_params()
bc = BoundaryCondition.dirichlet(0.2, 0.2, 0.2)
endstate = endstate_from_c(params, 0.0)
profile = solve_profile(params, bc, endstate)
print(f"M = {profile.M}, nodes = {profile.n_nodes}, truncation error = {profile.truncation_error:.2e}")
print(f"finite-difference residual = {residual(profile):.2e}")

# %%
# A few samples of the solution. Catastrophes convert growing tips into
# shrinking ones near the wall, and both populations decay into the bulk.
for x in (0.0, 0.5, 1.0, 2.0, 5.0, 10.0):
    pp, _, pm, _, c, _ = profile(np.array([x]))[:, 0]
    print(f"x = {x:5.1f}: p+ = {pp:.5f}  p- = {pm:.5f}  c = {c:.5f}")

# %%
# Exponential approach to the endstate
# ------------------------------------
# In the tail the deviation decays at the slowest stable rate of the
# linearization at the endstate.
x = profile.mesh
dev = np.abs(profile.U).max(axis=0)
tail = x > 0.75 * profile.M
rate = np.polyfit(x[tail], np.log(dev[tail]), 1)[0]
w = np.linalg.eigvals(jacobian_at_infinity(params, endstate)).real
print(f"observed tail rate {rate:.4f}, slowest stable eigenvalue {w[w < -1e-9].max():.4f}")

# %%
# Mesh refinement
# ---------------
# Halving every interval changes the nodal values by a rapidly shrinking
# amount, as expected of a fourth-order collocation scheme.
coarse = solve_profile(params, bc, endstate, n_intervals=40)
fine = refine(coarse)
finer = refine(fine)
d1 = np.abs(fine.values[:, ::2] - coarse.values).max()
d2 = np.abs(finer.values[:, ::2] - fine.values).max()
print(f"successive changes {d1:.2e}, {d2:.2e} (ratio {d2 / d1:.3f})")
