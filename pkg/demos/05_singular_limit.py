"""
The vanishing-diffusion limit
=============================

When the tip-position diffusion d tends to zero, the profile splits into an
outer solution on the O(1) scale and a thin layer at the wall. Across the
layer only p- adjusts. The outer solution obeys a conservation law, and
its c component is explicit.
"""

# %%
import numpy as np

from mtevans.errors import TrivialOnlyError
from mtevans.model import BoundaryCondition, fig3_params
from mtevans.singular import CASE_I, CASE_II, composite, d_sweep, slow_solve

params = fig3_params()
bc = BoundaryCondition.dirichlet(0.2, 0.2, 0.2)

# %%
# With c vanishing at infinity (case I), p+ decays like the exponential of
# an exponential. log|p+| is therefore an affine function of exp(x) far
# from the wall.
slow = slow_solve(params, bc, CASE_I)
x = np.linspace(5, 15, 101)
logp = slow.log_abs_p_plus(x)
coef = np.polyfit(np.exp(x), logp, 1)
print(f"log|p+| ~ {coef[0]:.4f} exp(x) + {coef[1]:.3f}; fit residual "
      f"{np.abs(np.polyval(coef, np.exp(x)) - logp).max() / np.abs(logp).max():.1e}")

# %%
# Zero-flux data for c cannot support a nontrivial case I solution.
try:
    slow_solve(params, BoundaryCondition.neumann(0.2, 0.2), CASE_I)
except TrivialOnlyError as exc:
    print("Neumann, case I:", exc.verdict)

# %%
# With c tending to a positive value (case II), the outer limit lands on
# the endstate curve.
slow2 = slow_solve(params, bc, CASE_II, c_inf=1 / 6)
print("case II limit:", np.round(slow2.limit(), 6), "alpha =", slow2.alpha_cons)

# %%
# Composite approximation against full profiles
# ---------------------------------------------
# Away from the wall, the gap between the composite and the collocation
# profile shrinks as d decreases.
for row in d_sweep(params, bc):
    print(f"d = {row['d']:<6}: sup error on [0.5, 0.8 M] = {row['sup_error_outer']:.4f}")
comp = composite(params.replace(d=0.025), bc, CASE_I, np.array([0.0, 0.05, 0.5]))
print("composite at x = 0, 0.05, 0.5:\n", np.round(comp, 5))
