"""
Endstates and their constant-state spectra
==========================================

Spatially constant equilibria form a one-parameter curve indexed by the
far-field tubulin concentration c+. This script walks along that curve and
checks the spectral conditions a boundary layer needs at its endstate.
"""

# %%
# Walking along the endstate curve
# --------------------------------
# The curve ends where the physicality margin vanishes; past that point the
# equilibrium densities would be negative or infinite.
import numpy as np

from mtevans.model import endstate_from_c, endstate_from_total_density, fig3_params, physicality_margin
from mtevans.spectral import check_gooddisp, dispersion_curves, imaginary_root_check, quintic_q, stability_index

params = fig3_params()
c_max = np.sqrt(params.nu_minus * params.f_cat / (params.u_plus * params.omega))
print(f"endstate curve ends at c+ = {c_max:.4f}")
for c in np.linspace(0.0, 0.9 * c_max, 5):
    es = endstate_from_c(params, c)
    print(f"  c+ = {c:.3f}  p+ = {es.p_plus_inf:.4f}  p- = {es.p_minus_inf:.4f}  "
          f"margin = {physicality_margin(params, c):.3f}")

# %%
# The curve can also be entered through the total density p+ + p-, which is
# the quantity that the far field of an initial condition selects.
es = endstate_from_total_density(params, 0.2)
print(f"total density 0.2 -> c+ = {es.c_plus:.6f} (exactly 1/6)")

# %%
# Spatial decay rates
# -------------------
# Nonzero spatial eigenvalues at lambda = 0 are the roots of a quintic. We
# confirm there are no purely imaginary roots and that the mod-two stability
# index is +1.
for c in (0.0, 0.3):
    es = endstate_from_c(params, c)
    q = quintic_q(params, es)
    verdict = imaginary_root_check(params, es)
    print(f"c+ = {c}: q roots {np.round(np.roots(q.coeffs), 4)}")
    print(f"   no imaginary root: {verdict.no_common_root}, stability index: {stability_index(params, es)}")

# %%
# Dispersion relation
# -------------------
# At c+ = 0 the three branches are known in closed form. Their real parts
# never exceed zero, so the essential spectrum stays in the closed left
# half-plane.
es = endstate_from_c(params, 0.0)
xi = np.linspace(-5, 5, 11)
for s in dispersion_curves(params, es, xi)[::5]:
    print(f"xi = {s.xi:+.1f}: lambda = {np.round(s.lambdas, 4)}")
print("good dispersion:", check_gooddisp(params, es).holds)
