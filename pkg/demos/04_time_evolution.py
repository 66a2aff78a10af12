"""
Time evolution and endstate selection
=====================================

Integrating the full time-dependent system from step data shows which
steady state the dynamics actually pick. Only the far-field total density
p+ + p- of the initial data matters: it fixes the endstate on the curve,
and the solution settles onto the boundary layer ending there.
"""

# %%
from mtevans.evolution import GridSpec, distance_to_profile, evolve, is_stationary, limiting_total_density, step_initial
from mtevans.model import BoundaryCondition, endstate_from_total_density, fig3_params
from mtevans.profile import solve_profile

params = fig3_params()
bc = BoundaryCondition.dirichlet(0.2, 0.2, 0.2)
grid = GridSpec(t_end=400.0)

# %%
# Three initial data with different tails. The first two have zero total
# density at infinity. The second tail has a negative p-, which is not
# physical, but the equations still make sense. The third has total
# density 0.2.
cases = {
    "uniform c = .02": step_initial(grid, inner=(0.2, 0.2, 0.02), outer=(0.0, 0.0, 0.02)),
    "p+ = -p- tail": step_initial(grid, inner=(0.2, 0.2, 0.02), outer=(0.1, -0.1, 0.02)),
    "p+ + p- = .2 tail": step_initial(grid, outer=(0.1, 0.1, 0.2)),
}
for name, init in cases.items():
    total = limiting_total_density(init)
    endstate = endstate_from_total_density(params, total)
    profile = solve_profile(params, bc, endstate)
    traj = evolve(params, bc, init, grid)
    dist = distance_to_profile(traj, profile)
    print(f"{name:18s}: predicted c+ = {endstate.c_plus:.4f}, distance at t = {grid.t_end:.0f}: "
          f"{dist[-1]:.2e}, stationary: {is_stationary(traj)}")
