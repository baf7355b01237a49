# %% [markdown]
# # The power-gradient energy bound
# For gamma > p + 1, testing the level-n problem with u^gamma controls
#
#     alpha gamma  sum |grad u|^2 u^(gamma-1) / (1 + T_n(u))^p   by   int f.
#
# Dropping the (1 + u)^-p weight in favour of u^-p gives a bound on the
# gradient of u^((gamma+1-p)/2), but u^-p is the larger weight, so that
# second form is not implied. The numbers show it is violated here.

# %%
from singdeg.mesh import build_radial_mesh
from singdeg.model import ProblemSpec, SourceSpec
from singdeg.solver import picard_solve
from singdeg.verify import check_energy_inequality, check_weighted_energy_inequality

spec = ProblemSpec(3, 0.5, 2.0, source=SourceSpec.power(1.0, 2.5), m=1.0)
for cells in (256, 512, 1024, 2048):
    mesh = build_radial_mesh(3, cells)
    out = picard_solve(mesh, spec, 64)
    plain = check_energy_inequality(mesh, spec, out)
    weighted = check_weighted_energy_inequality(mesh, spec, out)
    print(f"{cells:5d} cells  power form / int f = {plain.measured / plain.bound_or_target:.4f}   "
          f"weighted form / int f = {weighted.measured / weighted.bound_or_target:.4f}")

# %% [markdown]
# The scaled field is the negative control for both.

# %%
mesh = build_radial_mesh(3, 256)
out = picard_solve(mesh, spec, 64)
print(check_energy_inequality(mesh, spec, out, field=out.field * 10))
