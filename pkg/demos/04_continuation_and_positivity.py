# %% [markdown]
# # Continuation in n
# Each level is warm-started from the previous one. The discrete solutions
# increase with n and stay away from zero inside the ball.

# %%
import numpy as np

from singdeg.mesh import build_radial_mesh
from singdeg.model import ProblemSpec, SourceSpec
from singdeg.solver import continuation_sequence
from singdeg.verify import check_interior_positivity, check_monotonicity, check_nonnegative

spec = ProblemSpec(3, 1.0, 2.0, source=SourceSpec.power(1.0, 2.9), m=1.0)
mesh = build_radial_mesh(3, 256)
outcomes, trace = continuation_sequence(mesh, spec, [2**k for k in range(7)])

for o in outcomes:
    print(f"n={o.level:3d}  iters={o.iterations:3d}  max u={o.field.sup:.4f}  min on r<=0.8: {o.interior_min:.4f}")

# %%
for chk in (check_nonnegative(outcomes), check_monotonicity(outcomes), check_interior_positivity(outcomes)):
    print(f"{chk.name:<20s} {'ok' if chk.passed else 'VIOLATED'}  {chk.detail}")

# %% [markdown]
# Reversing the sequence is the negative control.

# %%
print(check_monotonicity(outcomes[::-1]))

# %% [markdown]
# Profiles at a few radii.

# %%
idx = [np.searchsorted(mesh.nodes, r) for r in (0.0, 0.25, 0.5, 0.75, 0.95)]
for o in outcomes[::2]:
    print(o.level, np.round(o.field.values[idx], 4))
