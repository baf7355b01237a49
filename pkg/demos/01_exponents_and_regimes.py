# %% [markdown]
# # Exponents and regimes
# Which statement applies depends on where (p, gamma, m) sits relative to a
# few thresholds. The table below is computed once per problem.

# %%
import math

from singdeg.model import ProblemSpec, SourceSpec, classify_regime, exponent_table

t = exponent_table(3, p=1.0, gamma=1.0, m=1.1)
for k, v in t.as_dict().items():
    print(f"{k:>14s}  {v}")

# %% [markdown]
# Sweep gamma at fixed p = 1 with f = 1 (so m is infinite and the solution is bounded).

# %%
for gamma in (0.5, 1.0, 1.9, 2.0, 2.5, 4.0):
    pred = classify_regime(ProblemSpec(3, 1.0, gamma))
    print(f"gamma={gamma:4.1f}  {pred.case_id.value:<12s} {sorted(c.value for c in pred.claims)}")

# %% [markdown]
# With a power source r^-a the summability class m is what moves a problem
# between the two sub-critical cases.

# %%
for m in (1.02, 1.1, 1.19, 1.2, 1.3, 1.6):
    spec = ProblemSpec(3, 1.0, 1.0, source=SourceSpec.power(1.0, 3 / (m + 0.05)), m=m)
    pred = classify_regime(spec)
    extra = f"sigma={pred.sigma:.4f}" if pred.sigma and pred.case_id.value == "Case1b" else ""
    print(f"m={m:4.2f}  {pred.case_id.value:<12s} {extra}")

# %% [markdown]
# Two exponents entering the lower-order estimates coincide algebraically;
# the identity linking them to m** is exact up to rounding.

# %%
t = exponent_table(4, 0.5, 0.75, 1.25)
print("delta, theta:", t.delta, t.theta)
print("identity gap:", (-0.5 + t.delta + 1) * t.two_star / 2 - t.m_double_star * (0.75 + 1 - 0.5))
print("m_hi conjugate times (p+1-gamma):", t.m_hi_conjugate * 0.75, "vs 2* =", t.two_star)
assert math.isclose(t.m_hi_conjugate * 0.75, t.two_star, rel_tol=1e-12)
