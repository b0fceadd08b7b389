"""
Equilibria and noise-driven regimes
===================================

The deterministic model has a globally stable interior equilibrium. Adding
multiplicative noise can push one or both species to extinction, and the
regime is decided by the sign of ``r_i - alpha_i**2 / 2``.
"""

# %%
from mutualism_sde import classify, equilibria, figure1_params, persistence_limits

p = figure1_params("a")
eq = equilibria(p)
print("boundary equilibria:", eq.e2, eq.e3)
print("interior equilibrium:", eq.e_star, "residual", eq.residual)

# %%
# The four noise settings of the reference figure and their predicted fate.
for panel in "abcd":
    q = figure1_params(panel)
    c = classify(q)
    print(panel, (q.alpha1, q.alpha2), c.tag.value, [round(m, 4) for m in c.margins])

# %%
# Long-run time averages: lower bounds when both persist, exact limits once
# the partner is gone.
for panel in "cd":
    print(panel, persistence_limits(figure1_params(panel)))
