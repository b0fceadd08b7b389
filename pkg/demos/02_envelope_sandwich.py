"""
Stochastic logistic envelopes
=============================

Each density is trapped between two stochastic logistic processes driven by
the same Brownian path. Both envelopes have closed forms, so a numerical
trajectory can be checked against them step by step.
"""

# %%
import numpy as np

from mutualism_sde import build_envelopes, check_sandwich, figure1_params, generate, simulate

p = figure1_params("d")
path = generate(seed=3, stream_id=0, dt=1e-3, n_steps=10_000)
traj = simulate(p, "milstein", path)
env = build_envelopes(p, path)

# %%
for k in (0, 1000, 5000, 10_000):
    print(f"t={path.times[k]:5.1f}  {env.lam_lo[k]:.4f} <= x={traj.xs[k]:.4f} <= {env.lam_hi[k]:.4f}")

# %%
print(check_sandwich(traj, env, rel_tol=1e-2).as_dict())

# %%
# With strong noise and a coarse grid the scheme itself can leave the band;
# the envelopes are exact, the discretisation is not.
loud = figure1_params("b")
coarse = generate(seed=3, stream_id=0, dt=1e-2, n_steps=1000)
report = check_sandwich(simulate(loud, "milstein", coarse), build_envelopes(loud, coarse), 1e-1)
print("coarse, loud:", report.passed, np.round([report.max_violation_x, report.max_violation_y], 4))
