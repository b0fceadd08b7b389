"""
Strong convergence on the geometric Brownian motion reduction
=============================================================

Dropping the interaction and damping terms leaves two independent geometric
Brownian motions with a known solution. Refining one Brownian path shows the
expected orders: about 1/2 for Euler-Maruyama and 1 for Milstein, while the
log-transformed scheme is exact up to rounding.
"""

# %%
from mutualism_sde import figure1_params, strong_convergence

study = strong_convergence(figure1_params("d", alpha1=1.0, alpha2=1.0), n_paths=50)

# %%
print(f"{'dt':>10} {'milstein':>12} {'euler':>12}")
for dt, em, ee in zip(study.dts, study.errors["milstein"], study.errors["euler"]):
    print(f"{dt:10.2e} {em:12.3e} {ee:12.3e}")
print("slopes:", study.slopes)
print("log-Euler relative error:", study.log_euler_rel_error)
