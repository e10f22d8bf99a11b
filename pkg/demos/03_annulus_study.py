# %% [markdown]
# Annulus with circumferential anisotropy
#
# A ring 0.5 <= r <= 1, one element thick in z, with the tensor rotated so
# that the strong direction follows the angle. u = 1 on the inner rim,
# u = 0 on the outer rim, unit source.
#
# The default coarse limit is 5000 unknowns. On the 20 x 150 x 1 mesh
# (6300 nodes) the hierarchy has two levels; lowering the limit gives
# deeper hierarchies.

# %%
from matamg import AmgConfig
from matamg.bench import ProblemSpec, run_case

# %%
for max_coarse in (5000, 500):
    for kappa in (1.0, 1e4):
        for theta in (0.05, 0.1):
            rec = run_case(ProblemSpec("annulus", kappa=kappa),
                           AmgConfig(theta=theta, max_coarse_size=max_coarse))
            print(f"max_coarse={max_coarse:5d} kappa={kappa:6.0e} theta={theta:<5} "
                  f"iters={rec.iterations:4d} levels={rec.levels} op.cx={rec.operator_complexity:.2f}")

# %% [markdown]
# The rotation can be built two ways. "circumferential" puts the first
# principal axis along the tangent; "printed" uses the transposed-sign
# variant. Both are symmetric positive definite.

# %%
for frame in ("circumferential", "printed"):
    rec = run_case(ProblemSpec("annulus", kappa=1e4, frame=frame), AmgConfig(theta=0.1))
    print(f"{frame:>15}: iters={rec.iterations} op.cx={rec.operator_complexity:.2f}")
