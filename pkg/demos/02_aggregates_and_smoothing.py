# %% [markdown]
# What the aggregates look like, and why
#
# On the strongly anisotropic half the error left after Jacobi is smooth
# along x only. Good aggregates should therefore be lines in x there,
# and never straddle the material interface.

# %%
import numpy as np

from matamg import aggregate, drop_pointwise, soc_material_dlap, symmetrize_mask, two_domain_problem
from matamg.bench import jacobi_error_demo, slice_total_variation
from matamg.strength import AuxiliaryData

p = two_domain_problem(16, 1e4)
aux = AuxiliaryData(p.coords, p.node_materials)
mask = symmetrize_mask(drop_pointwise(soc_material_dlap(p.A, aux), 0.08))
agg = aggregate(mask, excluded=p.dirichlet)
print(p.n, "nodes ->", agg.n_aggregates, "aggregates")

# %%
# Crude ASCII picture: one letter per aggregate, '.' for Dirichlet nodes.
x, y = p.coords[:, 0], p.coords[:, 1]
xs, ys = np.unique(x), np.unique(y)
glyphs = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789"
grid = [["." for _ in xs] for _ in ys]
for i, a in enumerate(agg.node_to_aggregate):
    if a >= 0:
        grid[np.searchsorted(ys, y[i])][np.searchsorted(xs, x[i])] = glyphs[a % len(glyphs)]
print("\n".join(" ".join(row) for row in reversed(grid)))

# %% [markdown]
# Left of x = 0 the aggregates are compact blobs. Right of it they are
# horizontal strips.
#
# Next, damped Jacobi on a random error. Track the total variation of the
# error along a vertical line in each half.

# %%
p = two_domain_problem(32, 1e4)
for k in (0, 1, 3, 10, 30):
    e = jacobi_error_demo(p, k, seed=0)
    left = slice_total_variation(p.coords, e, -0.5)
    right = slice_total_variation(p.coords, e, 0.5)
    print(f"k={k:3d}  TV(x=-0.5)={left:7.3f}  TV(x=+0.5)={right:7.3f}")

# %%
# The left column flattens quickly. The right column stays rough in y,
# which is exactly the component the x-strips have to handle.
