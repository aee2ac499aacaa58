# %% [markdown]
# # Natural Neumann data
#
# With Neumann data the solution is defined up to a constant, so errors are
# measured after removing the mean.  DRM takes the flux data through the load
# vector and needs no constraint rows.

# %%
import math

import numpy as np

from snnpde.activations import SamplingSpec, sample_layer
from snnpde.assembly import DRM, SineSolution, assemble_exact
from snnpde.solvers import solve_kkt_direct, solve_neumann

x = np.linspace(-1, 1, 3000)
layer = sample_layer(SamplingSpec("uniform_sign", 0), 300)


def centred_error(v, u):
    return np.linalg.norm((v - v.mean()) - (u - u.mean())) / np.linalg.norm(u - u.mean())


# %%
for k in (5, 15, 25):
    sol = SineSolution.two_mode(k, math.pi / 5, math.pi / 3)
    s = assemble_exact(layer, 2, DRM, sol.forcing, sol.dirichlet())
    dl, dr = sol.neumann()
    e_d = centred_error(s.evaluate(solve_kkt_direct(s).a, x), sol(x))
    e_n = centred_error(s.evaluate(solve_neumann(s, dc_left=dl, dc_right=dr).a, x), sol(x))
    print(f"k_max={k:2d}  Dirichlet {e_d:.3e}  Neumann {e_n:.3e}")
