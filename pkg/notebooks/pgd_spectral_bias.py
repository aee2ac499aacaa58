# %% [markdown]
# # Spectral bias of projected gradient descent
#
# Target sin(2 pi x) + sin(10 pi x), N = 200.  Gradient descent on the
# constrained quadratic picks up the slow (large-eigenvalue) directions first.
# For ReLU networks those are low frequencies; for B-splines, high ones.

# %%
import math

import numpy as np

from snnpde.activations import SamplingSpec, sample_layer
from snnpde.assembly import DRM, PINN, SineSolution, assemble_exact, assemble_femsp
from snnpde.solvers import PGDConfig, solve_pgd
from snnpde.spectral import rsl

sol = SineSolution.from_terms([(1.0, 2 * math.pi, 0.0), (1.0, 10 * math.pi, 0.0)])
layer = sample_layer(SamplingSpec("uniform_sign", 0), 200)
systems = {
    "PINN ReLU^3": assemble_exact(layer, 3, PINN, sol.forcing, sol.dirichlet()),
    "DRM ReLU^2": assemble_exact(layer, 2, DRM, sol.forcing, sol.dirichlet()),
    "FEM p=2": assemble_femsp(200, 2, sol.forcing, sol.dirichlet()),
}

# %%
for name, s in systems.items():
    out = solve_pgd(s, PGDConfig(T_max=10000, snapshot_every=2000))
    print(name)
    for it, a in out.snapshots:
        u = lambda x, a=a: s.evaluate(a, x)
        print(f"  iter {it:6d}  RSL(2pi)={rsl(u, sol, 2 * math.pi):8.3f}%"
              f"  RSL(10pi)={rsl(u, sol, 10 * math.pi):8.3f}%")
