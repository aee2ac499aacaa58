# %% [markdown]
# # Truncated and regularised solves
#
# A two-mode target sin(2 pi x + phi) + sin(25 pi x + psi) is solved with a
# PINN (ReLU^3), a DRM (ReLU^2) and quadratic B-splines.  Dropping small
# singular values of the constrained system removes the high-frequency mode
# first for the networks and the low-frequency mode first for splines.

# %%
import math

import numpy as np

from snnpde.activations import SamplingSpec, sample_layer
from snnpde.assembly import DRM, PINN, SineSolution, assemble_exact, assemble_femsp
from snnpde.solvers import (RegularizedSolveSpec, TruncatedSVDSpec, kkt_eigh,
                            solve_regularized, solve_truncated_svd)
from snnpde.spectral import relative_l2_error, rsl

sol = SineSolution.two_mode(25, 4 * math.pi / 5, -3 * math.pi / 4)
layer = sample_layer(SamplingSpec("uniform_sign", 0), 400)
systems = {
    "PINN ReLU^3": assemble_exact(layer, 3, PINN, sol.forcing, sol.dirichlet()),
    "DRM ReLU^2": assemble_exact(layer, 2, DRM, sol.forcing, sol.dirichlet()),
    "FEM p=2": assemble_femsp(400, 2, sol.forcing, sol.dirichlet()),
}

# %%
eps_grid = np.logspace(-14, -1, 14)
for name, s in systems.items():
    eig = kkt_eigh(s)
    print(name)
    for eps in eps_grid:
        a = solve_truncated_svd(s, TruncatedSVDSpec(eps), eig).a
        u = lambda x, a=a, s=s: s.evaluate(a, x)
        print(f"  eps={eps:8.1e}  RSL(2pi)={rsl(u, sol, 2 * math.pi):7.2f}%"
              f"  RSL(25pi)={rsl(u, sol, 25 * math.pi):7.2f}%")

# %% [markdown]
# Penalising the boundary instead of enforcing it: the PINN error is almost
# flat in lambda, while DRM needs lambda in a narrow range.

# %%
sol = SineSolution.two_mode(25)
layer = sample_layer(SamplingSpec("uniform_sign", 0), 300)
for form in (PINN, DRM):
    s = assemble_exact(layer, 3, form, sol.forcing, sol.dirichlet())
    errs = []
    for lam in np.logspace(0, 4, 9):
        a = solve_regularized(s, RegularizedSolveSpec(lam, "lu")).a
        errs.append(relative_l2_error(lambda x, a=a: s.evaluate(a, x), sol))
    print(form, " ".join(f"{e:.2e}" for e in errs))
