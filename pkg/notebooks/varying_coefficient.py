# %% [markdown]
# # Variable diffusion and a trainable inner layer
#
# -(D u')' + u = f with D = sin(pi x) + 2 and a chirped bump (cut off outside
# (-0.6, 0.6)) as the exact solution.  The bump oscillates up to about
# 360 rad per unit length, so a sin network only resolves it once its
# frequencies w ~ U(-S, S) reach that range.
#
# First the linear PINN: inner layer fixed, Gram system assembled by
# Gauss-Legendre quadrature and solved with the boundary as a constraint.

# %%
import numpy as np

from snnpde.activations import SIN, SamplingSpec, sample_layer
from snnpde.assembly import PINN, QuadratureSpec, assemble_varying
from snnpde.nonlinear import BUMP, TrainableSNN, TrainConfig, bump_problem, train_adam
from snnpde.solvers import solve_kkt_direct

problem = bump_problem()
x = np.linspace(-1, 1, 3000)
exact = BUMP(x)
quad = QuadratureSpec("gauss_legendre", 20000, 10)


def rel(v):
    return np.linalg.norm(v - exact) / np.linalg.norm(exact)


N = 100
for S in (1.0, 10.0, 50.0, 100.0, 200.0):
    errs = []
    for seed in range(3):
        layer = sample_layer(SamplingSpec("scaled_uniform", seed, S=S), N)
        sys = assemble_varying(layer, SIN, problem, PINN, quad)
        errs.append(rel(sys.evaluate(solve_kkt_direct(sys).a, x)))
    print(f"S={S:6.1f}  linear PINN rel L2 (seeds 0-2): " + " ".join(f"{e:.3e}" for e in errs))

# %% [markdown]
# Then Adam on all parameters with the boundary as a penalty (lambda = 250,
# 500 fixed uniform samples, learning rate 8e-4).  The run here is short;
# use ``epochs=20000`` for the full-length comparison.

# %%
epochs = 2000
for S in (float(N), 2.0 * N):
    net, hist = train_adam(TrainableSNN.initialize(N, S, seed=0), problem,
                           TrainConfig(epochs=epochs))
    print(f"S={S:6.1f}  Adam {epochs} epochs: loss {hist[0]:.3e} -> {hist[-1]:.3e}, "
          f"rel L2 {rel(net(x)):.3e}")
