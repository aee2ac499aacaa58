# %% [markdown]
# # Gram spectra of ReLU^p layers
#
# For a layer with unit weights and evenly spaced biases, the mass matrix
# eigenvalues of ReLU^p decay like k^-(2p+2).  The fit below uses the indices
# between 10 and the last eigenvalue above the 1e-12 relative floor.

# %%
import numpy as np

from snnpde.closed_form import gram_matrix_relu
from snnpde.spectral import condition_scaling_check, eig_sym, fit_decay_slope

N = 1000
shifts = -1.0 + 2.0 * np.arange(N) / N
for p in (1, 2, 3):
    lam = eig_sym(gram_matrix_relu(p, 0, np.ones(N), shifts)).eigenvalues
    print(f"p={p}: slope {fit_decay_slope(lam):+.3f}, target {-(2 * p + 2)}")

# %% [markdown]
# Derivative Gram matrices (k > 0) decay more slowly, by 2k in the exponent.

# %%
for p, k in [(2, 1), (3, 1), (3, 2)]:
    lam = eig_sym(gram_matrix_relu(p, k, np.ones(N), shifts)).eigenvalues
    print(f"p={p}, k={k}: slope {fit_decay_slope(lam):+.3f}, target {-(2 * (p - k) + 2)}")

# %% [markdown]
# The condition number grows like N^(2+2(p-k)).  At p=3 the smallest
# eigenvalues hit the rounding floor, and the check reports that instead of
# returning a meaningless fit.

# %%
out = condition_scaling_check(1, 0, [50, 100, 200, 400])
print("kappa:", np.array(out.kappas), "exponent", round(out.slope, 3))
try:
    condition_scaling_check(3, 0, [50, 100, 200, 400])
except Exception as exc:
    print(type(exc).__name__, exc)
