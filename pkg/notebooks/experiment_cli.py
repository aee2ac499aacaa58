# %% [markdown]
# # Running a sweep from Python
#
# The same configs the ``snnpde`` command reads can be validated and run in
# process.  Outputs are ``<experiment>_raw.csv``, ``<experiment>_agg.csv`` and
# ``<experiment>_meta.json``.

# %%
import csv
import tempfile
from pathlib import Path

from snnpde.experiments import emit_plot_data, run_experiment, validate

cfg = validate({"experiment": "L2VsFrequency", "methods": ["DRM", "FEMsp"], "widths": [100],
                "frequencies": [5, 15, 25, 35, 45], "power": 2, "seeds": [0, 1, 2]})
out = Path(tempfile.mkdtemp())
records = run_experiment(cfg, out, workers=2)
print(sorted(p.name for p in out.iterdir()))

# %%
with open(out / "L2VsFrequency_agg.csv", newline="") as fh:
    for row in csv.DictReader(fh):
        print(row["method"], row["k_max"], row["rel_l2_median"])

# %% [markdown]
# A long-format table with one plotted value per row, ready for any plotting tool.

# %%
print(emit_plot_data(records, "L2VsFrequency")[:400])
