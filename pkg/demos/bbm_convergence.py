"""Watching (1-s) times the fractional seminorm approach K * |f|_{W^{1,p}}^p.

Run with ``python demos/bbm_convergence.py``. Takes about half a minute.
"""

# %%
import numpy as np

from bbmkit import Ball, QuadratureConfig, SeminormSpec, bbm_constant, testfunctions as tf
from bbmkit.bbm import convergence_study, default_s_sequence

disk = Ball((0.0, 0.0), 1.0)
quad = QuadratureConfig(threads=4)

# %% [markdown]
# A Gaussian bump on the unit disk. The seminorm blows up like 1/(1-s),
# and after rescaling the values settle onto a finite limit.

# %%
f = tf.gaussian_bump()
report = convergence_study(f, disk, SeminormSpec(s=0.5, p=2, q=2, tau=0.5), default_s_sequence(), quad)

print(f"{'s':>12} {'raw':>14} {'scaled':>12}")
for s, raw, scaled in zip(report.s_values, report.raw_values, report.scaled_values):
    print(f"{s:12.9f} {raw:14.6g} {scaled:12.8f}")

# %%
print("extrapolated limit :", report.extrapolated_limit)
print("K * int |grad f|^2 :", report.reference)
print("relative error     :", report.relative_error)
print("verdict            :", report.verdict)

# %% [markdown]
# The constant itself comes from a moment of the unit sphere.

# %%
for dim, p, q in [(1, 2, 2), (2, 2, 2), (3, 2, 2), (2, 3, 2), (2, 2, 3)]:
    print(f"K({dim},{p},{q}) = {bbm_constant(dim, p, q):.12f}")
print("pi/2        =", np.pi / 2)
