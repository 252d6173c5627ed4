"""Comparing the truncated-seminorm bound with two candidate constants.

For a linear function the left-hand side is known in closed form, so the
ratio lhs / rhs shows how sharp each constant is. The "stated" constant
R^{p(1-s)} / q^{p/q} is too small by a factor approaching C_{N,q}^{p/q};
the constant obtained by carrying the sphere area and the radial integral
through the estimate holds. Run with ``python demos/embedding_constant.py``.
"""

# %%
from bbmkit import Ball, QuadratureConfig, SeminormSpec, testfunctions as tf
from bbmkit.bbm import embedding_bound_check

disk = Ball((0.0, 0.0), 1.0)
quad = QuadratureConfig(threads=4)

# %%
print(f"{'s':>6} {'lhs':>10} {'rhs stated':>11} {'ratio':>7} {'rhs derived':>12} {'ratio':>7}")
for s in (0.5, 0.9, 0.99, 0.999):
    e = embedding_bound_check(tf.linear(), disk, SeminormSpec(s=s, p=2, q=2, tau=0.5, R=0.2, variant="hat"), quad)
    print(
        f"{s:6.3f} {e.lhs:10.5f} {e.rhs:11.5f} {e.lhs / e.rhs:7.3f} "
        f"{e.rhs_derived:12.5f} {e.lhs / e.rhs_derived:7.3f}"
    )

# %% [markdown]
# The first ratio creeps up to pi, which is C_{2,2}. The second stays below 1.
