"""The detector separates Sobolev functions from functions with jumps.

A smooth function gives scaled values that plateau. The indicator of a
half-plane does not: for p = q = 2 the layer next to the jump is not even
integrable once s > 1/2. Run with ``python demos/detector_dichotomy.py``.
"""

# %%
from bbmkit import Ball, Box, QuadratureConfig, SeminormSpec, testfunctions as tf
from bbmkit.bbm import main2_detector

quad = QuadratureConfig(threads=4)
square = Box((-0.5, -0.5), (0.5, 0.5))
disk = Ball((0.0, 0.0), 1.0)


def show(title, rep):
    print(f"\n{title}: {rep.verdict} (growth {rep.growth_factor:.3g})")
    for s, v, r in zip(rep.s_values, rep.values, rep.resolved_values):
        print(f"  s={s:.6f}  value={v:<12.6g} resolved={r:.6g}")


# %%
show("smooth bump, p=q=2", main2_detector(tf.gaussian_bump(), disk, SeminormSpec(s=0.5), quad=quad))

# %%
jump = tf.halfspace_indicator()
show("half-plane indicator, p=q=2", main2_detector(jump, square, SeminormSpec(s=0.5, p=2, q=2), quad=quad))

# %% [markdown]
# With p = q = 1 the same jump is a BV function. The values level off
# near K(2,1,1) times the length of the jump.

# %%
show("half-plane indicator, p=q=1", main2_detector(jump, square, SeminormSpec(s=0.5, p=1, q=1), quad=quad))
