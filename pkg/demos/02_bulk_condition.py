"""Third-order structure functions of lacunary fields on either side of alpha = 1/3.

S3(y)/|y| scales like |y|^(3 alpha - 1): it blows up for rough fields and
vanishes for smoother ones.  The verdict uses the fitted slope over a dyadic
ladder of node offsets.  On this coarse grid only six octaves fit below the
Nyquist limit, the offsets reach scales where the truncated sum looks smooth,
and every slope is pushed up by 0.3 to 0.4.  The ordering in alpha survives but
the verdicts stay inconclusive; the acceptance test uses 264 nodes per period
and eight octaves.

    python demos/02_bulk_condition.py
"""
import math

from oflux.field_core import Grid3, TimeSeries
from oflux.structure import bulk_condition_study
from oflux.synth_fields import gen_lacunary

grid = Grid3(128, 128, 64, 2 * math.pi)
directions = [(1, 0, 0), (0, 1, 0), (0, 0, 1)]

for alpha in (0.25, 0.4, 0.6):
    u = TimeSeries.steady(gen_lacunary(alpha, 6, 0, grid), [0.0])
    rep = bulk_condition_study(u, directions, 4)
    slopes = "  ".join(f"{d} {v:+.3f}" for d, v in rep.slope.items())
    print(f"alpha = {alpha:.2f}  target {3 * alpha - 1:+.2f}  {slopes}  -> {rep.verdict}")
