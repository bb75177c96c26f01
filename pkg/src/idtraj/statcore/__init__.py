"""Distribution kernel, links, splines, monotone interpolation and copulas."""

from .copulas import KINDS, copula_transform, reorder_to_copula, repair_correlation
from .hyman import MonotoneCdf, hyman_monotone_spline
from .links import (
    link_g1,
    link_g1_inverse,
    link_g2,
    link_g2_derivative,
    link_g2_inverse,
    link_g3,
    link_g3_inverse,
)
from .rng import make_rng, substream
from .splines import bspline_basis, equispaced_knots, pspline_penalty
from .tdist import (
    ZeroInflatedTParams,
    t3_cdf,
    t3_density,
    t3_logpdf,
    t3_quantile,
    t3_sample,
    t3_scale,
    zit_sample,
)
