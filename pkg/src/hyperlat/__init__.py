"""Counting, exact sampling and limit laws for lattice points under elementary
symmetric polynomials."""

from .counting import (BudgetExceeded, RegionSpec, asymptotic_count, count, count_completions,
                       count_constrained, count_scaled, count_with_divisibility, divisor_count)
from .limits import (LimitModel, ProductLimitLaw, VolumeEstimate, gcd_limit_mellin, gcd_limit_pmf,
                     lcm_ratio_moment, u_cdf, volume, x_star, zeta)
from .sampling import Sampler, SamplerConfig, make_rng, sample, sample_batch
from .sympoly import PrefixCoefficients, eval_elem_sym, min_value, next_coord_bound

__version__ = "0.1.0"

__all__ = [
    "BudgetExceeded", "LimitModel", "PrefixCoefficients", "ProductLimitLaw", "RegionSpec", "Sampler",
    "SamplerConfig", "VolumeEstimate", "asymptotic_count", "count", "count_completions",
    "count_constrained", "count_scaled", "count_with_divisibility", "divisor_count", "eval_elem_sym",
    "gcd_limit_mellin", "gcd_limit_pmf", "lcm_ratio_moment", "make_rng", "min_value", "next_coord_bound",
    "sample", "sample_batch", "u_cdf", "volume", "x_star", "zeta",
]
