"""Goodness-of-fit statistics used by the experiment gates."""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np
from scipy import stats as _st


def ks_statistic(samples: Sequence[float], cdf: Callable) -> float:
    """``sup_x |F_m(x) - F(x)|`` for a continuous reference CDF.

    ``cdf`` may be vectorized; it is evaluated once at the sorted sample.
    """
    x = np.sort(np.asarray(samples, dtype=np.float64))
    m = len(x)
    if m == 0:
        raise ValueError("need at least one sample")
    try:
        F = np.asarray(cdf(x), dtype=np.float64)
        if F.shape != x.shape:
            raise TypeError
    except (TypeError, ValueError):
        F = np.array([cdf(float(t)) for t in x])
    i = np.arange(1, m + 1)
    return float(max((i / m - F).max(), (F - (i - 1) / m).max()))


def ks_statistic_grid(samples: Sequence[float], grid: Sequence[float], cdf_values: Sequence[float]) -> float:
    """KS distance restricted to ``grid`` (a lower bound on the full supremum)."""
    x = np.sort(np.asarray(samples, dtype=np.float64))
    emp = np.searchsorted(x, np.asarray(grid, dtype=np.float64), side="right") / len(x)
    return float(np.abs(emp - np.asarray(cdf_values, dtype=np.float64)).max())


def ks_critical_value(m: int, alpha: float = 1e-3) -> float:
    """Asymptotic Kolmogorov critical distance for sample size ``m``."""
    return float(_st.kstwobign.isf(alpha)) / math.sqrt(m)


def chi_square(observed: Sequence[float], expected: Sequence[float], ddof: int = 0) -> tuple[float, float]:
    """Pearson statistic and its p-value (``len - 1 - ddof`` degrees of freedom).

    Expected totals are rescaled to the observed total.
    """
    o = np.asarray(observed, dtype=np.float64)
    e = np.asarray(expected, dtype=np.float64)
    if o.shape != e.shape or len(o) < 2:
        raise ValueError("need matching arrays with at least two cells")
    if (e <= 0).any():
        raise ValueError("expected counts must be positive")
    e = e * (o.sum() / e.sum())
    stat = float(((o - e) ** 2 / e).sum())
    return stat, float(_st.chi2.sf(stat, len(o) - 1 - ddof))


def chi_square_two_sample(a: Sequence[float], b: Sequence[float]) -> tuple[float, float]:
    """Homogeneity test of two count vectors over the same cells."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    keep = (a + b) > 0
    a, b = a[keep], b[keep]
    na, nb = a.sum(), b.sum()
    tot = a + b
    ea, eb = tot * na / (na + nb), tot * nb / (na + nb)
    stat = float(((a - ea) ** 2 / ea).sum() + ((b - eb) ** 2 / eb).sum())
    return stat, float(_st.chi2.sf(stat, len(a) - 1))


def merge_cells(expected: np.ndarray, minimum: float = 5.0) -> np.ndarray:
    """Cell labels grouping consecutive cells until each group expects ``>= minimum``."""
    labels = np.empty(len(expected), dtype=np.int64)
    g, acc = 0, 0.0
    for i, e in enumerate(expected):
        labels[i] = g
        acc += e
        if acc >= minimum:
            g += 1
            acc = 0.0
    if acc and g:
        labels[labels == g] = g - 1  # fold a short final group into its neighbour
    return labels
