"""Composite Gauss-Legendre rules on [0, b] for radial integrals."""

import math

import numpy as np
from numpy.polynomial.legendre import leggauss


def sphere_area(n: int) -> float:
    """Surface measure of the unit sphere in R^n (2 for n=1)."""
    return 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)


def panel_rule(breaks, order: int = 16):
    """Nodes and weights of a Gauss-Legendre rule on each interval of ``breaks``."""
    breaks = np.asarray(breaks, dtype=float)
    if breaks.ndim != 1 or breaks.size < 2 or np.any(np.diff(breaks) <= 0):
        raise ValueError("breaks must be a strictly increasing sequence of length >= 2")
    x, w = leggauss(order)
    a, b = breaks[:-1, None], breaks[1:, None]
    half = 0.5 * (b - a)
    nodes = (a + half * (x + 1.0)).ravel()
    weights = (half * w).ravel()
    return nodes, weights


def graded_breaks(b: float, width: float, grade_to: float = 1.0, levels: int = 24) -> np.ndarray:
    """Breakpoints on [0, b]: geometric toward 0 below ``grade_to``, uniform of ``width`` above.

    The geometric part resolves the narrow low-frequency peak that carries the
    long-time norm; the uniform part resolves oscillations of period ~``width``.
    """
    if b <= 0 or width <= 0:
        raise ValueError("b and width must be positive")
    g = min(grade_to, b)
    coarse = [0.0] + list(g * 0.5 ** np.arange(levels, 0, -1)) + [g]
    pieces = [np.array([0.0])]
    for lo, hi in zip(coarse[:-1], coarse[1:]):
        pieces.append(_split(lo, hi, width))
    if b > g:
        pieces.append(_split(g, b, width))
    out = np.concatenate(pieces)
    out[-1] = b
    return out


def _split(lo: float, hi: float, width: float) -> np.ndarray:
    """Interior and right endpoints of ``[lo, hi]`` cut into panels no wider than ``width``."""
    k = max(1, int(math.ceil((hi - lo) / width - 1e-12)))
    return lo + (hi - lo) * np.arange(1, k + 1) / k
