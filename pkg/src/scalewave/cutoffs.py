"""Smooth transition functions and the cutoff pair used by the test-function diagnostics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit


def smoothstep(x):
    """C-infinity step: 0 for x <= 0, 1 for x >= 1, ``f(x)/(f(x)+f(1-x))`` with ``f = exp(-1/x)``."""
    x = np.asarray(x, dtype=float)
    out = np.where(x >= 1.0, 1.0, 0.0)
    mid = (x > 0) & (x < 1)
    xm = x[mid]
    out[mid] = expit(1.0 / (1.0 - xm) - 1.0 / xm)
    return out


def smoothstep_derivatives(x):
    """``(S, S', S'')`` evaluated analytically; the derivatives vanish outside (0, 1)."""
    x = np.asarray(x, dtype=float)
    s = smoothstep(x)
    d1 = np.zeros_like(s)
    d2 = np.zeros_like(s)
    mid = (x > 0) & (x < 1)
    xm, sm = x[mid], s[mid]
    z1 = 1.0 / (1.0 - xm) ** 2 + 1.0 / xm**2
    z2 = 2.0 / (1.0 - xm) ** 3 - 2.0 / xm**3
    g = sm * (1.0 - sm)
    d1[mid] = g * z1
    d2[mid] = g * (1.0 - 2.0 * sm) * z1 * z1 + g * z2
    return s, d1, d2


def plateau(x, inner: float = 0.5, outer: float = 1.0):
    """1 on ``[0, inner]``, 0 beyond ``outer``, smooth and nonincreasing between."""
    x = np.asarray(x, dtype=float)
    return smoothstep((outer - x) / (outer - inner))


@dataclass(frozen=True)
class CutoffPair:
    """Time cutoff ``eta`` and radial space cutoff ``phi``.

    Both equal 1 up to 1/2 and vanish from 1 on; the transition is the
    C-infinity smoothstep ``eta(t) = S(2 - 2t)``, so every derivative is
    continuous across both ends of the band.
    """

    n: int = 1

    def eta(self, t):
        return plateau(t)

    def eta_derivatives(self, t):
        s, d1, d2 = smoothstep_derivatives(2.0 - 2.0 * np.asarray(t, dtype=float))
        return s, -2.0 * d1, 4.0 * d2

    def phi(self, r):
        return plateau(np.abs(r))

    def phi_laplacian(self, r):
        """``phi'' + (n-1)/r phi'`` for the radial profile; zero where phi is constant."""
        r = np.abs(np.asarray(r, dtype=float))
        _, d1, d2 = self.eta_derivatives(r)
        out = d2.copy()
        band = r > 0
        out[band] += (self.n - 1) / r[band] * d1[band]
        return out

    def psi(self, t, r, tau: float, R: float):
        """``eta(t/tau) phi(r/R)`` on the outer product of ``t`` and ``r``."""
        return np.outer(self.eta(np.asarray(t, dtype=float) / tau), self.phi(np.asarray(r, dtype=float) / R))
