"""Numerical counterparts of the test-function method and the weighted solution norms.

* :class:`SelfSimilarWeight` is ``g(t) = (1+t)^alpha``; with alpha from the
  coefficients it solves ``g'' - mu/(1+t) g' + (mu+nu_sq)/(1+t)^2 g = 0``.
* :func:`functional_scan` evaluates ``I = int int g1 psi |v|^p`` and
  ``J = int int g2 psi |u|^q`` with ``psi = eta(t/tau) phi(x/R)`` over stored
  simulation snapshots.
* :func:`xnorm_weights` forms the loss-adjusted weighted norms whose
  boundedness is what global existence asserts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import trapezoid
from scipy.interpolate import CubicSpline

from scalewave.cutoffs import CutoffPair
from scalewave.exponents import CoefficientPair, ExponentPair, SystemCoefficients, alpha as alpha_of, delta as delta_of
from scalewave.quadrature import panel_rule, sphere_area

ZERO_TOL = 1e-12


@dataclass(frozen=True)
class SelfSimilarWeight:
    alpha: float

    def g(self, t):
        return (1.0 + np.asarray(t, dtype=float)) ** self.alpha

    def dg(self, t):
        return self.alpha * (1.0 + np.asarray(t, dtype=float)) ** (self.alpha - 1)

    def d2g(self, t):
        a = self.alpha
        return a * (a - 1) * (1.0 + np.asarray(t, dtype=float)) ** (a - 2)


def weight_residual(alpha: float, mu: float, nu_sq: float, t_samples) -> float:
    """Max over samples of ``|g'' - mu/(1+t) g' + (mu+nu_sq)/(1+t)^2 g|`` relative to its largest term."""
    w = SelfSimilarWeight(float(alpha))
    t = np.asarray(t_samples, dtype=float)
    s = 1.0 + t
    terms = np.vstack([w.d2g(t), -mu / s * w.dg(t), (mu + nu_sq) / s**2 * w.g(t)])
    scale = np.max(np.abs(terms), axis=0)
    res = np.abs(terms.sum(axis=0))
    rel = np.where(scale > 0, res / np.where(scale > 0, scale, 1.0), 0.0)
    return float(rel.max()) if rel.size else 0.0


def derivative_bound_constants(cutoff: CutoffPair, r: float, samples: int = 10_000, margin: float = 1e-6) -> dict:
    """Measured constants in ``|eta'|, |eta''| <= C eta^{1/r}`` and ``|Δphi| <= C phi^{1/r}``.

    Samples the open transition band, staying ``margin`` away from its ends.
    """
    if r <= 1:
        raise ValueError("r must exceed 1")
    x = np.linspace(0.5 + margin, 1.0 - margin, samples)
    eta, d1, d2 = cutoff.eta_derivatives(x)
    phi = cutoff.phi(x)
    lap = cutoff.phi_laplacian(x)
    root_eta = eta ** (1.0 / r)
    root_phi = phi ** (1.0 / r)

    def ratio(num, den):
        ok = den > 0
        return float(np.max(np.abs(num[ok]) / den[ok])) if ok.any() else 0.0

    return {"eta_d1": ratio(d1, root_eta), "eta_d2": ratio(d2, root_eta), "phi_lap": ratio(lap, root_phi)}


def cutoff_invariants(cutoff: CutoffPair, samples: int = 10_000) -> dict[str, bool]:
    """Range, plateau, support and monotonicity of ``eta`` and ``phi`` on a sample grid."""
    x = np.linspace(0.0, 1.5, samples)
    out = {}
    for name, f in (("eta", cutoff.eta), ("phi", cutoff.phi)):
        y = f(x)
        out[f"{name}_range"] = bool(np.all((y >= 0) & (y <= 1)))
        out[f"{name}_plateau"] = bool(np.all(y[x <= 0.5] == 1.0))
        out[f"{name}_support"] = bool(np.all(y[x >= 1.0] == 0.0))
        out[f"{name}_monotone"] = bool(np.all(np.diff(y) <= 0))
    return out


# ---------------------------------------------------------------------------
# sign conditions


def _radial_integral(f, r, n: int) -> tuple[float, float]:
    """``int_{R^n} f dx`` for a radial profile with an error estimate.

    Trapezoid sums on ``r`` and on every other node are Richardson-combined;
    their difference bounds the discretization error (second order when the
    integrand ``f r^{n-1}`` is not even at the origin, as for even ``n``).
    """
    g = np.asarray(f, dtype=float) * r ** (n - 1)
    area = sphere_area(n)
    fine = trapezoid(g, r)
    if r.size < 5:
        return area * fine, abs(area * fine)
    coarse = trapezoid(g[::2], r[::2])
    if (r.size - 1) % 2:
        coarse += trapezoid(g[-2:], r[-2:])
    return area * (fine + (fine - coarse) / 3), area * abs(fine - coarse)


def _sign_constant(pair: CoefficientPair) -> float:
    d = float(delta_of(pair))
    if d < 0:
        raise ValueError("sign conditions need delta >= 0")
    return 0.5 * (pair.mu - 1 + math.sqrt(d))


def sign_integrals(r, u0, u1, v0, v1, coeffs: SystemCoefficients) -> tuple[float, float]:
    """``int (c1 u0 + u1) dx`` and ``int (c2 v0 + v1) dx`` with ``c_j = (mu_j - 1 + sqrt(delta_j))/2``.

    Radial profiles on ``r`` with the weight ``r^{n-1}`` and the sphere area applied.
    """
    r = np.asarray(r, dtype=float)
    vals = []
    for pair, a, b in ((coeffs.eq1, u0, u1), (coeffs.eq2, v0, v1)):
        f = _sign_constant(pair) * np.asarray(a, dtype=float) + np.asarray(b, dtype=float)
        vals.append(_radial_integral(f, r, coeffs.n)[0])
    return vals[0], vals[1]


def sign_conditions(r, u0, u1, v0, v1, coeffs: SystemCoefficients) -> tuple[bool, bool]:
    """Strict positivity of each sign integral.

    A value counts as zero when it lies within the quadrature error estimate
    or within ``1e-12`` of the integral of the absolute integrand.
    """
    r = np.asarray(r, dtype=float)
    out = []
    for pair, a, b in ((coeffs.eq1, u0, u1), (coeffs.eq2, v0, v1)):
        f = _sign_constant(pair) * np.asarray(a, dtype=float) + np.asarray(b, dtype=float)
        val, err = _radial_integral(f, r, coeffs.n)
        scale = _radial_integral(np.abs(f), r, coeffs.n)[0]
        out.append(bool(val > max(ZERO_TOL * scale, err)))
    return out[0], out[1]


# ---------------------------------------------------------------------------
# functionals


@dataclass(frozen=True)
class FunctionalSample:
    R: float
    tau: float
    I_val: float
    J_val: float


@dataclass(frozen=True)
class FunctionalScan:
    samples: tuple[FunctionalSample, ...]
    exponent_I: float
    exponent_J: float
    slopes_I: tuple[float, ...]
    slopes_J: tuple[float, ...]

    def as_dict(self) -> dict:
        return {
            "samples": [{"R": s.R, "tau": s.tau, "I": s.I_val, "J": s.J_val} for s in self.samples],
            "scaling_exponent_I": self.exponent_I,
            "scaling_exponent_J": self.exponent_J,
            "log_slopes_I": list(self.slopes_I),
            "log_slopes_J": list(self.slopes_J),
            "note": "asymptotic trend only; not a pass/fail quantity",
        }


def scaling_exponents(n: int, alphas: tuple[float, float], exps: ExponentPair) -> tuple[float, float]:
    """Exponents of ``R`` bounding ``I`` and ``J`` in the test-function argument."""
    p, q = exps.p, exps.q
    d = p * q - 1
    return (
        -2 * p * (q + 1) / d + n + alphas[0] + 1,
        -2 * q * (p + 1) / d + n + alphas[1] + 1,
    )


def _trapezoid_weights(t):
    t = np.asarray(t, dtype=float)
    w = np.zeros_like(t)
    if t.size > 1:
        dt = np.diff(t)
        w[:-1] += 0.5 * dt
        w[1:] += 0.5 * dt
    return w


def _space_rule(R: float, h: float, n: int, order: int = 8):
    panels = max(1, int(math.ceil(R / (4 * h))))
    x, w = panel_rule(np.linspace(0.0, R, panels + 1), order)
    return x, w * sphere_area(n) * x ** (n - 1)


def functional_integral(times, r, fields, power: float, alpha: float, n: int, R: float, tau: float,
                        cutoff: Optional[CutoffPair] = None) -> float:
    """``int_0^tau int_{|x|<R} (1+t)^alpha psi |field|^power dx dt`` on snapshot data.

    ``fields`` has one row per snapshot. ``cutoff=None`` uses indicator
    functions of ``[0, tau]`` and ``B_R``, which dominate the smooth cutoff
    termwise because both share the same nodes and nonnegative weights.
    """
    times = np.asarray(times, dtype=float)
    r = np.asarray(r, dtype=float)
    sel = times <= tau * (1 + 1e-12)
    ts = times[sel]
    if ts.size == 0:
        return 0.0
    h = r[1] - r[0]
    x, wx = _space_rule(R, h, n)
    vals = np.abs(CubicSpline(r, np.asarray(fields)[sel], axis=1)(x)) ** power
    wt = _trapezoid_weights(ts) * (1.0 + ts) ** alpha
    if cutoff is None:
        psi_t = np.ones_like(ts)
        psi_x = np.ones_like(x)
    else:
        psi_t = cutoff.eta(ts / tau)
        psi_x = cutoff.phi(x / R)
    return float(np.dot(wt * psi_t, vals @ (wx * psi_x)))


def functional_scan(
    trace,
    coeffs: SystemCoefficients,
    exps: ExponentPair,
    R_list: Sequence[float],
    *,
    tau_ratio: float = 1.0,
    smooth: bool = True,
) -> FunctionalScan:
    """``I`` and ``J`` for each ``R`` with ``tau = tau_ratio * R``, plus log-log trend slopes."""
    R_list = [float(R) for R in R_list]
    if any(b <= a for a, b in zip(R_list[:-1], R_list[1:])):
        raise ValueError("R_list must be strictly increasing")
    if tau_ratio <= 0:
        raise ValueError("tau_ratio must be positive")
    times = np.asarray(trace.snapshot_times, dtype=float)
    if times.size < 2:
        raise ValueError("trace holds no snapshots")
    grid = trace.grid
    a1, a2 = float(alpha_of(coeffs.eq1)), float(alpha_of(coeffs.eq2))
    cut = CutoffPair(coeffs.n) if smooth else None
    out = []
    for R in R_list:
        tau = tau_ratio * R
        if R > grid.L or tau > times[-1] * (1 + 1e-12):
            raise ValueError(f"R={R:g} (tau={tau:g}) exceeds snapshot coverage (t <= {times[-1]:g}, r <= {grid.L:g})")
        I = functional_integral(times, grid.r, trace.snapshots_v, exps.p, a1, coeffs.n, R, tau, cut)
        J = functional_integral(times, grid.r, trace.snapshots_u, exps.q, a2, coeffs.n, R, tau, cut)
        out.append(FunctionalSample(R, tau, I, J))
    eI, eJ = scaling_exponents(coeffs.n, (a1, a2), exps)
    return FunctionalScan(tuple(out), eI, eJ, _log_slopes(out, "I_val"), _log_slopes(out, "J_val"))


def _log_slopes(samples, attr) -> tuple[float, ...]:
    res = []
    for a, b in zip(samples[:-1], samples[1:]):
        ya, yb = getattr(a, attr), getattr(b, attr)
        if ya > 0 and yb > 0:
            res.append(math.log(yb / ya) / math.log(b.R / a.R))
        else:
            res.append(float("nan"))
    return tuple(res)


# ---------------------------------------------------------------------------
# weighted norms


@dataclass(frozen=True, eq=False)
class XNormSeries:
    times: np.ndarray
    weighted_u: np.ndarray
    weighted_v: np.ndarray

    def window(self, window: tuple[float, float]):
        sel = (self.times >= window[0]) & (self.times <= window[1])
        return self.times[sel], self.weighted_u[sel], self.weighted_v[sel]

    def sup(self, window: tuple[float, float]) -> tuple[float, float]:
        _, wu, wv = self.window(window)
        return float(wu.max()), float(wv.max())

    def sup_inf_ratio(self, window: tuple[float, float]) -> tuple[float, float]:
        _, wu, wv = self.window(window)
        if wu.size == 0:
            raise ValueError("window holds no samples")
        return float(wu.max() / wu.min()), float(wv.max() / wv.min())


def xnorm_weights(trace, alphas: tuple[float, float], gamma1: float, gamma2: float, n: int) -> XNormSeries:
    """``(1+t)^{-gamma_j} M_j(t)`` with ``M_1 = (1+t)^{n/2+alpha_1} (||(grad u, u_t)|| + (1+t)^{-1} ||u||)``.

    Trace energies are stored squared, so their square roots enter ``M_j``.
    """
    if getattr(trace, "blowup", None) is not None:
        raise ValueError("weighted norms are only meaningful on non-diverged traces")
    t = np.asarray(trace.times, dtype=float)
    s = 1.0 + t
    m1 = s ** (n / 2 + alphas[0]) * (np.sqrt(trace.energy_u) + trace.l2_u / s)
    m2 = s ** (n / 2 + alphas[1]) * (np.sqrt(trace.energy_v) + trace.l2_v / s)
    return XNormSeries(t, s ** (-gamma1) * m1, s ** (-gamma2) * m2)
