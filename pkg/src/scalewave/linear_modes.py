"""Linear scale-invariant wave equation, one Fourier mode at a time.

For radial data the Fourier transform turns

    u_tt - Δu + mu/(1+t) u_t + nu_sq/(1+t)^2 u = 0

into an independent ODE per frequency rho,

    v'' + mu/(1+t) v' + (rho^2 + nu_sq/(1+t)^2) v = 0,

which we integrate with an adaptive Dormand-Prince pair. Norms follow from
Plancherel with the unitary transform, so

    ||u||^2 = |S^{n-1}| * int |u_hat|^2 rho^{n-1} drho.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from scipy import integrate as spi, special

from scalewave import _backend
from scalewave.exponents import CoefficientPair, alpha as alpha_of
from scalewave.quadrature import graded_breaks, panel_rule, sphere_area

DEFAULT_TOL = 1e-10
DEFAULT_TAIL = 1e-8
PANEL_ORDER = 16
SERIES_CUTOFF = 1e-4


class ModeIntegrationError(RuntimeError):
    """Raised when some modes fail (step-size underflow or step budget exhausted)."""

    def __init__(self, failures: list[tuple[float, str]]):
        self.failures = failures
        head = ", ".join(f"rho={r:.6g} ({why})" for r, why in failures[:5])
        more = f" and {len(failures) - 5} more" if len(failures) > 5 else ""
        super().__init__(f"{len(failures)} mode(s) failed: {head}{more}")


# ---------------------------------------------------------------------------
# analytic data families


@dataclass(frozen=True)
class GaussianData:
    """``amplitude * exp(-r^2 / (2 sigma^2))``; transforms to ``amplitude * sigma^n exp(-sigma^2 rho^2 / 2)``."""

    amplitude: float = 1.0
    sigma: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    def profile(self, r):
        return self.amplitude * np.exp(-np.square(r) / (2 * self.sigma**2))

    def dprofile(self, r):
        return -np.asarray(r) / self.sigma**2 * self.profile(r)

    def hat(self, rho, n: int):
        return self.amplitude * self.sigma**n * np.exp(-0.5 * np.square(self.sigma * np.asarray(rho, dtype=float)))

    def l2_norm(self, n: int) -> float:
        return abs(self.amplitude) * (math.pi * self.sigma**2) ** (n / 4)

    def l1_norm(self, n: int) -> float:
        return abs(self.amplitude) * (2 * math.pi * self.sigma**2) ** (n / 2)

    def rho_cut(self, n: int, tail: float, kappa: int) -> float:
        # tail of exp(-sigma^2 rho^2) rho^{n-1+2 kappa} is a regularized upper incomplete gamma
        return math.sqrt(special.gammainccinv(n / 2 + kappa, tail)) / self.sigma


@dataclass(frozen=True)
class PolynomialBump:
    """``amplitude * (1 - (r/radius)^2)_+^k``, compactly supported.

    The transform is ``amplitude * radius^n * 2^k k! x^{-nu} J_nu(x)`` with
    ``x = radius * rho`` and ``nu = n/2 + k``.
    """

    amplitude: float = 1.0
    radius: float = 1.0
    k: int = 4

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if int(self.k) != self.k or self.k < 2:
            raise ValueError("k must be an integer >= 2 (H^1 data with a summable tail)")

    def profile(self, r):
        x = np.clip(1.0 - np.square(np.asarray(r, dtype=float) / self.radius), 0.0, None)
        return self.amplitude * x**self.k

    def dprofile(self, r):
        r = np.asarray(r, dtype=float)
        x = np.clip(1.0 - np.square(r / self.radius), 0.0, None)
        return self.amplitude * self.k * x ** (self.k - 1) * (-2.0 * r / self.radius**2)

    def hat(self, rho, n: int):
        nu = n / 2 + self.k
        x = self.radius * np.asarray(rho, dtype=float)
        return self.amplitude * self.radius**n * 2.0**self.k * math.gamma(self.k + 1) * _bessel_ratio(nu, x)

    def l2_norm(self, n: int) -> float:
        beta = special.beta(n / 2, 2 * self.k + 1)
        return abs(self.amplitude) * math.sqrt(self.radius**n * sphere_area(n) * beta / 2)

    def l1_norm(self, n: int) -> float:
        return abs(self.amplitude) * self.radius**n * sphere_area(n) * special.beta(n / 2, self.k + 1) / 2

    def rho_cut(self, n: int, tail: float, kappa: int) -> float:
        return _numeric_rho_cut(self, n, tail, kappa, self.radius)


DataFamily = Union[GaussianData, PolynomialBump]


def _bessel_ratio(nu: float, x):
    """``x^{-nu} J_nu(x)``, with a series near 0."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = np.abs(x) < 1e-2
    xs = x[small]
    c0 = 1.0 / (2.0**nu * special.gamma(nu + 1))
    x2 = xs * xs
    out[small] = c0 * (1 - x2 / (4 * (nu + 1)) + x2 * x2 / (32 * (nu + 1) * (nu + 2)))
    xl = x[~small]
    out[~small] = special.jv(nu, xl) / xl**nu
    return out


def _numeric_rho_cut(fam, n: int, tail: float, kappa: int, scale: float) -> float:
    """Smallest rho beyond which the spectral tail is below ``tail`` of the total.

    The total comes from the physical side (Plancherel), the partial integral
    from a fine Gauss rule, so no tail extrapolation is needed.
    """
    f = fam.dprofile if kappa else fam.profile
    total, _ = spi.quad(lambda r: float(f(r)) ** 2 * r ** (n - 1), 0.0, scale, epsabs=0, epsrel=1e-13, limit=200)
    total *= sphere_area(n)
    if total == 0:
        return 1.0 / scale
    width = 0.25 / scale
    lo, acc = 0.0, 0.0
    c = sphere_area(n)
    while True:
        nodes, w = panel_rule([lo, lo + width], PANEL_ORDER)
        piece = c * np.sum(w * np.abs(fam.hat(nodes, n)) ** 2 * nodes ** (n - 1 + 2 * kappa))
        acc += piece
        lo += width
        if total - acc <= tail * total:
            return lo
        if lo * scale > 1e5:
            raise ValueError("spectral tail criterion not met below rho = 1e5 / scale")


# ---------------------------------------------------------------------------
# spectrum and states


@dataclass(frozen=True, eq=False)
class RadialSpectrum:
    """Fourier-side radial data on a composite Gauss-Legendre grid.

    ``weights`` already include the radial measure ``rho^{n-1}``.
    """

    n: int
    rho: np.ndarray
    weights: np.ndarray
    u0_hat: np.ndarray
    u1_hat: np.ndarray
    rho_max: float = 0.0
    u0: Optional[DataFamily] = None
    u1: Optional[DataFamily] = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.rho.ndim != 1 or not (self.rho.shape == self.weights.shape == self.u0_hat.shape == self.u1_hat.shape):
            raise ValueError("rho, weights and amplitudes must be 1-d arrays of equal length")
        if self.rho.size and (np.any(np.diff(self.rho) <= 0) or self.rho[0] < 0):
            raise ValueError("rho must be nonnegative and strictly increasing")
        if np.any(self.weights <= 0):
            raise ValueError("quadrature weights must be positive")

    @property
    def size(self) -> int:
        return self.rho.size

    @classmethod
    def build(
        cls,
        n: int,
        u0: Optional[DataFamily] = None,
        u1: Optional[DataFamily] = None,
        *,
        t_max: float = 1.0,
        tail: float = DEFAULT_TAIL,
        refine: float = 1.0,
        order: int = PANEL_ORDER,
    ) -> "RadialSpectrum":
        """Grid resolving both data tails (``L^2`` and ``H^1`` weights) and oscillations up to ``t_max``.

        ``refine`` divides every panel width, so ``refine=2`` doubles the node density.
        """
        if n < 1:
            raise ValueError("n must be >= 1")
        if not 0 < tail < 1:
            raise ValueError("tail must lie in (0, 1)")
        fams = [f for f in (u0, u1) if f is not None]
        if fams:
            rho_max = max(f.rho_cut(n, tail, kappa) for f in fams for kappa in (0, 1))
        else:
            rho_max = 1.0
        # |u_hat(t)|^2 oscillates like cos(2 rho t); one period per panel
        width = min(0.25, math.pi / max(t_max, 1.0)) / refine
        breaks = graded_breaks(rho_max, width, grade_to=min(1.0, rho_max))
        nodes, w = panel_rule(breaks, order)
        w = w * nodes ** (n - 1)
        keep = w > 0
        nodes, w = nodes[keep], w[keep]
        zero = np.zeros(nodes.size)
        a0 = u0.hat(nodes, n) if u0 is not None else zero
        a1 = u1.hat(nodes, n) if u1 is not None else zero
        return cls(n, nodes, w, a0.astype(complex), a1.astype(complex), rho_max, u0, u1)

    def with_data(self, u0_hat=None, u1_hat=None) -> "RadialSpectrum":
        return RadialSpectrum(
            self.n, self.rho, self.weights,
            self.u0_hat if u0_hat is None else np.asarray(u0_hat, dtype=complex),
            self.u1_hat if u1_hat is None else np.asarray(u1_hat, dtype=complex),
            self.rho_max, None, None,
        )

    def subset(self, idx) -> "RadialSpectrum":
        return RadialSpectrum(
            self.n, self.rho[idx], self.weights[idx], self.u0_hat[idx], self.u1_hat[idx], self.rho_max, self.u0, self.u1
        )


@dataclass(frozen=True, eq=False)
class ModeState:
    t: float
    v: np.ndarray
    vdot: np.ndarray


@dataclass(frozen=True, eq=False)
class NormSeries:
    times: np.ndarray
    l2: np.ndarray
    hdot1: np.ndarray
    ut_l2: np.ndarray

    def component(self, name: str) -> np.ndarray:
        if name not in ("l2", "hdot1", "ut_l2"):
            raise ValueError(f"unknown norm component {name!r}")
        return getattr(self, name)

    def rows(self):
        return zip(self.times, self.l2, self.hdot1, self.ut_l2)


@dataclass(frozen=True)
class DecayFit:
    slope: float
    intercept: float
    r_squared: float
    samples: int


# ---------------------------------------------------------------------------
# evolution


def _initial_step(rho, coeffs: CoefficientPair, s: float):
    rate = np.maximum(1.0, np.maximum(rho, (coeffs.mu + math.sqrt(coeffs.nu_sq)) / (1.0 + s)))
    return 0.02 / rate


def _mode_atol(rho, v0, vd0, tol):
    mag = np.maximum(np.maximum(np.abs(v0), np.abs(vd0)), rho * np.abs(v0))
    return tol * np.where(mag > 0, mag, 1.0)


def integrate(
    spectrum: RadialSpectrum,
    coeffs: CoefficientPair,
    s: float,
    t_grid: Sequence[float],
    tol: float = DEFAULT_TOL,
    *,
    backend: Optional[str] = None,
    jobs: int = 1,
    max_steps: int = 10_000_000,
) -> tuple[np.ndarray, np.ndarray]:
    """Raw mode matrices ``(V, VD)`` of shape ``(modes, len(t_grid))``.

    Modes are split into contiguous chunks for ``jobs > 1``; every mode runs
    its own step-size control, so the result does not depend on ``jobs``.
    """
    t_grid = np.ascontiguousarray(t_grid, dtype=float)
    if not s >= 0:
        raise ValueError("start time s must be >= 0")
    if t_grid.size == 0:
        raise ValueError("t_grid must be nonempty")
    if np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be strictly increasing")
    if t_grid[0] < s:
        raise ValueError("t_grid must start at or after s")
    if not 0 < tol <= 1e-3:
        raise ValueError("tol must lie in (0, 1e-3]")
    kern = _backend.get(backend)
    rho = np.ascontiguousarray(spectrum.rho, dtype=float)
    v0 = np.ascontiguousarray(spectrum.u0_hat, dtype=complex)
    vd0 = np.ascontiguousarray(spectrum.u1_hat, dtype=complex)
    atol = np.ascontiguousarray(_mode_atol(rho, v0, vd0, tol))
    h0 = np.ascontiguousarray(_initial_step(rho, coeffs, s))

    def run(sl):
        return kern.integrate_modes(
            rho[sl], v0[sl], vd0[sl], float(coeffs.mu), float(coeffs.nu_sq), float(s), t_grid,
            float(tol), atol[sl], h0[sl], int(max_steps),
        )

    m = rho.size
    jobs = max(1, min(int(jobs), m or 1))
    bounds = np.linspace(0, m, jobs + 1).astype(int)
    slices = [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:])]
    if jobs == 1:
        parts = [run(sl) for sl in slices]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(run, slices))
    V = np.concatenate([p[0] for p in parts]) if parts else np.zeros((0, t_grid.size), complex)
    VD = np.concatenate([p[1] for p in parts]) if parts else np.zeros((0, t_grid.size), complex)
    status = np.concatenate([p[2] for p in parts]) if parts else np.zeros(0, int)
    bad = np.flatnonzero(status)
    if bad.size:
        why = {1: "step-size underflow", 2: "step budget exhausted"}
        raise ModeIntegrationError([(float(rho[i]), why.get(int(status[i]), "failed")) for i in bad])
    return V, VD


def evolve(
    spectrum: RadialSpectrum,
    coeffs: CoefficientPair,
    s: float,
    t_grid: Sequence[float],
    tol: float = DEFAULT_TOL,
    **kwargs,
) -> list[ModeState]:
    """Mode states at each time of ``t_grid`` (see :func:`integrate` for options)."""
    V, VD = integrate(spectrum, coeffs, s, t_grid, tol, **kwargs)
    return [ModeState(float(t), V[:, j].copy(), VD[:, j].copy()) for j, t in enumerate(np.asarray(t_grid, float))]


def norms(states: Sequence[ModeState], spectrum: RadialSpectrum) -> NormSeries:
    """``L^2``, ``H^1``-seminorm and ``||u_t||`` via Plancherel on the stored quadrature."""
    if not states:
        raise ValueError("states must be nonempty")
    c = sphere_area(spectrum.n)
    w, rho2 = spectrum.weights, spectrum.rho**2
    times, l2, h1, ut = [], [], [], []
    for st in states:
        if st.v.shape != spectrum.rho.shape:
            raise ValueError("state does not match the spectrum grid")
        a = np.abs(st.v) ** 2
        times.append(st.t)
        l2.append(math.sqrt(c * np.dot(w, a)))
        h1.append(math.sqrt(c * np.dot(w, rho2 * a)))
        ut.append(math.sqrt(c * np.dot(w, np.abs(st.vdot) ** 2)))
    return NormSeries(np.array(times), np.array(l2), np.array(h1), np.array(ut))


def fit_power_law(times, values, window: tuple[float, float], *, min_samples: int = 10, t_lo_min: float = 1.0) -> DecayFit:
    """Least-squares slope of ``log(value)`` against ``log(1+t)`` inside ``window``."""
    t_lo, t_hi = window
    if t_lo < t_lo_min:
        raise ValueError(f"window must start at t >= {t_lo_min}")
    if t_hi <= t_lo:
        raise ValueError("window must have t_hi > t_lo")
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    sel = (times >= t_lo) & (times <= t_hi)
    if sel.sum() < min_samples:
        raise ValueError(f"window holds {int(sel.sum())} samples, need at least {min_samples}")
    y = values[sel]
    if np.any(y <= 0) or not np.all(np.isfinite(y)):
        raise ValueError("window contains zero, negative or non-finite norm values")
    x = np.log1p(times[sel])
    ly = np.log(y)
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, icpt), *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - (slope * x + icpt)
    ss_tot = np.sum((ly - ly.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
    return DecayFit(float(slope), float(icpt), float(r2), int(sel.sum()))


def fit_decay(series: NormSeries, window: tuple[float, float], component: str = "l2") -> DecayFit:
    return fit_power_law(series.times, series.component(component), window)


def predicted_rates(n: int, coeffs: CoefficientPair) -> dict[str, float]:
    """Linear decay exponents ``-kappa - n/2 - alpha + 1`` for kappa = 0 and 1."""
    a = float(alpha_of(coeffs))
    base = -(n / 2) - a + 1
    return {"l2": base, "hdot1": base - 1, "ut_l2": base - 1}


# ---------------------------------------------------------------------------
# closed-form references


def mu2_oracle(rho, u0_hat, u1_hat, t, s: float = 0.0):
    """Exact modes for ``mu = 2, nu = 0``: ``w = (1+t) u`` solves the free wave.

    Returns ``(v, vdot)`` at time ``t`` for data prescribed at ``s``.
    """
    rho = np.asarray(rho, dtype=float)
    u0_hat = np.asarray(u0_hat, dtype=complex)
    u1_hat = np.asarray(u1_hat, dtype=complex)
    w0 = (1 + s) * u0_hat
    w1 = u0_hat + (1 + s) * u1_hat
    d = t - s
    x = rho * d
    small = np.abs(x) < SERIES_CUTOFF
    xs = np.where(small, 1.0, x)
    # sin(rho d)/rho and its derivative in t, with series below the cutoff
    sinc_d = np.where(small, d * (1 - x * x / 6 + x**4 / 120), np.sin(xs) / np.where(small, 1.0, rho))
    cos_x = np.cos(x)
    w = cos_x * w0 + sinc_d * w1
    wd = -rho * np.sin(x) * w0 + cos_x * w1
    v = w / (1 + t)
    vd = wd / (1 + t) - w / (1 + t) ** 2
    return v, vd


def zero_mode_oracle(u0_hat, u1_hat, mu: float, t, s: float = 0.0):
    """Exact ``rho = 0`` mode for ``nu = 0``."""
    if mu == 1:
        g = math.log((1 + t) / (1 + s))
    else:
        g = ((1 + t) ** (1 - mu) - (1 + s) ** (1 - mu)) / (1 - mu)
    g *= (1 + s) ** mu
    v = u0_hat + u1_hat * g
    vd = u1_hat * ((1 + s) / (1 + t)) ** mu
    return v, vd


# ---------------------------------------------------------------------------
# delayed start


@dataclass(frozen=True)
class DelayedStartReport:
    s: float
    T: float
    ratio: float
    bound: float
    alpha: float

    @property
    def within_bound(self) -> bool:
        return self.ratio <= self.bound


def delayed_start_gain(
    spectrum: RadialSpectrum,
    coeffs: CoefficientPair,
    s: float,
    T: float,
    tol: float = DEFAULT_TOL,
    **kwargs,
) -> DelayedStartReport:
    """Ratio of ``||u(T)||`` started at ``s`` to the same data started at 0.

    Only ``u_1`` may be nonzero. The reported bound,
    ``(1+s)^alpha * (1 + (1+s)^{n/2} ||u1||_2 / ||u1||_1)``, is the growth
    allowed by the delayed-start estimate (up to constants) and is a
    diagnostic, not an equality.
    """
    if np.any(spectrum.u0_hat != 0):
        raise ValueError("delayed_start_gain requires u0 = 0")
    if not 0 <= s < T:
        raise ValueError("need 0 <= s < T")
    late = norms(evolve(spectrum, coeffs, s, [T], tol, **kwargs), spectrum).l2[0]
    early = norms(evolve(spectrum, coeffs, 0.0, [T], tol, **kwargs), spectrum).l2[0]
    a = float(alpha_of(coeffs))
    n = spectrum.n
    fam = spectrum.u1
    if fam is not None and fam.l1_norm(n) > 0:
        shape = fam.l2_norm(n) / fam.l1_norm(n)
        bound = (1 + s) ** a * (1 + (1 + s) ** (n / 2) * shape) / (1 + shape)
    else:
        bound = math.inf
    ratio = late / early if early > 0 else (1.0 if late == 0 else math.inf)
    return DelayedStartReport(float(s), float(T), float(ratio), float(bound), a)


def growth_exponent(reports: Sequence[DelayedStartReport]) -> float:
    """Slope of ``log ratio`` against ``log(1+s)`` across a sweep of start times."""
    s = np.array([r.s for r in reports])
    y = np.array([r.ratio for r in reports])
    if s.size < 2:
        raise ValueError("need at least two start times")
    slope, _ = np.polyfit(np.log1p(s), np.log(y), 1)
    return float(slope)
