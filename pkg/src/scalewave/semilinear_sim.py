"""Radial finite-difference simulation of the coupled semilinear system.

The pair

    u_tt - Δu + mu1/(1+t) u_t + nu1_sq/(1+t)^2 u = |v|^p
    v_tt - Δv + mu2/(1+t) v_t + nu2_sq/(1+t)^2 v = |u|^q

is discretized on a uniform radial grid ``r_i = i h`` with second-order
central differences (the axis row uses the even-extension limit ``n w_rr``)
and advanced with classical RK4. The domain is truncated at ``r = L`` and
runs stop before the light cone of the data reaches the boundary, so the
truncation never feeds back into the sampled window.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import integrate

from scalewave import _backend
from scalewave.cutoffs import plateau
from scalewave.exponents import DecayForecast, ExponentPair, RegimeVerdict, SystemCoefficients
from scalewave.linear_modes import DecayFit, fit_power_law
from scalewave.quadrature import sphere_area

DEFAULT_CFL = 0.5
DEFAULT_THRESHOLD_FACTOR = 1e8
DEFAULT_SLOPE_TOL = 0.25
FIELDS = ("u0", "u1", "v0", "v1")


# ---------------------------------------------------------------------------
# grid, state and data


@dataclass(frozen=True)
class RadialGrid:
    n: int
    L: float
    N: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.N < 64:
            raise ValueError("N must be >= 64")
        if not self.L > 0:
            raise ValueError("L must be positive")

    @property
    def h(self) -> float:
        return self.L / (self.N - 1)

    @property
    def r(self) -> np.ndarray:
        return np.arange(self.N) * self.h

    def buffer(self, cfl: float = DEFAULT_CFL) -> float:
        return 2.0 * self.h * math.ceil(1.0 / cfl)

    def lightcone_t_max(self, support: float, cfl: float = DEFAULT_CFL) -> float:
        return self.L - support - self.buffer(cfl)

    def l2(self, w) -> float:
        """``||w||_{L^2(R^n)}`` for a radial profile (trapezoid with weight ``r^{n-1}``)."""
        return math.sqrt(self.integrate(np.square(w)))

    def integrate(self, f) -> float:
        """``int_{R^n} f dx`` for a radial profile sampled on the grid."""
        r = self.r
        return sphere_area(self.n) * float(integrate.trapezoid(np.asarray(f) * r ** (self.n - 1), dx=self.h))

    def gradient(self, w) -> np.ndarray:
        g = np.gradient(np.asarray(w, dtype=float), self.h, edge_order=2)
        g[0] = 0.0
        return g

    def energy(self, w, wt) -> float:
        """Squared energy ``||(grad w, w_t)||^2``."""
        return self.integrate(np.square(self.gradient(w)) + np.square(wt))


@dataclass(eq=False)
class FieldPair:
    u: np.ndarray
    ut: np.ndarray
    v: np.ndarray
    vt: np.ndarray
    t: float = 0.0

    @classmethod
    def zeros(cls, grid: RadialGrid, t: float = 0.0) -> "FieldPair":
        z = np.zeros(grid.N)
        return cls(z.copy(), z.copy(), z.copy(), z.copy(), t)

    def stack(self) -> np.ndarray:
        return np.ascontiguousarray(np.vstack([self.u, self.ut, self.v, self.vt]), dtype=float)

    @classmethod
    def from_stack(cls, y: np.ndarray, t: float) -> "FieldPair":
        return cls(y[0].copy(), y[1].copy(), y[2].copy(), y[3].copy(), t)

    def swapped(self) -> "FieldPair":
        return FieldPair(self.v.copy(), self.vt.copy(), self.u.copy(), self.ut.copy(), self.t)

    def is_finite(self) -> bool:
        return all(np.isfinite(a).all() for a in (self.u, self.ut, self.v, self.vt))


class ProfileFamily(str, enum.Enum):
    BUMP = "Bump"
    GAUSSIAN_TRUNCATED = "Gaussian-truncated"


@dataclass(frozen=True)
class DataProfile:
    """Radial data shape placed on a subset of ``(u0, u1, v0, v1)``.

    ``Bump`` is ``exp(1 - 1/(1 - (r/R0)^2))``, equal to 1 at the origin.
    ``Gaussian-truncated`` is ``exp(-r^2 / (2 (R0/6)^2))`` multiplied by a
    smooth cutoff that switches off between ``R0/2`` and ``R0``.
    """

    family: ProfileFamily = ProfileFamily.BUMP
    amplitude: float = 1.0
    radius: float = 1.0
    assignment: tuple[str, ...] = FIELDS

    def __post_init__(self):
        object.__setattr__(self, "family", ProfileFamily(self.family))
        object.__setattr__(self, "assignment", tuple(self.assignment))
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        bad = [a for a in self.assignment if a not in FIELDS]
        if bad or not self.assignment:
            raise ValueError(f"assignment must be a nonempty subset of {FIELDS}, got {self.assignment}")
        if len(set(self.assignment)) != len(self.assignment):
            raise ValueError("assignment has repeated entries")

    def shape(self, r) -> np.ndarray:
        x = np.abs(np.asarray(r, dtype=float)) / self.radius
        if self.family is ProfileFamily.BUMP:
            out = np.zeros_like(x)
            inside = x < 1
            out[inside] = np.exp(1.0 - 1.0 / (1.0 - x[inside] ** 2))
            return out
        sigma = 1.0 / 6.0
        return np.exp(-x * x / (2 * sigma * sigma)) * plateau(x)

    def evaluate(self, r) -> np.ndarray:
        return self.amplitude * self.shape(r)

    def swapped(self) -> "DataProfile":
        flip = {"u0": "v0", "u1": "v1", "v0": "u0", "v1": "u1"}
        return DataProfile(self.family, self.amplitude, self.radius, tuple(flip[a] for a in self.assignment))


def initial_state(grid: RadialGrid, data: Sequence[DataProfile], t0: float = 0.0) -> FieldPair:
    state = FieldPair.zeros(grid, t0)
    target = {"u0": state.u, "u1": state.ut, "v0": state.v, "v1": state.vt}
    for prof in data:
        if prof.radius >= grid.L:
            raise ValueError("data support must lie inside the domain (R0 < L)")
        vals = prof.evaluate(grid.r)
        for name in prof.assignment:
            target[name] += vals
    return state


def support_radius(data: Sequence[DataProfile]) -> float:
    return max((p.radius for p in data), default=0.0)


# ---------------------------------------------------------------------------
# time stepping


def _advance(y, t0, step0, dt, nsteps, grid, coeffs, exps, nonlinear, threshold, backend=None):
    kern = _backend.get(backend)
    return kern.advance_fd(
        y, float(t0), int(step0), float(dt), int(nsteps), float(grid.h), int(grid.n),
        float(coeffs.eq1.mu), float(coeffs.eq1.nu_sq), float(coeffs.eq2.mu), float(coeffs.eq2.nu_sq),
        float(exps.p), float(exps.q), bool(nonlinear), float(threshold),
    )


def step(
    state: FieldPair,
    coeffs: SystemCoefficients,
    exps: ExponentPair,
    dt: float,
    grid: RadialGrid,
    *,
    cfl: float = DEFAULT_CFL,
    nonlinear: bool = True,
    threshold: float = math.inf,
    backend: Optional[str] = None,
) -> FieldPair:
    """One RK4 step; raises ``FloatingPointError`` if the result is non-finite or crosses ``threshold``."""
    if not 0 < dt <= cfl * grid.h * (1 + 1e-12):
        raise ValueError(f"dt must lie in (0, cfl*h] = (0, {cfl * grid.h:.6g}]")
    if not state.is_finite():
        raise ValueError("state must be finite")
    y = state.stack()
    if y.shape[1] != grid.N:
        raise ValueError("state does not match the grid")
    _, status = _advance(y, state.t, 0, dt, 1, grid, coeffs, exps, nonlinear, threshold, backend)
    if status:
        raise FloatingPointError("non-finite value" if status == 2 else "blow-up threshold crossed")
    return FieldPair.from_stack(y, state.t + dt)


@dataclass(frozen=True)
class BlowupRecord:
    t_detect: float
    reason: str


@dataclass(eq=False)
class SimulationTrace:
    times: np.ndarray
    l2_u: np.ndarray
    l2_v: np.ndarray
    linf_u: np.ndarray
    linf_v: np.ndarray
    energy_u: np.ndarray
    energy_v: np.ndarray
    blowup: Optional[BlowupRecord]
    lightcone_t_max: float
    grid: RadialGrid
    dt: float
    snapshot_times: np.ndarray = field(default_factory=lambda: np.zeros(0))
    snapshots_u: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    snapshots_v: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    final_state: Optional[FieldPair] = None

    COLUMNS = ("t", "l2_u", "l2_v", "linf_u", "linf_v", "energy_u", "energy_v")

    def rows(self):
        return zip(self.times, self.l2_u, self.l2_v, self.linf_u, self.linf_v, self.energy_u, self.energy_v)

    @property
    def diverged(self) -> bool:
        return self.blowup is not None

    def series(self, name: str) -> np.ndarray:
        if name not in self.COLUMNS[1:]:
            raise ValueError(f"unknown trace column {name!r}")
        return getattr(self, name)


def _sample(grid, y):
    u, ut, v, vt = y
    return (
        grid.l2(u), grid.l2(v), float(np.max(np.abs(u))), float(np.max(np.abs(v))),
        grid.energy(u, ut), grid.energy(v, vt),
    )


def run(
    grid: RadialGrid,
    coeffs: SystemCoefficients,
    exps: ExponentPair,
    data: Sequence[DataProfile],
    t_end: float,
    dt: Optional[float] = None,
    *,
    cfl: float = DEFAULT_CFL,
    sample_dt: Optional[float] = None,
    snapshot_dt: Optional[float] = None,
    nonlinear: bool = True,
    threshold_factor: float = DEFAULT_THRESHOLD_FACTOR,
    keep_final: bool = False,
    backend: Optional[str] = None,
) -> SimulationTrace:
    """Integrate from t = 0 to ``t_end`` and record norms every ``sample_dt``.

    ``dt`` defaults to ``cfl * h`` and is shrunk so that an integer number of
    steps lands on ``t_end``; sample and snapshot cadences are rounded to
    whole steps. Runs stop at the first threshold crossing or non-finite
    value, recorded in ``blowup``.
    """
    if grid.n != coeffs.n:
        raise ValueError(f"grid dimension {grid.n} differs from coefficient dimension {coeffs.n}")
    lc = grid.lightcone_t_max(support_radius(data), cfl)
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    if t_end > lc + 1e-12:
        raise ValueError(f"t_end={t_end:g} exceeds the light-cone guard {lc:g} (L - R0 - buffer)")
    dt_max = cfl * grid.h
    if dt is None:
        dt = dt_max
    if not 0 < dt <= dt_max * (1 + 1e-12):
        raise ValueError(f"dt must lie in (0, cfl*h] = (0, {dt_max:.6g}]")
    total = int(math.ceil(t_end / dt - 1e-9))
    dt = t_end / total
    sample_dt = sample_dt if sample_dt is not None else max(dt, t_end / 500)
    every = max(1, int(round(sample_dt / dt)))
    snap_every = max(1, int(round(snapshot_dt / dt))) if snapshot_dt else 0

    state = initial_state(grid, data)
    y = state.stack()
    amp = float(np.max(np.abs(y))) if y.size else 0.0
    threshold = threshold_factor * amp if amp > 0 else math.inf

    times, rows, snaps_t, snaps_u, snaps_v = [], [], [], [], []
    blowup = None
    done = 0

    def record(k):
        times.append(k * dt)
        rows.append(_sample(grid, y))

    record(0)
    if snap_every:
        snaps_t.append(0.0)
        snaps_u.append(y[0].copy())
        snaps_v.append(y[2].copy())
    while done < total:
        nxt = min(total, (done // every + 1) * every)
        if snap_every:
            nxt = min(nxt, (done // snap_every + 1) * snap_every)
        steps, status = _advance(y, 0.0, done, dt, nxt - done, grid, coeffs, exps, nonlinear, threshold, backend)
        done += steps
        if status:
            blowup = BlowupRecord(done * dt, "non-finite value" if status == 2 else "threshold crossed")
            break
        if done % every == 0 or done == total:
            record(done)
        if snap_every and done % snap_every == 0:
            snaps_t.append(done * dt)
            snaps_u.append(y[0].copy())
            snaps_v.append(y[2].copy())

    cols = np.array(rows, dtype=float).reshape(-1, 6)
    trace = SimulationTrace(
        np.array(times), *cols.T, blowup=blowup, lightcone_t_max=lc, grid=grid, dt=dt,
    )
    if snap_every:
        trace.snapshot_times = np.array(snaps_t)
        trace.snapshots_u = np.array(snaps_u)
        trace.snapshots_v = np.array(snaps_v)
    if keep_final:
        trace.final_state = FieldPair.from_stack(y, done * dt)
    return trace


# ---------------------------------------------------------------------------
# forecast check


@dataclass(frozen=True)
class SlopeCheck:
    name: str
    measured: float
    predicted: float
    r_squared: float
    gating: bool
    tol: float

    @property
    def deviation(self) -> float:
        return abs(self.measured - self.predicted)

    @property
    def passed(self) -> bool:
        return self.deviation <= self.tol

    def as_dict(self) -> dict:
        return {
            "name": self.name, "measured": self.measured, "predicted": self.predicted,
            "deviation": self.deviation, "r_squared": self.r_squared, "gating": self.gating,
            "tol": self.tol, "passed": self.passed,
        }


@dataclass(frozen=True)
class ForecastReport:
    window: tuple[float, float]
    checks: tuple[SlopeCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if c.gating)

    def check(self, name: str) -> SlopeCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def as_dict(self) -> dict:
        return {"window": list(self.window), "passed": self.passed, "checks": [c.as_dict() for c in self.checks]}


def fit_trace(trace: SimulationTrace, window: tuple[float, float], name: str) -> DecayFit:
    """Slope of a trace column; squared energies are fitted as norms (half the slope)."""
    fit = fit_power_law(trace.times, trace.series(name), window, t_lo_min=1.0)
    if name.startswith("energy"):
        return DecayFit(0.5 * fit.slope, 0.5 * fit.intercept, fit.r_squared, fit.samples)
    return fit


def check_forecast(
    trace: SimulationTrace,
    verdict_or_forecast,
    window: tuple[float, float],
    slope_tol: float = DEFAULT_SLOPE_TOL,
) -> ForecastReport:
    """Compare fitted ``L^2`` slopes (gating) and energy slopes (informational) to the forecast."""
    if isinstance(verdict_or_forecast, RegimeVerdict):
        if not verdict_or_forecast.kind.is_global or verdict_or_forecast.forecast is None:
            raise ValueError(f"no decay forecast for verdict {verdict_or_forecast.kind.value}")
        fc = verdict_or_forecast.forecast
    elif isinstance(verdict_or_forecast, DecayForecast):
        fc = verdict_or_forecast
    else:
        raise TypeError("expected a RegimeVerdict or DecayForecast")
    if trace.diverged:
        raise ValueError("cannot check a decay forecast on a diverged trace")
    t_lo, t_hi = window
    if t_lo < 5:
        raise ValueError("forecast window must start at t >= 5")
    if t_hi > trace.lightcone_t_max + 1e-9:
        raise ValueError("forecast window extends past the light-cone guard")
    spec = (
        ("l2_u", fc.rate_u_l2, True), ("l2_v", fc.rate_v_l2, True),
        ("energy_u", fc.rate_u_energy, False), ("energy_v", fc.rate_v_energy, False),
    )
    checks = []
    for name, pred, gating in spec:
        fit = fit_trace(trace, window, name)
        checks.append(SlopeCheck(name, fit.slope, float(pred), fit.r_squared, gating, slope_tol))
    return ForecastReport((float(t_lo), float(t_hi)), tuple(checks))


# ---------------------------------------------------------------------------
# references and numerical studies


def dalembert_mu2(prof0, prof1, r, t: float):
    """Exact ``n = 1, mu = 2, nu = 0`` linear solution for even data.

    ``w = (1+t) u`` solves the free wave with ``w(0) = u0``, ``w_t(0) = u0 + u1``,
    so d'Alembert on the even extension gives ``w`` and hence ``u``.
    """
    r = np.asarray(r, dtype=float)

    def f0(x):
        return float(prof0(abs(x))) if prof0 is not None else 0.0

    def f1(x):
        a = float(prof0(abs(x))) if prof0 is not None else 0.0
        b = float(prof1(abs(x))) if prof1 is not None else 0.0
        return a + b

    out = np.empty_like(r)
    for i, x in enumerate(r):
        avg = 0.5 * (f0(x + t) + f0(x - t))
        integral, _ = integrate.quad(f1, x - t, x + t, epsabs=1e-14, epsrel=1e-12, limit=200)
        out[i] = (avg + 0.5 * integral) / (1 + t)
    return out


def solve_linear(grid: RadialGrid, coeffs: SystemCoefficients, data, t_end: float, dt: Optional[float] = None,
                 cfl: float = DEFAULT_CFL, backend: Optional[str] = None) -> FieldPair:
    """Linear run (no source terms, no light-cone guard) returning the state at ``t_end``."""
    state = initial_state(grid, data)
    y = state.stack()
    dt = cfl * grid.h if dt is None else dt
    total = int(math.ceil(t_end / dt - 1e-9))
    dt = t_end / total
    _, status = _advance(y, 0.0, 0, dt, total, grid, coeffs, ExponentPair(2.0, 2.0), False, math.inf, backend)
    if status:
        raise FloatingPointError("linear run produced non-finite values")
    return FieldPair.from_stack(y, t_end)


def three_grid_order(coeffs: SystemCoefficients, data, L: float, N: int, t_end: float,
                     cfl: float = DEFAULT_CFL, backend: Optional[str] = None) -> float:
    """Observed spatial order from grids with ``N``, ``2N-1`` and ``4N-3`` nodes.

    All three share the coarse nodes, and ``dt`` scales with ``h`` so the
    fourth-order time error is negligible next to the spatial one.
    """
    sols = []
    for k in (1, 2, 4):
        g = RadialGrid(coeffs.n, L, k * (N - 1) + 1)
        sols.append(solve_linear(g, coeffs, data, t_end, cfl=cfl, backend=backend).u[::k])
    e1 = np.max(np.abs(sols[0] - sols[1]))
    e2 = np.max(np.abs(sols[1] - sols[2]))
    return math.log2(e1 / e2)
