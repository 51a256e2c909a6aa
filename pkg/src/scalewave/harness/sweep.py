"""(p, q)-plane sweeps: classification, optional simulation, agreement bookkeeping."""

from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

from scalewave.exponents import (
    ExponentPair,
    RegimeKind,
    RegimeVerdict,
    SystemCoefficients,
    classify,
    conjectured_strauss_region,
)
from scalewave.semilinear_sim import (
    DataProfile,
    RadialGrid,
    SimulationTrace,
    check_forecast,
    fit_trace,
    run,
    support_radius,
)


class NumericOutcome(str, enum.Enum):
    DIVERGED = "Diverged"
    DECAYED_AT_FORECAST = "DecayedAtForecast"
    DECAYED_OFF_FORECAST = "DecayedOffForecast"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class SimPlan:
    """Everything a worker needs to simulate one cell (picklable)."""

    L: float
    N: int
    cfl: float
    t_end: Optional[float]
    sample_dt: float
    window: tuple[float, float]
    threshold_factor: float
    slope_tol: float
    band: float
    data_small: tuple[DataProfile, ...]
    data_large: tuple[DataProfile, ...]

    def data_for(self, verdict: RegimeVerdict) -> tuple[DataProfile, ...]:
        # blow-up forecasts are tested with large data, global ones with small data
        return self.data_large if verdict.kind is RegimeKind.BLOW_UP else self.data_small


@dataclass(frozen=True)
class CellOutcome:
    outcome: NumericOutcome
    detail: str
    t_blowup: Optional[float]
    slope_u: Optional[float]
    slope_v: Optional[float]


@dataclass(frozen=True)
class SweepCell:
    index: int
    p: float
    q: float
    verdict: Optional[RegimeVerdict]
    conjecture: Optional[bool]
    numeric: Optional[CellOutcome]
    agreement: Optional[bool]
    error: Optional[str]

    COLUMNS = (
        "index", "p", "q", "kind", "f1", "f2", "max_f", "p_tilde", "q_tilde", "gamma", "gamma_bar",
        "blowup_branch", "notes", "conjecture_strauss", "numeric_outcome", "agreement", "t_blowup",
        "slope_l2_u", "slope_l2_v", "detail", "error",
    )

    def row(self) -> list:
        v = self.verdict
        nm = self.numeric
        return [
            self.index, self.p, self.q,
            v.kind.value if v else None,
            v.f1 if v else None, v.f2 if v else None, v.max_f if v else None,
            v.derived.p_tilde if v else None, v.derived.q_tilde if v else None,
            v.gamma if v else None, v.gamma_bar if v else None,
            v.blowup_branch if v else None,
            "; ".join(v.admissibility_notes) if v else None,
            self.conjecture,
            nm.outcome.value if nm else None,
            "n/a" if self.agreement is None else self.agreement,
            nm.t_blowup if nm else None,
            nm.slope_u if nm else None,
            nm.slope_v if nm else None,
            nm.detail if nm else None,
            self.error,
        ]


def agreement(verdict: RegimeVerdict, outcome: NumericOutcome) -> Optional[bool]:
    """``None`` unless both sides are conclusive; BlowUp pairs with Diverged, Global* with DecayedAtForecast."""
    if verdict.kind is RegimeKind.UNDETERMINED or outcome is NumericOutcome.INCONCLUSIVE:
        return None
    if verdict.kind is RegimeKind.BLOW_UP:
        return outcome is NumericOutcome.DIVERGED
    return outcome is NumericOutcome.DECAYED_AT_FORECAST


def sim_t_end(plan: SimPlan, grid: RadialGrid, data) -> float:
    lc = grid.lightcone_t_max(support_radius(data), plan.cfl)
    t_end = plan.t_end if plan.t_end is not None else plan.window[1]
    if t_end > lc + 1e-12:
        raise ValueError(f"simulation t_end {t_end:g} exceeds the light-cone guard {lc:g}")
    if plan.window[1] > t_end + 1e-12:
        raise ValueError(f"fit window ends at {plan.window[1]:g}, after t_end {t_end:g}")
    return t_end


def judge(trace: SimulationTrace, verdict: RegimeVerdict, plan: SimPlan) -> CellOutcome:
    """Turn a finished run into a numeric outcome under the near-boundary policy."""
    near = abs(verdict.max_f) < plan.band
    if trace.diverged:
        b = trace.blowup
        detail = f"{b.reason} at t={b.t_detect:.6g}"
        if near:
            return CellOutcome(NumericOutcome.INCONCLUSIVE, "near critical curve; " + detail, b.t_detect, None, None)
        return CellOutcome(NumericOutcome.DIVERGED, detail, b.t_detect, None, None)
    su = fit_trace(trace, plan.window, "l2_u").slope
    sv = fit_trace(trace, plan.window, "l2_v").slope
    detail = f"no divergence up to t={trace.times[-1]:.6g}"
    if near:
        return CellOutcome(NumericOutcome.INCONCLUSIVE, "near critical curve; " + detail, None, su, sv)
    if verdict.forecast is not None:
        rep = check_forecast(trace, verdict, plan.window, plan.slope_tol)
        kind = NumericOutcome.DECAYED_AT_FORECAST if rep.passed else NumericOutcome.DECAYED_OFF_FORECAST
        return CellOutcome(kind, detail, None, su, sv)
    if su < 0 and sv < 0:
        return CellOutcome(NumericOutcome.DECAYED_OFF_FORECAST, detail + "; decaying without a forecast", None, su, sv)
    return CellOutcome(NumericOutcome.INCONCLUSIVE, detail + "; no decay forecast", None, su, sv)


def simulate_cell(coeffs: SystemCoefficients, exps: ExponentPair, verdict: RegimeVerdict, plan: SimPlan):
    data = plan.data_for(verdict)
    grid = RadialGrid(coeffs.n, plan.L, plan.N)
    t_end = sim_t_end(plan, grid, data)
    trace = run(grid, coeffs, exps, data, t_end, cfl=plan.cfl, sample_dt=plan.sample_dt,
                threshold_factor=plan.threshold_factor)
    return trace, judge(trace, verdict, plan)


def _cell_task(args) -> SweepCell:
    index, p, q, coeffs, exact, epsilon, plan = args
    verdict = conj = numeric = agree = err = None
    try:
        exps = ExponentPair(p, q)
        verdict = classify(coeffs, exps, exact=exact, epsilon=epsilon)
        conj = conjectured_strauss_region(coeffs, exps)
        if plan is not None:
            _, numeric = simulate_cell(coeffs, exps, verdict, plan)
            agree = agreement(verdict, numeric.outcome)
    except (ValueError, ArithmeticError, FloatingPointError) as exc:
        err = f"{type(exc).__name__}: {exc}"
    return SweepCell(index, p, q, verdict, conj, numeric, agree, err)


def cell_points(p_values: Sequence[float], q_values: Sequence[float]) -> list[tuple[int, float, float]]:
    """Row-major enumeration: q rows (ascending), p columns (ascending) within each row."""
    out = []
    for q in q_values:
        for p in p_values:
            out.append((len(out), float(p), float(q)))
    return out


def run_sweep(
    coeffs: SystemCoefficients,
    p_values: Sequence[float],
    q_values: Sequence[float],
    *,
    exact: bool = False,
    epsilon: float = 1e-3,
    plan: Optional[SimPlan] = None,
    jobs: int = 1,
) -> list[SweepCell]:
    """All cells, in row-major order whatever the degree of parallelism."""
    tasks = [(i, p, q, coeffs, exact, epsilon, plan) for i, p, q in cell_points(p_values, q_values)]
    results: list[Optional[SweepCell]] = [None] * len(tasks)
    if jobs <= 1 or len(tasks) <= 1:
        for t in tasks:
            results[t[0]] = _cell_task(t)
    else:
        chunk = 1 if plan is not None else max(1, math.ceil(len(tasks) / (4 * jobs)))
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for cell in pool.map(_cell_task, tasks, chunksize=chunk):
                results[cell.index] = cell
    return results  # type: ignore[return-value]


def summarize(cells: Sequence[SweepCell]) -> dict:
    kinds: dict[str, int] = {}
    outcomes: dict[str, int] = {}
    agree = disagree = na = errors = 0
    for c in cells:
        if c.error:
            errors += 1
        if c.verdict is not None:
            kinds[c.verdict.kind.value] = kinds.get(c.verdict.kind.value, 0) + 1
        if c.numeric is not None:
            outcomes[c.numeric.outcome.value] = outcomes.get(c.numeric.outcome.value, 0) + 1
        if c.agreement is True:
            agree += 1
        elif c.agreement is False:
            disagree += 1
        else:
            na += 1
    return {
        "cells": len(cells), "verdicts": dict(sorted(kinds.items())), "numeric_outcomes": dict(sorted(outcomes.items())),
        "agreement": {"agree": agree, "disagree": disagree, "not_applicable": na}, "errors": errors,
    }
