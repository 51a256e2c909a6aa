"""Command-line interface.

Exit codes: 0 success, 1 configuration error, 2 numeric failure,
3 disagreement between a forecast and the numerics.
"""

from __future__ import annotations

import math

import click
import numpy as np

from scalewave import _backend
from scalewave.cutoffs import CutoffPair
from scalewave.diagnostics import (
    cutoff_invariants,
    derivative_bound_constants,
    functional_scan,
    sign_conditions,
    weight_residual,
    xnorm_weights,
)
from scalewave.exponents import (
    CoefficientPair,
    alpha,
    classify,
    conjectured_strauss_region,
    critical_diagonal,
    delta,
    symmetric_max_form,
)
from scalewave.harness import config as cfgmod
from scalewave.harness.config import ConfigError, RunConfig, reproducible_config
from scalewave.harness.outputs import write_csv, write_json, write_text
from scalewave.harness.svg import regime_svg
from scalewave.harness.sweep import SimPlan, SweepCell, agreement, judge, run_sweep, sim_t_end, summarize
from scalewave.linear_modes import (
    ModeIntegrationError,
    RadialSpectrum,
    delayed_start_gain,
    evolve,
    fit_decay,
    growth_exponent,
    norms,
    predicted_rates,
)
from scalewave.semilinear_sim import RadialGrid, SimulationTrace, check_forecast, initial_state, run

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_DISAGREE = 0, 1, 2, 3


class NumericFailure(RuntimeError):
    pass


def _options(f):
    f = click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE",
                     help="Override a config field, e.g. --set exponents.p=2.5 (value parsed as YAML).")(f)
    f = click.option("--jobs", type=int, default=None, help="Worker count for sweeps and mode chunks.")(f)
    f = click.option("--exact", is_flag=True, default=False, help="Decide every threshold with exact rational arithmetic.")(f)
    f = click.option("--out", "out", type=click.Path(file_okay=False), default=None,
                     help=f"Output directory (default: ${cfgmod.OUT_ENV} or ./{cfgmod.DEFAULT_OUT}).")(f)
    f = click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
                     help="YAML or JSON run configuration.")(f)
    return f


def _load(config_path, out, exact, jobs, overrides) -> RunConfig:
    raw = cfgmod.load_file(config_path) if config_path else {}
    for item in overrides:
        cfgmod.apply_override(raw, item)
    if jobs is not None and jobs < 1:
        raise ConfigError("jobs: must be >= 1")
    try:
        return cfgmod.build(raw, out=out, exact=exact or None, jobs=jobs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"<config>: {exc}") from None


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(package_name="artifact", prog_name="scalewave")
def cli():
    """Regime maps, decay forecasts and desk-scale simulations for weakly coupled scale-invariant wave systems."""


# ---------------------------------------------------------------------------


def _classify_payload(cfg: RunConfig) -> dict:
    coeffs = cfg.require_coefficients()
    exps = cfg.require_exponents()
    try:
        verdict = classify(coeffs, exps, exact=cfg.exact, epsilon=cfg.epsilon)
    except ValueError as exc:
        raise ConfigError(f"coefficients: {exc}") from None
    payload = {
        "exponents": {"p": exps.p, "q": exps.q},
        "verdict": verdict.as_dict(),
        "conjecture_strauss": {"label": "CONJECTURE", "holds": conjectured_strauss_region(coeffs, exps)},
        "critical_diagonal": critical_diagonal(coeffs),
    }
    if coeffs.eq1 == coeffs.eq2 and verdict.derived.alpha1 is not None:
        payload["alternative_symmetric_form"] = {
            "value": symmetric_max_form(exps, coeffs.n, verdict.derived.alpha1),
            "note": "max{p,q}/(pq-1) - (n+alpha-1)/2; reported only, classification uses F",
        }
    return payload


@cli.command("classify")
@_options
def classify_cmd(config_path, out, exact, jobs, overrides):
    """Classify one (p, q) pair and print the verdict as JSON."""
    cfg = _load(config_path, out, exact, jobs, overrides)
    payload = _classify_payload(cfg)
    conf = reproducible_config(cfg)
    path = write_json(cfg.out_dir / "classify.json", payload, conf)
    click.echo(path.read_text(), nl=False)
    return EXIT_OK


# ---------------------------------------------------------------------------


def _plan(cfg: RunConfig) -> SimPlan:
    s = cfg.simulation
    return SimPlan(
        L=s.L, N=s.N, cfl=s.cfl, t_end=s.t_end, sample_dt=s.sample_dt, window=s.window,
        threshold_factor=s.threshold_factor, slope_tol=cfg.slope_tol, band=cfg.inconclusive_band,
        data_small=cfg.data_small, data_large=cfg.data_large,
    )


@cli.command("sweep")
@_options
def sweep_cmd(config_path, out, exact, jobs, overrides):
    """Classify (and optionally simulate) every cell of a (p, q) grid; write CSV, SVG and JSON."""
    cfg = _load(config_path, out, exact, jobs, overrides)
    coeffs = cfg.require_coefficients()
    plan = _plan(cfg) if cfg.sweep_simulate else None
    if plan is not None:
        grid = RadialGrid(coeffs.n, plan.L, plan.N)
        for data in (plan.data_small, plan.data_large):
            try:
                sim_t_end(plan, grid, data)
            except ValueError as exc:
                raise ConfigError(f"simulation: {exc}") from None
    cells = run_sweep(coeffs, cfg.sweep_p, cfg.sweep_q, exact=cfg.exact, epsilon=cfg.epsilon, plan=plan, jobs=cfg.jobs)
    conf = reproducible_config(cfg)
    write_csv(cfg.out_dir / "sweep.csv", SweepCell.COLUMNS, (c.row() for c in cells), conf)
    write_text(cfg.out_dir / "sweep.svg", regime_svg(cells, cfg.sweep_p, cfg.sweep_q, coeffs, conf))
    summary = summarize(cells)
    write_json(cfg.out_dir / "sweep.json", {"summary": summary}, conf)
    click.echo(
        f"{summary['cells']} cells; agree={summary['agreement']['agree']} "
        f"disagree={summary['agreement']['disagree']} errors={summary['errors']} -> {cfg.out_dir}"
    )
    if summary["agreement"]["disagree"]:
        return EXIT_DISAGREE
    if summary["errors"]:
        return EXIT_NUMERIC
    return EXIT_OK


# ---------------------------------------------------------------------------


@cli.command("lindecay")
@_options
def lindecay_cmd(config_path, out, exact, jobs, overrides):
    """Evolve the linear equation mode by mode; write norm series and fitted slopes."""
    cfg = _load(config_path, out, exact, jobs, overrides)
    lin = cfg.linear
    pair = CoefficientPair(lin.mu, lin.nu_sq)
    if float(delta(pair)) < 0:
        raise ConfigError("linear: (mu-1)^2 - 4 nu_sq must be >= 0")
    if lin.spacing == "log":
        times = lin.s + np.geomspace(1.0, 1.0 + lin.t_end - lin.s, lin.samples) - 1.0
    else:
        times = np.linspace(lin.s, lin.t_end, lin.samples)
    times[0], times[-1] = lin.s, lin.t_end
    spec = RadialSpectrum.build(lin.n, lin.u0, lin.u1, t_max=lin.t_end, tail=lin.tail)
    try:
        series = norms(evolve(spec, pair, lin.s, times, cfg.tol, jobs=cfg.jobs), spec)
    except ModeIntegrationError as exc:
        raise NumericFailure(str(exc)) from None
    conf = reproducible_config(cfg)
    write_csv(cfg.out_dir / "lindecay.csv", ("t", "l2", "hdot1", "ut_l2"), series.rows(), conf)
    predicted = predicted_rates(lin.n, pair)
    fits = {}
    for name in ("l2", "hdot1", "ut_l2"):
        try:
            f = fit_decay(series, lin.window, name)
            fits[name] = {"slope": f.slope, "r_squared": f.r_squared, "samples": f.samples,
                          "predicted": predicted[name], "deviation": abs(f.slope - predicted[name])}
        except ValueError as exc:
            raise NumericFailure(f"fit of {name}: {exc}") from None
    payload = {
        "alpha": float(alpha(pair)),
        "parabolic_like": float(delta(pair)) > (lin.n + 1) ** 2,
        "quadrature": {"nodes": spec.size, "rho_max": spec.rho_max},
        "window": list(lin.window),
        "fits": fits,
        "note": "predicted exponents are upper bounds; faster measured decay is recorded, not an error",
    }
    if lin.delayed_start is not None:
        spec1 = RadialSpectrum.build(lin.n, None, lin.u1, t_max=lin.delayed_start["T"], tail=lin.tail)
        try:
            reps = [delayed_start_gain(spec1, pair, s, lin.delayed_start["T"], cfg.tol, jobs=cfg.jobs)
                    for s in lin.delayed_start["s"]]
        except ModeIntegrationError as exc:
            raise NumericFailure(str(exc)) from None
        payload["delayed_start"] = {
            "T": lin.delayed_start["T"],
            "runs": [{"s": r.s, "ratio": r.ratio, "bound": r.bound} for r in reps],
            "growth_exponent": growth_exponent(reps) if len(reps) > 1 else None,
            "growth_exponent_bound": float(alpha(pair)) + lin.n / 2,
        }
    write_json(cfg.out_dir / "lindecay.json", payload, conf)
    click.echo(" ".join(f"{k}={v['slope']:.4f}(pred {v['predicted']:.4f})" for k, v in fits.items()))
    return EXIT_OK


# ---------------------------------------------------------------------------


@cli.command("simulate")
@_options
def simulate_cmd(config_path, out, exact, jobs, overrides):
    """Run the coupled semilinear system for one (p, q); write the trace and a JSON summary."""
    cfg = _load(config_path, out, exact, jobs, overrides)
    coeffs = cfg.require_coefficients()
    exps = cfg.require_exponents()
    try:
        verdict = classify(coeffs, exps, exact=cfg.exact, epsilon=cfg.epsilon)
    except ValueError as exc:
        raise ConfigError(f"coefficients: {exc}") from None
    s = cfg.simulation
    plan = _plan(cfg)
    grid = RadialGrid(coeffs.n, s.L, s.N)
    data = cfg.data
    try:
        t_end = sim_t_end(plan, grid, data)
    except ValueError as exc:
        raise ConfigError(f"simulation: {exc}") from None
    snap = s.snapshot_dt
    if s.functional_R and snap is None:
        snap = s.sample_dt
    trace = run(grid, coeffs, exps, data, t_end, cfl=s.cfl, sample_dt=s.sample_dt, snapshot_dt=snap,
                threshold_factor=s.threshold_factor)
    conf = reproducible_config(cfg)
    write_csv(cfg.out_dir / "trace.csv", SimulationTrace.COLUMNS, trace.rows(), conf)

    st0 = initial_state(grid, data)
    payload: dict = {
        "exponents": {"p": exps.p, "q": exps.q},
        "verdict": verdict.as_dict(),
        "conjecture_strauss": {"label": "CONJECTURE", "holds": conjectured_strauss_region(coeffs, exps)},
        "blowup": None if trace.blowup is None else {"t_detect": trace.blowup.t_detect, "reason": trace.blowup.reason,
                                                      "note": "divergence detected numerically, not a proof"},
        "lightcone_t_max": trace.lightcone_t_max,
        "dt": trace.dt,
        "backend": _backend.NAME,
        "sign_conditions": list(sign_conditions(grid.r, st0.u, st0.ut, st0.v, st0.vt, coeffs)),
    }
    if coeffs.n > 3:
        payload["warning"] = "n > 3: fast decay makes window fits unreliable"
    try:
        outcome = judge(trace, verdict, plan)
    except ValueError as exc:
        raise NumericFailure(f"decay fit: {exc}") from None
    agree = agreement(verdict, outcome.outcome)
    payload["numeric_outcome"] = outcome.outcome.value
    payload["detail"] = outcome.detail
    payload["agreement"] = "n/a" if agree is None else agree
    payload["slopes"] = {"l2_u": outcome.slope_u, "l2_v": outcome.slope_v}
    if not trace.diverged and verdict.forecast is not None:
        payload["forecast_check"] = check_forecast(trace, verdict, s.window, cfg.slope_tol).as_dict()
        d = verdict.derived
        xs = xnorm_weights(trace, (float(d.alpha1), float(d.alpha2)), verdict.gamma or 0.0, verdict.gamma_bar or 0.0, coeffs.n)
        ru, rv = xs.sup_inf_ratio(s.window)
        payload["xnorm"] = {"sup_inf_ratio_u": ru, "sup_inf_ratio_v": rv, "window": list(s.window)}
    if s.functional_R:
        try:
            payload["functionals"] = functional_scan(trace, coeffs, exps, s.functional_R, tau_ratio=s.tau_ratio).as_dict()
        except ValueError as exc:
            raise ConfigError(f"simulation.functional_R: {exc}") from None
    write_json(cfg.out_dir / "simulate.json", payload, conf)
    click.echo(f"{verdict.kind.value}: {outcome.outcome.value} ({outcome.detail}); agreement={payload['agreement']}")
    if agree is False:
        return EXIT_DISAGREE
    return EXIT_OK


# ---------------------------------------------------------------------------


@cli.command("testfn-check")
@_options
def testfn_cmd(config_path, out, exact, jobs, overrides):
    """Self-checks of the weight ODE, the cutoff pair and the sign conditions."""
    cfg = _load(config_path, out, exact, jobs, overrides)
    tf = cfg.testfn
    rng = np.random.default_rng(tf["seed"])
    t_samples = np.concatenate([[0.0], np.geomspace(1e-3, 1e3, 25)])
    worst = 0.0
    for _ in range(tf["random_pairs"]):
        mu = float(rng.uniform(0.0, 10.0))
        nu_sq = float(rng.uniform(0.0, (mu - 1) ** 2 / 4))
        a = float(alpha(CoefficientPair(mu, nu_sq)))
        worst = max(worst, weight_residual(a, mu, nu_sq, t_samples))
    n = cfg.coefficients.n if cfg.coefficients is not None else 1
    cut = CutoffPair(n)
    inv = cutoff_invariants(cut, tf["samples"])
    powers = (cfg.exponents.p, cfg.exponents.q) if cfg.exponents is not None else (2.0, 3.0)
    consts = {f"r={r:g}": derivative_bound_constants(cut, r, tf["samples"]) for r in powers}
    finite = all(math.isfinite(v) for d in consts.values() for v in d.values())
    payload = {
        "weight_residual_max": worst,
        "weight_residual_ok": worst < 1e-10,
        "cutoff_invariants": inv,
        "derivative_bound_constants": consts,
        "derivative_bounds_finite": finite,
    }
    if cfg.coefficients is not None:
        grid = RadialGrid(n, cfg.simulation.L, cfg.simulation.N)
        st = initial_state(grid, cfg.data)
        payload["sign_conditions"] = list(sign_conditions(grid.r, st.u, st.ut, st.v, st.vt, cfg.coefficients))
    write_json(cfg.out_dir / "testfn.json", payload, reproducible_config(cfg))
    ok = payload["weight_residual_ok"] and all(inv.values()) and finite
    click.echo(f"weight residual {worst:.3e}; cutoff invariants {'ok' if all(inv.values()) else 'FAILED'}")
    return EXIT_OK if ok else EXIT_NUMERIC


# ---------------------------------------------------------------------------


def main(argv=None) -> int:
    try:
        rc = cli.main(args=argv, prog_name="scalewave", standalone_mode=False)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        return EXIT_CONFIG
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return EXIT_CONFIG
    except click.ClickException as exc:
        exc.show()
        return EXIT_CONFIG
    except (NumericFailure, FloatingPointError, ModeIntegrationError) as exc:
        click.echo(f"numeric failure: {exc}", err=True)
        return EXIT_NUMERIC
    if isinstance(rc, int):
        return rc
    return EXIT_OK
