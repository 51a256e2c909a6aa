"""Run configuration: loading, defaults, overrides and field-level validation.

A config is a YAML (or JSON) mapping. Every value is checked against its
section's schema and errors name the offending path, e.g.
``simulation.N: must be an integer >= 64``. The resolved config (defaults
filled in) is what gets embedded into every output file.
"""

from __future__ import annotations

import copy
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import yaml

from scalewave.exponents import DEFAULT_EPSILON, ExponentPair, SystemCoefficients
from scalewave.linear_modes import DEFAULT_TAIL, DEFAULT_TOL, GaussianData, PolynomialBump
from scalewave.semilinear_sim import FIELDS, DataProfile, ProfileFamily

OUT_ENV = "SCALEWAVE_OUT"
DEFAULT_OUT = "scalewave-out"

DEFAULTS: dict[str, Any] = {
    "coefficients": None,
    "exponents": None,
    "exact": False,
    "jobs": 1,
    "output": {"dir": None},
    "tolerances": {"tol": DEFAULT_TOL, "slope_tol": 0.25, "epsilon": DEFAULT_EPSILON, "inconclusive_band": 0.02},
    "data": [{"family": "Bump", "amplitude": 0.01, "radius": 4.0, "assignment": list(FIELDS)}],
    "simulation": {
        "L": 400.0, "N": 4001, "cfl": 0.5, "t_end": None, "sample_dt": 1.0, "snapshot_dt": None,
        "window": [40.0, 300.0], "threshold_factor": 1e8, "functional_R": [], "tau_ratio": 1.0,
    },
    "sweep": {
        "p": [], "q": [], "simulate": False,
        "data_small": [{"family": "Bump", "amplitude": 0.01, "radius": 4.0, "assignment": list(FIELDS)}],
        "data_large": [{"family": "Bump", "amplitude": 50.0, "radius": 4.0, "assignment": ["u1", "v1"]}],
    },
    "linear": {
        "n": 1, "mu": 9.0, "nu_sq": 0.0, "s": 0.0,
        "u0": {"family": "gaussian", "amplitude": 1.0, "sigma": 1.0},
        "u1": {"family": "gaussian", "amplitude": 1.0, "sigma": 1.0},
        "t_end": 200.0, "samples": 200, "spacing": "log", "window": [20.0, 200.0], "tail": DEFAULT_TAIL,
        "delayed_start": None,
    },
    "testfn": {"random_pairs": 100, "seed": 0, "samples": 10000},
}

TOP_KEYS = set(DEFAULTS)


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the field path."""


# ---------------------------------------------------------------------------
# loading


def load_file(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"<config>: cannot read {path}: {exc.strerror}") from None
    try:
        if path.suffix.lower() == ".json":
            raw = json.loads(text)
        else:
            raw = yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"<config>: cannot parse {path}: {exc}") from None
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("<config>: top level must be a mapping")
    return raw


def apply_override(raw: dict, assignment: str) -> None:
    """Apply ``a.b.c=value`` in place; the value is parsed as YAML."""
    if "=" not in assignment:
        raise ConfigError(f"--set {assignment!r}: expected KEY=VALUE")
    key, text = assignment.split("=", 1)
    parts = [p for p in key.strip().split(".") if p]
    if not parts:
        raise ConfigError(f"--set {assignment!r}: empty key")
    try:
        value = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{key}: cannot parse override value: {exc}") from None
    node = raw
    for p in parts[:-1]:
        nxt = node.get(p)
        if nxt is None:
            nxt = node[p] = {}
        if not isinstance(nxt, dict):
            raise ConfigError(f"{key}: {p} is not a mapping")
        node = nxt
    node[parts[-1]] = value


def _merge(defaults, raw, path=""):
    if isinstance(defaults, dict) and defaults and isinstance(raw, dict):
        out = copy.deepcopy(defaults)
        for k, v in raw.items():
            if k not in defaults:
                raise ConfigError(f"{path}{k}: unknown key")
            out[k] = _merge(defaults[k], v, f"{path}{k}.")
        return out
    return copy.deepcopy(raw)


def resolve(raw: dict) -> dict:
    """Defaults merged with ``raw``; unknown keys rejected."""
    for k in raw:
        if k not in TOP_KEYS:
            raise ConfigError(f"{k}: unknown key")
    return _merge(DEFAULTS, raw)


# ---------------------------------------------------------------------------
# field checks


def _number(value, path, *, lo=None, hi=None, lo_open=False, integer=False, allow_none=False):
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: must be a number, got {value!r}")
    if integer and (isinstance(value, float) and not value.is_integer()):
        raise ConfigError(f"{path}: must be an integer, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(f"{path}: must be finite")
    if lo is not None and (value <= lo if lo_open else value < lo):
        raise ConfigError(f"{path}: must be {'>' if lo_open else '>='} {lo}, got {value!r}")
    if hi is not None and value > hi:
        raise ConfigError(f"{path}: must be <= {hi}, got {value!r}")
    return int(value) if integer else value


def _mapping(value, path):
    if not isinstance(value, dict):
        raise ConfigError(f"{path}: must be a mapping")
    return value


def _window(value, path):
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError(f"{path}: must be a two-element list [t_lo, t_hi]")
    lo = _number(value[0], f"{path}[0]", lo=0)
    hi = _number(value[1], f"{path}[1]", lo=0)
    if hi <= lo:
        raise ConfigError(f"{path}: t_hi must exceed t_lo")
    return float(lo), float(hi)


def _axis(value, path) -> list[float]:
    """Either an explicit list or ``{start, stop, num}`` (inclusive, evenly spaced)."""
    if isinstance(value, dict):
        start = _number(value.get("start"), f"{path}.start", lo=1, lo_open=True)
        stop = _number(value.get("stop"), f"{path}.stop", lo=1, lo_open=True)
        num = _number(value.get("num"), f"{path}.num", lo=0, integer=True)
        extra = set(value) - {"start", "stop", "num"}
        if extra:
            raise ConfigError(f"{path}.{sorted(extra)[0]}: unknown key")
        if num == 1:
            return [float(start)]
        return [float(start + (stop - start) * i / (num - 1)) for i in range(num)]
    if isinstance(value, (list, tuple)):
        return [float(_number(x, f"{path}[{i}]", lo=1, lo_open=True)) for i, x in enumerate(value)]
    raise ConfigError(f"{path}: must be a list of values or a {{start, stop, num}} mapping")


def _profiles(value, path) -> list[DataProfile]:
    if not isinstance(value, (list, tuple)):
        raise ConfigError(f"{path}: must be a list of data profiles")
    out = []
    for i, item in enumerate(value):
        p = f"{path}[{i}]"
        item = _mapping(item, p)
        extra = set(item) - {"family", "amplitude", "radius", "assignment"}
        if extra:
            raise ConfigError(f"{p}.{sorted(extra)[0]}: unknown key")
        fam = item.get("family", "Bump")
        try:
            fam = ProfileFamily(fam)
        except ValueError:
            raise ConfigError(f"{p}.family: must be one of {[f.value for f in ProfileFamily]}") from None
        amp = _number(item.get("amplitude", 1.0), f"{p}.amplitude")
        rad = _number(item.get("radius", 1.0), f"{p}.radius", lo=0, lo_open=True)
        asg = item.get("assignment", list(FIELDS))
        if isinstance(asg, str):
            asg = [asg]
        if not isinstance(asg, (list, tuple)) or not asg or any(a not in FIELDS for a in asg) or len(set(asg)) != len(asg):
            raise ConfigError(f"{p}.assignment: must be a nonempty list drawn from {list(FIELDS)} without repeats")
        out.append(DataProfile(fam, float(amp), float(rad), tuple(asg)))
    return out


def _linear_family(value, path):
    if value is None:
        return None
    value = _mapping(value, path)
    fam = str(value.get("family", "gaussian")).lower()
    amp = float(_number(value.get("amplitude", 1.0), f"{path}.amplitude"))
    if fam == "gaussian":
        extra = set(value) - {"family", "amplitude", "sigma"}
        if extra:
            raise ConfigError(f"{path}.{sorted(extra)[0]}: unknown key")
        return GaussianData(amp, float(_number(value.get("sigma", 1.0), f"{path}.sigma", lo=0, lo_open=True)))
    if fam == "bump":
        extra = set(value) - {"family", "amplitude", "radius", "k"}
        if extra:
            raise ConfigError(f"{path}.{sorted(extra)[0]}: unknown key")
        rad = float(_number(value.get("radius", 1.0), f"{path}.radius", lo=0, lo_open=True))
        k = _number(value.get("k", 4), f"{path}.k", lo=2, integer=True)
        return PolynomialBump(amp, rad, k)
    raise ConfigError(f"{path}.family: must be 'gaussian' or 'bump'")


# ---------------------------------------------------------------------------
# typed view


@dataclass(frozen=True)
class SimulationSettings:
    L: float
    N: int
    cfl: float
    t_end: Optional[float]
    sample_dt: float
    snapshot_dt: Optional[float]
    window: tuple[float, float]
    threshold_factor: float
    functional_R: tuple[float, ...]
    tau_ratio: float


@dataclass(frozen=True)
class LinearSettings:
    n: int
    mu: float
    nu_sq: float
    s: float
    u0: Any
    u1: Any
    t_end: float
    samples: int
    spacing: str
    window: tuple[float, float]
    tail: float
    delayed_start: Optional[dict]


@dataclass(frozen=True)
class RunConfig:
    resolved: dict
    coefficients: Optional[SystemCoefficients]
    exponents: Optional[ExponentPair]
    exact: bool
    jobs: int
    out_dir: Path
    tol: float
    slope_tol: float
    epsilon: float
    inconclusive_band: float
    data: tuple[DataProfile, ...]
    simulation: SimulationSettings
    sweep_p: tuple[float, ...]
    sweep_q: tuple[float, ...]
    sweep_simulate: bool
    data_small: tuple[DataProfile, ...]
    data_large: tuple[DataProfile, ...]
    linear: LinearSettings
    testfn: dict = field(default_factory=dict)

    def require_coefficients(self) -> SystemCoefficients:
        if self.coefficients is None:
            raise ConfigError("coefficients: required for this command")
        return self.coefficients

    def require_exponents(self) -> ExponentPair:
        if self.exponents is None:
            raise ConfigError("exponents: required for this command (p and q)")
        return self.exponents


def _coefficients(value) -> Optional[SystemCoefficients]:
    if value is None:
        return None
    value = _mapping(value, "coefficients")
    extra = set(value) - {"mu1", "nu1_sq", "mu2", "nu2_sq", "n"}
    if extra:
        raise ConfigError(f"coefficients.{sorted(extra)[0]}: unknown key")
    vals = {}
    for k in ("mu1", "nu1_sq", "mu2", "nu2_sq"):
        if k not in value:
            raise ConfigError(f"coefficients.{k}: required")
        vals[k] = _number(value[k], f"coefficients.{k}", lo=0)
    if "n" not in value:
        raise ConfigError("coefficients.n: required")
    n = _number(value["n"], "coefficients.n", lo=1, integer=True)
    return SystemCoefficients.from_values(vals["mu1"], vals["nu1_sq"], vals["mu2"], vals["nu2_sq"], n)


def _exponents(value) -> Optional[ExponentPair]:
    if value is None:
        return None
    value = _mapping(value, "exponents")
    extra = set(value) - {"p", "q"}
    if extra:
        raise ConfigError(f"exponents.{sorted(extra)[0]}: unknown key")
    p = _number(value.get("p"), "exponents.p", lo=1, lo_open=True)
    q = _number(value.get("q"), "exponents.q", lo=1, lo_open=True)
    return ExponentPair(p, q)


def build(raw: dict, *, out: Optional[str] = None, exact: Optional[bool] = None, jobs: Optional[int] = None,
          env: Optional[dict] = None) -> RunConfig:
    """Validate ``raw`` and apply command-line overrides."""
    cfg = resolve(raw)
    if exact is not None and exact:
        cfg["exact"] = True
    if jobs is not None:
        cfg["jobs"] = jobs
    if not isinstance(cfg["exact"], bool):
        raise ConfigError("exact: must be true or false")
    job_count = _number(cfg["jobs"], "jobs", lo=1, integer=True)

    env = os.environ if env is None else env
    out_dir = out or _mapping(cfg["output"], "output").get("dir") or env.get(OUT_ENV) or DEFAULT_OUT
    if not isinstance(out_dir, str):
        raise ConfigError("output.dir: must be a string path")

    tol = _mapping(cfg["tolerances"], "tolerances")
    t_tol = _number(tol["tol"], "tolerances.tol", lo=0, lo_open=True, hi=1e-3)
    slope_tol = _number(tol["slope_tol"], "tolerances.slope_tol", lo=0, lo_open=True)
    eps = _number(tol["epsilon"], "tolerances.epsilon", lo=0, lo_open=True)
    band = _number(tol["inconclusive_band"], "tolerances.inconclusive_band", lo=0)

    coeffs = _coefficients(cfg["coefficients"])
    exps = _exponents(cfg["exponents"])

    sim = _mapping(cfg["simulation"], "simulation")
    cfl = _number(sim["cfl"], "simulation.cfl", lo=0, lo_open=True, hi=1.0)
    settings = SimulationSettings(
        L=float(_number(sim["L"], "simulation.L", lo=0, lo_open=True)),
        N=_number(sim["N"], "simulation.N", lo=64, integer=True),
        cfl=float(cfl),
        t_end=_number(sim["t_end"], "simulation.t_end", lo=0, lo_open=True, allow_none=True),
        sample_dt=float(_number(sim["sample_dt"], "simulation.sample_dt", lo=0, lo_open=True)),
        snapshot_dt=_number(sim["snapshot_dt"], "simulation.snapshot_dt", lo=0, lo_open=True, allow_none=True),
        window=_window(sim["window"], "simulation.window"),
        threshold_factor=float(_number(sim["threshold_factor"], "simulation.threshold_factor", lo=1, lo_open=True)),
        functional_R=tuple(float(_number(x, f"simulation.functional_R[{i}]", lo=0, lo_open=True))
                           for i, x in enumerate(sim["functional_R"] or [])),
        tau_ratio=float(_number(sim["tau_ratio"], "simulation.tau_ratio", lo=0, lo_open=True)),
    )
    if settings.window[0] < 5:
        raise ConfigError("simulation.window[0]: forecast windows must start at t >= 5")
    if list(settings.functional_R) != sorted(set(settings.functional_R)):
        raise ConfigError("simulation.functional_R: must be strictly increasing")
    data = tuple(_profiles(cfg["data"], "data"))
    for i, prof in enumerate(data):
        if prof.radius >= settings.L:
            raise ConfigError(f"data[{i}].radius: must be smaller than simulation.L")

    sw = _mapping(cfg["sweep"], "sweep")
    sweep_p = tuple(_axis(sw["p"], "sweep.p"))
    sweep_q = tuple(_axis(sw["q"], "sweep.q"))
    if not isinstance(sw["simulate"], bool):
        raise ConfigError("sweep.simulate: must be true or false")
    if sw["simulate"] and len(sweep_p) * len(sweep_q) > 10_000:
        raise ConfigError("sweep: simulation-backed sweeps are limited to 10^4 cells")
    small = tuple(_profiles(sw["data_small"], "sweep.data_small"))
    large = tuple(_profiles(sw["data_large"], "sweep.data_large"))

    lin = _mapping(cfg["linear"], "linear")
    spacing = lin["spacing"]
    if spacing not in ("log", "linear"):
        raise ConfigError("linear.spacing: must be 'log' or 'linear'")
    ds = lin["delayed_start"]
    if ds is not None:
        ds = _mapping(ds, "linear.delayed_start")
        if set(ds) - {"s", "T"}:
            raise ConfigError(f"linear.delayed_start.{sorted(set(ds) - {'s', 'T'})[0]}: unknown key")
        s_list = ds.get("s")
        if not isinstance(s_list, (list, tuple)) or not s_list:
            raise ConfigError("linear.delayed_start.s: must be a nonempty list of start times")
        s_vals = [float(_number(x, f"linear.delayed_start.s[{i}]", lo=0)) for i, x in enumerate(s_list)]
        T = float(_number(ds.get("T"), "linear.delayed_start.T", lo=0, lo_open=True))
        if max(s_vals) >= T:
            raise ConfigError("linear.delayed_start.T: must exceed every start time")
        ds = {"s": s_vals, "T": T}
    linear = LinearSettings(
        n=_number(lin["n"], "linear.n", lo=1, integer=True),
        mu=float(_number(lin["mu"], "linear.mu", lo=0)),
        nu_sq=float(_number(lin["nu_sq"], "linear.nu_sq", lo=0)),
        s=float(_number(lin["s"], "linear.s", lo=0)),
        u0=_linear_family(lin["u0"], "linear.u0"),
        u1=_linear_family(lin["u1"], "linear.u1"),
        t_end=float(_number(lin["t_end"], "linear.t_end", lo=0, lo_open=True)),
        samples=_number(lin["samples"], "linear.samples", lo=2, integer=True),
        spacing=spacing,
        window=_window(lin["window"], "linear.window"),
        tail=float(_number(lin["tail"], "linear.tail", lo=0, lo_open=True, hi=0.5)),
        delayed_start=ds,
    )
    if linear.t_end <= linear.s:
        raise ConfigError("linear.t_end: must exceed linear.s")
    if ds is not None and linear.u0 is not None and linear.u0.amplitude != 0:
        raise ConfigError("linear.u0: delayed-start runs require u0 = 0 (set linear.u0 to null)")

    tf = _mapping(cfg["testfn"], "testfn")
    testfn = {
        "random_pairs": _number(tf["random_pairs"], "testfn.random_pairs", lo=1, integer=True),
        "seed": _number(tf["seed"], "testfn.seed", lo=0, integer=True),
        "samples": _number(tf["samples"], "testfn.samples", lo=10, integer=True),
    }

    cfg["jobs"] = job_count
    cfg["output"] = {"dir": None}  # location is not part of the reproducible content
    return RunConfig(
        resolved=cfg, coefficients=coeffs, exponents=exps, exact=cfg["exact"], jobs=job_count,
        out_dir=Path(out_dir), tol=float(t_tol), slope_tol=float(slope_tol), epsilon=float(eps),
        inconclusive_band=float(band), data=data, simulation=settings, sweep_p=sweep_p, sweep_q=sweep_q,
        sweep_simulate=sw["simulate"], data_small=small, data_large=large, linear=linear, testfn=testfn,
    )


def reproducible_config(cfg: RunConfig) -> dict:
    """Resolved config without run-local settings (parallelism, output location).

    Outputs embed this so that they are byte-identical across ``--jobs`` values.
    """
    out = copy.deepcopy(cfg.resolved)
    out.pop("jobs", None)
    out.pop("output", None)
    return out
