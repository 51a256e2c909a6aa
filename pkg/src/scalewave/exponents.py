"""Closed-form exponent algebra for the weakly coupled scale-invariant system.

Everything here is pure: derived constants (delta, alpha, the thresholds
p~ and q~), the shifted critical functional ``F``, the regime classifier and
the decay forecasts attached to each global-existence regime.

Two arithmetic modes are supported. The default evaluates in floating point.
With ``exact=True`` every input is promoted to a :class:`fractions.Fraction`
(floats via their shortest decimal repr) and all sign decisions are exact;
square roots of non-square rationals fall back to :mod:`sympy` surds.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Real
from typing import Any, Optional

DEFAULT_EPSILON = 1e-3
BOUNDARY_BAND = 1e-12


class RegimeKind(str, enum.Enum):
    BLOW_UP = "BlowUp"
    GLOBAL_SUPERCRITICAL_BOTH = "GlobalSupercriticalBoth"
    GLOBAL_LOSS_ON_U = "GlobalLossOnU"
    GLOBAL_LOSS_ON_V = "GlobalLossOnV"
    UNDETERMINED = "Undetermined"

    @property
    def is_global(self) -> bool:
        return self in (
            RegimeKind.GLOBAL_SUPERCRITICAL_BOTH,
            RegimeKind.GLOBAL_LOSS_ON_U,
            RegimeKind.GLOBAL_LOSS_ON_V,
        )


@dataclass(frozen=True)
class CoefficientPair:
    """Damping coefficient ``mu`` and mass coefficient ``nu_sq`` of one equation."""

    mu: Real
    nu_sq: Real

    def __post_init__(self):
        if not self.mu >= 0:
            raise ValueError(f"mu must be nonnegative, got {self.mu!r}")
        if not self.nu_sq >= 0:
            raise ValueError(f"nu_sq must be nonnegative, got {self.nu_sq!r}")


@dataclass(frozen=True)
class SystemCoefficients:
    eq1: CoefficientPair
    eq2: CoefficientPair
    n: int

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 1:
            raise ValueError(f"space dimension n must be a positive integer, got {self.n!r}")

    @classmethod
    def from_values(cls, mu1, nu1_sq, mu2, nu2_sq, n) -> "SystemCoefficients":
        return cls(CoefficientPair(mu1, nu1_sq), CoefficientPair(mu2, nu2_sq), int(n))

    def swapped(self) -> "SystemCoefficients":
        return SystemCoefficients(self.eq2, self.eq1, self.n)


@dataclass(frozen=True)
class ExponentPair:
    p: Real
    q: Real

    def __post_init__(self):
        if not (self.p > 1 and self.q > 1):
            raise ValueError(f"exponents must satisfy p, q > 1, got p={self.p!r}, q={self.q!r}")

    def swapped(self) -> "ExponentPair":
        return ExponentPair(self.q, self.p)


@dataclass(frozen=True)
class DerivedExponents:
    delta1: Any
    delta2: Any
    alpha1: Any
    alpha2: Any
    p_tilde: Any
    q_tilde: Any
    delta_nonneg: tuple[bool, bool]
    parabolic_like: tuple[bool, bool]
    issues: tuple[str, ...] = ()


@dataclass(frozen=True)
class DecayForecast:
    """Predicted exponents of ``(1+t)`` for the energy and L2 norms of ``u`` and ``v``."""

    rate_u_energy: float
    rate_u_l2: float
    rate_v_energy: float
    rate_v_l2: float

    def swapped(self) -> "DecayForecast":
        return DecayForecast(self.rate_v_energy, self.rate_v_l2, self.rate_u_energy, self.rate_u_l2)

    def as_dict(self) -> dict:
        return {
            "rate_u_energy": self.rate_u_energy,
            "rate_u_l2": self.rate_u_l2,
            "rate_v_energy": self.rate_v_energy,
            "rate_v_l2": self.rate_v_l2,
        }


@dataclass(frozen=True)
class RegimeVerdict:
    kind: RegimeKind
    f1: float
    f2: float
    gamma: Optional[float]
    gamma_bar: Optional[float]
    forecast: Optional[DecayForecast]
    admissibility_notes: tuple[str, ...]
    derived: DerivedExponents
    blowup_branch: Optional[str] = None
    exact: bool = False
    exact_values: dict = field(default_factory=dict)

    @property
    def max_f(self) -> float:
        return max(self.f1, self.f2)

    def as_dict(self) -> dict:
        d = self.derived
        out = {
            "kind": self.kind.value,
            "f1": self.f1,
            "f2": self.f2,
            "max_f": self.max_f,
            "gamma": self.gamma,
            "gamma_bar": self.gamma_bar,
            "forecast": None if self.forecast is None else self.forecast.as_dict(),
            "admissibility_notes": list(self.admissibility_notes),
            "blowup_branch": self.blowup_branch,
            "derived": {
                "delta1": _to_float(d.delta1),
                "delta2": _to_float(d.delta2),
                "alpha1": _to_float(d.alpha1),
                "alpha2": _to_float(d.alpha2),
                "p_tilde": _to_float(d.p_tilde),
                "q_tilde": _to_float(d.q_tilde),
                "delta_nonneg": list(d.delta_nonneg),
                "parabolic_like": list(d.parabolic_like),
                "issues": list(d.issues),
            },
            "exact": self.exact,
        }
        if self.exact:
            out["exact_values"] = dict(self.exact_values)
        return out


# ---------------------------------------------------------------------------
# arithmetic helpers (float / Fraction / sympy surd)


def _exact(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("boolean is not a number")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError(f"non-finite value {x!r}")
        return Fraction(repr(x))
    if isinstance(x, str):
        return Fraction(x)
    try:
        import sympy

        if isinstance(x, sympy.Rational):
            return Fraction(int(x.p), int(x.q))
    except ImportError:  # pragma: no cover
        pass
    return Fraction(x)


def _sqrt(x, exact: bool):
    if not exact:
        return math.sqrt(x)
    x = _exact(x) if not _is_sympy(x) else x
    if isinstance(x, Fraction):
        rn, rd = math.isqrt(x.numerator), math.isqrt(x.denominator)
        if rn * rn == x.numerator and rd * rd == x.denominator:
            return Fraction(rn, rd)
    import sympy

    return sympy.sqrt(sympy.Rational(x.numerator, x.denominator))


def _is_sympy(x) -> bool:
    return type(x).__module__.startswith("sympy")


def _sign(x) -> int:
    if _is_sympy(x):
        import sympy

        x = sympy.expand(x)
        if x.is_zero:
            return 0
        if x.is_positive:
            return 1
        if x.is_negative:
            return -1
        # undecided by the assumption system; equals() is exact for surds
        if x.equals(0):
            return 0
        return 1 if sympy.N(x, 60) > 0 else -1
    if x > 0:
        return 1
    if x < 0:
        return -1
    return 0


def _to_float(x) -> Optional[float]:
    if x is None:
        return None
    return float(x)


def _exact_str(x) -> Optional[str]:
    if x is None:
        return None
    if _is_sympy(x):
        import sympy

        return str(sympy.nsimplify(sympy.radsimp(x)))
    return str(x)


def _num(x, exact: bool):
    return _exact(x) if exact else float(x)


# ---------------------------------------------------------------------------
# derived constants


def delta(pair: CoefficientPair, exact: bool = False):
    mu, nu_sq = _num(pair.mu, exact), _num(pair.nu_sq, exact)
    return (mu - 1) ** 2 - 4 * nu_sq


def alpha(pair: CoefficientPair, exact: bool = False):
    """Shift ``(mu + 1 - sqrt(delta)) / 2``; raises for ``delta < 0``."""
    d = delta(pair, exact)
    if _sign(d) < 0:
        raise ValueError(f"alpha undefined: delta = {_to_float(d):.6g} < 0 for {pair}")
    return (_num(pair.mu, exact) + 1 - _sqrt(d, exact)) / 2


def p_fujita(dim) -> float:
    """Fujita exponent ``1 + 2/dim`` (``dim`` may be a shifted, non-integer dimension)."""
    return 1 + 2 / dim


def derive(coeffs: SystemCoefficients, exact: bool = False) -> DerivedExponents:
    n = coeffs.n
    issues = []
    d1, d2 = delta(coeffs.eq1, exact), delta(coeffs.eq2, exact)
    alphas = []
    for j, (pair, d) in enumerate(((coeffs.eq1, d1), (coeffs.eq2, d2)), start=1):
        if _sign(d) < 0:
            issues.append(f"alpha undefined: delta{j} < 0")
            alphas.append(None)
        else:
            alphas.append((_num(pair.mu, exact) + 1 - _sqrt(d, exact)) / 2)
    a1, a2 = alphas
    p_t = q_t = None
    if a1 is not None and a2 is not None:
        den_p, den_q = n + a2 - 1, n + a1 - 1
        if _sign(den_p) > 0:
            p_t = (n + a1 + 1) / den_p
        else:
            issues.append("threshold undefined: p_tilde denominator n + alpha2 - 1 <= 0")
        if _sign(den_q) > 0:
            q_t = (n + a2 + 1) / den_q
        else:
            issues.append("threshold undefined: q_tilde denominator n + alpha1 - 1 <= 0")
    else:
        issues.append("threshold undefined: alpha missing")
    big = (n + 1) ** 2
    return DerivedExponents(
        delta1=d1,
        delta2=d2,
        alpha1=a1,
        alpha2=a2,
        p_tilde=p_t,
        q_tilde=q_t,
        delta_nonneg=(_sign(d1) >= 0, _sign(d2) >= 0),
        parabolic_like=(_sign(d1 - big) > 0, _sign(d2 - big) > 0),
        issues=tuple(issues),
    )


def f_shift(p, q, n, alpha, exact: bool = False):
    """``(p+1)/(pq-1) - (n+alpha-1)/2``."""
    if not exact:
        p, q, alpha = float(p), float(q), float(alpha)
    else:
        p, q = _exact(p), _exact(q)
        alpha = alpha if _is_sympy(alpha) else _exact(alpha)
    if _sign(p * q - 1) <= 0:
        raise ValueError(f"f_shift requires pq > 1, got p={p}, q={q}")
    return (p + 1) / (p * q - 1) - (n + alpha - 1) / 2


def gn_theta(r, n) -> float:
    """Gagliardo-Nirenberg interpolation index ``n (1/2 - 1/r)``."""
    return n * (0.5 - 1.0 / r)


def gn_admissible(r, n) -> bool:
    """Whether ``gn_theta(r, n)`` lies in ``[0, 1]``."""
    theta = gn_theta(r, n)
    return -1e-15 <= theta <= 1 + 1e-15


# ---------------------------------------------------------------------------
# classification


def _admissibility(coeffs, p, q, derived, exact) -> list[str]:
    n = coeffs.n
    notes = []
    for j, pair in ((1, coeffs.eq1), (2, coeffs.eq2)):
        if not _sign(_num(pair.mu, exact) - 1) > 0:
            notes.append(f"mu{j} > 1 fails (mu{j} = {float(pair.mu):g})")
    for j, flag, d in ((1, derived.parabolic_like[0], derived.delta1), (2, derived.parabolic_like[1], derived.delta2)):
        if not flag:
            notes.append(f"delta{j} > (n+1)^2 fails (delta{j} = {float(d):g}, (n+1)^2 = {(n + 1) ** 2})")
    for name, val in (("p", p), ("q", q)):
        if _sign(val - 2) < 0:
            notes.append(f"{name} >= 2 fails ({name} = {float(val):g})")
        if n >= 3 and _sign(val * (n - 2) - n) > 0:
            notes.append(f"{name} <= n/(n-2) fails ({name} = {float(val):g}, n/(n-2) = {n / (n - 2):g})")
    return notes


def _loss(width, gap, exact, epsilon):
    """Loss of decay ``width * gap`` for a strict gap, ``epsilon`` at equality."""
    s = _sign(gap)
    if s > 0:
        return width * gap
    return _num(epsilon, exact)


def classify(
    coeffs: SystemCoefficients,
    exps: ExponentPair,
    *,
    exact: bool = False,
    epsilon: float = DEFAULT_EPSILON,
) -> RegimeVerdict:
    if not epsilon > 0:
        raise ValueError("epsilon must be strictly positive")
    derived = derive(coeffs, exact)
    for j, ok in enumerate(derived.delta_nonneg, start=1):
        if not ok:
            raise ValueError(
                f"delta{j} = {float(getattr(derived, f'delta{j}')):g} < 0: "
                "complex characteristic roots are outside the supported regime"
            )
    n = coeffs.n
    a1, a2 = derived.alpha1, derived.alpha2
    p, q = _num(exps.p, exact), _num(exps.q, exact)

    f1 = f_shift(p, q, n, a1, exact)
    f2 = f_shift(q, p, n, a2, exact)
    pq1 = p * q - 1
    half = Fraction(n - 1, 2) if exact else (n - 1) / 2
    direct = ((p + 1) / pq1 - a1 / 2 - half, (q + 1) / pq1 - a2 / 2 - half)
    cond_direct = _sign(direct[0]) >= 0 or _sign(direct[1]) >= 0
    cond_f = _sign(f1) >= 0 or _sign(f2) >= 0
    if cond_direct != cond_f and (exact or max(abs(float(x)) for x in direct) > BOUNDARY_BAND):
        raise AssertionError("blow-up condition disagrees with the F-form evaluation")

    side_p = _sign(p - (1 + a1) / (1 + a2)) > 0
    side_q = _sign(q - (1 + a2) / (1 + a1)) > 0
    branch = "both" if side_p and side_q else "p" if side_p else "q" if side_q else None

    notes: list[str] = []
    kind = RegimeKind.UNDETERMINED
    gamma = gamma_bar = None
    forecast = None
    exact_values: dict = {}

    if cond_f:
        if branch is not None:
            kind = RegimeKind.BLOW_UP
        else:
            notes.append("lower bound on p or q fails: p > (1+a1)/(1+a2) and q > (1+a2)/(1+a1) both false")
    else:
        notes = _admissibility(coeffs, p, q, derived, exact)
        if derived.p_tilde is None or derived.q_tilde is None:
            notes.append("thresholds p_tilde/q_tilde undefined")
        if not notes:
            p_gt = _sign(p - derived.p_tilde) > 0
            q_gt = _sign(q - derived.q_tilde) > 0
            if p_gt and q_gt:
                kind = RegimeKind.GLOBAL_SUPERCRITICAL_BOTH
            elif q_gt:
                kind = RegimeKind.GLOBAL_LOSS_ON_U
                gamma = _loss(n + a2 - 1, derived.p_tilde - p, exact, epsilon)
            elif p_gt:
                kind = RegimeKind.GLOBAL_LOSS_ON_V
                gamma_bar = _loss(n + a1 - 1, derived.q_tilde - q, exact, epsilon)
            else:  # excluded by the screening implication when max F < 0
                raise AssertionError("max F < 0 with p <= p_tilde and q <= q_tilde")
            g1 = 0.0 if gamma is None else float(gamma)
            g2 = 0.0 if gamma_bar is None else float(gamma_bar)
            e_u = -(n / 2 + float(a1)) + g1
            e_v = -(n / 2 + float(a2)) + g2
            forecast = DecayForecast(e_u, e_u + 1, e_v, e_v + 1)

    if exact:
        exact_values = {
            "f1": _exact_str(f1),
            "f2": _exact_str(f2),
            "alpha1": _exact_str(a1),
            "alpha2": _exact_str(a2),
            "p_tilde": _exact_str(derived.p_tilde),
            "q_tilde": _exact_str(derived.q_tilde),
            "gamma": _exact_str(gamma),
            "gamma_bar": _exact_str(gamma_bar),
        }

    return RegimeVerdict(
        kind=kind,
        f1=float(f1),
        f2=float(f2),
        gamma=_to_float(gamma),
        gamma_bar=_to_float(gamma_bar),
        forecast=forecast,
        admissibility_notes=tuple(notes),
        derived=derived,
        blowup_branch=branch if kind is RegimeKind.BLOW_UP else None,
        exact=exact,
        exact_values=exact_values,
    )



def conjectured_strauss_region(coeffs: SystemCoefficients, exps: ExponentPair) -> bool:
    """Strict Strauss-type inequality announced (not proved) for ``delta >= 0``.

    Always reported as a CONJECTURE and never merged into a verdict.
    """
    p, q, n = float(exps.p), float(exps.q), coeffs.n
    pq1 = p * q - 1
    a = (p + 2 + 1 / q) / pq1 - float(coeffs.eq1.mu) / 2
    b = (q + 2 + 1 / p) / pq1 - float(coeffs.eq2.mu) / 2
    return max(a, b) > (n - 1) / 2


def symmetric_max_form(exps: ExponentPair, n: int, alpha) -> float:
    """Alternative ``max{p,q}/(pq-1) - (n+alpha-1)/2`` form for equal coefficients.

    Reported alongside the canonical F-form only; classification never uses it.
    """
    p, q = float(exps.p), float(exps.q)
    return max(p, q) / (p * q - 1) - (n + float(alpha) - 1) / 2


def critical_diagonal(coeffs: SystemCoefficients) -> Optional[float]:
    """The ``p = q`` value where ``max{F1, F2}`` changes sign, if it exists.

    ``F(p, p, n, a) = 1/(p-1) - (n+a-1)/2`` is decreasing in ``p``, so the
    crossing of the larger of the two is at ``1 + 2/(n + min(a1, a2) - 1)``.
    """
    d = derive(coeffs)
    if d.alpha1 is None or d.alpha2 is None:
        return None
    dim = coeffs.n + min(d.alpha1, d.alpha2) - 1
    if dim <= 0:
        return None
    return p_fujita(dim)


def boundary_q_of_p(p, n, alpha) -> Optional[float]:
    """``q`` solving ``F(p, q, n, alpha) = 0`` (``None`` when the shift is nonpositive)."""
    k = (n + alpha - 1) / 2
    if k <= 0:
        return None
    return (1 + (p + 1) / k) / p
