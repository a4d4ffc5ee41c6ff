"""Adiabatic-impulse picture of the Landau-Zener sweep.

The freeze-out ("jump") time is where the inverse gap equals eta * t; with
the evolution frozen between -t_hat and t_hat, the excitation probability
for a start at the anticrossing is

    P_AI = (1 - 1/sqrt(1 + eps_hat**2)) / 2,   eps_hat = t_hat / t_a.

Also here: finite-time estimation of the asymptotic probability from a
sampled curve (jump time t* from the inflection of P(t), tail average) and
the three-parameter fit x1 - x2 * sqrt(1 - 2 / (...)).
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize

from .analytic import QuenchParams, chi_anticrossing, lz_probability, lz_probability_second_derivative
from .errors import InsufficientDataError, NotFoundError, ValidationError

__all__ = [
    "AIParams",
    "TransitionCurve",
    "AsymptoticEstimate",
    "AIFit",
    "PROVENANCES",
    "lz_jump_time_hat",
    "p_ai",
    "p_ai_forms",
    "p_ai_series",
    "ai_model",
    "analytic_curve",
    "jump_time_star",
    "asymptotic_estimate",
    "fit_ai",
    "eta_first_order_match",
]

PROVENANCES = ("analytic", "trotter", "lindblad", "kraus", "shots", "external")

# probabilities from floating-point evolution may sit a few ulps outside [0, 1]
_PROB_SLACK = 1e-9


@dataclass(frozen=True)
class AIParams:
    eta: float = math.pi / 4
    gap: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.eta) and self.eta > 0):
            raise ValidationError(f"eta must be positive, got {self.eta!r}")
        if not (math.isfinite(self.gap) and self.gap > 0):
            raise ValidationError(f"gap must be positive, got {self.gap!r}")


@dataclass(frozen=True)
class TransitionCurve:
    """Sampled P(t).  ``layers`` holds circuit depth N for gate-level runs.

    ``mitigated`` carries readout-corrected values, which are allowed to leave
    [0, 1]; :attr:`out_of_range` flags that.
    """

    times: tuple
    probabilities: tuple
    params: QuenchParams
    provenance: str
    layers: tuple = None
    mitigated: tuple = None
    meta: dict = field(default_factory=dict, compare=True)

    def __post_init__(self):
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))
        object.__setattr__(self, "probabilities", tuple(float(p) for p in self.probabilities))
        n = len(self.times)
        if len(self.probabilities) != n:
            raise ValidationError("times and probabilities differ in length")
        if self.provenance not in PROVENANCES:
            raise ValidationError(f"unknown provenance {self.provenance!r}")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValidationError("curve times must be strictly increasing")
        for p in self.probabilities:
            if not (-_PROB_SLACK <= p <= 1 + _PROB_SLACK):
                raise ValidationError(f"probability {p!r} outside [0, 1]")
        if self.layers is not None:
            object.__setattr__(self, "layers", tuple(int(k) for k in self.layers))
            if len(self.layers) != n:
                raise ValidationError("layers and times differ in length")
        if self.mitigated is not None:
            object.__setattr__(self, "mitigated", tuple(float(p) for p in self.mitigated))
            if len(self.mitigated) != n:
                raise ValidationError("mitigated and times differ in length")

    def __len__(self):
        return len(self.times)

    @property
    def out_of_range(self):
        return self.mitigated is not None and any(p < 0 or p > 1 for p in self.mitigated)

    def as_arrays(self):
        return np.asarray(self.times), np.asarray(self.probabilities)


@dataclass(frozen=True)
class AsymptoticEstimate:
    mean: float
    zeta_eb: float
    t_star: float
    n_tail: int


@dataclass(frozen=True)
class AIFit:
    x1: float
    x2: float
    x3: float
    residual: float
    converged: bool
    iterations: int


def lz_jump_time_hat(anneal_time, ai=AIParams()):
    """Freeze-out time t_hat where 1/gap(t) = eta t."""
    if not anneal_time > 0:
        raise ValidationError("anneal_time must be > 0")
    g = ai.gap
    u = 4.0 / (g * g * ai.eta * anneal_time) ** 2
    # sqrt(1+u) - 1 without cancellation when u is small
    root = u / (math.sqrt(1.0 + u) + 1.0)
    return anneal_time * g / math.sqrt(2.0) * math.sqrt(root)


def _require_unit_gap(ai):
    if ai.gap != 1.0:
        raise ValidationError("the adiabatic-impulse probability is defined here for gap = 1")


def p_ai_forms(anneal_time, ai=AIParams()):
    """Both closed forms of P_AI, evaluated without cancellation.

    The first goes through eps_hat = t_hat / t_a, the second through eta t_a
    directly.  They are algebraically identical.
    """
    _require_unit_gap(ai)
    if anneal_time < 0:
        raise ValidationError("anneal_time must be >= 0")
    if anneal_time == 0:
        return 0.5, 0.5
    x = ai.eta * anneal_time
    # eps_hat^2 = (sqrt(1 + 4/x^2) - 1) / 2
    u = 4.0 / (x * x) if x < 1e150 else 0.0
    if math.isinf(u):
        first = 0.5
    else:
        e2 = 0.5 * u / (math.sqrt(1.0 + u) + 1.0)
        s = math.sqrt(1.0 + e2)
        first = 0.5 * e2 / (s * (s + 1.0))
    # 1 - sqrt(1 - 2/D) = (2/D) / (1 + sqrt(1 - 2/D))
    if x > 1e150:
        second = 0.0
    else:
        D = x * x + x * math.sqrt(x * x + 4.0) + 2.0
        w = 2.0 / D
        second = 0.5 * w / (1.0 + math.sqrt(1.0 - w))
    return first, second


def p_ai(anneal_time, ai=AIParams()):
    return p_ai_forms(anneal_time, ai)[1]


def p_ai_series(anneal_time, ai=AIParams(), terms=3):
    """Expansion of P_AI in powers of sqrt(t_a)."""
    if terms not in (1, 2, 3):
        raise ValidationError(f"terms must be 1, 2 or 3, got {terms!r}")
    if anneal_time < 0:
        raise ValidationError("anneal_time must be >= 0")
    se = math.sqrt(ai.eta)
    coeffs = (0.5, -se / 2.0, ai.eta * se / 8.0)
    powers = (0.0, 0.5, 1.5)
    return sum(c * anneal_time ** q for c, q in zip(coeffs[:terms], powers[:terms]))


def ai_model(anneal_time, x1, x2, x3):
    """x1 - x2 sqrt(1 - 2/D), D = (x3 t)^2 + x3 t sqrt((x3 t)^2 + 4) + 2; vectorised."""
    x = x3 * np.asarray(anneal_time, dtype=float)
    D = x * x + x * np.sqrt(x * x + 4.0) + 2.0
    return x1 - x2 * np.sqrt(1.0 - 2.0 / D)


def analytic_curve(params, times, chi=None, layers=None):
    """Exact P(t) sampled at ``times`` as a TransitionCurve."""
    if chi is None:
        chi = chi_anticrossing(params)
    times = np.asarray(times, dtype=float)
    probs = lz_probability(times, params, chi)
    return TransitionCurve(tuple(times), tuple(probs), params, "analytic", layers=layers)


def jump_time_star(curve):
    """First zero of d^2P/dt^2 after t = 0.

    The sign change is located on the sampled curve with a three-point second
    difference, then refined by bisection on the exact second derivative.
    """
    if curve.provenance != "analytic":
        raise ValidationError("jump time is taken from the analytic curve only")
    if len(curve) < 200:
        raise NotFoundError(f"need at least 200 samples to locate t*, got {len(curve)}")
    t, p = curve.as_arrays()
    h1 = t[1:-1] - t[:-2]
    h2 = t[2:] - t[1:-1]
    d2 = 2.0 * (h1 * p[2:] - (h1 + h2) * p[1:-1] + h2 * p[:-2]) / (h1 * h2 * (h1 + h2))
    tm = t[1:-1]
    sign = np.sign(d2)
    idx = [i for i in range(len(tm)) if tm[i] > 0 and sign[i] != 0]
    for a, b in zip(idx, idx[1:]):
        if sign[a] != sign[b]:
            break
    else:
        raise NotFoundError("no sign change of the second derivative inside the curve")
    params = curve.params
    chi = chi_anticrossing(params)
    lo, hi = tm[a], tm[b]

    def f(x):
        return lz_probability_second_derivative(x, params, chi)

    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return float(lo)
    if flo * fhi > 0:
        # the sampled sign change was a discretisation artefact; widen by a sample on each side
        lo, hi = tm[max(a - 1, 0)], tm[min(b + 1, len(tm) - 1)]
        flo, fhi = f(lo), f(hi)
        if flo * fhi > 0:
            raise NotFoundError("second-derivative sign change could not be bracketed")
    return float(brentq(f, lo, hi, xtol=1e-12, rtol=1e-14, maxiter=200))


def asymptotic_estimate(curve, t_star, min_tail=5):
    """Mean of the samples at t >= t*; zeta_EB is half their peak-to-peak spread.

    Curves carrying readout-mitigated values are averaged on those.
    """
    t, p = curve.as_arrays()
    if curve.mitigated is not None:
        p = np.asarray(curve.mitigated)
    if not t[0] <= t_star <= t[-1]:
        raise InsufficientDataError(f"t* = {t_star!r} lies outside the curve [{t[0]!r}, {t[-1]!r}]")
    tail = p[t >= t_star]
    if len(tail) < min_tail:
        raise InsufficientDataError(f"only {len(tail)} samples after t*, need {min_tail}")
    return AsymptoticEstimate(float(tail.mean()), float((tail.max() - tail.min()) / 2.0), float(t_star), len(tail))


def fit_ai(points, initial=(0.5, 0.5, math.pi / 4), max_iter=2000, tol=1e-10, restarts=3):
    """Least-squares fit of :func:`ai_model` to (t_a, P) points by Nelder-Mead.

    x3 is searched on a log scale so it stays positive.  The simplex is
    restarted from the best point until it stops moving, up to ``restarts``
    extra times.  Non-convergence is reported through the flag, not raised.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 4:
        raise InsufficientDataError("fit needs at least 4 (t_a, P) points")
    ta, y = pts[:, 0], pts[:, 1]
    if not np.all(np.isfinite(pts)) or np.any(ta <= 0):
        raise ValidationError("t_a values must be positive and all values finite")
    if len(np.unique(ta)) != len(ta):
        raise InsufficientDataError("t_a values must be distinct")
    if initial[2] <= 0:
        raise ValidationError("initial x3 must be positive")

    def sse(v):
        r = ai_model(ta, v[0], v[1], math.exp(v[2])) - y
        return float(r @ r)

    x = np.array([initial[0], initial[1], math.log(initial[2])])
    iterations = 0
    converged = False
    for _ in range(restarts + 1):
        res = minimize(sse, x, method="Nelder-Mead",
                       options={"maxiter": max_iter, "xatol": tol, "fatol": math.inf})
        iterations += int(res.nit)
        moved = np.max(np.abs(res.x - x))
        x = res.x
        converged = bool(res.success)
        if converged and moved <= tol:
            break
    rms = math.sqrt(sse(x) / len(ta))
    return AIFit(float(x[0]), float(x[1]), float(math.exp(x[2])), rms, converged, iterations)


def eta_first_order_match():
    """The eta that makes P_AI and the exact asymptote agree at order sqrt(t_a)."""
    eta = math.pi / 4
    gap = math.sqrt(eta) / 2 - math.sqrt(math.pi) / 4
    if abs(gap) > 1e-15:
        raise ArithmeticError(f"first-order coefficients differ by {gap!r}")
    return eta
