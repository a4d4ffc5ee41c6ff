"""Exact Landau-Zener dynamics for H(t) = -(t / 2 t_a) sigma_z - (gap / 2) sigma_x.

Amplitudes are written on the diabatic basis, psi = alpha |0> + beta |1>,
and expressed through parabolic cylinder functions of
z = t exp(i pi/4) / sqrt(t_a):

    alpha = e^{-3 i pi/4} / sqrt(d) * (d chi1 D_{-1-id}(z) + chi2 D_{id}(iz))
    beta  = chi1 D_{-id}(z) + chi2 D_{-1+id}(iz)

with d = gap**2 * t_a / 4 the adiabaticity.  The anticrossing protocol
starts at t = 0 in the ground state of H(0) = -(gap/2) sigma_x, i.e. the
state -(|0> + |1>)/sqrt(2) reproduced by :func:`chi_anticrossing`.
"""

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import ConvergenceError, SingularDenominatorError, StepSizeError, ValidationError
from .special import clgamma, pcf_d

__all__ = [
    "QuenchParams",
    "AmplitudePair",
    "ChiPair",
    "MAX_ADIABATICITY",
    "ANTICROSSING_STATE",
    "z_of_time",
    "amplitudes",
    "chi_anticrossing",
    "chi_general",
    "lz_probability",
    "lz_probability_second_derivative",
    "lz_asymptotic",
    "lz_asymptotic_series",
    "classical_lz",
    "ode_oracle",
    "classical_lz_oracle",
]

MAX_ADIABATICITY = 400.0
_EPS = 2.220446049250313e-16

_E_3PI4 = cmath.exp(0.75j * math.pi)
_E_M3PI4 = cmath.exp(-0.75j * math.pi)
_E_PI4 = cmath.exp(0.25j * math.pi)


@dataclass(frozen=True)
class QuenchParams:
    """Linear Landau-Zener drive: bias t / t_a, coupling ``gap``."""

    anneal_time: float
    gap: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.anneal_time) and self.anneal_time > 0):
            raise ValidationError(f"anneal_time must be positive and finite, got {self.anneal_time!r}")
        if not (math.isfinite(self.gap) and self.gap >= 0):
            raise ValidationError(f"gap must be non-negative and finite, got {self.gap!r}")

    @property
    def adiabaticity(self):
        return self.gap ** 2 * self.anneal_time / 4.0

    @property
    def order(self):
        """The complex order k = -i delta / 2 used by the closed-form coefficients."""
        return -0.5j * self.adiabaticity


@dataclass(frozen=True)
class AmplitudePair:
    alpha: complex
    beta: complex

    @property
    def norm_sq(self):
        return abs(self.alpha) ** 2 + abs(self.beta) ** 2

    def as_array(self):
        return np.array([self.alpha, self.beta], dtype=complex)

    @classmethod
    def from_array(cls, v):
        return cls(complex(v[0]), complex(v[1]))


@dataclass(frozen=True)
class ChiPair:
    chi1: complex
    chi2: complex


ANTICROSSING_STATE = AmplitudePair(-1 / math.sqrt(2), -1 / math.sqrt(2))


def z_of_time(t, anneal_time):
    return t * _E_PI4 / math.sqrt(anneal_time)


def _require_coupled(params):
    d = params.adiabaticity
    if d <= 0:
        raise ValidationError("the parabolic-cylinder solution needs gap > 0")
    if d > MAX_ADIABATICITY:
        raise ValidationError(f"adiabaticity {d:.6g} exceeds {MAX_ADIABATICITY}; exp(-3 pi d / 2) underflows")
    return d


# estimated absolute error of a reconstructed amplitude beyond which we refuse
_CANCELLATION_LIMIT = 1e-9


def _combine(a, b):
    """a + b, refusing when the terms are so large that their sum has lost accuracy."""
    err = 16 * _EPS * (abs(a) + abs(b))
    if err > _CANCELLATION_LIMIT:
        raise ConvergenceError(
            f"amplitude lost to cancellation (terms of size {abs(a):.3g}, estimated error {err:.2g}); "
            "the exact solution is usable up to adiabaticity ~4.5")
    return a + b


def _beta(chi, d, z):
    return _combine(chi.chi1 * pcf_d(-1j * d, z), chi.chi2 * pcf_d(-1 + 1j * d, 1j * z))


def amplitudes(t, params, chi):
    """(alpha, beta) at time t for coefficients ``chi``."""
    d = _require_coupled(params)
    z = z_of_time(t, params.anneal_time)
    alpha = _E_M3PI4 / math.sqrt(d) * _combine(d * chi.chi1 * pcf_d(-1 - 1j * d, z), chi.chi2 * pcf_d(1j * d, 1j * z))
    return AmplitudePair(alpha, _beta(chi, d, z))


def _log_chi_terms(d):
    """Pieces of the closed-form coefficients, in log form where they can overflow."""
    k = -0.5j * d
    sd = math.sqrt(d)
    lg2k = clgamma(2 * k)
    lg12k = clgamma(1 - 2 * k)
    # chi1 = -(2^k e^{i pi k} / (4 sqrt(d/2))) * (sqrt(d) G(k) + (1+i) G(1/2+k)) / G(2k)
    b1 = sd * cmath.exp(clgamma(k) - lg2k) + (1 + 1j) * cmath.exp(clgamma(0.5 + k) - lg2k)
    pre1 = -cmath.exp(k * math.log(2.0)) / (4.0 * math.sqrt(d / 2.0))
    # chi2 = (e^{i pi k} / 2^{k+1}) * (d G(1/2-k) + (1-i) sqrt(d) G(1-k)) / G(1-2k)
    b2 = d * cmath.exp(clgamma(0.5 - k) - lg12k) + (1 - 1j) * sd * cmath.exp(clgamma(1 - k) - lg12k)
    pre2 = cmath.exp(-(k + 1) * math.log(2.0))
    log_e = math.pi * d / 2.0  # log of e^{i pi k}
    return pre1, b1, pre2, b2, log_e


def chi_anticrossing(params):
    """Closed-form coefficients for the ground state at the anticrossing (t = 0)."""
    d = _require_coupled(params)
    pre1, b1, pre2, b2, log_e = _log_chi_terms(d)
    out = []
    for pre, b in ((pre1, b1), (pre2, b2)):
        if b == 0:
            out.append(0j)
            continue
        lg = log_e + cmath.log(pre * b)
        if lg.real > 709.0:
            raise ConvergenceError(f"chi coefficients overflow double precision at adiabaticity {d:.6g}")
        out.append(cmath.exp(lg))
    return ChiPair(out[0], out[1])


def chi_general(initial, z_i, params):
    """Coefficients reproducing ``initial`` amplitudes at the point z_i."""
    if abs(initial.norm_sq - 1.0) > 1e-9:
        raise ValidationError(f"initial state is not normalised (|a|^2+|b|^2 = {initial.norm_sq!r})")
    d = _require_coupled(params)
    z_i = complex(z_i)
    iz = 1j * z_i
    d_m1m = pcf_d(-1 - 1j * d, z_i)
    d_m = pcf_d(-1j * d, z_i)
    d_p_i = pcf_d(1j * d, iz)
    d_m1p_i = pcf_d(-1 + 1j * d, iz)
    den = d * d_m1m * d_m1p_i - d_m * d_p_i
    if abs(den) < 1e-14:
        raise SingularDenominatorError(f"coefficient denominator {abs(den):.3e} is numerically zero")
    sd = math.sqrt(d)
    a, b = initial.alpha, initial.beta
    chi1 = (_E_3PI4 * sd * d_m1p_i * a - d_p_i * b) / den
    chi2 = (-_E_3PI4 * sd * d_m * a + d * d_m1m * b) / den
    return ChiPair(chi1, chi2)


def lz_probability(t, params, chi=None):
    """|beta(t)|^2, the population of the diabatic state |1>.

    ``t`` may be a scalar or an array; ``chi`` defaults to the anticrossing
    coefficients.
    """
    if chi is None:
        chi = chi_anticrossing(params)
    d = _require_coupled(params)
    ta = params.anneal_time

    def one(tt):
        beta = _beta(chi, d, z_of_time(float(tt), ta))
        return beta.real ** 2 + beta.imag ** 2

    if np.ndim(t) == 0:
        return one(t)
    return np.array([one(tt) for tt in np.asarray(t, dtype=float)])


def lz_probability_second_derivative(t, params, chi=None):
    """d^2 |beta|^2 / dt^2 from the exact amplitudes.

    Uses P' = -gap Im(conj(beta) alpha) and the Schrodinger equation, so no
    finite differencing is involved.
    """
    if chi is None:
        chi = chi_anticrossing(params)
    amp = amplitudes(t, params, chi)
    a, b = amp.alpha, amp.beta
    eps = t / params.anneal_time
    g = params.gap
    da = -1j * (-0.5 * eps * a - 0.5 * g * b)
    db = -1j * (-0.5 * g * a + 0.5 * eps * b)
    return -g * (db.conjugate() * a + b.conjugate() * da).imag


def lz_asymptotic(params):
    """Long-time limit of |beta|^2 for the anticrossing protocol."""
    d = _require_coupled(params)
    _, _, pre2, b2, log_e = _log_chi_terms(d)
    # |chi2|^2 e^{-3 pi d/2} / d, assembled in logs
    log_mag = 2.0 * (log_e + math.log(abs(pre2)) + math.log(abs(b2))) - 1.5 * math.pi * d - math.log(d)
    return 1.0 - math.exp(log_mag)


_SQRT_PI = math.sqrt(math.pi)
_SERIES_COEFFS = (0.5, -_SQRT_PI / 4.0, _SQRT_PI / 32.0 * (math.pi - math.log(4.0)))


def lz_asymptotic_series(anneal_time, terms=3):
    """Small-t_a expansion of :func:`lz_asymptotic` (gap = 1), in powers of sqrt(t_a)."""
    if terms not in (1, 2, 3):
        raise ValidationError(f"terms must be 1, 2 or 3, got {terms!r}")
    if anneal_time < 0:
        raise ValidationError("anneal_time must be >= 0")
    powers = (0.0, 0.5, 1.5)
    return sum(c * anneal_time ** q for c, q in zip(_SERIES_COEFFS[:terms], powers[:terms]))


def classical_lz(adiabaticity):
    """exp(-2 pi delta): probability of staying in the initial diabatic state after a full sweep."""
    if adiabaticity < 0:
        raise ValidationError("adiabaticity must be >= 0")
    return math.exp(-2.0 * math.pi * adiabaticity)


def ode_oracle(params, t_start, t_end, initial, tolerance=1e-12, t_eval=None):
    """Direct integration of the amplitude equations (DOP853).

    Returns a list of ``(t, AmplitudePair)``; by default at the integrator's
    own steps, otherwise at ``t_eval``.
    """
    if not t_start < t_end:
        raise ValidationError("t_start must be < t_end")
    if not 1e-13 <= tolerance <= 1e-6:
        raise ValidationError(f"tolerance must lie in [1e-13, 1e-6], got {tolerance!r}")
    ta = params.anneal_time
    g = params.gap

    def rhs(t, y):
        eps = t / ta
        a, b = y
        return np.array([0.5j * (eps * a + g * b), 0.5j * (g * a - eps * b)])

    y0 = np.array([initial.alpha, initial.beta], dtype=complex)
    # the tighter absolute tolerance keeps the norm drift inside 10x tolerance
    sol = solve_ivp(rhs, (t_start, t_end), y0, method="DOP853", rtol=tolerance, atol=tolerance / 100,
                    t_eval=None if t_eval is None else np.asarray(t_eval, dtype=float))
    if sol.status != 0:
        if "step size" in sol.message.lower():
            raise StepSizeError(sol.message)
        raise ConvergenceError(sol.message)
    return [(float(t), AmplitudePair(complex(y[0]), complex(y[1]))) for t, y in zip(sol.t, sol.y.T)]


def classical_lz_oracle(adiabaticity, gap=1.0, half_window=None, tail_fraction=0.2, tolerance=1e-10):
    """Window-averaged |alpha|^2 after a -T..T sweep started in |0>.

    The tail of the sweep, ``t > (1 - tail_fraction) T``, is sampled densely
    and averaged, which removes the slowly decaying oscillation around the
    asymptotic value.
    """
    ta = 4.0 * adiabaticity / gap ** 2
    params = QuenchParams(ta, gap)
    T = half_window if half_window is not None else 100.0 * max(1.0, ta)
    t_eval = np.linspace((1.0 - tail_fraction) * T, T, 4001)
    traj = ode_oracle(params, -T, T, AmplitudePair(1.0, 0.0), tolerance, t_eval=t_eval)
    pops = np.array([abs(a.alpha) ** 2 for _, a in traj])
    return float(np.trapezoid(pops, t_eval) / (t_eval[-1] - t_eval[0]))
