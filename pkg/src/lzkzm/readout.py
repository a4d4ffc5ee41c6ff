"""Shot sampling and first-order readout-error mitigation.

The calibration matrix A has A[i, j] = P(measure i | prepared j), so its
columns sum to one and P_noisy = A P_ideal.  Mitigation applies A^-1, which
can push estimates outside [0, 1]; that is flagged and clipping is opt-in.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import SingularCalibrationError, ValidationError

__all__ = [
    "ReadoutCalibration",
    "ShotResult",
    "MitigationResult",
    "IDENTITY_CALIBRATION",
    "make_rng",
    "sample_shots",
    "apply_readout_noise",
    "mitigate",
    "clip_and_renormalize",
    "mitigate_shots",
    "mitigated_sigma",
    "calibration_from_profile",
]

_MIN_DET = 1e-6


def make_rng(seed):
    """Counter-based generator (Philox) for ``seed``."""
    return np.random.Generator(np.random.Philox(seed))


@dataclass(frozen=True)
class ReadoutCalibration:
    p00: float
    p01: float
    p10: float
    p11: float

    def __post_init__(self):
        for name in ("p00", "p01", "p10", "p11"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValidationError(f"{name} = {v!r} is not a probability")
        if abs(self.p00 + self.p10 - 1) > 1e-12 or abs(self.p01 + self.p11 - 1) > 1e-12:
            raise ValidationError("calibration columns must each sum to 1")

    @property
    def matrix(self):
        return np.array([[self.p00, self.p01], [self.p10, self.p11]])

    @property
    def det(self):
        return self.p00 * self.p11 - self.p01 * self.p10


IDENTITY_CALIBRATION = ReadoutCalibration(1.0, 0.0, 0.0, 1.0)


@dataclass(frozen=True)
class ShotResult:
    n0: int
    n1: int
    shots: int
    seed: int

    def __post_init__(self):
        if self.n0 < 0 or self.n1 < 0 or self.n0 + self.n1 != self.shots:
            raise ValidationError("counts must be non-negative and add up to the shot count")

    @property
    def p1(self):
        return self.n1 / self.shots


@dataclass(frozen=True)
class MitigationResult:
    probabilities: tuple
    out_of_range: bool
    clipped: bool = False

    @property
    def p1(self):
        return self.probabilities[1]


def sample_shots(p1, shots, seed):
    """Binomial draw of ``shots`` measurements with P(1) = p1."""
    if not 0.0 <= p1 <= 1.0:
        raise ValidationError(f"p1 = {p1!r} is not a probability")
    if isinstance(shots, bool) or int(shots) != shots or shots < 1:
        raise ValidationError(f"shots must be a positive integer, got {shots!r}")
    if int(seed) != seed or seed < 0:
        raise ValidationError("seed must be a non-negative integer")
    n1 = int(make_rng(int(seed)).binomial(int(shots), p1))
    return ShotResult(int(shots) - n1, n1, int(shots), int(seed))


def _as_vector(p):
    v = np.asarray(p, dtype=float)
    if v.shape != (2,) or not np.all(np.isfinite(v)):
        raise ValidationError("expected a length-2 probability vector")
    return v


def apply_readout_noise(p_ideal, cal):
    v = _as_vector(p_ideal)
    if abs(v.sum() - 1) > 1e-12:
        raise ValidationError("probability vector must sum to 1")
    return cal.matrix @ v


def clip_and_renormalize(p):
    v = np.clip(_as_vector(p), 0.0, 1.0)
    s = v.sum()
    if s == 0:
        raise ValidationError("cannot renormalise an all-zero vector")
    return v / s


def mitigate(p_noisy, cal, clip=False):
    """A^-1 p_noisy via the explicit 2x2 inverse."""
    v = _as_vector(p_noisy)
    d = cal.det
    if abs(d) < _MIN_DET:
        raise SingularCalibrationError(f"calibration matrix is singular (det = {d!r})")
    a, b, c, e = cal.p00, cal.p01, cal.p10, cal.p11
    out = np.array([e * v[0] - b * v[1], -c * v[0] + a * v[1]]) / d
    flag = bool(np.any(out < 0) or np.any(out > 1))
    if clip and flag:
        return MitigationResult(tuple(float(x) for x in clip_and_renormalize(out)), True, True)
    return MitigationResult(tuple(float(x) for x in out), flag, False)


def mitigate_shots(result, cal, clip=False):
    return mitigate([result.n0 / result.shots, result.n1 / result.shots], cal, clip)


def mitigated_sigma(p1_ideal, shots, cal):
    """Standard deviation of the mitigated P(1) estimate from ``shots`` binomial draws."""
    q = float(apply_readout_noise([1 - p1_ideal, p1_ideal], cal)[1])
    return math.sqrt(q * (1 - q) / shots) / abs(cal.det)


def calibration_from_profile(prob_meas1_prep0, prob_meas0_prep1):
    for name, v in (("prob_meas1_prep0", prob_meas1_prep0), ("prob_meas0_prep1", prob_meas0_prep1)):
        if not 0.0 <= v < 1.0:
            raise ValidationError(f"{name} = {v!r} must lie in [0, 1)")
    return ReadoutCalibration(1.0 - prob_meas1_prep0, prob_meas0_prep1, prob_meas1_prep0, 1.0 - prob_meas0_prep1)
