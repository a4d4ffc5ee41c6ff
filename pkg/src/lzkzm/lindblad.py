"""Open-system evolution of the driven qubit.

Relaxation L1 = sqrt(G) |0><1| and dephasing L2 = sqrt(g) sigma_z with
G = 1/T1 and g = 1/T2 - 1/(2 T1), rates in 1/us.  Simulation time is
dimensionless, so rates are multiplied by ``rate_scale`` (physical us per
unit of simulation time); see :func:`rate_scale_from_profile`.

Two modes:

* :func:`lindblad_evolve` integrates the master equation with fixed-step RK4,
  several substeps per layer.
* :func:`kraus_evolve` applies the ideal layer unitary followed by the exact
  relaxation and dephasing channels for the layer's physical duration.
"""

import math
from dataclasses import dataclass

import numpy as np

from .circuit import hamiltonian_at, step_unitary
from .errors import PhysicalConstraintError, StepSizeError, ValidationError
from .kzm import TransitionCurve

__all__ = [
    "NoiseParams",
    "NOISELESS",
    "MAX_SUBSTEPS",
    "density_from_state",
    "check_density",
    "collapse_ops",
    "lindblad_rhs",
    "lindblad_trajectory",
    "lindblad_evolve",
    "kraus_layer_channel",
    "kraus_evolve",
    "rate_scale_from_profile",
    "layer_duration_us",
]

MAX_SUBSTEPS = 1_000_000

_SIGMA_Z = np.diag([1.0 + 0j, -1.0])
_LOWER = np.array([[0, 1], [0, 0]], dtype=complex)  # |0><1|
_ID = np.eye(2, dtype=complex)

# RK4 step is taken with h * ||generator|| below this
_RK4_KAPPA = 0.03


@dataclass(frozen=True)
class NoiseParams:
    """T1, T2 in microseconds; ``math.inf`` switches a channel off."""

    T1: float = math.inf
    T2: float = math.inf

    def __post_init__(self):
        for name in ("T1", "T2"):
            v = getattr(self, name)
            if math.isnan(v) or v <= 0:
                raise ValidationError(f"{name} must be positive, got {v!r}")
        if self.T2 > 2.0 * self.T1:
            raise PhysicalConstraintError(
                f"T2 = {self.T2!r} us exceeds 2*T1 = {2.0 * self.T1!r} us; the pure dephasing rate would be negative")

    @property
    def relaxation_rate(self):
        return 1.0 / self.T1

    @property
    def dephasing_rate(self):
        return max(1.0 / self.T2 - 0.5 / self.T1, 0.0)


NOISELESS = NoiseParams()


def density_from_state(amplitudes):
    v = np.array([amplitudes.alpha, amplitudes.beta], dtype=complex)
    return np.outer(v, v.conj())


def check_density(rho, trace_tol=1e-9, herm_tol=1e-10, eig_tol=1e-9):
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2) or not np.all(np.isfinite(rho)):
        raise ValidationError("density matrix must be a finite 2x2 array")
    if abs(np.trace(rho) - 1) > trace_tol:
        raise ValidationError(f"trace {np.trace(rho)!r} differs from 1")
    if np.max(np.abs(rho - rho.conj().T)) > herm_tol:
        raise ValidationError("density matrix is not Hermitian")
    if np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min() < -eig_tol:
        raise ValidationError("density matrix has a negative eigenvalue")
    return rho


def collapse_ops(noise, rate_scale=1.0):
    """[sqrt(G s) |0><1|, sqrt(g s) sigma_z] for rate scale s."""
    if rate_scale < 0:
        raise ValidationError("rate_scale must be >= 0")
    return [math.sqrt(noise.relaxation_rate * rate_scale) * _LOWER,
            math.sqrt(noise.dephasing_rate * rate_scale) * _SIGMA_Z]


def lindblad_rhs(rho, H, ops):
    out = -1j * (H @ rho - rho @ H)
    for L in ops:
        Ld = L.conj().T
        LdL = Ld @ L
        out += L @ rho @ Ld - 0.5 * (LdL @ rho + rho @ LdL)
    return out


def _hamiltonian_fn(params, grid, hamiltonian):
    t = grid.times()
    if hamiltonian == "sampled":
        return lambda k, s: hamiltonian_at(t[k], params)
    if hamiltonian == "continuous":
        return lambda k, s: hamiltonian_at(s, params)
    if hamiltonian == "none":
        zero = np.zeros((2, 2), dtype=complex)
        return lambda k, s: zero
    raise ValidationError(f"hamiltonian must be 'sampled', 'continuous' or 'none', got {hamiltonian!r}")


def _substeps_for(params, grid, ops, hamiltonian):
    """Substeps per layer so that h * (2||H|| + sum ||L||^2) <= kappa."""
    dissip = sum(float(np.linalg.norm(L, 2)) ** 2 for L in ops)
    if hamiltonian == "none":
        hnorm = 0.0
    else:
        eps = max(abs(grid.t_i), abs(grid.t_f)) / params.anneal_time
        hnorm = 0.5 * math.hypot(eps, params.gap)
    gen = 2.0 * hnorm + 2.0 * dissip
    return max(1, math.ceil(grid.dt * gen / _RK4_KAPPA))


def lindblad_trajectory(params, grid, noise, rho0, rate_scale=1.0, hamiltonian="sampled", substeps=None):
    """Density matrices at every layer boundary.

    ``hamiltonian``: ``"sampled"`` freezes H at the left end of each layer,
    like the gate-level circuit; ``"continuous"`` uses H(t); ``"none"`` drops it.
    """
    rho = check_density(rho0).copy()
    ops = [L for L in collapse_ops(noise, rate_scale) if np.any(L)]
    hfn = _hamiltonian_fn(params, grid, hamiltonian)
    m = substeps if substeps is not None else _substeps_for(params, grid, ops, hamiltonian)
    if m < 1 or m * grid.n_steps > MAX_SUBSTEPS:
        raise StepSizeError(f"{m} substeps per layer x {grid.n_steps} layers exceeds the cap of {MAX_SUBSTEPS}")
    t = grid.times()
    h = grid.dt / m
    out = [rho.copy()]
    for k in range(grid.n_steps):
        for j in range(m):
            s = t[k] + j * h
            H0, Hm, H1 = hfn(k, s), hfn(k, s + 0.5 * h), hfn(k, s + h)
            k1 = lindblad_rhs(rho, H0, ops)
            k2 = lindblad_rhs(rho + 0.5 * h * k1, Hm, ops)
            k3 = lindblad_rhs(rho + 0.5 * h * k2, Hm, ops)
            k4 = lindblad_rhs(rho + h * k3, H1, ops)
            rho = rho + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        out.append(rho.copy())
    return out


def _curve_from(rhos, params, grid, provenance, meta):
    probs = [float(r[1, 1].real) for r in rhos]
    meta = dict(meta)
    meta["max_trace_error"] = max(float(abs(np.trace(r) - 1.0)) for r in rhos)
    meta["max_hermiticity_error"] = max(float(np.max(np.abs(r - r.conj().T))) for r in rhos)
    meta["min_eigenvalue"] = min(float(np.linalg.eigvalsh(0.5 * (r + r.conj().T)).min()) for r in rhos)
    meta["final_purity"] = float(np.trace(rhos[-1] @ rhos[-1]).real)
    return TransitionCurve(tuple(grid.times()), tuple(probs), params, provenance,
                           layers=tuple(range(grid.n_steps + 1)), meta=meta)


def lindblad_evolve(params, grid, noise, rho0, rate_scale=1.0, hamiltonian="sampled", substeps=None):
    """<1|rho|1> at every layer boundary, with trajectory diagnostics in ``meta``."""
    rhos = lindblad_trajectory(params, grid, noise, rho0, rate_scale, hamiltonian, substeps)
    return _curve_from(rhos, params, grid, "lindblad", {"hamiltonian": hamiltonian, "rate_scale": rate_scale})


def kraus_layer_channel(noise, duration):
    """Kraus operators of relaxation then dephasing over ``duration`` us."""
    p = -math.expm1(-noise.relaxation_rate * duration)
    ad = [np.array([[1, 0], [0, math.sqrt(1 - p)]], dtype=complex),
          np.array([[0, math.sqrt(p)], [0, 0]], dtype=complex)]
    # sigma_z dephasing at rate g multiplies coherences by exp(-2 g tau)
    lam = math.exp(-2.0 * noise.dephasing_rate * duration)
    pd = [math.sqrt((1 + lam) / 2) * _ID, math.sqrt((1 - lam) / 2) * _SIGMA_Z]
    return [B @ A for B in pd for A in ad]


def kraus_evolve(params, grid, noise, rho0, duration):
    """Ideal layer unitary followed by the noise channel of ``duration`` us."""
    rho = check_density(rho0).copy()
    if duration < 0:
        raise ValidationError("duration must be >= 0")
    ks = kraus_layer_channel(noise, duration)
    t = grid.times()
    out = [rho.copy()]
    for k in range(grid.n_steps):
        U = step_unitary(hamiltonian_at(t[k], params), grid.dt)
        rho = U @ rho @ U.conj().T
        rho = sum(K @ rho @ K.conj().T for K in ks)
        out.append(rho.copy())
    return _curve_from(out, params, grid, "kraus", {"duration_us": duration})


def layer_duration_us(t_sx_ns):
    """Physical time of one layer (two sqrt(X) pulses), in us."""
    if t_sx_ns < 0:
        raise ValidationError("t_sx must be >= 0")
    return 2.0 * t_sx_ns * 1e-3


def rate_scale_from_profile(grid, qubit):
    """Physical us per unit of simulation time: 2 t_SX / dt.

    ``qubit`` is anything with a ``t_sx`` attribute in ns, or the number itself.
    """
    t_sx = getattr(qubit, "t_sx", qubit)
    if grid.dt <= 0:
        raise ValidationError("dt must be > 0")
    return layer_duration_us(float(t_sx)) / grid.dt
