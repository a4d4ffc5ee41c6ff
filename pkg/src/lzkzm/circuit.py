"""Gate-level single-qubit simulation of the sampled LZ Hamiltonian.

Each layer applies the exact exponential exp(-i H(t_i + k dt) dt) of the
Hamiltonian frozen at the left end of the step.  A layer is stored both as
its U(theta, phi, lambda) Euler form and as the five native gates

    rz(lambda), sx, rz(theta + pi), sx, rz(phi + pi)

(in time order) plus an explicit global phase.
"""

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .analytic import AmplitudePair, QuenchParams
from .errors import ValidationError
from .kzm import TransitionCurve

__all__ = [
    "TimeGrid",
    "GateU3",
    "Gate",
    "Layer",
    "LayeredCircuit",
    "T_SX_NS",
    "SX",
    "X",
    "ID",
    "rz",
    "ry",
    "u3_matrix",
    "hamiltonian_at",
    "step_unitary",
    "check_unitary",
    "euler_decompose",
    "basis_decompose",
    "compose",
    "build_circuit",
    "run_circuit",
    "prepare_anticrossing",
    "trotter_evolve",
    "interaction_time",
]

T_SX_NS = 35.555

ID = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
SX = 0.5 * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]])
_SIGMA_X = X
_SIGMA_Y = np.array([[0, -1j], [1j, 0]])
_SIGMA_Z = np.diag([1.0 + 0j, -1.0])


@dataclass(frozen=True)
class TimeGrid:
    t_i: float
    t_f: float
    n_steps: int

    def __post_init__(self):
        if not (math.isfinite(self.t_i) and math.isfinite(self.t_f) and self.t_f > self.t_i):
            raise ValidationError(f"need finite t_f > t_i, got [{self.t_i!r}, {self.t_f!r}]")
        if isinstance(self.n_steps, bool) or int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ValidationError(f"n_steps must be a positive integer, got {self.n_steps!r}")
        object.__setattr__(self, "n_steps", int(self.n_steps))

    @property
    def dt(self):
        return (self.t_f - self.t_i) / self.n_steps

    def times(self):
        """Layer boundaries t_i + k dt, k = 0..N (last one pinned to t_f)."""
        t = self.t_i + self.dt * np.arange(self.n_steps + 1)
        t[-1] = self.t_f
        return t


def _wrap(a):
    """Angle into (-pi, pi]."""
    a = math.remainder(a, 2.0 * math.pi)
    return math.pi if a == -math.pi else a + 0.0


def rz(angle):
    return np.diag([cmath.exp(-0.5j * angle), cmath.exp(0.5j * angle)])


def ry(angle):
    """cos(a/2) I - i sin(a/2) sigma_y."""
    c, s = math.cos(angle / 2), math.sin(angle / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def u3_matrix(theta, phi, lam):
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([
        [c, -cmath.exp(1j * lam) * s],
        [cmath.exp(1j * phi) * s, cmath.exp(1j * (phi + lam)) * c],
    ])


@dataclass(frozen=True)
class GateU3:
    """e^{i gamma} U(theta, phi, lambda)."""

    theta: float
    phi: float
    lam: float
    gamma: float = 0.0

    def __post_init__(self):
        if not -1e-12 <= self.theta <= math.pi + 1e-12:
            raise ValidationError(f"theta must lie in [0, pi], got {self.theta!r}")

    def matrix(self):
        return cmath.exp(1j * self.gamma) * u3_matrix(self.theta, self.phi, self.lam)


def hamiltonian_at(t, params):
    """-(t / 2 t_a) sigma_z - (gap / 2) sigma_x."""
    eps = t / params.anneal_time
    return -0.5 * eps * _SIGMA_Z - 0.5 * params.gap * _SIGMA_X


def step_unitary(H, dt):
    """exp(-i H dt) for traceless Hermitian H = n . sigma, in closed form."""
    H = np.asarray(H, dtype=complex)
    if H.shape != (2, 2):
        raise ValidationError("H must be 2x2")
    if np.max(np.abs(H - H.conj().T)) > 1e-12 or abs(H[0, 0] + H[1, 1]) > 1e-12:
        raise ValidationError("H must be traceless Hermitian")
    nx, ny, nz = H[0, 1].real, -H[0, 1].imag, H[0, 0].real
    norm = math.sqrt(nx * nx + ny * ny + nz * nz)
    if norm == 0.0:
        return ID.copy()
    c = math.cos(norm * dt)
    s = math.sin(norm * dt) / norm
    return c * ID - 1j * s * (nx * _SIGMA_X + ny * _SIGMA_Y + nz * _SIGMA_Z)


def check_unitary(U, tol=1e-10):
    U = np.asarray(U, dtype=complex)
    if U.shape != (2, 2) or not np.all(np.isfinite(U)):
        raise ValidationError("expected a finite 2x2 matrix")
    err = np.max(np.abs(U.conj().T @ U - ID))
    if err > tol:
        raise ValidationError(f"matrix is not unitary (|U^dag U - I| = {err:.3e})")
    return U


def euler_decompose(U):
    """Angles and global phase with U = e^{i gamma} U(theta, phi, lambda).

    theta is in [0, pi].  When sin(theta/2) vanishes, lambda := 0; when
    cos(theta/2) vanishes, phi := 0.
    """
    U = check_unitary(U)
    c, s = abs(U[0, 0]), abs(U[1, 0])
    theta = 2.0 * math.atan2(s, c)
    if s < 1e-12:
        gamma = cmath.phase(U[0, 0])
        lam = 0.0
        phi = cmath.phase(U[1, 1]) - gamma
    elif c < 1e-12:
        phi = 0.0
        gamma = cmath.phase(U[1, 0])
        lam = cmath.phase(-U[0, 1]) - gamma
    else:
        gamma = cmath.phase(U[0, 0])
        phi = cmath.phase(U[1, 0]) - gamma
        lam = cmath.phase(-U[0, 1]) - gamma
    return GateU3(theta, _wrap(phi), _wrap(lam), _wrap(gamma))


@dataclass(frozen=True)
class Gate:
    name: str
    angle: float = None

    def matrix(self):
        if self.name == "rz":
            return rz(self.angle)
        return {"sx": SX, "x": X, "id": ID}[self.name]


@dataclass(frozen=True)
class Layer:
    """Native gates in time order and the global phase multiplying their product."""

    gates: tuple
    phase: float = 0.0


def basis_decompose(g):
    gates = (
        Gate("rz", _wrap(g.lam)),
        Gate("sx"),
        Gate("rz", _wrap(g.theta + math.pi)),
        Gate("sx"),
        Gate("rz", _wrap(g.phi + math.pi)),
    )
    # rz angles were wrapped; each 2 pi shift flips the sign of rz, absorbed into the phase
    shifts = (g.lam - gates[0].angle) + (g.theta + math.pi - gates[2].angle) + (g.phi + math.pi - gates[4].angle)
    phase = g.gamma + (g.lam + g.phi + math.pi) / 2.0 + shifts / 2.0
    return Layer(gates, _wrap(phase))


def compose(layer):
    M = ID.copy()
    for gate in layer.gates:
        M = gate.matrix() @ M
    return cmath.exp(1j * layer.phase) * M


_GATE_NAMES = ("id", "rz", "sx", "x")


@dataclass(frozen=True)
class LayeredCircuit:
    preparation: Layer
    layers: tuple
    shots: int = 5000

    def dump(self):
        """Plain-text listing, one gate per line."""
        out = ["circuit v1", f"shots {self.shots}"]
        blocks = [("prep", self.preparation)] + [(f"layer {k}", L) for k, L in enumerate(self.layers, 1)]
        for head, layer in blocks:
            out.append(f"{head} phase {layer.phase!r}")
            for g in layer.gates:
                out.append(f"  {g.name}" if g.angle is None else f"  {g.name} {g.angle!r}")
        return "\n".join(out) + "\n"

    @classmethod
    def parse(cls, text):
        lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        if not lines or lines[0].strip() != "circuit v1":
            raise ValidationError("not a circuit listing (missing 'circuit v1' header)")
        try:
            key, value = lines[1].split()
            if key != "shots":
                raise ValueError
            shots = int(value)
        except (IndexError, ValueError):
            raise ValidationError("second line must be 'shots <int>'") from None
        blocks = []
        for lineno, ln in enumerate(lines[2:], 3):
            parts = ln.split()
            if not ln.startswith(" "):
                if parts[0] == "prep" and len(parts) == 3 and parts[1] == "phase":
                    phase = parts[2]
                elif parts[0] == "layer" and len(parts) == 4 and parts[2] == "phase":
                    phase = parts[3]
                else:
                    raise ValidationError(f"line {lineno}: bad block header {ln!r}")
                blocks.append([float(phase), []])
                continue
            if not blocks or parts[0] not in _GATE_NAMES:
                raise ValidationError(f"line {lineno}: unexpected gate line {ln!r}")
            if parts[0] == "rz":
                if len(parts) != 2:
                    raise ValidationError(f"line {lineno}: rz needs one angle")
                blocks[-1][1].append(Gate("rz", float(parts[1])))
            else:
                blocks[-1][1].append(Gate(parts[0]))
        if not blocks:
            raise ValidationError("circuit has no preparation block")
        layers = [Layer(tuple(g), p) for p, g in blocks]
        return cls(layers[0], tuple(layers[1:]), shots)


def build_circuit(params, grid, preparation=None, shots=5000):
    """Native-gate program for the sampled evolution on ``grid``."""
    if preparation is None:
        preparation = ry(math.pi / 2)
    prep = basis_decompose(euler_decompose(preparation))
    dt = grid.dt
    t = grid.times()
    layers = tuple(basis_decompose(euler_decompose(step_unitary(hamiltonian_at(t[k], params), dt)))
                   for k in range(grid.n_steps))
    return LayeredCircuit(prep, layers, shots)


def run_circuit(circuit):
    """Statevectors from |0> after the preparation and after every layer."""
    psi = compose(circuit.preparation) @ np.array([1.0, 0.0], dtype=complex)
    states = [psi]
    for layer in circuit.layers:
        psi = compose(layer) @ psi
        states.append(psi)
    return states


def prepare_anticrossing():
    """Ground state of H(0) = -(gap/2) sigma_x, reached from |0> by a y rotation of +pi/2."""
    v = ry(math.pi / 2) @ np.array([1.0, 0.0], dtype=complex)
    return AmplitudePair.from_array(v)


def trotter_evolve(params, grid, initial):
    """|beta|^2 at every layer boundary of the left-endpoint product formula."""
    if abs(initial.norm_sq - 1.0) > 1e-9:
        raise ValidationError("initial state is not normalised")
    psi = initial.as_array()
    t = grid.times()
    dt = grid.dt
    probs = [abs(psi[1]) ** 2]
    for k in range(grid.n_steps):
        psi = step_unitary(hamiltonian_at(t[k], params), dt) @ psi
        probs.append(abs(psi[1]) ** 2)
    return TransitionCurve(tuple(t), tuple(probs), params, "trotter", layers=tuple(range(grid.n_steps + 1)))


def interaction_time(n_layers, t_sx=T_SX_NS):
    """Physical duration 2 t_SX N of an N-layer circuit (same unit as t_sx)."""
    if n_layers < 0:
        raise ValidationError("layer count must be >= 0")
    if t_sx < 0:
        raise ValidationError("t_sx must be >= 0")
    return 2.0 * t_sx * n_layers
