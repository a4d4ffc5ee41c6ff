import math
import os

import numpy as np
import pytest
from scipy.linalg import expm
from scipy.stats import unitary_group

from lzkzm.analytic import ANTICROSSING_STATE, AmplitudePair, QuenchParams, lz_probability, ode_oracle
from lzkzm.circuit import (
    ID,
    SX,
    X,
    GateU3,
    LayeredCircuit,
    TimeGrid,
    basis_decompose,
    build_circuit,
    check_unitary,
    compose,
    euler_decompose,
    hamiltonian_at,
    interaction_time,
    prepare_anticrossing,
    run_circuit,
    step_unitary,
    trotter_evolve,
)
from lzkzm.errors import ValidationError

DATA = os.path.join(os.path.dirname(__file__), "data")
SZ = np.diag([1.0, -1.0])


def _sup_error(n):
    params = QuenchParams(2.0)
    grid = TimeGrid(0.0, 10.0, n)
    curve = trotter_evolve(params, grid, prepare_anticrossing())
    exact = lz_probability(grid.times(), params)
    return float(np.max(np.abs(np.asarray(curve.probabilities) - exact)))


def test_grid():
    g = TimeGrid(0.0, 10.0, 50)
    assert g.dt == 0.2
    t = g.times()
    assert len(t) == 51 and t[0] == 0.0 and t[-1] == 10.0
    for bad in [(1.0, 1.0, 5), (0.0, 1.0, 0), (0.0, 1.0, 2.5), (0.0, math.inf, 3)]:
        with pytest.raises(ValidationError):
            TimeGrid(*bad)


def test_hamiltonian():
    p = QuenchParams(2.0)
    assert np.allclose(hamiltonian_at(0.0, p), -0.5 * X)
    assert np.allclose(hamiltonian_at(2.0, p), -0.5 * SZ - 0.5 * X)
    for t in (-3.0, 0.7, 9.0):
        w = np.linalg.eigvalsh(hamiltonian_at(t, p))
        assert abs((w[1] - w[0]) - math.hypot(t / 2.0, 1.0)) <= 1e-14


def test_step_unitary():
    assert np.array_equal(step_unitary(-0.5 * X, 0.0), ID)
    half = step_unitary(-0.5 * X, math.pi)
    assert np.allclose(half @ half, -ID, atol=1e-15)
    rng = np.random.default_rng(11)
    for _ in range(50):
        n = rng.normal(size=3)
        H = n[0] * X + n[1] * np.array([[0, -1j], [1j, 0]]) + n[2] * SZ
        assert np.max(np.abs(step_unitary(H, 0.2) - expm(-0.2j * H))) <= 1e-12
    with pytest.raises(ValidationError):
        step_unitary(np.eye(2), 0.1)


def test_euler_special_cases():
    g = euler_decompose(ID)
    assert (g.theta, g.phi, g.lam, g.gamma) == (0.0, 0.0, 0.0, 0.0)
    g = euler_decompose(X)
    assert abs(g.theta - math.pi) <= 1e-15 and g.phi == 0.0 and abs(abs(g.lam) - math.pi) <= 1e-15
    assert np.max(np.abs(g.matrix() - X)) <= 1e-15
    with pytest.raises(ValidationError):
        euler_decompose(np.array([[1, 1], [0, 1]]))
    with pytest.raises(ValidationError):
        GateU3(4.0, 0.0, 0.0)


def test_haar_round_trip():
    mats = unitary_group.rvs(2, size=1000, random_state=2024)
    worst = 0.0
    for U in mats:
        g = euler_decompose(U)
        assert 0.0 <= g.theta <= math.pi
        worst = max(worst, np.max(np.abs(g.matrix() - U)), np.max(np.abs(compose(basis_decompose(g)) - U)))
    assert worst <= 1e-9


def test_basis_layer_shape():
    layer = basis_decompose(GateU3(0.0, 0.0, 0.0))
    assert [g.name for g in layer.gates] == ["rz", "sx", "rz", "sx", "rz"]
    assert np.max(np.abs(compose(layer) - ID)) <= 1e-9
    assert np.max(np.abs(compose(basis_decompose(euler_decompose(X))) - X)) <= 1e-9


def test_random_u3_against_direct_matrix():
    rng = np.random.default_rng(5)
    for _ in range(1000):
        g = GateU3(rng.uniform(0, math.pi), rng.uniform(-7, 7), rng.uniform(-7, 7), rng.uniform(-7, 7))
        assert np.max(np.abs(compose(basis_decompose(g)) - g.matrix())) <= 1e-9


def test_deep_circuit_stays_unitary():
    circ = build_circuit(QuenchParams(0.3), TimeGrid(0.0, 10.0, 10_000))
    M = compose(circ.preparation)
    for layer in circ.layers:
        M = compose(layer) @ M
    check_unitary(M, 1e-9)


def test_preparation():
    a = prepare_anticrossing()
    assert abs(a.alpha - 1 / math.sqrt(2)) <= 1e-15 and abs(a.beta - 1 / math.sqrt(2)) <= 1e-15
    w, v = np.linalg.eigh(hamiltonian_at(0.0, QuenchParams(1.0)))
    assert abs(abs(v[:, 0].conj() @ a.as_array()) ** 2 - 1) <= 1e-12
    # same ray as the state the exact solution starts from
    assert abs(abs(np.vdot(ANTICROSSING_STATE.as_array(), a.as_array())) - 1) <= 1e-15


def test_trotter_properties():
    params = QuenchParams(2.0)
    grid = TimeGrid(0.0, 10.0, 50)
    curve = trotter_evolve(params, grid, prepare_anticrossing())
    assert curve.provenance == "trotter" and curve.layers == tuple(range(51))
    assert abs(curve.probabilities[0] - 0.5) <= 1e-15
    states = run_circuit(build_circuit(params, grid))
    for psi, p in zip(states, curve.probabilities):
        assert abs(np.vdot(psi, psi).real - 1) <= 1e-9
        assert abs(abs(psi[1]) ** 2 - p) <= 1e-12


def test_trotter_decoupled_is_constant():
    curve = trotter_evolve(QuenchParams(1.0, 0.0), TimeGrid(0.0, 5.0, 20), AmplitudePair(0.6, 0.8))
    assert max(abs(p - 0.64) for p in curve.probabilities) <= 1e-14


def test_trotter_single_small_step():
    params = QuenchParams(1.0)
    dt = 1e-3
    curve = trotter_evolve(params, TimeGrid(0.0, dt, 1), ANTICROSSING_STATE)
    (_, a), = ode_oracle(params, 0.0, dt, ANTICROSSING_STATE, 1e-12, t_eval=[dt])
    assert abs(curve.probabilities[-1] - abs(a.beta) ** 2) <= dt ** 2


def test_trotter_first_order_convergence():
    errs = [_sup_error(n) for n in (25, 50, 100, 200)]
    assert errs[1] <= 0.05
    for a, b in zip(errs, errs[1:]):
        assert 1.6 <= a / b <= 2.4


def test_interaction_time():
    assert interaction_time(0) == 0
    assert abs(interaction_time(50) - 3555.5) <= 1e-9
    assert abs(interaction_time(1) - 71.11) <= 1e-12
    with pytest.raises(ValidationError):
        interaction_time(-1)


def test_dump_golden_file():
    circ = build_circuit(QuenchParams(2.0), TimeGrid(0.0, 10.0, 3), shots=100)
    with open(os.path.join(DATA, "circuit_ta2_n3.txt"), encoding="utf-8") as fh:
        golden = fh.read()
    assert circ.dump() == golden
    back = LayeredCircuit.parse(golden)
    assert back == circ
    t = TimeGrid(0.0, 10.0, 3).times()
    for k, layer in enumerate(back.layers):
        U = step_unitary(hamiltonian_at(t[k], QuenchParams(2.0)), t[1])
        assert np.max(np.abs(compose(layer) - U)) <= 1e-9


@pytest.mark.parametrize("text", [
    "",
    "circuit v2\nshots 1\nprep phase 0\n",
    "circuit v1\nshots x\n",
    "circuit v1\nshots 1\n  sx\n",
    "circuit v1\nshots 1\nprep phase 0\n  cx\n",
    "circuit v1\nshots 1\nprep phase 0\n  rz\n",
    "circuit v1\nshots 1\n",
])
def test_parse_rejects(text):
    with pytest.raises(ValidationError):
        LayeredCircuit.parse(text)
