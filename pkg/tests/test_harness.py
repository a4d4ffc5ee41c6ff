import json
import math
import os

import numpy as np
import pytest

from lzkzm.analytic import QuenchParams, lz_probability
from lzkzm.circuit import interaction_time
from lzkzm.cli import main, parse_ta_grid
from lzkzm.errors import NotFoundError, PhysicalConstraintError, SchemaError, ValidationError
from lzkzm.profile import DeviceProfile, QubitProfile, ingest_profile, profile_from_dict
from lzkzm.sweep import (
    CSV_COLUMNS,
    SweepConfig,
    cell_seed,
    curves_csv,
    default_ta_grid,
    export_record,
    import_record,
    run_sweep,
    window_rule,
)

DATA = os.path.join(os.path.dirname(__file__), "data")
GOLDEN_PROFILE = DeviceProfile(
    "fake_bogota",
    (QubitProfile(2, 112.4, 151.9, 35.555, 0.018, 0.042),),
    "2021-05-20T09:00:00Z",
)


def _profile():
    return ingest_profile(os.path.join(DATA, "profile_min.json"))


def _identity_profile():
    return profile_from_dict({"device": "ideal", "qubits": [
        {"index": 0, "T1": 100.0, "T2": 100.0, "t_sx": 35.555, "prob_meas1_prep0": 0.0, "prob_meas0_prep1": 0.0}]})


# -- profile -------------------------------------------------------------------

def test_golden_profile():
    prof = _profile()
    assert prof == GOLDEN_PROFILE
    assert interaction_time(50, prof.qubit(2).t_sx) == pytest.approx(3555.5, abs=1e-9)
    assert profile_from_dict(json.loads(json.dumps(prof.to_dict()))) == prof


def test_profile_physical_constraint(profile_path):
    with pytest.raises(PhysicalConstraintError):
        ingest_profile(profile_path(T1=40.0, T2=100.0))


@pytest.mark.parametrize("override, path", [
    (dict(T1=-1.0), ("qubits", 0, "T1")),
    (dict(prob_meas1_prep0=1.0), ("qubits", 0, "prob_meas1_prep0")),
    (dict(t_sx="fast"), ("qubits", 0, "t_sx")),
    (dict(extra=1), ("qubits", 0)),
])
def test_profile_schema_errors_carry_path(profile_path, override, path):
    with pytest.raises(SchemaError) as info:
        ingest_profile(profile_path(**override))
    assert info.value.path == path


def test_profile_io_errors(tmp_path):
    with pytest.raises(ValidationError):
        ingest_profile(str(tmp_path / "missing.json"))
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    with pytest.raises(SchemaError):
        ingest_profile(str(bad))
    with pytest.raises(ValidationError):
        _profile().qubit(0)


# -- window rule and config ----------------------------------------------------

@pytest.mark.parametrize("ta, tf", [(0.05, 4.0), (0.1, 4.0), (0.17, 4.0), (0.171, 10.0), (1.0, 10.0), (2.0, 10.0)])
def test_window_rule(ta, tf):
    assert window_rule(ta) == tf


def test_window_rule_beyond_range():
    with pytest.raises(ValidationError):
        window_rule(2.5)
    assert window_rule(2.5, allow_extended=True) == 12.5
    with pytest.raises(ValidationError):
        window_rule(0.0)


def test_default_grid():
    g = default_ta_grid()
    assert len(g) == 40 and g[0] == pytest.approx(0.05) and g[-1] == pytest.approx(2.0)


@pytest.mark.parametrize("kw", [
    dict(ta_grid=()), dict(ta_grid=(0.5, 0.2)), dict(ta_grid=(0.1, 3.0)), dict(mode="magic"),
    dict(n_layers=0), dict(shots=0), dict(seed=-1), dict(shot_source="shots"),
])
def test_config_rejects(kw):
    with pytest.raises(ValidationError):
        SweepConfig(**kw)


def test_cell_seeds_distinct():
    seeds = {cell_seed(7, c, s) for c in range(5) for s in range(51)}
    assert len(seeds) == 255
    assert cell_seed(7, 1, 2) == cell_seed(7, 1, 2)


# -- sweeps --------------------------------------------------------------------

def test_modes_needing_profile():
    with pytest.raises(ValidationError):
        run_sweep(SweepConfig(ta_grid=(0.5,), mode="lindblad"))


def test_analytic_and_trotter_run_without_profile():
    for mode in ("analytic", "trotter"):
        rec = run_sweep(SweepConfig(ta_grid=(0.3, 0.6, 1.0, 1.5), mode=mode))
        assert rec.profile is None and rec.fit is not None
        assert all(c.provenance == mode for c in rec.curves)
        assert all(e.zeta_eb >= 0 and e.n_tail >= 5 for e in rec.estimates)


def test_t_star_shared_across_modes():
    grid = (0.3, 1.0)
    prof = _profile()
    ref = run_sweep(SweepConfig(ta_grid=grid, qubit=2))
    for mode in ("trotter", "lindblad", "kraus", "shots"):
        rec = run_sweep(SweepConfig(ta_grid=grid, mode=mode, qubit=2), prof)
        assert [e.t_star for e in rec.estimates] == [e.t_star for e in ref.estimates]


def test_errors_annotated_with_cell(monkeypatch):
    import lzkzm.sweep as mod

    def boom(curve):
        raise NotFoundError("no inflection")
    monkeypatch.setattr(mod, "jump_time_star", boom)
    with pytest.raises(NotFoundError, match=r"t_a=0\.3, mode=analytic"):
        run_sweep(SweepConfig(ta_grid=(0.3,)))


def test_trotter_sweep_convergence_at_two():
    errs = []
    for n in (50, 100):
        rec = run_sweep(SweepConfig(ta_grid=(2.0,), mode="trotter", n_layers=n))
        c = rec.curves[0]
        errs.append(np.max(np.abs(np.asarray(c.probabilities) - lz_probability(np.asarray(c.times), QuenchParams(2.0)))))
    assert 1.6 <= errs[0] / errs[1] <= 2.4


def test_shots_converge_to_analytic_with_identity_calibration():
    grid = (0.2, 1.0)
    shots = 1_000_000
    ref = run_sweep(SweepConfig(ta_grid=grid))
    rec = run_sweep(SweepConfig(ta_grid=grid, mode="shots", shots=shots, seed=3), _identity_profile())
    # sigma is the largest binomial standard deviation at this shot count (p = 1/2)
    sigma = 0.5 / math.sqrt(shots)
    for a, b in zip(ref.curves, rec.curves):
        assert max(abs(x - y) for x, y in zip(a.probabilities, b.mitigated)) <= 3 * sigma


def test_fit_on_default_grid_analytic_mode():
    # finite-window tail means sit above the asymptote at large t_a, which drags x3 upward
    rec = run_sweep(SweepConfig())
    assert abs(rec.fit.x3 - math.pi / 4) <= 0.1 * math.pi / 4


# -- persistence ---------------------------------------------------------------

def _small_shots_record():
    cfg = SweepConfig(ta_grid=(0.1, 0.4, 0.9, 1.6), mode="shots", shots=5000, seed=11, qubit=2, n_layers=20)
    return run_sweep(cfg, _profile())


def test_export_import_round_trip(tmp_path):
    rec = _small_shots_record()
    paths = export_record(rec, str(tmp_path))
    back = import_record(str(tmp_path))
    assert back == rec
    with open(paths[0], encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    assert tuple(lines[0].split(",")) == CSV_COLUMNS
    assert len(lines) - 1 == sum(rec.config.n_layers + 1 for _ in rec.config.ta_grid)
    doc = json.loads(open(paths[1], encoding="utf-8").read())
    assert {"x1", "x2", "x3", "residual", "converged"} <= set(doc["fit"])


def test_record_reruns_from_embedded_config(tmp_path):
    rec = _small_shots_record()
    export_record(rec, str(tmp_path))
    back = import_record(str(tmp_path))
    again = run_sweep(back.config, back.profile)
    assert curves_csv(again) == curves_csv(rec)


def test_export_rejects_unknown_format(tmp_path):
    with pytest.raises(ValidationError):
        export_record(_small_shots_record(), str(tmp_path), "parquet")


def test_parallel_matches_serial():
    cfg = SweepConfig(ta_grid=(0.1, 0.5, 1.2, 2.0), mode="shots", seed=5, qubit=2, n_layers=10)
    assert curves_csv(run_sweep(cfg, _profile(), workers=2)) == curves_csv(run_sweep(cfg, _profile()))


# -- CLI -----------------------------------------------------------------------

def test_parse_ta_grid():
    assert parse_ta_grid("0.1,0.2") == (0.1, 0.2)
    assert len(parse_ta_grid("0.05:2:40")) == 40
    with pytest.raises(ValidationError):
        parse_ta_grid("a:b")


def test_cli_sweep_is_byte_identical(tmp_path):
    args = ["sweep", "--ta-grid", "0.1,0.4,0.9,1.6", "--mode", "shots", "--seed", "9", "--nt", "20",
            "--profile", os.path.join(DATA, "profile_min.json"), "--qubit", "2"]
    outs = []
    for k in range(2):
        d = tmp_path / f"run{k}"
        assert main(args + ["--out", str(d)]) == 0
        outs.append(((d / "curves.csv").read_bytes(), (d / "record.json").read_bytes()))
    assert outs[0] == outs[1]


def test_cli_commands(tmp_path, capsys):
    assert main(["exact", "--ta", "1", "--nt", "10"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "t,N,p,mode" and len(out) == 12
    assert main(["trotter", "--ta", "2", "--nt", "3", "--dump-circuit", "--shots", "100", "--out", str(tmp_path)]) == 0
    with open(os.path.join(DATA, "circuit_ta2_n3.txt"), encoding="utf-8") as fh:
        assert (tmp_path / "circuit.txt").read_text() == fh.read()
    assert main(["noisy", "--ta", "1", "--nt", "10", "--profile", os.path.join(DATA, "profile_min.json"),
                 "--qubit", "2", "--mode", "kraus"]) == 0
    assert main(["mitigate", "--p", "0.6,0.4", "--p10", "0.02", "--p01", "0.05"]) == 0
    capsys.readouterr()
    pts = tmp_path / "pts.csv"
    pts.write_text("t_a,P\n" + "".join(f"{t},{0.5 - 0.4 * t / (1 + t)}\n" for t in (0.1, 0.3, 0.7, 1.2, 2.0)))
    assert main(["fit", "--input", str(pts)]) == 0
    assert capsys.readouterr().out.startswith("x1,x2,x3,residual,converged,iterations")
    assert main(["oracle", "--ta-grid", "0.5", "--nt", "20"]) == 0
    out = capsys.readouterr().out
    assert "np." not in out and "exact_vs_ode,0.5," in out


@pytest.mark.parametrize("argv", [
    ["exact", "--ta", "3"],
    ["exact", "--ta", "-1"],
    ["noisy", "--ta", "1"],
    ["mitigate", "--p", "0.5", "--p10", "0.5", "--p01", "0.5"],
    ["sweep", "--ta-grid", "x"],
    ["fit", "--input", "/nonexistent.csv"],
])
def test_cli_invalid_input_exit_code(argv, capsys):
    assert main(argv) == 2
    assert capsys.readouterr().err


def test_cli_numerical_failure_exit_code(capsys):
    # t_a = 40 with the window override: the exact solution loses its digits
    assert main(["exact", "--ta", "40", "--extend-window", "--nt", "5"]) == 3
    assert "numerical" in capsys.readouterr().err
