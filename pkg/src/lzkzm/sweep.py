"""Annealing-time sweeps, experiment records and their on-disk form.

For every t_a on the grid a sweep builds the layer grid [0, t_f] with the
window rule, produces a P(t) curve in the selected mode, averages it after
the jump time t* (always taken from the exact curve) and finally fits the
three-parameter adiabatic-impulse form to the averages.
"""

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .analytic import QuenchParams
from .circuit import TimeGrid, prepare_anticrossing, trotter_evolve
from .errors import LZError, ValidationError
from .kzm import AIFit, AsymptoticEstimate, TransitionCurve, analytic_curve, asymptotic_estimate, fit_ai, jump_time_star
from .lindblad import density_from_state, kraus_evolve, layer_duration_us, lindblad_evolve, rate_scale_from_profile
from .profile import DeviceProfile, profile_from_dict
from .readout import apply_readout_noise, mitigate, sample_shots

__all__ = [
    "MODES",
    "SweepConfig",
    "ExperimentRecord",
    "default_ta_grid",
    "window_rule",
    "cell_seed",
    "run_cell",
    "run_sweep",
    "export_record",
    "import_record",
    "CSV_COLUMNS",
]

MODES = ("analytic", "trotter", "lindblad", "kraus", "shots")
SHOT_SOURCES = ("analytic", "trotter", "lindblad", "kraus")
CSV_COLUMNS = ("t_a", "t", "N", "p", "p_mitigated", "mode")
RECORD_FORMAT = "lzkzm-record/1"


def default_ta_grid(n=40, lo=0.05, hi=2.0):
    return tuple(float(x) for x in np.geomspace(lo, hi, n))


def window_rule(anneal_time, allow_extended=False):
    """Simulation window end t_f: 4 up to t_a = 0.17, 10 up to t_a = 2.

    Beyond 2 the rule is undefined; with ``allow_extended`` it continues as
    max(10, 5 t_a).
    """
    if not anneal_time > 0:
        raise ValidationError(f"t_a must be > 0, got {anneal_time!r}")
    if anneal_time <= 0.17:
        return 4.0
    if anneal_time <= 2.0:
        return 10.0
    if not allow_extended:
        raise ValidationError(f"t_a = {anneal_time!r} is beyond the window rule (t_a <= 2); pass the override to extend it")
    return max(10.0, 5.0 * anneal_time)


@dataclass(frozen=True)
class SweepConfig:
    ta_grid: tuple = field(default_factory=default_ta_grid)
    n_layers: int = 50
    shots: int = 5000
    mode: str = "analytic"
    seed: int = 0
    qubit: int = 0
    shot_source: str = "analytic"
    lindblad_hamiltonian: str = "sampled"
    clip: bool = False
    allow_extended_window: bool = False

    def __post_init__(self):
        object.__setattr__(self, "ta_grid", tuple(float(x) for x in self.ta_grid))
        g = self.ta_grid
        if len(g) == 0 or any(not (math.isfinite(x) and x > 0) for x in g):
            raise ValidationError("t_a grid must be non-empty and positive")
        if any(b <= a for a, b in zip(g, g[1:])):
            raise ValidationError("t_a grid must be strictly ascending")
        if self.mode not in MODES:
            raise ValidationError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.shot_source not in SHOT_SOURCES:
            raise ValidationError(f"shot_source must be one of {SHOT_SOURCES}, got {self.shot_source!r}")
        if int(self.n_layers) != self.n_layers or self.n_layers < 1:
            raise ValidationError("n_layers must be a positive integer")
        if int(self.shots) != self.shots or self.shots < 1:
            raise ValidationError("shots must be a positive integer")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ValidationError("seed must be a non-negative integer")
        for ta in g:
            window_rule(ta, self.allow_extended_window)

    @property
    def needs_profile(self):
        return self.mode in ("lindblad", "kraus", "shots")

    def to_dict(self):
        d = asdict(self)
        d["ta_grid"] = list(self.ta_grid)
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


@dataclass(frozen=True)
class ExperimentRecord:
    config: SweepConfig
    profile: DeviceProfile
    curves: tuple
    estimates: tuple
    fit: AIFit
    version: str = __version__
    created_at: str = None


def cell_seed(master, cell, sample):
    """Per-sample shot seed derived from the master seed."""
    return int(np.random.SeedSequence([master, cell, sample]).generate_state(1, np.uint64)[0])


def _source_curve(kind, params, grid, profile, config):
    if kind == "analytic":
        return analytic_curve(params, grid.times(), layers=tuple(range(grid.n_steps + 1)))
    if kind == "trotter":
        return trotter_evolve(params, grid, prepare_anticrossing())
    q = profile.qubit(config.qubit)
    rho0 = density_from_state(prepare_anticrossing())
    if kind == "lindblad":
        return lindblad_evolve(params, grid, q.noise(), rho0, rate_scale_from_profile(grid, q),
                               hamiltonian=config.lindblad_hamiltonian)
    return kraus_evolve(params, grid, q.noise(), rho0, layer_duration_us(q.t_sx))


def run_cell(config, profile, index):
    """One t_a of the sweep: (curve, estimate)."""
    ta = config.ta_grid[index]
    try:
        params = QuenchParams(ta)
        t_f = window_rule(ta, config.allow_extended_window)
        grid = TimeGrid(0.0, t_f, config.n_layers)
        # 10x the layer grid, never fewer than the 200 samples jump_time_star needs
        dense = analytic_curve(params, np.linspace(0.0, t_f, max(10 * config.n_layers, 500) + 1))
        t_star = jump_time_star(dense)
        if config.mode != "shots":
            curve = _source_curve(config.mode, params, grid, profile, config)
        else:
            base = _source_curve(config.shot_source, params, grid, profile, config)
            cal = profile.qubit(config.qubit).calibration()
            raw, mit = [], []
            for j, p in enumerate(base.probabilities):
                p = min(max(p, 0.0), 1.0)
                noisy = apply_readout_noise([1.0 - p, p], cal)
                q1 = min(max(float(noisy[1]), 0.0), 1.0)
                res = sample_shots(q1, config.shots, cell_seed(config.seed, index, j))
                raw.append(res.p1)
                mit.append(mitigate([res.n0 / res.shots, res.p1], cal, clip=config.clip).p1)
            meta = {"shot_source": config.shot_source, "shots": config.shots}
            curve = TransitionCurve(base.times, tuple(raw), params, "shots", layers=base.layers,
                                    mitigated=tuple(mit), meta=meta)
        est = asymptotic_estimate(curve, t_star)
        return curve, est
    except LZError as e:
        raise type(e)(f"t_a={ta!r}, mode={config.mode}: {e}") from e


def _run_cell_packed(args):
    return run_cell(*args)


def run_sweep(config, profile=None, workers=1):
    """Run every grid point, then fit; deterministic for a given config."""
    if config.needs_profile and profile is None:
        raise ValidationError(f"mode {config.mode!r} needs a device profile")
    if profile is not None and config.needs_profile:
        profile.qubit(config.qubit)
    jobs = [(config, profile, i) for i in range(len(config.ta_grid))]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_run_cell_packed, jobs))
    else:
        results = [run_cell(*j) for j in jobs]
    curves = tuple(r[0] for r in results)
    estimates = tuple(r[1] for r in results)
    fit = None
    if len(config.ta_grid) >= 4:
        fit = fit_ai(list(zip(config.ta_grid, (e.mean for e in estimates))))
    return ExperimentRecord(config, profile if config.needs_profile else None, curves, estimates, fit)


# -- persistence ------------------------------------------------------------

def _fmt(x):
    return "" if x is None else repr(float(x))


def curves_csv(record):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for ta, c in zip(record.config.ta_grid, record.curves):
        layers = c.layers if c.layers is not None else [None] * len(c)
        mit = c.mitigated if c.mitigated is not None else [None] * len(c)
        for t, n, p, m in zip(c.times, layers, c.probabilities, mit):
            w.writerow([repr(ta), repr(t), "" if n is None else str(n), repr(p), _fmt(m), c.provenance])
    return buf.getvalue()


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    return x


def record_document(record):
    doc = {
        "format": RECORD_FORMAT,
        "version": record.version,
        "created_at": record.created_at,
        "config": record.config.to_dict(),
        "profile": record.profile.to_dict() if record.profile is not None else None,
        "estimates": [dict(t_a=ta, **asdict(e)) for ta, e in zip(record.config.ta_grid, record.estimates)],
        "fit": asdict(record.fit) if record.fit is not None else None,
        "curve_meta": [c.meta for c in record.curves],
    }
    return json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n"


def export_record(record, out_dir, fmt="csv"):
    """Write ``curves.csv`` and ``record.json`` into ``out_dir``; returns their paths."""
    if fmt != "csv":
        raise ValidationError(f"unsupported export format {fmt!r}")
    os.makedirs(out_dir, exist_ok=True)
    paths = (os.path.join(out_dir, "curves.csv"), os.path.join(out_dir, "record.json"))
    for path, text in zip(paths, (curves_csv(record), record_document(record))):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return paths


def import_record(out_dir):
    with open(os.path.join(out_dir, "record.json"), encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != RECORD_FORMAT:
        raise ValidationError(f"unrecognised record format {doc.get('format')!r}")
    config = SweepConfig.from_dict(doc["config"])
    profile = profile_from_dict({k: v for k, v in doc["profile"].items() if v is not None}) if doc["profile"] else None
    rows = {}
    with open(os.path.join(out_dir, "curves.csv"), encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ValidationError(f"curves.csv columns {reader.fieldnames} != {list(CSV_COLUMNS)}")
        for row in reader:
            rows.setdefault(float(row["t_a"]), []).append(row)
    curves = []
    for ta, meta in zip(config.ta_grid, doc["curve_meta"]):
        rs = rows.get(ta, [])
        has_n = all(r["N"] != "" for r in rs)
        has_m = all(r["p_mitigated"] != "" for r in rs)
        curves.append(TransitionCurve(
            tuple(float(r["t"]) for r in rs),
            tuple(float(r["p"]) for r in rs),
            QuenchParams(ta),
            rs[0]["mode"] if rs else config.mode,
            layers=tuple(int(r["N"]) for r in rs) if has_n else None,
            mitigated=tuple(float(r["p_mitigated"]) for r in rs) if has_m else None,
            meta=meta,
        ))
    estimates = tuple(AsymptoticEstimate(e["mean"], e["zeta_eb"], e["t_star"], e["n_tail"]) for e in doc["estimates"])
    fit = AIFit(**doc["fit"]) if doc["fit"] is not None else None
    return ExperimentRecord(config, profile, tuple(curves), estimates, fit, doc["version"], doc["created_at"])
