"""Device-profile files.

A profile is a JSON document::

    {
      "device": "ibmq_lima",
      "calibrated_at": "2021-06-01T00:00:00Z",
      "qubits": [
        {"index": 0, "T1": 100.0, "T2": 120.0, "t_sx": 35.555,
         "prob_meas1_prep0": 0.02, "prob_meas0_prep1": 0.05}
      ]
    }

T1 and T2 are in microseconds, t_sx (duration of one sqrt(X) pulse) in ns.
"""

import json
from dataclasses import asdict, dataclass

import jsonschema

from .errors import PhysicalConstraintError, SchemaError, ValidationError
from .lindblad import NoiseParams
from .readout import calibration_from_profile

__all__ = ["QubitProfile", "DeviceProfile", "PROFILE_SCHEMA", "ingest_profile", "profile_from_dict"]

_PROB = {"type": "number", "minimum": 0, "exclusiveMaximum": 1}
_POS = {"type": "number", "exclusiveMinimum": 0}

PROFILE_SCHEMA = {
    "type": "object",
    "required": ["device", "qubits"],
    "additionalProperties": False,
    "properties": {
        "device": {"type": "string", "minLength": 1},
        "calibrated_at": {"type": ["string", "null"]},
        "qubits": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["index", "T1", "T2", "t_sx", "prob_meas1_prep0", "prob_meas0_prep1"],
                "additionalProperties": False,
                "properties": {
                    "index": {"type": "integer", "minimum": 0},
                    "T1": _POS,
                    "T2": _POS,
                    "t_sx": {"type": "number", "minimum": 0},
                    "prob_meas1_prep0": _PROB,
                    "prob_meas0_prep1": _PROB,
                },
            },
        },
    },
}


@dataclass(frozen=True)
class QubitProfile:
    index: int
    T1: float
    T2: float
    t_sx: float
    prob_meas1_prep0: float
    prob_meas0_prep1: float

    def noise(self):
        return NoiseParams(self.T1, self.T2)

    def calibration(self):
        return calibration_from_profile(self.prob_meas1_prep0, self.prob_meas0_prep1)


@dataclass(frozen=True)
class DeviceProfile:
    device: str
    qubits: tuple
    calibrated_at: str = None

    def qubit(self, index):
        for q in self.qubits:
            if q.index == index:
                return q
        raise ValidationError(f"profile {self.device!r} has no qubit {index}")

    def to_dict(self):
        return {"device": self.device, "calibrated_at": self.calibrated_at,
                "qubits": [asdict(q) for q in self.qubits]}


def profile_from_dict(data):
    try:
        jsonschema.validate(data, PROFILE_SCHEMA)
    except jsonschema.ValidationError as e:
        raise SchemaError(e.message, e.absolute_path) from None
    qubits = []
    seen = set()
    for i, q in enumerate(data["qubits"]):
        if q["T2"] > 2 * q["T1"]:
            raise PhysicalConstraintError(
                f"qubits/{i}: T2 = {q['T2']!r} us exceeds 2*T1 = {2 * q['T1']!r} us")
        if q["index"] in seen:
            raise SchemaError(f"duplicate qubit index {q['index']}", ("qubits", i, "index"))
        seen.add(q["index"])
        qubits.append(QubitProfile(int(q["index"]), float(q["T1"]), float(q["T2"]), float(q["t_sx"]),
                                   float(q["prob_meas1_prep0"]), float(q["prob_meas0_prep1"])))
    return DeviceProfile(data["device"], tuple(qubits), data.get("calibrated_at"))


def ingest_profile(path):
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as e:
        raise ValidationError(f"cannot read profile {path}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise SchemaError(f"not valid JSON ({e.msg}, line {e.lineno})") from None
    return profile_from_dict(data)
