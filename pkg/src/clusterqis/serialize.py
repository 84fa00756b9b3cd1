"""Deterministic JSON artifacts: sorted keys, floats at 17 significant digits."""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .sim import StateVector

FIXTURE_VERSION = 1


def _plain(obj):
    """Reduce numpy scalars, complex numbers and tuples to JSON-ready values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if obj is None or isinstance(obj, str):
        return obj
    if hasattr(obj, "to_json"):
        return _plain(obj.to_json())
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _encode(obj, indent: int, level: int) -> str:
    pad = "\n" + " " * (indent * (level + 1))
    end = "\n" + " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{json.dumps(k)}: {_encode(obj[k], indent, level + 1)}" for k in sorted(obj)]
        return "{" + pad + ("," + pad).join(items) + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        # short numeric rows (complex pairs, bit lists) stay on one line
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj) and len(obj) <= 4:
            return "[" + ", ".join(_encode(v, indent, level) for v in obj) + "]"
        return "[" + pad + ("," + pad).join(_encode(v, indent, level + 1) for v in obj) + end + "]"
    if isinstance(obj, float):
        if not math.isfinite(obj):
            raise ValueError(f"non-finite float {obj!r} in artifact")
        return format(obj, ".17g") if obj != int(obj) or abs(obj) >= 1e17 else f"{obj:.1f}"
    return json.dumps(obj)


def dumps(artifact, indent: int = 2) -> str:
    return _encode(_plain(artifact), indent, 0) + "\n"


def loads(text: str):
    return json.loads(text)


def emit_report(artifact, path: str | Path) -> None:
    """Write ``artifact`` to ``path``. Raises OSError if it cannot be written."""
    Path(path).write_text(dumps(artifact))


def read_artifact(path: str | Path):
    return loads(Path(path).read_text())


def state_to_json(state: StateVector) -> dict:
    return {
        "num_qubits": state.num_qubits,
        "amplitudes": [[float(a.real), float(a.imag)] for a in state.amplitudes],
    }


def state_from_json(d: dict) -> StateVector:
    amps = np.array([complex(re, im) for re, im in d["amplitudes"]])
    return StateVector(amps, d["num_qubits"])


def with_version(report: dict) -> dict:
    return {"fixture_version": FIXTURE_VERSION, **report}
