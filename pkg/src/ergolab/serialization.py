"""JSON file formats, built-in generators and result records.

Complex numbers are ``[re, im]`` pairs; matrices are row-major nested lists
with subsystem A as the slowest index. Floats are written with Python's
shortest round-trip repr, so reading a record back and re-serializing it
reproduces the same bytes. Non-finite floats are written as the strings
"inf", "-inf" and "nan".
"""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path

import numpy as np

from .entropy import Measurement
from .errors import ParseError
from .qstate import VALIDATION_TOL, DensityMatrix, PureState, bell_state, werner_state
from .streams import stream
from .thermo import Hamiltonian

GEN_PREFIX = "gen:"


# -- complex arrays -------------------------------------------------------------

def encode_array(a) -> list:
    arr = np.asarray(a)
    if arr.ndim == 0:
        z = complex(arr)
        return [float(z.real), float(z.imag)]
    return [encode_array(x) for x in arr]


def decode_array(obj, ndim: int) -> np.ndarray:
    """Nested [re, im] lists (plain real numbers also accepted) to a complex array."""
    try:
        arr = np.array(obj, dtype=object)
        if arr.ndim == ndim + 1 and arr.shape[-1] == 2:
            real = np.array(arr[..., 0], dtype=float)
            imag = np.array(arr[..., 1], dtype=float)
            return real + 1j * imag
        if arr.ndim == ndim:
            return np.array(obj, dtype=float).astype(complex)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"malformed numeric data: {exc}") from exc
    raise ParseError(f"expected a {ndim}-dimensional array of [re, im] pairs, got shape {arr.shape}")


# -- input files --------------------------------------------------------------------

def state_to_json(state) -> dict:
    if isinstance(state, PureState):
        out = {"kind": "pure", "data": encode_array(state.amplitudes)}
    else:
        out = {"kind": "density", "data": encode_array(state.data)}
    if state.dims is not None:
        out["dims"] = list(state.dims)
    return out


def state_from_json(obj: dict, tol: float = VALIDATION_TOL):
    kind = obj.get("kind")
    dims = obj.get("dims")
    if "data" not in obj:
        raise ParseError("state file has no 'data' field")
    if kind == "pure":
        return PureState(decode_array(obj["data"], 1), dims, tol=tol)
    if kind == "density":
        return DensityMatrix(decode_array(obj["data"], 2), dims, tol=tol)
    raise ParseError(f"state kind must be 'pure' or 'density', got {kind!r}")


def hamiltonian_to_json(h: Hamiltonian) -> dict:
    out = {"kind": "hamiltonian", "data": encode_array(h.data)}
    if h.dims is not None:
        out["dims"] = list(h.dims)
    return out


def hamiltonian_from_json(obj: dict) -> Hamiltonian:
    if obj.get("kind", "hamiltonian") != "hamiltonian" or "data" not in obj:
        raise ParseError("Hamiltonian file needs kind 'hamiltonian' and a 'data' matrix")
    return Hamiltonian(decode_array(obj["data"], 2), obj.get("dims"))


def measurement_to_json(m: Measurement) -> dict:
    if m.basis is not None and m._projectors is None:
        out = {"kind": "basis", "data": encode_array(m.basis)}
        if m.dims is not None:
            out["dims"] = list(m.dims)
        return out
    return {
        "kind": "pvm",
        "projectors": [encode_array(p) for p in m.projectors],
        "volumes": [int(v) for v in m.volumes],
    }


def measurement_from_json(obj: dict) -> Measurement:
    kind = obj.get("kind")
    if kind == "basis":
        if "data" not in obj:
            raise ParseError("basis measurement needs a 'data' matrix of columns")
        return Measurement.from_basis(decode_array(obj["data"], 2), obj.get("labels"), obj.get("dims"))
    if kind == "pvm":
        m = Measurement([decode_array(p, 2) for p in obj.get("projectors", [])], obj.get("labels"))
        if "volumes" in obj and [int(v) for v in obj["volumes"]] != [int(v) for v in m.volumes]:
            raise ParseError(f"declared volumes {obj['volumes']} differ from projector ranks {m.volumes.tolist()}")
        return m
    raise ParseError(f"measurement kind must be 'basis' or 'pvm', got {kind!r}")


# -- generators ---------------------------------------------------------------------

def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x]
    except ValueError as exc:
        raise ParseError(f"bad number list {text!r}") from exc


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x]
    except ValueError as exc:
        raise ParseError(f"bad integer list {text!r}") from exc


def generate(spec: str) -> dict:
    """JSON document for a built-in generator spec.

    ==============================  ==========================================
    ``bell``                        (|00> + |11>)/sqrt(2)
    ``werner:p``                    p |Psi-><Psi-| + (1-p) I/4
    ``haar-pure:dA,dB:seed``        Haar-random bipartite pure state
    ``mixed:d``                     maximally mixed state I/d
    ``basis-state:k:dA[,dB]``       computational basis state |k>
    ``ham-diag:E0,E1,...``          H = diag(E)
    ``ham-local:E0,E1,...``         H = h x I + I x h with h = diag(E)
    ``basis-computational:d[,dB]``  computational basis measurement
    ==============================  ==========================================
    """
    name, _, rest = spec.partition(":")
    if name == "bell":
        return state_to_json(bell_state())
    if name == "werner":
        return state_to_json(werner_state(_floats(rest)[0]))
    if name == "haar-pure":
        dims_text, _, seed_text = rest.partition(":")
        dims = _ints(dims_text)
        if len(dims) != 2:
            raise ParseError("haar-pure needs dA,dB")
        d = dims[0] * dims[1]
        rng = stream(int(seed_text or 0), "haar-pure")
        v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        return state_to_json(PureState(v, dims, normalize=True))
    if name == "mixed":
        d = _ints(rest)[0]
        return state_to_json(DensityMatrix(np.eye(d) / d))
    if name == "basis-state":
        k_text, _, dims_text = rest.partition(":")
        dims = _ints(dims_text)
        d = int(np.prod(dims))
        v = np.zeros(d)
        v[int(k_text)] = 1.0
        return state_to_json(PureState(v, dims if len(dims) == 2 else None))
    if name == "ham-diag":
        return hamiltonian_to_json(Hamiltonian.diagonal(_floats(rest)))
    if name == "ham-local":
        h = Hamiltonian.diagonal(_floats(rest))
        return hamiltonian_to_json(Hamiltonian.local_sum([h, h]))
    if name == "basis-computational":
        dims = _ints(rest)
        d = int(np.prod(dims))
        return measurement_to_json(Measurement.computational(d, dims if len(dims) == 2 else None))
    raise ParseError(f"unknown generator {spec!r}")


def load_document(source: str) -> dict:
    """Read a JSON input file, or expand a ``gen:`` generator spec."""
    if source.startswith(GEN_PREFIX):
        return generate(source[len(GEN_PREFIX):])
    try:
        return json.loads(Path(source).read_text())
    except OSError as exc:
        raise ParseError(f"cannot read {source}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{source} is not valid JSON: {exc}") from exc


# -- result records -----------------------------------------------------------------

def _plain(obj):
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
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def dumps_record(record: dict) -> str:
    return json.dumps(_plain(record), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _restore(obj):
    if isinstance(obj, dict):
        return {k: _restore(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_restore(v) for v in obj]
    if obj in ("inf", "-inf", "nan"):
        return float(obj)
    return obj


def loads_record(text: str) -> dict:
    return _restore(json.loads(text))


def digest(*documents) -> str:
    canon = json.dumps([_plain(d) for d in documents], sort_keys=True, separators=(",", ":"))
    return "sha256:" + hashlib.sha256(canon.encode("utf-8")).hexdigest()
