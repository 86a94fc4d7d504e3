"""JSON encoding of complex matrices and the objects that carry them.

A matrix is ``{"rows": r, "cols": c, "data": [[[re, im], ...], ...]}``.
Entries below the diagonal may be ``null`` in square matrices, meaning the
conjugate of the mirrored entry (Hermitian completion).
"""

from __future__ import annotations

import json
from importlib import resources

import numpy as np

from .errors import DimensionError


class DecodeError(ValueError):
    """Malformed JSON data; ``path`` names the offending location."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def encode_matrix(m) -> dict:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2:
        raise DimensionError("only 2-d arrays can be encoded")
    return {
        "rows": int(m.shape[0]),
        "cols": int(m.shape[1]),
        "data": [[[float(z.real), float(z.imag)] for z in row] for row in m],
    }


def decode_matrix(doc, path: str = "$") -> np.ndarray:
    """Inverse of :func:`encode_matrix`, with Hermitian completion of ``null`` entries."""
    if not isinstance(doc, dict) or not {"rows", "cols", "data"} <= doc.keys():
        raise DecodeError(path, "expected an object with rows, cols and data")
    r, c, data = doc["rows"], doc["cols"], doc["data"]
    if not isinstance(data, list) or len(data) != r:
        raise DecodeError(f"{path}.data", f"expected {r} rows")
    out = np.zeros((r, c), dtype=complex)
    missing = []
    for i, row in enumerate(data):
        if not isinstance(row, list) or len(row) != c:
            raise DecodeError(f"{path}.data[{i}]", f"expected {c} entries")
        for j, z in enumerate(row):
            here = f"{path}.data[{i}][{j}]"
            if z is None:
                if r != c or j >= i:
                    raise DecodeError(here, "only strictly lower entries of square matrices may be null")
                missing.append((i, j))
                continue
            if isinstance(z, (int, float)):
                out[i, j] = float(z)
            elif isinstance(z, list) and len(z) == 2 and all(isinstance(t, (int, float)) for t in z):
                out[i, j] = complex(z[0], z[1])
            else:
                raise DecodeError(here, "entry must be [re, im] or a real number")
    for i, j in missing:
        if data[j][i] is None:
            raise DecodeError(f"{path}.data[{j}][{i}]", "mirror of a null entry is null")
        out[i, j] = np.conj(out[j, i])
    return out


def encode_vector(v) -> list:
    """Probability vectors are plain real arrays."""
    return [float(x) for x in np.asarray(v, dtype=float).reshape(-1)]


def vector_to_matrix_doc(v) -> dict:
    """Diagonal embedding of a probability vector in the matrix format."""
    return encode_matrix(np.diag(np.asarray(v, dtype=float)))


def to_jsonable(obj):
    """Recursively convert numpy data into plain JSON values.

    Complex or 2-d arrays become matrix objects; non-finite floats become
    strings so the output stays strict JSON.
    """
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if obj.ndim == 2:
            return encode_matrix(obj)
        if np.iscomplexobj(obj):
            return [[float(z.real), float(z.imag)] for z in obj.reshape(-1)]
        return [to_jsonable(float(x)) for x in obj.reshape(-1)]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if np.isnan(x):
            return "nan"
        if np.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if obj is None or isinstance(obj, (int, str)):
        return obj
    return str(obj)


def dumps(obj) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True)


def load_data(name: str) -> dict:
    """Read a JSON file shipped in the package's ``data`` directory."""
    return json.loads(resources.files("cpext").joinpath("data", name).read_text())


def load_schema(name: str) -> dict:
    return json.loads(resources.files("cpext").joinpath("schemas", name).read_text())
