"""On-disk formats: raw little-endian arrays with JSON sidecars, and JSON configs."""

import json
from pathlib import Path

import numpy as np

from .exceptions import SchemaError

_DTYPES = {"f64": np.dtype("<f8"), "c128": np.dtype("<c16")}
_DOMAINS = ("spatial", "fourier")


def _paths(stem):
    stem = Path(stem)
    if stem.suffix in (".bin", ".json"):
        stem = stem.with_suffix("")
    return stem.with_suffix(".bin"), stem.with_suffix(".json")


def save_array(stem, array, domain="spatial"):
    """Write ``array`` as ``<stem>.bin`` plus a ``<stem>.json`` sidecar.

    Real arrays are stored as ``f64``, complex ones as ``c128``; the payload
    is row-major little-endian with no header.
    """
    if domain not in _DOMAINS:
        raise ValueError(f"domain must be one of {_DOMAINS}, got {domain!r}")
    array = np.asarray(array)
    tag = "c128" if np.iscomplexobj(array) else "f64"
    data = np.ascontiguousarray(array, dtype=_DTYPES[tag])
    bin_path, meta_path = _paths(stem)
    bin_path.parent.mkdir(parents=True, exist_ok=True)
    bin_path.write_bytes(data.tobytes(order="C"))
    meta = {"shape": list(data.shape), "dtype": tag, "domain": domain}
    meta_path.write_text(json.dumps(meta, indent=2) + "\n")
    return bin_path, meta_path


def load_array(stem):
    """Read an array written by :func:`save_array`. Returns ``(array, meta)``."""
    bin_path, meta_path = _paths(stem)
    try:
        meta = json.loads(meta_path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"cannot read array sidecar {meta_path}: {exc}") from exc
    if not isinstance(meta, dict) or not {"shape", "dtype", "domain"} <= set(meta):
        raise SchemaError(f"{meta_path}: sidecar needs keys shape, dtype, domain")
    if meta["dtype"] not in _DTYPES:
        raise SchemaError(f"{meta_path}: unknown dtype {meta['dtype']!r}")
    if meta["domain"] not in _DOMAINS:
        raise SchemaError(f"{meta_path}: unknown domain {meta['domain']!r}")
    dtype = _DTYPES[meta["dtype"]]
    shape = tuple(int(n) for n in meta["shape"])
    raw = bin_path.read_bytes()
    expected = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
    if len(raw) != expected:
        raise SchemaError(f"{bin_path}: payload has {len(raw)} bytes, sidecar implies {expected}")
    array = np.frombuffer(raw, dtype=dtype).reshape(shape).astype(dtype.newbyteorder("="))
    return array, meta


def read_json(path):
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"cannot read JSON file {path}: {exc}") from exc


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    return path
