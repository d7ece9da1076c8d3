"""Artifact persistence: binary volumes, CSV tables, raster slices, manifests.

The volume container is a UTF-8 JSON header (self-describing: array names,
dtypes, shapes, plus free-form metadata) terminated by a separator line,
followed by the arrays' raw little-endian bytes in header order. Complex
data is stored as paired _re/_im real arrays. All writes go through a
temp-file-then-rename so partially written artifacts never appear.
"""

from __future__ import annotations

import csv
import hashlib
import io as _io
import json
import os
from pathlib import Path

import numpy as np

__all__ = [
    "write_volume_file",
    "read_volume_file",
    "write_csv",
    "write_json",
    "write_text",
    "write_gray_png",
    "sha256_of",
    "write_manifest",
]

_MAGIC = "SWVOL 1"
_SEPARATOR = "---BINARY---"


def _atomic_write_bytes(path, payload: bytes) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(payload)
    os.replace(tmp, path)
    return path


def _normalize_dtype(arr: np.ndarray) -> np.ndarray:
    """Little-endian, C-order, real layout; complex splits happen upstream."""
    if np.iscomplexobj(arr):
        raise TypeError("complex arrays must be split into _re/_im pairs")
    dt = arr.dtype.newbyteorder("<")
    return np.ascontiguousarray(arr, dtype=dt)


def write_volume_file(path, arrays: dict, meta: dict | None = None) -> Path:
    """Persist named arrays with a self-describing text header.

    Complex arrays are transparently split into name_re / name_im pairs.
    """
    flat = {}
    for name, arr in arrays.items():
        arr = np.asarray(arr)
        if np.iscomplexobj(arr):
            flat[name + "_re"] = _normalize_dtype(np.real(arr))
            flat[name + "_im"] = _normalize_dtype(np.imag(arr))
        elif arr.dtype == bool:
            flat[name] = _normalize_dtype(arr.astype(np.uint8))
        else:
            flat[name] = _normalize_dtype(arr)

    header = {
        "format": _MAGIC,
        "meta": meta or {},
        "arrays": [{"name": n, "dtype": a.dtype.str, "shape": list(a.shape)}
                   for n, a in flat.items()],
    }
    text = json.dumps(header, indent=1, sort_keys=True)
    payload = bytearray()
    payload += (_MAGIC + "\n").encode()
    payload += (text + "\n").encode()
    payload += (_SEPARATOR + "\n").encode()
    for arr in flat.values():
        payload += arr.tobytes()
    return _atomic_write_bytes(path, bytes(payload))


def read_volume_file(path):
    """Load (arrays, meta); complex _re/_im pairs are rejoined."""
    raw = Path(path).read_bytes()
    sep = (_SEPARATOR + "\n").encode()
    cut = raw.find(sep)
    if cut < 0 or not raw.startswith((_MAGIC + "\n").encode()):
        raise ValueError(f"{path} is not a volume container")
    header = json.loads(raw[len(_MAGIC) + 1:cut].decode())
    offset = cut + len(sep)
    flat = {}
    for spec in header["arrays"]:
        dt = np.dtype(spec["dtype"])
        count = int(np.prod(spec["shape"])) if spec["shape"] else 1
        nbytes = dt.itemsize * count
        flat[spec["name"]] = np.frombuffer(
            raw[offset:offset + nbytes], dtype=dt).reshape(spec["shape"]).copy()
        offset += nbytes

    arrays = {}
    for name, arr in flat.items():
        if name.endswith("_re") and name[:-3] + "_im" in flat:
            arrays[name[:-3]] = arr + 1j * flat[name[:-3] + "_im"]
        elif name.endswith("_im") and name[:-3] + "_re" in flat:
            continue
        else:
            arrays[name] = arr
    return arrays, header["meta"]


def write_csv(path, fieldnames, rows) -> Path:
    """CSV with repr-formatted floats so identical runs are byte-identical."""

    def fmt(v):
        if isinstance(v, float):
            return repr(v)
        return str(v)

    sink = _io.StringIO()
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(fieldnames)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return _atomic_write_bytes(path, sink.getvalue().encode())


def write_json(path, payload: dict) -> Path:
    text = json.dumps(payload, indent=2, sort_keys=True)
    return _atomic_write_bytes(path, (text + "\n").encode())


def write_text(path, text: str) -> Path:
    return _atomic_write_bytes(path, text.encode())


def write_gray_png(path, image: np.ndarray, vmin: float = 0.0,
                   vmax: float = 30e3) -> Path:
    """Lossless 16-bit grayscale: value v maps to round(65535 (v-vmin)/(vmax-vmin)).

    Values outside [vmin, vmax] saturate. The linear mapping is recorded in
    a sidecar-free way: fixed project-wide defaults, overridable per call.
    """
    from PIL import Image

    if vmax <= vmin:
        raise ValueError("vmax must exceed vmin")
    scaled = (np.asarray(image, dtype=float) - vmin) / (vmax - vmin)
    gray = np.round(np.clip(scaled, 0.0, 1.0) * 65535.0).astype(np.uint16)
    img = Image.fromarray(gray, mode="I;16")
    sink = _io.BytesIO()
    img.save(sink, format="PNG")
    return _atomic_write_bytes(path, sink.getvalue())


def sha256_of(path) -> str:
    h = hashlib.sha256()
    h.update(Path(path).read_bytes())
    return h.hexdigest()


def write_manifest(out_dir, paths) -> Path:
    """Record every artifact with its content hash."""
    out_dir = Path(out_dir)
    entries = {}
    for p in sorted(Path(p) for p in paths):
        rel = os.path.relpath(p, out_dir)
        entries[rel] = sha256_of(p)
    return write_json(out_dir / "manifest.json", {"artifacts": entries})
