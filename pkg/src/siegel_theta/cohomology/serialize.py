"""Binary and JSON containers for Hermite fields and forms.

Binary layout (little-endian): header ``<4sHHHHId`` holding magic, version,
g, d, k, cutoff, h; then complex64 coefficients, component by component in
lexicographic index-set order, each in row-major (lexicographic multi-index)
order.  A bare field is stored as a 0-form with d = 0.
"""
from __future__ import annotations

import json
import struct

import numpy as np

from ..errors import DomainError
from .forms import PForm, index_sets
from .hermite import HermiteField, HermiteTruncation

MAGIC = b"SGTH"
VERSION = 1
HEADER = struct.Struct("<4sHHHHId")


def form_to_bytes(w: PForm | HermiteField) -> bytes:
    if isinstance(w, HermiteField):
        w = PForm(0, 0, {(): w})
    t = w.trunc
    parts = [HEADER.pack(MAGIC, VERSION, t.g, w.d, w.k, t.cutoff, float(t.h))]
    for J in index_sets(w.d, w.k):
        parts.append(np.ascontiguousarray(w[J].coeffs, dtype="<c8").tobytes())
    return b"".join(parts)


def form_from_bytes(buf: bytes) -> PForm:
    magic, version, g, d, k, cutoff, h = HEADER.unpack_from(buf, 0)
    if magic != MAGIC:
        raise DomainError("not a field container")
    if version != VERSION:
        raise DomainError(f"unsupported container version {version}")
    t = HermiteTruncation(g, cutoff, h)
    n = int(np.prod(t.shape)) if g else 1
    off = HEADER.size
    comps = {}
    for J in index_sets(d, k):
        arr = np.frombuffer(buf, dtype="<c8", count=n, offset=off).reshape(t.shape)
        comps[J] = HermiteField(t, arr.astype(np.complex128))
        off += 8 * n
    if off != len(buf):
        raise DomainError("trailing bytes in container")
    return PForm(d, k, comps)


def field_from_bytes(buf: bytes) -> HermiteField:
    w = form_from_bytes(buf)
    if w.d != 0:
        raise DomainError("container holds a form, not a field")
    return w[()]


def form_to_json(w: PForm) -> str:
    t = w.trunc
    return json.dumps(
        {
            "g": t.g,
            "d": w.d,
            "k": w.k,
            "cutoff": t.cutoff,
            "h": t.h,
            "components": [
                {"index": list(J), "re": w[J].coeffs.real.ravel().tolist(), "im": w[J].coeffs.imag.ravel().tolist()}
                for J in index_sets(w.d, w.k)
            ],
        }
    )


def form_from_json(s: str) -> PForm:
    o = json.loads(s)
    t = HermiteTruncation(o["g"], o["cutoff"], o["h"])
    comps = {}
    for c in o["components"]:
        arr = (np.array(c["re"]) + 1j * np.array(c["im"])).reshape(t.shape)
        comps[tuple(c["index"])] = HermiteField(t, arr)
    return PForm(o["d"], o["k"], comps)
