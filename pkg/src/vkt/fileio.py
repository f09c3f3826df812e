"""Persistent outputs: binary snapshots, diagnostics CSV and PGM heatmaps.

Snapshot layout (all little-endian)::

    b"VKT2" | version u32 | n u32 | t f64 | rho, m1, m2 as n*n f64 row-major each
"""
from __future__ import annotations

import csv
import io
import os
import re
import struct

import numpy as np

from .errors import BadFormat
from .model import State

MAGIC = b"VKT2"
VERSION = 1
_HEADER = struct.Struct("<4sIId")
_PGM_HEAD = re.compile(rb"P5\s+(\d+)\s+(\d+)\s+(\d+)\s")


def snapshot_bytes(state: State) -> bytes:
    n = state.n
    body = np.concatenate([state.rho.ravel(), state.mom[0].ravel(), state.mom[1].ravel()])
    return _HEADER.pack(MAGIC, VERSION, n, float(state.t)) + body.astype("<f8").tobytes()


def parse_snapshot(data: bytes) -> State:
    if len(data) < _HEADER.size:
        raise BadFormat(f"truncated header: {len(data)} bytes")
    magic, version, n, t = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise BadFormat(f"bad magic {magic!r}")
    if version != VERSION:
        raise BadFormat(f"unsupported format version {version}")
    want = _HEADER.size + 3 * n * n * 8
    if len(data) != want:
        raise BadFormat(f"expected {want} bytes for n={n}, got {len(data)}")
    body = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).astype(float)
    body = body.reshape(3, n, n)
    return State(t, body[0].copy(), body[1:].copy())


def write_snapshot(state: State, path) -> None:
    """Write atomically: the file appears only once fully written."""
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(snapshot_bytes(state))
    os.replace(tmp, path)


def read_snapshot(path) -> State:
    with open(path, "rb") as fh:
        return parse_snapshot(fh.read())


# diagnostics ----------------------------------------------------------------

def _fmt(v) -> str:
    return repr(float(v))


class DiagnosticsWriter:
    """Append-only CSV of diagnostics rows; the header is fixed by the first row."""

    def __init__(self, path, m=None):
        self.path = path
        self.m = m
        self.header = None
        self._fh = open(path, "w", newline="", encoding="utf-8")

    def write(self, row) -> None:
        flat = row.flat(self.m)
        if self.header is None:
            self.header = list(flat)
            self._fh.write(",".join(self.header) + "\n")
        elif list(flat) != self.header:
            raise ValueError("diagnostics row does not match the CSV header")
        self._fh.write(",".join(_fmt(flat[k]) for k in self.header) + "\n")
        self._fh.flush()

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_diagnostics(path):
    """Parse a diagnostics CSV into a list of ``{column: float}`` dicts."""
    with open(path, newline="", encoding="utf-8") as fh:
        return [{k: float(v) for k, v in rec.items()} for rec in csv.DictReader(fh)]


# heatmaps -------------------------------------------------------------------

def heatmap_pixels(f, vrange=None) -> np.ndarray:
    """16-bit gray levels: ``vrange[0] -> 0``, ``vrange[1] -> 65535``, clamped.

    The image has x1 along columns and x2 increasing upward.
    """
    f = np.asarray(f, dtype=float)
    lo, hi = (float(f.min()), float(f.max())) if vrange is None else map(float, vrange)
    if not lo < hi:
        if vrange is not None:
            raise ValueError("heatmap range needs min < max")
        return np.zeros(f.shape[::-1], dtype=np.uint16)  # constant field
    s = np.clip((f - lo) / (hi - lo), 0.0, 1.0)
    return np.rint(s * 65535.0).astype(np.uint16).T[::-1]


def pgm_bytes(pixels: np.ndarray) -> bytes:
    h, w = pixels.shape
    buf = io.BytesIO()
    buf.write(f"P5\n{w} {h}\n65535\n".encode("ascii"))
    buf.write(pixels.astype(">u2").tobytes())  # PGM stores 16-bit samples MSB first
    return buf.getvalue()


def emit_heatmap(f, path, vrange=None) -> None:
    with open(path, "wb") as fh:
        fh.write(pgm_bytes(heatmap_pixels(f, vrange)))


def read_pgm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    head = _PGM_HEAD.match(data)
    if head is None or int(head.group(3)) != 65535:
        raise BadFormat("not a 16-bit P5 image")
    w, h = int(head.group(1)), int(head.group(2))
    return np.frombuffer(data, dtype=">u2", count=w * h, offset=head.end()).reshape(h, w)
