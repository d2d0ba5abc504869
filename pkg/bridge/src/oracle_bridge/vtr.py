"""Strict decoder for the VTR1 raw video format.

Layout: little-endian header {magic "VTR1", u32 t, u32 h, u32 w, u32 c}
followed by t*h*w*c raw bytes in (t, h, w, c) order; c is 1 or 3.
"""

import struct

import numpy as np

_MAGIC = b"VTR1"
_HEADER = struct.Struct("<4sIIII")


class VtrFormatError(ValueError):
    pass


def decode_vtr(blob: bytes) -> np.ndarray:
    """Parse a VTR1 blob into a (t, h, w, c) uint8 array; strict on errors."""
    if len(blob) < _HEADER.size:
        raise VtrFormatError("blob shorter than the VTR1 header")
    magic, t, h, w, c = _HEADER.unpack_from(blob)
    if magic != _MAGIC:
        raise VtrFormatError(f"bad magic {magic!r}")
    if t < 1 or h < 1 or w < 1 or c not in (1, 3):
        raise VtrFormatError(f"invalid dimensions ({t}, {h}, {w}, {c})")
    payload = blob[_HEADER.size:]
    expected = t * h * w * c
    if len(payload) != expected:
        raise VtrFormatError(
            f"payload holds {len(payload)} bytes, header promises {expected}"
        )
    return np.frombuffer(payload, dtype=np.uint8).reshape(t, h, w, c).copy()
