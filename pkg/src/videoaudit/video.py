"""Video tensors, bounded noise injection, SSIM, and the VTR1 file format.

A video is a (t, h, w, c) grid of 8-bit pixels; a noise field is a
(t, h, w) grid of reals in [0, 1] that broadcasts across channels when
injected. All operations here are pure functions over immutable inputs.
"""

from __future__ import annotations

import hashlib
import math
import re
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from skimage.metrics import structural_similarity

from .errors import FormatError, ShapeMismatchError

VTR1_MAGIC = b"VTR1"
_HEADER = struct.Struct("<4sIIII")

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
SSIM_DYNAMIC_RANGE = 255


@dataclass(frozen=True)
class VideoTensor:
    """A (t, h, w, c) block of uint8 pixels; c must be 1 or 3."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 4:
            raise ShapeMismatchError(
                f"video data must have shape (t, h, w, c), got {arr.shape}"
            )
        t, h, w, c = arr.shape
        if t < 1 or h < 1 or w < 1:
            raise ShapeMismatchError("all video dimensions must be >= 1")
        if c not in (1, 3):
            raise ShapeMismatchError(f"channel count must be 1 or 3, got {c}")
        if arr.dtype != np.uint8:
            if np.any(arr < 0) or np.any(arr > 255):
                raise ValueError("pixel values must lie in [0, 255]")
            arr = arr.astype(np.uint8)
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def t(self) -> int:
        return self.data.shape[0]

    @property
    def h(self) -> int:
        return self.data.shape[1]

    @property
    def w(self) -> int:
        return self.data.shape[2]

    @property
    def c(self) -> int:
        return self.data.shape[3]

    def to_bytes(self) -> bytes:
        """Serialize to the portable VTR1 raw format."""
        header = _HEADER.pack(VTR1_MAGIC, self.t, self.h, self.w, self.c)
        return header + self.data.tobytes()

    @classmethod
    def from_bytes(cls, blob: bytes) -> "VideoTensor":
        """Parse a VTR1 blob; rejects wrong magic and truncated payloads."""
        if len(blob) < _HEADER.size:
            raise FormatError("VTR1 blob shorter than header")
        magic, t, h, w, c = _HEADER.unpack_from(blob)
        if magic != VTR1_MAGIC:
            raise FormatError(f"bad magic {magic!r}, expected {VTR1_MAGIC!r}")
        expected = t * h * w * c
        payload = blob[_HEADER.size:]
        if len(payload) != expected:
            raise FormatError(
                f"payload holds {len(payload)} bytes, header promises {expected}"
            )
        arr = np.frombuffer(payload, dtype=np.uint8).reshape(t, h, w, c)
        return cls(arr)

    def content_hash(self) -> str:
        """SHA-256 of the VTR1 serialization; the black-box identity of a video."""
        return hashlib.sha256(self.to_bytes()).hexdigest()


@dataclass(frozen=True)
class NoiseField:
    """A (t, h, w) field of reals in [0, 1], broadcast over channels."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 3:
            raise ShapeMismatchError(
                f"noise field must have shape (t, h, w), got {arr.shape}"
            )
        if arr.size == 0:
            raise ShapeMismatchError("all field dimensions must be >= 1")
        if np.any(arr < 0.0) or np.any(arr > 1.0):
            raise ValueError("noise field values must lie in [0, 1]")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def t(self) -> int:
        return self.data.shape[0]

    @property
    def h(self) -> int:
        return self.data.shape[1]

    @property
    def w(self) -> int:
        return self.data.shape[2]


def save_vtr(video: VideoTensor, path) -> None:
    Path(path).write_bytes(video.to_bytes())


def load_vtr(path) -> VideoTensor:
    return VideoTensor.from_bytes(Path(path).read_bytes())


_FRAME_RE = re.compile(r"^frame_(\d{6})\.(png|jpg|jpeg|bmp)$", re.IGNORECASE)


def load_frame_dir(path) -> VideoTensor:
    """Load a video from a directory of per-frame images.

    Frames must be named ``frame_%06d.<ext>``; they are stacked in
    lexicographic (equivalently numeric) order of the zero-padded index.
    All frames must share one size and mode.
    """
    from PIL import Image

    root = Path(path)
    matches = sorted(
        (m.group(0), int(m.group(1)))
        for m in (_FRAME_RE.match(p.name) for p in root.iterdir())
        if m is not None
    )
    if not matches:
        raise FormatError(f"no frame_%06d images found in {root}")
    frames = []
    for name, _ in matches:
        with Image.open(root / name) as img:
            mode = "L" if img.mode == "L" else "RGB"
            arr = np.asarray(img.convert(mode), dtype=np.uint8)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        frames.append(arr)
    shapes = {f.shape for f in frames}
    if len(shapes) != 1:
        raise FormatError(f"frames disagree on shape: {sorted(shapes)}")
    return VideoTensor(np.stack(frames, axis=0))


def _round_half_up(x: np.ndarray) -> np.ndarray:
    return np.floor(x + 0.5)


def inject_noise(video: VideoTensor, field: NoiseField,
                 epsilon: float) -> VideoTensor:
    """Add a signed, budget-scaled perturbation and clamp back to [0, 255].

    Each pixel moves by ``epsilon * (2n - 1)`` where n is the field value at
    its (t, h, w) position (shared across channels), then is rounded half-up
    and clamped. The max absolute pixel change is ceil(epsilon).
    """
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    if (video.t, video.h, video.w) != (field.t, field.h, field.w):
        raise ShapeMismatchError(
            f"video dims {(video.t, video.h, video.w)} do not match "
            f"field dims {(field.t, field.h, field.w)}"
        )
    signed = epsilon * (2.0 * field.data - 1.0)
    shifted = video.data.astype(np.float64) + signed[:, :, :, None]
    out = np.clip(_round_half_up(shifted), 0, 255).astype(np.uint8)
    return VideoTensor(out)


def ssim(a: VideoTensor, b: VideoTensor) -> float:
    """Mean structural similarity between two videos of identical dims.

    Per-frame single-scale SSIM with an 11x11 Gaussian window (sigma 1.5),
    K1=0.01 / K2=0.03 at dynamic range 255, computed per channel and
    averaged over channels and frames.
    """
    if a.data.shape != b.data.shape:
        raise ShapeMismatchError(
            f"videos differ in shape: {a.data.shape} vs {b.data.shape}"
        )
    scores = []
    for f in range(a.t):
        fa, fb = a.data[f], b.data[f]
        if a.c == 1:
            fa, fb = fa[:, :, 0], fb[:, :, 0]
            channel_axis = None
        else:
            channel_axis = -1
        scores.append(
            structural_similarity(
                fa,
                fb,
                win_size=SSIM_WINDOW,
                gaussian_weights=True,
                sigma=SSIM_SIGMA,
                use_sample_covariance=False,
                K1=SSIM_K1,
                K2=SSIM_K2,
                data_range=SSIM_DYNAMIC_RANGE,
                channel_axis=channel_axis,
            )
        )
    return float(np.mean(scores))


def constant_frame_ssim(value_a: float, value_b: float) -> float:
    """Closed-form SSIM of two constant frames; used as an independent check.

    With zero variances the covariance and structure terms collapse and
    SSIM reduces to the luminance/contrast constants.
    """
    c1 = (SSIM_K1 * SSIM_DYNAMIC_RANGE) ** 2
    c2 = (SSIM_K2 * SSIM_DYNAMIC_RANGE) ** 2
    num = (2.0 * value_a * value_b + c1) * c2
    den = (value_a ** 2 + value_b ** 2 + c1) * c2
    return num / den


def linf_distance(a: VideoTensor, b: VideoTensor) -> int:
    """Largest absolute per-pixel difference between two videos."""
    if a.data.shape != b.data.shape:
        raise ShapeMismatchError(
            f"videos differ in shape: {a.data.shape} vs {b.data.shape}"
        )
    return int(
        np.max(np.abs(a.data.astype(np.int16) - b.data.astype(np.int16)))
    )


def budget_ceiling(epsilon: float) -> int:
    """The l-infinity pixel budget implied by a real-valued epsilon."""
    return int(math.ceil(epsilon))
