"""Deterministic clip preprocessing: frame sampling and spatial resizing.

Frame indices are evenly spaced over the input (no randomness, so repeated
queries on one video always see the same clip). Frames are resized with
bilinear interpolation and scaled to float32 in [0, 1].
"""

import numpy as np
from PIL import Image


def sample_frame_indices(total: int, count: int) -> np.ndarray:
    """``count`` evenly spaced indices into [0, total); repeats when short."""
    if total < 1 or count < 1:
        raise ValueError("frame counts must be >= 1")
    return np.floor(np.linspace(0.0, total - 1, count) + 0.5).astype(np.int64)


def preprocess_clip(video: np.ndarray, frame_count: int, resize_h: int,
                    resize_w: int) -> np.ndarray:
    """(t, h, w, c) uint8 -> (frame_count, resize_h, resize_w, c) float32."""
    t, h, w, c = video.shape
    indices = sample_frame_indices(t, frame_count)
    frames = []
    for idx in indices:
        frame = video[idx]
        if (h, w) != (resize_h, resize_w):
            img = Image.fromarray(frame[:, :, 0] if c == 1 else frame)
            img = img.resize((resize_w, resize_h), Image.BILINEAR)
            frame = np.asarray(img, dtype=np.uint8)
            if frame.ndim == 2:
                frame = frame[:, :, None]
        frames.append(frame)
    clip = np.stack(frames, axis=0).astype(np.float32) / 255.0
    return clip
