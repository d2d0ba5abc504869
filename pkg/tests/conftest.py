import numpy as np
import pytest

from videoaudit import VideoTensor


def make_random_video(t=4, h=16, w=16, c=3, seed=0):
    rng = np.random.default_rng(seed)
    return VideoTensor(rng.integers(0, 256, size=(t, h, w, c), dtype=np.uint8))


def make_smooth_video(t=8, h=32, w=32, c=3, seed=0):
    """Low-frequency pattern plus mild texture; closer to real footage than
    uniform noise, which matters for SSIM-based checks."""
    rng = np.random.default_rng(seed)
    tt, yy, xx = np.meshgrid(
        np.arange(t), np.arange(h), np.arange(w), indexing="ij"
    )
    base = 127.5 + 70.0 * np.sin(2 * np.pi * (xx / w + 0.25 * tt / t)) * np.cos(
        2 * np.pi * yy / h
    )
    frames = base[..., None] + rng.normal(0.0, 4.0, size=(t, h, w, c))
    return VideoTensor(np.clip(np.round(frames), 0, 255).astype(np.uint8))


@pytest.fixture
def random_video():
    return make_random_video()


@pytest.fixture
def smooth_video():
    return make_smooth_video()
