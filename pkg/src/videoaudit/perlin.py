"""Seeded 3D gradient noise: fade interpolation, fractal octaves, sine transform.

The generator is fully deterministic: lattice gradients come from a
splitmix64-style integer hash of ``(i, j, k, seed, counter)``, so identical
inputs produce bit-identical fields on every platform. Gradients are drawn
from an isotropic 3D Gaussian (via Box-Muller on hash-derived uniforms) and
normalized to unit length.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .video import NoiseField

_U64_MASK = 0xFFFFFFFFFFFFFFFF
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_INV_2_53 = 2.0 ** -53
_TWO_PI = 2.0 * np.pi

_ZERO_NORM_TOL = 1e-12


@dataclass(frozen=True)
class PerlinParams:
    """Parameter set for the 3D noise generator.

    ``lambda_x``/``lambda_y`` are spatial wavelengths in pixels,
    ``lambda_t`` the temporal wavelength in frames, ``phi_sine`` the
    frequency of the sinusoidal post-transform, and ``omega`` the octave
    count of the fractal summation.
    """

    lambda_x: float = 32.0
    lambda_y: float = 32.0
    lambda_t: float = 6.4
    phi_sine: float = 1.0
    omega: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.lambda_x <= 0 or self.lambda_y <= 0 or self.lambda_t <= 0:
            raise ValueError("wavelengths must be strictly positive")
        if self.phi_sine <= 0:
            raise ValueError("phi_sine must be strictly positive")
        if int(self.omega) != self.omega or self.omega < 1:
            raise ValueError("omega must be an integer >= 1")
        if not 0 <= self.seed <= _U64_MASK:
            raise ValueError("seed must fit in an unsigned 64-bit integer")


def _mix64(z):
    """splitmix64 finalizer; operates on uint64 scalars or arrays.

    Wraparound is the point of the arithmetic, so overflow warnings are
    suppressed (numpy warns for scalars, not arrays).
    """
    with np.errstate(over="ignore"):
        z = z + _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        return z ^ (z >> np.uint64(31))


def _combine(seed, *parts):
    h = _mix64(seed)
    for p in parts:
        h = _mix64(h ^ p)
    return h


def derive_seed(master: int, *parts) -> int:
    """Derive a child seed from a master seed and a sequence of int/str parts.

    String parts are digested with blake2b so sample identifiers of any
    shape mix into the stream deterministically.
    """
    h = np.uint64(master & _U64_MASK)
    for p in parts:
        if isinstance(p, str):
            digest = hashlib.blake2b(p.encode("utf-8"), digest_size=8).digest()
            v = int.from_bytes(digest, "little")
        else:
            v = int(p) & _U64_MASK
        h = _combine(h, np.uint64(v))
    return int(h)


def _uniform_open(h):
    """Map a uint64 hash to a float in (0, 1]."""
    return ((h >> np.uint64(11)).astype(np.float64) + 1.0) * _INV_2_53


def _uniform_halfopen(h):
    """Map a uint64 hash to a float in [0, 1)."""
    return (h >> np.uint64(11)).astype(np.float64) * _INV_2_53


def _gaussian_triplet(h0):
    """Three standard normals per hash via Box-Muller (one draw discarded)."""
    h1 = _mix64(h0)
    h2 = _mix64(h1)
    h3 = _mix64(h2)
    h4 = _mix64(h3)
    r1 = np.sqrt(-2.0 * np.log(_uniform_open(h1)))
    a1 = _TWO_PI * _uniform_halfopen(h2)
    r2 = np.sqrt(-2.0 * np.log(_uniform_open(h3)))
    a2 = _TWO_PI * _uniform_halfopen(h4)
    return r1 * np.cos(a1), r1 * np.sin(a1), r2 * np.cos(a2)


def _lattice_gradients(i, j, k, seed):
    """Unit gradient vectors at integer lattice points.

    ``i``/``j``/``k`` are int64 arrays (broadcastable), ``seed`` a uint64
    scalar or array. Zero-norm draws are re-drawn with an incremented hash
    counter so the output is always a valid unit vector.
    """
    iu = np.asarray(i, dtype=np.int64).astype(np.uint64)
    ju = np.asarray(j, dtype=np.int64).astype(np.uint64)
    ku = np.asarray(k, dtype=np.int64).astype(np.uint64)
    shape = np.broadcast_shapes(iu.shape, ju.shape, ku.shape, np.shape(seed))
    iu, ju, ku = (np.broadcast_to(a, shape) for a in (iu, ju, ku))
    seed = np.broadcast_to(np.asarray(seed, dtype=np.uint64), shape)

    h0 = _combine(seed, iu, ju, ku, np.uint64(0))
    gx, gy, gz = _gaussian_triplet(h0)
    norm = np.sqrt(gx * gx + gy * gy + gz * gz)

    counter = 1
    bad = norm < _ZERO_NORM_TOL
    while np.any(bad):
        hb = _combine(seed[bad], iu[bad], ju[bad], ku[bad], np.uint64(counter))
        bx, by, bz = _gaussian_triplet(hb)
        gx[bad], gy[bad], gz[bad] = bx, by, bz
        norm[bad] = np.sqrt(bx * bx + by * by + bz * bz)
        bad = norm < _ZERO_NORM_TOL
        counter += 1

    return gx / norm, gy / norm, gz / norm


def gradient_at(i: int, j: int, k: int, seed: int) -> np.ndarray:
    """Deterministic unit gradient vector at lattice point ``(i, j, k)``."""
    gx, gy, gz = _lattice_gradients(
        np.int64(i), np.int64(j), np.int64(k), np.uint64(seed & _U64_MASK)
    )
    return np.array([float(gx), float(gy), float(gz)])


def fade(s):
    """Quintic smoothstep ``6s^5 - 15s^4 + 10s^3`` on [0, 1].

    Both first and second derivatives vanish at the endpoints, which is
    what removes lattice artifacts from the interpolated noise.
    """
    arr = np.asarray(s, dtype=np.float64)
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ValueError("fade input must lie in [0, 1]")
    out = _fade_raw(arr)
    return float(out) if np.isscalar(s) or arr.ndim == 0 else out


def _fade_raw(s):
    return s * s * s * (s * (s * 6.0 - 15.0) + 10.0)


def _interp_corners(dots, u, v, w):
    """Trilinear blend of 8 corner dot products with fade weights.

    ``dots`` maps (dk, dj, di) to arrays; ``u``/``v``/``w`` are the faded
    fractional offsets along x, y and t respectively.
    """
    wu1, wv1, ww1 = u, v, w
    wu0, wv0, ww0 = 1.0 - u, 1.0 - v, 1.0 - w
    return (
        ww0 * (wv0 * (wu0 * dots[0, 0, 0] + wu1 * dots[0, 0, 1])
               + wv1 * (wu0 * dots[0, 1, 0] + wu1 * dots[0, 1, 1]))
        + ww1 * (wv0 * (wu0 * dots[1, 0, 0] + wu1 * dots[1, 0, 1])
                 + wv1 * (wu0 * dots[1, 1, 0] + wu1 * dots[1, 1, 1]))
    )


def perlin_value(x, y, t, seed: int):
    """Single-octave 3D gradient noise at (possibly arrays of) coordinates.

    Exactly zero at integer lattice points; values lie in [-sqrt(3), sqrt(3)].
    """
    xs = np.asarray(x, dtype=np.float64)
    ys = np.asarray(y, dtype=np.float64)
    ts = np.asarray(t, dtype=np.float64)
    scalar = xs.ndim == 0 and ys.ndim == 0 and ts.ndim == 0
    seed_u = np.uint64(seed & _U64_MASK)

    i = np.floor(xs).astype(np.int64)
    j = np.floor(ys).astype(np.int64)
    k = np.floor(ts).astype(np.int64)
    fx = xs - i
    fy = ys - j
    ft = ts - k

    dots = {}
    for dk in (0, 1):
        for dj in (0, 1):
            for di in (0, 1):
                gx, gy, gz = _lattice_gradients(i + di, j + dj, k + dk, seed_u)
                dots[dk, dj, di] = (
                    gx * (fx - di) + gy * (fy - dj) + gz * (ft - dk)
                )

    val = _interp_corners(dots, _fade_raw(fx), _fade_raw(fy), _fade_raw(ft))
    return float(val) if scalar else val


def _octave_seed(seed: int, n: int) -> int:
    return int(_combine(np.uint64(seed & _U64_MASK), np.uint64(n)))


def fractal(x, y, t, p: PerlinParams):
    """Weighted octave sum: octave n contributes 2^-n of a rescaled field.

    Each octave uses an independently derived seed, so octaves are
    independent noise fields rather than rescalings of one field.
    """
    total = None
    for n in range(1, p.omega + 1):
        s = 2.0 ** (n - 1)
        term = 0.5 ** n * perlin_value(
            np.asarray(x, dtype=np.float64) * (s / p.lambda_x),
            np.asarray(y, dtype=np.float64) * (s / p.lambda_y),
            np.asarray(t, dtype=np.float64) * (s / p.lambda_t),
            _octave_seed(p.seed, n),
        )
        total = term if total is None else total + term
    if np.isscalar(x) and np.isscalar(y) and np.isscalar(t):
        return float(total)
    return total


def sine_transform(s, phi_sine: float):
    """Sinusoidal post-transform ``sin(2*pi*phi_sine*s)``."""
    out = np.sin(_TWO_PI * phi_sine * np.asarray(s, dtype=np.float64))
    return float(out) if np.isscalar(s) else out


def _axis_cells(values_1d):
    """Per-axis lattice decomposition: cell index, fractional offset, extent."""
    idx = np.floor(values_1d).astype(np.int64)
    frac = values_1d - idx
    lo = int(idx.min())
    hi = int(idx.max()) + 1
    return idx - lo, frac, lo, hi - lo + 1


def _grid_octave(ts_s, ys_s, xs_s, seeds):
    """Evaluate one octave on a separable (t, h, w) grid for many seeds.

    ``seeds`` has shape (n,); returns (n, t, h, w). Lattice gradients are
    hashed once per unique lattice point and gathered, which is what makes
    whole-dataset generation cheap.
    """
    ki, ft, k_lo, nk = _axis_cells(ts_s)
    ji, fy, j_lo, nj = _axis_cells(ys_s)
    ii, fx, i_lo, ni = _axis_cells(xs_s)

    gk = np.arange(k_lo, k_lo + nk, dtype=np.int64)[None, :, None, None]
    gj = np.arange(j_lo, j_lo + nj, dtype=np.int64)[None, None, :, None]
    gi = np.arange(i_lo, i_lo + ni, dtype=np.int64)[None, None, None, :]
    gx, gy, gz = _lattice_gradients(gi, gj, gk, seeds[:, None, None, None])

    n = seeds.shape[0]
    sample_ax = np.arange(n)[:, None, None, None]
    kv = ki[None, :, None, None]
    jv = ji[None, None, :, None]
    iv = ii[None, None, None, :]
    ftv = ft[None, :, None, None]
    fyv = fy[None, None, :, None]
    fxv = fx[None, None, None, :]

    dots = {}
    for dk in (0, 1):
        for dj in (0, 1):
            for di in (0, 1):
                cgx = gx[sample_ax, kv + dk, jv + dj, iv + di]
                cgy = gy[sample_ax, kv + dk, jv + dj, iv + di]
                cgz = gz[sample_ax, kv + dk, jv + dj, iv + di]
                dots[dk, dj, di] = (
                    cgx * (fxv - di) + cgy * (fyv - dj) + cgz * (ftv - dk)
                )

    return _interp_corners(
        dots,
        _fade_raw(fxv),
        _fade_raw(fyv),
        _fade_raw(ftv),
    )


def generate_raw(t: int, h: int, w: int, p: PerlinParams,
                 seeds=None) -> np.ndarray:
    """Sine-transformed fractal noise on a (t, h, w) voxel grid, un-normalized.

    Voxel (frame f, row r, col c) is evaluated at coordinates
    (x, y, t) = (c, r, f) before wavelength division. With ``seeds`` given
    (shape (n,)), returns a batch of shape (n, t, h, w) where sample i uses
    ``seeds[i]`` in place of ``p.seed``.
    """
    if t < 1 or h < 1 or w < 1:
        raise ValueError("field dimensions must be >= 1")
    batched = seeds is not None
    if seeds is None:
        seeds = np.array([p.seed & _U64_MASK], dtype=np.uint64)
    else:
        seeds = np.asarray(
            [int(s) & _U64_MASK for s in np.atleast_1d(seeds)], dtype=np.uint64
        )

    frames = np.arange(t, dtype=np.float64)
    rows = np.arange(h, dtype=np.float64)
    cols = np.arange(w, dtype=np.float64)

    total = np.zeros((seeds.shape[0], t, h, w))
    for n in range(1, p.omega + 1):
        s = 2.0 ** (n - 1)
        oct_seeds = np.array(
            [_octave_seed(int(sd), n) for sd in seeds], dtype=np.uint64
        )
        total += 0.5 ** n * _grid_octave(
            frames * (s / p.lambda_t),
            rows * (s / p.lambda_y),
            cols * (s / p.lambda_x),
            oct_seeds,
        )

    out = np.sin(_TWO_PI * p.phi_sine * total)
    return out if batched else out[0]


def _minmax_normalize(raw: np.ndarray) -> np.ndarray:
    lo = raw.min()
    hi = raw.max()
    if hi - lo < 1e-12:
        return np.full_like(raw, 0.5)
    return (raw - lo) / (hi - lo)


def generate_field(t: int, h: int, w: int, p: PerlinParams) -> NoiseField:
    """Normalized noise field on a (t, h, w) grid.

    Min-max normalization runs over the whole field, after the sine
    transform, so the full perturbation budget is usable for every sample;
    a degenerate constant field maps to all 0.5.
    """
    return NoiseField(_minmax_normalize(generate_raw(t, h, w, p)))


def generate_fields(t: int, h: int, w: int, p: PerlinParams,
                    seeds) -> list[NoiseField]:
    """Batch variant of :func:`generate_field` for many per-sample seeds."""
    raw = generate_raw(t, h, w, p, seeds=seeds)
    return [NoiseField(_minmax_normalize(raw[i])) for i in range(raw.shape[0])]
