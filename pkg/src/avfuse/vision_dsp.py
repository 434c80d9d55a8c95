"""Frame preprocessing, wavelet texture energy, and dense optical flow.

Preprocessing is patch-based non-local means denoising on 8-bit grayscale.
Texture energy comes from a 2-level Daubechies-2 decomposition with periodic
extension, which makes subband energies sum exactly to the pixel energy.
Dense motion is estimated with the Horn-Schunck variational scheme behind
the ``DenseFlow`` interface so a different solver can be slotted in later.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput

# Daubechies-2 analysis pair; orthonormal, so circular-shift rows form a basis.
_SQRT3 = np.sqrt(3.0)
DB2_LO = np.array([1.0 + _SQRT3, 3.0 + _SQRT3, 3.0 - _SQRT3, 1.0 - _SQRT3]) / (4.0 * np.sqrt(2.0))
DB2_HI = np.array([DB2_LO[3], -DB2_LO[2], DB2_LO[1], -DB2_LO[0]])

RGB_LUMA = np.array([0.299, 0.587, 0.114])  # ITU-R 601


@dataclass(frozen=True)
class FlowField:
    u: np.ndarray  # horizontal displacement, pixels/frame
    v: np.ndarray  # vertical displacement, pixels/frame

    @property
    def magnitude(self) -> np.ndarray:
        return np.hypot(self.u, self.v)


@dataclass(frozen=True)
class FlowStats:
    mean_magnitude: float
    max_magnitude: float
    mean_angle: float  # magnitude-weighted circular mean, radians


@dataclass(frozen=True)
class WaveletEnergy:
    ll2: float
    lh2: float
    hl2: float
    hh2: float
    lh1: float
    hl1: float
    hh1: float

    @property
    def subband_energies(self) -> np.ndarray:
        return np.array([self.ll2, self.lh2, self.hl2, self.hh2, self.lh1, self.hl1, self.hh1])

    @property
    def total(self) -> float:
        return float(self.subband_energies.sum())


def to_grayscale(pixels: np.ndarray) -> np.ndarray:
    """Collapse an (H, W, 3) RGB frame to 8-bit grayscale; pass 2-D through."""
    pixels = np.asarray(pixels)
    if pixels.ndim == 2:
        return pixels.astype(np.uint8)
    if pixels.ndim == 3 and pixels.shape[2] == 3:
        gray = pixels.astype(np.float64) @ RGB_LUMA
        return np.clip(np.rint(gray), 0, 255).astype(np.uint8)
    raise InvalidInput(f"expected (H, W) or (H, W, 3) pixel grid, got shape {pixels.shape}")


def _patch_sum(values: np.ndarray, patch: int) -> np.ndarray:
    """Sliding patch-window sum; input is padded by patch//2 on each side."""
    acc = values
    for axis in (0, 1):
        sliced = np.cumsum(acc, axis=axis)
        sliced = np.concatenate(
            [np.take(sliced, [patch - 1], axis=axis),
             np.take(sliced, range(patch, acc.shape[axis]), axis=axis)
             - np.take(sliced, range(acc.shape[axis] - patch), axis=axis)],
            axis=axis,
        )
        acc = sliced
    return acc


def nlm_denoise(
    pixels: np.ndarray, patch: int = 3, search: int = 7, strength: float = 10.0
) -> np.ndarray:
    """Non-local means: each pixel becomes the similarity-weighted average of
    pixels in its search window, weighted by patch distance.

    Weight is ``exp(-mean((P_i - P_j)^2) / strength^2)``; the center pixel
    participates with weight 1, so constants are preserved exactly.
    """
    img = pixels.astype(np.float64)
    pr, sr = patch // 2, search // 2
    padded = np.pad(img, sr + pr, mode="reflect")
    h, w = img.shape

    center_patch = padded[sr:sr + h + 2 * pr, sr:sr + w + 2 * pr]
    weight_sum = np.zeros_like(img)
    value_sum = np.zeros_like(img)
    inv_h2 = 1.0 / (strength * strength * patch * patch)
    for dy in range(-sr, sr + 1):
        for dx in range(-sr, sr + 1):
            shifted_patch = padded[sr + dy:sr + dy + h + 2 * pr, sr + dx:sr + dx + w + 2 * pr]
            dist = _patch_sum((center_patch - shifted_patch) ** 2, patch)
            weight = np.exp(-dist * inv_h2)
            value_sum += weight * shifted_patch[pr:pr + h, pr:pr + w]
            weight_sum += weight
    return np.clip(np.rint(value_sum / weight_sum), 0, 255).astype(np.uint8)


def preprocess_frame(pixels: np.ndarray, patch: int = 3, search: int = 7, strength: float = 10.0) -> np.ndarray:
    """Grayscale conversion (if needed) followed by non-local means denoising."""
    gray = to_grayscale(pixels)
    if gray.size == 0:
        raise InvalidInput("frame has zero area")
    return nlm_denoise(gray, patch=patch, search=search, strength=strength)


def _dwt_step(values: np.ndarray, axis: int) -> tuple[np.ndarray, np.ndarray]:
    """One periodic db2 analysis step along ``axis``; length must be even."""
    n = values.shape[axis]
    lo = np.zeros_like(np.take(values, range(0, n, 2), axis=axis))
    hi = np.zeros_like(lo)
    for tap in range(4):
        rolled = np.take(np.roll(values, -tap, axis=axis), range(0, n, 2), axis=axis)
        lo = lo + DB2_LO[tap] * rolled
        hi = hi + DB2_HI[tap] * rolled
    return lo, hi


def _dwt2_level(values: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    lo_r, hi_r = _dwt_step(values, axis=0)
    ll, lh = _dwt_step(lo_r, axis=1)
    hl, hh = _dwt_step(hi_r, axis=1)
    return ll, lh, hl, hh


def dwt2_energy(pixels: np.ndarray) -> WaveletEnergy:
    """Subband energies of a 2-level periodic db2 decomposition.

    Both dimensions must be at least 8 and divisible by 4 so two dyadic
    halvings stay even. Orthonormality plus periodic extension makes the
    total equal the pixel sum of squares.
    """
    img = np.asarray(pixels, dtype=np.float64)
    if img.ndim != 2:
        raise InvalidInput(f"expected a 2-D frame, got shape {img.shape}")
    h, w = img.shape
    if h < 8 or w < 8:
        raise InvalidInput(f"frame must be at least 8x8, got {h}x{w}")
    if h % 4 or w % 4:
        raise InvalidInput(f"frame dimensions must be divisible by 4, got {h}x{w}")

    ll1, lh1, hl1, hh1 = _dwt2_level(img)
    ll2, lh2, hl2, hh2 = _dwt2_level(ll1)

    def energy(band: np.ndarray) -> float:
        return float(np.sum(band * band))

    return WaveletEnergy(
        ll2=energy(ll2), lh2=energy(lh2), hl2=energy(hl2), hh2=energy(hh2),
        lh1=energy(lh1), hl1=energy(hl1), hh1=energy(hh1),
    )


def _neighbor_mean(values: np.ndarray) -> np.ndarray:
    padded = np.pad(values, 1, mode="edge")
    return 0.25 * (padded[:-2, 1:-1] + padded[2:, 1:-1] + padded[1:-1, :-2] + padded[1:-1, 2:])


class DenseFlow:
    """Horn-Schunck dense flow estimator.

    Minimizes brightness-constancy error plus ``alpha``-weighted smoothness
    with a fixed number of Jacobi iterations on raw 0..255 intensities.
    """

    def __init__(self, alpha: float = 10.0, iterations: int = 100):
        if alpha <= 0 or iterations < 1:
            raise InvalidInput("alpha must be positive and iterations >= 1")
        self.alpha = float(alpha)
        self.iterations = int(iterations)

    def __call__(self, frame_prev: np.ndarray, frame_next: np.ndarray) -> FlowField:
        prev = np.asarray(frame_prev, dtype=np.float64)
        nxt = np.asarray(frame_next, dtype=np.float64)
        if prev.shape != nxt.shape or prev.ndim != 2:
            raise InvalidInput(
                f"frames must be 2-D and equal-sized, got {prev.shape} vs {nxt.shape}"
            )

        mean_img = 0.5 * (prev + nxt)
        iy, ix = np.gradient(mean_img)
        it = nxt - prev
        denom = self.alpha ** 2 + ix ** 2 + iy ** 2

        u = np.zeros_like(prev)
        v = np.zeros_like(prev)
        for _ in range(self.iterations):
            u_bar = _neighbor_mean(u)
            v_bar = _neighbor_mean(v)
            residual = (ix * u_bar + iy * v_bar + it) / denom
            u = u_bar - ix * residual
            v = v_bar - iy * residual
        return FlowField(u=u, v=v)


def dense_flow(frame_prev, frame_next, alpha: float = 10.0, iterations: int = 100) -> FlowField:
    return DenseFlow(alpha=alpha, iterations=iterations)(frame_prev, frame_next)


def flow_stats(flow: FlowField) -> FlowStats:
    """Magnitude statistics plus the magnitude-weighted mean direction."""
    mag = flow.magnitude
    # Weighting each unit direction by its magnitude reduces to summing (u, v).
    angle = float(np.arctan2(flow.v.sum(), flow.u.sum()))
    return FlowStats(
        mean_magnitude=float(mag.mean()),
        max_magnitude=float(mag.max()),
        mean_angle=angle,
    )
