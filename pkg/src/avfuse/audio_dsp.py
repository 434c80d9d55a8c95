"""Audio time-frequency representations and scalar spectral statistics.

Three representations of a sample window: STFT magnitude spectrogram,
64-band mel spectrogram (HTK mel scale, triangular filters with peak weight
1), and a Morlet-wavelet scalogram. Scalar statistics (zero-crossing rate,
spectral centroid, bandwidth, rolloff, mean-square energy) feed the audio
tokens of the fusion models.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput

MORLET_OMEGA0 = 6.0
ROLLOFF_FRACTION = 0.85


@dataclass(frozen=True)
class Spectrogram:
    magnitudes: np.ndarray  # (time_frames, freq_bins), non-negative
    window_size: int
    hop_length: int
    sample_rate: int

    @property
    def freq_bins(self) -> np.ndarray:
        """Center frequency in Hz of each bin."""
        n_bins = self.magnitudes.shape[1]
        return np.arange(n_bins) * self.sample_rate / self.window_size


@dataclass(frozen=True)
class MelSpectrogram:
    bands: np.ndarray  # (time_frames, n_bands)
    filters: np.ndarray  # (n_bands, freq_bins) triangular weights, peak 1
    sample_rate: int


@dataclass(frozen=True)
class Scalogram:
    coefficients: np.ndarray  # (n_scales, n_samples) magnitudes
    scales: np.ndarray  # strictly increasing, in samples
    sample_rate: int

    @property
    def pseudo_frequencies(self) -> np.ndarray:
        return MORLET_OMEGA0 * self.sample_rate / (2.0 * np.pi * self.scales)


@dataclass(frozen=True)
class SpectralStats:
    zcr: float
    centroid_hz: float
    bandwidth_hz: float
    rolloff_hz: float
    energy: float


def hann_window(n: int) -> np.ndarray:
    # Periodic Hann, the analysis variant.
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def stft(samples, window_size: int, hop_length: int, sample_rate: int) -> Spectrogram:
    """Hann-windowed magnitude STFT.

    Produces ``1 + (len(samples) - window_size) // hop_length`` frames of
    ``window_size // 2 + 1`` one-sided bins.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if window_size < 2 or window_size & (window_size - 1):
        raise InvalidInput(f"window_size must be a power of two, got {window_size}")
    if hop_length < 1:
        raise InvalidInput(f"hop_length must be positive, got {hop_length}")
    if len(samples) < window_size:
        raise InvalidInput(
            f"need at least window_size={window_size} samples, got {len(samples)}"
        )
    n_frames = 1 + (len(samples) - window_size) // hop_length
    window = hann_window(window_size)
    starts = np.arange(n_frames) * hop_length
    frames = samples[starts[:, None] + np.arange(window_size)] * window
    magnitudes = np.abs(np.fft.rfft(frames, axis=1))
    return Spectrogram(magnitudes, window_size, hop_length, sample_rate)


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(window_size: int, sample_rate: int, n_bands: int = 64) -> np.ndarray:
    """Triangular filters equally spaced on the mel scale over [0, Nyquist].

    Peak weight is 1, so overlapping ascending/descending flanks of adjacent
    filters sum to at most 1 per bin and total filtered energy never exceeds
    input energy.
    """
    n_bins = window_size // 2 + 1
    bin_hz = np.arange(n_bins) * sample_rate / window_size
    edges_hz = mel_to_hz(np.linspace(0.0, hz_to_mel(sample_rate / 2.0), n_bands + 2))
    filters = np.zeros((n_bands, n_bins))
    for k in range(n_bands):
        lo, mid, hi = edges_hz[k], edges_hz[k + 1], edges_hz[k + 2]
        rising = (bin_hz - lo) / (mid - lo)
        falling = (hi - bin_hz) / (hi - mid)
        filters[k] = np.clip(np.minimum(rising, falling), 0.0, None)
    return filters


def mel_spectrogram(spec: Spectrogram, n_bands: int = 64) -> MelSpectrogram:
    """Pool squared STFT magnitudes through the mel filterbank."""
    filters = mel_filterbank(spec.window_size, spec.sample_rate, n_bands)
    bands = (spec.magnitudes ** 2) @ filters.T
    return MelSpectrogram(bands, filters, spec.sample_rate)


def morlet_wavelet(scale: float, omega0: float = MORLET_OMEGA0) -> np.ndarray:
    """Sampled Morlet wavelet at the given scale (in samples).

    Truncated at five scale widths, where the Gaussian envelope is below
    4e-6 of its peak.
    """
    if scale <= 0:
        raise InvalidInput(f"wavelet scale must be positive, got {scale}")
    half = int(np.ceil(5.0 * scale))
    t = np.arange(-half, half + 1) / scale
    return np.pi ** -0.25 * np.exp(1j * omega0 * t) * np.exp(-0.5 * t * t) / np.sqrt(scale)


def default_cwt_scales(
    sample_rate: int, n_scales: int = 32, fmin_hz: float = 50.0, fmax_hz: float = 8000.0
) -> np.ndarray:
    """Log-spaced scales whose pseudo-frequencies span [fmin, fmax]."""
    freqs = np.geomspace(fmax_hz, fmin_hz, n_scales)
    return MORLET_OMEGA0 * sample_rate / (2.0 * np.pi * freqs)


def cwt_scalogram(samples, scales, sample_rate: int) -> Scalogram:
    """Morlet scalogram: per-scale cross-correlation of the signal with the
    sampled wavelet, computed by frequency-domain multiplication.

    Output row ``i`` holds ``|sum_m x[b+m] conj(psi_scale[m])|`` for every
    sample position ``b``; samples outside the signal are treated as zero.
    """
    samples = np.asarray(samples, dtype=np.float64)
    scales = np.asarray(scales, dtype=np.float64)
    if len(samples) == 0:
        raise InvalidInput("cannot transform an empty signal")
    if len(scales) == 0:
        raise InvalidInput("need at least one scale")
    if np.any(scales <= 0):
        raise InvalidInput("scales must be positive")

    n = len(samples)
    coeffs = np.empty((len(scales), n))
    for i, scale in enumerate(scales):
        psi = morlet_wavelet(scale)
        half = (len(psi) - 1) // 2
        # Cross-correlation == convolution with the reversed conjugate kernel.
        kernel = np.conj(psi)[::-1]
        nfft = 1 << int(np.ceil(np.log2(n + len(kernel) - 1)))
        full = np.fft.ifft(np.fft.fft(samples, nfft) * np.fft.fft(kernel, nfft))
        coeffs[i] = np.abs(full[half:half + n])
    return Scalogram(coeffs, scales, sample_rate)


def spectral_stats(samples, sample_rate: int) -> SpectralStats:
    """Scalar statistics of a sample window.

    zcr counts sign changes over ``len - 1`` adjacent pairs. Centroid and
    bandwidth are the magnitude-weighted mean and standard deviation of the
    one-sided spectrum; rolloff is the lowest frequency below which 85% of
    spectral energy lies. A silent window yields all zeros rather than NaN.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if len(samples) < 2:
        raise InvalidInput(f"need at least 2 samples, got {len(samples)}")

    sign_changes = int(np.count_nonzero(samples[:-1] * samples[1:] < 0))
    zcr = sign_changes / (len(samples) - 1)
    energy = float(np.mean(samples ** 2))

    magnitudes = np.abs(np.fft.rfft(samples))
    freqs = np.fft.rfftfreq(len(samples), d=1.0 / sample_rate)
    total_mag = magnitudes.sum()
    if total_mag == 0.0:
        return SpectralStats(zcr=zcr, centroid_hz=0.0, bandwidth_hz=0.0, rolloff_hz=0.0, energy=energy)

    centroid = float((freqs * magnitudes).sum() / total_mag)
    bandwidth = float(np.sqrt(((freqs - centroid) ** 2 * magnitudes).sum() / total_mag))
    power = magnitudes ** 2
    cumulative = np.cumsum(power)
    rolloff_idx = int(np.searchsorted(cumulative, ROLLOFF_FRACTION * cumulative[-1]))
    rolloff = float(freqs[min(rolloff_idx, len(freqs) - 1)])
    return SpectralStats(zcr=zcr, centroid_hz=centroid, bandwidth_hz=bandwidth, rolloff_hz=rolloff, energy=energy)
