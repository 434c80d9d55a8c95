"""File formats: binary PGM (P5) frames, 16-bit PCM mono WAV, burst manifests.

A recorded capture unit on disk is a directory of PGM files, a WAV clip and
a ``manifest.json`` listing ``{"file", "timestamp_s"}`` per frame.
"""

from __future__ import annotations

import json
import wave
from pathlib import Path

import numpy as np

from .errors import InvalidInput
from .timebase import AudioClip, Frame, FrameBurst

INT16_MAX = 2 ** 15 - 1


def write_pgm(path: str | Path, pixels: np.ndarray) -> None:
    """Write a 2-D uint8 array as binary PGM (P5, maxval 255)."""
    pixels = np.asarray(pixels)
    if pixels.ndim != 2:
        raise InvalidInput(f"PGM needs a 2-D grid, got shape {pixels.shape}")
    height, width = pixels.shape
    header = f"P5\n{width} {height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + pixels.astype(np.uint8).tobytes())


def read_pgm(path: str | Path) -> np.ndarray:
    data = Path(path).read_bytes()
    fields: list[bytes] = []
    pos = 0
    # Header is whitespace-separated tokens; '#' starts a comment line.
    while len(fields) < 4 and pos < len(data):
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        fields.append(data[start:pos])
    if len(fields) < 4 or fields[0] != b"P5":
        raise InvalidInput(f"{path}: not a binary PGM (P5) file")
    width, height, maxval = int(fields[1]), int(fields[2]), int(fields[3])
    if maxval != 255:
        raise InvalidInput(f"{path}: only maxval 255 supported, got {maxval}")
    pos += 1  # single whitespace byte after maxval
    raster = np.frombuffer(data, dtype=np.uint8, count=width * height, offset=pos)
    return raster.reshape(height, width).copy()


def write_wav(path: str | Path, samples: np.ndarray, sample_rate: int) -> None:
    """Write float samples in [-1, 1] as 16-bit PCM mono WAV."""
    quantized = np.clip(np.rint(np.asarray(samples) * INT16_MAX), -INT16_MAX - 1, INT16_MAX)
    with wave.open(str(path), "wb") as wav:
        wav.setnchannels(1)
        wav.setsampwidth(2)
        wav.setframerate(int(sample_rate))
        wav.writeframes(quantized.astype("<i2").tobytes())


def read_wav(path: str | Path) -> tuple[np.ndarray, int]:
    """Read a 16-bit PCM mono WAV into float64 samples in [-1, 1]."""
    with wave.open(str(path), "rb") as wav:
        if wav.getnchannels() != 1 or wav.getsampwidth() != 2:
            raise InvalidInput(f"{path}: expected 16-bit mono PCM")
        sample_rate = wav.getframerate()
        raw = wav.readframes(wav.getnframes())
    samples = np.frombuffer(raw, dtype="<i2").astype(np.float64) / INT16_MAX
    return samples, sample_rate


def write_manifest(
    directory: str | Path,
    frame_files: list[str],
    timestamps: list[float],
    nominal_fps: float,
    audio_file: str,
    audio_start_s: float = 0.0,
) -> Path:
    manifest = {
        "nominal_fps": nominal_fps,
        "audio": {"file": audio_file, "start_s": audio_start_s},
        "frames": [
            {"file": f, "timestamp_s": t} for f, t in zip(frame_files, timestamps)
        ],
    }
    path = Path(directory) / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n")
    return path


def load_capture(directory: str | Path) -> tuple[FrameBurst, AudioClip]:
    """Load a burst and its clip from a manifest directory."""
    directory = Path(directory)
    manifest_path = directory / "manifest.json"
    if not manifest_path.exists():
        raise InvalidInput(f"missing manifest: {manifest_path}")
    manifest = json.loads(manifest_path.read_text())

    frames = [
        Frame(read_pgm(directory / entry["file"]), float(entry["timestamp_s"]))
        for entry in manifest["frames"]
    ]
    burst = FrameBurst(frames, nominal_fps=float(manifest.get("nominal_fps", 20.0)))

    audio_meta = manifest["audio"]
    samples, sample_rate = read_wav(directory / audio_meta["file"])
    clip = AudioClip(samples, sample_rate, start_time=float(audio_meta.get("start_s", 0.0)))
    return burst, clip
