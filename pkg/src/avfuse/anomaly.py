"""Four anomaly scorers and their weighted combination.

Every method emits a score in [0, 1] so the weighted combination stays
commensurable: z-scores are clamped at ``z / Z_CAP`` and reconstruction
error at ``mse / (10 x final training MSE)``. Rolling baselines always
append the newest observation, anomalous or not.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import tensor as tz
from .errors import InvalidConfig, InvalidInput, NotTrained
from .tensor import Tensor

Z_CAP = 6.0
STD_FLOOR = 1e-6
MSE_CAP_FACTOR = 10.0
MSE_CAP_FLOOR = 1e-6

METHODS = ("statistical", "reconstruction", "audio", "event")


class RollingBaseline:
    """Bounded history of scalar observations with mean/std queries."""

    def __init__(self, capacity: int = 64):
        if capacity < 2:
            raise InvalidInput(f"baseline capacity must be >= 2, got {capacity}")
        self.values: deque[float] = deque(maxlen=capacity)

    def __len__(self) -> int:
        return len(self.values)

    def push(self, value: float) -> None:
        self.values.append(float(value))

    def zscore(self, value: float) -> float:
        history = np.array(self.values)
        return abs(value - history.mean()) / max(float(history.std()), STD_FLOOR)


def clamp_z(z: float) -> float:
    return min(abs(z) / Z_CAP, 1.0)


class StatWindow:
    """Rolling per-frame intensity statistics for the visual z-score method."""

    def __init__(self, capacity: int = 64):
        if capacity < 2:
            raise InvalidInput(f"capacity must be >= 2, got {capacity}")
        self.capacity = capacity
        self.means: deque[float] = deque(maxlen=capacity)
        self.stds: deque[float] = deque(maxlen=capacity)

    def __len__(self) -> int:
        return len(self.means)

    def push(self, frame: np.ndarray) -> None:
        pixels = np.asarray(frame, dtype=np.float64)
        self.means.append(float(pixels.mean()))
        self.stds.append(float(pixels.std()))


def zscore_score(window: StatWindow, frame: np.ndarray) -> float:
    """Clamped z-score of the frame's mean intensity against the history.

    Scored against history excluding this frame; the frame is then appended.
    Fewer than two historical frames is warm-up: score 0, still appended.
    """
    pixels = np.asarray(frame, dtype=np.float64)
    frame_mean = float(pixels.mean())
    if len(window) < 2:
        window.push(pixels)
        return 0.0
    history = np.array(window.means)
    z = abs(frame_mean - history.mean()) / max(float(history.std()), STD_FLOOR)
    window.push(pixels)
    return clamp_z(z)


def block_mean_downsample(pixels: np.ndarray, blocks: int = 8) -> np.ndarray:
    """Average-pool a frame onto a blocks x blocks grid."""
    img = np.asarray(pixels, dtype=np.float64)
    if img.ndim != 2 or img.shape[0] < blocks or img.shape[1] < blocks:
        raise InvalidInput(f"frame must be at least {blocks}x{blocks}, got {img.shape}")
    h, w = img.shape
    row_edges = (np.arange(blocks + 1) * h) // blocks
    col_edges = (np.arange(blocks + 1) * w) // blocks
    rows = np.add.reduceat(img, row_edges[:-1], axis=0)
    cells = np.add.reduceat(rows, col_edges[:-1], axis=1)
    counts = np.outer(np.diff(row_edges), np.diff(col_edges))
    return cells / counts


@dataclass
class DenseAutoencoder:
    """64 -> 16 -> 64 reconstruction model over 8x8 block-mean frames.

    GELU hidden activation, linear output; inputs are intensity grids
    scaled to [0, 1]. ``mse_cap`` is frozen at training time.
    """

    seed: int = 0
    hidden: int = 16
    params: dict[str, Tensor] = field(default_factory=dict)
    training_mse: float | None = None

    def __post_init__(self):
        rng = np.random.default_rng(self.seed)
        if not self.params:
            bound_in = 1.0 / np.sqrt(64)
            bound_hidden = 1.0 / np.sqrt(self.hidden)
            self.params = {
                "enc.weight": Tensor(rng.uniform(-bound_in, bound_in, (64, self.hidden)), requires_grad=True),
                "enc.bias": Tensor(np.zeros((1, self.hidden)), requires_grad=True),
                "dec.weight": Tensor(rng.uniform(-bound_hidden, bound_hidden, (self.hidden, 64)), requires_grad=True),
                "dec.bias": Tensor(np.zeros((1, 64)), requires_grad=True),
            }

    def _forward(self, x: Tensor) -> Tensor:
        p = self.params
        hidden = tz.gelu(tz.add_bias(tz.matmul(x, p["enc.weight"]), p["enc.bias"]))
        return tz.add_bias(tz.matmul(hidden, p["dec.weight"]), p["dec.bias"])

    def reconstruct(self, vector: np.ndarray) -> np.ndarray:
        return self._forward(Tensor(vector.reshape(1, -1))).data.reshape(-1)

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.grad = None

    @property
    def mse_cap(self) -> float:
        if self.training_mse is None:
            raise NotTrained("autoencoder has not been trained")
        return max(MSE_CAP_FACTOR * self.training_mse, MSE_CAP_FLOOR)


def frame_to_vector(frame: np.ndarray) -> np.ndarray:
    return block_mean_downsample(frame).reshape(-1) / 255.0


def autoencoder_train(
    frames: list[np.ndarray],
    steps: int = 2000,
    learning_rate: float = 0.1,
    seed: int = 0,
) -> DenseAutoencoder:
    """Fit the reconstruction model on normal frames by full-batch descent."""
    if len(frames) < 32:
        raise InvalidInput(f"need at least 32 training frames, got {len(frames)}")
    data = np.stack([frame_to_vector(f) for f in frames])
    model = DenseAutoencoder(seed=seed)
    x = Tensor(data)
    inv_n = 1.0 / data.size
    for _ in range(steps):
        model.zero_grad()
        diff = tz.sub(model._forward(x), x)
        loss = tz.scale(tz.sum_all(tz.mul(diff, diff)), inv_n)
        tz.backward(loss)
        for p in model.params.values():
            if p.grad is not None:
                p.data = p.data - learning_rate * p.grad
    recon = model._forward(Tensor(data)).data
    model.training_mse = float(np.mean((recon - data) ** 2))
    return model


def autoencoder_score(model: DenseAutoencoder, frame: np.ndarray) -> float:
    """Reconstruction error scaled by the frozen training cap, clamped to 1."""
    vector = frame_to_vector(frame)
    recon = model.reconstruct(vector)
    mse = float(np.mean((recon - vector) ** 2))
    return min(mse / model.mse_cap, 1.0)


def save_autoencoder(path, model: DenseAutoencoder) -> None:
    if model.training_mse is None:
        raise NotTrained("refusing to persist an untrained autoencoder")
    state = {name: t.data for name, t in model.params.items()}
    state["meta.training_mse"] = np.array([[model.training_mse]])
    tz.save_tensors(path, state)


def load_autoencoder(path) -> DenseAutoencoder:
    state = tz.load_tensors(path)
    model = DenseAutoencoder()
    for name in model.params:
        if name not in state:
            raise InvalidInput(f"autoencoder file missing tensor {name}")
        model.params[name] = Tensor(state[name], requires_grad=True)
    model.training_mse = float(state["meta.training_mse"][0, 0])
    return model


class AudioBaseline:
    """Rolling energy and spectral-centroid baselines for audio scoring."""

    def __init__(self, capacity: int = 64):
        self.energy = RollingBaseline(capacity)
        self.centroid = RollingBaseline(capacity)


def audio_anomaly_score(energy: float, centroid_hz: float, baseline: AudioBaseline) -> float:
    """Max of the clamped energy and centroid z-scores.

    Absolute z-scores catch drops (sudden silence) as well as bursts.
    Warm-up (< 2 history points) scores 0; observations always append.
    """
    if len(baseline.energy) < 2 or len(baseline.centroid) < 2:
        baseline.energy.push(energy)
        baseline.centroid.push(centroid_hz)
        return 0.0
    score = max(clamp_z(baseline.energy.zscore(energy)),
                clamp_z(baseline.centroid.zscore(centroid_hz)))
    baseline.energy.push(energy)
    baseline.centroid.push(centroid_hz)
    return score


@dataclass(frozen=True)
class EventScore:
    score: float
    label_ids: tuple[int, ...]


def event_anomaly_score(
    event_logits: np.ndarray,
    anomaly_label_ids,
    probability_threshold: float = 0.5,
) -> EventScore:
    """Softmax probability mass on known-anomalous event classes.

    Score is the single highest anomaly-class probability; ``label_ids``
    lists every anomaly class above the probability threshold.
    """
    logits = np.asarray(event_logits, dtype=np.float64).reshape(-1)
    ids = sorted(set(int(i) for i in anomaly_label_ids))
    if any(i < 0 or i >= len(logits) for i in ids):
        raise InvalidInput(f"anomaly label ids {ids} outside [0, {len(logits)})")
    if not ids:
        return EventScore(0.0, ())
    shifted = logits - logits.max()
    probs = np.exp(shifted)
    probs /= probs.sum()
    flagged = tuple(i for i in ids if probs[i] > probability_threshold)
    return EventScore(float(max(probs[i] for i in ids)), flagged)


@dataclass(frozen=True)
class AnomalyReport:
    method_scores: dict[str, float]
    combined: float
    triggered: bool
    anomaly_type: str
    contributing_events: tuple[str, ...]
    timestamp: float


def combine_scores(
    scores: dict[str, float],
    weights: dict[str, float],
    threshold: float = 0.5,
    contributing_events: tuple[str, ...] = (),
    timestamp: float = 0.0,
) -> AnomalyReport:
    """Weighted combination with weights normalized to sum 1.

    The report's ``anomaly_type`` names the method with the largest
    weighted contribution (first of ``METHODS`` on ties).
    """
    unknown = set(scores) - set(METHODS)
    if unknown:
        raise InvalidConfig([f"unknown score methods: {sorted(unknown)}"])
    weight_values = np.array([max(0.0, float(weights.get(m, 0.0))) for m in METHODS])
    if any(float(weights.get(m, 0.0)) < 0.0 for m in METHODS):
        raise InvalidConfig(["anomaly weights must be non-negative"])
    total = weight_values.sum()
    if total <= 0.0:
        raise InvalidConfig(["all anomaly weights are zero"])
    weight_values /= total
    score_values = np.array([float(np.clip(scores.get(m, 0.0), 0.0, 1.0)) for m in METHODS])
    contributions = weight_values * score_values
    combined = float(contributions.sum())
    dominant = METHODS[int(np.argmax(contributions))]
    return AnomalyReport(
        method_scores={m: float(s) for m, s in zip(METHODS, score_values)},
        combined=combined,
        triggered=combined >= threshold,
        anomaly_type=dominant,
        contributing_events=tuple(contributing_events),
        timestamp=timestamp,
    )
