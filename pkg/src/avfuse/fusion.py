"""Token construction, audio-ensemble fusion, and the two cross-modal models.

The basic model projects visual and audio tokens to a shared 128-dim space,
combines them by residual addition and runs a 2-layer self-attention encoder
(4 heads) into a binary motion head. The advanced model keeps the streams
separate at 256 dims, adds learned positional embeddings, folds a fused
audio-ensemble embedding into the audio stream, and alternates bidirectional
cross-attention (visual queries over audio keys/values and vice versa) with
per-stream feed-forward blocks across 4 layers of 8 heads, ending in motion
and 32-way event heads.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import tensor as tz
from .audio_dsp import mel_spectrogram, spectral_stats, stft
from .detect_track import Detection
from .errors import InvalidInput
from .tensor import Tensor
from .timebase import AlignedWindow
from .vision_dsp import FlowStats, WaveletEnergy

EMBED_DIM = 768
FUSED_DIM = 256
ENSEMBLE_MODELS = ("general", "speech", "scene")


@dataclass(frozen=True)
class VisualToken:
    bbox_count: int
    mean_confidence: float
    wavelet_energy: float
    flow_mean_magnitude: float = 0.0


@dataclass(frozen=True)
class AudioToken:
    zcr: float
    centroid_hz: float
    bandwidth_hz: float
    rolloff_hz: float
    energy: float = 0.0


@dataclass(frozen=True)
class EnsembleEmbedding:
    general: np.ndarray
    speech: np.ndarray
    scene: np.ndarray
    fused: np.ndarray

    def __post_init__(self):
        for name in ("general", "speech", "scene"):
            vec = getattr(self, name)
            if vec.shape != (EMBED_DIM,):
                raise InvalidInput(f"{name} embedding must be {EMBED_DIM}-dim, got {vec.shape}")
        if self.fused.shape != (FUSED_DIM,):
            raise InvalidInput(f"fused embedding must be {FUSED_DIM}-dim, got {self.fused.shape}")


def build_visual_tokens(
    detections_per_frame: list[list[Detection]],
    wavelet_energies: list[WaveletEnergy],
    flow_stats: list[FlowStats] | None = None,
) -> list[VisualToken]:
    """One token per frame from detection counts, confidence, and texture.

    The wavelet feature is the sum of all seven subband energies. Flow
    statistics are optional; without them the flow feature stays 0 (the
    basic model never reads it).
    """
    if len(detections_per_frame) != len(wavelet_energies):
        raise InvalidInput(
            f"{len(detections_per_frame)} detection lists vs {len(wavelet_energies)} energies"
        )
    if flow_stats is not None and len(flow_stats) != len(wavelet_energies):
        raise InvalidInput(
            f"{len(flow_stats)} flow stats vs {len(wavelet_energies)} energies"
        )
    tokens = []
    for i, (dets, energy) in enumerate(zip(detections_per_frame, wavelet_energies)):
        mean_conf = float(np.mean([d.confidence for d in dets])) if dets else 0.0
        flow_mag = flow_stats[i].mean_magnitude if flow_stats is not None else 0.0
        tokens.append(VisualToken(len(dets), mean_conf, energy.total, flow_mag))
    return tokens


def build_audio_tokens(windows: list[AlignedWindow], sample_rate: int) -> list[AudioToken]:
    """One token per aligned window via its spectral statistics."""
    if not windows:
        raise InvalidInput("no aligned windows to tokenize")
    tokens = []
    for window in windows:
        s = spectral_stats(window.samples, sample_rate)
        tokens.append(AudioToken(s.zcr, s.centroid_hz, s.bandwidth_hz, s.rolloff_hz, s.energy))
    return tokens


def visual_matrix(tokens: list[VisualToken], advanced: bool = False) -> np.ndarray:
    cols = [(t.bbox_count, t.mean_confidence, t.wavelet_energy) for t in tokens]
    if advanced:
        cols = [c + (t.flow_mean_magnitude,) for c, t in zip(cols, tokens)]
    return np.asarray(cols, dtype=np.float64)


def audio_matrix(tokens: list[AudioToken], advanced: bool = False) -> np.ndarray:
    cols = [(t.zcr, t.centroid_hz, t.bandwidth_hz, t.rolloff_hz) for t in tokens]
    if advanced:
        cols = [c + (t.energy,) for c, t in zip(cols, tokens)]
    return np.asarray(cols, dtype=np.float64)


class TokenNormalizer:
    """Per-feature z-normalization fitted on a training scenario.

    Raw features mix counts with Hz-scale values; without this the
    projections would be dominated by the largest unit.
    """

    def __init__(self, visual_mean, visual_std, audio_mean, audio_std):
        self.visual_mean = np.asarray(visual_mean, dtype=np.float64)
        self.visual_std = np.asarray(visual_std, dtype=np.float64)
        self.audio_mean = np.asarray(audio_mean, dtype=np.float64)
        self.audio_std = np.asarray(audio_std, dtype=np.float64)

    @classmethod
    def fit(cls, visual_matrices: list[np.ndarray], audio_matrices: list[np.ndarray]) -> "TokenNormalizer":
        visual = np.concatenate(visual_matrices, axis=0)
        audio = np.concatenate(audio_matrices, axis=0)
        return cls(
            visual.mean(axis=0), np.maximum(visual.std(axis=0), 1e-8),
            audio.mean(axis=0), np.maximum(audio.std(axis=0), 1e-8),
        )

    @classmethod
    def identity(cls, visual_features: int, audio_features: int) -> "TokenNormalizer":
        return cls(np.zeros(visual_features), np.ones(visual_features),
                   np.zeros(audio_features), np.ones(audio_features))

    def normalize_visual(self, matrix: np.ndarray) -> np.ndarray:
        return (matrix - self.visual_mean) / self.visual_std

    def normalize_audio(self, matrix: np.ndarray) -> np.ndarray:
        return (matrix - self.audio_mean) / self.audio_std

    def state(self) -> dict[str, np.ndarray]:
        return {
            "norm.visual_mean": self.visual_mean, "norm.visual_std": self.visual_std,
            "norm.audio_mean": self.audio_mean, "norm.audio_std": self.audio_std,
        }

    @classmethod
    def from_state(cls, state: dict[str, np.ndarray]) -> "TokenNormalizer":
        return cls(
            state["norm.visual_mean"].reshape(-1), state["norm.visual_std"].reshape(-1),
            state["norm.audio_mean"].reshape(-1), state["norm.audio_std"].reshape(-1),
        )


def stub_audio_embeddings(samples, sample_rate: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Deterministic 768-dim stand-ins for the three pretrained audio models.

    Mel-spectrogram band statistics pass through a fixed random projection
    seeded per model identity, giving three distinct but repeatable views of
    the same window.
    """
    samples = np.asarray(samples, dtype=np.float64)
    window = 1 << int(np.log2(max(2, min(512, len(samples)))))
    spec = stft(samples, window, window // 2, sample_rate)
    mel = mel_spectrogram(spec)
    bands = np.log1p(mel.bands)
    stats = np.concatenate([bands.mean(axis=0), bands.std(axis=0)])  # 128 values

    embeddings = []
    for index, name in enumerate(ENSEMBLE_MODELS):
        rng = np.random.default_rng(np.random.SeedSequence([0x5EED, index]))
        projection = rng.normal(size=(EMBED_DIM, stats.size)) / np.sqrt(stats.size)
        embeddings.append(np.tanh(projection @ stats))
    return tuple(embeddings)


def _uniform_init(rng, fan_in: int, shape) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


class AudioEnsembleFusion:
    """Linear reduction of three concatenated 768-dim embeddings to 256."""

    def __init__(self, seed: int = 0, params: dict[str, np.ndarray] | None = None):
        if params is None:
            rng = np.random.default_rng(seed)
            params = {
                "ensemble.weight": _uniform_init(rng, 3 * EMBED_DIM, (3 * EMBED_DIM, FUSED_DIM)),
                "ensemble.bias": np.zeros((1, FUSED_DIM)),
            }
        self.weight = Tensor(params["ensemble.weight"], requires_grad=True)
        self.bias = Tensor(params["ensemble.bias"], requires_grad=True)

    def fuse_graph(self, e1, e2, e3) -> Tensor:
        for i, e in enumerate((e1, e2, e3)):
            if np.asarray(e.data if isinstance(e, Tensor) else e).size != EMBED_DIM:
                raise InvalidInput(f"ensemble input {i} must have {EMBED_DIM} values")
        concat = np.concatenate([
            np.asarray(e.data if isinstance(e, Tensor) else e).reshape(-1) for e in (e1, e2, e3)
        ]).reshape(1, -1)
        return tz.add_bias(tz.matmul(Tensor(concat), self.weight), self.bias)

    def fuse(self, e1, e2, e3) -> np.ndarray:
        return self.fuse_graph(e1, e2, e3).data.reshape(-1)

    def embed(self, samples, sample_rate: int) -> EnsembleEmbedding:
        general, speech, scene = stub_audio_embeddings(samples, sample_rate)
        return EnsembleEmbedding(general, speech, scene, self.fuse(general, speech, scene))

    def parameters(self) -> list[Tensor]:
        return [self.weight, self.bias]

    def state(self) -> dict[str, np.ndarray]:
        return {"ensemble.weight": self.weight.data, "ensemble.bias": self.bias.data}


def fuse_audio_ensemble(e1, e2, e3, fusion: AudioEnsembleFusion | None = None, seed: int = 0) -> np.ndarray:
    """Module-level convenience around :class:`AudioEnsembleFusion`."""
    return (fusion or AudioEnsembleFusion(seed=seed)).fuse(e1, e2, e3)


class _ParamStore:
    """Shared parameter bookkeeping for both fusion models."""

    def __init__(self):
        self.params: dict[str, Tensor] = {}

    def make(self, rng, name: str, fan_in: int, shape) -> Tensor:
        tensor = Tensor(_uniform_init(rng, fan_in, shape), requires_grad=True)
        self.params[name] = tensor
        return tensor

    def make_const(self, name: str, value: np.ndarray) -> Tensor:
        tensor = Tensor(value, requires_grad=True)
        self.params[name] = tensor
        return tensor

    def linear(self, rng, name: str, d_in: int, d_out: int) -> tuple[Tensor, Tensor]:
        w = self.make(rng, f"{name}.weight", d_in, (d_in, d_out))
        b = self.make_const(f"{name}.bias", np.zeros((1, d_out)))
        return w, b

    def layer_norm(self, name: str, dim: int) -> tuple[Tensor, Tensor]:
        g = self.make_const(f"{name}.gain", np.ones((1, dim)))
        b = self.make_const(f"{name}.bias", np.zeros((1, dim)))
        return g, b

    def parameters(self) -> list[Tensor]:
        return list(self.params.values())

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.grad = None

    def load_state(self, state: dict[str, np.ndarray]) -> None:
        for name, tensor in self.params.items():
            if name not in state:
                raise InvalidInput(f"parameter file missing tensor {name}")
            if state[name].shape != tensor.data.shape:
                raise InvalidInput(
                    f"{name}: shape {state[name].shape} does not match model {tensor.data.shape}"
                )
            tensor.data = state[name].astype(np.float64)


def _linear(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    return tz.add_bias(tz.matmul(x, w), b)


def _multi_head_attention(store, prefix: str, query: Tensor, keyval: Tensor,
                          heads: int, trace: list | None) -> Tensor:
    p = store.params
    q = _linear(query, p[f"{prefix}.q.weight"], p[f"{prefix}.q.bias"])
    # No key bias: a constant added to every key shifts each query's scores
    # uniformly, which the row softmax cancels, leaving a dead parameter.
    k = tz.matmul(keyval, p[f"{prefix}.k.weight"])
    v = _linear(keyval, p[f"{prefix}.v.weight"], p[f"{prefix}.v.bias"])
    dim = q.shape[1]
    head_dim = dim // heads
    outs = []
    for h in range(heads):
        lo, hi = h * head_dim, (h + 1) * head_dim
        qh, kh, vh = (tz.slice_cols(t, lo, hi) for t in (q, k, v))
        weights = tz.attention_weights(qh, kh)
        if trace is not None:
            trace.append(weights.data)
        outs.append(tz.matmul(weights, vh))
    merged = tz.concat(outs) if len(outs) > 1 else outs[0]
    return _linear(merged, p[f"{prefix}.out.weight"], p[f"{prefix}.out.bias"])


def _feed_forward(store, prefix: str, x: Tensor) -> Tensor:
    p = store.params
    hidden = tz.gelu(_linear(x, p[f"{prefix}.w1.weight"], p[f"{prefix}.w1.bias"]))
    return _linear(hidden, p[f"{prefix}.w2.weight"], p[f"{prefix}.w2.bias"])


def _init_mha(store, rng, prefix: str, dim: int) -> None:
    for part in ("q", "v", "out"):
        store.linear(rng, f"{prefix}.{part}", dim, dim)
    store.make(rng, f"{prefix}.k.weight", dim, (dim, dim))


def _init_ffn(store, rng, prefix: str, dim: int, hidden: int) -> None:
    store.linear(rng, f"{prefix}.w1", dim, hidden)
    store.linear(rng, f"{prefix}.w2", hidden, dim)


@dataclass(frozen=True)
class BasicFusionConfig:
    hidden: int = 128
    layers: int = 2
    heads: int = 4
    ffn_hidden: int = 512
    visual_features: int = 3
    audio_features: int = 4
    motion_classes: int = 2


class BasicFusionModel:
    """Shared-stream encoder for binary motion classification.

    No positional embeddings: attention plus mean pooling makes predictions
    invariant to token order, which the tests rely on.
    """

    def __init__(self, config: BasicFusionConfig | None = None, seed: int = 0):
        self.config = config or BasicFusionConfig()
        self.store = _ParamStore()
        rng = np.random.default_rng(seed)
        c = self.config
        self.store.linear(rng, "proj.visual", c.visual_features, c.hidden)
        self.store.linear(rng, "proj.audio", c.audio_features, c.hidden)
        for layer in range(c.layers):
            _init_mha(self.store, rng, f"enc{layer}.attn", c.hidden)
            self.store.layer_norm(f"enc{layer}.ln1", c.hidden)
            _init_ffn(self.store, rng, f"enc{layer}.ffn", c.hidden, c.ffn_hidden)
            self.store.layer_norm(f"enc{layer}.ln2", c.hidden)
        self.store.linear(rng, "head.motion", c.hidden, c.motion_classes)

    def forward(self, visual: np.ndarray, audio: np.ndarray, trace: list | None = None) -> Tensor:
        """Motion logits (1 x 2) for one token sequence."""
        visual = np.atleast_2d(np.asarray(visual, dtype=np.float64))
        audio = np.atleast_2d(np.asarray(audio, dtype=np.float64))
        if visual.shape[0] != audio.shape[0] or visual.shape[0] == 0:
            raise InvalidInput(
                f"token counts differ or empty: visual {visual.shape}, audio {audio.shape}"
            )
        c = self.config
        if visual.shape[1] != c.visual_features or audio.shape[1] != c.audio_features:
            raise InvalidInput(
                f"expected {c.visual_features}/{c.audio_features} features, "
                f"got {visual.shape[1]}/{audio.shape[1]}"
            )
        p = self.store.params
        v = _linear(Tensor(visual), p["proj.visual.weight"], p["proj.visual.bias"])
        a = _linear(Tensor(audio), p["proj.audio.weight"], p["proj.audio.bias"])
        x = tz.add(v, a)
        for layer in range(c.layers):
            attn = _multi_head_attention(self.store, f"enc{layer}.attn", x, x, c.heads, trace)
            x = tz.layer_norm(tz.add(x, attn), p[f"enc{layer}.ln1.gain"], p[f"enc{layer}.ln1.bias"])
            ff = _feed_forward(self.store, f"enc{layer}.ffn", x)
            x = tz.layer_norm(tz.add(x, ff), p[f"enc{layer}.ln2.gain"], p[f"enc{layer}.ln2.bias"])
        pooled = tz.mean(x, axis=0)
        return _linear(pooled, p["head.motion.weight"], p["head.motion.bias"])

    def predict_motion(self, visual: np.ndarray, audio: np.ndarray) -> int:
        return int(np.argmax(self.forward(visual, audio).data))

    def parameters(self) -> list[Tensor]:
        return self.store.parameters()

    def zero_grad(self) -> None:
        self.store.zero_grad()


@dataclass(frozen=True)
class AdvancedFusionConfig:
    hidden: int = 256
    layers: int = 4
    heads: int = 8
    ffn_hidden: int = 1024
    visual_features: int = 4
    audio_features: int = 5
    motion_classes: int = 2
    event_classes: int = 32
    max_tokens: int = 64


@dataclass(frozen=True)
class AdvancedOutput:
    motion_logits: np.ndarray  # (2,)
    event_logits: np.ndarray  # (32,)


class AdvancedFusionModel:
    """Bidirectional cross-attention fusion with motion and event heads.

    Each layer attends visual queries over audio keys/values and audio
    queries over visual keys/values (both reading the pre-update streams),
    then applies per-stream feed-forward blocks; every sublayer is wrapped
    in residual + layer norm. The fused ensemble embedding enters as a
    broadcast additive bias on the projected audio tokens before layer 1.
    """

    def __init__(self, config: AdvancedFusionConfig | None = None, seed: int = 0):
        self.config = config or AdvancedFusionConfig()
        self.store = _ParamStore()
        rng = np.random.default_rng(seed)
        c = self.config
        self.store.linear(rng, "proj.visual", c.visual_features, c.hidden)
        self.store.linear(rng, "proj.audio", c.audio_features, c.hidden)
        if c.hidden != FUSED_DIM:
            raise InvalidInput(
                f"hidden dim {c.hidden} must equal the fused embedding dim {FUSED_DIM}"
            )
        self.store.make(rng, "pos.visual", c.hidden, (c.max_tokens, c.hidden))
        self.store.make(rng, "pos.audio", c.hidden, (c.max_tokens, c.hidden))
        for layer in range(c.layers):
            _init_mha(self.store, rng, f"xattn{layer}.va", c.hidden)  # visual queries
            _init_mha(self.store, rng, f"xattn{layer}.av", c.hidden)  # audio queries
            self.store.layer_norm(f"xattn{layer}.ln_v", c.hidden)
            self.store.layer_norm(f"xattn{layer}.ln_a", c.hidden)
            _init_ffn(self.store, rng, f"ffn{layer}.v", c.hidden, c.ffn_hidden)
            _init_ffn(self.store, rng, f"ffn{layer}.a", c.hidden, c.ffn_hidden)
            self.store.layer_norm(f"ffn{layer}.ln_v", c.hidden)
            self.store.layer_norm(f"ffn{layer}.ln_a", c.hidden)
        self.store.linear(rng, "head.motion", 2 * c.hidden, c.motion_classes)
        self.store.linear(rng, "head.event", 2 * c.hidden, c.event_classes)
        self.ensemble = AudioEnsembleFusion(seed=seed + 1)
        self.store.params.update(
            {"ensemble.weight": self.ensemble.weight, "ensemble.bias": self.ensemble.bias}
        )

    def forward_graph(self, visual: np.ndarray, audio: np.ndarray, fused,
                      trace: list | None = None) -> tuple[Tensor, Tensor]:
        visual = np.atleast_2d(np.asarray(visual, dtype=np.float64))
        audio = np.atleast_2d(np.asarray(audio, dtype=np.float64))
        c = self.config
        n_tokens = visual.shape[0]
        if n_tokens != audio.shape[0] or n_tokens == 0:
            raise InvalidInput(
                f"token counts differ or empty: visual {visual.shape}, audio {audio.shape}"
            )
        if n_tokens > c.max_tokens:
            raise InvalidInput(f"{n_tokens} tokens exceed positional table of {c.max_tokens}")
        if visual.shape[1] != c.visual_features or audio.shape[1] != c.audio_features:
            raise InvalidInput(
                f"expected {c.visual_features}/{c.audio_features} features, "
                f"got {visual.shape[1]}/{audio.shape[1]}"
            )
        if not isinstance(fused, Tensor):
            fused = np.asarray(fused, dtype=np.float64).reshape(1, -1)
            if fused.shape[1] != FUSED_DIM:
                raise InvalidInput(f"fused embedding must be {FUSED_DIM}-dim, got {fused.shape[1]}")
            fused = Tensor(fused)

        p = self.store.params
        v = _linear(Tensor(visual), p["proj.visual.weight"], p["proj.visual.bias"])
        a = _linear(Tensor(audio), p["proj.audio.weight"], p["proj.audio.bias"])
        v = tz.add(v, tz.slice_rows(p["pos.visual"], 0, n_tokens))
        a = tz.add(a, tz.slice_rows(p["pos.audio"], 0, n_tokens))
        a = tz.add_bias(a, fused)

        for layer in range(c.layers):
            v_att = _multi_head_attention(self.store, f"xattn{layer}.va", v, a, c.heads, trace)
            a_att = _multi_head_attention(self.store, f"xattn{layer}.av", a, v, c.heads, trace)
            v = tz.layer_norm(tz.add(v, v_att), p[f"xattn{layer}.ln_v.gain"], p[f"xattn{layer}.ln_v.bias"])
            a = tz.layer_norm(tz.add(a, a_att), p[f"xattn{layer}.ln_a.gain"], p[f"xattn{layer}.ln_a.bias"])
            v = tz.layer_norm(tz.add(v, _feed_forward(self.store, f"ffn{layer}.v", v)),
                              p[f"ffn{layer}.ln_v.gain"], p[f"ffn{layer}.ln_v.bias"])
            a = tz.layer_norm(tz.add(a, _feed_forward(self.store, f"ffn{layer}.a", a)),
                              p[f"ffn{layer}.ln_a.gain"], p[f"ffn{layer}.ln_a.bias"])

        pooled = tz.concat([tz.mean(v, axis=0), tz.mean(a, axis=0)])
        motion = _linear(pooled, p["head.motion.weight"], p["head.motion.bias"])
        event = _linear(pooled, p["head.event.weight"], p["head.event.bias"])
        return motion, event

    def forward(self, visual: np.ndarray, audio: np.ndarray, fused,
                trace: list | None = None) -> AdvancedOutput:
        motion, event = self.forward_graph(visual, audio, fused, trace)
        return AdvancedOutput(motion.data.reshape(-1).copy(), event.data.reshape(-1).copy())

    def parameters(self) -> list[Tensor]:
        return self.store.parameters()

    def zero_grad(self) -> None:
        self.store.zero_grad()


@dataclass(frozen=True)
class LabeledSequence:
    """One training example: token matrices plus labels.

    ``fused`` and ``event_label`` are only read by the advanced model.
    """

    visual: np.ndarray
    audio: np.ndarray
    motion_label: int
    fused: np.ndarray | None = None
    event_label: int | None = None


def train_step(model, batch: list[LabeledSequence], learning_rate: float,
               momentum: float = 0.0, _buffers: dict | None = None) -> float:
    """One full-batch gradient step; returns the batch loss.

    Basic models minimize motion cross-entropy; advanced models add the
    event term. ``learning_rate`` 0 reports the loss without updating.
    """
    if not batch:
        raise InvalidInput("empty training batch")
    advanced = isinstance(model, AdvancedFusionModel)
    for example in batch:
        if example.motion_label not in (0, 1):
            raise InvalidInput(f"motion label {example.motion_label} not in {{0, 1}}")
        if advanced:
            n_events = model.config.event_classes
            if example.event_label is None or not 0 <= example.event_label < n_events:
                raise InvalidInput(f"event label {example.event_label} outside [0, {n_events})")

    model.zero_grad()
    losses = []
    for example in batch:
        if advanced:
            fused = example.fused if example.fused is not None else np.zeros(FUSED_DIM)
            motion, event = model.forward_graph(example.visual, example.audio, fused)
            loss = tz.add(tz.cross_entropy(motion, [example.motion_label]),
                          tz.cross_entropy(event, [example.event_label]))
        else:
            logits = model.forward(example.visual, example.audio)
            loss = tz.cross_entropy(logits, [example.motion_label])
        losses.append(loss)
    total = losses[0]
    for extra in losses[1:]:
        total = tz.add(total, extra)
    total = tz.scale(total, 1.0 / len(batch))
    tz.backward(total)

    for p in model.parameters():
        if p.grad is None:
            continue
        update = p.grad
        if momentum > 0.0:
            assert _buffers is not None, "momentum needs a persistent buffer dict"
            buf = _buffers.setdefault(id(p), np.zeros_like(p.data))
            buf *= momentum
            buf += update
            update = buf
        p.data = p.data - learning_rate * update
    return total.item()


def save_model(path: str | Path, model, normalizer: TokenNormalizer) -> None:
    """Persist model parameters, architecture, and normalizer in one file."""
    state: dict[str, np.ndarray] = {name: t.data for name, t in model.store.params.items()}
    state.update(normalizer.state())
    c = model.config
    if isinstance(model, AdvancedFusionModel):
        arch = [1, c.hidden, c.layers, c.heads, c.ffn_hidden, c.visual_features,
                c.audio_features, c.motion_classes, c.event_classes, c.max_tokens]
    else:
        arch = [0, c.hidden, c.layers, c.heads, c.ffn_hidden, c.visual_features,
                c.audio_features, c.motion_classes]
    state["meta.arch"] = np.array([arch], dtype=np.float64)
    tz.save_tensors(path, state)


def load_model(path: str | Path):
    """Rebuild (model, normalizer) from :func:`save_model` output."""
    state = tz.load_tensors(path)
    if "meta.arch" not in state:
        raise InvalidInput(f"{path}: not a fusion model file (no architecture record)")
    arch = [int(x) for x in state["meta.arch"].reshape(-1)]
    if arch[0] == 1:
        config = AdvancedFusionConfig(hidden=arch[1], layers=arch[2], heads=arch[3],
                                      ffn_hidden=arch[4], visual_features=arch[5],
                                      audio_features=arch[6], motion_classes=arch[7],
                                      event_classes=arch[8], max_tokens=arch[9])
        model = AdvancedFusionModel(config)
    else:
        config = BasicFusionConfig(hidden=arch[1], layers=arch[2], heads=arch[3],
                                   ffn_hidden=arch[4], visual_features=arch[5],
                                   audio_features=arch[6], motion_classes=arch[7])
        model = BasicFusionModel(config)
    model.store.load_state(state)
    if arch[0] == 1:
        model.ensemble.weight = model.store.params["ensemble.weight"]
        model.ensemble.bias = model.store.params["ensemble.bias"]
    normalizer = TokenNormalizer.from_state(state)
    return model, normalizer
