"""Independent reference implementations shared by the test suite.

Everything here is deliberately naive (loops, O(n^2) scans) and written
against the contracts, not against the package internals it checks.
"""

import numpy as np


def brute_force_nms(boxes, scores, class_ids, sources, threshold):
    """Array-based greedy NMS; returns indices kept, per class."""

    def order_key(i):
        source_rank = 0 if sources[i] == "accurate" else 1
        x1, y1, x2, y2 = boxes[i]
        return (-scores[i], source_rank, class_ids[i], x1, y1, x2, y2)

    order = sorted(range(len(boxes)), key=order_key)
    kept = []
    for i in order:
        ok = True
        for j in kept:
            if class_ids[i] != class_ids[j]:
                continue
            if pair_iou(boxes[i], boxes[j]) >= threshold:
                ok = False
                break
        if ok:
            kept.append(i)
    return kept


def pair_iou(a, b):
    ix = min(a[2], b[2]) - max(a[0], b[0])
    iy = min(a[3], b[3]) - max(a[1], b[1])
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    area_a = (a[2] - a[0]) * (a[3] - a[1])
    area_b = (b[2] - b[0]) * (b[3] - b[1])
    return inter / (area_a + area_b - inter)


def scalar_attention(q, k, v):
    """Triple-loop scaled dot-product attention."""
    n, d_k = q.shape
    m = k.shape[0]
    out = np.zeros((n, v.shape[1]))
    for i in range(n):
        scores = np.empty(m)
        for j in range(m):
            scores[j] = sum(q[i, t] * k[j, t] for t in range(d_k)) / np.sqrt(d_k)
        scores -= scores.max()
        weights = np.exp(scores)
        weights /= weights.sum()
        for j in range(m):
            for c in range(v.shape[1]):
                out[i, c] += weights[j] * v[j, c]
    return out


def scalar_softmax_rows(x):
    out = np.empty_like(x, dtype=np.float64)
    for i in range(x.shape[0]):
        row = x[i] - x[i].max()
        e = np.exp(row)
        out[i] = e / e.sum()
    return out


def scalar_layernorm(x, gain, bias, eps=1e-5):
    out = np.empty_like(x, dtype=np.float64)
    for i in range(x.shape[0]):
        mu = x[i].mean()
        var = ((x[i] - mu) ** 2).mean()
        out[i] = (x[i] - mu) / np.sqrt(var + eps) * gain + bias
    return out


def scalar_gelu(x):
    c = np.sqrt(2.0 / np.pi)
    return 0.5 * x * (1.0 + np.tanh(c * (x + 0.044715 * x ** 3)))


def _ref_linear(x, params, name):
    return x @ params[f"{name}.weight"] + params[f"{name}.bias"]


def _ref_mha(params, prefix, query, keyval, heads):
    q = _ref_linear(query, params, f"{prefix}.q")
    k = keyval @ params[f"{prefix}.k.weight"]  # key projection carries no bias
    v = _ref_linear(keyval, params, f"{prefix}.v")
    head_dim = q.shape[1] // heads
    outs = []
    for h in range(heads):
        lo, hi = h * head_dim, (h + 1) * head_dim
        outs.append(scalar_attention(q[:, lo:hi], k[:, lo:hi], v[:, lo:hi]))
    return _ref_linear(np.concatenate(outs, axis=1), params, f"{prefix}.out")


def _ref_ffn(params, prefix, x):
    return _ref_linear(scalar_gelu(_ref_linear(x, params, f"{prefix}.w1")), params, f"{prefix}.w2")


def _ref_ln(params, prefix, x):
    return scalar_layernorm(x, params[f"{prefix}.gain"], params[f"{prefix}.bias"])


def ref_basic_forward(params, config, visual, audio):
    """Plain-numpy forward of the basic fusion model."""
    x = _ref_linear(visual, params, "proj.visual") + _ref_linear(audio, params, "proj.audio")
    for layer in range(config.layers):
        x = _ref_ln(params, f"enc{layer}.ln1", x + _ref_mha(params, f"enc{layer}.attn", x, x, config.heads))
        x = _ref_ln(params, f"enc{layer}.ln2", x + _ref_ffn(params, f"enc{layer}.ffn", x))
    pooled = x.mean(axis=0, keepdims=True)
    return _ref_linear(pooled, params, "head.motion")


def ref_advanced_forward(params, config, visual, audio, fused):
    """Plain-numpy forward of the advanced cross-attention model."""
    t = visual.shape[0]
    v = _ref_linear(visual, params, "proj.visual") + params["pos.visual"][:t]
    a = _ref_linear(audio, params, "proj.audio") + params["pos.audio"][:t]
    a = a + fused.reshape(1, -1)
    for layer in range(config.layers):
        v_att = _ref_mha(params, f"xattn{layer}.va", v, a, config.heads)
        a_att = _ref_mha(params, f"xattn{layer}.av", a, v, config.heads)
        v = _ref_ln(params, f"xattn{layer}.ln_v", v + v_att)
        a = _ref_ln(params, f"xattn{layer}.ln_a", a + a_att)
        v = _ref_ln(params, f"ffn{layer}.ln_v", v + _ref_ffn(params, f"ffn{layer}.v", v))
        a = _ref_ln(params, f"ffn{layer}.ln_a", a + _ref_ffn(params, f"ffn{layer}.a", a))
    pooled = np.concatenate([v.mean(axis=0, keepdims=True), a.mean(axis=0, keepdims=True)], axis=1)
    return _ref_linear(pooled, params, "head.motion"), _ref_linear(pooled, params, "head.event")


def ranking_auc(scores, labels):
    """Mann-Whitney AUC of scores against binary labels (ties count half)."""
    pos = [s for s, l in zip(scores, labels) if l]
    neg = [s for s, l in zip(scores, labels) if not l]
    if not pos or not neg:
        raise ValueError("need both positive and negative examples")
    wins = 0.0
    for p in pos:
        for n in neg:
            if p > n:
                wins += 1.0
            elif p == n:
                wins += 0.5
    return wins / (len(pos) * len(neg))
