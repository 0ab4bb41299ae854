"""Desk-scale trainable causal language model over the byte vocabulary.

A decoder-only transformer written directly in numpy: learned token and
position embeddings, pre-normalized blocks of causal multi-head attention and
a 4x GELU feed-forward, residual connections, and an untied output head.
Forward and backward passes are hand-derived; training runs in float32 and
gradient checks run the same code in float64.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import erf

from ..errors import ContextOverflow, NonFiniteLoss, NoTrainableExamples, TooLong
from ..sgcodec import SGExample
from .vocab import EOS, VOCAB_SIZE, Vocab, encode_example

_LN_EPS = 1e-5
_ADAM_B1 = 0.9
_ADAM_B2 = 0.999
_ADAM_EPS = 1e-8


@dataclass(frozen=True)
class TinyLMConfig:
    d_model: int = 128
    n_heads: int = 4
    n_layers: int = 2
    context_len: int = 512
    learning_rate: float = 3e-4
    epochs: int = 1
    seed: int = 0
    batch_size: int = 4

    def __post_init__(self):
        if self.d_model % self.n_heads != 0:
            raise ValueError(f"d_model {self.d_model} not divisible by n_heads {self.n_heads}")
        for name in ("d_model", "n_heads", "n_layers", "context_len", "epochs", "batch_size"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")


def init_params(config: TinyLMConfig, rng: np.random.Generator, dtype=np.float32) -> dict[str, np.ndarray]:
    """Seeded N(0, 0.02) weights, zero biases, unit layernorm gains."""
    d, v = config.d_model, VOCAB_SIZE

    def normal(*shape):
        return (rng.standard_normal(shape) * 0.02).astype(dtype)

    p: dict[str, np.ndarray] = {
        "tok_emb": normal(v, d),
        "pos_emb": normal(config.context_len, d),
    }
    for i in range(config.n_layers):
        pre = f"l{i}."
        p[pre + "ln1.g"] = np.ones(d, dtype=dtype)
        p[pre + "ln1.b"] = np.zeros(d, dtype=dtype)
        for nm in ("wq", "wk", "wv", "wo"):
            p[pre + "attn." + nm] = normal(d, d)
        for nm in ("bq", "bk", "bv", "bo"):
            p[pre + "attn." + nm] = np.zeros(d, dtype=dtype)
        p[pre + "ln2.g"] = np.ones(d, dtype=dtype)
        p[pre + "ln2.b"] = np.zeros(d, dtype=dtype)
        p[pre + "mlp.w1"] = normal(d, 4 * d)
        p[pre + "mlp.b1"] = np.zeros(4 * d, dtype=dtype)
        p[pre + "mlp.w2"] = normal(4 * d, d)
        p[pre + "mlp.b2"] = np.zeros(d, dtype=dtype)
    p["lnf.g"] = np.ones(d, dtype=dtype)
    p["lnf.b"] = np.zeros(d, dtype=dtype)
    p["head.w"] = normal(d, v)
    p["head.b"] = np.zeros(v, dtype=dtype)
    return p


# --- building blocks ---------------------------------------------------------


def _layernorm_fwd(x, g, b):
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    inv = 1.0 / np.sqrt((xc * xc).mean(axis=-1, keepdims=True) + _LN_EPS)
    xhat = xc * inv
    return xhat * g + b, (xhat, inv, g)


def _layernorm_bwd(dy, cache):
    xhat, inv, g = cache
    dxhat = dy * g
    dg = (dy * xhat).sum(axis=(0, 1))
    db = dy.sum(axis=(0, 1))
    mean1 = dxhat.mean(axis=-1, keepdims=True)
    mean2 = (dxhat * xhat).mean(axis=-1, keepdims=True)
    dx = inv * (dxhat - mean1 - xhat * mean2)
    return dx, dg, db


def _gelu(x):
    return 0.5 * x * (1.0 + erf(x / np.sqrt(np.asarray(2.0, dtype=x.dtype))))


def _gelu_grad(x):
    cdf = 0.5 * (1.0 + erf(x / np.sqrt(np.asarray(2.0, dtype=x.dtype))))
    pdf = np.exp(-0.5 * x * x) / np.sqrt(np.asarray(2.0 * np.pi, dtype=x.dtype))
    return cdf + x * pdf


def _split_heads(x, n_heads):
    b, t, d = x.shape
    return x.reshape(b, t, n_heads, d // n_heads).transpose(0, 2, 1, 3)


def _merge_heads(x):
    b, h, t, hd = x.shape
    return x.transpose(0, 2, 1, 3).reshape(b, t, h * hd)


def forward(
    params: dict[str, np.ndarray],
    config: TinyLMConfig,
    ids: np.ndarray,
    want_cache: bool = False,
):
    """Logits [B, T, V] for a padded id batch; optionally the backward cache."""
    B, T = ids.shape
    if T > config.context_len:
        raise ContextOverflow(f"sequence length {T} exceeds context {config.context_len}")
    dtype = params["tok_emb"].dtype
    H = config.n_heads
    scale = np.asarray(1.0 / math.sqrt(config.d_model // H), dtype=dtype)
    causal = np.tril(np.ones((T, T), dtype=bool))

    x = params["tok_emb"][ids] + params["pos_emb"][:T][None, :, :]
    cache: dict = {"ids": ids, "T": T, "layers": []}
    for i in range(config.n_layers):
        pre = f"l{i}."
        a, ln1c = _layernorm_fwd(x, params[pre + "ln1.g"], params[pre + "ln1.b"])
        q = _split_heads(a @ params[pre + "attn.wq"] + params[pre + "attn.bq"], H)
        k = _split_heads(a @ params[pre + "attn.wk"] + params[pre + "attn.bk"], H)
        v = _split_heads(a @ params[pre + "attn.wv"] + params[pre + "attn.bv"], H)
        s = (q @ k.transpose(0, 1, 3, 2)) * scale
        s = np.where(causal, s, np.asarray(-np.inf, dtype=dtype))
        s -= s.max(axis=-1, keepdims=True)
        p = np.exp(s)
        p /= p.sum(axis=-1, keepdims=True)
        o = _merge_heads(p @ v)
        att_out = o @ params[pre + "attn.wo"] + params[pre + "attn.bo"]
        x1 = x + att_out
        m, ln2c = _layernorm_fwd(x1, params[pre + "ln2.g"], params[pre + "ln2.b"])
        h1 = m @ params[pre + "mlp.w1"] + params[pre + "mlp.b1"]
        h2 = _gelu(h1)
        x = x1 + h2 @ params[pre + "mlp.w2"] + params[pre + "mlp.b2"]
        if want_cache:
            cache["layers"].append((ln1c, a, q, k, v, p, o, ln2c, m, h1, h2))
    xf, lnfc = _layernorm_fwd(x, params["lnf.g"], params["lnf.b"])
    logits = xf @ params["head.w"] + params["head.b"]
    if want_cache:
        cache["lnf"] = lnfc
        cache["xf"] = xf
        cache["scale"] = scale
    return (logits, cache) if want_cache else logits


def loss_and_grads(
    params: dict[str, np.ndarray],
    config: TinyLMConfig,
    ids: np.ndarray,
    loss_mask: np.ndarray,
    want_grads: bool = True,
):
    """Mean masked cross-entropy over next-token predictions (and gradients).

    ``loss_mask`` marks the tokens to be predicted; position t contributes
    the log-probability of ids[:, t] under the logits at position t-1.
    """
    logits, cache = (forward(params, config, ids, want_cache=True)
                     if want_grads else (forward(params, config, ids), None))
    dtype = logits.dtype
    pl = logits[:, :-1, :]
    labels = ids[:, 1:]
    m = loss_mask[:, 1:].astype(dtype)
    n_masked = m.sum()

    shifted = pl - pl.max(axis=-1, keepdims=True)
    expd = np.exp(shifted)
    z = expd.sum(axis=-1, keepdims=True)
    logp = shifted - np.log(z)
    b_idx, t_idx = np.indices(labels.shape)
    nll = -(logp[b_idx, t_idx, labels] * m).sum() / n_masked
    if not want_grads:
        return float(nll), None

    dlogits = np.zeros_like(logits)
    soft = expd / z
    soft[b_idx, t_idx, labels] -= 1.0
    dlogits[:, :-1, :] = soft * (m[..., None] / n_masked)
    grads = _backward(params, config, cache, dlogits)
    return float(nll), grads


def _backward(params, config, cache, dlogits):
    H = config.n_heads
    scale = cache["scale"]
    grads: dict[str, np.ndarray] = {}
    xf = cache["xf"]
    b, t, d = xf.shape

    grads["head.w"] = xf.reshape(-1, d).T @ dlogits.reshape(-1, dlogits.shape[-1])
    grads["head.b"] = dlogits.sum(axis=(0, 1))
    dxf = dlogits @ params["head.w"].T
    dx, grads["lnf.g"], grads["lnf.b"] = _layernorm_bwd(dxf, cache["lnf"])

    for i in range(config.n_layers - 1, -1, -1):
        pre = f"l{i}."
        ln1c, a, q, k, v, p, o, ln2c, m, h1, h2 = cache["layers"][i]

        # feed-forward block
        dh2 = dx @ params[pre + "mlp.w2"].T
        grads[pre + "mlp.w2"] = h2.reshape(-1, h2.shape[-1]).T @ dx.reshape(-1, d)
        grads[pre + "mlp.b2"] = dx.sum(axis=(0, 1))
        dh1 = dh2 * _gelu_grad(h1)
        grads[pre + "mlp.w1"] = m.reshape(-1, d).T @ dh1.reshape(-1, dh1.shape[-1])
        grads[pre + "mlp.b1"] = dh1.sum(axis=(0, 1))
        dm = dh1 @ params[pre + "mlp.w1"].T
        dx1_ln, grads[pre + "ln2.g"], grads[pre + "ln2.b"] = _layernorm_bwd(dm, ln2c)
        dx1 = dx + dx1_ln

        # attention block
        do = dx1 @ params[pre + "attn.wo"].T
        grads[pre + "attn.wo"] = o.reshape(-1, d).T @ dx1.reshape(-1, d)
        grads[pre + "attn.bo"] = dx1.sum(axis=(0, 1))
        doh = _split_heads(do, H)
        dp = doh @ v.transpose(0, 1, 3, 2)
        dv = p.transpose(0, 1, 3, 2) @ doh
        ds = p * (dp - (dp * p).sum(axis=-1, keepdims=True))
        ds *= scale
        dq = ds @ k
        dk = ds.transpose(0, 1, 3, 2) @ q
        da = np.zeros_like(a)
        for nm, grad_h in (("wq", dq), ("wk", dk), ("wv", dv)):
            g2d = _merge_heads(grad_h).reshape(-1, d)
            grads[pre + "attn." + nm] = a.reshape(-1, d).T @ g2d
            grads[pre + "attn.b" + nm[1]] = g2d.sum(axis=0)
            da += g2d.reshape(a.shape) @ params[pre + "attn." + nm].T
        dx_ln, grads[pre + "ln1.g"], grads[pre + "ln1.b"] = _layernorm_bwd(da, ln1c)
        dx = dx1 + dx_ln

    grads["pos_emb"] = np.zeros_like(params["pos_emb"])
    grads["pos_emb"][: cache["T"]] = dx.sum(axis=0)
    grads["tok_emb"] = np.zeros_like(params["tok_emb"])
    np.add.at(grads["tok_emb"], cache["ids"], dx)
    return grads


# --- training ------------------------------------------------------------------


@dataclass
class TrainResult:
    model: "TinyLM"
    epoch_losses: list[float]
    rejected: list[tuple[str, str]] = field(default_factory=list)  # (id, reason)


def _pad_batch(encoded: list[tuple[np.ndarray, np.ndarray]]):
    width = max(len(ids) for ids, _ in encoded)
    ids = np.zeros((len(encoded), width), dtype=np.int64)
    mask = np.zeros((len(encoded), width), dtype=bool)
    for row, (seq, m) in enumerate(encoded):
        ids[row, : len(seq)] = seq
        mask[row, : len(seq)] = m
    return ids, mask


def tiny_lm_train(examples: Sequence[SGExample], config: TinyLMConfig) -> TrainResult:
    """Fine-tune the tiny LM to emit each example's target; deterministic under seed."""
    vocab = Vocab()
    encoded: list[tuple[np.ndarray, np.ndarray]] = []
    rejected: list[tuple[str, str]] = []
    for ex in examples:
        try:
            encoded.append(encode_example(ex, vocab, config.context_len))
        except TooLong as exc:
            rejected.append((ex.id, str(exc)))
    if not encoded:
        raise NoTrainableExamples(f"0 of {len(examples)} examples fit context {config.context_len}")

    rng = np.random.default_rng(config.seed)
    params = init_params(config, rng, dtype=np.float32)
    adam_m = {k: np.zeros_like(v) for k, v in params.items()}
    adam_v = {k: np.zeros_like(v) for k, v in params.items()}
    step = 0
    epoch_losses: list[float] = []
    lr = config.learning_rate

    for epoch in range(config.epochs):
        order = rng.permutation(len(encoded))
        nll_sum = 0.0
        tok_sum = 0
        for batch_id, start in enumerate(range(0, len(order), config.batch_size)):
            batch = [encoded[j] for j in order[start : start + config.batch_size]]
            ids, mask = _pad_batch(batch)
            loss, grads = loss_and_grads(params, config, ids, mask)
            if not math.isfinite(loss):
                raise NonFiniteLoss(batch_id=batch_id, epoch=epoch)
            step += 1
            bc1 = 1.0 - _ADAM_B1**step
            bc2 = 1.0 - _ADAM_B2**step
            for key, g in grads.items():
                m_ = adam_m[key]
                v_ = adam_v[key]
                m_ *= _ADAM_B1
                m_ += (1.0 - _ADAM_B1) * g
                v_ *= _ADAM_B2
                v_ += (1.0 - _ADAM_B2) * g * g
                params[key] -= lr * (m_ / bc1) / (np.sqrt(v_ / bc2) + _ADAM_EPS)
            n_masked = int(mask[:, 1:].sum())
            nll_sum += loss * n_masked
            tok_sum += n_masked
        epoch_losses.append(nll_sum / tok_sum)

    return TrainResult(TinyLM(config, params, vocab), epoch_losses, rejected)


# --- inference handle ------------------------------------------------------------


class TinyLM:
    """Immutable trained handle; safe to share across threads for inference."""

    def __init__(self, config: TinyLMConfig, params: dict[str, np.ndarray], vocab: Vocab | None = None):
        self.config = config
        self.params = params
        self.vocab = vocab if vocab is not None else Vocab()
        self.vocab_size = VOCAB_SIZE
        self.eos_id = EOS

    @property
    def context_len(self) -> int:
        return self.config.context_len

    def next_token_logprobs(self, seqs: Sequence[Sequence[int]]) -> np.ndarray:
        """Normalized float64 log-probabilities of the next token per sequence."""
        if not seqs:
            return np.zeros((0, VOCAB_SIZE))
        lengths = [len(s) for s in seqs]
        if min(lengths) == 0:
            raise ContextOverflow("empty prefix")
        if max(lengths) >= self.config.context_len:
            raise ContextOverflow(
                f"prefix length {max(lengths)} not below context {self.config.context_len}"
            )
        width = max(lengths)
        ids = np.zeros((len(seqs), width), dtype=np.int64)
        for row, seq in enumerate(seqs):
            ids[row, : len(seq)] = seq
        logits = forward(self.params, self.config, ids)
        last = logits[np.arange(len(seqs)), np.asarray(lengths) - 1].astype(np.float64)
        shifted = last - last.max(axis=-1, keepdims=True)
        return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))

    def next_token(self, prefix: Sequence[int]) -> np.ndarray:
        return self.next_token_logprobs([prefix])[0]

    # --- deterministic on-disk format: one JSON header line + raw float32 bytes

    def save(self, path: str | Path) -> None:
        names = sorted(self.params)
        header = {
            "format": "flseq-model",
            "kind": "tiny",
            "config": asdict(self.config),
            "arrays": [
                {"name": n, "shape": list(self.params[n].shape), "dtype": "<f4"}
                for n in names
            ],
        }
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "wb") as fh:
            fh.write(json.dumps(header, ensure_ascii=False).encode("utf-8"))
            fh.write(b"\n")
            for n in names:
                fh.write(np.ascontiguousarray(self.params[n], dtype="<f4").tobytes())

    @classmethod
    def load(cls, path: str | Path) -> "TinyLM":
        with open(path, "rb") as fh:
            header = json.loads(fh.readline().decode("utf-8"))
            if header.get("kind") != "tiny":
                raise ValueError(f"not a tiny-lm model file: {path}")
            config = TinyLMConfig(**header["config"])
            params = {}
            for spec in header["arrays"]:
                shape = tuple(spec["shape"])
                count = int(np.prod(shape)) if shape else 1
                buf = fh.read(count * 4)
                params[spec["name"]] = np.frombuffer(buf, dtype="<f4").reshape(shape).copy()
        return cls(config, params)
