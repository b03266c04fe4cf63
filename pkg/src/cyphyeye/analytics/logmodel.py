"""Recurrent next-token model scoring log lines for anomaly.

A single-layer Elman network over the token vocabulary: embedding, tanh
recurrence, softmax over the next token. The per-line raw score is the mean
negative log-probability per predicted token; published scores are
standardized against the training corpus (mean/deviation). Everything is
float64 numpy with hand-written backpropagation through time so the gradients
can be checked against finite differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from cyphyeye import capture
from cyphyeye.analytics import checkpoint
from cyphyeye.analytics.tokens import TokenVocab, build_vocab, tokenize

PARAM_NAMES = ("emb", "wxh", "whh", "bh", "why", "by")


class CorpusTooSmallError(ValueError):
    pass


@dataclass
class LogScoreModel:
    vocab: TokenVocab
    params: dict  # name -> np.ndarray (float64)
    mu: float = 0.0
    sigma: float = 1.0
    epoch_scores: list = field(default_factory=list)  # mean raw per epoch, [0] = init

    @property
    def dims(self) -> tuple[int, int, int]:
        v, e = self.params["emb"].shape
        h = self.params["whh"].shape[0]
        return v, e, h


def init_params(vocab_size: int, embed_dim: int, hidden_dim: int, seed: int) -> dict:
    rng = np.random.default_rng(seed)
    s = 0.1
    return {
        "emb": rng.normal(0.0, s, (vocab_size, embed_dim)),
        "wxh": rng.normal(0.0, s, (embed_dim, hidden_dim)),
        "whh": rng.normal(0.0, s, (hidden_dim, hidden_dim)),
        "bh": np.zeros(hidden_dim),
        "why": rng.normal(0.0, s, (hidden_dim, vocab_size)),
        "by": np.zeros(vocab_size),
    }


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


def line_loss(params: Mapping[str, np.ndarray], ids: Sequence[int]) -> float:
    """Mean negative log-probability of ids[1:] given their prefixes."""
    emb, wxh, whh, bh, why, by = (params[k] for k in PARAM_NAMES)
    h = np.zeros(whh.shape[0])
    total = 0.0
    n = len(ids) - 1
    for t in range(n):
        h = np.tanh(emb[ids[t]] @ wxh + h @ whh + bh)
        p = _softmax(h @ why + by)
        total -= math.log(max(p[ids[t + 1]], 1e-300))
    return total / n


def loss_and_grads(params: Mapping[str, np.ndarray], ids: Sequence[int]):
    """Backpropagation through time for one line; returns (loss, grads)."""
    emb, wxh, whh, bh, why, by = (params[k] for k in PARAM_NAMES)
    n = len(ids) - 1
    hs = [np.zeros(whh.shape[0])]
    xs, ps = [], []
    total = 0.0
    for t in range(n):
        x = emb[ids[t]]
        h = np.tanh(x @ wxh + hs[-1] @ whh + bh)
        p = _softmax(h @ why + by)
        total -= math.log(max(p[ids[t + 1]], 1e-300))
        xs.append(x)
        hs.append(h)
        ps.append(p)
    loss = total / n

    grads = {k: np.zeros_like(params[k]) for k in PARAM_NAMES}
    dh_next = np.zeros(whh.shape[0])
    for t in reversed(range(n)):
        dlogits = ps[t].copy()
        dlogits[ids[t + 1]] -= 1.0
        dlogits /= n
        grads["why"] += np.outer(hs[t + 1], dlogits)
        grads["by"] += dlogits
        dh = why @ dlogits + dh_next
        dz = dh * (1.0 - hs[t + 1] ** 2)
        grads["wxh"] += np.outer(xs[t], dz)
        grads["whh"] += np.outer(hs[t], dz)
        grads["bh"] += dz
        grads["emb"][ids[t]] += wxh @ dz
        dh_next = whh @ dz
    return loss, grads


def _clip(grads: Mapping[str, np.ndarray], limit: float = 5.0) -> None:
    total = math.sqrt(sum(float((g * g).sum()) for g in grads.values()))
    if total > limit:
        scale = limit / total
        for g in grads.values():
            g *= scale


def _mean_raw(params: Mapping, vocab: TokenVocab, corpus: Sequence[str]) -> float:
    return float(np.mean([line_loss(params, tokenize(vocab, line)) for line in corpus]))


def train_log_model(corpus: Sequence[str], epochs: int, seed: int, *,
                    embed_dim: int = 16, hidden_dim: int = 32, lr: float = 0.1,
                    min_count: int = 2) -> LogScoreModel:
    """Online SGD over the corpus; deterministic for a fixed seed.

    The model records the corpus-mean raw score before training and after each
    epoch, then freezes standardization statistics (mu, sigma) over per-line
    scores. epochs=0 leaves the initialization untouched but still computes
    the statistics.
    """
    corpus = list(corpus)
    if len(corpus) < 100:
        raise CorpusTooSmallError(f"need >= 100 lines, got {len(corpus)}")
    vocab = build_vocab(corpus, min_count=min_count)
    params = init_params(vocab.size, embed_dim, hidden_dim, seed)
    rng = np.random.default_rng(seed + 1)
    tokenized = [tokenize(vocab, line) for line in corpus]

    epoch_scores = [_mean_raw(params, vocab, corpus)]
    for _ in range(epochs):
        for i in rng.permutation(len(tokenized)):
            _, grads = loss_and_grads(params, tokenized[i])
            _clip(grads)
            for k in PARAM_NAMES:
                params[k] -= lr * grads[k]
        epoch_scores.append(_mean_raw(params, vocab, corpus))

    raws = np.array([line_loss(params, ids) for ids in tokenized])
    mu = float(raws.mean())
    sigma = max(float(raws.std()), 1e-9)
    return LogScoreModel(vocab=vocab, params=params, mu=mu, sigma=sigma,
                         epoch_scores=epoch_scores)


def raw_score(model: LogScoreModel, line: str) -> float:
    return line_loss(model.params, tokenize(model.vocab, line))


def score_line(model: LogScoreModel, line: str) -> float:
    """Standardized anomaly score: (raw - mu) / sigma."""
    return (raw_score(model, line) - model.mu) / model.sigma


# ---------------------------------------------------------------------------
# Flow classification


@dataclass(frozen=True)
class RiskLabel:
    label: str  # low | high
    score: float


def classify_flow(model: LogScoreModel, flow: capture.FlowRecord,
                  coincident_alerts: Iterable[capture.Alert] = (), *,
                  theta_risk: float = 2.0,
                  monitored_addresses: frozenset = frozenset(),
                  context_sink: Optional[list] = None) -> RiskLabel:
    """High risk iff the rendered flow line scores above theta_risk, or any
    coincident alert is medium or worse. Flows touching monitored OT addresses
    additionally emit a network-context record into `context_sink`."""
    line = capture.render_log(flow).line
    score = score_line(model, line)
    severe = any(a.severity in ("medium", "high") for a in coincident_alerts)
    label = "high" if (score > theta_risk or severe) else "low"
    if context_sink is not None and (flow.src in monitored_addresses
                                     or flow.dst in monitored_addresses):
        context_sink.append({
            "tick": flow.start_tick, "src": flow.src, "dst": flow.dst,
            "protocol": flow.protocol_tag, "score": score, "label": label,
        })
    return RiskLabel(label=label, score=score)


# ---------------------------------------------------------------------------
# Persistence


def save_log_model(model: LogScoreModel, path) -> None:
    arrays = [model.params[k] for k in PARAM_NAMES]
    stats = {
        "mu": model.mu, "sigma": model.sigma, "epoch_scores": model.epoch_scores,
        "vocab": model.vocab.to_dict(), "dims": list(model.dims),
    }
    checkpoint.save_checkpoint(path, checkpoint.KIND_LOG_MODEL, arrays, stats)


def load_log_model(path) -> LogScoreModel:
    kind, arrays, stats = checkpoint.load_checkpoint(path)
    if kind != checkpoint.KIND_LOG_MODEL:
        raise checkpoint.CheckpointError(f"not a log model checkpoint (kind {kind})")
    params = dict(zip(PARAM_NAMES, arrays))
    return LogScoreModel(vocab=TokenVocab.from_dict(stats["vocab"]), params=params,
                         mu=stats["mu"], sigma=stats["sigma"],
                         epoch_scores=list(stats["epoch_scores"]))
