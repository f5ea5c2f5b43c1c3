"""Pointer-attention encoder/decoder policy and the cloning loss.

A GRU encodes the token sequence; a GRU decoder, started from the final
encoder state, points back into the input at each step. Termination is an
extra pointer slot with a learned key, so the action space is uniformly
"token index or stop". A task head can emit a class label (softmax over
classes) or a bug location (a second pointer over the tokens).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Var

TASK_NONE = "none"
TASK_CLASSIFY = "classify"
TASK_LOCALIZE = "localize"

INIT_RANGE = 0.08


@dataclass
class BCConfig:
    w_att: float = 1.0
    w_aux: float = 0.0
    d_emb: int = 32
    d_hidden: int = 48
    d_attn: int = 64
    lr: float = 5e-3
    grad_clip: float = 5.0
    epochs: int = 50
    batch: int = 8
    seed: int = 0
    task_mode: str = TASK_NONE
    n_classes: int = 0

    def __post_init__(self):
        if self.w_att < 0 or self.w_aux < 0 or self.w_att + self.w_aux == 0:
            raise ValueError("loss weights must be non-negative with a positive sum")
        if min(self.d_emb, self.d_hidden, self.d_attn) < 1:
            raise ValueError("network dimensions must be at least 1")
        if self.task_mode not in (TASK_NONE, TASK_CLASSIFY, TASK_LOCALIZE):
            raise ValueError(f"unknown task_mode {self.task_mode!r}")
        if self.task_mode == TASK_CLASSIFY and self.n_classes < 2:
            raise ValueError("classify mode needs n_classes >= 2")


def _gru_param_names(prefix: str) -> list[tuple[str, str]]:
    return [(f"{prefix}_W{g}", f"{prefix}_U{g}") for g in "zrh"]


def init_params(d_feat: int, cfg: BCConfig) -> dict[str, Var]:
    """All tensors uniform in [-INIT_RANGE, INIT_RANGE] from the run seed."""
    rng = np.random.default_rng(cfg.seed)

    def u(*shape):
        return Var(rng.uniform(-INIT_RANGE, INIT_RANGE, size=shape))

    p: dict[str, Var] = {"W_in": u(d_feat, cfg.d_emb)}
    for prefix in ("enc", "dec"):
        for g in "zrh":
            p[f"{prefix}_W{g}"] = u(cfg.d_emb, cfg.d_hidden)
            p[f"{prefix}_U{g}"] = u(cfg.d_hidden, cfg.d_hidden)
            p[f"{prefix}_b{g}"] = u(cfg.d_hidden)
    p["W1"] = u(cfg.d_hidden, cfg.d_attn)
    p["W2"] = u(cfg.d_hidden, cfg.d_attn)
    p["v"] = u(cfg.d_attn)
    p["b_a"] = u(cfg.d_attn)
    p["e_stop"] = u(cfg.d_hidden)
    p["x_start"] = u(cfg.d_emb)
    if cfg.task_mode == TASK_CLASSIFY:
        p["W_task"] = u(cfg.d_hidden, cfg.n_classes)
    elif cfg.task_mode == TASK_LOCALIZE:
        p["v_loc"] = u(cfg.d_attn)
    return p


def gru_step(p: dict[str, Var], prefix: str, x: Var, h: Var) -> Var:
    z = ad.sigmoid(ad.add(ad.add(ad.matmul(x, p[f"{prefix}_Wz"]),
                                 ad.matmul(h, p[f"{prefix}_Uz"])), p[f"{prefix}_bz"]))
    r = ad.sigmoid(ad.add(ad.add(ad.matmul(x, p[f"{prefix}_Wr"]),
                                 ad.matmul(h, p[f"{prefix}_Ur"])), p[f"{prefix}_br"]))
    h_cand = ad.tanh(ad.add(ad.add(ad.matmul(x, p[f"{prefix}_Wh"]),
                                   ad.matmul(ad.mul(r, h), p[f"{prefix}_Uh"])),
                            p[f"{prefix}_bh"]))
    # h' = (1 - z) * h + z * h_cand, written as h + z * (h_cand - h)
    return ad.add(h, ad.mul(z, ad.sub(h_cand, h)))


def encode(features: np.ndarray, p: dict[str, Var]) -> tuple[Var, Var, Var]:
    """Returns (E, h_n, X): encoder states, final state, token embeddings."""
    n = features.shape[0]
    if n == 0:
        raise ValueError("cannot encode an empty token sequence")
    X = ad.matmul(ad.constant(features), p["W_in"])
    h = ad.constant(np.zeros(p["enc_Uz"].value.shape[0]))
    rows = []
    for j in range(n):
        h = gru_step(p, "enc", ad.row_gather(X, j), h)
        rows.append(h)
    return ad.stack_rows(rows), h, X


def _pointer_logits(P: Var, d: Var, p: dict[str, Var], score_vec: str = "v") -> Var:
    """u = v . tanh(P + d W2), vectorized over the rows of P."""
    return ad.matmul(ad.tanh(ad.add(P, ad.matmul(d, p["W2"]))), p[score_vec])


def attention_keys(E: Var, p: dict[str, Var], with_stop: bool = True) -> Var:
    keys = ad.concat_rows(E, p["e_stop"]) if with_stop else E
    return ad.add(ad.matmul(keys, p["W1"]), p["b_a"])


def decode_step(d: Var, E: Var, p: dict[str, Var]) -> np.ndarray:
    """Distribution over n+1 slots (n tokens plus stop) for one decoder state."""
    logits = _pointer_logits(attention_keys(E, p, with_stop=True), d, p)
    return ad.softmax(logits.value)


def forward_teacher(features: np.ndarray, steps: list[int], p: dict[str, Var],
                    task_mode: str = TASK_NONE) -> tuple[list[Var], Var | None]:
    """Teacher-forced pass: K+1 pointer logits (targets steps + stop) and task logits."""
    if not steps:
        raise ValueError("trajectory must be non-empty")
    n = features.shape[0]
    for s in steps:
        if not 0 <= s < n:
            raise IndexError(f"step index {s} out of range for {n} tokens")
    E, h_n, X = encode(features, p)
    P = attention_keys(E, p, with_stop=True)
    d = h_n
    x = p["x_start"]
    logits_list = []
    for t in range(len(steps) + 1):
        d = gru_step(p, "dec", x, d)
        logits_list.append(_pointer_logits(P, d, p))
        if t < len(steps):
            x = ad.row_gather(X, steps[t])
    task_logits = None
    if task_mode == TASK_CLASSIFY:
        task_logits = ad.matmul(d, p["W_task"])
    elif task_mode == TASK_LOCALIZE:
        task_logits = _pointer_logits(attention_keys(E, p, with_stop=False), d, p, "v_loc")
    return logits_list, task_logits


def bc_loss(action_logits: list[Var], expert_steps: list[int], task_logits: Var | None,
            task_value: int | None, w_att: float, w_aux: float,
            sample_weight: float = 1.0) -> Var:
    """sample_weight * (w_att * mean CE over targets+stop + w_aux * task CE)."""
    if w_att < 0 or w_aux < 0 or w_att + w_aux == 0:
        raise ValueError("loss weights must be non-negative with a positive sum")
    n_slots = action_logits[0].value.shape[0]
    targets = list(expert_steps) + [n_slots - 1]
    if len(action_logits) != len(targets):
        raise ValueError(f"{len(action_logits)} distributions for {len(targets)} targets")
    att = ad.softmax_cross_entropy(action_logits[0], targets[0])
    for logits, tgt in zip(action_logits[1:], targets[1:]):
        att = ad.add(att, ad.softmax_cross_entropy(logits, tgt))
    loss = ad.scale(att, w_att / len(targets))
    if task_logits is not None and task_value is not None and w_aux > 0:
        loss = ad.add(loss, ad.scale(
            ad.softmax_cross_entropy(task_logits, task_value), w_aux))
    return ad.scale(loss, sample_weight)


def rollout(features: np.ndarray, p: dict[str, Var], max_steps: int,
            task_mode: str = TASK_NONE) -> tuple[list[int], int | None]:
    """Greedy decoding: argmax slot each step, feeding back the chosen token."""
    if max_steps < 1:
        raise ValueError("max_steps must be at least 1")
    n = features.shape[0]
    E, h_n, X = encode(features, p)
    P = attention_keys(E, p, with_stop=True)
    d = h_n
    x = p["x_start"]
    steps: list[int] = []
    for _ in range(max_steps):
        d = gru_step(p, "dec", x, d)
        logits = _pointer_logits(P, d, p)
        a = int(np.argmax(logits.value))  # ties resolve to the lowest slot
        if a == n:
            break
        steps.append(a)
        x = ad.row_gather(X, a)
    task_out = None
    if task_mode == TASK_CLASSIFY:
        task_out = int(np.argmax(ad.matmul(d, p["W_task"]).value))
    elif task_mode == TASK_LOCALIZE:
        loc = _pointer_logits(attention_keys(E, p, with_stop=False), d, p, "v_loc")
        task_out = int(np.argmax(loc.value))
    return steps, task_out
