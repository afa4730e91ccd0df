"""Desk-scale DDPM junction stitcher.

A small fully-connected noise predictor over a flattened frame window, with a
sinusoidal time embedding and a learned per-condition embedding (index 0 is
the null condition). Training noises only a masked middle block of frames and
regresses the noise on those frames; inference inpaints the gap between two
known segments with the unmasked frames clamped to their re-noised values.
Gradients are hand-derived; everything is plain numpy and deterministic given
the rng.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .core import MotionError


class MaskTooSmall(MotionError):
    pass


# ---------------------------------------------------------------- schedule

@dataclass(frozen=True)
class DiffusionSchedule:
    T: int
    beta: np.ndarray
    alpha: np.ndarray = field(init=False)
    alpha_bar: np.ndarray = field(init=False)

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=np.float64)
        if beta.shape != (self.T,):
            raise ValueError("beta must have length T")
        if not ((beta > 0).all() and (beta < 1).all()):
            raise ValueError("beta entries must lie in (0, 1)")
        if (np.diff(beta) < 0).any():
            raise ValueError("beta must be nondecreasing")
        alpha = 1.0 - beta
        alpha_bar = np.cumprod(alpha)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "alpha_bar", alpha_bar)


def make_schedule(T: int = 1000, beta_start: float = 1e-4,
                  beta_end: float = 0.02) -> DiffusionSchedule:
    if not (0.0 < beta_start <= beta_end < 1.0):
        raise ValueError(f"need 0 < beta_start <= beta_end < 1, got {beta_start}, {beta_end}")
    if T < 1:
        raise ValueError("T must be >= 1")
    return DiffusionSchedule(T, np.linspace(beta_start, beta_end, T))


def forward_sample(x0: np.ndarray, t: int, noise: np.ndarray,
                   sched: DiffusionSchedule) -> np.ndarray:
    """Closed-form marginal: sqrt(abar_t) x0 + sqrt(1 - abar_t) noise."""
    if not (1 <= t <= sched.T):
        raise ValueError(f"t={t} outside [1, {sched.T}]")
    ab = sched.alpha_bar[t - 1]
    return np.sqrt(ab) * x0 + np.sqrt(1.0 - ab) * noise


def mask_middle(window_len: int, fraction: float = 0.10,
                rng: np.random.Generator | None = None) -> np.ndarray:
    """Contiguous masked block of round(fraction * window_len) frames, whose
    extent lies inside the middle third of the window."""
    if not (0.0 < fraction < 1.0):
        raise ValueError("fraction must be in (0, 1)")
    block = round(fraction * window_len)
    if block <= 0:
        raise MaskTooSmall(f"fraction {fraction} of {window_len} frames rounds to 0")
    lo = window_len // 3
    hi = window_len - window_len // 3 - block
    if hi < lo:
        raise MaskTooSmall(f"block of {block} frames does not fit the middle third")
    rng = rng or np.random.default_rng()
    start = int(rng.integers(lo, hi + 1))
    mask = np.zeros(window_len, dtype=bool)
    mask[start:start + block] = True
    return mask


def reverse_step(x_t: np.ndarray, t: int, pred_noise: np.ndarray,
                 sched: DiffusionSchedule,
                 rng: np.random.Generator | None = None) -> np.ndarray:
    """One ancestral denoising step with fixed variance beta_t (none at t=1)."""
    if not (1 <= t <= sched.T):
        raise ValueError(f"t={t} outside [1, {sched.T}]")
    beta = sched.beta[t - 1]
    alpha = sched.alpha[t - 1]
    ab = sched.alpha_bar[t - 1]
    mu = (x_t - (beta / np.sqrt(1.0 - ab)) * pred_noise) / np.sqrt(alpha)
    if t == 1:
        return mu
    rng = rng or np.random.default_rng()
    return mu + np.sqrt(beta) * rng.standard_normal(x_t.shape)


# ---------------------------------------------------------------- denoiser

def sinusoidal_embedding(t: np.ndarray, dim: int) -> np.ndarray:
    """Standard sin/cos position embedding of integer steps t, shape (B, dim)."""
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    half = dim // 2
    freqs = np.exp(-np.log(10000.0) * np.arange(half) / max(half - 1, 1))
    ang = t[:, None] * freqs[None, :]
    return np.concatenate([np.sin(ang), np.cos(ang)], axis=1)


PARAM_ORDER = ("w1", "b1", "w2", "b2", "w3", "b3", "cond_emb")


class Denoiser:
    """Two-hidden-layer tanh MLP noise predictor epsilon(x_t, t, c).

    Internally the network regresses the clean window x0_hat; the noise
    prediction is the exact conversion (x_t - sqrt(abar_t) x0_hat) /
    sqrt(1 - abar_t), which keeps the learnable part well-scaled across all
    noise levels. The public contract is still a noise predictor.
    """

    def __init__(self, window_len: int, n_joints: int, vocab: list[str],
                 hidden: tuple[int, int] = (128, 128), time_dim: int = 64,
                 cond_dim: int = 16, rng: np.random.Generator | None = None):
        self.window_len = window_len
        self.n_joints = n_joints
        self.vocab = list(vocab)
        self.hidden = tuple(hidden)
        self.time_dim = time_dim
        self.cond_dim = cond_dim
        # inference-time clean-window clip range (set from the training data);
        # keeps the reverse process bounded when the context is heavily noised
        self.x0_clip: tuple[float, float] | None = None
        d = window_len * n_joints * 3
        d_in = d + time_dim + cond_dim
        rng = rng or np.random.default_rng(0)
        h1, h2 = hidden
        self.params = {
            "w1": rng.standard_normal((d_in, h1)) / np.sqrt(d_in),
            "b1": np.zeros(h1),
            "w2": rng.standard_normal((h1, h2)) / np.sqrt(h1),
            "b2": np.zeros(h2),
            # zero output layer: the untrained model predicts zero noise
            "w3": np.zeros((h2, d)),
            "b3": np.zeros(d),
            "cond_emb": rng.standard_normal((len(vocab) + 1, cond_dim)) * 0.1,
        }

    @property
    def frame_dim(self) -> int:
        return self.window_len * self.n_joints * 3

    def cond_id(self, c: str | None) -> int:
        if c is None:
            return 0
        return 1 + self.vocab.index(c)

    def _inputs(self, x: np.ndarray, t: np.ndarray, cid: np.ndarray) -> np.ndarray:
        b = x.shape[0]
        flat = x.reshape(b, -1)
        emb_t = sinusoidal_embedding(t, self.time_dim)
        emb_c = self.params["cond_emb"][cid]
        return np.concatenate([flat, emb_t, emb_c], axis=1)

    def forward_batch(self, x: np.ndarray, t: np.ndarray, cid: np.ndarray,
                      sched: DiffusionSchedule,
                      cache: dict | None = None, clip: bool = False) -> np.ndarray:
        """x: (B, W, J, 3); t, cid: (B,). Returns noise predictions (B, W, J, 3)."""
        t = np.asarray(t)
        inp = self._inputs(x, t, cid)
        p = self.params
        h1 = np.tanh(inp @ p["w1"] + p["b1"])
        h2 = np.tanh(h1 @ p["w2"] + p["b2"])
        x0_hat = h2 @ p["w3"] + p["b3"]
        if clip and self.x0_clip is not None:
            x0_hat = np.clip(x0_hat, *self.x0_clip)
        ab = sched.alpha_bar[t - 1][:, None]
        gain = 1.0 / np.sqrt(1.0 - ab)
        flat = x.reshape(x.shape[0], -1)
        eps_hat = (flat - np.sqrt(ab) * x0_hat) * gain
        if cache is not None:
            cache.update(inp=inp, h1=h1, h2=h2, cid=np.asarray(cid),
                         dnet_factor=-np.sqrt(ab) * gain)
        return eps_hat.reshape(x.shape)

    def predict(self, x: np.ndarray, t: int, c: str | None,
                sched: DiffusionSchedule) -> np.ndarray:
        """Single-window convenience wrapper; x is (W, J, 3). Applies the
        inference-time clean-window clip when one is set."""
        out = self.forward_batch(x[None], np.array([t]),
                                 np.array([self.cond_id(c)]), sched, clip=True)
        return out[0]

    def backward_batch(self, cache: dict, dout: np.ndarray) -> dict[str, np.ndarray]:
        """Gradients of a scalar loss wrt all parameters given dL/dout."""
        p = self.params
        b = dout.shape[0]
        dout = dout.reshape(b, -1) * cache["dnet_factor"]
        inp, h1, h2, cid = cache["inp"], cache["h1"], cache["h2"], cache["cid"]
        grads = {
            "w3": h2.T @ dout,
            "b3": dout.sum(axis=0),
        }
        dh2 = (dout @ p["w3"].T) * (1.0 - h2 * h2)
        grads["w2"] = h1.T @ dh2
        grads["b2"] = dh2.sum(axis=0)
        dh1 = (dh2 @ p["w2"].T) * (1.0 - h1 * h1)
        grads["w1"] = inp.T @ dh1
        grads["b1"] = dh1.sum(axis=0)
        dinp = dh1 @ p["w1"].T
        dc = dinp[:, -self.cond_dim:]
        g_emb = np.zeros_like(p["cond_emb"])
        np.add.at(g_emb, cid, dc)
        grads["cond_emb"] = g_emb
        return grads

    def flat_params(self) -> np.ndarray:
        return np.concatenate([self.params[k].ravel() for k in PARAM_ORDER])

    def set_flat_params(self, vec: np.ndarray) -> None:
        i = 0
        for k in PARAM_ORDER:
            n = self.params[k].size
            self.params[k] = vec[i:i + n].reshape(self.params[k].shape).copy()
            i += n
        if i != vec.size:
            raise ValueError("parameter vector size mismatch")


def masked_mse_loss_and_grads(d: Denoiser, x_t: np.ndarray, t: np.ndarray,
                              cid: np.ndarray, eps: np.ndarray,
                              mask: np.ndarray, sched: DiffusionSchedule,
                              ) -> tuple[float, dict[str, np.ndarray]]:
    """MSE between predicted and true noise over masked frames only.

    mask is (B, W) boolean; the loss averages over all masked elements.
    """
    cache: dict = {}
    pred = d.forward_batch(x_t, t, cid, sched, cache=cache)
    m = mask[:, :, None, None].astype(np.float64)
    n = m.sum() * x_t.shape[2] * x_t.shape[3]
    diff = (pred - eps) * m
    loss = float((diff * diff).sum() / n)
    dout = 2.0 * diff / n
    return loss, d.backward_batch(cache, dout)


def cfg_predict(d: Denoiser, x_t: np.ndarray, t: int, c: str | None,
                s: float, sched: DiffusionSchedule) -> np.ndarray:
    """Classifier-free guidance: uncond + s * (cond - uncond).

    The s in {0, 1} and c = None cases return the underlying prediction
    directly so the algebraic identities hold to exact float equality.
    """
    if c is None or s == 0.0:
        return d.predict(x_t, t, None, sched)
    if s == 1.0:
        return d.predict(x_t, t, c, sched)
    e_u = d.predict(x_t, t, None, sched)
    e_c = d.predict(x_t, t, c, sched)
    return e_u + s * (e_c - e_u)


# ---------------------------------------------------------------- training

def train_stitcher(windows: np.ndarray, labels: list[str | None],
                   sched: DiffusionSchedule, epochs: int,
                   vocab: list[str],
                   cond_dropout: float = 0.10,
                   mask_fraction: float = 0.10,
                   rng: np.random.Generator | None = None,
                   batch_size: int = 32, lr: float = 1e-3,
                   hidden: tuple[int, int] = (128, 128),
                   ) -> tuple[Denoiser, list[float]]:
    """Train the noise predictor; returns the model and per-epoch mean loss.

    Each step masks a middle block, noises only those frames, drops the
    condition with probability cond_dropout, and regresses the noise on the
    masked frames with Adam.
    """
    windows = np.asarray(windows, dtype=np.float64)
    if windows.ndim != 4 or windows.shape[0] == 0:
        raise ValueError("windows must be a nonempty (N, W, J, 3) array")
    n, w, j, _ = windows.shape
    if len(labels) != n:
        raise ValueError("labels length must match windows")
    rng = rng or np.random.default_rng(0)
    d = Denoiser(w, j, vocab, hidden=hidden, rng=rng)
    lo, hi = float(windows.min()), float(windows.max())
    margin = 0.1 * (hi - lo) + 0.1
    d.x0_clip = (lo - margin, hi + margin)

    m_state = {k: np.zeros_like(v) for k, v in d.params.items()}
    v_state = {k: np.zeros_like(v) for k, v in d.params.items()}
    b1m, b2m, eps_adam = 0.9, 0.999, 1e-8
    step = 0

    cond_ids = np.array([d.cond_id(c) for c in labels])
    history: list[float] = []
    for _epoch in range(epochs):
        order = rng.permutation(n)
        losses = []
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            x0 = windows[idx]
            b = len(idx)
            t = rng.integers(1, sched.T + 1, size=b)
            mask = np.stack([mask_middle(w, mask_fraction, rng) for _ in range(b)])
            eps = rng.standard_normal(x0.shape)
            ab = sched.alpha_bar[t - 1][:, None, None, None]
            noised = np.sqrt(ab) * x0 + np.sqrt(1.0 - ab) * eps
            m4 = mask[:, :, None, None]
            x_t = np.where(m4, noised, x0)
            cid = cond_ids[idx].copy()
            drop = rng.random(b) < cond_dropout
            cid[drop] = 0
            loss, grads = masked_mse_loss_and_grads(d, x_t, t, cid, eps, mask, sched)
            losses.append(loss)
            step += 1
            for k, g in grads.items():
                m_state[k] = b1m * m_state[k] + (1 - b1m) * g
                v_state[k] = b2m * v_state[k] + (1 - b2m) * g * g
                mhat = m_state[k] / (1 - b1m ** step)
                vhat = v_state[k] / (1 - b2m ** step)
                d.params[k] -= lr * mhat / (np.sqrt(vhat) + eps_adam)
        history.append(float(np.mean(losses)))
    return d, history


# ---------------------------------------------------------------- inference

@dataclass(frozen=True)
class StitchJob:
    prev_tail: np.ndarray    # (K_a, J, 3)
    next_head: np.ndarray    # (K_b, J, 3)
    condition: str | None = None
    transition_len: int = 5
    guidance_scale: float = 2.5

    def __post_init__(self):
        for name in ("prev_tail", "next_head"):
            a = np.asarray(getattr(self, name), dtype=np.float64)
            if a.ndim != 3 or a.shape[0] < 1 or a.shape[2] != 3:
                raise ValueError(f"{name} must be (K, J, 3) with K >= 1")
            object.__setattr__(self, name, a)
        if self.transition_len < 1:
            raise ValueError("transition_len must be >= 1")


def stitch(job: StitchJob, d: Denoiser, sched: DiffusionSchedule,
           rng: np.random.Generator | None = None,
           hook=None) -> tuple[np.ndarray, np.ndarray]:
    """Inpaint a transition between the two segments.

    Returns (transition frames, assembled prev ++ transition ++ next). The
    known segments are clamped to their re-noised values at every step, so
    the assembled output keeps the inputs bit-identical. hook, if given, is
    called as hook(level, window, clamp_noise) after each clamp.
    """
    ka = job.prev_tail.shape[0]
    kb = job.next_head.shape[0]
    w = ka + job.transition_len + kb
    if w != d.window_len:
        raise ValueError(f"window length {w} does not match denoiser ({d.window_len})")
    if job.prev_tail.shape[1] != d.n_joints or job.next_head.shape[1] != d.n_joints:
        raise ValueError("joint count does not match denoiser")
    rng = rng or np.random.default_rng()

    root = 0  # windows are localized to their first frame's root row
    offset = job.prev_tail[0, root].copy()
    known = np.concatenate([
        job.prev_tail - offset,
        np.zeros((job.transition_len, d.n_joints, 3)),
        job.next_head - offset,
    ])
    mask = np.zeros(w, dtype=bool)
    mask[ka:ka + job.transition_len] = True

    x = np.array(known)
    x[mask] = rng.standard_normal((job.transition_len, d.n_joints, 3))
    x[~mask] = forward_sample(known[~mask], sched.T, rng.standard_normal(known[~mask].shape), sched)

    for t in range(sched.T, 0, -1):
        pred = cfg_predict(d, x, t, job.condition, job.guidance_scale, sched)
        x = reverse_step(x, t, pred, sched, rng)
        if t - 1 >= 1:
            clamp_noise = rng.standard_normal(known[~mask].shape)
            x[~mask] = forward_sample(known[~mask], t - 1, clamp_noise, sched)
        else:
            clamp_noise = None
            x[~mask] = known[~mask]
        if hook is not None:
            hook(t - 1, x.copy(), clamp_noise)

    transition = x[ka:ka + job.transition_len] + offset
    assembled = np.concatenate([job.prev_tail, transition, job.next_head])
    return transition, assembled


# ---------------------------------------------------------------- checkpoint

_MAGIC = b"MSTITCH1"


def save_checkpoint(path: str, d: Denoiser, sched: DiffusionSchedule) -> None:
    """Binary container: magic, u32 header length, JSON header, then the flat
    parameter vector as little-endian float64 in PARAM_ORDER."""
    header = {
        "version": 1,
        "T": sched.T,
        "beta_start": float(sched.beta[0]),
        "beta_end": float(sched.beta[-1]),
        "window_len": d.window_len,
        "n_joints": d.n_joints,
        "hidden": list(d.hidden),
        "time_dim": d.time_dim,
        "cond_dim": d.cond_dim,
        "vocab": d.vocab,
        "x0_clip": list(d.x0_clip) if d.x0_clip is not None else None,
        "n_params": int(d.flat_params().size),
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)
        f.write(d.flat_params().astype("<f8").tobytes())


def load_checkpoint(path: str) -> tuple[Denoiser, DiffusionSchedule]:
    with open(path, "rb") as f:
        magic = f.read(len(_MAGIC))
        if magic != _MAGIC:
            raise ValueError(f"{path}: not a stitcher checkpoint")
        (hlen,) = struct.unpack("<I", f.read(4))
        header = json.loads(f.read(hlen).decode("utf-8"))
        raw = f.read()
    if header.get("version") != 1:
        raise ValueError(f"unsupported checkpoint version {header.get('version')}")
    params = np.frombuffer(raw, dtype="<f8").astype(np.float64)
    if params.size != header["n_params"]:
        raise ValueError("checkpoint parameter count mismatch")
    d = Denoiser(header["window_len"], header["n_joints"], header["vocab"],
                 hidden=tuple(header["hidden"]), time_dim=header["time_dim"],
                 cond_dim=header["cond_dim"])
    d.set_flat_params(params)
    if header.get("x0_clip") is not None:
        d.x0_clip = tuple(header["x0_clip"])
    sched = make_schedule(header["T"], header["beta_start"], header["beta_end"])
    return d, sched
