"""FiLM-conditioned latent editing-mask network with analytic gradients.

A linear filterbank encoder (kernel K, stride K/2) lifts the waveform
into a C-channel latent sequence. R dilated 1-D conv blocks refine an
editing mask; before every block the features are modulated feature-wise
as gamma * h + beta, where gamma and beta come from two-layer perceptrons
applied to the conditioning vector z and are broadcast along time. The
mask (ReLU output clamped to [0, m_max]) multiplies the encoded mixture,
and a linear overlap-add decoder returns to the waveform.

Written in plain numpy with handwritten reverse-mode gradients so the
whole pipeline runs without any ML framework and finite differences stay
an independent check. Subgradients at the ReLU kinks and at the mask and
SNR clamps are taken as zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..dsp import Clip
from ..errors import MixeditError
from ..metrics import EPS, pit_snr
from .masking import DEFAULT_MASK_MAX, EditingMask

_LN10 = math.log(10.0)


class ShapeMismatch(MixeditError):
    pass


class Diverged(MixeditError):
    pass


@dataclass(frozen=True)
class MaskNetConfig:
    channels: int = 64        # latent width C
    kernel: int = 16          # encoder/decoder kernel; stride is kernel // 2
    blocks: int = 4           # editing blocks, dilation 2**i
    embed_dim: int = 32       # conditioning vector size D
    hidden: int | None = None  # FiLM perceptron hidden width, default C
    mask_max: float = DEFAULT_MASK_MAX
    n_masks: int = 1          # >1 adds a per-source mask stack

    def __post_init__(self):
        if self.kernel % 2 != 0:
            raise ValueError("kernel must be even so the stride is kernel/2")

    @property
    def stride(self) -> int:
        return self.kernel // 2

    @property
    def film_hidden(self) -> int:
        return self.hidden if self.hidden is not None else self.channels


def latent_frames(n_samples: int, kernel: int) -> int:
    """Latent sequence length for a waveform of n_samples."""
    if n_samples < kernel:
        raise ShapeMismatch(f"need at least {kernel} samples")
    return (n_samples - kernel) // (kernel // 2) + 1


class FilmMaskNet:
    """Parameter container plus forward/backward passes."""

    def __init__(self, config: MaskNetConfig, params: dict[str, np.ndarray]):
        self.config = config
        self.params = params

    @classmethod
    def init(cls, config: MaskNetConfig, seed: int = 0) -> "FilmMaskNet":
        """Deterministic initialization; gamma starts at 1 and beta at 0 so
        the first step is an unmodulated pass, and the mask head biases
        toward unity gain."""
        rng = np.random.default_rng(seed)
        c, k, h, d = (config.channels, config.kernel, config.film_hidden,
                      config.embed_dim)
        p: dict[str, np.ndarray] = {}
        p["enc.w"] = rng.standard_normal((c, k)) / math.sqrt(k)
        p["dec.w"] = rng.standard_normal((c, k)) / math.sqrt(c * k)
        for i in range(config.blocks):
            p[f"block{i}.conv.w"] = (
                rng.standard_normal((c, c, 3)) * math.sqrt(2.0 / (3 * c))
            )
            p[f"block{i}.conv.b"] = np.zeros(c)
            p[f"block{i}.film.f1.w"] = rng.standard_normal((h, d)) / math.sqrt(d)
            p[f"block{i}.film.f1.b"] = np.zeros(h)
            p[f"block{i}.film.f2.w"] = (
                rng.standard_normal((c, h)) * 0.1 / math.sqrt(h)
            )
            p[f"block{i}.film.f2.b"] = np.ones(c)
            p[f"block{i}.film.g1.w"] = rng.standard_normal((h, d)) / math.sqrt(d)
            p[f"block{i}.film.g1.b"] = np.zeros(h)
            p[f"block{i}.film.g2.w"] = (
                rng.standard_normal((c, h)) * 0.1 / math.sqrt(h)
            )
            p[f"block{i}.film.g2.b"] = np.zeros(c)
        p["head.w"] = rng.standard_normal((config.n_masks * c, c)) * math.sqrt(1.0 / c)
        p["head.b"] = np.ones(config.n_masks * c)
        return cls(config, p)

    def clone(self) -> "FilmMaskNet":
        return FilmMaskNet(self.config, {k: v.copy() for k, v in self.params.items()})

    # ---------------- forward ----------------

    def _film(self, i: int, z: np.ndarray):
        p = self.params
        a_f = np.tanh(p[f"block{i}.film.f1.w"] @ z + p[f"block{i}.film.f1.b"])
        gamma = p[f"block{i}.film.f2.w"] @ a_f + p[f"block{i}.film.f2.b"]
        a_g = np.tanh(p[f"block{i}.film.g1.w"] @ z + p[f"block{i}.film.g1.b"])
        beta = p[f"block{i}.film.g2.w"] @ a_g + p[f"block{i}.film.g2.b"]
        return a_f, gamma, a_g, beta

    @staticmethod
    def _shift(m: np.ndarray, off: int) -> np.ndarray:
        """Columns shifted so out[:, l] = m[:, l + off], zero-filled."""
        if off == 0:
            return m
        out = np.zeros_like(m)
        if off > 0:
            out[:, :-off] = m[:, off:]
        else:
            out[:, -off:] = m[:, :off]
        return out

    def forward(self, x: np.ndarray, z: np.ndarray) -> dict:
        """Run the net; returns a cache consumed by ``backward``."""
        cfg = self.config
        p = self.params
        x = np.asarray(x, dtype=np.float64)
        z = np.asarray(z, dtype=np.float64)
        if x.ndim != 1:
            raise ShapeMismatch("expected a mono waveform")
        if z.shape != (cfg.embed_dim,):
            raise ShapeMismatch(
                f"conditioning vector must have size {cfg.embed_dim}"
            )
        k, s = cfg.kernel, cfg.stride
        n = len(x)
        n_frames = latent_frames(n, k)
        frames = np.lib.stride_tricks.sliding_window_view(x, k)[::s]
        h_x = p["enc.w"] @ frames.T  # (C, L)

        cache = {"x": x, "z": z, "frames": frames, "h_x": h_x, "blocks": [],
                 "n": n, "L": n_frames}
        h = h_x
        for i in range(cfg.blocks):
            a_f, gamma, a_g, beta = self._film(i, z)
            h_tilde = gamma[:, None] * h + beta[:, None]
            d = 2 ** i
            pre = p[f"block{i}.conv.b"][:, None] + sum(
                p[f"block{i}.conv.w"][:, :, j] @ self._shift(h_tilde, (j - 1) * d)
                for j in range(3)
            )
            h_out = np.maximum(pre, 0.0)
            cache["blocks"].append({
                "h_in": h, "a_f": a_f, "gamma": gamma, "a_g": a_g,
                "beta": beta, "h_tilde": h_tilde, "pre": pre, "h_out": h_out,
                "dilation": d,
            })
            h = h_out

        m_pre = (p["head.w"] @ h + p["head.b"][:, None]).reshape(
            cfg.n_masks, cfg.channels, n_frames
        )
        masks = np.clip(m_pre, 0.0, cfg.mask_max)
        prods = masks * h_x[None, :, :]
        y_full_len = (n_frames - 1) * s + k
        per_source = np.zeros((cfg.n_masks, n))
        contribs = []
        for m in range(cfg.n_masks):
            contrib = p["dec.w"].T @ prods[m]  # (K, L)
            y_full = np.zeros(y_full_len)
            for kk in range(k):
                y_full[kk:kk + (n_frames - 1) * s + 1:s] += contrib[kk]
            per_source[m, :min(n, y_full_len)] = y_full[:n]
            contribs.append(contrib)
        cache.update({
            "h_last": h, "m_pre": m_pre, "masks": masks, "prods": prods,
            "per_source": per_source, "y": per_source.sum(axis=0),
            "y_full_len": y_full_len,
        })
        return cache

    def edit(self, clip: Clip, z: np.ndarray) -> tuple[Clip, EditingMask]:
        """Edit a clip under conditioning z; returns the output and the
        combined latent editing mask."""
        cache = self.forward(clip.samples, z)
        mask = cache["masks"].sum(axis=0) if self.config.n_masks > 1 \
            else cache["masks"][0]
        max_gain = self.config.mask_max * max(self.config.n_masks, 1)
        return (Clip(cache["y"], clip.rate),
                EditingMask(np.clip(mask, 0.0, max_gain), max_gain))

    def separate(self, clip: Clip, z: np.ndarray) -> list[Clip]:
        """Per-mask outputs (multi-mask nets); their sum is the edit."""
        cache = self.forward(clip.samples, z)
        return [Clip(cache["per_source"][m], clip.rate)
                for m in range(self.config.n_masks)]

    # ---------------- backward ----------------

    def backward(self, cache: dict, grad_sources: np.ndarray) -> dict:
        """Gradients of a scalar loss given d(loss)/d(per-source output).

        grad_sources has shape (n_masks, T). Returns a dict keyed like
        ``params`` plus "z".
        """
        cfg = self.config
        p = self.params
        k, s = cfg.kernel, cfg.stride
        n_frames = cache["L"]
        grads = {key: np.zeros_like(val) for key, val in p.items()}
        grad_z = np.zeros(cfg.embed_dim)

        grad_masks = np.zeros_like(cache["masks"])
        grad_hx = np.zeros_like(cache["h_x"])
        for m in range(cfg.n_masks):
            g_full = np.zeros(cache["y_full_len"])
            g_full[:cache["n"]] = grad_sources[m][:cache["y_full_len"]]
            grad_contrib = np.empty((k, n_frames))
            for kk in range(k):
                grad_contrib[kk] = g_full[kk:kk + (n_frames - 1) * s + 1:s]
            grads["dec.w"] += cache["prods"][m] @ grad_contrib.T
            grad_prod = p["dec.w"] @ grad_contrib
            grad_masks[m] = grad_prod * cache["h_x"]
            grad_hx += grad_prod * cache["masks"][m]

        on = (cache["m_pre"] > 0.0) & (cache["m_pre"] < cfg.mask_max)
        grad_mpre = (grad_masks * on).reshape(cfg.n_masks * cfg.channels,
                                              n_frames)
        grads["head.w"] += grad_mpre @ cache["h_last"].T
        grads["head.b"] += grad_mpre.sum(axis=1)
        grad_h = p["head.w"].T @ grad_mpre

        for i in reversed(range(cfg.blocks)):
            blk = cache["blocks"][i]
            d = blk["dilation"]
            grad_pre = grad_h * (blk["pre"] > 0.0)
            grads[f"block{i}.conv.b"] += grad_pre.sum(axis=1)
            grad_htilde = np.zeros_like(blk["h_tilde"])
            for j in range(3):
                off = (j - 1) * d
                grads[f"block{i}.conv.w"][:, :, j] += (
                    grad_pre @ self._shift(blk["h_tilde"], off).T
                )
                grad_htilde += (
                    p[f"block{i}.conv.w"][:, :, j].T @ self._shift(grad_pre, -off)
                )
            grad_gamma = (grad_htilde * blk["h_in"]).sum(axis=1)
            grad_beta = grad_htilde.sum(axis=1)
            grad_h = grad_htilde * blk["gamma"][:, None]

            grads[f"block{i}.film.f2.w"] += np.outer(grad_gamma, blk["a_f"])
            grads[f"block{i}.film.f2.b"] += grad_gamma
            g_af = p[f"block{i}.film.f2.w"].T @ grad_gamma
            g_pre_f = g_af * (1.0 - blk["a_f"] ** 2)
            grads[f"block{i}.film.f1.w"] += np.outer(g_pre_f, cache["z"])
            grads[f"block{i}.film.f1.b"] += g_pre_f
            grad_z += p[f"block{i}.film.f1.w"].T @ g_pre_f

            grads[f"block{i}.film.g2.w"] += np.outer(grad_beta, blk["a_g"])
            grads[f"block{i}.film.g2.b"] += grad_beta
            g_ag = p[f"block{i}.film.g2.w"].T @ grad_beta
            g_pre_g = g_ag * (1.0 - blk["a_g"] ** 2)
            grads[f"block{i}.film.g1.w"] += np.outer(g_pre_g, cache["z"])
            grads[f"block{i}.film.g1.b"] += g_pre_g
            grad_z += p[f"block{i}.film.g1.w"].T @ g_pre_g

        grad_hx += grad_h  # the first block reads the encoded mixture
        grads["enc.w"] += grad_hx @ cache["frames"]
        grads["z"] = grad_z
        return grads


def _snr_and_grad(est: np.ndarray, ref: np.ndarray):
    """SNR in dB and d(SNR)/d(est); zero gradient in the clamped regime."""
    err = ref - est
    err_e = float(np.sum(err * err))
    ref_e = float(np.sum(ref * ref))
    if ref_e == 0.0:
        raise ValueError("reference is all zero")
    if err_e < EPS * ref_e:
        return 300.0, np.zeros_like(est)
    value = 10.0 * math.log10(ref_e / err_e)
    return value, 20.0 * err / (_LN10 * err_e)


@dataclass(frozen=True)
class TrainExample:
    """One training tuple; refs are the per-source targets for the
    multi-mask objective."""

    x: np.ndarray
    z: np.ndarray
    y: np.ndarray
    refs: tuple[np.ndarray, ...] | None = None


def snr_loss_and_grad(net: FilmMaskNet, x, z, y,
                      refs=None, use_pit: bool = False):
    """Loss = -SNR(edit, target); with ``use_pit`` and per-source refs the
    permutation-invariant per-source term is added. Returns
    (loss, grads dict including "z")."""
    cache = net.forward(np.asarray(x, dtype=np.float64),
                        np.asarray(z, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    if y.shape != cache["y"].shape:
        raise ShapeMismatch("target length must match the input")
    n_masks = net.config.n_masks
    mix_snr, mix_grad = _snr_and_grad(cache["y"], y)
    loss = -mix_snr
    grad_sources = np.tile(-mix_grad, (n_masks, 1))
    if use_pit:
        if refs is None or len(refs) != n_masks:
            raise ShapeMismatch("PIT needs one reference per mask")
        refs = [np.asarray(r, dtype=np.float64) for r in refs]
        ests = [cache["per_source"][m] for m in range(n_masks)]
        perm, _ = pit_snr(ests, refs)
        total = 0.0
        for i, ref in enumerate(refs):
            value, g = _snr_and_grad(ests[perm[i]], ref)
            total += value
            grad_sources[perm[i]] -= g / n_masks
        loss -= total / n_masks
    grads = net.backward(cache, grad_sources)
    return loss, grads


@dataclass
class TrainResult:
    net: FilmMaskNet
    losses: list[float] = field(default_factory=list)


def train_toy(net: FilmMaskNet, examples, steps: int = 200, lr: float = 1e-3,
              lr_decay: float = 1.0, use_pit: bool = False) -> TrainResult:
    """Plain full-batch gradient descent on the editing objective.

    The dB-scale loss has gradient norm growing as the error shrinks, so
    a constant step size settles into a limit cycle well short of a tight
    fit; pass ``lr_decay`` < 1 (per-step exponential) to converge further.

    The input net is left untouched; a trained copy is returned along
    with the loss curve. Raises Diverged when the loss stops being
    finite.
    """
    trained = net.clone()
    losses: list[float] = []
    step_lr = lr
    for step in range(steps):
        total = 0.0
        acc: dict[str, np.ndarray] | None = None
        for ex in examples:
            loss, grads = snr_loss_and_grad(
                trained, ex.x, ex.z, ex.y,
                refs=ex.refs, use_pit=use_pit and ex.refs is not None,
            )
            total += loss
            if acc is None:
                acc = {k: v for k, v in grads.items() if k != "z"}
            else:
                for key in acc:
                    acc[key] += grads[key]
        mean_loss = total / len(examples)
        if not math.isfinite(mean_loss):
            raise Diverged(f"loss became non-finite at step {step}")
        losses.append(mean_loss)
        for key, g in acc.items():
            trained.params[key] -= step_lr * g / len(examples)
        step_lr *= lr_decay
    return TrainResult(trained, losses)
