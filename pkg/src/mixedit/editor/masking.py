"""Oracle editing and ideal time-frequency editing masks.

The waveform oracle realizes an edit exactly from the true sources. The
ideal masks are its single-gain-field analogue: one non-negative mask
multiplied onto the mixture spectrogram extracts, removes, amplifies,
and reduces every source at once, as far as their supports allow.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from enum import Enum

import numpy as np

from ..core import (
    AudioDescriptor,
    GroupDescriptor,
    SimplifiedInstruction,
    SpeechDescriptor,
)
from ..dsp import Clip, DEFAULT_HOP, DEFAULT_WINDOW, Spectrogram, istft, mel_project, stft
from ..errors import MixeditError
from ..mixer import target_mixture

MASK_EPS = 1e-8
DEFAULT_MASK_MAX = 4.0
DEFAULT_EMBED_DIM = 32
DEFAULT_HASH_SEED = 0


class DimMismatch(MixeditError):
    pass


class MaskKind(Enum):
    IRM = "irm"  # magnitude ratio
    PSM = "psm"  # phase-sensitive projection


@dataclass(frozen=True, eq=False)
class EditingMask:
    """Non-negative gain field: (bins, frames) in the STFT domain or
    (channels, latent frames) for the mask network."""

    values: np.ndarray
    m_max: float = DEFAULT_MASK_MAX

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if not np.all(np.isfinite(vals)):
            raise ValueError("mask contains non-finite entries")
        if vals.size and (vals.min() < 0.0 or vals.max() > self.m_max):
            raise ValueError(f"mask entries must lie in [0, {self.m_max}]")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def shape(self):
        return self.values.shape


def oracle_edit(scaled_sources, actions) -> Clip:
    """Ground-truth editor: the action-weighted sum of the true sources.

    Identical to the target-mixture synthesis; it exists as the editor
    interface implementation that calibrates masks and metrics.
    """
    return target_mixture(scaled_sources, actions)


def ideal_mask(mixture: Clip, target: Clip, kind: MaskKind = MaskKind.PSM,
               m_max: float = DEFAULT_MASK_MAX, window: int = DEFAULT_WINDOW,
               hop: int = DEFAULT_HOP) -> EditingMask:
    """Oracle editing mask computed from the mixture and its target.

    IRM: |Y| / max(|X|, eps). PSM: Re(Y * conj(X)) / max(|X|^2, eps),
    which accounts for phase. Both are clamped to [0, m_max].
    """
    if len(mixture) != len(target) or mixture.rate != target.rate:
        raise DimMismatch("mixture and target must be aligned")
    x = stft(mixture, window, hop).frames
    y = stft(target, window, hop).frames
    if kind is MaskKind.IRM:
        raw = np.abs(y) / np.maximum(np.abs(x), MASK_EPS)
    else:
        raw = (y * np.conj(x)).real / np.maximum(np.abs(x) ** 2, MASK_EPS)
    return EditingMask(np.clip(raw, 0.0, m_max), m_max)


def mask_edit(mixture: Clip, mask: EditingMask, window: int = DEFAULT_WINDOW,
              hop: int = DEFAULT_HOP) -> Clip:
    """Apply an editing mask to the mixture spectrogram and resynthesize."""
    spec = stft(mixture, window, hop)
    if mask.values.shape != spec.frames.shape:
        raise DimMismatch(
            f"mask shape {mask.values.shape} does not match "
            f"spectrogram {spec.frames.shape}"
        )
    edited = Spectrogram(mask.values * spec.frames, window, hop,
                         spec.rate, spec.n_samples)
    return istft(edited)


def _edit_tokens(action, desc):
    if isinstance(desc, SpeechDescriptor):
        parts = [f"{field}={value}" for field, value in desc.attrs]
    elif isinstance(desc, AudioDescriptor):
        parts = [f"label={desc.label}"]
    elif isinstance(desc, GroupDescriptor):
        parts = [f"scope={desc.scope.value}"]
    else:
        raise TypeError(f"unknown descriptor {desc!r}")
    if len(parts) > 1:  # whole-edit token ties the attributes together
        parts = parts + ["+".join(parts)]
    return parts


_HASH_SPREAD = 4  # buckets per token; tokens collide only if all four agree


def embed_instruction(simplified: SimplifiedInstruction,
                      dim: int = DEFAULT_EMBED_DIM,
                      hash_seed: int = DEFAULT_HASH_SEED) -> np.ndarray:
    """Deterministic semantic-filter vector for a simplified instruction.

    Signed sparse feature hashing: every (action, attribute) token lights
    up four signed buckets of R^dim, and the sum is unit-normalized.
    Identical instructions map to identical vectors regardless of edit
    order.
    """
    if dim < 1:
        raise ValueError("embedding dimension must be positive")
    v = np.zeros(dim)
    salt = hash_seed.to_bytes(8, "little", signed=True)
    for action, desc in simplified.edits:
        for token in _edit_tokens(action, desc):
            for r in range(_HASH_SPREAD):
                digest = hashlib.blake2b(
                    f"{r}|{action.value}|{token}".encode("utf-8"),
                    digest_size=9, salt=salt,
                ).digest()
                idx = int.from_bytes(digest[:8], "little") % dim
                sign = 1.0 if digest[8] & 1 else -1.0
                v[idx] += sign
    norm = np.linalg.norm(v)
    if norm == 0.0:  # total cancellation: fall back to a fixed direction
        v[0] = 1.0
        norm = 1.0
    return v / norm


def _as_grid(mask: EditingMask, rate: int | None, n_mels: int | None) -> np.ndarray:
    values = mask.values
    if values.ndim == 3:  # mask stacks export as their combined gain
        values = values.sum(axis=0)
    if n_mels is None:
        return values
    if rate is None:
        raise ValueError("Mel projection needs the sample rate")
    return mel_project(values, rate, n_mels)


def export_mask_csv(mask: EditingMask, path, rate: int | None = None,
                    n_mels: int | None = None):
    """Numeric mask grid as CSV; optionally Mel-projected for inspection."""
    grid = _as_grid(mask, rate, n_mels)
    np.savetxt(path, grid, delimiter=",", fmt="%.6g")


def export_mask_pgm(mask: EditingMask, path, rate: int | None = None,
                    n_mels: int | None = None):
    """8-bit grayscale PGM of the mask, dark-to-light over [0, m_max].

    Rows are flipped so low frequencies sit at the bottom of the image.
    """
    grid = _as_grid(mask, rate, n_mels)
    scale = mask.m_max if n_mels is None else max(grid.max(), 1e-12)
    pixels = np.clip(grid / scale, 0.0, 1.0)
    pixels = np.flipud(np.round(pixels * 255).astype(np.uint8))
    header = f"P5\n{pixels.shape[1]} {pixels.shape[0]}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(pixels.tobytes())
