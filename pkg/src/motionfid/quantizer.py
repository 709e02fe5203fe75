"""Codebook lookup and the composite VQ-VAE loss, evaluated forward only.

Stop-gradient has no effect on values, so the codebook and commitment
terms both reduce to ``||z_e - e||^2``; the loss is therefore
``||m_raw - m_recon||^2 + (1 + beta) * ||z_e - e||^2``. Nothing here trains.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ParseError, ValidationError


@dataclass(frozen=True)
class Codebook:
    """``K x d`` array of code vectors; code indices are 1-based."""

    entries: np.ndarray

    def __post_init__(self):
        e = np.array(self.entries, dtype=np.float64)
        if e.ndim != 2 or e.shape[0] < 1 or e.shape[1] < 1:
            raise ValidationError(f"codebook must be a non-empty K x d array, got shape {e.shape}")
        if not np.isfinite(e).all():
            raise ValidationError("codebook entries must be finite")
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    @property
    def dim(self) -> int:
        return self.entries.shape[1]

    def entry(self, index: int) -> np.ndarray:
        if not 1 <= index <= self.size:
            raise ValidationError(f"code index {index} outside 1..{self.size}")
        return self.entries[index - 1]


def quantize(Z, cb: Codebook) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Nearest codes for each row of ``Z`` (N x d): 1-based indices, code vectors, squared distances."""
    Z = np.asarray(Z, dtype=np.float64)
    if Z.ndim != 2 or Z.shape[1] != cb.dim:
        raise ValidationError(f"latents of shape {Z.shape} do not match codebook dimension {cb.dim}")
    if not np.isfinite(Z).all():
        raise ValidationError("latents must be finite")
    idx, d2 = _kernels.nearest_codes(Z, cb.entries)
    return idx + 1, cb.entries[idx], d2


def nearest_code(z_e, cb: Codebook) -> tuple[int, np.ndarray]:
    """1-based index and vector of the closest code (lowest index wins ties)."""
    z = np.asarray(z_e, dtype=np.float64)
    if z.ndim != 1:
        raise ValidationError(f"latent must be a vector, got shape {z.shape}")
    idx, zq, _ = quantize(z[None], cb)
    return int(idx[0]), zq[0].copy()


def _sqnorm(x, y, what: str) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValidationError(f"{what}: shape mismatch {x.shape} vs {y.shape}")
    d = x - y
    return float((d * d).sum())


def vq_loss(m_raw, m_recon, z_e, e, beta: float = 0.25) -> float:
    """Reconstruction error plus ``(1 + beta)`` times the latent quantization error."""
    if not beta >= 0:
        raise ValidationError(f"beta must be >= 0, got {beta}")
    return _sqnorm(m_raw, m_recon, "reconstruction") + (1.0 + beta) * _sqnorm(z_e, e, "latent")


def load_codebook_csv(data) -> Codebook:
    """One code vector per row, comma separated; blank and ``#`` lines are skipped."""
    if isinstance(data, (bytes, bytearray)):
        data = data.decode("utf-8")
    rows = []
    for n, line in enumerate(data.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            rows.append([float(v) for v in line.split(",")])
        except ValueError:
            raise ParseError(f"codebook line {n}: non-numeric value") from None
        if len(rows[-1]) != len(rows[0]):
            raise ParseError(f"codebook line {n}: expected {len(rows[0])} values, got {len(rows[-1])}")
    if not rows:
        raise ParseError("codebook file has no entries")
    return Codebook(np.array(rows))
