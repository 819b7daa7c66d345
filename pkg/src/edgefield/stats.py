"""Distributional diagnostics: 256-bin histograms, add-one-smoothed KL
divergence, the Shapiro-Wilk W statistic (AS R94 weights), and the
epsilon sweep producing the (E, S) table."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from statistics import NormalDist

import numpy as np

from .codec import compress, reconstruct
from .grid import PixelGrid
from .segmentation import SegmentationParams, _smoothed


class EmptyHistogram(ValueError):
    """Histogram holds no observations."""


class TooSmall(ValueError):
    """Shapiro-Wilk needs at least 3 values."""


class ZeroVariance(ValueError):
    """Shapiro-Wilk is undefined for a constant sample."""


SW_MAX_N = 5000
_SUBSAMPLE_SEED = 94  # fixed stream for the stride offset; not user-facing

# Royston's polynomial corrections for the two outermost weights
_C1 = (0.221157, -0.147981, -2.071190, 4.434685, -2.706056)
_C2 = (0.042981, -0.293762, -1.752461, 5.682633, -3.582633)


@dataclass(frozen=True)
class SwReport:
    w: float
    n_used: int
    subsampled: bool


@dataclass(frozen=True)
class SweepRow:
    epsilon: int
    kl: float  # E column: KL(original || smoothed reconstruction)
    sw: float  # S column: Shapiro-Wilk W of the smoothed reconstruction


def histogram(grid: PixelGrid) -> np.ndarray:
    """Intensity counts over the 256 bins."""
    return np.bincount(grid.values.ravel(), minlength=256)


def kl_divergence(p_counts: np.ndarray, q_counts: np.ndarray) -> float:
    """KL(p || q) in nats after add-one smoothing of both 256-bin histograms."""
    p = np.asarray(p_counts, dtype=np.float64)
    q = np.asarray(q_counts, dtype=np.float64)
    if p.shape != (256,) or q.shape != (256,):
        raise ValueError(f"histograms must have 256 bins, got {p.shape} and {q.shape}")
    n_p, n_q = p.sum(), q.sum()
    if n_p <= 0 or n_q <= 0:
        raise EmptyHistogram("histogram holds no observations")
    p_hat = (p + 1.0) / (n_p + 256.0)
    q_hat = (q + 1.0) / (n_q + 256.0)
    return float(np.sum(p_hat * np.log(p_hat / q_hat)))


def _stride_subsample(x: np.ndarray, target: int) -> np.ndarray:
    """Evenly strided pick of `target` values with a seeded start offset."""
    step = x.size / target
    offset = float(np.random.default_rng(_SUBSAMPLE_SEED).random()) * step
    idx = np.minimum((offset + step * np.arange(target)).astype(np.int64), x.size - 1)
    return x[idx]


def _poly(u: float, coeffs: tuple) -> float:
    # c[0]*u + c[1]*u^2 + ... (no constant term)
    acc = 0.0
    for c in reversed(coeffs):
        acc = (acc + c) * u
    return acc


def shapiro_wilk(sample) -> SwReport:
    """W statistic with Royston's AS R94 weights.

    Normal scores use Phi^-1((i - 0.375) / (n + 0.25)); the two outermost
    weights get the published fifth-order polynomial corrections. Samples
    larger than 5000 are stride-subsampled first (flagged in the report).
    No p-value: the statistic is consumed directly.
    """
    x = np.asarray(sample, dtype=np.float64).ravel()
    n = x.size
    if n < 3:
        raise TooSmall(f"need at least 3 values, got {n}")
    subsampled = n > SW_MAX_N
    if subsampled:
        x = _stride_subsample(x, SW_MAX_N)
        n = SW_MAX_N
    x = np.sort(x)
    if x[0] == x[-1]:
        raise ZeroVariance("sample is constant")

    inv = NormalDist().inv_cdf
    m = np.array([inv((i - 0.375) / (n + 0.25)) for i in range(1, n + 1)])
    mm = float(m @ m)
    a = np.empty(n)
    if n == 3:
        a[0], a[1], a[2] = -math.sqrt(0.5), 0.0, math.sqrt(0.5)
    else:
        u = 1.0 / math.sqrt(n)
        c = m / math.sqrt(mm)
        a_n = c[-1] + _poly(u, _C1)
        if n > 5:
            a_n1 = c[-2] + _poly(u, _C2)
            phi = (mm - 2.0 * m[-1] ** 2 - 2.0 * m[-2] ** 2) / (
                1.0 - 2.0 * a_n**2 - 2.0 * a_n1**2
            )
            a[2 : n - 2] = m[2 : n - 2] / math.sqrt(phi)
            a[-1], a[-2] = a_n, a_n1
            a[0], a[1] = -a_n, -a_n1
        else:
            phi = (mm - 2.0 * m[-1] ** 2) / (1.0 - 2.0 * a_n**2)
            a[1 : n - 1] = m[1 : n - 1] / math.sqrt(phi)
            a[-1] = a_n
            a[0] = -a_n

    centered = x - x.mean()
    w = float((a @ x) ** 2 / (centered @ centered))
    return SwReport(w=w, n_used=n, subsampled=subsampled)


def sweep(
    original: PixelGrid, params: SegmentationParams, epsilons: list[int]
) -> list[SweepRow]:
    """Compress once, then per epsilon smooth the reconstruction and score it.

    E = KL(hist(original) || hist(smoothed reconstruction)),
    S = Shapiro-Wilk W of the flattened smoothed reconstruction.
    Rows follow the order of `epsilons`. The reconstruction is seed-invariant,
    so E and S depend only on the image, m_c, epsilon and mode.
    """
    comp = compress(original, params.m_c, seed=params.seed)
    recon = reconstruct(comp)
    h_orig = histogram(original)
    rows = []
    for eps in epsilons:
        smoothed = _smoothed(recon, replace(params, epsilon=int(eps)))
        rows.append(
            SweepRow(
                epsilon=int(eps),
                kl=kl_divergence(h_orig, histogram(smoothed)),
                sw=shapiro_wilk(smoothed.values.ravel()).w,
            )
        )
    return rows


def sweep_to_csv(rows: list[SweepRow]) -> str:
    """CSV text with header epsilon,E,S."""
    lines = ["epsilon,E,S"]
    lines += [f"{r.epsilon},{r.kl:.6f},{r.sw:.6f}" for r in rows]
    return "\n".join(lines) + "\n"
