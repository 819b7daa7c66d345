"""White-shift segmentation: smooth, difference against the original,
threshold, and merge the surviving components into region proposals."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .grid import PixelGrid, pad_replicate

MODES = ("empirical", "dbn", "metropolis")


class WindowMismatch(ValueError):
    """Grid does not tile into (m_c+1)-windows at stride m_c."""


@dataclass(frozen=True)
class SegmentationParams:
    epsilon: int
    m_c: int
    tau: int = 1
    mode: str = "empirical"
    seed: int = 0

    def __post_init__(self):
        if not (1 <= self.epsilon <= 256):
            raise ValueError(f"epsilon must lie in [1, 256], got {self.epsilon}")
        if self.m_c < 1:
            raise ValueError(f"m_c must be >= 1, got {self.m_c}")
        if self.tau < 1:
            raise ValueError(f"tau must be >= 1, got {self.tau}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")


@dataclass(frozen=True)
class RegionProposal:
    """4-connected mask component (possibly merged): inclusive bounding box."""

    id: int
    top: int
    left: int
    bottom: int
    right: int
    pixels: int

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "box": [self.top, self.left, self.bottom, self.right],
            "pixels": self.pixels,
        }


@dataclass(frozen=True, eq=False)
class SegmentationResult:
    equilibrium: PixelGrid
    difference: PixelGrid
    mask: np.ndarray
    overlay: PixelGrid
    proposals: list[RegionProposal]
    violation_rate: float


def _window_grid(rows: int, m_c: int) -> int:
    """Window count along one axis; raises when windows do not tile."""
    w = m_c + 1
    if rows < w or (rows - w) % m_c:
        raise WindowMismatch(
            f"extent {rows} does not tile into {w}-windows at stride {m_c}"
        )
    return (rows - w) // m_c + 1


def window_values(grid: PixelGrid, m_c: int) -> np.ndarray:
    """Modal intensity of every (m_c+1)-window (stride m_c), ties to the
    smallest intensity. Shape (n_window_rows, n_window_cols) uint8."""
    n_wr = _window_grid(grid.rows, m_c)
    n_wc = _window_grid(grid.cols, m_c)
    w = m_c + 1
    wins = sliding_window_view(grid.values, (w, w))[::m_c, ::m_c]
    flat = wins.reshape(n_wr * n_wc, w * w)
    counts = np.zeros((n_wr * n_wc, 256), dtype=np.int32)
    np.add.at(counts, (np.repeat(np.arange(n_wr * n_wc), w * w), flat.ravel()), 1)
    # argmax returns the first maximum, i.e. the smallest modal intensity
    return counts.argmax(axis=1).astype(np.uint8).reshape(n_wr, n_wc)


def substitute_by_windows(
    grid: PixelGrid, per_window: np.ndarray, m_c: int, epsilon: int
) -> PixelGrid:
    """Window substitution with min-distance overlap resolution.

    `per_window` holds one replacement intensity per (m_c+1)-window. Each
    pixel u resolves to the covering window minimizing |i_u - value(w)|
    (ties to the smallest window raster index) and takes that window's value
    when the distance is below epsilon, otherwise keeps its own intensity.
    """
    n_wr = _window_grid(grid.rows, m_c)
    n_wc = _window_grid(grid.cols, m_c)
    if per_window.shape != (n_wr, n_wc):
        raise WindowMismatch(
            f"per-window values {per_window.shape} do not match window grid "
            f"{(n_wr, n_wc)}"
        )
    values = grid.values.astype(np.int16)
    r = np.arange(grid.rows)
    c = np.arange(grid.cols)
    # anchors covering index x are the window indices in [ceil((x-m_c)/m_c), floor(x/m_c)]
    kr_pair = (
        np.clip((r - 1) // m_c, 0, n_wr - 1),
        np.clip(r // m_c, 0, n_wr - 1),
    )
    kc_pair = (
        np.clip((c - 1) // m_c, 0, n_wc - 1),
        np.clip(c // m_c, 0, n_wc - 1),
    )
    best_d = np.full(values.shape, 256, dtype=np.int16)
    best_v = np.zeros(values.shape, dtype=np.int16)
    pw = per_window.astype(np.int16)
    for kr in kr_pair:  # (lo,lo),(lo,hi),(hi,lo),(hi,hi) is window raster order,
        for kc in kc_pair:  # so strict < keeps the smallest raster index on ties
            cand = pw[kr[:, None], kc[None, :]]
            d = np.abs(values - cand)
            upd = d < best_d
            best_d = np.where(upd, d, best_d)
            best_v = np.where(upd, cand, best_v)
    out = np.where(best_d < epsilon, best_v, values)
    return PixelGrid(out.astype(np.uint8))


def smooth_empirical(grid: PixelGrid, m_c: int, epsilon: int) -> PixelGrid:
    """Replace pixels within epsilon of their best covering window's modal
    intensity by that mode. The grid must already tile into windows."""
    return substitute_by_windows(grid, window_values(grid, m_c), m_c, epsilon)


def violation_rate(grid: PixelGrid, epsilon: int) -> float:
    """Fraction of 4-neighbor pairs whose intensities differ by >= epsilon."""
    v = grid.values.astype(np.int16)
    bad = int(np.sum(np.abs(v[:, 1:] - v[:, :-1]) >= epsilon)) + int(
        np.sum(np.abs(v[1:, :] - v[:-1, :]) >= epsilon)
    )
    total = grid.rows * (grid.cols - 1) + (grid.rows - 1) * grid.cols
    return bad / total


def _mask_components(mask: np.ndarray) -> list[tuple[int, int, int, int, int]]:
    """4-connected components of a boolean mask in raster order of first
    pixel. Returns (top, left, bottom, right, pixel_count) per component."""
    rows, cols = mask.shape
    seen = np.zeros_like(mask, dtype=bool)
    comps = []
    for r0 in range(rows):
        for c0 in range(cols):
            if not mask[r0, c0] or seen[r0, c0]:
                continue
            queue = deque([(r0, c0)])
            seen[r0, c0] = True
            top = bottom = r0
            left = right = c0
            count = 0
            while queue:
                r, c = queue.popleft()
                count += 1
                top, bottom = min(top, r), max(bottom, r)
                left, right = min(left, c), max(right, c)
                for nr, nc in ((r - 1, c), (r, c - 1), (r, c + 1), (r + 1, c)):
                    if 0 <= nr < rows and 0 <= nc < cols and mask[nr, nc] and not seen[nr, nc]:
                        seen[nr, nc] = True
                        queue.append((nr, nc))
            comps.append((top, left, bottom, right, count))
    return comps


def _box_gap(a: tuple, b: tuple) -> int:
    """City-block gap between two inclusive boxes (0 when they overlap)."""
    dr = max(0, a[0] - b[2], b[0] - a[2])
    dc = max(0, a[1] - b[3], b[1] - a[3])
    return dr + dc


def _merge_components(comps: list[tuple]) -> list[RegionProposal]:
    """Merge components whose boxes sit within city-block gap 1, to fixpoint."""
    boxes = [list(c) for c in comps]
    merged = True
    while merged:
        merged = False
        for i in range(len(boxes)):
            j = i + 1
            while j < len(boxes):
                if _box_gap(boxes[i], boxes[j]) <= 1:
                    a, b = boxes[i], boxes.pop(j)
                    boxes[i] = [
                        min(a[0], b[0]),
                        min(a[1], b[1]),
                        max(a[2], b[2]),
                        max(a[3], b[3]),
                        a[4] + b[4],
                    ]
                    merged = True
                else:
                    j += 1
    boxes.sort(key=lambda x: (x[0], x[1], x[2], x[3]))
    return [
        RegionProposal(id=k, top=t, left=l, bottom=b, right=rr, pixels=n)
        for k, (t, l, b, rr, n) in enumerate(boxes)
    ]


def _smoothed(grid: PixelGrid, params: SegmentationParams) -> PixelGrid:
    """Mode-selected smoother applied through pad/crop where windows apply."""
    if params.mode == "metropolis":
        from .annealing import AnnealParams, anneal

        res = anneal(grid, AnnealParams(epsilon=params.epsilon, seed=params.seed))
        return res.smoothed
    padded, pad_r, pad_c = pad_replicate(grid, stride=params.m_c, window=params.m_c + 1)
    if params.mode == "empirical":
        smoothed = smooth_empirical(padded, params.m_c, params.epsilon)
    else:
        from . import dbn

        ds = dbn.dataset_from_grid(padded, params.m_c)
        model = dbn.build_dbn(m=params.m_c + 1, n_classes=2, seed=params.seed)
        dbn.train(model, ds, epochs=50, lr=1e-3, batch_size=32, seed=params.seed)
        smoothed = dbn.smooth_dbn(padded, model, params.m_c, params.epsilon)
    return PixelGrid(smoothed.values[: grid.rows, : grid.cols])


def segment(grid: PixelGrid, params: SegmentationParams) -> SegmentationResult:
    """Smooth, difference, threshold at tau, and propose regions.

    Differences below tau are zeroed; surviving pixels form the mask, are
    white-shifted to 255 in the overlay, and group into 4-connected proposals
    merged while their boxes sit within city-block gap 1. violation_rate is
    the epsilon-violation fraction of the original grid's neighbor pairs.
    """
    equilibrium = _smoothed(grid, params)
    diff = np.abs(
        equilibrium.values.astype(np.int16) - grid.values.astype(np.int16)
    )
    diff[diff < params.tau] = 0
    mask = diff >= params.tau
    overlay = grid.values.copy()
    overlay[mask] = 255
    proposals = _merge_components(_mask_components(mask))
    return SegmentationResult(
        equilibrium=equilibrium,
        difference=PixelGrid(diff.astype(np.uint8)),
        mask=mask,
        overlay=PixelGrid(overlay),
        proposals=proposals,
        violation_rate=violation_rate(grid, params.epsilon),
    )


def estimate_epsilon_c(grid: PixelGrid, delta_tol: float) -> int:
    """Smallest epsilon in 1..256 whose one-column-shift violation fraction
    P(|i(r,c) - i(r,c+1)| >= epsilon) is <= delta_tol."""
    if not (0.0 <= delta_tol < 1.0):
        raise ValueError(f"delta_tol must lie in [0, 1), got {delta_tol}")
    v = grid.values.astype(np.int16)
    diffs = np.abs(v[:, 1:] - v[:, :-1]).ravel()
    counts = np.bincount(diffs, minlength=256)
    total = diffs.size
    # tail[e] = count of diffs >= e
    tail = np.concatenate([[total], total - np.cumsum(counts)])
    for eps in range(1, 257):
        if tail[eps] / total <= delta_tol:
            return eps
    return 256
