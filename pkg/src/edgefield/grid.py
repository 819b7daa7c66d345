"""Pixel lattice primitives: sites, grids, windows and binary PGM I/O."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class OutOfBounds(ValueError):
    """Site or window falls outside the grid."""


class MalformedHeader(ValueError):
    """PGM header could not be parsed as binary P5."""


class UnsupportedMaxval(ValueError):
    """PGM maxval is not 255."""


class TruncatedPayload(ValueError):
    """Fewer payload bytes than the header promises."""


@dataclass(frozen=True, order=True)
class Site:
    """Lattice coordinate, 0-based row-major."""

    row: int
    col: int


@dataclass(frozen=True)
class Region:
    """Square window handle: `anchor` is the upper-left site, `size` the
    interior side length m (the window itself spans (m+1) x (m+1))."""

    anchor: Site
    size: int


@dataclass(frozen=True, eq=False)
class PixelGrid:
    """Immutable grayscale raster, intensities 0..255, at least 2x2."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values)
        if arr.ndim != 2:
            raise ValueError(f"grid must be 2-D, got shape {arr.shape}")
        if arr.shape[0] < 2 or arr.shape[1] < 2:
            raise ValueError(f"grid must be at least 2x2, got {arr.shape}")
        if arr.dtype != np.uint8:
            if not np.issubdtype(arr.dtype, np.integer):
                raise ValueError(f"intensities must be integers, got {arr.dtype}")
            if arr.min() < 0 or arr.max() > 255:
                raise ValueError("intensities must lie in 0..255")
            arr = arr.astype(np.uint8)
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    def __eq__(self, other) -> bool:
        if not isinstance(other, PixelGrid):
            return NotImplemented
        return np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash((self.values.shape, self.values.tobytes()))


def hamming(t: Site, u: Site) -> int:
    """City-block distance |dr| + |dc| between two sites."""
    return abs(t.row - u.row) + abs(t.col - u.col)


def neighbors(grid: PixelGrid, t: Site) -> list[Site]:
    """4-neighborhood of `t` clipped to the grid, in raster order."""
    if not (0 <= t.row < grid.rows and 0 <= t.col < grid.cols):
        raise OutOfBounds(f"site {t} outside {grid.rows}x{grid.cols} grid")
    out = []
    for dr, dc in ((-1, 0), (0, -1), (0, 1), (1, 0)):
        r, c = t.row + dr, t.col + dc
        if 0 <= r < grid.rows and 0 <= c < grid.cols:
            out.append(Site(r, c))
    return out


def region_boundary(grid: PixelGrid, region: Region) -> list[Site]:
    """Sites of the (m+1) x (m+1) window not in its upper-left m x m block.

    That is the right column followed by the bottom row (2m+1 sites), which
    is also raster order over the window complement.
    """
    m = region.size
    if m < 1:
        raise ValueError(f"region size must be >= 1, got {m}")
    r0, c0 = region.anchor.row, region.anchor.col
    if r0 < 0 or c0 < 0 or r0 + m >= grid.rows or c0 + m >= grid.cols:
        raise OutOfBounds(
            f"window anchored at ({r0},{c0}) with side {m + 1} exceeds "
            f"{grid.rows}x{grid.cols} grid"
        )
    sites = [Site(r0 + i, c0 + m) for i in range(m)]
    sites += [Site(r0 + m, c0 + j) for j in range(m + 1)]
    return sites


_WS = b" \t\n\r\x0b\x0c"


def read_pgm(data: bytes) -> PixelGrid:
    """Parse a binary (P5) PGM with maxval 255. Header comments tolerated."""
    pos = 0

    def token() -> bytes:
        nonlocal pos
        while pos < len(data):
            c = data[pos]
            if c in _WS:
                pos += 1
            elif c == 0x23:  # '#' comment runs to end of line
                while pos < len(data) and data[pos] not in b"\r\n":
                    pos += 1
            else:
                break
        start = pos
        while pos < len(data) and data[pos] not in _WS and data[pos] != 0x23:
            pos += 1
        if pos == start:
            raise MalformedHeader("truncated PGM header")
        return data[start:pos]

    if token() != b"P5":
        raise MalformedHeader("not a binary P5 PGM")
    try:
        cols = int(token())
        rows = int(token())
        maxval = int(token())
    except ValueError as exc:
        raise MalformedHeader(f"non-numeric PGM header field: {exc}") from None
    if cols <= 0 or rows <= 0:
        raise MalformedHeader(f"non-positive dimensions {cols}x{rows}")
    if maxval != 255:
        raise UnsupportedMaxval(f"maxval must be 255, got {maxval}")
    # exactly one whitespace byte separates the header from the payload
    if pos >= len(data) or data[pos] not in _WS:
        raise MalformedHeader("missing whitespace after maxval")
    pos += 1
    payload = data[pos : pos + rows * cols]
    if len(payload) < rows * cols:
        raise TruncatedPayload(
            f"expected {rows * cols} payload bytes, got {len(payload)}"
        )
    values = np.frombuffer(payload, dtype=np.uint8).reshape(rows, cols)
    return PixelGrid(values)


def write_pgm(grid: PixelGrid) -> bytes:
    """Serialize to binary P5 with maxval 255. Never emits comments."""
    header = f"P5\n{grid.cols} {grid.rows}\n255\n".encode("ascii")
    return header + grid.values.tobytes()


def _padded_len(n: int, stride: int, window: int) -> int:
    # smallest n' >= max(n, window) with (n' - window) divisible by stride
    if n <= window:
        return window
    k = -(-(n - window) // stride)
    return window + k * stride


def pad_replicate(
    grid: PixelGrid, stride: int, window: int
) -> tuple[PixelGrid, int, int]:
    """Pad bottom/right by edge replication until `window`-sized windows at
    anchor multiples of `stride` tile the grid exactly.

    Returns (padded grid, added rows, added cols); (0, 0) when already tileable.
    """
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    if window < 2:
        raise ValueError(f"window must be >= 2, got {window}")
    target_r = _padded_len(grid.rows, stride, window)
    target_c = _padded_len(grid.cols, stride, window)
    pad_r, pad_c = target_r - grid.rows, target_c - grid.cols
    if pad_r == 0 and pad_c == 0:
        return grid, 0, 0
    padded = np.pad(grid.values, ((0, pad_r), (0, pad_c)), mode="edge")
    return PixelGrid(padded), pad_r, pad_c
