"""Block codec: disjoint (m_c+1)-tiles keep only their boundary pixels plus
one shared uniform sample for the interiors, with a maximum-likelihood
(boundary mean) reconstruction. RFC1 is the byte container."""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .grid import PixelGrid, TruncatedPayload, pad_replicate

MAGIC = b"RFC1"
VERSION = 1
HEADER = struct.Struct(">4sBHHBBB")  # magic, version, rows, cols, pad_r, pad_c, m_c


class BadMagic(ValueError):
    """Container does not start with the RFC1 magic."""


class UnsupportedVersion(ValueError):
    """Container version is not 1."""


class InconsistentDims(ValueError):
    """Header geometry and payload length disagree."""


@dataclass(frozen=True, eq=False)
class CompressedImage:
    """rows/cols are the original dims; pads were added bottom/right so that
    (rows+pad_rows, cols+pad_cols) splits into disjoint (m_c+1)-tiles.
    `sample` holds the shared m_c^2 interior values, `boundaries` one row of
    2*m_c+1 pixels per tile (right column then bottom row), tile raster order."""

    rows: int
    cols: int
    pad_rows: int
    pad_cols: int
    m_c: int
    sample: np.ndarray
    boundaries: np.ndarray

    def __post_init__(self):
        if self.m_c < 1:
            raise ValueError(f"m_c must be >= 1, got {self.m_c}")
        w = self.m_c + 1
        if (self.rows + self.pad_rows) % w or (self.cols + self.pad_cols) % w:
            raise InconsistentDims(
                f"padded dims {(self.rows + self.pad_rows, self.cols + self.pad_cols)} "
                f"do not split into {w}x{w} tiles"
            )
        sample = np.ascontiguousarray(np.asarray(self.sample, dtype=np.uint8))
        bounds = np.ascontiguousarray(np.asarray(self.boundaries, dtype=np.uint8))
        if sample.shape != (self.m_c * self.m_c,):
            raise ValueError(f"sample must hold m_c^2 values, got {sample.shape}")
        if bounds.shape != (self.n_tiles, 2 * self.m_c + 1):
            raise ValueError(
                f"boundaries must be {(self.n_tiles, 2 * self.m_c + 1)}, got {bounds.shape}"
            )
        sample.flags.writeable = False
        bounds.flags.writeable = False
        object.__setattr__(self, "sample", sample)
        object.__setattr__(self, "boundaries", bounds)

    @property
    def n_tiles(self) -> int:
        w = self.m_c + 1
        return ((self.rows + self.pad_rows) // w) * ((self.cols + self.pad_cols) // w)

    def __eq__(self, other) -> bool:
        if not isinstance(other, CompressedImage):
            return NotImplemented
        return (
            (self.rows, self.cols, self.pad_rows, self.pad_cols, self.m_c)
            == (other.rows, other.cols, other.pad_rows, other.pad_cols, other.m_c)
            and np.array_equal(self.sample, other.sample)
            and np.array_equal(self.boundaries, other.boundaries)
        )


@dataclass(frozen=True)
class CodecStats:
    raw_bytes: int
    compressed_bytes: int
    ratio: float


def _tiles(values: np.ndarray, w: int) -> np.ndarray:
    """(n_tiles, w, w) view of a (R, C) array, tile raster order."""
    t_r, t_c = values.shape[0] // w, values.shape[1] // w
    return values.reshape(t_r, w, t_c, w).transpose(0, 2, 1, 3).reshape(t_r * t_c, w, w)


def compress(grid: PixelGrid, m_c: int, seed: int = 0) -> CompressedImage:
    """Keep per-tile boundaries plus one seeded uniform interior sample."""
    if m_c < 1:
        raise ValueError(f"m_c must be >= 1, got {m_c}")
    w = m_c + 1
    padded, pad_r, pad_c = pad_replicate(grid, stride=w, window=w)
    tiles = _tiles(padded.values, w)
    boundaries = np.concatenate([tiles[:, :m_c, m_c], tiles[:, m_c, :]], axis=1)
    rng = np.random.default_rng(seed)
    sample = rng.integers(0, 256, size=m_c * m_c, dtype=np.uint8)
    return CompressedImage(
        rows=grid.rows,
        cols=grid.cols,
        pad_rows=pad_r,
        pad_cols=pad_c,
        m_c=m_c,
        sample=sample,
        boundaries=boundaries,
    )


def _assemble(c: CompressedImage, interiors: np.ndarray) -> PixelGrid:
    """Rebuild the padded raster from per-tile interiors + boundaries, crop pad."""
    w = c.m_c + 1
    p_r, p_c = c.rows + c.pad_rows, c.cols + c.pad_cols
    t_r, t_c = p_r // w, p_c // w
    tiles = np.empty((c.n_tiles, w, w), dtype=np.uint8)
    tiles[:, : c.m_c, : c.m_c] = interiors
    tiles[:, : c.m_c, c.m_c] = c.boundaries[:, : c.m_c]
    tiles[:, c.m_c, :] = c.boundaries[:, c.m_c :]
    full = tiles.reshape(t_r, t_c, w, w).transpose(0, 2, 1, 3).reshape(p_r, p_c)
    return PixelGrid(full[: c.rows, : c.cols])


def render_compressed(c: CompressedImage) -> PixelGrid:
    """Literal decode: every tile interior shows the shared sample."""
    interior = c.sample.reshape(1, c.m_c, c.m_c)
    return _assemble(c, np.broadcast_to(interior, (c.n_tiles, c.m_c, c.m_c)))


def reconstruct(c: CompressedImage) -> PixelGrid:
    """Maximum-likelihood decode: each tile interior becomes the
    round-half-even mean of that tile's 2*m_c+1 boundary pixels. The shared
    sample (and hence the compression seed) plays no part."""
    means = np.rint(c.boundaries.astype(np.float64).mean(axis=1)).astype(np.uint8)
    interiors = np.broadcast_to(
        means[:, None, None], (c.n_tiles, c.m_c, c.m_c)
    )
    return _assemble(c, interiors)


def write_rfc(c: CompressedImage) -> bytes:
    header = HEADER.pack(
        MAGIC, VERSION, c.rows, c.cols, c.pad_rows, c.pad_cols, c.m_c
    )
    return header + c.sample.tobytes() + c.boundaries.tobytes()


def read_rfc(data: bytes) -> CompressedImage:
    if data[:4] != MAGIC:
        raise BadMagic(f"expected {MAGIC!r}, got {data[:4]!r}")
    if len(data) < HEADER.size:
        raise TruncatedPayload(f"container shorter than the {HEADER.size}-byte header")
    _, version, rows, cols, pad_r, pad_c, m_c = HEADER.unpack_from(data)
    if version != VERSION:
        raise UnsupportedVersion(f"expected version {VERSION}, got {version}")
    if m_c < 1 or rows < 2 or cols < 2:
        raise InconsistentDims(f"unusable geometry rows={rows} cols={cols} m_c={m_c}")
    w = m_c + 1
    if (rows + pad_r) % w or (cols + pad_c) % w:
        raise InconsistentDims(
            f"padded dims {(rows + pad_r, cols + pad_c)} do not split into {w}x{w} tiles"
        )
    n_tiles = ((rows + pad_r) // w) * ((cols + pad_c) // w)
    n_sample = m_c * m_c
    expected = n_sample + n_tiles * (2 * m_c + 1)
    payload = data[HEADER.size :]
    if len(payload) < expected:
        raise TruncatedPayload(f"expected {expected} payload bytes, got {len(payload)}")
    if len(payload) > expected:
        raise InconsistentDims(f"{len(payload) - expected} trailing bytes after payload")
    sample = np.frombuffer(payload[:n_sample], dtype=np.uint8)
    boundaries = np.frombuffer(payload[n_sample:], dtype=np.uint8).reshape(
        n_tiles, 2 * m_c + 1
    )
    return CompressedImage(
        rows=rows,
        cols=cols,
        pad_rows=pad_r,
        pad_cols=pad_c,
        m_c=m_c,
        sample=sample,
        boundaries=boundaries,
    )


def codec_stats(c: CompressedImage) -> CodecStats:
    """Byte accounting for the serialized container against the raw raster."""
    raw = c.rows * c.cols
    compressed = HEADER.size + c.sample.size + c.boundaries.size
    return CodecStats(raw_bytes=raw, compressed_bytes=compressed, ratio=compressed / raw)
