"""Modified Metropolis annealing of open/closed edge states on a pixel lattice.

Each lattice edge carries a state in {-1, +1} (+1 = open). The data couple
J_e is +1 when the two incident intensities differ by less than epsilon and
-1 otherwise; the field energy is H = -beta * sum_e s_e * J_e. Uphill moves
are kept with a fixed probability p_keep instead of the usual Boltzmann
factor, and the temperature follows the logarithmic schedule
T_k = t0 / ln(k + e).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .grid import PixelGrid


@dataclass(frozen=True, eq=False)
class EdgeConfig:
    """Edge states for an R x C grid: `horiz[r, c]` joins (r,c)-(r,c+1),
    `vert[r, c]` joins (r,c)-(r+1,c). Values are int8 in {-1, +1}."""

    rows: int
    cols: int
    horiz: np.ndarray
    vert: np.ndarray

    def __post_init__(self):
        h = np.ascontiguousarray(np.asarray(self.horiz, dtype=np.int8))
        v = np.ascontiguousarray(np.asarray(self.vert, dtype=np.int8))
        if h.shape != (self.rows, self.cols - 1):
            raise ValueError(f"horiz must be {(self.rows, self.cols - 1)}, got {h.shape}")
        if v.shape != (self.rows - 1, self.cols):
            raise ValueError(f"vert must be {(self.rows - 1, self.cols)}, got {v.shape}")
        if not (np.all(np.abs(h) == 1) and np.all(np.abs(v) == 1)):
            raise ValueError("edge states must be -1 or +1")
        h.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "horiz", h)
        object.__setattr__(self, "vert", v)

    @property
    def n_edges(self) -> int:
        return self.horiz.size + self.vert.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, EdgeConfig):
            return NotImplemented
        return (
            self.rows == other.rows
            and self.cols == other.cols
            and np.array_equal(self.horiz, other.horiz)
            and np.array_equal(self.vert, other.vert)
        )


@dataclass(frozen=True)
class AnnealParams:
    epsilon: int
    p_keep: float = 0.05
    t0: float = 10.0
    n_stops: int = 64
    sweeps_per_stop: int = 4
    tol: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if self.epsilon < 1:
            raise ValueError(f"epsilon must be >= 1, got {self.epsilon}")
        if not (0.0 < self.p_keep < 1.0):
            raise ValueError(f"p_keep must lie in (0, 1), got {self.p_keep}")
        if not self.t0 > 0:
            raise ValueError(f"t0 must be positive, got {self.t0}")
        if self.n_stops < 1 or self.sweeps_per_stop < 1:
            raise ValueError("n_stops and sweeps_per_stop must be >= 1")
        if self.tol < 0:
            raise ValueError(f"tol must be >= 0, got {self.tol}")


@dataclass(frozen=True, eq=False)
class EquilibriumResult:
    config: EdgeConfig
    smoothed: PixelGrid
    energy_trace: list[float] = field(repr=False)
    stops_executed: int = 0

    def __eq__(self, other) -> bool:
        if not isinstance(other, EquilibriumResult):
            return NotImplemented
        return (
            self.config == other.config
            and self.smoothed == other.smoothed
            and self.energy_trace == other.energy_trace
            and self.stops_executed == other.stops_executed
        )


def temperature(k: int, t0: float) -> float:
    """Stop-k temperature of the logarithmic schedule, T_0 = t0."""
    return t0 / math.log(k + math.e)


def bond_signs(grid: PixelGrid, epsilon: int) -> tuple[np.ndarray, np.ndarray]:
    """Data couples (J_horiz, J_vert): +1 where |intensity difference| < epsilon."""
    v = grid.values.astype(np.int16)
    j_h = np.where(np.abs(v[:, 1:] - v[:, :-1]) < epsilon, 1, -1).astype(np.int8)
    j_v = np.where(np.abs(v[1:, :] - v[:-1, :]) < epsilon, 1, -1).astype(np.int8)
    return j_h, j_v


def init_config(grid: PixelGrid, epsilon: int) -> EdgeConfig:
    """Data-aligned configuration: an edge is open iff its couple is +1."""
    j_h, j_v = bond_signs(grid, epsilon)
    return EdgeConfig(grid.rows, grid.cols, j_h, j_v)


def energy(grid: PixelGrid, config: EdgeConfig, epsilon: int, beta: float) -> float:
    """H = -beta * sum_e s_e * J_e over both edge families."""
    j_h, j_v = bond_signs(grid, epsilon)
    agree = int(np.sum(config.horiz * j_h.astype(np.int32))) + int(
        np.sum(config.vert * j_v.astype(np.int32))
    )
    return -beta * float(agree)


def accept_flip(delta_h, draw, p_keep: float):
    """Modified Metropolis rule: accept downhill always, uphill iff draw < p_keep.

    Works elementwise on arrays; `draw` is the uniform(0,1) variate for the
    proposal, so injecting draws exercises the rule deterministically.
    """
    return (delta_h <= 0) | (draw < p_keep)


def anneal(grid: PixelGrid, params: AnnealParams) -> EquilibriumResult:
    """Run the schedule from a seeded uniform-random start.

    Starts from i.i.d. random edge states (the high-temperature limit), runs
    up to n_stops stops of sweeps_per_stop full random-order passes, and
    stops early once the relative energy change |dH| / max(1, |H|) falls
    below tol at two consecutive stops. The energy trace is recorded at unit
    coupling (beta = 1) so stop-to-stop changes are comparable; entry 0 is
    the energy of the random start. The smoothed grid assigns every pixel
    the round-half-even mean intensity of its open cluster.
    """
    rng = np.random.default_rng(params.seed)
    j_h, j_v = bond_signs(grid, params.epsilon)
    j = np.concatenate([j_h.ravel(), j_v.ravel()]).astype(np.int8)
    n = j.size
    s = (rng.integers(0, 2, size=n, dtype=np.int8) * 2 - 1).astype(np.int8)

    trace = [-float(np.sum(s.astype(np.int32) * j))]
    stops = 0
    calm = 0
    for k in range(params.n_stops):
        beta = 1.0 / temperature(k, params.t0)
        for _ in range(params.sweeps_per_stop):
            # one flip proposal per edge, visited in a random order; edges are
            # uncoupled so the pass outcome matches the sequential visit order
            perm = rng.permutation(n)
            draws = rng.random(n)
            u = np.empty(n)
            u[perm] = draws
            delta = 2.0 * beta * (s * j).astype(np.float64)
            s = np.where(accept_flip(delta, u, params.p_keep), -s, s).astype(np.int8)
        h = -float(np.sum(s.astype(np.int32) * j))
        rel = abs(h - trace[-1]) / max(1.0, abs(h))
        trace.append(h)
        stops = k + 1
        calm = calm + 1 if rel < params.tol else 0
        if calm >= 2:
            break

    n_h = j_h.size
    config = EdgeConfig(
        grid.rows,
        grid.cols,
        s[:n_h].reshape(j_h.shape),
        s[n_h:].reshape(j_v.shape),
    )
    return EquilibriumResult(
        config=config,
        smoothed=cluster_mean_grid(grid, config),
        energy_trace=trace,
        stops_executed=stops,
    )


def open_clusters(config: EdgeConfig) -> tuple[np.ndarray, int]:
    """Label sites connected by open edges.

    Returns (labels, count): labels is an R x C int array with dense cluster
    ids 0..count-1 assigned by raster order of first occurrence.
    """
    rows, cols = config.rows, config.cols
    n = rows * cols
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    h = config.horiz
    v = config.vert
    for r in range(rows):
        base = r * cols
        for c in range(cols - 1):
            if h[r, c] == 1:
                a, b = find(base + c), find(base + c + 1)
                if a != b:
                    parent[b] = a
    for r in range(rows - 1):
        base = r * cols
        for c in range(cols):
            if v[r, c] == 1:
                a, b = find(base + c), find(base + cols + c)
                if a != b:
                    parent[b] = a

    labels = np.empty(n, dtype=np.int64)
    relabel: dict[int, int] = {}
    for i in range(n):
        root = find(i)
        if root not in relabel:
            relabel[root] = len(relabel)
        labels[i] = relabel[root]
    return labels.reshape(rows, cols), len(relabel)


def cluster_mean_grid(grid: PixelGrid, config: EdgeConfig) -> PixelGrid:
    """Replace each pixel by the round-half-even mean of its open cluster."""
    labels, count = open_clusters(config)
    flat = labels.ravel()
    sums = np.bincount(flat, weights=grid.values.ravel().astype(np.float64), minlength=count)
    sizes = np.bincount(flat, minlength=count)
    means = np.rint(sums / sizes)
    return PixelGrid(means[labels].astype(np.uint8))


def anneal_tiles(
    grid: PixelGrid, tile: int, params: AnnealParams
) -> tuple[PixelGrid, list[EquilibriumResult]]:
    """Anneal disjoint tile x tile sub-grids independently and merge.

    Tile i (raster order) runs with seed = params.seed XOR i, so the merged
    result does not depend on any execution schedule. Grid dimensions must be
    multiples of `tile` and tile must be >= 2 (a 1x1 tile has no edges).
    """
    if tile < 2:
        raise ValueError(f"tile must be >= 2, got {tile}")
    if grid.rows % tile or grid.cols % tile:
        raise ValueError(
            f"{grid.rows}x{grid.cols} grid does not partition into {tile}x{tile} tiles"
        )
    out = np.empty((grid.rows, grid.cols), dtype=np.uint8)
    results = []
    tiles_per_row = grid.cols // tile
    for idx in range((grid.rows // tile) * tiles_per_row):
        r0 = (idx // tiles_per_row) * tile
        c0 = (idx % tiles_per_row) * tile
        sub = PixelGrid(grid.values[r0 : r0 + tile, c0 : c0 + tile])
        res = anneal(sub, replace(params, seed=params.seed ^ idx))
        out[r0 : r0 + tile, c0 : c0 + tile] = res.smoothed.values
        results.append(res)
    return PixelGrid(out), results
