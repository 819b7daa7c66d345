"""Critical region arithmetic from the bond-percolation threshold.

A site's m x m neighborhood percolates when the open-bond density reaches
rho; solving  m^2 / (m^2 + 2 m (K - 1)^2) = rho  for K gives the number of
distinguishable intensity classes, from which the critical sub-region side
m_c and radius R_c follow.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

SQUARE_LATTICE_RHO = 0.5  # open-bond threshold of the square lattice


class InvalidM(ValueError):
    """Neighborhood side m must be a positive integer."""


class InvalidRho(ValueError):
    """Density rho must lie in (0, 1)."""


class DegenerateRegion(ValueError):
    """Critical sub-region collapses below one pixel."""


@dataclass(frozen=True)
class CriticalityResult:
    m: int
    rho: float
    k_solution: float
    K_c: int
    m_c: int
    R_c: int

    def to_json(self) -> str:
        return json.dumps(
            {
                "m": self.m,
                "rho": self.rho,
                "k_solution": self.k_solution,
                "K_c": self.K_c,
                "m_c": self.m_c,
                "R_c": self.R_c,
            }
        )


def solve_k(m: int, rho: float) -> float:
    """Real K solving m^2 / (m^2 + 2 m (K-1)^2) = rho, K = 1 + sqrt(m(1-rho)/(2 rho))."""
    if not isinstance(m, (int,)) or isinstance(m, bool) or m < 1:
        raise InvalidM(f"m must be a positive integer, got {m!r}")
    if not (0.0 < rho < 1.0) or math.isnan(rho):
        raise InvalidRho(f"rho must lie in (0, 1), got {rho!r}")
    return 1.0 + math.sqrt(m * (1.0 - rho) / (2.0 * rho))


def compute_criticality(m: int, rho: float = SQUARE_LATTICE_RHO) -> CriticalityResult:
    """Class count K_c = ceil(max(2, K)), sub-region side m_c = floor(m / K_c),
    critical radius R_c = m_c."""
    k = solve_k(m, rho)
    K_c = math.ceil(max(2.0, k))
    m_c = m // K_c
    if m_c < 1:
        raise DegenerateRegion(
            f"m={m} gives m_c={m_c} at K_c={K_c}; need m >= K_c for a usable region"
        )
    return CriticalityResult(m=m, rho=rho, k_solution=k, K_c=K_c, m_c=m_c, R_c=m_c)


def default_m(rows: int, cols: int) -> int:
    """Default neighborhood side for an R x C grid: floor(sqrt(R*C))."""
    if rows < 1 or cols < 1:
        raise ValueError(f"grid dimensions must be positive, got {rows}x{cols}")
    return math.isqrt(rows * cols)
