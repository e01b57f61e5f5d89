"""
Coordinate domains with walls / excluded points, and uniform Dirichlet grids.

Grids never carry a node on a wall: the endpoints ``x_min`` and ``x_max`` are
ghost points where the wavefunction is pinned to zero, and every interior node
sits at least one spacing away from them.

Example
-------
>>> g = build_grid(DomainSpec.interval(1.0), 3)
>>> g.nodes
array([-0.5,  0. ,  0.5])
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, TruncationNotNeeded

#: Extent used for unbounded directions when no hint is supplied.
DEFAULT_EXTENT = 10.0


class DomainKind(enum.Enum):
    FULL_LINE = "full_line"
    HALF_LINE = "half_line"
    INTERVAL = "interval"
    PUNCTURED_EXTERIOR = "punctured_exterior"
    PUNCTURED_LINE = "punctured_line"


@dataclass(frozen=True)
class DomainSpec:
    """Tagged coordinate domain.

    ``b`` is the wall parameter: the shift of a half-line (-b < q < inf), the
    half-width of an interval (-b < q < b) or the radius of the hole of a
    punctured exterior (b < |q|).
    """

    kind: DomainKind
    b: float = 0.0

    def __post_init__(self):
        b = float(self.b)
        if not math.isfinite(b):
            raise DomainError(f"wall parameter must be finite, got {self.b!r}")
        if self.kind in (DomainKind.INTERVAL, DomainKind.PUNCTURED_EXTERIOR) and b <= 0:
            raise DomainError(f"{self.kind.value} requires b > 0, got {b}")
        if self.kind is DomainKind.HALF_LINE and b < 0:
            raise DomainError(f"half_line requires b >= 0, got {b}")
        if self.kind in (DomainKind.FULL_LINE, DomainKind.PUNCTURED_LINE) and b != 0:
            raise DomainError(f"{self.kind.value} takes no wall parameter")
        object.__setattr__(self, "b", b)

    @classmethod
    def full_line(cls) -> DomainSpec:
        return cls(DomainKind.FULL_LINE)

    @classmethod
    def half_line(cls, b: float = 0.0) -> DomainSpec:
        return cls(DomainKind.HALF_LINE, b)

    @classmethod
    def interval(cls, b: float) -> DomainSpec:
        return cls(DomainKind.INTERVAL, b)

    @classmethod
    def punctured_exterior(cls, b: float) -> DomainSpec:
        return cls(DomainKind.PUNCTURED_EXTERIOR, b)

    @classmethod
    def punctured_line(cls) -> DomainSpec:
        return cls(DomainKind.PUNCTURED_LINE)

    @property
    def walls(self) -> tuple[float, ...]:
        """Positions of the excluded points / walls, ascending."""
        k = self.kind
        if k is DomainKind.FULL_LINE:
            return ()
        if k is DomainKind.HALF_LINE:
            return (0.0 - self.b,)
        if k is DomainKind.PUNCTURED_LINE:
            return (0.0,)
        return (0.0 - self.b, self.b)

    @property
    def is_bounded(self) -> bool:
        return self.kind is DomainKind.INTERVAL

    @property
    def is_punctured(self) -> bool:
        return self.kind in (DomainKind.PUNCTURED_EXTERIOR, DomainKind.PUNCTURED_LINE)

    def contains(self, x) -> np.ndarray | bool:
        """Strict interior membership (walls are not in the domain)."""
        x = np.asarray(x, dtype=float)
        k, b = self.kind, self.b
        if k is DomainKind.FULL_LINE:
            out = np.isfinite(x)
        elif k is DomainKind.HALF_LINE:
            out = x > -b
        elif k is DomainKind.INTERVAL:
            out = (x > -b) & (x < b)
        elif k is DomainKind.PUNCTURED_EXTERIOR:
            out = np.abs(x) > b
        else:
            out = x != 0.0
        return bool(out) if out.ndim == 0 else out

    def describe(self) -> str:
        if self.kind in (DomainKind.FULL_LINE, DomainKind.PUNCTURED_LINE):
            return self.kind.value
        return f"{self.kind.value}(b={self.b!r})"


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid of ``n`` interior nodes on the open interval (x_min, x_max).

    nodes[j] = x_min + (j + 1) * h,  h = (x_max - x_min) / (n + 1)
    """

    x_min: float
    x_max: float
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 3:
            raise DomainError(f"grid needs n >= 3 interior nodes, got {self.n}")
        if not (math.isfinite(self.x_min) and math.isfinite(self.x_max)):
            raise DomainError("grid ends must be finite")
        if self.x_max <= self.x_min:
            raise DomainError(f"empty grid interval ({self.x_min}, {self.x_max})")
        object.__setattr__(self, "x_min", float(self.x_min))
        object.__setattr__(self, "x_max", float(self.x_max))
        object.__setattr__(self, "n", int(self.n))

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / (self.n + 1)

    @property
    def nodes(self) -> np.ndarray:
        return self.x_min + self.h * np.arange(1, self.n + 1)

    def refine(self) -> Grid1D:
        """Same interval with half the spacing (n -> 2n + 1); old nodes are kept."""
        return Grid1D(self.x_min, self.x_max, 2 * self.n + 1)

    def as_dict(self) -> dict:
        return {"x_min": self.x_min, "x_max": self.x_max, "n": self.n, "h": self.h}


class GridPair(NamedTuple):
    """The two half-axis grids of a punctured domain."""

    left: Grid1D
    right: Grid1D


def build_grid(domain: DomainSpec, n: int, x_max_hint: float | None = None):
    """Discretize ``domain`` with ``n`` interior nodes.

    Returns a :class:`Grid1D`, or a :class:`GridPair` for punctured domains
    (one grid per half-axis, each bounded by the excluded point itself).
    Unbounded directions are cut at ``x_max_hint`` (default ``DEFAULT_EXTENT``).
    """
    if int(n) != n or n < 3:
        raise DomainError(f"n must be an integer >= 3, got {n!r}")
    n = int(n)
    k, b = domain.kind, domain.b
    if k is DomainKind.INTERVAL:
        return Grid1D(0.0 - b, b, n)

    X = DEFAULT_EXTENT if x_max_hint is None else float(x_max_hint)
    if k is DomainKind.FULL_LINE:
        if X <= 0:
            raise DomainError(f"x_max_hint must be positive on the full line, got {X}")
        return Grid1D(-X, X, n)
    if k is DomainKind.HALF_LINE:
        if X <= -b:
            raise DomainError(f"x_max_hint={X} lies in the excluded region q <= {-b}")
        return Grid1D(0.0 - b, X, n)
    # punctured: hole (-b, b), possibly degenerate b = 0
    if X <= b:
        raise DomainError(f"x_max_hint={X} lies in the excluded region |q| <= {b}")
    return GridPair(left=Grid1D(-X, 0.0 - b, n), right=Grid1D(b, X, n))


def min_wall_distance(grid: Grid1D, domain: DomainSpec) -> float:
    """Smallest distance from any node to an excluded point (inf if none)."""
    walls = domain.walls
    if not walls:
        return math.inf
    x = grid.nodes
    return float(min(np.min(np.abs(x - w)) for w in walls))


def check_grid(grid: Grid1D, domain: DomainSpec) -> None:
    """Raise DomainError unless ``grid`` discretizes (one component of) ``domain``."""
    k, b = domain.kind, domain.b
    tol = 1e-12 * max(1.0, abs(grid.x_min), abs(grid.x_max))

    def same(a, c):
        return abs(a - c) <= tol

    if k is DomainKind.FULL_LINE:
        ok = True
    elif k is DomainKind.HALF_LINE:
        ok = same(grid.x_min, -b)
    elif k is DomainKind.INTERVAL:
        ok = same(grid.x_min, -b) and same(grid.x_max, b)
    else:
        ok = same(grid.x_min, b) or same(grid.x_max, -b)
    if not ok or not np.all(domain.contains(grid.nodes)):
        raise DomainError(
            f"grid ({grid.x_min}, {grid.x_max}) does not match domain {domain.describe()}"
        )
    if min_wall_distance(grid, domain) < 0.5 * grid.h:
        raise DomainError("grid node closer than h/2 to an excluded point")


def truncation_radius(model, energy_ceiling: float) -> float:
    """Cut-off ``x_max`` with V(x_max) >= 4 * energy_ceiling.

    Below the ceiling, bound states decay exponentially past the turning
    point, so a Dirichlet wall at this radius is harmless.
    """
    if not energy_ceiling > 0:
        raise ValueError(f"energy_ceiling must be positive, got {energy_ceiling}")
    domain = model.domain
    if domain.is_bounded:
        raise TruncationNotNeeded("bounded domain: truncation not needed")
    pot = model.potential
    target = 4.0 * energy_ceiling
    if pot.kind == "harmonic":
        return math.sqrt(2.0 * target / (model.mass * model.omega**2))
    if pot.kind == "none":
        raise TruncationNotNeeded("potential does not grow: truncation not needed")

    # custom potential: march outward from the wall (or origin) until V crosses target
    start = max(domain.walls) if domain.walls else 0.0
    lo, step = start + 1e-6, 1.0
    V = lambda x: float(pot(np.array([x]), model)[0]) - target
    if V(lo) >= 0:
        return lo
    hi = lo + step
    while V(hi) < 0:
        lo, hi = hi, hi + step
        step *= 2.0
        if hi > 1e8:
            raise TruncationNotNeeded("potential does not grow: truncation not needed")
    return float(brentq(V, lo, hi, xtol=1e-12))
