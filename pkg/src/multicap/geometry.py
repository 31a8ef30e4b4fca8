"""Random geometric networks on the unit square and disk/area primitives.

Node placement uses NumPy's PCG64 generator (``numpy.random.default_rng``),
so an instance is reproducible from its ``(n, seed)`` pair alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

SQRT2 = math.sqrt(2.0)

NodeId = int


@dataclass(frozen=True)
class Point:
    """A position in the unit square."""

    x: float
    y: float


@dataclass(frozen=True)
class CommRange:
    """Common transceiver range shared by all nodes.

    ``t`` is the multi-packet range; ``r`` is the conventional alias used
    when talking about plain point-to-point links.
    """

    t: float

    def __post_init__(self):
        if not 0.0 < self.t <= SQRT2:
            raise ValueError(f"range must be in (0, sqrt(2)], got {self.t}")

    @property
    def r(self) -> float:
        return self.t


class NetworkInstance:
    """n nodes placed i.i.d. uniformly on [0,1]^2, reproducible from (n, seed)."""

    def __init__(self, n: int, seed: int, coords: np.ndarray):
        if coords.shape != (n, 2):
            raise ValueError(f"coords shape {coords.shape} != ({n}, 2)")
        self.n = n
        self.seed = seed
        self.coords = coords
        self.coords.setflags(write=False)

    @property
    def xs(self) -> np.ndarray:
        return self.coords[:, 0]

    @property
    def ys(self) -> np.ndarray:
        return self.coords[:, 1]

    def point(self, i: NodeId) -> Point:
        return Point(float(self.coords[i, 0]), float(self.coords[i, 1]))

    @property
    def points(self) -> list[Point]:
        return [Point(float(x), float(y)) for x, y in self.coords]

    def __repr__(self):
        return f"NetworkInstance(n={self.n}, seed={self.seed})"

    def to_csv(self, path) -> None:
        """Write ``node_id,x,y`` rows, coordinates with 12 significant digits."""
        with open(path, "w", newline="") as fh:
            fh.write("node_id,x,y\n")
            for i, (x, y) in enumerate(self.coords):
                fh.write(f"{i},{x:.12g},{y:.12g}\n")

    @classmethod
    def from_csv(cls, path, seed: int = 0) -> "NetworkInstance":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        order = np.argsort(data[:, 0])
        coords = np.ascontiguousarray(data[order, 1:3])
        return cls(len(coords), seed, coords)


def generate_network(n: int, seed: int) -> NetworkInstance:
    """Draw n uniform points on the unit square, deterministic in (n, seed)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    coords = rng.random((n, 2))
    return NetworkInstance(n, seed, coords)


def distance(p: Point, q: Point) -> float:
    """Euclidean distance between two points."""
    return math.hypot(p.x - q.x, p.y - q.y)


def connectivity_range(n: int, c: float = 1.0) -> float:
    """Range ``c * sqrt(ln n / n)`` at which the network is connected w.h.p.

    The logarithm is natural; any base only changes the constant.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    return c * math.sqrt(math.log(n) / n)


def _as_coords(points) -> np.ndarray:
    if isinstance(points, np.ndarray):
        return np.atleast_2d(points).astype(float)
    return np.array([(p.x, p.y) for p in points], dtype=float).reshape(-1, 2)


def nodes_in_disk(net: NetworkInstance, center: Point, radius: float) -> set[NodeId]:
    """Ids of all nodes within ``radius`` of ``center``.

    The disk is implicitly clipped by the unit square: nodes only exist
    inside [0,1]^2, so a center near the border simply captures fewer nodes.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    return set(disk_node_indices(net, center.x, center.y, radius).tolist())


def disk_node_indices(
    net: NetworkInstance, cx: float, cy: float, radius: float
) -> np.ndarray:
    """Array form of :func:`nodes_in_disk` (sorted ascending)."""
    d2 = (net.xs - cx) ** 2 + (net.ys - cy) ** 2
    return np.flatnonzero(d2 <= radius * radius)


def union_of_disks_area(
    centers, radius: float, resolution: int = 1000
) -> float:
    """Raster estimate of the union area of equal disks, clipped to [0,1]^2.

    A ``resolution x resolution`` grid of cell centers samples the square;
    the error is O(1/resolution) per linear dimension of disk boundary.
    """
    if resolution < 100:
        raise ValueError("resolution must be >= 100")
    coords = _as_coords(centers)
    if len(coords) == 0:
        return 0.0
    h = 1.0 / resolution
    covered = np.zeros((resolution, resolution), dtype=bool)
    axis = (np.arange(resolution) + 0.5) * h
    r2 = radius * radius
    for cx, cy in coords:
        i0 = max(0, int((cx - radius) / h))
        i1 = min(resolution, int((cx + radius) / h) + 1)
        j0 = max(0, int((cy - radius) / h))
        j1 = min(resolution, int((cy + radius) / h) + 1)
        if i0 >= i1 or j0 >= j1:
            continue
        dx2 = (axis[i0:i1, None] - cx) ** 2
        dy2 = (axis[None, j0:j1] - cy) ** 2
        covered[i0:i1, j0:j1] |= dx2 + dy2 <= r2
    return float(covered.sum()) * h * h


def spawn_rng(seed: int, *key: int) -> np.random.Generator:
    """Deterministic child generator for (seed, key) -- used by experiment
    sweeps so trial order never affects the stream a trial sees."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))
