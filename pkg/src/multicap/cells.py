"""Cell grid, TDMA slot groups and the disk transmitter/receiver assignment.

The unit square is tiled with square cells of side ``t / sqrt(2)`` so the
cell diagonal equals the transceiver range: any two nodes sharing a cell can
talk.  Cells are grouped into ``L^2`` TDMA slots by their (column, row)
residues mod ``L``; same-slot cells are at least ``L`` cells apart (Chebyshev),
which keeps their transmissions out of each other's guard zones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import SQRT2, NetworkInstance, Point
from .protocol import Link, Mode, TransmissionSet


def compute_L(delta: float) -> int:
    """Minimum same-slot cell separation: ceil(1 + sqrt(2) * (2 + delta))."""
    if delta < 0:
        raise ValueError("delta must be >= 0")
    return math.ceil(1.0 + SQRT2 * (2.0 + delta))


@dataclass(frozen=True)
class CellGrid:
    """Square tiling of [0,1]^2 with cell diagonal equal to ``t``."""

    t: float
    side: float
    cols: int
    rows: int

    @property
    def num_cells(self) -> int:
        return self.cols * self.rows

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        i = min(int(x / self.side), self.cols - 1)
        j = min(int(y / self.side), self.rows - 1)
        return i, j

    def index_of(self, i: int, j: int) -> int:
        return j * self.cols + i

    def coords_of(self, idx: int) -> tuple[int, int]:
        return idx % self.cols, idx // self.cols

    def center(self, i: int, j: int) -> Point:
        return Point((i + 0.5) * self.side, (j + 0.5) * self.side)

    def cell_index_array(self, net: NetworkInstance) -> np.ndarray:
        """Cell index of every node."""
        ii = np.minimum((net.xs / self.side).astype(np.int64), self.cols - 1)
        jj = np.minimum((net.ys / self.side).astype(np.int64), self.rows - 1)
        return jj * self.cols + ii


def build_grid(t: float) -> CellGrid:
    if not 0.0 < t <= SQRT2:
        raise ValueError(f"t must be in (0, sqrt(2)], got {t}")
    side = t / SQRT2
    cols = math.ceil(1.0 / side)
    return CellGrid(t=t, side=side, cols=cols, rows=cols)


@dataclass(frozen=True)
class TdmaSchedule:
    grid: CellGrid
    L: int

    @property
    def num_slots(self) -> int:
        return self.L * self.L

    def slot_of(self, i: int, j: int) -> int:
        return (i % self.L) * self.L + (j % self.L)

    def cells_in_slot(self, slot: int) -> list[tuple[int, int]]:
        ri, rj = divmod(slot, self.L)
        return [
            (i, j)
            for j in range(rj, self.grid.rows, self.L)
            for i in range(ri, self.grid.cols, self.L)
        ]

    def slot_index_array(self) -> np.ndarray:
        """Slot of every cell, indexed like ``CellGrid.index_of``."""
        cols, rows, L = self.grid.cols, self.grid.rows, self.L
        ii = np.arange(cols)[None, :] % L
        jj = np.arange(rows)[:, None] % L
        return (ii * L + jj).reshape(-1)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("cell_i,cell_j,slot\n")
            for j in range(self.grid.rows):
                for i in range(self.grid.cols):
                    fh.write(f"{i},{j},{self.slot_of(i, j)}\n")


def build_schedule(grid: CellGrid, delta: float) -> TdmaSchedule:
    return TdmaSchedule(grid=grid, L=compute_L(delta))


@dataclass
class CellGraph:
    """Graph over occupied cells; edges join cells holding nodes within t."""

    grid: CellGrid
    vertices: set = field(default_factory=set)  # occupied cell indices
    adjacency: dict = field(default_factory=dict)  # cell index -> set of cells

    @property
    def edges(self) -> set:
        return {
            (a, b) for a, nbrs in self.adjacency.items() for b in nbrs if a < b
        }

    def connected(self) -> bool:
        if not self.vertices:
            return True
        seen = set()
        stack = [next(iter(self.vertices))]
        while stack:
            c = stack.pop()
            if c in seen:
                continue
            seen.add(c)
            stack.extend(self.adjacency.get(c, ()) - seen)
        return seen == self.vertices


def build_cell_graph(
    net: NetworkInstance, grid: CellGrid, t: float | None = None
) -> CellGraph:
    """Connect occupied cells whose closest node pair is within ``t``."""
    if t is None:
        t = grid.t
    cell_idx = grid.cell_index_array(net)
    occupied = {}
    for node, c in enumerate(cell_idx):
        occupied.setdefault(int(c), []).append(node)

    graph = CellGraph(grid=grid, vertices=set(occupied))
    graph.adjacency = {c: set() for c in occupied}
    # Nodes within t can span at most 2 cells per axis (t = side * sqrt(2)).
    reach = 2
    coords = net.coords
    for c, nodes_c in occupied.items():
        ci, cj = grid.coords_of(c)
        pc = coords[nodes_c]
        for dj in range(-reach, reach + 1):
            for di in range(-reach, reach + 1):
                ni, nj = ci + di, cj + dj
                if not (0 <= ni < grid.cols and 0 <= nj < grid.rows):
                    continue
                d = grid.index_of(ni, nj)
                if d <= c or d not in occupied:
                    continue
                pd = coords[occupied[d]]
                dx = pc[:, 0][:, None] - pd[:, 0][None, :]
                dy = pc[:, 1][:, None] - pd[:, 1][None, :]
                if np.any(dx * dx + dy * dy <= t * t):
                    graph.adjacency[c].add(d)
                    graph.adjacency[d].add(c)
    return graph


def disk_bipartite_assignment(
    net: NetworkInstance, center: Point, t: float, delta: float = 0.0
) -> TransmissionSet:
    """Complete bipartite MPT_MPR set inside the disk of radius t/2.

    Nodes in the disk are split by the vertical line through the center:
    left of the line (ties included) transmit, right of it receive, and every
    transmitter is linked to every receiver.  All pairs are within ``t`` by
    the triangle inequality.  Near a border the disk is simply clipped.
    """
    ids = np.flatnonzero(
        (net.xs - center.x) ** 2 + (net.ys - center.y) ** 2 <= (t / 2.0) ** 2
    )
    txs = [int(i) for i in ids if net.xs[i] <= center.x]
    rxs = [int(i) for i in ids if net.xs[i] > center.x]
    if not txs or not rxs:
        return TransmissionSet(frozenset(), Mode.MPT_MPR, t, delta)
    links = frozenset(Link(a, b) for a in txs for b in rxs)
    return TransmissionSet(links, Mode.MPT_MPR, t, delta)


def slot_link_counts(
    net: NetworkInstance, t: float, delta: float
) -> tuple[list[int], dict[int, list[int]]]:
    """Per-slot total link counts and per-disk counts of the TDMA scheme.

    One transceiver disk of radius t/2 sits at each active cell's center;
    its bipartite assignment contributes its link count to the slot total.

    Returns ``(totals, per_disk)`` where ``totals[slot]`` is the slot's total
    and ``per_disk[slot]`` lists individual disk counts (same cell order as
    ``TdmaSchedule.cells_in_slot``).
    """
    grid = build_grid(t)
    schedule = build_schedule(grid, delta)
    cell_idx = grid.cell_index_array(net)
    occupied = set(int(c) for c in np.unique(cell_idx))

    totals = []
    per_disk = {}
    for slot in range(schedule.num_slots):
        counts = []
        for i, j in schedule.cells_in_slot(slot):
            if grid.index_of(i, j) not in occupied:
                continue
            ts = disk_bipartite_assignment(net, grid.center(i, j), t, delta)
            counts.append(len(ts))
        per_disk[slot] = counts
        totals.append(sum(counts))
    return totals, per_disk


def count_simultaneous_links(net: NetworkInstance, t: float, delta: float) -> int:
    """Best per-slot simultaneous link count achieved by the TDMA scheme."""
    totals, _ = slot_link_counts(net, t, delta)
    return max(totals)


def expected_disk_links(n: int, t: float) -> float:
    """Binomial-oracle mean of one interior disk's bipartite link count.

    Each half of the t/2-disk holds ``n * pi * t^2 / 8`` nodes on average and
    the two halves are nearly independent, so the expected number of
    transmitter-receiver pairs is the product of the two means.
    """
    half = n * math.pi * t * t / 8.0
    return half * half


def link_sweep_to_csv(path, rows) -> None:
    """Write ``n,t,delta,slot,links`` rows."""
    with open(path, "w", newline="") as fh:
        fh.write("n,t,delta,slot,links\n")
        for n, t, delta, slot, links in rows:
            fh.write(f"{n},{t:.12g},{delta:.12g},{slot},{links}\n")
