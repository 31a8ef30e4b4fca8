"""Array-level state shared by the compiled and pure-Python slot engines.

Everything the per-slot loop touches is flattened into numpy arrays here so
the two backends can run the identical algorithm over identical memory.
Queue entries are packed as ``packet_id * 2**20 + tree_node_index``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..cells import CellGrid, TdmaSchedule
from ..geometry import NetworkInstance
from ..protocol import Mode

ENTRY_SHIFT = 20  # tree-node index occupies the low 20 bits of an entry

MODE_CODE = {Mode.PTP: 0, Mode.MPT: 1, Mode.MPR: 2, Mode.MPT_MPR: 3}


def cell_budget(mode: Mode, n: int, t: float) -> int:
    """Per-activation transmission budget of one cell of the TDMA scheme.

    The budgets mirror what each mode's disk construction can carry: a single
    pair for point-to-point, one transmitter (receiver) fanning out over the
    ~pi*n*t^2 nodes in range for MPT (MPR), and the two-sided bipartite block
    of the t/2-disk, ~pi^2*n^2*t^4/16 pairs, when both are combined.
    """
    if mode is Mode.PTP:
        return 1
    fan = max(1, math.ceil(math.pi * n * t * t))
    if mode in (Mode.MPT, Mode.MPR):
        return fan
    return max(fan, math.ceil(math.pi ** 2 * n * n * t ** 4 / 16.0))


@dataclass
class EngineState:
    # immutable model
    mode_code: int
    t: float
    delta: float
    budget: int
    window: int
    xs: np.ndarray  # float64[n]
    ys: np.ndarray
    cell_start: np.ndarray  # int64[num_cells + 1]
    cell_nodes: np.ndarray  # int64[n], ascending node ids per cell
    center_x: np.ndarray  # float64[num_cells]
    center_y: np.ndarray
    slot_ptr: np.ndarray  # int64[num_slots + 1]
    slot_cells: np.ndarray  # int64, occupied active cells per slot, ascending
    num_slots: int
    # trees (per session, CSR)
    tree_ptr: np.ndarray  # int64[S + 1]
    tn_cell: np.ndarray  # int32[total], cell index of each tree node
    tn_parent: np.ndarray  # int32[total], local parent index, -1 = root
    tn_forced_rx: np.ndarray  # int32[total], destination node id or -1
    tn_child_ptr: np.ndarray  # int64[total + 1]
    tn_child: np.ndarray  # int32[total edges], local child indices
    sess_source: np.ndarray  # int32[S]
    sess_m: np.ndarray  # int32[S]
    # mutable simulation state
    holder: np.ndarray  # int32[sum over packets of tree size]
    pkt_state_ptr: np.ndarray  # int64[P + 1]
    remaining: np.ndarray  # int32[P]
    queues: list  # per cell: list of packed entries
    deliveries: np.ndarray  # int64[S], total
    deliveries_window: np.ndarray  # int64[S]
    injected: np.ndarray  # int64[S]
    transmissions: int = 0
    reholds: int = 0
    slots_run: int = 0

    @property
    def num_sessions(self) -> int:
        return len(self.sess_source)

    @property
    def num_packets(self) -> int:
        return len(self.remaining)


def build_engine_state(
    net: NetworkInstance,
    grid: CellGrid,
    schedule: TdmaSchedule,
    trees,
    mode: Mode,
    delta: float = 0.0,
    window: int = 1,
    budget: int | None = None,
) -> EngineState:
    """Flatten routing trees and the TDMA layout into an EngineState and
    inject ``window`` outstanding packets per session."""
    n = net.n
    cell_idx = grid.cell_index_array(net)
    order = np.lexsort((np.arange(n), cell_idx))
    cell_nodes = order.astype(np.int64)
    cell_start = np.searchsorted(
        cell_idx[order], np.arange(grid.num_cells + 1)
    ).astype(np.int64)

    ii = np.arange(grid.cols)
    cx = (ii + 0.5) * grid.side
    center_x = np.tile(cx, grid.rows)
    center_y = np.repeat((np.arange(grid.rows) + 0.5) * grid.side, grid.cols)

    slot_of = schedule.slot_index_array()
    occupied = cell_start[1:] > cell_start[:-1]
    lists = [[] for _ in range(schedule.num_slots)]
    for c in np.flatnonzero(occupied):
        lists[slot_of[c]].append(int(c))
    slot_ptr = np.zeros(schedule.num_slots + 1, dtype=np.int64)
    for s, cs in enumerate(lists):
        slot_ptr[s + 1] = slot_ptr[s] + len(cs)
    slot_cells = np.array(
        [c for cs in lists for c in cs], dtype=np.int64
    )

    S = len(trees)
    tree_ptr = np.zeros(S + 1, dtype=np.int64)
    for i, tr in enumerate(trees):
        tree_ptr[i + 1] = tree_ptr[i] + len(tr.cell)
    total = int(tree_ptr[-1])
    tn_cell = np.empty(total, dtype=np.int32)
    tn_parent = np.empty(total, dtype=np.int32)
    tn_forced = np.empty(total, dtype=np.int32)
    child_counts = np.zeros(total, dtype=np.int64)
    sess_source = np.empty(S, dtype=np.int32)
    sess_m = np.empty(S, dtype=np.int32)
    for i, tr in enumerate(trees):
        base = int(tree_ptr[i])
        sess_source[i] = tr.session.source
        sess_m[i] = tr.session.m
        for k in range(len(tr.cell)):
            tn_cell[base + k] = tr.cell[k]
            tn_parent[base + k] = tr.parent[k]
            tn_forced[base + k] = (
                tr.relay_node[k] if tr.is_dest[k] else -1
            )
            if tr.parent[k] >= 0:
                child_counts[base + tr.parent[k]] += 1
    tn_child_ptr = np.zeros(total + 1, dtype=np.int64)
    np.cumsum(child_counts, out=tn_child_ptr[1:])
    tn_child = np.empty(int(tn_child_ptr[-1]), dtype=np.int32)
    fill = tn_child_ptr[:-1].copy()
    for i, tr in enumerate(trees):
        base = int(tree_ptr[i])
        for k in range(len(tr.cell)):  # ascending k keeps child order stable
            p = tr.parent[k]
            if p >= 0:
                tn_child[fill[base + p]] = k
                fill[base + p] += 1

    P = S * max(1, window)
    window = max(1, window)
    sizes = np.diff(tree_ptr)
    pkt_state_ptr = np.zeros(P + 1, dtype=np.int64)
    for p in range(P):
        pkt_state_ptr[p + 1] = pkt_state_ptr[p] + sizes[p // window]
    holder = np.full(int(pkt_state_ptr[-1]), -1, dtype=np.int32)
    remaining = np.empty(P, dtype=np.int32)

    queues = [[] for _ in range(grid.num_cells)]
    injected = np.zeros(S, dtype=np.int64)
    for p in range(P):
        s = p // window
        base = int(tree_ptr[s])
        holder[pkt_state_ptr[p]] = sess_source[s]
        remaining[p] = sess_m[s]
        injected[s] += 1
        root_cell = int(tn_cell[base])
        for e in range(int(tn_child_ptr[base]), int(tn_child_ptr[base + 1])):
            queues[root_cell].append((p << ENTRY_SHIFT) | int(tn_child[e]))

    if budget is None:
        budget = cell_budget(mode, n, grid.t)

    return EngineState(
        mode_code=MODE_CODE[mode],
        t=grid.t,
        delta=float(delta),
        budget=int(budget),
        window=window,
        xs=np.ascontiguousarray(net.xs),
        ys=np.ascontiguousarray(net.ys),
        cell_start=cell_start,
        cell_nodes=cell_nodes,
        center_x=center_x,
        center_y=center_y,
        slot_ptr=slot_ptr,
        slot_cells=slot_cells,
        num_slots=schedule.num_slots,
        tree_ptr=tree_ptr,
        tn_cell=tn_cell,
        tn_parent=tn_parent,
        tn_forced_rx=tn_forced,
        tn_child_ptr=tn_child_ptr,
        tn_child=tn_child,
        sess_source=sess_source,
        sess_m=sess_m,
        holder=holder,
        pkt_state_ptr=pkt_state_ptr,
        remaining=remaining,
        queues=queues,
        deliveries=np.zeros(S, dtype=np.int64),
        deliveries_window=np.zeros(S, dtype=np.int64),
        injected=injected,
    )
