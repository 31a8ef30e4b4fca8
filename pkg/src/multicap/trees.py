"""Euclidean MSTs, cell-routed multicast trees, cell counts and tree areas.

A multicast session is routed in two stages: an exact EMST over the session's
own nodes fixes the shape, then each EMST edge is realized as a staircase of
grid cells with one relay node per cell.  Relays hand over along hops of
length at most ``t`` (the cell diagonal), matching the transceiver range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cells import CellGraph, CellGrid
from .geometry import NetworkInstance, Point, union_of_disks_area
from .scaling import ScalingResult, aggregate_trials


class RouteError(RuntimeError):
    """A session could not be routed over the occupied cells."""

    def __init__(self, message, session=None):
        super().__init__(message)
        self.session = session


@dataclass(frozen=True)
class MulticastSession:
    source: int
    destinations: tuple

    def __post_init__(self):
        object.__setattr__(self, "destinations", tuple(self.destinations))
        ids = {self.source, *self.destinations}
        if len(ids) != 1 + len(self.destinations) or not self.destinations:
            raise ValueError("source and destinations must be distinct, m >= 1")

    @property
    def m(self) -> int:
        return len(self.destinations)


@dataclass
class EuclideanTree:
    vertices: np.ndarray  # (k, 2) coordinates
    edges: list  # (i, j) vertex index pairs
    total_length: float


def emst(points) -> EuclideanTree:
    """Exact Euclidean minimum spanning tree (Prim, O(k^2))."""
    if isinstance(points, np.ndarray):
        coords = points.astype(float).reshape(-1, 2)
    else:
        coords = np.array([(p.x, p.y) for p in points], dtype=float).reshape(-1, 2)
    k = len(coords)
    if k == 0:
        raise ValueError("need at least one point")
    if k == 1:
        return EuclideanTree(coords, [], 0.0)

    dist = np.hypot(
        coords[:, 0][:, None] - coords[:, 0][None, :],
        coords[:, 1][:, None] - coords[:, 1][None, :],
    )
    in_tree = np.zeros(k, dtype=bool)
    in_tree[0] = True
    best = dist[0].copy()
    best_from = np.zeros(k, dtype=np.int64)
    edges = []
    total = 0.0
    for _ in range(k - 1):
        masked = np.where(in_tree, np.inf, best)
        j = int(np.argmin(masked))
        edges.append((int(best_from[j]), j))
        total += float(best[j])
        in_tree[j] = True
        closer = dist[j] < best
        best_from[closer] = j
        best = np.minimum(best, dist[j])
    return EuclideanTree(coords, edges, total)


def emst_scaling_study(m_values, trials: int, seed: int) -> ScalingResult:
    """Mean EMST length of m uniform points, fitted log-log against m."""
    if trials < 30:
        raise ValueError("trials must be >= 30")
    samples = []
    for pi, m in enumerate(m_values):
        if m < 2:
            raise ValueError("each m must be >= 2")
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(pi,)))
        samples.append([emst(rng.random((m, 2))).total_length for _ in range(trials)])
    return aggregate_trials(list(m_values), samples)


@dataclass
class RoutingTree:
    """Cell-routed tree spanning a session.

    Tree node 0 is the source; inner nodes are relays (one per traversed
    cell); destination leaves carry the destination node itself.  ``parent``
    uses tree-node indices; ``relay_node`` maps tree nodes to network nodes.
    """

    session: MulticastSession
    cell: list  # cell index per tree node
    parent: list  # parent tree-node index (-1 for root)
    relay_node: list  # network node id per tree node
    is_dest: list  # True for destination leaves

    @property
    def relay_cells(self) -> list:
        return [c for c, d in zip(self.cell, self.is_dest) if not d]

    def children(self) -> list:
        kids = [[] for _ in self.cell]
        for idx, p in enumerate(self.parent):
            if p >= 0:
                kids[p].append(idx)
        return kids

    def edges(self) -> list:
        """(tree node u, tree node v) pairs, parent first."""
        return [(p, i) for i, p in enumerate(self.parent) if p >= 0]

    def edge_lengths(self, net: NetworkInstance) -> list:
        out = []
        for p, i in self.edges():
            a, b = self.relay_node[p], self.relay_node[i]
            out.append(float(np.hypot(*(net.coords[a] - net.coords[b]))))
        return out

    def to_csv(self, path, net: NetworkInstance) -> None:
        """Write edges as ``edge_src_x,edge_src_y,edge_dst_x,edge_dst_y,kind``
        where kind describes the edge's destination endpoint."""
        with open(path, "w", newline="") as fh:
            fh.write("edge_src_x,edge_src_y,edge_dst_x,edge_dst_y,kind\n")
            for p, i in self.edges():
                ax, ay = net.coords[self.relay_node[p]]
                bx, by = net.coords[self.relay_node[i]]
                kind = "dest" if self.is_dest[i] else "relay"
                fh.write(f"{ax:.12g},{ay:.12g},{bx:.12g},{by:.12g},{kind}\n")


class _CellBuckets:
    """Node ids per cell, sorted ascending, with per-cell coordinate slices."""

    def __init__(self, net: NetworkInstance, grid: CellGrid):
        idx = grid.cell_index_array(net)
        order = np.lexsort((np.arange(net.n), idx))
        self.sorted_nodes = order.astype(np.int64)
        self.cell_start = np.searchsorted(
            idx[order], np.arange(grid.num_cells + 1)
        )
        self.net = net

    def nodes(self, cell_idx: int) -> np.ndarray:
        return self.sorted_nodes[
            self.cell_start[cell_idx] : self.cell_start[cell_idx + 1]
        ]


def _staircase(grid: CellGrid, a: int, b: int) -> list:
    """Axis-adjacent cell path from cell a to cell b along the straight line."""
    ai, aj = grid.coords_of(a)
    bi, bj = grid.coords_of(b)
    path = [a]
    i, j = ai, aj
    while (i, j) != (bi, bj):
        di, dj = bi - i, bj - j
        if abs(di) >= abs(dj):
            i += 1 if di > 0 else -1
        else:
            j += 1 if dj > 0 else -1
        path.append(grid.index_of(i, j))
    return path


def _bfs_cell_path(cell_graph: CellGraph, a: int, b: int) -> list | None:
    if a == b:
        return [a]
    prev = {a: -1}
    frontier = [a]
    while frontier:
        nxt = []
        for c in frontier:
            for d in sorted(cell_graph.adjacency.get(c, ())):
                if d not in prev:
                    prev[d] = c
                    if d == b:
                        path = [b]
                        while path[-1] != a:
                            path.append(prev[path[-1]])
                        return path[::-1]
                    nxt.append(d)
        frontier = nxt
    return None


def route_session(
    session: MulticastSession,
    net: NetworkInstance,
    grid: CellGrid,
    cell_graph: CellGraph,
    buckets: _CellBuckets | None = None,
) -> RoutingTree:
    """Route a session: EMST over its nodes, then staircase cell paths.

    Each EMST edge becomes a run of cells; empty cells are skipped when the
    relay chain can bridge them within ``t``, otherwise the edge falls back
    to a breadth-first path over the occupied cell graph.  Relays are chosen
    nearest to the previous relay (ties to the lowest node id) so every hop
    stays within range.  Raises :class:`RouteError` when no hop sequence
    within ``t`` exists.
    """
    if buckets is None:
        buckets = _CellBuckets(net, grid)
    t = grid.t
    members = [session.source, *session.destinations]
    tree_order = emst(net.coords[members])

    # Orient EMST edges away from the source (vertex 0).
    adj = [[] for _ in members]
    for u, v in tree_order.edges:
        adj[u].append(v)
        adj[v].append(u)
    order = []
    seen = {0}
    stack = [0]
    while stack:
        u = stack.pop()
        for v in sorted(adj[u]):
            if v not in seen:
                seen.add(v)
                order.append((u, v))
                stack.append(v)

    cell_idx_of = grid.cell_index_array(net)
    src_cell = int(cell_idx_of[session.source])
    cell_list = [src_cell]
    parent = [-1]
    relay = [session.source]
    is_dest = [False]
    tree_node_of_cell = {src_cell: 0}
    # tree node each session member ended up at (members[0] == source)
    member_tnode = {0: 0}

    def hop_relay(from_node: int, cell_idx: int) -> int | None:
        cand = buckets.nodes(cell_idx)
        if len(cand) == 0:
            return None
        d2 = (
            (net.xs[cand] - net.xs[from_node]) ** 2
            + (net.ys[cand] - net.ys[from_node]) ** 2
        )
        k = int(np.argmin(d2))
        if d2[k] > t * t:
            return None
        return int(cand[k])

    def bridge_pair(cell_a: int, cell_b: int):
        """Closest node pair spanning two cells, or None if it exceeds t."""
        ca = buckets.nodes(cell_a)
        cb = buckets.nodes(cell_b)
        if len(ca) == 0 or len(cb) == 0:
            return None
        d2 = (net.xs[ca][:, None] - net.xs[cb][None, :]) ** 2 + (
            net.ys[ca][:, None] - net.ys[cb][None, :]
        ) ** 2
        k = int(np.argmin(d2))
        if d2.flat[k] > t * t:
            return None
        return int(ca[k // len(cb)]), int(cb[k % len(cb)])

    def add_node(c: int, par: int, node: int, dest: bool = False) -> int:
        cell_list.append(c)
        parent.append(par)
        relay.append(node)
        is_dest.append(dest)
        return len(cell_list) - 1

    def attach_path(u_member: int, cells: list) -> int:
        """Walk ``cells`` from the member's tree node, adding relays.

        If the current relay cannot reach any node of the next cell, an
        intra-cell handoff to the endpoint of the cells' closest spanning
        pair bridges the gap (that pair is within t whenever the cell graph
        has the edge)."""
        cur = member_tnode[u_member]
        for c in cells[1:]:
            if c in tree_node_of_cell:
                cur = tree_node_of_cell[c]
                continue
            here = cell_list[cur]
            nxt = hop_relay(relay[cur], c)
            if nxt is None:
                pair = bridge_pair(here, c)
                if pair is None:
                    return -1
                a, b = pair
                if a != relay[cur]:
                    cur = add_node(here, cur, a)
                nxt = b
            tree_node_of_cell[c] = add_node(c, cur, nxt)
            cur = tree_node_of_cell[c]
        return cur

    for u, v in order:
        cv = int(cell_idx_of[members[v]])
        # Primary: staircase between the endpoints' cells, skipping cells
        # that are empty but bridgeable.
        path = _staircase(grid, int(cell_list[member_tnode[u]]), cv)
        pruned = [path[0]]
        for c in path[1:]:
            if len(buckets.nodes(c)) == 0 and c != cv:
                continue
            pruned.append(c)
        end = attach_path(u, pruned)
        if end < 0:
            bfs = _bfs_cell_path(
                cell_graph, int(cell_list[member_tnode[u]]), cv
            )
            if bfs is None:
                raise RouteError(
                    f"no occupied cell path to destination {members[v]}",
                    session=session,
                )
            end = attach_path(u, bfs)
            if end < 0:
                raise RouteError(
                    f"no hop chain within range toward {members[v]}",
                    session=session,
                )
        member_tnode[v] = end

    # Attach destination leaves to their cells' tree nodes.
    for k, dest in enumerate(session.destinations, start=1):
        at = member_tnode[k]
        cell_list.append(int(cell_idx_of[dest]))
        parent.append(at)
        relay.append(dest)
        is_dest.append(True)

    tree = RoutingTree(session, cell_list, parent, relay, is_dest)
    for (p, i), length in zip(tree.edges(), tree.edge_lengths(net)):
        if length > t * (1 + 1e-12) and tree.relay_node[p] != tree.relay_node[i]:
            raise RouteError(
                f"hop longer than range: {length:.4f} > {t:.4f}", session=session
            )
    return tree


def memtc_count(tree: RoutingTree, grid: CellGrid) -> int:
    """Number of distinct cells touched by the tree's vertices."""
    return len(set(tree.cell))


def mamt_area(
    tree: RoutingTree, net: NetworkInstance, t: float, resolution: int = 400
) -> float:
    """Union area of radius-t disks around the source and relays (not the
    destination leaves), clipped to the unit square."""
    nodes = sorted(
        {n for n, d in zip(tree.relay_node, tree.is_dest) if not d}
    )
    return union_of_disks_area(net.coords[nodes], t, resolution)


def greedy_spanning_tree_length(points) -> float:
    """Nearest-neighbor chain spanning tree; its length dominates the EMST."""
    if isinstance(points, np.ndarray):
        coords = points.astype(float).reshape(-1, 2)
    else:
        coords = np.array([(p.x, p.y) for p in points], dtype=float).reshape(-1, 2)
    k = len(coords)
    if k <= 1:
        return 0.0
    last = 0
    out = set(range(1, k))
    total = 0.0
    while out:
        d, j = min(
            (math.hypot(*(coords[j] - coords[last])), j) for j in out
        )
        total += d
        out.remove(j)
        last = j
    return total
