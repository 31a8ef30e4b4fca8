"""Feasibility of simultaneous transmission sets under the protocol model.

Four communication modes are supported:

* ``PTP``     -- plain point-to-point: every node takes part in at most one
  link, and any other active transmitter must stay a guard factor
  ``(1 + delta) * range`` away from each receiver.
* ``MPT``     -- a transmitter may serve many receivers with distinct packets;
  each receiver still decodes a single transmitter.
* ``MPR``     -- dual of MPT: a receiver decodes many transmitters, each
  transmitter sends a single packet.
* ``MPT_MPR`` -- both relaxations combined.

Interference semantics: a receiver must keep unlinked transmitters out of its
guard zone.  For PTP/MPT/MPR the guard zone is the full disk of radius
``(1 + delta) * range``.  For MPT_MPR the receiver can decode (and thereby
cancel) anything inside decode range, so only the open annulus
``(range, (1 + delta) * range)`` hurts: an unlinked transmitter there is too
far to decode but close enough to interfere.  Distances exactly equal to
``range`` are within reach, and exactly ``(1 + delta) * range`` is already
safe.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .geometry import NetworkInstance

BRUTE_MAX_NODES = 12


class Mode(Enum):
    PTP = "PTP"
    MPT = "MPT"
    MPR = "MPR"
    MPT_MPR = "MPT_MPR"


@dataclass(frozen=True, order=True)
class Link:
    tx: int
    rx: int

    def __post_init__(self):
        if self.tx == self.rx:
            raise ValueError("link endpoints must differ")

    def reversed(self) -> "Link":
        return Link(self.rx, self.tx)


@dataclass(frozen=True)
class TransmissionSet:
    links: frozenset
    mode: Mode
    comm_range: float
    delta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "links", frozenset(self.links))
        if self.delta < 0:
            raise ValueError("delta must be >= 0")

    def __len__(self):
        return len(self.links)

    def reversed(self) -> "TransmissionSet":
        dual = {Mode.MPT: Mode.MPR, Mode.MPR: Mode.MPT}.get(self.mode, self.mode)
        return TransmissionSet(
            frozenset(l.reversed() for l in self.links), dual, self.comm_range, self.delta
        )

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(
                f"# mode={self.mode.value} range={self.comm_range:.12g} "
                f"delta={self.delta:.12g}\n"
            )
            fh.write("tx,rx\n")
            for link in sorted(self.links):
                fh.write(f"{link.tx},{link.rx}\n")

    @classmethod
    def from_csv(cls, path) -> "TransmissionSet":
        with open(path) as fh:
            meta = {}
            links = []
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    for tok in line[1:].split():
                        k, _, v = tok.partition("=")
                        meta[k] = v
                elif line != "tx,rx":
                    tx, rx = line.split(",")
                    links.append(Link(int(tx), int(rx)))
        return cls(
            frozenset(links),
            Mode(meta["mode"]),
            float(meta["range"]),
            float(meta.get("delta", 0.0)),
        )


def _check_ids(ts: TransmissionSet, net: NetworkInstance) -> None:
    for link in ts.links:
        if not (0 <= link.tx < net.n and 0 <= link.rx < net.n):
            raise ValueError(f"unknown node id in link {link}")


def is_feasible(ts: TransmissionSet, net: NetworkInstance) -> bool:
    """True iff all links of ``ts`` can fire simultaneously under its mode."""
    _check_ids(ts, net)
    if not ts.links:
        return True
    txs = sorted({l.tx for l in ts.links})
    rxs = sorted({l.rx for l in ts.links})
    if set(txs) & set(rxs):  # half-duplex
        return False

    mode = ts.mode
    if mode is Mode.PTP:
        if len(txs) != len(ts.links) or len(rxs) != len(ts.links):
            return False
    elif mode is Mode.MPT:
        if len(rxs) != len(ts.links):
            return False
    elif mode is Mode.MPR:
        if len(txs) != len(ts.links):
            return False

    coords = net.coords
    tx_pos = coords[txs]
    rx_pos = coords[rxs]
    dist = np.hypot(
        tx_pos[:, 0][:, None] - rx_pos[:, 0][None, :],
        tx_pos[:, 1][:, None] - rx_pos[:, 1][None, :],
    )
    tx_idx = {v: i for i, v in enumerate(txs)}
    rx_idx = {v: i for i, v in enumerate(rxs)}
    linked = np.zeros(dist.shape, dtype=bool)
    for l in ts.links:
        linked[tx_idx[l.tx], rx_idx[l.rx]] = True

    if np.any(dist[linked] > ts.comm_range):
        return False

    guard = (1.0 + ts.delta) * ts.comm_range
    unlinked = ~linked
    if mode is Mode.MPT_MPR:
        bad = unlinked & (dist > ts.comm_range) & (dist < guard)
    else:
        bad = unlinked & (dist < guard)
    return not np.any(bad)


def brute_force_feasible(ts: TransmissionSet, net: NetworkInstance) -> bool:
    """Deliberately naive re-implementation of the feasibility rules.

    Kept free of shared helpers so it can serve as an independent oracle for
    :func:`is_feasible`.
    """
    links = list(ts.links)
    for l in links:
        if not (0 <= l.tx < net.n and 0 <= l.rx < net.n):
            raise ValueError(f"unknown node id in link {l}")
    if not links:
        return True

    def dist(i, j):
        dx = net.coords[i, 0] - net.coords[j, 0]
        dy = net.coords[i, 1] - net.coords[j, 1]
        return (dx * dx + dy * dy) ** 0.5

    transmitters = {l.tx for l in links}
    receivers = {l.rx for l in links}
    for node in transmitters:
        if node in receivers:
            return False

    tx_count = {}
    rx_count = {}
    for l in links:
        tx_count[l.tx] = tx_count.get(l.tx, 0) + 1
        rx_count[l.rx] = rx_count.get(l.rx, 0) + 1
    if ts.mode is Mode.PTP:
        if any(c > 1 for c in tx_count.values()):
            return False
        if any(c > 1 for c in rx_count.values()):
            return False
    if ts.mode is Mode.MPT and any(c > 1 for c in rx_count.values()):
        return False
    if ts.mode is Mode.MPR and any(c > 1 for c in tx_count.values()):
        return False

    for l in links:
        if dist(l.tx, l.rx) > ts.comm_range:
            return False

    pairs = {(l.tx, l.rx) for l in links}
    guard = (1.0 + ts.delta) * ts.comm_range
    for j in receivers:
        for k in transmitters:
            if (k, j) in pairs:
                continue
            d = dist(k, j)
            if ts.mode is Mode.MPT_MPR:
                if ts.comm_range < d < guard:
                    return False
            else:
                if d < guard:
                    return False
    return True


def _max_links_role_scan(net, comm_range, delta):
    """Exhaustive MPT_MPR maximum over every transmitter-set choice.

    For a fixed transmitter set the best receiver set is forced: take every
    other node outside all annuli, linking all in-range pairs.
    """
    n = net.n
    coords = net.coords
    d = np.hypot(
        coords[:, 0][:, None] - coords[:, 0][None, :],
        coords[:, 1][:, None] - coords[:, 1][None, :],
    )
    guard = (1.0 + delta) * comm_range
    in_range = d <= comm_range
    np.fill_diagonal(in_range, False)
    annulus = (d > comm_range) & (d < guard)

    best_links = []
    for mask in range(1, 1 << n):
        A = [i for i in range(n) if mask >> i & 1]
        blocked = np.zeros(n, dtype=bool)
        for a in A:
            blocked |= annulus[a]
        allowed = ~blocked
        allowed[A] = False
        links = [
            Link(a, b) for a in A for b in range(n) if allowed[b] and in_range[a, b]
        ]
        if len(links) > len(best_links):
            best_links = links
    return best_links


def _max_links_dfs(net, mode, comm_range, delta):
    """Depth-first enumeration of feasible link sets (feasibility is
    monotone under subsets, so index-ordered extension visits them all)."""
    n = net.n
    candidates = []
    for i, j in itertools.permutations(range(n), 2):
        dx = net.coords[i, 0] - net.coords[j, 0]
        dy = net.coords[i, 1] - net.coords[j, 1]
        if (dx * dx + dy * dy) ** 0.5 <= comm_range:
            candidates.append(Link(i, j))
    best = []

    def extend(current, start):
        nonlocal best
        if len(current) > len(best):
            best = list(current)
        for idx in range(start, len(candidates)):
            cand = candidates[idx]
            trial = TransmissionSet(
                frozenset(current + [cand]), mode, comm_range, delta
            )
            if brute_force_feasible(trial, net):
                current.append(cand)
                extend(current, idx + 1)
                current.pop()

    extend([], 0)
    return best


def max_feasible_brute(
    net: NetworkInstance, mode: Mode, comm_range: float, delta: float = 0.0
) -> TransmissionSet:
    """Maximum-cardinality feasible set by exhaustive search (n <= 12)."""
    if net.n > BRUTE_MAX_NODES:
        raise ValueError(f"brute-force search limited to n <= {BRUTE_MAX_NODES}")
    if mode is Mode.MPT_MPR:
        links = _max_links_role_scan(net, comm_range, delta)
    else:
        links = _max_links_dfs(net, mode, comm_range, delta)
    return TransmissionSet(frozenset(links), mode, comm_range, delta)


def taa_upper_bound(mode: Mode, n: int, t: float) -> float:
    """Order-level total active area: 1, n*t^2 or n^2*t^4 depending on mode."""
    if mode is Mode.PTP:
        return 1.0
    if mode in (Mode.MPT, Mode.MPR):
        return n * t * t
    return float(n) * n * t ** 4
