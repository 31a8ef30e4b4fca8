"""Bisection-cut machinery: multicast-to-unicast reduction, opposite-side
session counting, and per-mode greedy witnesses for the crossing capacity.

The cut constructions tile the cut line at a pitch of ``(3 + delta) * t``
(one extra range of slack over the receiver separation used by the TDMA
argument) so the greedily placed groups are provably non-interfering; every
returned set is validated with :func:`multicap.protocol.is_feasible`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import NetworkInstance
from .protocol import Link, Mode, TransmissionSet, is_feasible


@dataclass(frozen=True)
class Cut:
    """Axis-aligned bisection of the unit square into R and its complement."""

    axis: str = "vertical"
    position: float = 0.5

    def __post_init__(self):
        if self.axis not in ("vertical", "horizontal"):
            raise ValueError("axis must be 'vertical' or 'horizontal'")
        if not 0.25 <= self.position <= 0.75:
            raise ValueError("cut position must lie in [0.25, 0.75]")

    def in_region(self, x: float, y: float) -> bool:
        """True for the lower/left region R."""
        coord = x if self.axis == "vertical" else y
        return coord < self.position

    def side_array(self, net: NetworkInstance) -> np.ndarray:
        coords = net.xs if self.axis == "vertical" else net.ys
        return coords < self.position


@dataclass
class UnicastReduction:
    """One (source, chosen destination) pair per multicast session."""

    pairs: list

    def __len__(self):
        return len(self.pairs)


def reduce_to_unicast(sessions, net: NetworkInstance, cut: Cut) -> UnicastReduction:
    """Pick per session a destination across the cut when one exists.

    Sessions whose source and some destination straddle the cut take the
    lowest-id such destination; the rest fall back to their first listed
    destination.
    """
    side = cut.side_array(net)
    pairs = []
    for sess in sessions:
        src_side = side[sess.source]
        across = sorted(d for d in sess.destinations if side[d] != src_side)
        pick = across[0] if across else sess.destinations[0]
        pairs.append((sess.source, pick))
    return UnicastReduction(pairs)


def count_property_p(sessions, net: NetworkInstance, cut: Cut) -> int:
    """Sessions whose source and at least one destination straddle the cut."""
    side = cut.side_array(net)
    return sum(
        1
        for sess in sessions
        if any(side[d] != side[sess.source] for d in sess.destinations)
    )


def property_p_fraction(n: int, m: int, seed: int, cut: Cut | None = None) -> float:
    """Fraction of straddling sessions in a fresh random instance."""
    from .capacity import SimConfig, make_sessions

    if cut is None:
        cut = Cut()
    net, sessions = make_sessions(SimConfig(n=n, t=0.1, m=m, seed=seed))
    return count_property_p(sessions, net, cut) / len(sessions)


def _cut_coords(net: NetworkInstance, cut: Cut):
    """Rotate coordinates so the cut is vertical at x = position."""
    if cut.axis == "vertical":
        return net.xs, net.ys
    return net.ys, net.xs


def cut_transmission_set(
    net: NetworkInstance, cut: Cut, mode: Mode, t: float, delta: float = 0.0
) -> TransmissionSet:
    """Greedy feasible witness of simultaneous transmissions across the cut.

    The cut line is tiled into segments of pitch ``(3 + delta) * t``; each
    segment contributes one crossing pair (PTP), one hub receiving from or
    transmitting to every counterpart within range (MPR / MPT), or the full
    bipartite exchange of the disk of radius t/2 straddling the cut
    (MPT_MPR).
    """
    u, v = _cut_coords(net, cut)
    p = cut.position
    pitch = (3.0 + delta) * t
    num_seg = max(1, int(1.0 / pitch))
    links = []

    for k in range(num_seg):
        vc = (k + 0.5) * pitch
        if mode is Mode.PTP:
            # receiver just right of the line, transmitter within t on the left
            right = np.flatnonzero(
                (u >= p) & (u <= p + t / 2) & (np.abs(v - vc) <= t / 4)
            )
            if len(right) == 0:
                continue
            rx = int(right[np.argmin(u[right])])
            left = np.flatnonzero(
                (u < p)
                & ((u - u[rx]) ** 2 + (v - v[rx]) ** 2 <= t * t)
                & (np.abs(v - vc) <= t / 4)
            )
            if len(left) == 0:
                continue
            d2 = (u[left] - u[rx]) ** 2 + (v[left] - v[rx]) ** 2
            tx = int(left[np.argmin(d2)])
            links.append(Link(tx, rx))
        elif mode in (Mode.MPR, Mode.MPT):
            # hub on the receiving (transmitting) side close to the line
            hub_right = mode is Mode.MPR
            hub_cand = np.flatnonzero(
                ((u >= p) if hub_right else (u < p))
                & (np.abs(u - p) <= t / 4)
                & (np.abs(v - vc) <= t / 4)
            )
            if len(hub_cand) == 0:
                continue
            hub = int(hub_cand[np.argmin(np.abs(u[hub_cand] - p))])
            others = np.flatnonzero(
                ((u < p) if hub_right else (u >= p))
                & ((u - u[hub]) ** 2 + (v - v[hub]) ** 2 <= t * t)
            )
            for o in others:
                links.append(
                    Link(int(o), hub) if hub_right else Link(hub, int(o))
                )
        else:  # MPT_MPR: bipartite block of the disk centered on the cut
            d2 = (u - p) ** 2 + (v - vc) ** 2
            in_disk = np.flatnonzero(d2 <= (t / 2.0) ** 2)
            txs = [int(i) for i in in_disk if u[i] < p]
            rxs = [int(i) for i in in_disk if u[i] >= p]
            links.extend(Link(a, b) for a in txs for b in rxs)

    ts = TransmissionSet(frozenset(links), mode, t, delta)
    if not is_feasible(ts, net):
        raise AssertionError("cut construction produced an infeasible set")
    return ts


def cut_capacity(
    net: NetworkInstance, cut: Cut, mode: Mode, t: float, delta: float = 0.0
) -> int:
    """Link count of the greedy feasible cut-crossing witness."""
    return len(cut_transmission_set(net, cut, mode, t, delta))


def nc_upper_bound_rate(mode: Mode, n: int, t: float) -> float:
    """Cut capacity order divided by the Theta(n) straddling sessions."""
    if mode is Mode.PTP:
        return 1.0 / (n * t)
    if mode in (Mode.MPT, Mode.MPR):
        return t
    return n * t ** 3


def cut_sweep_to_csv(path, rows) -> None:
    """Write ``mode,n,t,cut_axis,cut_pos,links`` rows."""
    with open(path, "w", newline="") as fh:
        fh.write("mode,n,t,cut_axis,cut_pos,links\n")
        for mode, n, t, axis, pos, count in rows:
            fh.write(f"{mode.value},{n},{t:.12g},{axis},{pos:.12g},{count}\n")


def property_p_to_csv(path, rows) -> None:
    """Write ``n,m,seed,fraction`` rows."""
    with open(path, "w", newline="") as fh:
        fh.write("n,m,seed,fraction\n")
        for n, m, seed, frac in rows:
            fh.write(f"{n},{m},{seed},{frac:.12g}\n")
