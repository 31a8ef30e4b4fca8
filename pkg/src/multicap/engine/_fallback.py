"""Pure-Python slot engine, the reference implementation.

The compiled extension in ``_core.pyx`` runs the same algorithm over the
same arrays; the two must produce bit-identical simulation trajectories.

Per slot, every cell of the active TDMA group scans its FIFO of pending
(packet, tree-edge) entries in order and greedily admits transmissions until
its budget runs out.  Admission enforces half-duplex roles, the per-mode
degree rules, pair uniqueness and (for positive guard factors) the MPT+MPR
annulus rule; cross-group interference is impossible by the L-separation of
the schedule.  Admitted transfers commit together at the end of the slot.
"""

from __future__ import annotations

from .state import ENTRY_SHIFT, EngineState

ROLE_TX = 1
ROLE_RX = 2

# commit kinds
_REACH = 0  # holder[child] = r, possibly a destination
_REHOLD = 1  # holder[parent] moves to a closer node in the same cell


def run_slots(
    state: EngineState,
    num_slots: int,
    measure_start: int,
    measure_end: int,
    record_links: bool = False,
):
    """Advance the simulation ``num_slots`` slots.

    Deliveries committed in slots ``[measure_start, measure_end)`` (indexed
    from this call's first slot) are counted into ``deliveries_window``.
    Returns a list of per-slot link lists when ``record_links`` is set.
    """
    xs = state.xs
    ys = state.ys
    t2 = state.t * state.t
    guard = (1.0 + state.delta) * state.t
    guard2 = guard * guard
    mode = state.mode_code
    budget = state.budget
    window = state.window
    cell_start = state.cell_start
    cell_nodes = state.cell_nodes
    slot_ptr = state.slot_ptr
    slot_cells = state.slot_cells
    tree_ptr = state.tree_ptr
    tn_cell = state.tn_cell
    tn_parent = state.tn_parent
    tn_forced = state.tn_forced_rx
    tn_child_ptr = state.tn_child_ptr
    tn_child = state.tn_child
    sess_source = state.sess_source
    sess_m = state.sess_m
    holder = state.holder
    pkt_ptr = state.pkt_state_ptr
    remaining = state.remaining
    queues = state.queues
    center_x = state.center_x
    center_y = state.center_y

    role = {}  # node -> ROLE_TX / ROLE_RX, cleared per slot
    recorded = [] if record_links else None

    for local_slot in range(num_slots):
        slot = (state.slots_run + local_slot) % state.num_slots
        in_window = measure_start <= local_slot < measure_end
        role.clear()
        commits = []  # (kind, packet, tree node, node id)
        reholding = set()  # (packet, parent tnode) already moved this slot
        slot_links = [] if record_links else None

        for ci in range(int(slot_ptr[slot]), int(slot_ptr[slot + 1])):
            cell = int(slot_cells[ci])
            q = queues[cell]
            if not q:
                continue
            budget_left = budget
            cell_tx = -1  # PTP/MPT: the only transmitter this activation
            cell_rx = -1  # PTP/MPR: the only receiver this activation
            cell_txs = []  # MPT_MPR annulus bookkeeping (delta > 0)
            cell_rxs = []
            kept = []
            pairs = set()

            for qi, entry in enumerate(q):
                if budget_left == 0:
                    kept.extend(q[qi:])
                    break
                p = entry >> ENTRY_SHIFT
                child = entry & ((1 << ENTRY_SHIFT) - 1)
                s = p // window
                base = int(tree_ptr[s])
                parent = int(tn_parent[base + child])
                poff = int(pkt_ptr[p])
                h = int(holder[poff + parent])
                if (p, parent) in reholding:
                    kept.append(entry)
                    continue
                forced = int(tn_forced[base + child])
                if forced >= 0 and h == forced:
                    # the destination already holds the packet upstream
                    commits.append((_REACH, p, child, forced))
                    continue

                # can h transmit at all?
                rh = role.get(h, 0)
                if rh == ROLE_RX or (mode == 0 and rh != 0) or (
                    mode == 2 and rh == ROLE_TX
                ):
                    kept.append(entry)
                    continue
                if mode <= 1 and cell_tx >= 0 and h != cell_tx:
                    kept.append(entry)
                    continue

                hx = xs[h]
                hy = ys[h]
                contended = False  # an in-range receiver was busy this slot

                def in_reach(r):
                    dx = xs[r] - hx
                    dy = ys[r] - hy
                    return dx * dx + dy * dy <= t2

                def rx_free(r):
                    # candidate already known to be in reach
                    nonlocal contended
                    rr = role.get(r, 0)
                    ok = True
                    if rr == ROLE_TX:
                        ok = False
                    elif mode <= 1 and rr == ROLE_RX:
                        ok = False
                    elif mode == 2 and cell_rx >= 0 and r != cell_rx:
                        ok = False
                    elif mode == 3:
                        if ((h << 32) | r) in pairs:
                            ok = False
                        elif state.delta > 0.0:
                            for a in cell_txs:
                                ddx = xs[r] - xs[a]
                                ddy = ys[r] - ys[a]
                                d2 = ddx * ddx + ddy * ddy
                                if t2 < d2 < guard2 and a != h:
                                    ok = False
                                    break
                            if ok:
                                for b in cell_rxs:
                                    ddx = xs[b] - hx
                                    ddy = ys[b] - hy
                                    d2 = ddx * ddx + ddy * ddy
                                    if t2 < d2 < guard2 and b != r:
                                        ok = False
                                        break
                    if not ok:
                        contended = True
                    return ok

                def rx_ok(r):
                    return r != h and in_reach(r) and rx_free(r)

                r_found = -1
                if forced >= 0:
                    if rx_ok(forced):
                        r_found = forced
                else:
                    tcell = int(tn_cell[base + child])
                    lo = int(cell_start[tcell])
                    hi = int(cell_start[tcell + 1])
                    sz = hi - lo
                    if sz > 0:
                        k0 = (p * 2654435761 + child * 97) % sz
                        for off in range(sz):
                            r = int(cell_nodes[lo + (k0 + off) % sz])
                            if rx_ok(r):
                                r_found = r
                                break

                if r_found < 0 and contended:
                    # receivers exist but are busy; retry a later activation
                    kept.append(entry)
                    continue
                if r_found < 0:
                    # geometric dead end: hand the packet to a same-cell node
                    # closer to the target so a later activation can hop
                    if forced >= 0:
                        tx_t, ty_t = xs[forced], ys[forced]
                    else:
                        tcell = int(tn_cell[base + child])
                        tx_t, ty_t = center_x[tcell], center_y[tcell]
                    d_h = (hx - tx_t) ** 2 + (hy - ty_t) ** 2
                    lo = int(cell_start[cell])
                    hi = int(cell_start[cell + 1])
                    best = -1
                    best_d = d_h
                    for k in range(lo, hi):
                        r = int(cell_nodes[k])
                        d_r = (xs[r] - tx_t) ** 2 + (ys[r] - ty_t) ** 2
                        if d_r < best_d and rx_ok(r):
                            best = r
                            best_d = d_r
                    if best >= 0:
                        commits.append((_REHOLD, p, parent, best))
                        reholding.add((p, parent))
                        state.reholds += 1
                        state.transmissions += 1
                        budget_left -= 1
                        role[h] = ROLE_TX
                        role[best] = ROLE_RX
                        if mode <= 1:
                            cell_tx = h
                        if mode == 0 or mode == 2:
                            cell_rx = best
                        if mode == 3:
                            pairs.add((h << 32) | best)
                            cell_txs.append(h)
                            cell_rxs.append(best)
                        if record_links:
                            slot_links.append((h, best))
                    kept.append(entry)
                    continue

                # admit the transmission
                commits.append((_REACH, p, child, r_found))
                state.transmissions += 1
                budget_left -= 1
                role[h] = ROLE_TX
                role[r_found] = ROLE_RX
                if mode <= 1:
                    cell_tx = h
                if mode == 0 or mode == 2:
                    cell_rx = r_found
                if mode == 3:
                    pairs.add((h << 32) | r_found)
                    cell_txs.append(h)
                    cell_rxs.append(r_found)
                if record_links:
                    slot_links.append((h, r_found))

            queues[cell] = kept

        # commit all of the slot's transfers simultaneously
        for kind, p, tnode, r in commits:
            s = p // window
            base = int(tree_ptr[s])
            poff = int(pkt_ptr[p])
            if kind == _REHOLD:
                holder[poff + tnode] = r
                continue
            holder[poff + tnode] = r
            if tn_forced[base + tnode] >= 0:
                remaining[p] -= 1
                if remaining[p] == 0:
                    state.deliveries[s] += 1
                    if in_window:
                        state.deliveries_window[s] += 1
                    # closed loop: reset and re-inject at the source
                    size = int(tree_ptr[s + 1]) - base
                    holder[poff : poff + size] = -1
                    holder[poff] = sess_source[s]
                    remaining[p] = sess_m[s]
                    state.injected[s] += 1
                    root_cell = int(tn_cell[base])
                    for e in range(
                        int(tn_child_ptr[base]), int(tn_child_ptr[base + 1])
                    ):
                        queues[root_cell].append(
                            (p << ENTRY_SHIFT) | int(tn_child[e])
                        )
            else:
                ccell = int(tn_cell[base + tnode])
                for e in range(
                    int(tn_child_ptr[base + tnode]),
                    int(tn_child_ptr[base + tnode + 1]),
                ):
                    queues[ccell].append(
                        (p << ENTRY_SHIFT) | int(tn_child[e])
                    )
        if record_links:
            recorded.append(slot_links)

    state.slots_run += num_slots
    return recorded
