# cython: language_level=3
"""Compiled slot engine; mirrors ``_fallback.run_slots`` exactly.

Keep the admission logic in lockstep with the Python reference: the test
suite asserts bit-identical trajectories between the two backends.
"""

from libcpp.vector cimport vector
from libcpp.unordered_set cimport unordered_set

import numpy as np
cimport numpy as cnp

cnp.import_array()

DEF ENTRY_SHIFT = 20

cdef struct Commit:
    int kind  # 0 reach, 1 rehold
    long long p
    int tnode
    int r


def run_slots(
    object state,
    int num_slots,
    int measure_start,
    int measure_end,
    bint record_links=False,
):
    cdef double[::1] xs = state.xs
    cdef double[::1] ys = state.ys
    cdef double t = state.t
    cdef double t2 = t * t
    cdef double delta = state.delta
    cdef double guard = (1.0 + delta) * t
    cdef double guard2 = guard * guard
    cdef int mode = state.mode_code
    cdef int budget = state.budget
    cdef long long window = state.window
    cdef long long[::1] cell_start = state.cell_start
    cdef long long[::1] cell_nodes = state.cell_nodes
    cdef long long[::1] slot_ptr = state.slot_ptr
    cdef long long[::1] slot_cells = state.slot_cells
    cdef int num_tdma_slots = state.num_slots
    cdef long long[::1] tree_ptr = state.tree_ptr
    cdef int[::1] tn_cell = state.tn_cell
    cdef int[::1] tn_parent = state.tn_parent
    cdef int[::1] tn_forced = state.tn_forced_rx
    cdef long long[::1] tn_child_ptr = state.tn_child_ptr
    cdef int[::1] tn_child = state.tn_child
    cdef int[::1] sess_source = state.sess_source
    cdef int[::1] sess_m = state.sess_m
    cdef int[::1] holder = state.holder
    cdef long long[::1] pkt_ptr = state.pkt_state_ptr
    cdef int[::1] remaining = state.remaining
    cdef long long[::1] deliveries = state.deliveries
    cdef long long[::1] deliveries_window = state.deliveries_window
    cdef long long[::1] injected = state.injected
    cdef double[::1] center_x = state.center_x
    cdef double[::1] center_y = state.center_y

    cdef long long n_nodes = xs.shape[0]
    cdef long long num_cells = cell_start.shape[0] - 1

    # materialize the Python queues into C++ vectors once per call
    cdef vector[vector[long long]] queues
    queues.resize(num_cells)
    cdef long long c, e
    py_queues = state.queues
    for c in range(num_cells):
        q = py_queues[c]
        queues[c].reserve(len(q))
        for e in q:
            queues[c].push_back(e)

    cdef cnp.ndarray[cnp.int8_t, ndim=1] role_arr = np.zeros(n_nodes, dtype=np.int8)
    cdef signed char[::1] role = role_arr
    cdef vector[long long] touched

    cdef vector[Commit] commits
    cdef unordered_set[long long] reholding
    cdef unordered_set[long long] pairs
    cdef vector[long long] cell_txs
    cdef vector[long long] cell_rxs
    cdef vector[long long] kept

    cdef long long transmissions = state.transmissions
    cdef long long reholds = state.reholds
    cdef long long slots_run = state.slots_run

    recorded = [] if record_links else None
    slot_links = None

    cdef int local_slot, slot
    cdef bint in_window
    cdef long long ci, cell, qi, qn, entry, p, s, base, poff
    cdef int child, parent, h, forced, r_found, r, cell_tx, cell_rx
    cdef int budget_left
    cdef long long lo, hi, sz, k0, off, k, key
    cdef double hx, hy, dx, dy, d2, tx_t, ty_t, d_h, best_d, ddx, ddy
    cdef int best
    cdef bint ok, contended
    cdef signed char rh, rr
    cdef size_t i, m_i
    cdef Commit cm
    cdef int size

    for local_slot in range(num_slots):
        slot = <int>((slots_run + local_slot) % num_tdma_slots)
        in_window = measure_start <= local_slot < measure_end
        for i in range(touched.size()):
            role[touched[i]] = 0
        touched.clear()
        commits.clear()
        reholding.clear()
        if record_links:
            slot_links = []

        for ci in range(slot_ptr[slot], slot_ptr[slot + 1]):
            cell = slot_cells[ci]
            qn = <long long>queues[cell].size()
            if qn == 0:
                continue
            budget_left = budget
            cell_tx = -1
            cell_rx = -1
            cell_txs.clear()
            cell_rxs.clear()
            kept.clear()
            pairs.clear()

            for qi in range(qn):
                entry = queues[cell][qi]
                if budget_left == 0:
                    for k in range(qi, qn):
                        kept.push_back(queues[cell][k])
                    break
                p = entry >> ENTRY_SHIFT
                child = <int>(entry & ((1 << ENTRY_SHIFT) - 1))
                s = p / window
                base = tree_ptr[s]
                parent = tn_parent[base + child]
                poff = pkt_ptr[p]
                h = holder[poff + parent]
                if reholding.count((p << ENTRY_SHIFT) | parent):
                    kept.push_back(entry)
                    continue
                forced = tn_forced[base + child]
                if forced >= 0 and h == forced:
                    cm.kind = 0
                    cm.p = p
                    cm.tnode = child
                    cm.r = forced
                    commits.push_back(cm)
                    continue

                rh = role[h]
                if rh == 2 or (mode == 0 and rh != 0) or (mode == 2 and rh == 1):
                    kept.push_back(entry)
                    continue
                if mode <= 1 and cell_tx >= 0 and h != cell_tx:
                    kept.push_back(entry)
                    continue

                hx = xs[h]
                hy = ys[h]
                contended = False

                r_found = -1
                if forced >= 0:
                    if _rx_ok(
                        forced, h, hx, hy, mode, cell_rx, t2, guard2, delta,
                        xs, ys, role, &pairs, &cell_txs, &cell_rxs, &contended,
                    ):
                        r_found = forced
                else:
                    lo = cell_start[tn_cell[base + child]]
                    hi = cell_start[tn_cell[base + child] + 1]
                    sz = hi - lo
                    if sz > 0:
                        k0 = (p * 2654435761LL + child * 97LL) % sz
                        for off in range(sz):
                            r = <int>cell_nodes[lo + (k0 + off) % sz]
                            if _rx_ok(
                                r, h, hx, hy, mode, cell_rx, t2, guard2, delta,
                                xs, ys, role, &pairs, &cell_txs, &cell_rxs,
                                &contended,
                            ):
                                r_found = r
                                break

                if r_found < 0 and contended:
                    kept.push_back(entry)
                    continue
                if r_found < 0:
                    if forced >= 0:
                        tx_t = xs[forced]
                        ty_t = ys[forced]
                    else:
                        tx_t = center_x[tn_cell[base + child]]
                        ty_t = center_y[tn_cell[base + child]]
                    d_h = (hx - tx_t) * (hx - tx_t) + (hy - ty_t) * (hy - ty_t)
                    lo = cell_start[cell]
                    hi = cell_start[cell + 1]
                    best = -1
                    best_d = d_h
                    for k in range(lo, hi):
                        r = <int>cell_nodes[k]
                        dx = xs[r] - tx_t
                        dy = ys[r] - ty_t
                        d2 = dx * dx + dy * dy
                        if d2 < best_d and _rx_ok(
                            r, h, hx, hy, mode, cell_rx, t2, guard2, delta,
                            xs, ys, role, &pairs, &cell_txs, &cell_rxs,
                            &contended,
                        ):
                            best = r
                            best_d = d2
                    if best >= 0:
                        cm.kind = 1
                        cm.p = p
                        cm.tnode = parent
                        cm.r = best
                        commits.push_back(cm)
                        reholding.insert((p << ENTRY_SHIFT) | parent)
                        reholds += 1
                        transmissions += 1
                        budget_left -= 1
                        if role[h] == 0:
                            touched.push_back(h)
                        role[h] = 1
                        if role[best] == 0:
                            touched.push_back(best)
                        role[best] = 2
                        if mode <= 1:
                            cell_tx = h
                        if mode == 0 or mode == 2:
                            cell_rx = best
                        if mode == 3:
                            pairs.insert((<long long>h << 32) | <long long>best)
                            cell_txs.push_back(h)
                            cell_rxs.push_back(best)
                        if record_links:
                            slot_links.append((h, best))
                    kept.push_back(entry)
                    continue

                cm.kind = 0
                cm.p = p
                cm.tnode = child
                cm.r = r_found
                commits.push_back(cm)
                transmissions += 1
                budget_left -= 1
                if role[h] == 0:
                    touched.push_back(h)
                role[h] = 1
                if role[r_found] == 0:
                    touched.push_back(r_found)
                role[r_found] = 2
                if mode <= 1:
                    cell_tx = h
                if mode == 0 or mode == 2:
                    cell_rx = r_found
                if mode == 3:
                    pairs.insert((<long long>h << 32) | <long long>r_found)
                    cell_txs.push_back(h)
                    cell_rxs.push_back(r_found)
                if record_links:
                    slot_links.append((h, r_found))

            queues[cell].swap(kept)

        for m_i in range(commits.size()):
            cm = commits[m_i]
            p = cm.p
            s = p / window
            base = tree_ptr[s]
            poff = pkt_ptr[p]
            if cm.kind == 1:
                holder[poff + cm.tnode] = cm.r
                continue
            holder[poff + cm.tnode] = cm.r
            if tn_forced[base + cm.tnode] >= 0:
                remaining[p] -= 1
                if remaining[p] == 0:
                    deliveries[s] += 1
                    if in_window:
                        deliveries_window[s] += 1
                    size = <int>(tree_ptr[s + 1] - base)
                    for k in range(size):
                        holder[poff + k] = -1
                    holder[poff] = sess_source[s]
                    remaining[p] = sess_m[s]
                    injected[s] += 1
                    for e in range(tn_child_ptr[base], tn_child_ptr[base + 1]):
                        queues[tn_cell[base]].push_back(
                            (p << ENTRY_SHIFT) | <long long>tn_child[e]
                        )
            else:
                for e in range(
                    tn_child_ptr[base + cm.tnode],
                    tn_child_ptr[base + cm.tnode + 1],
                ):
                    queues[tn_cell[base + cm.tnode]].push_back(
                        (p << ENTRY_SHIFT) | <long long>tn_child[e]
                    )
        if record_links:
            recorded.append(slot_links)

    # write queue contents back to the Python state
    new_queues = []
    for c in range(num_cells):
        new_queues.append([queues[c][k] for k in range(<long long>queues[c].size())])
    state.queues = new_queues
    state.transmissions = transmissions
    state.reholds = reholds
    state.slots_run = slots_run + num_slots
    return recorded


cdef inline bint _rx_ok(
    int r,
    int h,
    double hx,
    double hy,
    int mode,
    int cell_rx,
    double t2,
    double guard2,
    double delta,
    double[::1] xs,
    double[::1] ys,
    signed char[::1] role,
    unordered_set[long long] *pairs,
    vector[long long] *cell_txs,
    vector[long long] *cell_rxs,
    bint *contended,
):
    cdef double dx, dy, ddx, ddy, d2
    cdef signed char rr
    cdef size_t i
    cdef long long a, b
    cdef bint ok
    if r == h:
        return False
    dx = xs[r] - hx
    dy = ys[r] - hy
    if dx * dx + dy * dy > t2:
        return False
    ok = True
    rr = role[r]
    if rr == 1:
        ok = False
    elif mode <= 1 and rr == 2:
        ok = False
    elif mode == 2 and cell_rx >= 0 and r != cell_rx:
        ok = False
    elif mode == 3:
        if pairs.count((<long long>h << 32) | <long long>r):
            ok = False
        elif delta > 0.0:
            for i in range(cell_txs.size()):
                a = cell_txs[0][i]
                ddx = xs[r] - xs[a]
                ddy = ys[r] - ys[a]
                d2 = ddx * ddx + ddy * ddy
                if t2 < d2 and d2 < guard2 and a != h:
                    ok = False
                    break
            if ok:
                for i in range(cell_rxs.size()):
                    b = cell_rxs[0][i]
                    ddx = xs[b] - hx
                    ddy = ys[b] - hy
                    d2 = ddx * ddx + ddy * ddy
                    if t2 < d2 and d2 < guard2 and b != r:
                        ok = False
                        break
    if not ok:
        contended[0] = True
    return ok
