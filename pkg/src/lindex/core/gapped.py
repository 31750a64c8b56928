"""Fixed-capacity sorted array with gaps, addressed through a linear model.

Layout rules:

* ``occ`` marks which slots hold live records; ``occupied`` is its popcount.
* ``slot_keys`` is globally non-decreasing. A gap slot mirrors the key of the
  nearest occupied slot to its right (``+inf`` when none follows), so
  exponential and binary searches can probe any slot in O(1) and appending in
  key order never touches more than the adjacent gap run.
* Records with equal keys always occupy contiguous slots.

Insertion targets the model-predicted slot. When that slot is not a legal
sorted position, an exponential search (doubling steps outward, then a binary
search inside the bracket) locates the nearest legal one; when the target is
occupied, the block of records between it and the closest gap shifts one step
toward that gap (ties broken rightward).
"""

from __future__ import annotations

from bisect import bisect_left

_POS_INF = float("inf")


class GappedArray:
    __slots__ = ("capacity", "occupied", "slot_keys", "slot_vals", "occ")

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be at least 1")
        self.capacity = capacity
        self.occupied = 0
        self.slot_keys = [_POS_INF] * capacity
        self.slot_vals = [None] * capacity
        self.occ = bytearray(capacity)

    # ------------------------------------------------------------------ #
    # searching
    # ------------------------------------------------------------------ #

    def _bound_right(self, p0: int, key):
        """First index with slot key >= ``key``, given slot_keys[p0] < key.

        Returns (index or capacity, doubling steps taken).
        """
        keys = self.slot_keys
        cap = self.capacity
        iters = 0
        lo = p0 + 1
        step = 1
        while p0 + step < cap and keys[p0 + step] < key:
            lo = p0 + step + 1
            step <<= 1
            iters += 1
        hi = p0 + step + 1
        if hi > cap:
            hi = cap
        return bisect_left(keys, key, lo, hi), iters

    def _bound_left(self, p0: int, key):
        """First index with slot key >= ``key``, given slot_keys[p0] > key."""
        keys = self.slot_keys
        iters = 0
        hi = p0
        step = 1
        while p0 - step >= 0 and keys[p0 - step] >= key:
            hi = p0 - step
            step <<= 1
            iters += 1
        lo = p0 - step + 1
        if lo < 0:
            lo = 0
        return bisect_left(keys, key, lo, hi), iters

    def find(self, key, p0: int):
        """Return (found, payload, doubling steps) for ``key``."""
        if self.occupied == 0:
            return False, None, 0
        keys = self.slot_keys
        f0 = keys[p0]
        if f0 == key:
            # exact prediction; a gap mirroring the key proves a copy sits
            # a short scan to its right
            j = self.occ.find(1, p0)
            return True, self.slot_vals[j], 0
        if f0 < key:
            u, iters = self._bound_right(p0, key)
        else:
            u, iters = self._bound_left(p0, key)
        if u < self.capacity and keys[u] == key:
            return True, self._payload_at_or_right(u), iters
        return False, None, iters

    def _payload_at_or_right(self, u: int):
        return self.slot_vals[self.occ.find(1, u)]

    # ------------------------------------------------------------------ #
    # insertion
    # ------------------------------------------------------------------ #

    def insert(self, key, payload, p0: int):
        """Place a record at (or as close as legal to) predicted slot ``p0``.

        Returns (slot, records_shifted, doubling_steps). The caller must
        guarantee occupied < capacity.
        """
        if self.occupied >= self.capacity:
            raise RuntimeError("gapped array is full")
        occ = self.occ
        keys = self.slot_keys
        cap = self.capacity
        if self.occupied == 0:
            self._write(p0, key, payload)
            return p0, 0, 0

        f0 = keys[p0]
        if f0 == key:
            if occ[p0]:
                # inside an equal-key run: free the predicted slot itself
                shifts = self._free_slot(p0, key, payload)
                return p0, shifts, 0
            # a gap mirroring the run ahead: stay adjacent to keep copies
            # contiguous
            w = occ.find(1, p0 + 1)
            self._write(w - 1, key, payload)
            return w - 1, 0, 0

        if f0 < key:
            u, iters = self._bound_right(p0, key)
        else:
            u, iters = self._bound_left(p0, key)

        if u == cap:
            # every slot up to the end holds a smaller key: open the last slot
            shifts, t = self._free_boundary(cap - 1, cap, key, payload)
            return t, shifts, iters

        fu = keys[u]
        if fu == key:
            # a run of this key begins at the next occupied slot
            w = occ.find(1, u)
            if w > u:
                self._write(w - 1, key, payload)
                return w - 1, 0, iters
            shifts = self._free_slot(u, key, payload)
            return u, shifts, iters

        if fu == _POS_INF:
            # nothing occupied at or beyond u: free slots run to the end
            t = p0 if p0 > u else u
            self._write(t, key, payload)
            return t, 0, iters

        # a strictly greater neighbour is mirrored at u; locate it
        w = occ.find(1, u)
        if w > u:
            t = p0
            if t < u:
                t = u
            elif t > w - 1:
                t = w - 1
            self._write(t, key, payload)
            return t, 0, iters
        # neighbours are adjacent (u-1 below the key, u above): shift a block
        shifts, t = self._free_boundary(u - 1, u, key, payload)
        return t, shifts, iters

    # -- shifting helpers ---------------------------------------------- #

    def _gap_right(self, start: int) -> int:
        if start >= self.capacity:
            return -1
        return self.occ.find(0, start)

    def _gap_left(self, start: int) -> int:
        if start < 0:
            return -1
        return self.occ.rfind(0, 0, start + 1)

    def _free_slot(self, t: int, key, payload) -> int:
        """Free occupied slot ``t`` (occupant key == new key) and write there."""
        gr = self._gap_right(t + 1)
        gl = self._gap_left(t - 1)
        if gl < 0 and gr < 0:
            raise RuntimeError("gapped array is full")
        cost_r = (gr - t) if gr >= 0 else None
        cost_l = (t - gl) if gl >= 0 else None
        if cost_l is None or (cost_r is not None and cost_r <= cost_l):
            self._shift_right(t, gr)
            self._write(t, key, payload)
            return cost_r
        self._shift_left(gl, t)
        self._write(t, key, payload)
        return cost_l

    def _free_boundary(self, j: int, u: int, key, payload):
        """Make room between adjacent neighbours j (key below) and u (above).

        The right variant shifts [u, gap) rightward and writes at u; the left
        variant shifts (gap, j] leftward and writes at j. Either keeps the
        new key strictly between its neighbours.
        """
        gr = self._gap_right(u) if u < self.capacity else -1
        gl = self._gap_left(j) if j >= 0 else -1
        cost_r = (gr - u) if gr >= 0 else None
        cost_l = (j - gl) if (j >= 0 and gl >= 0) else None
        if cost_l is None and cost_r is None:
            raise RuntimeError("gapped array is full")
        if cost_l is None or (cost_r is not None and cost_r <= cost_l):
            self._shift_right(u, gr)
            self._write(u, key, payload)
            return cost_r, u
        self._shift_left(gl, j)
        self._write(j, key, payload)
        return cost_l, j

    def _shift_right(self, t: int, g: int):
        """Move records in [t, g) one slot right into gap g."""
        if g == t:
            return
        keys = self.slot_keys
        vals = self.slot_vals
        keys[t + 1 : g + 1] = keys[t:g]
        vals[t + 1 : g + 1] = vals[t:g]
        self.occ[g] = 1

    def _shift_left(self, g: int, t: int):
        """Move records in (g, t] one slot left into gap g."""
        if g == t:
            return
        keys = self.slot_keys
        vals = self.slot_vals
        keys[g:t] = keys[g + 1 : t + 1]
        vals[g:t] = vals[g + 1 : t + 1]
        self.occ[g] = 1

    def _write(self, t: int, key, payload):
        self.slot_keys[t] = key
        self.slot_vals[t] = payload
        self.occ[t] = 1  # already set when a shift freed this slot; idempotent
        self.occupied += 1
        # gap slots to the left mirror the newly written key
        keys = self.slot_keys
        occ = self.occ
        i = t - 1
        while i >= 0 and not occ[i]:
            keys[i] = key
            i -= 1

    def remove_one(self, key, p0: int) -> bool:
        """Remove one copy of ``key`` (the leftmost, so equal-key runs stay
        slot-contiguous). Exists solely to roll an insert back when the
        maintenance it triggered is rejected by the memory cap."""
        keys = self.slot_keys
        occ = self.occ
        f0 = keys[p0]
        if f0 == key:
            u = self.occ.find(1, p0) if not occ[p0] else p0
        elif f0 < key:
            u, _ = self._bound_right(p0, key)
        else:
            u, _ = self._bound_left(p0, key)
        if u < 0 or u >= self.capacity or keys[u] != key:
            return False
        while not occ[u]:
            u += 1
        while u > 0 and occ[u - 1] and keys[u - 1] == key:
            u -= 1
        occ[u] = 0
        self.occupied -= 1
        nxt = occ.find(1, u + 1)
        fill = keys[nxt] if nxt >= 0 else _POS_INF
        i = u
        while i >= 0 and not occ[i]:
            keys[i] = fill
            i -= 1
        return True

    # ------------------------------------------------------------------ #
    # inspection
    # ------------------------------------------------------------------ #

    def iter_records(self):
        occ = self.occ
        keys = self.slot_keys
        vals = self.slot_vals
        for i in range(self.capacity):
            if occ[i]:
                yield keys[i], vals[i]

    def record_keys(self):
        occ = self.occ
        keys = self.slot_keys
        return [keys[i] for i in range(self.capacity) if occ[i]]

    def longest_run(self):
        """(start, length) of the longest consecutive occupied run; ties leftmost."""
        best_start, best_len = 0, 0
        run_start, run_len = 0, 0
        occ = self.occ
        for i in range(self.capacity):
            if occ[i]:
                if run_len == 0:
                    run_start = i
                run_len += 1
                if run_len > best_len:
                    best_start, best_len = run_start, run_len
            else:
                run_len = 0
        return best_start, best_len

    def clone(self) -> "GappedArray":
        g = GappedArray.__new__(GappedArray)
        g.capacity = self.capacity
        g.occupied = self.occupied
        g.slot_keys = self.slot_keys.copy()
        g.slot_vals = self.slot_vals.copy()
        g.occ = bytearray(self.occ)
        return g
