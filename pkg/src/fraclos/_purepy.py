"""Pure-Python hot kernels.

Reference implementation of everything in ``_ckernels.pyx``.  The two files
perform the same floating point operations in the same order, so the compiled
and fallback backends give bit-identical answers.  Keep them in step.
"""
import math

import numpy as np

BLOCKED = 1
EXHAUSTED = 2
MIN_PIECE = 1e-12


def fold_to_top(x, y):
    """Rotate ``(x, y)`` by quarter turns (counter-clockwise) until ``|x| <= y``.

    Returns the rotated point and the number of turns ``k``.  Diagonal ties go
    to the smaller ``k``.
    """
    k = 0
    while k < 3 and not abs(x) <= y:
        x, y = -y, x
        k += 1
    return x, y, k


class Kernel:
    """Per-domain geometry kernel (membership, line of sight, neighbor graph)."""

    backend = "python"

    def __init__(self, n, y_max, center, points, inv_lin, inv_off, flips):
        self.n = int(n)
        self.y_max = float(y_max)
        self.ox = float(center[0])
        self.oy = float(center[1])
        # ray directions O -> P_j
        self.rx = [float(p[0]) - self.ox for p in points]
        self.ry = [float(p[1]) - self.oy for p in points]
        self.iar = [float(c.real) for c in inv_lin]
        self.iai = [float(c.imag) for c in inv_lin]
        self.ibx = [float(c.real) for c in inv_off]
        self.iby = [float(c.imag) for c in inv_off]
        self.flips = [bool(f) for f in flips]

    def cross(self, j, x, y):
        return self.rx[j] * (y - self.oy) - self.ry[j] * (x - self.ox)

    def region(self, x, y):
        i = 0
        for j in range(1, self.n):
            if self.cross(j, x, y) < 0.0:
                i += 1
        return i

    def inverse(self, i, x, y):
        ar = self.iar[i]
        ai = self.iai[i]
        return ar * x - ai * y + self.ibx[i], ai * x + ar * y + self.iby[i]

    # -- membership -------------------------------------------------------

    def contains(self, x, y, max_depth):
        x, y, _ = fold_to_top(x, y)
        y_max = self.y_max
        flip = False
        depth = max_depth
        while True:
            if y < 1.0:
                return not flip
            if y > y_max or abs(x) > 1.0:
                return flip
            if depth <= 0:
                # chord rule; y >= 1 here
                return flip
            i = self.region(x, y)
            x, y = self.inverse(i, x, y)
            if self.flips[i]:
                flip = not flip
            depth -= 1

    def contains_many(self, xs, ys, max_depth):
        out = np.zeros(len(xs), dtype=np.uint8)
        for k in range(len(xs)):
            out[k] = self.contains(float(xs[k]), float(ys[k]), max_depth)
        return out

    # -- line of sight ----------------------------------------------------

    def segment_hits(self, x1, y1, x2, y2, max_depth):
        """Bit flags (BLOCKED, EXHAUSTED) for a segment against the top edge curve."""
        y_max = self.y_max
        if (y1 < 1.0 and y2 < 1.0) or (y1 > y_max and y2 > y_max):
            return 0
        n = self.n
        t0 = 0.0
        t1 = 1.0
        # clip to the wedge at O spanned by P_0 and P_n
        ga = -self.cross(0, x1, y1)
        gb = -self.cross(0, x2, y2)
        if ga < 0.0 and gb < 0.0:
            return 0
        if ga < 0.0:
            t0 = max(t0, ga / (ga - gb))
        elif gb < 0.0:
            t1 = min(t1, ga / (ga - gb))
        ga = self.cross(n, x1, y1)
        gb = self.cross(n, x2, y2)
        if ga < 0.0 and gb < 0.0:
            return 0
        if ga < 0.0:
            t0 = max(t0, ga / (ga - gb))
        elif gb < 0.0:
            t1 = min(t1, ga / (ga - gb))
        dx = x2 - x1
        dy = y2 - y1
        length = math.sqrt(dx * dx + dy * dy)
        if (t1 - t0) * length < MIN_PIECE:
            return 0
        if t0 == 0.0:
            ax, ay = x1, y1
        else:
            ax = x1 + t0 * dx
            ay = y1 + t0 * dy
        if t1 == 1.0:
            bx, by = x2, y2
        else:
            bx = x1 + t1 * dx
            by = y1 + t1 * dy

        if (ay < 1.0 and by > y_max) or (by < 1.0 and ay > y_max):
            return BLOCKED
        if (ay < 1.0 and by < 1.0) or (ay > y_max and by > y_max):
            return 0
        if max(ax, bx) < -1.0 or min(ax, bx) > 1.0:
            return 0
        if max_depth <= 0:
            return EXHAUSTED | _hits_chord(ax, ay, bx, by)

        cuts = []
        for j in range(1, n):
            ca = self.cross(j, ax, ay)
            cb = self.cross(j, bx, by)
            if (ca < 0.0) != (cb < 0.0):
                cuts.append(ca / (ca - cb))
        cuts.sort()
        cuts.append(1.0)
        ex = bx - ax
        ey = by - ay
        piece_len = math.sqrt(ex * ex + ey * ey)
        flags = 0
        s_lo = 0.0
        px, py = ax, ay
        for s_hi in cuts:
            if s_hi == 1.0:
                qx, qy = bx, by
            else:
                qx = ax + s_hi * ex
                qy = ay + s_hi * ey
            if (s_hi - s_lo) * piece_len >= MIN_PIECE:
                i = self.region((px + qx) * 0.5, (py + qy) * 0.5)
                ux, uy = self.inverse(i, px, py)
                vx, vy = self.inverse(i, qx, qy)
                res = self.segment_hits(ux, uy, vx, vy, max_depth - 1)
                flags |= res & EXHAUSTED
                if res & BLOCKED:
                    return flags | BLOCKED
            s_lo = s_hi
            px, py = qx, qy
        return flags

    def line_of_sight(self, x1, y1, x2, y2, max_depth):
        """Return ``(visible, depth_exhausted)`` for the segment between two points."""
        if abs(x1) < 1.0 and abs(y1) < 1.0 and abs(x2) < 1.0 and abs(y2) < 1.0:
            return True, False
        # canonical endpoint order keeps the verdict exactly symmetric
        if (x2, y2) < (x1, y1):
            x1, y1, x2, y2 = x2, y2, x1, y1
        flags = 0
        for _ in range(4):
            res = self.segment_hits(x1, y1, x2, y2, max_depth)
            flags |= res & EXHAUSTED
            if res & BLOCKED:
                return False, bool(flags & EXHAUSTED)
            x1, y1 = -y1, x1
            x2, y2 = -y2, x2
        return True, bool(flags & EXHAUSTED)

    # -- graphs -----------------------------------------------------------

    def _grid(self, xs, ys, r0):
        cells = {}
        keys = []
        for i in range(len(xs)):
            key = (math.floor(xs[i] / r0), math.floor(ys[i] / r0))
            keys.append(key)
            cells.setdefault(key, []).append(i)
        return cells, keys

    def _candidates(self, cells, keys, i):
        cx, cy = keys[i]
        for gx in (cx - 1, cx, cx + 1):
            for gy in (cy - 1, cy, cy + 1):
                for j in cells.get((gx, gy), ()):
                    if j > i:
                        yield j

    def neighbor_edges(self, xs, ys, r0, max_depth):
        """All pairs within range ``r0`` with line of sight, as a sorted (m, 2) array."""
        xs = [float(v) for v in xs]
        ys = [float(v) for v in ys]
        cells, keys = self._grid(xs, ys, r0)
        r2 = r0 * r0
        edges = []
        exhausted = 0
        for i in range(len(xs)):
            for j in self._candidates(cells, keys, i):
                dx = xs[j] - xs[i]
                dy = ys[j] - ys[i]
                if dx * dx + dy * dy <= r2:
                    vis, ex = self.line_of_sight(xs[i], ys[i], xs[j], ys[j], max_depth)
                    exhausted += ex
                    if vis:
                        edges.append((i, j))
        edges.sort()
        return np.array(edges, dtype=np.int64).reshape(-1, 2), exhausted

    def components(self, n_nodes, edges):
        """Return ``(component_count, isolated_count)`` by union-find."""
        parent = list(range(n_nodes))
        degree = [0] * n_nodes
        count = n_nodes
        for a, b in edges:
            a = int(a)
            b = int(b)
            degree[a] += 1
            degree[b] += 1
            ra = _find(parent, a)
            rb = _find(parent, b)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
                count -= 1
        return count, sum(1 for d in degree if d == 0)

    def trial(self, xs, ys, r0, max_depth):
        """Fused graph build and component count.

        Pairs already joined through other edges skip the line-of-sight test;
        that changes neither the component count nor the isolated count.
        Returns ``(component_count, isolated_count, exhausted_tests)``.
        """
        xs = [float(v) for v in xs]
        ys = [float(v) for v in ys]
        n_nodes = len(xs)
        cells, keys = self._grid(xs, ys, r0)
        parent = list(range(n_nodes))
        linked = [False] * n_nodes
        count = n_nodes
        exhausted = 0
        r2 = r0 * r0
        for i in range(n_nodes):
            for j in self._candidates(cells, keys, i):
                dx = xs[j] - xs[i]
                dy = ys[j] - ys[i]
                if dx * dx + dy * dy > r2:
                    continue
                ri = _find(parent, i)
                rj = _find(parent, j)
                if ri == rj:
                    continue
                vis, ex = self.line_of_sight(xs[i], ys[i], xs[j], ys[j], max_depth)
                exhausted += ex
                if vis:
                    parent[max(ri, rj)] = min(ri, rj)
                    count -= 1
                    linked[i] = True
                    linked[j] = True
        return count, n_nodes - sum(linked), exhausted


def _hits_chord(ax, ay, bx, by):
    da = ay - 1.0
    db = by - 1.0
    if (da > 0.0 and db > 0.0) or (da < 0.0 and db < 0.0):
        return 0
    if da == db:
        return BLOCKED if max(ax, bx) >= -1.0 and min(ax, bx) <= 1.0 else 0
    xc = ax + da / (da - db) * (bx - ax)
    return BLOCKED if -1.0 <= xc <= 1.0 else 0


def _find(parent, a):
    while parent[a] != a:
        parent[a] = parent[parent[a]]
        a = parent[a]
    return a
