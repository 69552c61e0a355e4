# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels.

Line-for-line port of ``_purepy.py``; the arithmetic order matches so both
backends agree bit for bit.  Heavy loops release the GIL.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, floor, sqrt
from libc.stdlib cimport free, malloc, realloc

cnp.import_array()

cdef int BLOCKED = 1
cdef int EXHAUSTED = 2
cdef double MIN_PIECE = 1e-12
DEF MAX_N = 3


def fold_to_top(double x, double y):
    cdef int k = 0
    cdef double t
    while k < 3 and not fabs(x) <= y:
        t = x
        x = -y
        y = t
        k += 1
    return x, y, k


cdef inline int _hits_chord(double ax, double ay, double bx, double by) noexcept nogil:
    cdef double da = ay - 1.0
    cdef double db = by - 1.0
    cdef double xc
    if (da > 0.0 and db > 0.0) or (da < 0.0 and db < 0.0):
        return 0
    if da == db:
        if (ax if ax > bx else bx) >= -1.0 and (ax if ax < bx else bx) <= 1.0:
            return BLOCKED
        return 0
    xc = ax + da / (da - db) * (bx - ax)
    if -1.0 <= xc <= 1.0:
        return BLOCKED
    return 0


cdef inline Py_ssize_t _find(Py_ssize_t* parent, Py_ssize_t a) noexcept nogil:
    while parent[a] != a:
        parent[a] = parent[parent[a]]
        a = parent[a]
    return a


cdef class Kernel:
    """Per-domain geometry kernel (membership, line of sight, neighbor graph)."""

    cdef readonly int n
    cdef readonly double y_max
    cdef double ox, oy
    cdef double rx[MAX_N + 1]
    cdef double ry[MAX_N + 1]
    cdef double iar[MAX_N]
    cdef double iai[MAX_N]
    cdef double ibx[MAX_N]
    cdef double iby[MAX_N]
    cdef int flips[MAX_N]

    backend = "cython"

    def __init__(self, n, y_max, center, points, inv_lin, inv_off, flips):
        cdef int j
        if not 2 <= n <= MAX_N:
            raise ValueError(f"unsupported family {n}")
        self.n = n
        self.y_max = y_max
        self.ox = center[0]
        self.oy = center[1]
        for j in range(n + 1):
            self.rx[j] = <double>points[j][0] - self.ox
            self.ry[j] = <double>points[j][1] - self.oy
        for j in range(n):
            self.iar[j] = inv_lin[j].real
            self.iai[j] = inv_lin[j].imag
            self.ibx[j] = inv_off[j].real
            self.iby[j] = inv_off[j].imag
            self.flips[j] = 1 if flips[j] else 0

    cdef inline double _cross(self, int j, double x, double y) noexcept nogil:
        return self.rx[j] * (y - self.oy) - self.ry[j] * (x - self.ox)

    cdef inline int _region(self, double x, double y) noexcept nogil:
        cdef int i = 0
        cdef int j
        for j in range(1, self.n):
            if self._cross(j, x, y) < 0.0:
                i += 1
        return i

    cdef int _contains(self, double x, double y, int depth) noexcept nogil:
        cdef int k = 0
        cdef int flip = 0
        cdef int i
        cdef double t, ar, ai
        while k < 3 and not fabs(x) <= y:
            t = x
            x = -y
            y = t
            k += 1
        while True:
            if y < 1.0:
                return 1 - flip
            if y > self.y_max or fabs(x) > 1.0:
                return flip
            if depth <= 0:
                return flip
            i = self._region(x, y)
            ar = self.iar[i]
            ai = self.iai[i]
            t = ar * x - ai * y + self.ibx[i]
            y = ai * x + ar * y + self.iby[i]
            x = t
            if self.flips[i]:
                flip = 1 - flip
            depth -= 1

    cdef int _hits(self, double x1, double y1, double x2, double y2, int depth) noexcept nogil:
        cdef double y_max = self.y_max
        cdef int n = self.n
        cdef double t0 = 0.0, t1 = 1.0, t
        cdef double ga, gb, dx, dy, length
        cdef double ax, ay, bx, by, ex, ey, piece_len
        cdef double px, py, qx, qy, ux, uy, vx, vy, ar, ai
        cdef double ca, cb, s_lo, s_hi
        cdef double cuts[MAX_N]
        cdef int ncut = 0, j, k, i, res, flags = 0

        if (y1 < 1.0 and y2 < 1.0) or (y1 > y_max and y2 > y_max):
            return 0
        ga = -self._cross(0, x1, y1)
        gb = -self._cross(0, x2, y2)
        if ga < 0.0 and gb < 0.0:
            return 0
        if ga < 0.0:
            t = ga / (ga - gb)
            if t > t0:
                t0 = t
        elif gb < 0.0:
            t = ga / (ga - gb)
            if t < t1:
                t1 = t
        ga = self._cross(n, x1, y1)
        gb = self._cross(n, x2, y2)
        if ga < 0.0 and gb < 0.0:
            return 0
        if ga < 0.0:
            t = ga / (ga - gb)
            if t > t0:
                t0 = t
        elif gb < 0.0:
            t = ga / (ga - gb)
            if t < t1:
                t1 = t
        dx = x2 - x1
        dy = y2 - y1
        length = sqrt(dx * dx + dy * dy)
        if (t1 - t0) * length < MIN_PIECE:
            return 0
        if t0 == 0.0:
            ax = x1
            ay = y1
        else:
            ax = x1 + t0 * dx
            ay = y1 + t0 * dy
        if t1 == 1.0:
            bx = x2
            by = y2
        else:
            bx = x1 + t1 * dx
            by = y1 + t1 * dy

        if (ay < 1.0 and by > y_max) or (by < 1.0 and ay > y_max):
            return BLOCKED
        if (ay < 1.0 and by < 1.0) or (ay > y_max and by > y_max):
            return 0
        if (ax if ax > bx else bx) < -1.0 or (ax if ax < bx else bx) > 1.0:
            return 0
        if depth <= 0:
            return EXHAUSTED | _hits_chord(ax, ay, bx, by)

        for j in range(1, n):
            ca = self._cross(j, ax, ay)
            cb = self._cross(j, bx, by)
            if (ca < 0.0) != (cb < 0.0):
                cuts[ncut] = ca / (ca - cb)
                ncut += 1
        # insertion sort, at most two cuts
        for j in range(1, ncut):
            t = cuts[j]
            k = j - 1
            while k >= 0 and cuts[k] > t:
                cuts[k + 1] = cuts[k]
                k -= 1
            cuts[k + 1] = t
        cuts[ncut] = 1.0
        ncut += 1

        ex = bx - ax
        ey = by - ay
        piece_len = sqrt(ex * ex + ey * ey)
        s_lo = 0.0
        px = ax
        py = ay
        for k in range(ncut):
            s_hi = cuts[k]
            if s_hi == 1.0:
                qx = bx
                qy = by
            else:
                qx = ax + s_hi * ex
                qy = ay + s_hi * ey
            if (s_hi - s_lo) * piece_len >= MIN_PIECE:
                i = self._region((px + qx) * 0.5, (py + qy) * 0.5)
                ar = self.iar[i]
                ai = self.iai[i]
                ux = ar * px - ai * py + self.ibx[i]
                uy = ai * px + ar * py + self.iby[i]
                vx = ar * qx - ai * qy + self.ibx[i]
                vy = ai * qx + ar * qy + self.iby[i]
                res = self._hits(ux, uy, vx, vy, depth - 1)
                flags |= res & EXHAUSTED
                if res & BLOCKED:
                    return flags | BLOCKED
            s_lo = s_hi
            px = qx
            py = qy
        return flags

    cdef int _los(self, double x1, double y1, double x2, double y2, int depth) noexcept nogil:
        # bit 0: visible, bit 1: exhausted
        cdef double t
        cdef int flags = 0, res, k
        if fabs(x1) < 1.0 and fabs(y1) < 1.0 and fabs(x2) < 1.0 and fabs(y2) < 1.0:
            return 1
        if x2 < x1 or (x2 == x1 and y2 < y1):
            t = x1; x1 = x2; x2 = t
            t = y1; y1 = y2; y2 = t
        for k in range(4):
            res = self._hits(x1, y1, x2, y2, depth)
            flags |= res & EXHAUSTED
            if res & BLOCKED:
                return flags
            t = x1; x1 = -y1; y1 = t
            t = x2; x2 = -y2; y2 = t
        return flags | 1

    # -- Python surface ---------------------------------------------------

    def cross(self, int j, double x, double y):
        return self._cross(j, x, y)

    def region(self, double x, double y):
        return self._region(x, y)

    def inverse(self, int i, double x, double y):
        cdef double ar = self.iar[i], ai = self.iai[i]
        return ar * x - ai * y + self.ibx[i], ai * x + ar * y + self.iby[i]

    def contains(self, double x, double y, int max_depth):
        return bool(self._contains(x, y, max_depth))

    def contains_many(self, xs, ys, int max_depth):
        cdef const double[::1] xv = np.ascontiguousarray(xs, dtype=np.float64)
        cdef const double[::1] yv = np.ascontiguousarray(ys, dtype=np.float64)
        cdef Py_ssize_t m = xv.shape[0], k
        out = np.zeros(m, dtype=np.uint8)
        cdef unsigned char[::1] ov = out
        with nogil:
            for k in range(m):
                ov[k] = <unsigned char>self._contains(xv[k], yv[k], max_depth)
        return out

    def segment_hits(self, double x1, double y1, double x2, double y2, int max_depth):
        return self._hits(x1, y1, x2, y2, max_depth)

    def line_of_sight(self, double x1, double y1, double x2, double y2, int max_depth):
        cdef int res = self._los(x1, y1, x2, y2, max_depth)
        return bool(res & 1), bool(res & EXHAUSTED)

    def neighbor_edges(self, xs, ys, double r0, int max_depth):
        """All pairs within range ``r0`` with line of sight, as a sorted (m, 2) array."""
        cdef const double[::1] xv = np.ascontiguousarray(xs, dtype=np.float64)
        cdef const double[::1] yv = np.ascontiguousarray(ys, dtype=np.float64)
        cdef Py_ssize_t m = xv.shape[0]
        starts, order, cx, cy, ncx, ncy, gx0, gy0 = _grid(xv, yv, r0)
        cdef const Py_ssize_t[::1] st = starts
        cdef const Py_ssize_t[::1] od = order
        cdef const Py_ssize_t[::1] cxv = cx
        cdef const Py_ssize_t[::1] cyv = cy
        cdef Py_ssize_t nx = ncx, ny = ncy
        cdef Py_ssize_t i, j, a, b, c, p, cap = 64, count = 0, exhausted = 0
        cdef double dx, dy, r2 = r0 * r0
        cdef int res
        cdef Py_ssize_t* buf = <Py_ssize_t*>malloc(2 * cap * sizeof(Py_ssize_t))
        cdef Py_ssize_t* grown
        if buf == NULL:
            raise MemoryError()
        try:
            with nogil:
                for i in range(m):
                    for a in range(cxv[i] - 1, cxv[i] + 2):
                        if a < 0 or a >= nx:
                            continue
                        for b in range(cyv[i] - 1, cyv[i] + 2):
                            if b < 0 or b >= ny:
                                continue
                            c = a * ny + b
                            for p in range(st[c], st[c + 1]):
                                j = od[p]
                                if j <= i:
                                    continue
                                dx = xv[j] - xv[i]
                                dy = yv[j] - yv[i]
                                if dx * dx + dy * dy > r2:
                                    continue
                                res = self._los(xv[i], yv[i], xv[j], yv[j], max_depth)
                                if res & EXHAUSTED:
                                    exhausted += 1
                                if res & 1:
                                    if count == cap:
                                        grown = <Py_ssize_t*>realloc(buf, 4 * cap * sizeof(Py_ssize_t))
                                        if grown == NULL:
                                            with gil:
                                                raise MemoryError()
                                        buf = grown
                                        cap *= 2
                                    buf[2 * count] = i
                                    buf[2 * count + 1] = j
                                    count += 1
            edges = np.empty((count, 2), dtype=np.int64)
            for p in range(count):
                edges[p, 0] = buf[2 * p]
                edges[p, 1] = buf[2 * p + 1]
        finally:
            free(buf)
        if count:
            idx = np.lexsort((edges[:, 1], edges[:, 0]))
            edges = edges[idx]
        return edges, int(exhausted)

    def components(self, Py_ssize_t n_nodes, edges):
        """Return ``(component_count, isolated_count)`` by union-find."""
        cdef const cnp.int64_t[:, ::1] ev = np.ascontiguousarray(
            np.asarray(edges, dtype=np.int64).reshape(-1, 2))
        cdef Py_ssize_t* parent = <Py_ssize_t*>malloc((n_nodes + 1) * sizeof(Py_ssize_t))
        cdef Py_ssize_t* degree = <Py_ssize_t*>malloc((n_nodes + 1) * sizeof(Py_ssize_t))
        cdef Py_ssize_t k, a, b, ra, rb, count = n_nodes, isolated = 0
        if parent == NULL or degree == NULL:
            free(parent)
            free(degree)
            raise MemoryError()
        try:
            for k in range(n_nodes):
                parent[k] = k
                degree[k] = 0
            for k in range(ev.shape[0]):
                a = ev[k, 0]
                b = ev[k, 1]
                degree[a] += 1
                degree[b] += 1
                ra = _find(parent, a)
                rb = _find(parent, b)
                if ra != rb:
                    if ra < rb:
                        parent[rb] = ra
                    else:
                        parent[ra] = rb
                    count -= 1
            for k in range(n_nodes):
                if degree[k] == 0:
                    isolated += 1
        finally:
            free(parent)
            free(degree)
        return int(count), int(isolated)

    def trial(self, xs, ys, double r0, int max_depth):
        """Fused graph build and component count; see the Python fallback."""
        cdef const double[::1] xv = np.ascontiguousarray(xs, dtype=np.float64)
        cdef const double[::1] yv = np.ascontiguousarray(ys, dtype=np.float64)
        cdef Py_ssize_t m = xv.shape[0]
        starts, order, cx, cy, ncx, ncy, gx0, gy0 = _grid(xv, yv, r0)
        cdef const Py_ssize_t[::1] st = starts
        cdef const Py_ssize_t[::1] od = order
        cdef const Py_ssize_t[::1] cxv = cx
        cdef const Py_ssize_t[::1] cyv = cy
        cdef Py_ssize_t nx = ncx, ny = ncy
        cdef Py_ssize_t i, j, a, b, c, p, ri, rj
        cdef Py_ssize_t count = m, linked_count = 0, exhausted = 0
        cdef double dx, dy, r2 = r0 * r0
        cdef int res
        cdef Py_ssize_t* parent = <Py_ssize_t*>malloc((m + 1) * sizeof(Py_ssize_t))
        cdef unsigned char* linked = <unsigned char*>malloc(m + 1)
        if parent == NULL or linked == NULL:
            free(parent)
            free(linked)
            raise MemoryError()
        try:
            with nogil:
                for i in range(m):
                    parent[i] = i
                    linked[i] = 0
                for i in range(m):
                    for a in range(cxv[i] - 1, cxv[i] + 2):
                        if a < 0 or a >= nx:
                            continue
                        for b in range(cyv[i] - 1, cyv[i] + 2):
                            if b < 0 or b >= ny:
                                continue
                            c = a * ny + b
                            for p in range(st[c], st[c + 1]):
                                j = od[p]
                                if j <= i:
                                    continue
                                dx = xv[j] - xv[i]
                                dy = yv[j] - yv[i]
                                if dx * dx + dy * dy > r2:
                                    continue
                                ri = _find(parent, i)
                                rj = _find(parent, j)
                                if ri == rj:
                                    continue
                                res = self._los(xv[i], yv[i], xv[j], yv[j], max_depth)
                                if res & EXHAUSTED:
                                    exhausted += 1
                                if res & 1:
                                    if ri < rj:
                                        parent[rj] = ri
                                    else:
                                        parent[ri] = rj
                                    count -= 1
                                    linked[i] = 1
                                    linked[j] = 1
                for i in range(m):
                    linked_count += linked[i]
        finally:
            free(parent)
            free(linked)
        return int(count), int(m - linked_count), int(exhausted)


def _grid(xv, yv, double r0):
    """Counting sort of points into square cells of side ``r0``.

    Cell of a point is ``floor(coord / r0)``; within a cell points keep index
    order, matching the dict-of-lists grid of the Python fallback.
    """
    xs = np.asarray(xv)
    ys = np.asarray(yv)
    m = xs.shape[0]
    if m == 0:
        z = np.zeros(0, dtype=np.intp)
        return np.zeros(2, dtype=np.intp), z, z, z, 1, 1, 0, 0
    gx = np.floor(xs / r0).astype(np.intp)
    gy = np.floor(ys / r0).astype(np.intp)
    gx0 = gx.min()
    gy0 = gy.min()
    cx = np.ascontiguousarray(gx - gx0)
    cy = np.ascontiguousarray(gy - gy0)
    ncx = int(cx.max()) + 1
    ncy = int(cy.max()) + 1
    cell = cx * ncy + cy
    order = np.ascontiguousarray(np.argsort(cell, kind="stable"), dtype=np.intp)
    starts = np.zeros(ncx * ncy + 1, dtype=np.intp)
    np.cumsum(np.bincount(cell, minlength=ncx * ncy), out=starts[1:])
    return starts, order, cx, cy, ncx, ncy, int(gx0), int(gy0)
