"""Self-similar fractal domains F2(theta) and F3(theta).

A domain is the square [-1, 1]^2 with each side replaced by a copy of a
self-similar curve.  The top copy runs from (-1, 1) to (1, 1) and is the
attractor of ``n`` plane similarities built from ``n + 1`` points
``P_0 .. P_n`` on a circular arc; consecutive points subtend ``2 theta`` at
the arc's center ``O``.  The other three sides are quarter-turn rotations of
the top copy.
"""
import cmath
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ._backend import Kernel, kernel_class
from ._purepy import fold_to_top as _fold

DEFAULT_MAX_DEPTH = 64
VERTEX_BUDGET = 5_000_000
THETA_GUARD = 1e-6

THETA_MAX = {2: math.pi / 4, 3: math.pi / 6}

# (image of P_0, image of P_n) for each map, and whether it swaps sides.
_MAP_TABLE = {
    2: [((1, 0), True), ((2, 1), True)],
    3: [((1, 0), True), ((1, 2), False), ((3, 2), True)],
}


class GeometryError(ValueError):
    pass


class DegenerateAngleError(GeometryError):
    pass


class DegenerateMapError(GeometryError):
    pass


class VertexBudgetError(RuntimeError):
    pass


@dataclass(frozen=True)
class FractalSpec:
    family: int
    theta: float

    def __post_init__(self):
        if self.family not in THETA_MAX:
            raise GeometryError(f"family must be 2 or 3, got {self.family!r}")
        hi = THETA_MAX[self.family]
        theta = self.theta
        # lower end: theta -> 0 is the plain square, a harmless limit.
        # upper end: keep THETA_GUARD clear of the degenerate limit.
        if not (theta > 0.0 and hi - theta >= THETA_GUARD - 1e-15):
            raise DegenerateAngleError(
                f"theta={theta!r} outside the valid open interval "
                f"(0, {hi:.12g}) for family {self.family} "
                f"(upper guard margin {THETA_GUARD:g} rad)"
            )


@dataclass(frozen=True)
class SimilarityMap:
    """Direct plane similarity ``z -> linear * z + offset`` on complex coordinates.

    ``side_flip`` marks maps that exchange the two sides of the directed
    base chord, i.e. move inside points outside and vice versa.
    """

    linear: complex
    offset: complex
    side_flip: bool = False

    @property
    def scale(self):
        return abs(self.linear)

    @property
    def rotation(self):
        return cmath.phase(self.linear)

    @property
    def translation(self):
        return (self.offset.real, self.offset.imag)

    @property
    def inverse_coefficients(self):
        inv = 1.0 / self.linear
        return inv, -self.offset * inv

    def apply(self, p):
        return _from_complex(self.linear * _to_complex(p) + self.offset)

    def inverse_apply(self, p):
        inv, off = self.inverse_coefficients
        return _from_complex(inv * _to_complex(p) + off)


def _to_complex(p):
    p = np.asarray(p, dtype=float)
    return p[..., 0] + 1j * p[..., 1]


def _from_complex(z):
    return np.stack([np.real(z), np.imag(z)], axis=-1)


def similarity_from_pairs(p1, q1, p2, q2, side_flip=False):
    """The unique direct similarity sending ``p1 -> q1`` and ``p2 -> q2``."""
    zp1, zq1, zp2, zq2 = (complex(float(v[0]), float(v[1])) for v in (p1, q1, p2, q2))
    if zp1 == zp2:
        raise DegenerateMapError("source points coincide")
    if zq1 == zq2:
        raise DegenerateMapError("target points coincide (zero scale)")
    linear = (zq2 - zq1) / (zp2 - zp1)
    return SimilarityMap(linear, zq1 - linear * zp1, bool(side_flip))


@dataclass(frozen=True)
class FractalDomain:
    spec: FractalSpec
    r: float
    D: float
    V: float
    y_max: float
    maps: tuple
    base_points: tuple
    circle_center: tuple
    circle_radius: float

    @property
    def family(self):
        return self.spec.family

    @property
    def n(self):
        return self.spec.family

    @property
    def theta(self):
        return self.spec.theta

    @cached_property
    def kernel(self):
        return self.make_kernel()

    def make_kernel(self, backend=None):
        """Hot-loop kernels for this domain; ``backend`` is "python", "cython" or None for the default."""
        cls = Kernel if backend is None else kernel_class(backend)
        inv = [m.inverse_coefficients for m in self.maps]
        return cls(
            self.n,
            self.y_max,
            self.circle_center,
            self.base_points,
            [c[0] for c in inv],
            [c[1] for c in inv],
            [m.side_flip for m in self.maps],
        )

    @property
    def bounding_half_width(self):
        return self.y_max

    def __repr__(self):
        return (
            f"FractalDomain(F{self.n}({self.theta:.6g}), r={self.r:.6g}, "
            f"D={self.D:.6g}, V={self.V:.6g}, y_max={self.y_max:.6g})"
        )


def similarity_dimension(family, theta):
    if family == 2:
        return math.log(2.0) / math.log(2.0 * math.cos(theta))
    c = math.cos(theta)
    return math.log(3.0) / math.log(4.0 * c * c - 1.0)


def enclosed_area(family, theta):
    """Area of the domain: the inner square plus four curve lobes."""
    if family == 2:
        lobe = math.sin(2 * theta) / (2.0 + math.cos(2 * theta))
    else:
        lobe = 2.0 * math.sin(2 * theta) ** 3 / (math.sin(3 * theta) ** 2 + math.sin(theta) ** 2)
    return 4.0 + 4.0 * lobe


def derive_domain(spec):
    n = spec.family
    theta = spec.theta
    s = math.sin(n * theta)
    radius = 1.0 / s
    center = (0.0, 1.0 - math.cos(n * theta) / s)
    points = []
    for k in range(n + 1):
        phi = (2 * k - n) * theta
        points.append((radius * math.sin(phi), center[1] + radius * math.cos(phi)))
    points[0] = (-1.0, 1.0)
    points[n] = (1.0, 1.0)

    maps = tuple(
        similarity_from_pairs(points[0], points[a], points[n], points[b], flip)
        for (a, b), flip in _MAP_TABLE[n]
    )
    return FractalDomain(
        spec=spec,
        r=math.sin(theta) / s,
        D=similarity_dimension(n, theta),
        V=enclosed_area(n, theta),
        y_max=1.0 + math.tan((n - 1) * theta),
        maps=maps,
        base_points=tuple(points),
        circle_center=center,
        circle_radius=radius,
    )


def make_domain(family, theta):
    return derive_domain(FractalSpec(int(family), float(theta)))


def fold_to_top(p):
    """Quarter-turn ``p`` into the top quadrant ``|x| <= y``; returns ``((x, y), k)``."""
    x, y, k = _fold(float(p[0]), float(p[1]))
    return (x, y), k


def region_index(domain, p):
    """Index of the angular sector at the circle center that contains ``p``.

    Sector ``i`` lies between the rays through ``P_i`` and ``P_{i+1}``; points
    on a dividing ray go to the lower index.
    """
    return domain.kernel.region(float(p[0]), float(p[1]))


def contains(domain, p, max_depth=DEFAULT_MAX_DEPTH):
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    return domain.kernel.contains(float(p[0]), float(p[1]), int(max_depth))


def contains_points(domain, points, max_depth=DEFAULT_MAX_DEPTH):
    """Vectorized :func:`contains` over an ``(m, 2)`` array; returns a bool mask."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    mask = domain.kernel.contains_many(pts[:, 0], pts[:, 1], int(max_depth))
    return mask.astype(bool)


def curve_polyline(domain, level, max_vertices=VERTEX_BUDGET):
    """Level-``level`` approximation of the top edge curve, ``n**level + 1`` vertices.

    Vertices are in traversal order from (-1, 1) to (1, 1).
    """
    if level < 0:
        raise ValueError("level must be >= 0")
    n = domain.n
    if n**level + 1 > max_vertices:
        raise VertexBudgetError(f"level {level} needs {n**level + 1} vertices (budget {max_vertices})")
    z = np.array([-1.0 + 1.0j, 1.0 + 1.0j])
    for _ in range(level):
        parts = []
        for m in domain.maps:
            w = m.linear * z + m.offset
            if m.side_flip:
                w = w[::-1]
            parts.append(w if not parts else w[1:])
        z = np.concatenate(parts)
        # the curve ends are fixed points of the construction
        z[0] = -1.0 + 1.0j
        z[-1] = 1.0 + 1.0j
    return _from_complex(z)


def domain_boundary_polyline(domain, level, max_vertices=VERTEX_BUDGET):
    """Closed boundary: four quarter-turn copies of the edge curve, clockwise.

    Returns ``4 * n**level`` vertices; the closing edge back to the first
    vertex is implicit.
    """
    if 4 * domain.n**level > max_vertices:
        raise VertexBudgetError(
            f"level {level} needs {4 * domain.n**level} vertices (budget {max_vertices})"
        )
    top = curve_polyline(domain, level, max_vertices)[:-1]
    copies = [top]
    for _ in range(3):
        x, y = copies[-1][:, 0], copies[-1][:, 1]
        copies.append(np.stack([y, -x], axis=-1))
    return np.concatenate(copies)
