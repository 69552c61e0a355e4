"""Line-of-sight tests against the fractal boundary.

A segment is pulled back through the inverse similarities, split wherever it
crosses a sector boundary, until every piece is decided: entirely below the
base chord or entirely above the top of the curve (clear), or crossing the
whole band inside one sector (blocked).  Pieces still undecided when the
depth cap is hit are tested against the base chord.
"""
from dataclasses import dataclass

from ._purepy import BLOCKED, EXHAUSTED
from .geometry import DEFAULT_MAX_DEPTH


@dataclass(frozen=True)
class VisibilityVerdict:
    blocked: bool
    depth_exhausted: bool = False


def segment_hits_edge_curve(domain, segment, max_depth=DEFAULT_MAX_DEPTH):
    """Does the segment, given in the frame of the top edge, cross that edge's curve?"""
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    (x1, y1), (x2, y2) = segment
    flags = domain.kernel.segment_hits(float(x1), float(y1), float(x2), float(y2), int(max_depth))
    return VisibilityVerdict(bool(flags & BLOCKED), bool(flags & EXHAUSTED))


def line_of_sight_verdict(domain, p, q, max_depth=DEFAULT_MAX_DEPTH):
    visible, exhausted = domain.kernel.line_of_sight(
        float(p[0]), float(p[1]), float(q[0]), float(q[1]), int(max_depth)
    )
    return VisibilityVerdict(not visible, exhausted)


def line_of_sight(domain, p, q, max_depth=DEFAULT_MAX_DEPTH):
    """True iff segment ``pq`` meets none of the four edge curves.

    Symmetric in ``p`` and ``q`` by construction.
    """
    return not line_of_sight_verdict(domain, p, q, max_depth).blocked
