"""Range-plus-line-of-sight graphs and their connectivity."""
import math
from dataclasses import dataclass

import numpy as np

from .geometry import DEFAULT_MAX_DEPTH


@dataclass(frozen=True, eq=False)
class Network:
    n_nodes: int
    edges: np.ndarray  # (m, 2) int64, i < j, sorted
    r0: float
    depth_exhausted_count: int = 0


@dataclass(frozen=True)
class ConnectivityReport:
    fully_connected: bool
    component_count: int
    isolated_count: int
    N: int

    def as_dict(self):
        return {
            "fully_connected": self.fully_connected,
            "component_count": self.component_count,
            "isolated_count": self.isolated_count,
            "N": self.N,
        }


def build_network(domain, nodes, r0=1.0, max_depth=DEFAULT_MAX_DEPTH):
    """Link every pair within distance ``r0`` that has line of sight.

    Candidates come from a uniform grid with cell side ``r0``; only the 3x3
    block of cells around each node is scanned.
    """
    if r0 <= 0:
        raise ValueError("r0 must be positive")
    pts = getattr(nodes, "points", nodes)
    pts = np.asarray(pts, dtype=float).reshape(-1, 2)
    edges, exhausted = domain.kernel.neighbor_edges(pts[:, 0], pts[:, 1], float(r0), int(max_depth))
    return Network(len(pts), edges, float(r0), int(exhausted))


def analyze(net):
    """Components by disjoint-set union; zero or one node counts as connected."""
    parent = list(range(net.n_nodes))
    count = net.n_nodes
    for a, b in net.edges.tolist():
        a = _find(parent, a)
        b = _find(parent, b)
        if a != b:
            parent[max(a, b)] = min(a, b)
            count -= 1
    degree = np.bincount(net.edges.ravel(), minlength=net.n_nodes)
    isolated = int(np.count_nonzero(degree == 0))
    return ConnectivityReport(count <= 1, count, isolated, net.n_nodes)


def component_labels(net):
    """Smallest node index of each node's component."""
    parent = list(range(net.n_nodes))
    for a, b in net.edges.tolist():
        a = _find(parent, a)
        b = _find(parent, b)
        if a != b:
            parent[max(a, b)] = min(a, b)
    return np.array([_find(parent, i) for i in range(net.n_nodes)], dtype=np.int64)


def _find(parent, a):
    while parent[a] != a:
        parent[a] = parent[parent[a]]
        a = parent[a]
    return a


def expected_isolated(domain, rho, r0=1.0):
    """Interior estimate ``rho * V * exp(-rho * pi * r0**2)`` of isolated nodes."""
    if rho < 0 or r0 <= 0:
        raise ValueError("need rho >= 0 and r0 > 0")
    return rho * domain.V * math.exp(-rho * math.pi * r0 * r0)
