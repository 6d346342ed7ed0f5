"""Evaluation machinery: surface geodesics, point-similarity scores, curves.

Geodesic distances run over a user-supplied weighted vertex graph (the body
surface itself is never rasterized here; callers snap image points to the
nearest vertex before scoring). Point errors feed two summaries: the
Gaussian geodesic point score exp(-g^2 / (2 kappa^2)) and the normalized
area under the correct-point-ratio curve,

    auc(errors, a) = (1/a) * integral_0^a f(t) dt,
    f(t) = fraction of errors strictly below t,

which collapses to the closed form mean(max(0, a - e)) / a.

Segmentation quality uses IoU, its mean over instances, and the fraction of
parts at or above an IoU threshold.

Mesh text format: a line "v <count>" followed by "e <i> <j> <w>" lines for
undirected edges; error sets are one float per line.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .correspondence import BinaryMask
from .errors import (
    DimensionMismatch,
    EmptyErrorSet,
    EmptyList,
    Unreachable,
    VertexOutOfRange,
)

DEFAULT_KAPPA = 0.255
DEFAULT_AUC_THRESHOLDS = (0.10, 0.30)  # meters


@dataclass(frozen=True)
class GpsParams:
    """Scale of the Gaussian point-score kernel; 0.255 puts score 0.5 at 30 cm."""

    kappa: float = DEFAULT_KAPPA

    def __post_init__(self):
        if not (self.kappa > 0 and math.isfinite(self.kappa)):
            raise ValueError(f"kappa must be a positive finite scale, got {self.kappa}")


@dataclass(frozen=True)
class MeshGeodesic:
    """Undirected weighted vertex graph; weights in meters, strictly positive."""

    vertex_count: int
    edges: tuple = field(default_factory=tuple)  # (i, j, weight) triples

    def __post_init__(self):
        if self.vertex_count < 1:
            raise ValueError("need at least one vertex")
        edges = []
        for i, j, w in self.edges:
            i, j, w = int(i), int(j), float(w)
            if not (0 <= i < self.vertex_count and 0 <= j < self.vertex_count):
                raise VertexOutOfRange(f"edge ({i}, {j}) outside 0..{self.vertex_count - 1}")
            if i == j:
                raise ValueError(f"self-loop at vertex {i}")
            if not (w > 0 and math.isfinite(w)):
                raise ValueError(f"edge weight {w} must be finite positive")
            edges.append((i, j, w))
        object.__setattr__(self, "edges", tuple(edges))
        adjacency: list[list[tuple[int, float]]] = [[] for _ in range(self.vertex_count)]
        for i, j, w in edges:
            adjacency[i].append((j, w))
            adjacency[j].append((i, w))
        object.__setattr__(self, "_adjacency", adjacency)

    def _check_vertex(self, i: int) -> None:
        if not 0 <= i < self.vertex_count:
            raise VertexOutOfRange(f"vertex {i} outside 0..{self.vertex_count - 1}")


def distances_from(mesh: MeshGeodesic, source: int) -> np.ndarray:
    """Dijkstra from one vertex; unreachable vertices get +inf."""
    mesh._check_vertex(source)
    dist = np.full(mesh.vertex_count, np.inf)
    dist[source] = 0.0
    done = np.zeros(mesh.vertex_count, dtype=bool)
    heap = [(0.0, source)]
    adjacency = mesh._adjacency
    while heap:
        d, node = heapq.heappop(heap)
        if done[node]:
            continue
        done[node] = True
        for nbr, w in adjacency[node]:
            nd = d + w
            if nd < dist[nbr]:
                dist[nbr] = nd
                heapq.heappush(heap, (nd, nbr))
    return dist


def geodesic_distance(mesh: MeshGeodesic, i: int, j: int) -> float:
    """Shortest-path distance in meters; raises Unreachable when disconnected."""
    mesh._check_vertex(i)
    mesh._check_vertex(j)
    if i == j:
        return 0.0
    d = distances_from(mesh, i)[j]
    if math.isinf(d):
        raise Unreachable(f"no path from {i} to {j}")
    return float(d)


def gps_score(g: float, params: GpsParams = GpsParams()) -> float:
    """Gaussian similarity of a geodesic error: exp(-g^2 / (2 kappa^2))."""
    if g < 0:
        raise ValueError(f"geodesic error must be >= 0, got {g}")
    return math.exp(-(g * g) / (2.0 * params.kappa * params.kappa))


def auc(errors, a: float) -> float:
    """Normalized area under the correct-point-ratio curve up to threshold a.

    Closed form of (1/a) * integral_0^a f(t) dt for the step curve
    f(t) = mean(errors < t).
    """
    if not a > 0:
        raise ValueError(f"threshold a must be positive, got {a}")
    e = np.asarray(errors, dtype=np.float64)
    if e.size == 0:
        raise EmptyErrorSet("need at least one point error")
    if np.any(e < 0) or not np.all(np.isfinite(e)):
        raise ValueError("point errors must be finite and >= 0")
    return float(np.maximum(0.0, a - e).mean() / a)


def iou(p: BinaryMask, g: BinaryMask) -> float:
    """Intersection over union; 1.0 when both masks are empty."""
    if p.mask.shape != g.mask.shape:
        raise DimensionMismatch(f"{p.mask.shape} vs {g.mask.shape}")
    union = np.logical_or(p.mask, g.mask).sum()
    if union == 0:
        return 1.0
    return float(np.logical_and(p.mask, g.mask).sum() / union)


def ap_r(instance_ious) -> float:
    """Mean IoU over instances."""
    vals = np.asarray(instance_ious, dtype=np.float64)
    if vals.size == 0:
        raise EmptyList("need at least one instance IoU")
    return float(vals.mean())


def pcp(part_ious, threshold: float) -> float:
    """Fraction of parts with IoU at or above the threshold (inclusive)."""
    vals = np.asarray(part_ious, dtype=np.float64)
    if vals.size == 0:
        raise EmptyList("need at least one part IoU")
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must be in (0, 1), got {threshold}")
    return float((vals >= threshold).mean())


def read_mesh(text: str) -> MeshGeodesic:
    """Parse the "v <count>" / "e <i> <j> <w>" mesh text format."""
    vertex_count = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if fields[0] == "v" and len(fields) == 2:
            vertex_count = int(fields[1])
        elif fields[0] == "e" and len(fields) == 4:
            edges.append((int(fields[1]), int(fields[2]), float(fields[3])))
        else:
            raise ValueError(f"mesh line {lineno}: cannot parse {raw!r}")
    if vertex_count is None:
        raise ValueError("mesh text has no 'v <count>' line")
    return MeshGeodesic(vertex_count, tuple(edges))


def read_error_set(text: str) -> np.ndarray:
    """One float per line; blanks and #-comments skipped."""
    values = [
        float(line.strip())
        for line in text.splitlines()
        if line.strip() and not line.strip().startswith("#")
    ]
    if not values:
        raise EmptyErrorSet("error file has no values")
    return np.asarray(values, dtype=np.float64)
