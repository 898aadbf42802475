"""Heatmap decoding: directional NMS, point re-scoring, alpha-shape polygons.

The decoder consumes the two directional heatmaps. Each map is first thinned
by 1-D non-maximum suppression along its own axis, then only cells exceeding
the confidence threshold in *both* thinned maps survive as contour point
candidates; unidirectional patterns (streaks) die here because their
orthogonal response stays low. The surviving points are turned back into a
polygon via an alpha shape over the candidate set.

Decoding operates on one region per call: callers decode per proposal crop,
whole image, or split candidates spatially with `cluster_points` first.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import spatial

from .errors import (
    DegenerateGeometry,
    InvalidConfig,
    InvalidGrid,
    TooFewCandidates,
)
from .lotm import HORIZONTAL, VERTICAL

log = logging.getLogger(__name__)


@dataclass
class Detection:
    """A reconstructed text region: polygon plus confidence score."""

    polygon: np.ndarray
    score: float


@dataclass
class DecodeConfig:
    """Decoding knobs.

    theta is the confidence threshold applied to both thinned maps;
    nms_window the centered 1-D suppression window; alpha_scale multiplies
    the median candidate nearest-neighbor distance to pick the alpha-shape
    radius. The two ablation flags reproduce degraded variants: with
    `single_direction` only the horizontal map is thresholded, with
    `skip_rescoring` the NMS thinning is bypassed entirely.
    """

    theta: float = 0.5
    nms_window: int = 3
    alpha_scale: float = 1.5
    min_candidates: int = 4
    resolution: int = 256
    single_direction: bool = False
    skip_rescoring: bool = False

    def __post_init__(self):
        if not 0.0 < self.theta < 1.0:
            raise InvalidConfig(f"theta must be in (0, 1), got {self.theta}")
        if self.nms_window < 1 or self.nms_window % 2 == 0:
            raise InvalidConfig(f"nms window must be odd >= 1, got {self.nms_window}")
        if self.alpha_scale <= 0:
            raise InvalidConfig(f"alpha_scale must be positive, got {self.alpha_scale}")


@dataclass
class ContourCandidates:
    """Cells that passed re-scoring: (row, col, confidence) rows."""

    points: np.ndarray  # (M, 3) float64
    grid_shape: tuple = field(default=(0, 0))

    def __len__(self) -> int:
        return len(self.points)


def _as_heatmap(grid) -> np.ndarray:
    g = np.asarray(grid, dtype=np.float64)
    if g.ndim != 2:
        raise InvalidGrid(f"heatmap must be 2-D, got shape {g.shape}")
    if not np.isfinite(g).all():
        raise InvalidGrid("heatmap has non-finite values")
    if g.min() < 0.0 or g.max() > 1.0:
        raise InvalidGrid("heatmap values must lie in [0, 1]")
    return g


def directional_nms(grid, orientation: str, window: int = 3) -> np.ndarray:
    """1-D local-maximum suppression along rows (horizontal) or columns.

    A cell survives iff it equals the maximum of its centered window (the
    window is clipped at the grid border); tied cells all survive, so runs of
    equal local maxima are preserved. Suppressed cells become 0. Window 1 is
    the identity.
    """
    if window < 1 or window % 2 == 0:
        raise InvalidConfig(f"window must be odd >= 1, got {window}")
    g = np.asarray(grid, dtype=np.float64)
    if g.ndim != 2:
        raise InvalidGrid(f"expected 2-D grid, got shape {g.shape}")
    if orientation == VERTICAL:
        return directional_nms(g.T, HORIZONTAL, window).T
    if orientation != HORIZONTAL:
        raise InvalidConfig(f"unknown orientation {orientation!r}")

    half = window // 2
    padded = np.pad(g, ((0, 0), (half, half)), constant_values=-np.inf)
    win = np.lib.stride_tricks.sliding_window_view(padded, window, axis=1)
    winmax = win.max(axis=-1)
    return np.where(g >= winmax, g, 0.0)


def rescore(hmap, vmap, cfg: DecodeConfig = None) -> ContourCandidates:
    """Point re-scoring: keep cells confident in both thinned directional maps.

    Both heatmaps are suppressed along their own direction, then cell (i, j)
    becomes a candidate iff both thinned values exceed theta. The candidate
    confidence is the smaller of the two (the both-directions requirement).
    """
    cfg = cfg if cfg is not None else DecodeConfig()
    h = _as_heatmap(hmap)
    v = _as_heatmap(vmap)
    if h.shape != v.shape:
        raise InvalidGrid(f"heatmap shapes differ: {h.shape} vs {v.shape}")
    hs = directional_nms(h, HORIZONTAL, cfg.nms_window)
    vs = directional_nms(v, VERTICAL, cfg.nms_window)
    keep = (hs > cfg.theta) & (vs > cfg.theta)
    rows, cols = np.nonzero(keep)
    conf = np.minimum(hs[rows, cols], vs[rows, cols])
    points = np.column_stack([rows, cols, conf]).astype(np.float64)
    return ContourCandidates(points, h.shape)


def _circumradii(points: np.ndarray, simplices: np.ndarray) -> np.ndarray:
    a = points[simplices[:, 0]]
    b = points[simplices[:, 1]]
    c = points[simplices[:, 2]]
    la = np.linalg.norm(b - c, axis=1)
    lb = np.linalg.norm(c - a, axis=1)
    lc = np.linalg.norm(a - b, axis=1)
    cross = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (
        c[:, 0] - a[:, 0]
    )
    area2 = np.abs(cross)  # twice the triangle area
    with np.errstate(divide="ignore", invalid="ignore"):
        r = la * lb * lc / (2.0 * area2)
    r[area2 == 0.0] = np.inf
    return r


def _convex_hull_polygon(points: np.ndarray) -> np.ndarray:
    try:
        hull = spatial.ConvexHull(points)
    except Exception as exc:  # qhull refuses degenerate inputs
        raise DegenerateGeometry(f"convex hull failed: {exc}") from exc
    return points[hull.vertices]


def _walk_boundary_cycles(points: np.ndarray, edges: list) -> list:
    """Split directed boundary edges into simple cycles.

    At vertices with several outgoing boundary edges (pinch points) the walk
    picks the most counterclockwise continuation, which keeps each extracted
    cycle non-self-crossing.
    """
    outgoing = {}
    for u, v in edges:
        outgoing.setdefault(u, []).append(v)
    unused = set(edges)
    cycles = []
    for start, _ in edges:
        if not any((start, v) in unused for v in outgoing.get(start, ())):
            continue
        cycle = [start]
        prev = None
        node = start
        while True:
            choices = [v for v in outgoing.get(node, ()) if (node, v) in unused]
            if not choices:
                break
            if prev is None or len(choices) == 1:
                nxt = choices[0]
            else:
                din = points[node] - points[prev]
                ang_in = np.arctan2(din[1], din[0])
                best, best_turn = choices[0], None
                for v in choices:
                    dout = points[v] - points[node]
                    turn = np.arctan2(dout[1], dout[0]) - ang_in
                    turn = (turn + np.pi) % (2.0 * np.pi)  # in [0, 2pi): prefer sharpest left
                    if best_turn is None or turn > best_turn:
                        best, best_turn = v, turn
                nxt = best
            unused.discard((node, nxt))
            prev, node = node, nxt
            if node == start:
                break
            cycle.append(node)
        if len(cycle) >= 3 and node == start:
            cycles.append(cycle)
    return cycles


def alpha_shape(points, alpha: float) -> np.ndarray:
    """Concave outline of a point set via the alpha complex.

    Delaunay triangles whose circumradius exceeds alpha are dropped; the
    outer boundary of the largest surviving connected component (by area) is
    returned as a simple polygon whose vertices are input points. If the
    filter removes everything the convex hull is returned instead, which is
    also the alpha -> infinity limit.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    pts = np.unique(pts, axis=0)
    if len(pts) < 4:
        raise TooFewCandidates(f"alpha shape needs >= 4 distinct points, got {len(pts)}")
    if alpha <= 0:
        raise InvalidConfig(f"alpha must be positive, got {alpha}")
    try:
        tri = spatial.Delaunay(pts)
    except Exception as exc:  # qhull error: collinear or otherwise degenerate
        raise DegenerateGeometry(f"triangulation failed: {exc}") from exc

    radii = _circumradii(pts, tri.simplices)
    kept = radii <= alpha
    if not kept.any():
        return _convex_hull_polygon(pts)

    # connected components of kept triangles over shared-edge adjacency
    comp = np.full(len(tri.simplices), -1, dtype=int)
    ncomp = 0
    for seed in np.nonzero(kept)[0]:
        if comp[seed] >= 0:
            continue
        stack = [seed]
        comp[seed] = ncomp
        while stack:
            t = stack.pop()
            for nb in tri.neighbors[t]:
                if nb >= 0 and kept[nb] and comp[nb] < 0:
                    comp[nb] = ncomp
                    stack.append(nb)
        ncomp += 1

    areas = np.zeros(ncomp)
    a = pts[tri.simplices[:, 0]]
    b = pts[tri.simplices[:, 1]]
    c = pts[tri.simplices[:, 2]]
    tri_area = 0.5 * np.abs(
        (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1])
        - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])
    )
    for t in np.nonzero(kept)[0]:
        areas[comp[t]] += tri_area[t]
    main = int(np.argmax(areas))

    # directed boundary edges of the main component, triangles oriented CCW
    edges = []
    for t in np.nonzero(comp == main)[0]:
        verts = tri.simplices[t]
        pa, pb, pc = pts[verts]
        if (pb[0] - pa[0]) * (pc[1] - pa[1]) - (pb[1] - pa[1]) * (pc[0] - pa[0]) < 0:
            verts = verts[::-1]
        for e in range(3):
            edges.append((int(verts[e]), int(verts[(e + 1) % 3])))
    # an edge is on the boundary iff its reverse is not also present
    edge_set = set(edges)
    boundary = [e for e in edges if (e[1], e[0]) not in edge_set]

    cycles = _walk_boundary_cycles(pts, boundary)
    if not cycles:
        return _convex_hull_polygon(pts)
    best = max(
        cycles,
        key=lambda cyc: abs(
            np.dot(pts[cyc][:, 0], np.roll(pts[cyc][:, 1], -1))
            - np.dot(pts[cyc][:, 1], np.roll(pts[cyc][:, 0], -1))
        ),
    )
    return pts[best]


def candidate_points(cands: ContourCandidates) -> np.ndarray:
    """Candidate cell centers as (x, y) geometry points."""
    return np.column_stack([cands.points[:, 1] + 0.5, cands.points[:, 0] + 0.5])


def adaptive_alpha(points: np.ndarray, alpha_scale: float) -> float:
    """alpha_scale times the median nearest-neighbor distance of the points."""
    tree = spatial.cKDTree(points)
    dist, _ = tree.query(points, k=2)
    med = float(np.median(dist[:, 1]))
    if med <= 0.0:
        med = 1.0
    return alpha_scale * med


def extract_candidates(hmap, vmap, cfg: DecodeConfig) -> ContourCandidates:
    """Candidate extraction honoring the ablation flags.

    Standard mode is `rescore`; `single_direction` thresholds the thinned
    horizontal map alone; `skip_rescoring` thresholds the raw maps jointly
    without any suppression.
    """
    h = _as_heatmap(hmap)
    v = _as_heatmap(vmap)
    if h.shape != v.shape:
        raise InvalidGrid(f"heatmap shapes differ: {h.shape} vs {v.shape}")
    if cfg.single_direction:
        hs = h if cfg.skip_rescoring else directional_nms(h, HORIZONTAL, cfg.nms_window)
        rows, cols = np.nonzero(hs > cfg.theta)
        conf = hs[rows, cols]
        pts = np.column_stack([rows, cols, conf]).astype(np.float64)
        return ContourCandidates(pts, h.shape)
    if cfg.skip_rescoring:
        conf = np.minimum(h, v)
        rows, cols = np.nonzero(conf > cfg.theta)
        pts = np.column_stack([rows, cols, conf[rows, cols]]).astype(np.float64)
        return ContourCandidates(pts, h.shape)
    return rescore(h, v, cfg)


def detection_from_candidates(cands: ContourCandidates, cfg: DecodeConfig):
    """Build one Detection from a candidate set, or None if not possible."""
    if len(cands) < cfg.min_candidates:
        return None
    pts = candidate_points(cands)
    alpha = adaptive_alpha(pts, cfg.alpha_scale)
    try:
        poly = alpha_shape(pts, alpha)
    except (DegenerateGeometry, TooFewCandidates) as exc:
        log.warning("dropping region: %s", exc)
        return None
    return Detection(poly, float(cands.points[:, 2].mean()))


def decode_region(hmap, vmap, cfg: DecodeConfig = None):
    """Decode one region's heatmap pair into an optional Detection.

    Pipeline: candidate extraction -> adaptive alpha from the median
    nearest-neighbor spacing -> alpha-shape polygon; the detection score is
    the mean candidate confidence. Returns None when fewer than
    `min_candidates` survive or the geometry degenerates.
    """
    cfg = cfg if cfg is not None else DecodeConfig()
    cands = extract_candidates(hmap, vmap, cfg)
    return detection_from_candidates(cands, cfg)


def cluster_points(points, link_distance: float) -> list:
    """Single-linkage clusters of 2-D points; returns lists of point indices.

    This is the caller-side region split used before polygon reconstruction
    when one grid holds several well-separated text instances.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    n = len(pts)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    tree = spatial.cKDTree(pts)
    for i, j in tree.query_pairs(link_distance):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return [groups[k] for k in sorted(groups)]
