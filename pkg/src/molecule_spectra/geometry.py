"""Structured triangulations of the truncated molecule strip and of polygonal
comparison domains.

All meshes are built on a uniform grid of pitch ``h``; node coordinates are
stored as ``h * integer_index`` so that meshes at pitch ``h`` and ``h / 2``
share their coarse nodes bit-for-bit.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

DIRICHLET_STRIP = "DIRICHLET_STRIP"
NEUMANN_AXIS = "NEUMANN_AXIS"
DIRICHLET_TRUNC = "DIRICHLET_TRUNC"

MAIN = "MAIN"
ANTI = "ANTI"

_GRID_RTOL = 1e-9


def gamma_tag(i: int) -> str:
    """Tag of the interaction chain belonging to the ``i``-th atom (1-based)."""
    return f"GAMMA_{i}"


def polygon_edge_tag(j: int) -> str:
    return f"EDGE_{j}"


@dataclass(frozen=True)
class BoundaryCondition:
    """Condition carried by a polygon edge.

    ``kind`` is one of ``"NEUMANN"``, ``"DIRICHLET"`` or ``"ROBIN"``; only Robin
    edges carry a finite ``gamma``. ``ROBIN`` with ``gamma=inf`` is normalised to
    Dirichlet by :func:`robin`.
    """

    kind: str
    gamma: float = 0.0

    def __post_init__(self):
        if self.kind not in ("NEUMANN", "DIRICHLET", "ROBIN"):
            raise ValueError(f"unknown boundary condition kind {self.kind!r}")
        if self.kind == "ROBIN" and not (self.gamma >= 0 and math.isfinite(self.gamma)):
            raise ValueError("Robin constant must be finite and nonnegative")

    def to_json(self):
        if self.kind == "ROBIN":
            return {"kind": self.kind, "gamma": self.gamma}
        return {"kind": self.kind}


NEUMANN = BoundaryCondition("NEUMANN")
DIRICHLET = BoundaryCondition("DIRICHLET")


def robin(gamma: float) -> BoundaryCondition:
    if math.isinf(gamma):
        return DIRICHLET
    return BoundaryCondition("ROBIN", float(gamma))


def _as_grid_index(value: float, h: float, what: str) -> int:
    q = value / h
    k = round(q)
    if abs(q - k) > _GRID_RTOL * max(1.0, abs(q)):
        raise ValueError(f"{what}={value!r} is not an integer multiple of h={h!r}")
    return int(k)


@dataclass(frozen=True)
class StripSpec:
    """Truncated strip ``{x, y >= 0, |x - y| <= d, x, y <= L}`` meshed at ``h = d / M``."""

    d: float
    L: float
    M: int

    def __post_init__(self):
        if not self.d > 0:
            raise ValueError("molecule width d must be positive")
        if int(self.M) != self.M or self.M < 2:
            raise ValueError("M must be an integer >= 2")
        if self.L < 4 * self.d * (1 - _GRID_RTOL):
            raise ValueError("truncation length must satisfy L >= 4d")
        _as_grid_index(self.L, self.h, "L")

    @property
    def h(self) -> float:
        return self.d / self.M

    @property
    def n(self) -> int:
        """Number of grid cells along each axis."""
        return _as_grid_index(self.L, self.h, "L")

    def area(self) -> float:
        L, d = self.L, self.d
        return L * L - (L - d) ** 2


@dataclass(frozen=True, eq=False)
class StripMesh:
    """Conforming P1 triangulation with tagged edge chains.

    Attributes
    ----------
    nodes : ndarray of shape (n_nodes, 2)
    triangles : ndarray of shape (n_tri, 3)
        Positively oriented node index triples.
    edge_groups : dict
        Tag -> ndarray of shape (n_edges, 2) of node indices. Chains are ordered
        along each straight line they cover.
    h : float
        Grid pitch.
    conditions : dict
        Tag -> :class:`BoundaryCondition` for polygon meshes; empty for strips.
    """

    nodes: np.ndarray
    triangles: np.ndarray
    edge_groups: Dict[str, np.ndarray]
    h: float
    conditions: Dict[str, BoundaryCondition] = field(default_factory=dict)

    def __post_init__(self):
        self.nodes.setflags(write=False)
        self.triangles.setflags(write=False)
        for edges in self.edge_groups.values():
            edges.setflags(write=False)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def triangle_areas(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    def area(self) -> float:
        return float(self.triangle_areas().sum())

    def chain_length(self, tag: str) -> float:
        edges = self.edge_groups[tag]
        if len(edges) == 0:
            return 0.0
        v = self.nodes[edges[:, 1]] - self.nodes[edges[:, 0]]
        return float(np.hypot(v[:, 0], v[:, 1]).sum())

    def tag_nodes(self, tags: Iterable[str]) -> np.ndarray:
        """Sorted unique node indices touched by the edges of ``tags``."""
        parts = [self.edge_groups[t].ravel() for t in tags if t in self.edge_groups]
        if not parts:
            return np.zeros(0, dtype=np.int64)
        return np.unique(np.concatenate(parts))

    def to_json(self) -> dict:
        return {
            "schema": "molecule-spectra/mesh/1",
            "h": self.h,
            "nodes": self.nodes.tolist(),
            "triangles": self.triangles.tolist(),
            "edge_groups": {k: v.tolist() for k, v in self.edge_groups.items()},
            "conditions": {k: c.to_json() for k, c in self.conditions.items()},
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json())


def snap_atoms(atoms: Sequence[float], h: float) -> Tuple[np.ndarray, float]:
    """Move atoms onto the grid lines of pitch ``h``.

    Each atom goes to the nearest positive multiple of ``h`` (ties round up);
    atoms landing on the same grid line are merged.

    Returns
    -------
    snapped : ndarray
        Strictly ascending multiples of ``h``.
    max_error : float
        Largest displacement, at most ``h / 2``.
    """
    a = np.asarray(atoms, dtype=float)
    if not h > 0:
        raise ValueError("pitch h must be positive")
    if a.ndim != 1:
        raise ValueError("atoms must be a 1-d sequence")
    if len(a) == 0:
        return np.zeros(0), 0.0
    if np.any(a <= 0):
        raise ValueError("atoms must be positive")
    if np.any(np.diff(a) <= 0):
        raise ValueError("atoms must be strictly ascending")
    k = np.maximum(np.floor(a / h + 0.5), 1.0)
    snapped = k * h
    max_error = float(np.max(np.abs(snapped - a)))
    return np.unique(snapped), max_error


def _edge_table(triangles: np.ndarray):
    """Unique undirected edges and the number of triangles sharing each."""
    e = np.concatenate([triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]])
    e.sort(axis=1)
    edges, counts = np.unique(e, axis=0, return_counts=True)
    return edges, counts


def build_strip_mesh(spec: StripSpec, atoms: Sequence[float] = ()) -> StripMesh:
    """Triangulate the truncated strip with every atom line resolved by edges.

    Grid squares strictly inside the strip are split along the main diagonal;
    squares touching a wall ``|x - y| = d`` contribute only their inner half.
    Atoms beyond ``L`` yield empty ``GAMMA`` chains so that tags stay aligned
    with the atom list.
    """
    h, n, M = spec.h, spec.n, int(spec.M)
    atom_idx = [_as_grid_index(a, h, "atom") for a in atoms]
    if any(p <= 0 for p in atom_idx):
        raise ValueError("atoms must be positive")

    ii, jj = np.meshgrid(np.arange(n + 1), np.arange(n + 1), indexing="ij")
    keep = np.abs(ii - jj) <= M
    gi, gj = ii[keep], jj[keep]
    index = -np.ones((n + 1, n + 1), dtype=np.int64)
    index[gi, gj] = np.arange(len(gi))
    nodes = np.column_stack([gi * h, gj * h]).astype(float)

    ci, cj = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    ci, cj = ci.ravel(), cj.ravel()
    diff = ci - cj
    v00 = index[ci, cj]
    v10 = index[ci + 1, cj]
    v11 = index[ci + 1, cj + 1]
    v01 = index[ci, cj + 1]
    # lower-right half lies at x - y >= i - j, upper-left at x - y <= i - j
    lower = diff >= -M
    lower &= diff <= M - 1
    upper = diff <= M
    upper &= diff >= -(M - 1)
    tris = np.concatenate(
        [
            np.column_stack([v00, v10, v11])[lower],
            np.column_stack([v00, v11, v01])[upper],
        ]
    )
    tris = tris[np.lexsort((tris[:, 2], tris[:, 1], tris[:, 0]))]

    edges, counts = _edge_table(tris)
    gidx = np.column_stack([gi, gj])
    p, q = gidx[edges[:, 0]], gidx[edges[:, 1]]
    boundary = counts == 1
    diagonal = (p[:, 0] != q[:, 0]) & (p[:, 1] != q[:, 1])
    on_x = p[:, 0] == q[:, 0]
    on_y = p[:, 1] == q[:, 1]

    groups: Dict[str, np.ndarray] = {}
    strip = boundary & diagonal
    axis = boundary & ((on_x & (p[:, 0] == 0)) | (on_y & (p[:, 1] == 0)))
    trunc = boundary & ((on_x & (p[:, 0] == n)) | (on_y & (p[:, 1] == n)))
    groups[DIRICHLET_STRIP] = _order_chain(edges[strip], nodes)
    groups[NEUMANN_AXIS] = _order_chain(edges[axis], nodes)
    groups[DIRICHLET_TRUNC] = _order_chain(edges[trunc], nodes)

    interior = ~boundary
    for k, a in enumerate(atom_idx, start=1):
        sel = interior & ((on_x & (p[:, 0] == a)) | (on_y & (p[:, 1] == a)))
        groups[gamma_tag(k)] = _order_chain(edges[sel], nodes)
    return StripMesh(nodes=nodes, triangles=tris.astype(np.int64), edge_groups=groups, h=h)


def _order_chain(edges: np.ndarray, nodes: np.ndarray) -> np.ndarray:
    """Orient each edge low-to-high and sort edges line by line."""
    if len(edges) == 0:
        return np.zeros((0, 2), dtype=np.int64)
    e = edges.copy()
    a, b = nodes[e[:, 0]], nodes[e[:, 1]]
    swap = (b[:, 0] < a[:, 0]) | ((b[:, 0] == a[:, 0]) & (b[:, 1] < a[:, 1]))
    e[swap] = e[swap][:, ::-1]
    a, b = nodes[e[:, 0]], nodes[e[:, 1]]
    vertical = a[:, 0] == b[:, 0]
    horizontal = a[:, 1] == b[:, 1]
    # line key: family, then offset of the line, then position along it
    family = np.where(vertical, 0, np.where(horizontal, 1, 2))
    offset = np.where(vertical, a[:, 0], np.where(horizontal, a[:, 1], a[:, 0] - a[:, 1]))
    along = np.where(vertical, a[:, 1], a[:, 0])
    order = np.lexsort((along, offset, family))
    return e[order].astype(np.int64)


def chain_segments(mesh: StripMesh, tag: str) -> List[np.ndarray]:
    """Split a tagged chain into maximal connected runs of consecutive edges."""
    edges = mesh.edge_groups[tag]
    runs: List[np.ndarray] = []
    start = 0
    for k in range(1, len(edges) + 1):
        if k == len(edges) or edges[k, 0] != edges[k - 1, 1]:
            runs.append(edges[start:k])
            start = k
    return runs


def reflection_permutation(mesh: StripMesh) -> np.ndarray:
    """Index map ``perm`` with ``nodes[perm[i]] == swap(nodes[i])``."""
    key = {tuple(np.round(p / mesh.h).astype(np.int64)): i for i, p in enumerate(mesh.nodes)}
    perm = np.empty(mesh.n_nodes, dtype=np.int64)
    for i, p in enumerate(mesh.nodes):
        ij = tuple(np.round(p[::-1] / mesh.h).astype(np.int64))
        if ij not in key:
            raise ValueError("mesh is not symmetric under (x, y) -> (y, x)")
        perm[i] = key[ij]
    return perm


# --------------------------------------------------------------------------
# polygons


@dataclass(frozen=True)
class PolygonSpec:
    """Axis-aligned polygon, optionally with ±45 degree edges, on an ``h``-grid.

    ``vertices`` are listed counter-clockwise; edge ``j`` joins vertex ``j`` to
    vertex ``j + 1``. Cells are split along ``diagonal_split``: ``MAIN`` for
    edges parallel to ``y = x``, ``ANTI`` for edges parallel to ``y = -x``.
    """

    vertices: Tuple[Tuple[float, float], ...]
    edge_tags: Tuple[BoundaryCondition, ...]
    h: float
    diagonal_split: str = MAIN

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(tuple(map(float, v)) for v in self.vertices))
        object.__setattr__(self, "edge_tags", tuple(self.edge_tags))
        if len(self.vertices) < 3:
            raise ValueError("polygon needs at least three vertices")
        if len(self.edge_tags) != len(self.vertices):
            raise ValueError("one boundary condition per edge is required")
        if self.diagonal_split not in (MAIN, ANTI):
            raise ValueError("diagonal_split must be MAIN or ANTI")
        if not self.h > 0:
            raise ValueError("pitch h must be positive")

    def area(self) -> float:
        v = np.asarray(self.vertices)
        x, y = v[:, 0], v[:, 1]
        return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _points_in_polygon(pts: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Even-odd rule; callers only pass points strictly off the boundary."""
    x, y = pts[:, 0][:, None], pts[:, 1][:, None]
    x0, y0 = poly[:, 0][None, :], poly[:, 1][None, :]
    x1, y1 = np.roll(poly[:, 0], -1)[None, :], np.roll(poly[:, 1], -1)[None, :]
    straddle = (y0 > y) != (y1 > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xc = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
    hits = straddle & (x < xc)
    return (hits.sum(axis=1) % 2) == 1


def build_polygon_mesh(spec: PolygonSpec) -> StripMesh:
    """Triangulate a grid-aligned polygon; edge ``j`` becomes tag ``EDGE_j``."""
    h = spec.h
    vidx = np.array(
        [[_as_grid_index(x, h, "vertex x"), _as_grid_index(y, h, "vertex y")] for x, y in spec.vertices],
        dtype=np.int64,
    )
    nv = len(vidx)
    for j in range(nv):
        dx, dy = vidx[(j + 1) % nv] - vidx[j]
        if dx == 0 and dy == 0:
            raise ValueError(f"edge {j} is degenerate")
        if dx != 0 and dy != 0:
            if abs(dx) != abs(dy):
                raise ValueError(f"edge {j} is neither axis-aligned nor at 45 degrees")
            need = MAIN if dx * dy > 0 else ANTI
            if need != spec.diagonal_split:
                raise ValueError(
                    f"edge {j} runs along the {need} diagonal but the mesh is split along {spec.diagonal_split}"
                )
    if spec.area() <= 0:
        raise ValueError("polygon vertices must be counter-clockwise")

    lo, hi = vidx.min(axis=0), vidx.max(axis=0)
    nx, ny = hi - lo
    ci, cj = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    ci, cj = ci.ravel() + lo[0], cj.ravel() + lo[1]
    c = np.stack([ci, cj], axis=1)
    c00, c10, c11, c01 = c, c + [1, 0], c + [1, 1], c + [0, 1]
    if spec.diagonal_split == MAIN:
        cand = [np.stack([c00, c10, c11], 1), np.stack([c00, c11, c01], 1)]
    else:
        cand = [np.stack([c00, c10, c01], 1), np.stack([c10, c11, c01], 1)]
    cand = np.concatenate(cand)
    centroids = cand.mean(axis=1).astype(float)
    inside = _points_in_polygon(centroids, vidx.astype(float))
    tri_g = cand[inside]
    if len(tri_g) == 0:
        raise ValueError("polygon contains no grid triangles")

    flat = tri_g.reshape(-1, 2)
    uniq, inv = np.unique(flat, axis=0, return_inverse=True)
    tris = inv.reshape(-1, 3).astype(np.int64)
    tris = tris[np.lexsort((tris[:, 2], tris[:, 1], tris[:, 0]))]
    nodes = (uniq * h).astype(float)

    edges, counts = _edge_table(tris)
    bnd = edges[counts == 1]
    p, q = uniq[bnd[:, 0]], uniq[bnd[:, 1]]
    groups: Dict[str, np.ndarray] = {}
    conditions: Dict[str, BoundaryCondition] = {}
    claimed = np.zeros(len(bnd), dtype=bool)
    for j in range(nv):
        a, b = vidx[j], vidx[(j + 1) % nv]
        sel = _on_segment(p, a, b) & _on_segment(q, a, b) & ~claimed
        claimed |= sel
        tag = polygon_edge_tag(j)
        groups[tag] = _order_chain(bnd[sel], nodes)
        conditions[tag] = spec.edge_tags[j]
    if not claimed.all():
        raise ValueError("boundary edges not covered by polygon edges")
    return StripMesh(nodes=nodes, triangles=tris, edge_groups=groups, h=h, conditions=conditions)


def _on_segment(pts: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = b - a
    r = pts - a
    cross = d[0] * r[:, 1] - d[1] * r[:, 0]
    dot = r @ d
    return (cross == 0) & (dot >= 0) & (dot <= d @ d)


def rectangle_mesh(
    x0: float,
    x1: float,
    y0: float,
    y1: float,
    nx: int,
    ny: int,
    jitter: float = 0.0,
    rng: Optional[np.random.Generator] = None,
) -> StripMesh:
    """P1 mesh of ``[x0, x1] x [y0, y1]`` with ``nx x ny`` cells.

    Interior nodes may be displaced by up to ``jitter`` cell widths along each
    axis. In cell units a half-cell's doubled area is then at least
    ``1 - 6 jitter``, so ``jitter < 1/6`` keeps every triangle positively
    oriented. Sides are tagged ``LEFT``, ``RIGHT``, ``BOTTOM``, ``TOP``.
    """
    if not (x1 > x0 and y1 > y0 and nx >= 1 and ny >= 1):
        raise ValueError("invalid rectangle")
    if not 0 <= jitter < 1 / 6:
        raise ValueError("jitter must lie in [0, 1/6)")
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    if jitter > 0:
        rng = rng if rng is not None else np.random.default_rng()
        hx, hy = (x1 - x0) / nx, (y1 - y0) / ny
        X[1:-1, 1:-1] += jitter * hx * rng.uniform(-1, 1, size=(nx - 1, ny - 1))
        Y[1:-1, 1:-1] += jitter * hy * rng.uniform(-1, 1, size=(nx - 1, ny - 1))
    nodes = np.column_stack([X.ravel(), Y.ravel()])
    idx = np.arange((nx + 1) * (ny + 1)).reshape(nx + 1, ny + 1)
    v00, v10 = idx[:-1, :-1].ravel(), idx[1:, :-1].ravel()
    v11, v01 = idx[1:, 1:].ravel(), idx[:-1, 1:].ravel()
    tris = np.concatenate([np.column_stack([v00, v10, v11]), np.column_stack([v00, v11, v01])])
    groups = {
        "LEFT": np.column_stack([idx[0, :-1], idx[0, 1:]]),
        "RIGHT": np.column_stack([idx[-1, :-1], idx[-1, 1:]]),
        "BOTTOM": np.column_stack([idx[:-1, 0], idx[1:, 0]]),
        "TOP": np.column_stack([idx[:-1, -1], idx[1:, -1]]),
    }
    h = min((x1 - x0) / nx, (y1 - y0) / ny)
    return StripMesh(nodes=nodes, triangles=tris.astype(np.int64), edge_groups=groups, h=h)


# --------------------------------------------------------------------------
# comparison domains of the corner triangle {x, y >= 0, x + y <= d} cut by
# the lines x = a and y = a


def _check_cut(d: float, a: float):
    if not 0 < a < d / 2:
        raise ValueError("cut position must satisfy 0 < a < d/2")


def corner_square(a: float, gamma: float, h: float) -> PolygonSpec:
    """``[0, a]^2`` with Robin on ``x = a`` and ``y = a``."""
    R = robin(gamma)
    return PolygonSpec(((0, 0), (a, 0), (a, a), (0, a)), (NEUMANN, R, R, NEUMANN), h)


def inner_triangle(d: float, a: float, gamma: float, h: float) -> PolygonSpec:
    """``{x, y >= a, x + y <= d}`` with Robin legs and a Neumann hypotenuse."""
    _check_cut(d, a)
    R = robin(gamma)
    return PolygonSpec(((a, a), (d - a, a), (a, d - a)), (R, NEUMANN, R), h, ANTI)


def corner_trapezoid(d: float, a: float, gamma: float, h: float) -> PolygonSpec:
    """``{0 <= x <= a, a <= y <= d - x}``; Robin on ``y = a`` and ``x = a``."""
    _check_cut(d, a)
    R = robin(gamma)
    return PolygonSpec(
        ((0, a), (a, a), (a, d - a), (0, d)),
        (R, R, NEUMANN, NEUMANN),
        h,
        ANTI,
    )


def reflected_trapezoid(d: float, a: float, gamma: float, h: float) -> PolygonSpec:
    """The trapezoid joined with its mirror image across ``x + y = d`` (an L shape)."""
    _check_cut(d, a)
    R = robin(gamma)
    verts = ((0, a), (a, a), (a, d - a), (d - a, d - a), (d - a, d), (0, d))
    tags = (R, R, R, R, NEUMANN, NEUMANN)
    return PolygonSpec(verts, tags, h)


def half_cross(d: float, a: float, gamma: float, h: float) -> PolygonSpec:
    """The L shape doubled across ``y = d``: stem ``[0, a] x [a, 2d - a]`` plus an arm."""
    _check_cut(d, a)
    R = robin(gamma)
    verts = (
        (0, a), (a, a), (a, d - a), (d - a, d - a), (d - a, d + a),
        (a, d + a), (a, 2 * d - a), (0, 2 * d - a),
    )
    tags = (R, R, R, R, R, R, R, NEUMANN)
    return PolygonSpec(verts, tags, h)


def stem_rectangle(d: float, a: float, gamma: float, h: float) -> PolygonSpec:
    """``[0, a] x [a, 2d - a]`` with Robin on its top and bottom only."""
    _check_cut(d, a)
    R = robin(gamma)
    return PolygonSpec(((0, a), (a, a), (a, 2 * d - a), (0, 2 * d - a)), (R, NEUMANN, R, NEUMANN), h)
