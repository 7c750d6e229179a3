"""2D simplicial meshes with newest-vertex bisection and corner grading.

The mesh is a plain triangulation of a polygon.  Every triangle carries a
refinement edge (the edge that gets split when the element is bisected), a
subdomain id pointing into the wave-speed table, and its bisection depth.
Refinement towards re-entrant corners follows a two-step procedure: uniform
bisection down to a target mesh width, then a sequence of marked bisections
inside shrinking discs around each corner, with the marking radius and the
local size threshold tightened together so that element diameters decay
algebraically towards the corner.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

DIRICHLET = "D"
NEUMANN = "N"


@dataclass(frozen=True)
class Point2:
    """A point in the spatial domain."""

    x1: float
    x2: float

    def __post_init__(self):
        if not (math.isfinite(self.x1) and math.isfinite(self.x2)):
            raise ValueError("non-finite coordinates")

    def as_array(self) -> np.ndarray:
        return np.array([self.x1, self.x2])


@dataclass(frozen=True)
class CornerSpec:
    """A singular corner: location, grading weight delta, marking radius."""

    location: Point2
    delta: float
    radius: float

    def __post_init__(self):
        if not 0.0 <= self.delta < 1.0:
            raise ValueError(f"corner weight delta must be in [0,1), got {self.delta}")
        if self.radius <= 0.0:
            raise ValueError("corner radius must be positive")


@dataclass
class Triangle:
    """Element record.  ``refinement_edge`` is the local index of the edge
    opposite local vertex ``refinement_edge`` (edge i connects local vertices
    (i+1)%3 and (i+2)%3)."""

    vertex_ids: tuple[int, int, int]
    refinement_edge: int
    subdomain_id: int
    generation: int = 0


def _ekey(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)


@dataclass
class SpatialMesh:
    vertices: list[Point2]
    triangles: list[Triangle]
    boundary_edges: dict[tuple[int, int], str]
    corners: list[CornerSpec] = field(default_factory=list)
    subdomain_speeds: list[float] = field(default_factory=lambda: [1.0])
    # midpoint vertex id of every edge that has ever been split
    edge_midpoints: dict[tuple[int, int], int] = field(default_factory=dict)

    # ------------------------------------------------------------------
    # basic queries
    # ------------------------------------------------------------------

    def copy(self) -> "SpatialMesh":
        return SpatialMesh(
            vertices=list(self.vertices),
            triangles=[replace(t) for t in self.triangles],
            boundary_edges=dict(self.boundary_edges),
            corners=list(self.corners),
            subdomain_speeds=list(self.subdomain_speeds),
            edge_midpoints=dict(self.edge_midpoints),
        )

    def coords(self) -> np.ndarray:
        """Vertex coordinates, shape (n_vertices, 2)."""
        return np.array([[p.x1, p.x2] for p in self.vertices])

    def tri_array(self) -> np.ndarray:
        """Vertex ids per triangle, shape (n_triangles, 3)."""
        return np.array([t.vertex_ids for t in self.triangles], dtype=int)

    def n_elements(self) -> int:
        return len(self.triangles)

    def signed_area(self, eid: int) -> float:
        a, b, c = (self.vertices[i] for i in self.triangles[eid].vertex_ids)
        return 0.5 * ((b.x1 - a.x1) * (c.x2 - a.x2) - (c.x1 - a.x1) * (b.x2 - a.x2))

    def total_area(self) -> float:
        xy = self.coords()
        tri = self.tri_array()
        a, b, c = xy[tri[:, 0]], xy[tri[:, 1]], xy[tri[:, 2]]
        return float(
            0.5
            * np.sum(
                (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1])
                - (c[:, 0] - a[:, 0]) * (b[:, 1] - a[:, 1])
            )
        )

    def element_diameters(self) -> np.ndarray:
        """Longest edge per triangle."""
        xy = self.coords()
        tri = self.tri_array()
        a, b, c = xy[tri[:, 0]], xy[tri[:, 1]], xy[tri[:, 2]]
        lab = np.linalg.norm(a - b, axis=1)
        lbc = np.linalg.norm(b - c, axis=1)
        lca = np.linalg.norm(c - a, axis=1)
        return np.maximum(np.maximum(lab, lbc), lca)

    def edge_set(self) -> set[tuple[int, int]]:
        edges: set[tuple[int, int]] = set()
        for t in self.triangles:
            v = t.vertex_ids
            edges.add(_ekey(v[0], v[1]))
            edges.add(_ekey(v[1], v[2]))
            edges.add(_ekey(v[2], v[0]))
        return edges

    def hanging_elements(self) -> set[int]:
        """Element ids owning an edge whose midpoint is a mesh vertex used by
        finer neighbours (i.e. the edge has a hanging node)."""
        edges = self.edge_set()
        out: set[int] = set()
        for eid, t in enumerate(self.triangles):
            v = t.vertex_ids
            for i in range(3):
                a, b = v[i], v[(i + 1) % 3]
                m = self.edge_midpoints.get(_ekey(a, b))
                if m is not None and (_ekey(a, m) in edges or _ekey(m, b) in edges):
                    out.add(eid)
                    break
        return out

    def element_distances_to(self, point: Point2) -> np.ndarray:
        """Exact Euclidean point-to-triangle distance for every element."""
        p = point.as_array()
        xy = self.coords()
        tri = self.tri_array()
        a, b, c = xy[tri[:, 0]], xy[tri[:, 1]], xy[tri[:, 2]]
        # inside test via barycentric signs (orientation is CCW)
        def cross_sign(p0, p1):
            return (p1[:, 0] - p0[:, 0]) * (p[1] - p0[:, 1]) - (p1[:, 1] - p0[:, 1]) * (
                p[0] - p0[:, 0]
            )

        s0 = cross_sign(a, b)
        s1 = cross_sign(b, c)
        s2 = cross_sign(c, a)
        inside = (s0 >= 0.0) & (s1 >= 0.0) & (s2 >= 0.0)

        def seg_dist(p0, p1):
            d = p1 - p0
            w = p - p0
            tpar = np.clip(
                np.einsum("ij,ij->i", w, d) / np.maximum(np.einsum("ij,ij->i", d, d), 1e-300),
                0.0,
                1.0,
            )
            proj = p0 + tpar[:, None] * d
            return np.linalg.norm(p - proj, axis=1)

        dist = np.minimum(np.minimum(seg_dist(a, b), seg_dist(b, c)), seg_dist(c, a))
        dist[inside] = 0.0
        return dist

    # ------------------------------------------------------------------
    # mutation (internal; public API returns fresh meshes)
    # ------------------------------------------------------------------

    def _midpoint_id(self, a: int, b: int) -> int:
        key = _ekey(a, b)
        m = self.edge_midpoints.get(key)
        if m is None:
            pa, pb = self.vertices[a], self.vertices[b]
            self.vertices.append(Point2(0.5 * (pa.x1 + pb.x1), 0.5 * (pa.x2 + pb.x2)))
            m = len(self.vertices) - 1
            self.edge_midpoints[key] = m
        return m

    def _bisect(self, eid: int) -> None:
        t = self.triangles[eid]
        e = t.refinement_edge
        v = t.vertex_ids
        peak, va, vb = v[e], v[(e + 1) % 3], v[(e + 2) % 3]
        m = self._midpoint_id(va, vb)
        tag = self.boundary_edges.pop(_ekey(va, vb), None)
        if tag is not None:
            self.boundary_edges[_ekey(va, m)] = tag
            self.boundary_edges[_ekey(m, vb)] = tag
        gen = t.generation + 1
        # children keep the parent's orientation; their refinement edge is
        # the old edge opposite the new midpoint vertex
        self.triangles[eid] = Triangle((m, peak, va), 0, t.subdomain_id, gen)
        self.triangles.append(Triangle((m, vb, peak), 0, t.subdomain_id, gen))


# ----------------------------------------------------------------------
# refinement operations
# ----------------------------------------------------------------------


def newest_vertex_bisection(mesh: SpatialMesh, element_id: int) -> SpatialMesh:
    """Split one element across its refinement edge (no closure)."""
    if not 0 <= element_id < mesh.n_elements():
        raise IndexError(f"invalid element id {element_id}")
    out = mesh.copy()
    out._bisect(element_id)
    return out


def bisect_marked(
    mesh: SpatialMesh, marked: set[int], conforming: bool = True
) -> SpatialMesh:
    """Bisect all marked elements.

    In conforming mode the pass is repeated on the elements left with a
    hanging node until none remain.  In non-conforming mode a single pass is
    done and hanging nodes are allowed, but a closure on doubly-refined edges
    keeps every coarse edge at most 1-irregular.
    """
    bad = [i for i in marked if not 0 <= i < mesh.n_elements()]
    if bad:
        raise IndexError(f"invalid element ids {sorted(bad)}")
    out = mesh.copy()
    todo = sorted(marked)
    while todo:
        for eid in todo:
            out._bisect(eid)
        if conforming:
            todo = sorted(out.hanging_elements())
        else:
            todo = sorted(_two_irregular_elements(out))
    return out


def _two_irregular_elements(mesh: SpatialMesh) -> set[int]:
    """Elements owning an edge whose hanging node itself hangs refined
    sub-edges (violating 1-irregularity)."""
    edges = mesh.edge_set()
    mids = mesh.edge_midpoints
    out: set[int] = set()
    for eid, t in enumerate(mesh.triangles):
        v = t.vertex_ids
        for i in range(3):
            a, b = v[i], v[(i + 1) % 3]
            m = mids.get(_ekey(a, b))
            if m is None:
                continue
            for half in (_ekey(a, m), _ekey(m, b)):
                mm = mids.get(half)
                if mm is not None and (
                    _ekey(half[0], mm) in edges or _ekey(mm, half[1]) in edges
                ):
                    out.add(eid)
                    break
            if eid in out:
                break
    return out


def grading_depth(h_x: float, p_sigma_x: float, delta: float) -> int:
    """Number of disc generations for the corner-grading loop."""
    val = -math.log2(h_x) * (p_sigma_x + 1.0) / (1.0 - delta) - 1.0
    return max(0, math.ceil(val - 1e-9))


def corner_refine(
    mesh0: SpatialMesh,
    h_x: float,
    p_sigma_x: int,
    conforming: bool = True,
    rescale: float | None = None,
) -> SpatialMesh:
    """Uniform refinement to width ``h_x`` followed by graded bisection
    towards each corner of the mesh's corner set.

    ``rescale`` divides all element sizes by the given factor (use the domain
    diameter when it exceeds 1) before comparing against ``h_x``.
    """
    if not 0.0 < h_x <= 1.0:
        raise ValueError(f"h_x must be in (0, 1], got {h_x}")
    for c in mesh0.corners:
        if c.delta >= 1.0:
            raise ValueError("corner weight delta must be < 1")
    scale = 1.0 if rescale is None else float(rescale)

    mesh = mesh0.copy()
    # step 1: uniform size reduction
    while True:
        h = mesh.element_diameters() / scale
        marked = set(np.nonzero(h > h_x)[0].tolist())
        if not marked:
            break
        mesh = bisect_marked(mesh, marked, conforming)

    # step 2: graded discs around each corner
    for corner in mesh.corners:
        J = grading_depth(h_x, p_sigma_x, corner.delta)
        expo = (p_sigma_x + corner.delta) / (2.0 * (p_sigma_x + 1.0))
        for j in range(2 * J + 2):
            radius = 2.0 ** (-j / 2.0) * corner.radius / scale
            size_cut = h_x * 2.0 ** (-j * expo)
            h = mesh.element_diameters() / scale
            dist = mesh.element_distances_to(corner.location) / scale
            marked = set(np.nonzero((dist <= radius) & (h > size_cut))[0].tolist())
            if marked:
                mesh = bisect_marked(mesh, marked, conforming)
    return mesh


def mesh_statistics(mesh: SpatialMesh) -> dict:
    """Element count, extremal diameters, and the worst h/inradius ratio."""
    if mesh.n_elements() == 0:
        raise ValueError("empty mesh")
    xy = mesh.coords()
    tri = mesh.tri_array()
    a, b, c = xy[tri[:, 0]], xy[tri[:, 1]], xy[tri[:, 2]]
    lab = np.linalg.norm(a - b, axis=1)
    lbc = np.linalg.norm(b - c, axis=1)
    lca = np.linalg.norm(c - a, axis=1)
    h = np.maximum(np.maximum(lab, lbc), lca)
    area = 0.5 * np.abs(
        (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1])
        - (c[:, 0] - a[:, 0]) * (b[:, 1] - a[:, 1])
    )
    inradius = 2.0 * area / (lab + lbc + lca)
    return {
        "element_count": int(len(tri)),
        "h_min": float(h.min()),
        "h_max": float(h.max()),
        "shape_regularity": float((h / inradius).max()),
    }


# ----------------------------------------------------------------------
# construction helpers
# ----------------------------------------------------------------------


def _longest_edge_index(mesh: SpatialMesh, eid: int) -> int:
    v = mesh.triangles[eid].vertex_ids
    xy = mesh.coords()
    lengths = [np.linalg.norm(xy[v[(i + 1) % 3]] - xy[v[(i + 2) % 3]]) for i in range(3)]
    lmax = max(lengths)
    cands = [i for i in range(3) if lengths[i] > lmax - 1e-12]
    # tie break: smallest opposite (global) vertex id
    return min(cands, key=lambda i: v[i])


def _seed_refinement_edges(mesh: SpatialMesh) -> None:
    for eid, t in enumerate(mesh.triangles):
        area = mesh.signed_area(eid)
        if area == 0.0:
            raise ValueError(f"triangle {eid} is degenerate")
        if area < 0:
            v = t.vertex_ids
            t.vertex_ids = (v[0], v[2], v[1])
        t.refinement_edge = _longest_edge_index(mesh, eid)


def from_arrays(
    points: list[tuple[float, float]],
    tris: list[tuple[int, int, int]],
    boundary: dict[tuple[int, int], str],
    subdomains: list[int] | None = None,
    speeds: list[float] | None = None,
    corners: list[CornerSpec] | None = None,
) -> SpatialMesh:
    mesh = SpatialMesh(
        vertices=[Point2(x, y) for x, y in points],
        triangles=[
            Triangle(tuple(t), 0, 0 if subdomains is None else subdomains[i])
            for i, t in enumerate(tris)
        ],
        boundary_edges={_ekey(*k): v for k, v in boundary.items()},
        corners=list(corners or []),
        subdomain_speeds=list(speeds or [1.0]),
    )
    _seed_refinement_edges(mesh)
    return mesh


def unit_square_mesh(tag: str = DIRICHLET) -> SpatialMesh:
    """Two triangles of (0,1)^2 split along the diagonal (0,0)-(1,1)."""
    pts = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
    tris = [(0, 1, 2), (0, 2, 3)]
    boundary = {(0, 1): tag, (1, 2): tag, (2, 3): tag, (3, 0): tag}
    return from_arrays(pts, tris, boundary)


def l_shaped_mesh(
    tag: str = NEUMANN, delta: float = 1.0 / 3.0, radius: float = 0.245
) -> SpatialMesh:
    """Three quadrants of (-1/2,1/2)^2 (the quadrant x1>0, x2<0 removed),
    meshed as six triangles fanning from the re-entrant corner at the origin."""
    pts = [
        (0.0, 0.0),
        (0.5, 0.0),
        (0.5, 0.5),
        (0.0, 0.5),
        (-0.5, 0.5),
        (-0.5, 0.0),
        (-0.5, -0.5),
        (0.0, -0.5),
    ]
    tris = [
        (0, 1, 2),
        (0, 2, 3),
        (0, 3, 4),
        (0, 4, 5),
        (0, 5, 6),
        (0, 6, 7),
    ]
    boundary = {
        (0, 1): tag,
        (1, 2): tag,
        (2, 3): tag,
        (3, 4): tag,
        (4, 5): tag,
        (5, 6): tag,
        (6, 7): tag,
        (7, 0): tag,
    }
    corner = CornerSpec(Point2(0.0, 0.0), delta, radius)
    return from_arrays(pts, tris, boundary, corners=[corner])


def box_mesh(
    xs: list[float],
    ys: list[float],
    tag: str = DIRICHLET,
    subdomain_of: "callable | None" = None,
    speeds: list[float] | None = None,
    corners: list[CornerSpec] | None = None,
) -> SpatialMesh:
    """Structured triangulation of a tensor grid; each cell is split along its
    lower-left to upper-right diagonal.  ``subdomain_of(xc, yc)`` maps a cell
    centre to its subdomain id."""
    nx, ny = len(xs), len(ys)
    pts = [(x, y) for y in ys for x in xs]

    def vid(i, j):
        return j * nx + i

    tris: list[tuple[int, int, int]] = []
    subs: list[int] = []
    for j in range(ny - 1):
        for i in range(nx - 1):
            sd = 0
            if subdomain_of is not None:
                sd = subdomain_of(0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1]))
            v00, v10 = vid(i, j), vid(i + 1, j)
            v01, v11 = vid(i, j + 1), vid(i + 1, j + 1)
            tris.append((v00, v10, v11))
            tris.append((v00, v11, v01))
            subs.extend([sd, sd])
    boundary: dict[tuple[int, int], str] = {}
    for i in range(nx - 1):
        boundary[(vid(i, 0), vid(i + 1, 0))] = tag
        boundary[(vid(i, ny - 1), vid(i + 1, ny - 1))] = tag
    for j in range(ny - 1):
        boundary[(vid(0, j), vid(0, j + 1))] = tag
        boundary[(vid(nx - 1, j), vid(nx - 1, j + 1))] = tag
    return from_arrays(pts, tris, boundary, subdomains=subs, speeds=speeds, corners=corners)


def uniform_refine(mesh: SpatialMesh, levels: int = 1) -> SpatialMesh:
    """One level = two all-element bisection passes (each element becomes 4
    similar children)."""
    out = mesh
    for _ in range(2 * levels):
        out = bisect_marked(out, set(range(out.n_elements())), conforming=True)
    return out


# ----------------------------------------------------------------------
# dump / load
# ----------------------------------------------------------------------


def dump_mesh(mesh: SpatialMesh) -> str:
    lines = [f"vertices {len(mesh.vertices)} / triangles {mesh.n_elements()}"]
    for p in mesh.vertices:
        lines.append(f"{p.x1:.17g} {p.x2:.17g}")
    for t in mesh.triangles:
        v = t.vertex_ids
        lines.append(f"{v[0]} {v[1]} {v[2]} {t.refinement_edge} {t.subdomain_id}")
    for (a, b) in sorted(mesh.boundary_edges):
        lines.append(f"{a} {b} {mesh.boundary_edges[(a, b)]}")
    return "\n".join(lines) + "\n"


def load_mesh(text: str) -> SpatialMesh:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    head = lines[0].split()
    if head[0] != "vertices" or head[3] != "triangles":
        raise ValueError("bad mesh header")
    nv, nt = int(head[1]), int(head[4])
    verts = []
    for ln in lines[1 : 1 + nv]:
        x, y = ln.split()
        verts.append(Point2(float(x), float(y)))
    tris = []
    max_sub = 0
    for ln in lines[1 + nv : 1 + nv + nt]:
        a, b, c, re_, sd = (int(s) for s in ln.split())
        tris.append(Triangle((a, b, c), re_, sd))
        max_sub = max(max_sub, sd)
    boundary: dict[tuple[int, int], str] = {}
    for ln in lines[1 + nv + nt :]:
        a, b, tag = ln.split()
        if tag not in (DIRICHLET, NEUMANN):
            raise ValueError(f"bad boundary tag {tag!r}")
        boundary[_ekey(int(a), int(b))] = tag
    return SpatialMesh(
        vertices=verts,
        triangles=tris,
        boundary_edges=boundary,
        subdomain_speeds=[1.0] * (max_sub + 1),
    )
