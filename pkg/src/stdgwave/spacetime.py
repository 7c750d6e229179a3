"""Tensor-product space-time meshes and face classification.

A space-time element is a prism ``triangle x time-slab``.  Internal faces are
either space-like (a triangle at a slab interface, temporal normal pointing
forward in time) or time-like (a spatial edge swept over a slab, purely
spatial normal).  Lateral boundary faces carry the Dirichlet/Neumann tag of
the underlying spatial edge; the bottom and top of the cylinder are the
initial/final faces.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .mesh2d import DIRICHLET, NEUMANN, SpatialMesh, _ekey


@dataclass(frozen=True)
class TemporalPartition:
    breakpoints: tuple[float, ...]

    def __post_init__(self):
        b = self.breakpoints
        if len(b) < 2:
            raise ValueError("need at least one slab")
        if b[0] != 0.0 or any(b[i] >= b[i + 1] for i in range(len(b) - 1)):
            raise ValueError("breakpoints must start at 0 and increase strictly")

    @property
    def n_slabs(self) -> int:
        return len(self.breakpoints) - 1

    @property
    def final_time(self) -> float:
        return self.breakpoints[-1]

    def slab(self, n: int) -> tuple[float, float]:
        return self.breakpoints[n], self.breakpoints[n + 1]

    def is_uniform(self) -> bool:
        dt = np.diff(self.breakpoints)
        return bool(np.allclose(dt, dt[0], rtol=1e-12, atol=0.0))


def uniform_partition(final_time: float, n_slabs: int) -> TemporalPartition:
    return TemporalPartition(tuple(np.linspace(0.0, final_time, n_slabs + 1)))


INTERIOR = "interior"


@dataclass
class SpatialFace:
    """A spatial integration edge.

    For conforming interior edges this is the shared edge.  For a hanging
    edge (1-irregular meshes) there is one record per fine sub-edge, with the
    coarse element on one side and the fine one on the other; integration is
    driven on the sub-edge.
    """

    kind: str  # interior / dirichlet / neumann
    left: int
    right: int | None
    va: np.ndarray  # endpoints of the integration edge
    vb: np.ndarray
    normal: np.ndarray  # unit, pointing out of `left`
    length: float
    corner_flag: bool = False


@dataclass(frozen=True)
class Face:
    """Classified space-time face (descriptor; geometry lives in the
    referenced spatial entity)."""

    kind: str  # spacelike / timelike / dirichlet / neumann / initial / final
    slab: int  # slab index for lateral faces, interface index for space-like
    triangle: int | None = None
    spatial_face: int | None = None
    corner_flag: bool = False


@dataclass
class SpaceTimeMesh:
    spatial: SpatialMesh
    temporal: TemporalPartition
    spatial_faces: list[SpatialFace]
    faces: list[Face]
    element_corner: np.ndarray  # bool per spatial triangle

    @property
    def n_elements(self) -> int:
        return self.spatial.n_elements() * self.temporal.n_slabs

    def faces_of_kind(self, kind: str) -> list[Face]:
        return [f for f in self.faces if f.kind == kind]


def _outward_normal(xy: np.ndarray, tri: tuple[int, int, int], pa, pb) -> np.ndarray:
    t = pb - pa
    n = np.array([t[1], -t[0]])
    n /= np.linalg.norm(n)
    centroid = (xy[tri[0]] + xy[tri[1]] + xy[tri[2]]) / 3.0
    if np.dot(n, 0.5 * (pa + pb) - centroid) < 0:
        n = -n
    return n


def build_spatial_faces(mesh: SpatialMesh) -> list[SpatialFace]:
    xy = mesh.coords()
    owners: dict[tuple[int, int], list[int]] = {}
    for eid, t in enumerate(mesh.triangles):
        v = t.vertex_ids
        for i in range(3):
            owners.setdefault(_ekey(v[i], v[(i + 1) % 3]), []).append(eid)

    faces: list[SpatialFace] = []
    single: dict[tuple[int, int], int] = {}
    for key, elems in owners.items():
        if len(elems) == 2:
            lo, hi = sorted(elems)
            pa, pb = xy[key[0]], xy[key[1]]
            n = _outward_normal(xy, mesh.triangles[lo].vertex_ids, pa, pb)
            faces.append(
                SpatialFace(INTERIOR, lo, hi, pa, pb, n, float(np.linalg.norm(pb - pa)))
            )
        elif len(elems) == 1:
            single[key] = elems[0]
        else:
            raise ValueError(f"edge {key} shared by {len(elems)} elements")

    matched: set[tuple[int, int]] = set()
    # hanging edges: a coarse single-owner edge whose recorded midpoint splits
    # it into two single-owner fine edges
    for key, coarse in single.items():
        m = mesh.edge_midpoints.get(key)
        if m is None:
            continue
        subs = [_ekey(key[0], m), _ekey(m, key[1])]
        if all(s in single for s in subs):
            for s in subs:
                fine = single[s]
                pa, pb = xy[s[0]], xy[s[1]]
                n = _outward_normal(xy, mesh.triangles[coarse].vertex_ids, pa, pb)
                faces.append(
                    SpatialFace(
                        INTERIOR, coarse, fine, pa, pb, n, float(np.linalg.norm(pb - pa))
                    )
                )
                matched.add(s)
            matched.add(key)

    for key, eid in single.items():
        if key in matched:
            continue
        tag = mesh.boundary_edges.get(key)
        if tag is None:
            raise ValueError(f"untagged exterior edge {key}")
        pa, pb = xy[key[0]], xy[key[1]]
        n = _outward_normal(xy, mesh.triangles[eid].vertex_ids, pa, pb)
        kind = "dirichlet" if tag == DIRICHLET else "neumann"
        faces.append(SpatialFace(kind, eid, None, pa, pb, n, float(np.linalg.norm(pb - pa))))

    # deterministic order: interior first, then boundary, by (left, right, midpoint)
    def face_key(f: SpatialFace):
        mid = 0.5 * (f.va + f.vb)
        return (f.kind != INTERIOR, f.left, -1 if f.right is None else f.right, mid[0], mid[1])

    faces.sort(key=face_key)
    return faces


def corner_triangles(mesh: SpatialMesh, tol: float = 1e-12) -> np.ndarray:
    """Boolean mask: triangle closure contains a corner of the corner set."""
    out = np.zeros(mesh.n_elements(), dtype=bool)
    for c in mesh.corners:
        out |= mesh.element_distances_to(c.location) <= tol
    return out


def build_spacetime(spatial: SpatialMesh, temporal: TemporalPartition) -> SpaceTimeMesh:
    spatial_faces = build_spatial_faces(spatial)
    corner = corner_triangles(spatial)
    faces: list[Face] = []
    N = temporal.n_slabs
    for k in range(spatial.n_elements()):
        flag = bool(corner[k])
        faces.append(Face("initial", 0, triangle=k, corner_flag=flag))
        for n in range(1, N):
            faces.append(Face("spacelike", n, triangle=k, corner_flag=flag))
        faces.append(Face("final", N, triangle=k, corner_flag=flag))
    for i, sf in enumerate(spatial_faces):
        if sf.kind == INTERIOR:
            kind = "timelike"
            flag = bool(corner[sf.left] or corner[sf.right])
        else:
            kind = sf.kind
            flag = bool(corner[sf.left])
        sf.corner_flag = flag
        for n in range(N):
            faces.append(Face(kind, n, spatial_face=i, corner_flag=flag))
    return SpaceTimeMesh(spatial, temporal, spatial_faces, faces, corner)


def classify_corner_elements(mesh: SpaceTimeMesh) -> tuple[list, list]:
    """Partition space-time elements (triangle, slab) by whether the spatial
    triangle's closure touches a corner."""
    corner_ids, regular_ids = [], []
    for k in range(mesh.spatial.n_elements()):
        target = corner_ids if mesh.element_corner[k] else regular_ids
        for n in range(mesh.temporal.n_slabs):
            target.append((k, n))
    return corner_ids, regular_ids
