"""Sparse space-time approximation via the combination formula.

A level index l = (l_x, l_t) selects a full-tensor discretization with mesh
widths h_x = 2^-l_x h0x and h_t = 2^-l_t h0t.  The sparse approximation sums
detail solutions over the two finest diagonals of the level set, with
coefficients +1 on the upper diagonal and -1 on the lower one; the
coefficients telescope to 1, so any function present in every detail space
is reproduced exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import basis_quad as bq
from .analysis import ErrorReport
from .dg_assembly import DegreeSpec, DiscreteField, FluxParams, ProblemData, march
from .mesh2d import SpatialMesh, uniform_refine
from .spacetime import SpaceTimeMesh, build_spacetime, uniform_partition


@dataclass(frozen=True)
class LevelIndex:
    l_x: int
    l_t: int

    def __post_init__(self):
        if self.l_x < 0 or self.l_t < 0:
            raise ValueError("levels must be non-negative")

    @property
    def total(self) -> int:
        return self.l_x + self.l_t


@dataclass
class IndexSet:
    L: tuple[int, int]
    L0: tuple[int, int]
    members: list[tuple[LevelIndex, int]]  # (index, coefficient +-1)


def build_index_set(L: tuple[int, int], L0: tuple[int, int]) -> IndexSet:
    """Admissible indices on the two finest diagonals, +1 on the upper and
    -1 on the lower."""
    Lx, Lt = L
    L0x, L0t = L0
    if Lx - L0x != Lt - L0t:
        raise ValueError(f"level offsets must match: {Lx}-{L0x} != {Lt}-{L0t}")
    if Lx < L0x:
        raise ValueError("L must dominate L0")
    upper = Lx + L0t
    members: list[tuple[LevelIndex, int]] = []
    for lx in range(L0x, Lx + 1):
        for s, c in ((upper, 1), (upper - 1, -1)):
            lt = s - lx
            if lt >= L0t and lt <= Lt:
                members.append((LevelIndex(lx, lt), c))
    members.sort(key=lambda m: (m[0].l_x, m[0].l_t))
    assert sum(c for _, c in members) == 1
    return IndexSet((Lx, Lt), (L0x, L0t), members)


# ----------------------------------------------------------------------
# degrees-of-freedom accounting
# ----------------------------------------------------------------------


def unit_dof_weight(p_x: int, p_t: int) -> int:
    """Unknowns of one level-(0,0) discretization of the unit square (two
    base triangles, one slab): 6 (p_t+1)(p_x+1)(p_x+2)/2."""
    return 6 * (p_t + 1) * (p_x + 1) * (p_x + 2) // 2


def dof_count(mode: str, L: tuple[int, int], L0: tuple[int, int],
              p_x: int, p_t: int, base_elems: int = 2, base_slabs: int = 1) -> int:
    """Total unknowns: full tensor at level L, or the sum over all members
    of the sparse index set.  base_elems / base_slabs scale from the unit
    normalization (2 triangles, 1 slab) to an actual base discretization."""
    per_prism = (3 * (p_x + 1) * (p_x + 2) // 2) * (p_t + 1)

    def detail(lx, lt):
        return base_elems * 4**lx * base_slabs * 2**lt * per_prism

    if mode == "full":
        return detail(L[0], L[1])
    if mode == "sparse":
        return sum(detail(l.l_x, l.l_t) for l, _ in build_index_set(L, L0).members)
    raise ValueError(f"unknown mode {mode!r}")


# ----------------------------------------------------------------------
# detail solves
# ----------------------------------------------------------------------


def uniform_hierarchy(base_mesh: SpatialMesh, final_time: float, base_slabs: int = 1):
    """(mesh_for_level, partition_for_level) callables: l_x uniform
    bisection generations in space, 2^l_t times the base slab count."""
    cache: dict[int, SpatialMesh] = {0: base_mesh}

    def mesh_for_level(lx: int) -> SpatialMesh:
        if lx not in cache:
            finest = max(cache)
            m = cache[finest]
            for l in range(finest + 1, lx + 1):
                m = uniform_refine(m, 1)
                cache[l] = m
        return cache[lx]

    def partition_for_level(lt: int):
        return uniform_partition(final_time, base_slabs * 2**lt)

    return mesh_for_level, partition_for_level


def solve_details(problem: ProblemData, flux: FluxParams, degrees: DegreeSpec,
                  index_set: IndexSet, mesh_for_level, partition_for_level
                  ) -> dict[LevelIndex, DiscreteField]:
    """Independent full-tensor solves, one per index-set member."""
    details: dict[LevelIndex, DiscreteField] = {}
    for l, _ in index_set.members:
        try:
            st = build_spacetime(mesh_for_level(l.l_x), partition_for_level(l.l_t))
            details[l] = march(st, problem, flux, degrees)
        except Exception as exc:
            raise RuntimeError(f"detail solve failed at level ({l.l_x},{l.l_t}): {exc}") from exc
    return details


# ----------------------------------------------------------------------
# combination and error measurement
# ----------------------------------------------------------------------


def locate_points(mesh: SpatialMesh, pts: np.ndarray, tol: float = 1e-10,
                  missing_ok: bool = False) -> np.ndarray:
    """Containing-triangle ids, lowest id winning on shared edges.
    Bounding-box prefilter, then a barycentric containment test.  Points
    outside the mesh raise, or stay -1 with ``missing_ok``."""
    xy = mesh.coords()
    tri = mesh.tri_array()
    ids = np.full(len(pts), -1, dtype=int)
    for e in range(len(tri)):
        free = ids < 0
        if not free.any():
            break
        V = xy[tri[e]]
        lo = V.min(axis=0) - tol
        hi = V.max(axis=0) + tol
        cand = free & np.all((pts >= lo) & (pts <= hi), axis=1)
        if not cand.any():
            continue
        P = pts[cand]
        T = np.column_stack([V[1] - V[0], V[2] - V[0]])
        lam = (P - V[0]) @ np.linalg.inv(T).T
        inside = (lam[:, 0] >= -tol) & (lam[:, 1] >= -tol) & (lam.sum(axis=1) <= 1 + tol)
        sel = np.nonzero(cand)[0][inside]
        ids[sel] = e
    if (ids < 0).any() and not missing_ok:
        bad = pts[ids < 0][0]
        raise ValueError(f"point {tuple(bad)} not located in the mesh")
    return ids


def combined_error_at_T(details: dict[LevelIndex, DiscreteField], index_set: IndexSet,
                        problem: ProblemData, reference_mesh: SpatialMesh,
                        quad_degree: int | None = None) -> ErrorReport:
    """Error of the combination at the shared final time, integrated on the
    reference (finest) spatial mesh."""
    if problem.exact_v is None or problem.exact_sigma is None:
        raise ValueError("needs an exact solution")
    some = next(iter(details.values()))
    T = some.op.mesh.temporal.final_time
    for fld in details.values():
        if abs(fld.op.mesh.temporal.final_time - T) > 1e-12:
            raise ValueError("details disagree on the final time")
    if quad_degree is None:
        quad_degree = 2 * max(d.op.degrees.p_x_v for d in details.values()) + 4

    rule = bq.triangle_rule(quad_degree)
    xy = reference_mesh.coords()
    pts_list, w_list = [], []
    for t in reference_mesh.triangles:
        phys = bq.map_rule_to_triangle(rule, xy[list(t.vertex_ids)])
        pts_list.append(phys.points)
        w_list.append(phys.weights)
    pts = np.concatenate(pts_list)
    w = np.concatenate(w_list)

    v_hat = np.zeros(len(pts))
    s1_hat = np.zeros(len(pts))
    s2_hat = np.zeros(len(pts))
    for l, c in index_set.members:
        fld = details[l]
        ids = locate_points(fld.op.mesh.spatial, pts)
        tr = fld.trace_below(fld.op.mesh.temporal.n_slabs)
        v, s1, s2 = fld.eval_spatial(tr, pts, ids)
        v_hat += c * v
        s1_hat += c * s1
        s2_hat += c * s2

    vex = np.broadcast_to(np.asarray(problem.exact_v(pts[:, 0], pts[:, 1], T),
                                     dtype=float), v_hat.shape)
    s1ex, s2ex = problem.exact_sigma(pts[:, 0], pts[:, 1], T)
    s1ex = np.broadcast_to(np.asarray(s1ex, dtype=float), v_hat.shape)
    s2ex = np.broadcast_to(np.asarray(s2ex, dtype=float), v_hat.shape)

    # piecewise-constant c on the reference mesh for the weighted v norm
    cref = np.empty(len(pts))
    ref_ids = locate_points(reference_mesh, pts)
    speeds = reference_mesh.subdomain_speeds
    sub = np.array([speeds[t.subdomain_id] for t in reference_mesh.triangles])
    cref = sub[ref_ids]

    ev = math.sqrt(float(w @ ((vex - v_hat) / cref) ** 2))
    nv = math.sqrt(float(w @ (vex / cref) ** 2))
    es = math.sqrt(float(w @ ((s1ex - s1_hat) ** 2 + (s2ex - s2_hat) ** 2)))
    ns = math.sqrt(float(w @ (s1ex**2 + s2ex**2)))
    absolute = nv < 1e-14 or ns < 1e-14
    dofs = sum(f.n_dofs for f in details.values())
    return ErrorReport(T, ev, es, None, ev if absolute else ev / nv,
                       es if absolute else es / ns, None, dofs, absolute)
