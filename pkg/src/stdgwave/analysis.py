"""Norms, energies, and error functionals for space-time DG fields.

The DG seminorm collects the square roots of: half the weighted trace norms
at the initial and final time slices, half the squared temporal jumps at the
internal slab interfaces, and the alpha/beta penalty terms on time-like and
boundary faces.  For a discrete field all pieces reduce to coefficient
algebra (the spatial basis is orthonormal), so the seminorm is an
independent cross-check of the assembled bilinear form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import basis_quad as bq
from .dg_assembly import DiscreteField, ProblemData, SlabOperator
from .spacetime import INTERIOR


@dataclass
class ErrorReport:
    t: float
    l2_v: float
    l2_sigma: float
    dg: float | None
    rel_v: float
    rel_sigma: float
    rel_dg: float | None
    dofs: int
    absolute: bool = False  # set when the exact norm vanishes


# ----------------------------------------------------------------------
# seminorm and energy
# ----------------------------------------------------------------------


def _weighted_half_norm2(op: SlabOperator, coeffs: np.ndarray) -> float:
    return 0.5 * float(np.sum(op.d_tr * coeffs**2))


def dg_seminorm(field: DiscreteField, up_to: int | None = None) -> float:
    """DG seminorm of a discrete field over the first ``up_to`` slabs."""
    op = field.op
    N = op.mesh.temporal.n_slabs
    n = N if up_to is None else up_to
    if not 1 <= n <= N:
        raise ValueError(f"up_to must be in 1..{N}")
    total = _weighted_half_norm2(op, field.trace_above(0))
    total += _weighted_half_norm2(op, field.trace_below(n))
    for k in range(1, n):
        total += _weighted_half_norm2(op, field.trace_below(k) - field.trace_above(k))
    for k in range(n):
        U = field.slabs[k]
        total += float(np.einsum("sm,sm->", U, op.S_pen @ U))
    return math.sqrt(total)


def energy(field: DiscreteField, t: float) -> float:
    """Discrete energy 1/2 int (c^-2 v^2 + |sigma|^2) at a slab boundary,
    trace taken from below (from above at t = 0)."""
    return _weighted_half_norm2(field.op, field.trace_at(t))


def energy_of_callbacks(op: SlabOperator, v_fun, sigma_fun, t: float) -> float:
    """Energy of a pair of callbacks at time t, by element quadrature."""
    total = 0.0
    for g in op._element_groups():
        x1, x2 = g["pts"][:, :, 0], g["pts"][:, :, 1]
        w = g["rule"].weights
        v = np.broadcast_to(np.asarray(v_fun(x1, x2, t), dtype=float), x1.shape)
        s1, s2 = sigma_fun(x1, x2, t)
        s1 = np.broadcast_to(np.asarray(s1, dtype=float), x1.shape)
        s2 = np.broadcast_to(np.asarray(s2, dtype=float), x1.shape)
        c2 = op.speed[g["ids"]] ** -2.0
        vals = c2[:, None] * v**2 + s1**2 + s2**2
        total += float(np.einsum("q,eq,e->", w, vals, g["det"]))
    return 0.5 * total


def energy_identity_residual(field: DiscreteField, n: int) -> tuple[float, float, float]:
    """(E(t_n), dissipated, E(0)) for a marched solution with data-driven
    right-hand side.  E(0) is the energy of the projected initial data; the
    dissipation includes the initial-mismatch term, the temporal jumps, and
    the accumulated penalties, so E(t_n) + dissipated = E(0) holds exactly
    for the discrete solution."""
    op = field.op
    if field.initial_trace is None:
        raise ValueError("field was not produced by march()")
    e0 = _weighted_half_norm2(op, field.initial_trace)
    en = _weighted_half_norm2(op, field.trace_below(n))
    diss = _weighted_half_norm2(op, field.trace_above(0) - field.initial_trace)
    for k in range(1, n):
        diss += _weighted_half_norm2(op, field.trace_below(k) - field.trace_above(k))
    for k in range(n):
        U = field.slabs[k]
        diss += float(np.einsum("sm,sm->", U, op.S_pen @ U))
    return en, diss, e0


# ----------------------------------------------------------------------
# errors against an exact solution
# ----------------------------------------------------------------------


def _slice_norms(op: SlabOperator, coeffs: np.ndarray, problem: ProblemData, t: float):
    """(err_v, err_sigma, norm_v, norm_sigma) in the c^-1-weighted L2(Omega)
    and L2(Omega)^2 norms at time t; coeffs are trace coefficients."""
    ev2 = es2 = nv2 = ns2 = 0.0
    for g in op._element_groups():
        x1, x2 = g["pts"][:, :, 0], g["pts"][:, :, 1]
        w = g["rule"].weights
        vex = np.broadcast_to(np.asarray(problem.exact_v(x1, x2, t), dtype=float), x1.shape)
        s1ex, s2ex = problem.exact_sigma(x1, x2, t)
        s1ex = np.broadcast_to(np.asarray(s1ex, dtype=float), x1.shape)
        s2ex = np.broadcast_to(np.asarray(s2ex, dtype=float), x1.shape)
        ids = g["ids"]
        Cv = np.stack([coeffs[op.v_offset(e) : op.v_offset(e) + op.Nxv] for e in ids])
        C1 = np.stack([coeffs[op.s_offset(e, 0) : op.s_offset(e, 0) + op.Nxs] for e in ids])
        C2 = np.stack([coeffs[op.s_offset(e, 1) : op.s_offset(e, 1) + op.Nxs] for e in ids])
        vh = (Cv @ g["Vv"].T) * g["scale_v"][:, None]
        s1h = (C1 @ g["Vs"].T) * g["scale_s"][:, None]
        s2h = (C2 @ g["Vs"].T) * g["scale_s"][:, None]
        c2 = op.speed[ids] ** -2.0
        det = g["det"]
        ev2 += float(np.einsum("q,eq,e->", w, c2[:, None] * (vex - vh) ** 2, det))
        nv2 += float(np.einsum("q,eq,e->", w, c2[:, None] * vex**2, det))
        es2 += float(np.einsum("q,eq,e->", w, (s1ex - s1h) ** 2 + (s2ex - s2h) ** 2, det))
        ns2 += float(np.einsum("q,eq,e->", w, s1ex**2 + s2ex**2, det))
    return math.sqrt(ev2), math.sqrt(es2), math.sqrt(nv2), math.sqrt(ns2)


def _boundary_penalty_error2(field: DiscreteField, problem: ProblemData, n: int) -> float:
    """Accumulated alpha/beta boundary penalties of the error over the first
    n slabs (data minus discrete trace)."""
    op = field.op
    total = 0.0
    for face in op.mesh.spatial_faces:
        if face.kind == INTERIOR:
            continue
        pts, w = op._face_quadrature(face)
        e = face.left
        alpha, beta = op.flux.alpha_beta(face, op.speed[e])
        Tv = op.basis_v[e].eval(pts)
        Ts = op.basis_s[e].eval(pts)
        nvec = face.normal
        ov, o1, o2 = op.v_offset(e), op.s_offset(e, 0), op.s_offset(e, 1)
        for k in range(n):
            t0, t1 = op.mesh.temporal.slab(k)
            qt = bq.gauss_interval(op.n_quad_t, t0, t1)
            Vt = op.time_basis(k).eval(qt.points)  # (nqt, Nt)
            U = field.slabs[k]
            if face.kind == "dirichlet":
                tr = (Tv @ U[ov : ov + op.Nxv]) @ Vt.T  # (nq, nqt)
                if problem.g_D is None:
                    data = np.zeros_like(tr)
                else:
                    data = np.broadcast_to(
                        np.asarray(problem.g_D(pts[:, 0:1], pts[:, 1:2], qt.points[None, :]),
                                   dtype=float), tr.shape)
                total += alpha * float(np.einsum("q,s,qs->", w, qt.weights, (data - tr) ** 2))
            else:
                trn = ((Ts @ U[o1 : o1 + op.Nxs]) @ Vt.T) * nvec[0]
                trn = trn + ((Ts @ U[o2 : o2 + op.Nxs]) @ Vt.T) * nvec[1]
                if problem.g_N is None:
                    data = np.zeros_like(trn)
                else:
                    data = np.broadcast_to(
                        np.asarray(problem.g_N(pts[:, 0:1], pts[:, 1:2], qt.points[None, :]),
                                   dtype=float), trn.shape)
                total += beta * float(np.einsum("q,s,qs->", w, qt.weights, (data - trn) ** 2))
    return total


def _initial_mismatch2(field: DiscreteField, problem: ProblemData) -> float:
    """Half the weighted squared distance between the initial data and the
    discrete trace at t = 0+ (by quadrature against the true data)."""
    op = field.op
    coeffs = field.trace_above(0)
    total = 0.0
    for g in op._element_groups():
        x1, x2 = g["pts"][:, :, 0], g["pts"][:, :, 1]
        w = g["rule"].weights
        v0 = np.broadcast_to(np.asarray(problem.v0(x1, x2), dtype=float), x1.shape)
        s1, s2 = problem.sigma0(x1, x2)
        s1 = np.broadcast_to(np.asarray(s1, dtype=float), x1.shape)
        s2 = np.broadcast_to(np.asarray(s2, dtype=float), x1.shape)
        ids = g["ids"]
        Cv = np.stack([coeffs[op.v_offset(e) : op.v_offset(e) + op.Nxv] for e in ids])
        C1 = np.stack([coeffs[op.s_offset(e, 0) : op.s_offset(e, 0) + op.Nxs] for e in ids])
        C2 = np.stack([coeffs[op.s_offset(e, 1) : op.s_offset(e, 1) + op.Nxs] for e in ids])
        vh = (Cv @ g["Vv"].T) * g["scale_v"][:, None]
        s1h = (C1 @ g["Vs"].T) * g["scale_s"][:, None]
        s2h = (C2 @ g["Vs"].T) * g["scale_s"][:, None]
        c2 = op.speed[ids] ** -2.0
        vals = c2[:, None] * (v0 - vh) ** 2 + (s1 - s1h) ** 2 + (s2 - s2h) ** 2
        total += float(np.einsum("q,eq,e->", w, vals, g["det"]))
    return 0.5 * total


def dg_seminorm_error(field: DiscreteField, problem: ProblemData,
                      up_to: int | None = None) -> float:
    """DG seminorm of (exact - field).  The exact solution is space-time
    continuous, so the temporal jumps and interior penalties reduce to the
    field's own jumps; the time slices and boundary penalties compare
    against the data/exact callbacks."""
    op = field.op
    N = op.mesh.temporal.n_slabs
    n = N if up_to is None else up_to
    total = _initial_mismatch2(field, problem)
    t_n = op.mesh.temporal.breakpoints[n]
    ev, es, _, _ = _slice_norms(op, field.trace_below(n), problem, t_n)
    total += 0.5 * (ev**2 + es**2)
    for k in range(1, n):
        total += _weighted_half_norm2(op, field.trace_below(k) - field.trace_above(k))
    for k in range(n):
        U = field.slabs[k]
        total += float(np.einsum("sm,sm->", U, op.S_pen_int @ U))
    total += _boundary_penalty_error2(field, problem, n)
    return math.sqrt(total)


def error_at(t: float, field: DiscreteField, problem: ProblemData,
             with_dg: bool = True) -> ErrorReport:
    """L2 errors at a slab boundary plus the truncated DG error seminorm."""
    if problem.exact_v is None or problem.exact_sigma is None:
        raise ValueError("error_at needs an exact solution")
    op = field.op
    bp = np.asarray(op.mesh.temporal.breakpoints)
    n = int(np.argmin(np.abs(bp - t)))
    coeffs = field.trace_at(t)
    ev, es, nv, ns = _slice_norms(op, coeffs, problem, float(bp[n]))
    dg = dg_seminorm_error(field, problem, up_to=max(n, 1)) if with_dg else None
    absolute = nv < 1e-14 or ns < 1e-14
    rel_v = ev if absolute else ev / nv
    rel_sigma = es if absolute else es / ns
    rel_dg = None
    if dg is not None:
        denom = math.hypot(nv, ns)
        rel_dg = dg if absolute else dg / denom
    return ErrorReport(float(bp[n]), ev, es, dg, rel_v, rel_sigma, rel_dg,
                       field.n_dofs, absolute)


# ----------------------------------------------------------------------
# projection studies
# ----------------------------------------------------------------------


def _project_field_errors(f, mesh, interval, degrees, grad=None):
    """L2 and spatial-gradient errors of the local tensor L2 projection of a
    scalar function over mesh x interval."""
    from .spacetime import corner_triangles

    p_x, p_t = degrees
    rule = bq.triangle_rule(2 * p_x + 6)
    rule_c = bq.subdivided_triangle_rule(2 * p_x + 6, 2)
    corner = corner_triangles(mesh)
    xy = mesh.coords()
    qt = bq.gauss_interval(p_t + 4, *interval)
    err2 = 0.0
    gerr2 = 0.0
    for e, tri in enumerate(mesh.triangles):
        verts = xy[list(tri.vertex_ids)]
        r = rule_c if corner[e] else rule
        coeff = bq.l2_project_local(f, verts, interval, degrees, quad_xy=r,
                                    n_quad_t=p_t + 4)
        basis_x = bq.TriangleBasis2D(p_x, verts)
        basis_t = bq.LegendreBasis1D(p_t, *interval)
        phys = bq.map_rule_to_triangle(r, verts)
        vx = basis_x.eval(phys.points)
        gx = basis_x.eval_grad(phys.points)
        vt = basis_t.eval(qt.points)
        fh = np.einsum("km,qk,sm->qs", coeff, vx, vt)
        fv = np.broadcast_to(
            np.asarray(f(phys.points[:, None, 0], phys.points[:, None, 1],
                         qt.points[None, :]), dtype=float), fh.shape)
        err2 += float(np.einsum("q,s,qs->", phys.weights, qt.weights, (fv - fh) ** 2))
        if grad is not None:
            g1, g2 = grad(phys.points[:, None, 0], phys.points[:, None, 1],
                          qt.points[None, :])
            gh = np.einsum("km,qkd,sm->qsd", coeff, gx, vt)
            d1 = np.broadcast_to(np.asarray(g1, dtype=float), fh.shape) - gh[:, :, 0]
            d2 = np.broadcast_to(np.asarray(g2, dtype=float), fh.shape) - gh[:, :, 1]
            gerr2 += float(np.einsum("q,s,qs->", phys.weights, qt.weights, d1**2 + d2**2))
    return math.sqrt(err2), (math.sqrt(gerr2) if grad is not None else None)


def projection_rate_study(f, meshes, degrees, final_time=1.0, slabs=None, grad=None):
    """Tensor L2-projection errors over a nested mesh family and the
    observed orders (log2 ratios of successive levels)."""
    slabs = slabs or [2**l for l in range(1, len(meshes) + 1)]
    rows = []
    for mesh, ns in zip(meshes, slabs):
        dt = final_time / ns
        e2 = 0.0
        g2 = 0.0
        for k in range(ns):
            e, g = _project_field_errors(f, mesh, (k * dt, (k + 1) * dt), degrees, grad)
            e2 += e**2
            if g is not None:
                g2 += g**2
        rows.append({
            "h_max": mesh.element_diameters().max(),
            "l2": math.sqrt(e2),
            "h1x": math.sqrt(g2) if grad is not None else None,
        })
    for i, row in enumerate(rows):
        row["rate_l2"] = None if i == 0 else math.log2(rows[i - 1]["l2"] / row["l2"])
        if grad is not None:
            row["rate_h1x"] = None if i == 0 else math.log2(rows[i - 1]["h1x"] / row["h1x"])
    return rows
