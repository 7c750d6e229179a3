"""Slab-wise assembly and solution of the space-time DG system.

The unknowns per slab are the modal coefficients of (v, sigma1, sigma2) in
the orthonormal tensor basis.  Because the temporal basis is shared by all
fields and all elements of a slab, every matrix contribution is a Kronecker
product of a spatial operator with a small temporal matrix:

* volume gradient/face/boundary couplings  x  identity in time,
* volume time-derivative terms             x  the 1D stiffness-type matrix,
* the upwind top-trace mass term           x  an endpoint outer product.

The spatial operator is assembled once per mesh; with uniform time steps the
slab matrix (and its sparse LU factorization) is reused for every slab, and
marching only rebuilds right-hand sides.  The space-like upwind flux couples
a slab to the previous one through the bottom-trace term on the right-hand
side, which makes the global system block lower-triangular.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import basis_quad as bq
from .spacetime import INTERIOR, SpaceTimeMesh, SpatialFace


@dataclass(frozen=True)
class DegreeSpec:
    p_x_v: int
    p_t_v: int
    p_x_sigma: int
    p_t_sigma: int

    def diagnostics(self) -> list[str]:
        out = []
        for name in ("p_x_v", "p_t_v", "p_x_sigma", "p_t_sigma"):
            if getattr(self, name) < 0:
                out.append(f"{name} must be >= 0")
        if self.p_t_sigma != self.p_t_v:
            out.append(
                f"temporal degrees must match (p_t_sigma={self.p_t_sigma}, p_t_v={self.p_t_v})"
            )
        if abs(self.p_x_sigma - self.p_x_v) > 1:
            out.append(
                f"|p_x_sigma - p_x_v| must be <= 1, got {abs(self.p_x_sigma - self.p_x_v)}"
            )
        return out


@dataclass(frozen=True)
class FluxParams:
    """Penalty parameters alpha (on v jumps) and beta (on normal sigma
    jumps), constant per face."""

    mode: str  # constant / face_scaled / refined_scaled
    a: float = 1.0
    b: float = 1.0
    h_x: float = 1.0  # global mesh width, used by refined_scaled

    @staticmethod
    def constant(a: float = 1.0, b: float = 1.0) -> "FluxParams":
        return FluxParams("constant", a, b)

    @staticmethod
    def face_scaled(a: float = 1.0, b: float = 1.0) -> "FluxParams":
        return FluxParams("face_scaled", a, b)

    @staticmethod
    def refined_scaled(h_x: float) -> "FluxParams":
        return FluxParams("refined_scaled", h_x=h_x)

    def diagnostics(self) -> list[str]:
        out = []
        if self.mode not in ("constant", "face_scaled", "refined_scaled"):
            out.append(f"unknown flux mode {self.mode!r}")
        if self.mode in ("constant", "face_scaled") and (self.a <= 0 or self.b <= 0):
            out.append("flux parameters a, b must be positive")
        if self.mode == "refined_scaled" and self.h_x <= 0:
            out.append("refined_scaled flux needs a positive h_x")
        return out

    def alpha_beta(self, face: SpatialFace, c_face: float) -> tuple[float, float]:
        if self.mode == "constant":
            return self.a, self.b
        if self.mode == "face_scaled":
            return self.a / face.length, self.b * face.length
        # refined_scaled
        return self.h_x / (c_face * face.length), c_face * face.length / self.h_x


@dataclass
class ProblemData:
    """Wave speeds and data callbacks.  All callbacks take broadcastable
    coordinate arrays: v0(x1,x2), sigma0(x1,x2) -> (s1,s2), f(x1,x2,t),
    g_D(x1,x2,t), g_N(x1,x2,t), exact_v(x1,x2,t), exact_sigma -> (s1,s2)."""

    speeds: list[float]
    v0: "callable"
    sigma0: "callable"
    f: "callable | None" = None
    g_D: "callable | None" = None
    g_N: "callable | None" = None
    exact_v: "callable | None" = None
    exact_sigma: "callable | None" = None


def validate(mesh: SpaceTimeMesh, degrees: DegreeSpec, flux: FluxParams) -> list[str]:
    """Empty list when the configuration is solvable; diagnostics otherwise."""
    out = degrees.diagnostics() + flux.diagnostics()
    n_sub = max(t.subdomain_id for t in mesh.spatial.triangles) + 1
    if len(mesh.spatial.subdomain_speeds) < n_sub:
        out.append("wave-speed table shorter than the number of subdomains")
    if any(c <= 0 for c in mesh.spatial.subdomain_speeds):
        out.append("wave speeds must be positive")
    return out


class SlabOperator:
    """Spatial operators, temporal matrices, and the factorized slab system
    for one (mesh, degrees, flux, speeds) combination."""

    def __init__(self, mesh: SpaceTimeMesh, problem: ProblemData, flux: FluxParams,
                 degrees: DegreeSpec):
        bad = validate(mesh, degrees, flux)
        if bad:
            raise ValueError("; ".join(bad))
        self.mesh = mesh
        self.problem = problem
        self.flux = flux
        self.degrees = degrees

        spatial = mesh.spatial
        xy = spatial.coords()
        self.n_elem = spatial.n_elements()
        self.Nxv = bq.tri_space_dim(degrees.p_x_v)
        self.Nxs = bq.tri_space_dim(degrees.p_x_sigma)
        self.Nt = degrees.p_t_v + 1
        self.ns_elem = self.Nxv + 2 * self.Nxs
        self.n_spatial = self.n_elem * self.ns_elem

        self.basis_v = []
        self.basis_s = []
        self.speed = np.empty(self.n_elem)
        for e, t in enumerate(spatial.triangles):
            verts = xy[list(t.vertex_ids)]
            self.basis_v.append(bq.TriangleBasis2D(degrees.p_x_v, verts))
            self.basis_s.append(bq.TriangleBasis2D(degrees.p_x_sigma, verts))
            self.speed[e] = spatial.subdomain_speeds[t.subdomain_id]

        # trace weight per spatial mode: c^-2 on v modes, 1 on sigma modes
        self.d_tr = np.ones(self.n_spatial)
        for e in range(self.n_elem):
            o = self.v_offset(e)
            self.d_tr[o : o + self.Nxv] = self.speed[e] ** -2.0

        self._build_time_matrices()
        self._build_reference_volume()
        self._build_spatial_operators()
        self._quad_cache: dict = {}
        A = self.slab_matrix()
        self._lu = spla.splu(A.tocsc())
        self._primal_global: dict[int, sp.spmatrix] = {}
        self._ibp_global: dict[int, sp.spmatrix] = {}

    # ---------------- indexing ----------------

    def v_offset(self, e: int) -> int:
        return e * self.ns_elem

    def s_offset(self, e: int, comp: int) -> int:
        return e * self.ns_elem + self.Nxv + comp * self.Nxs

    # ---------------- temporal pieces ----------------

    def _build_time_matrices(self):
        temporal = self.mesh.temporal
        if not temporal.is_uniform():
            raise NotImplementedError("non-uniform time partitions are not supported")
        t0, t1 = temporal.slab(0)
        self.basis_t = bq.LegendreBasis1D(self.degrees.p_t_v, t0, t1)
        qt = bq.gauss_interval(self.degrees.p_t_v + 3, t0, t1)
        V = self.basis_t.eval(qt.points)
        D = self.basis_t.eval_deriv(qt.points)
        # Dt[i,j] = integral chi_i * chi_j'
        self.Dt = np.einsum("q,qi,qj->ij", qt.weights, V, D)
        self.e_lo = self.basis_t.eval(np.array([t0]))[0]
        self.e_hi = self.basis_t.eval(np.array([t1]))[0]
        self.n_quad_t = self.degrees.p_t_v + 3

    def time_basis(self, n: int) -> bq.LegendreBasis1D:
        t0, t1 = self.mesh.temporal.slab(n)
        return bq.LegendreBasis1D(self.degrees.p_t_v, t0, t1)

    # ---------------- spatial pieces ----------------

    def _build_reference_volume(self):
        pv, ps = self.degrees.p_x_v, self.degrees.p_x_sigma
        q = 2 * max(pv, ps) + 4
        rule = bq.triangle_rule(q)
        Vv = bq.reference_tri_vals(pv, rule.points)
        Vs = bq.reference_tri_vals(ps, rule.points)
        Gv = bq.reference_tri_grads(pv, rule.points)
        Gs = bq.reference_tri_grads(ps, rule.points)
        w = rule.weights
        # Rvs[j] = int_ref V_a d_xi_j S_b; Rsv[j] = int_ref S_a d_xi_j V_b
        self.Rvs = np.einsum("q,qa,qbj->jab", w, Vv, Gs)
        self.Rsv = np.einsum("q,qa,qbj->jab", w, Vs, Gv)
        self.vol_rule = rule
        self.vol_rule_corner = bq.subdivided_triangle_rule(q, 1)

    def _face_quadrature(self, face: SpatialFace):
        nq = max(self.degrees.p_x_v, self.degrees.p_x_sigma) + 3
        g = bq.gauss_interval(nq, 0.0, 1.0)
        pts = face.va[None, :] + g.points[:, None] * (face.vb - face.va)[None, :]
        return pts, g.weights * face.length

    def _face_blocks(self, face: SpatialFace):
        """Weighted trace cross-mass matrices for both sides of a face."""
        pts, w = self._face_quadrature(face)
        sides = [face.left] + ([face.right] if face.right is not None else [])
        Tv = {e: self.basis_v[e].eval(pts) for e in sides}
        Ts = {e: self.basis_s[e].eval(pts) for e in sides}

        def mass(A, B):
            return np.einsum("q,qa,qb->ab", w, A, B)

        return Tv, Ts, mass

    def _build_spatial_operators(self):
        rows: list[np.ndarray] = []
        cols: list[np.ndarray] = []
        vals: list[np.ndarray] = []
        rows_i: list[np.ndarray] = []
        cols_i: list[np.ndarray] = []
        vals_i: list[np.ndarray] = []
        rows_p: list[np.ndarray] = []
        cols_p: list[np.ndarray] = []
        vals_p: list[np.ndarray] = []
        rows_pb: list[np.ndarray] = []
        cols_pb: list[np.ndarray] = []
        vals_pb: list[np.ndarray] = []

        def add(acc_r, acc_c, acc_v, r0, c0, block):
            nr, nc = block.shape
            r = np.repeat(np.arange(r0, r0 + nr), nc)
            c = np.tile(np.arange(c0, c0 + nc), nr)
            acc_r.append(r)
            acc_c.append(c)
            acc_v.append(block.ravel())

        # volume couplings
        for e in range(self.n_elem):
            jinv = self.basis_v[e].jinv
            for i in range(2):
                Gv_i = jinv[0, i] * self.Rvs[0] + jinv[1, i] * self.Rvs[1]  # (Nxv,Nxs)
                Gs_i = jinv[0, i] * self.Rsv[0] + jinv[1, i] * self.Rsv[1]  # (Nxs,Nxv)
                ov, os_ = self.v_offset(e), self.s_offset(e, i)
                # primal: -int v d_i tau_i  and  -int sigma_i d_i w
                add(rows, cols, vals, os_, ov, -Gv_i.T)
                add(rows, cols, vals, ov, os_, -Gs_i.T)
                # ibp: +int (d_i sigma_i) w  and  +int (d_i v) tau_i
                add(rows_i, cols_i, vals_i, ov, os_, Gv_i)
                add(rows_i, cols_i, vals_i, os_, ov, Gs_i)

        # face couplings
        for face in self.mesh.spatial_faces:
            Tv, Ts, mass = self._face_blocks(face)
            n = face.normal
            c_face = self.speed[face.left]
            if face.right is not None:
                c_face = 0.5 * (c_face + self.speed[face.right])
            alpha, beta = self.flux.alpha_beta(face, c_face)

            if face.kind == INTERIOR:
                sides = [(face.left, 1.0), (face.right, -1.0)]
                for eX, sX in sides:
                    for eY, sY in sides:
                        Mvv = mass(Tv[eX], Tv[eY])
                        Mvs = mass(Tv[eX], Ts[eY])
                        Msv = mass(Ts[eX], Tv[eY])
                        Mss = mass(Ts[eX], Ts[eY])
                        ovX, ovY = self.v_offset(eX), self.v_offset(eY)
                        # alpha [v][w] : symmetric penalty
                        add(rows, cols, vals, ovX, ovY, alpha * sX * sY * Mvv)
                        add(rows_i, cols_i, vals_i, ovX, ovY, alpha * sX * sY * Mvv)
                        add(rows_p, cols_p, vals_p, ovX, ovY, alpha * sX * sY * Mvv)
                        for i in range(2):
                            osXi, osYi = self.s_offset(eX, i), self.s_offset(eY, i)
                            # primal: {sigma}.[w]_N and {v}[tau]_N
                            add(rows, cols, vals, ovX, osYi, sX * 0.5 * n[i] * Mvs)
                            add(rows, cols, vals, osXi, ovY, sX * 0.5 * n[i] * Msv)
                            # ibp: -[sigma]_N {w} and -[v]_N {tau}
                            add(rows_i, cols_i, vals_i, ovX, osYi, -sY * 0.5 * n[i] * Mvs)
                            add(rows_i, cols_i, vals_i, osXi, ovY, -sY * 0.5 * n[i] * Msv)
                            for j in range(2):
                                osYj = self.s_offset(eY, j)
                                blk = beta * sX * sY * n[i] * n[j] * Mss
                                add(rows, cols, vals, osXi, osYj, blk)
                                add(rows_i, cols_i, vals_i, osXi, osYj, blk)
                                add(rows_p, cols_p, vals_p, osXi, osYj, blk)
            else:
                e = face.left
                Mvv = mass(Tv[e], Tv[e])
                Mvs = mass(Tv[e], Ts[e])
                Msv = mass(Ts[e], Tv[e])
                Mss = mass(Ts[e], Ts[e])
                ov = self.v_offset(e)
                if face.kind == "dirichlet":
                    add(rows, cols, vals, ov, ov, alpha * Mvv)
                    add(rows_i, cols_i, vals_i, ov, ov, alpha * Mvv)
                    add(rows_pb, cols_pb, vals_pb, ov, ov, alpha * Mvv)
                    for i in range(2):
                        os_ = self.s_offset(e, i)
                        add(rows, cols, vals, ov, os_, n[i] * Mvs)
                        add(rows_i, cols_i, vals_i, os_, ov, -n[i] * Msv)
                else:  # neumann
                    for i in range(2):
                        osi = self.s_offset(e, i)
                        add(rows, cols, vals, osi, ov, n[i] * Msv)
                        add(rows_i, cols_i, vals_i, ov, osi, -n[i] * Mvs)
                        for j in range(2):
                            osj = self.s_offset(e, j)
                            blk = beta * n[i] * n[j] * Mss
                            add(rows, cols, vals, osi, osj, blk)
                            add(rows_i, cols_i, vals_i, osi, osj, blk)
                            add(rows_pb, cols_pb, vals_pb, osi, osj, blk)

        shape = (self.n_spatial, self.n_spatial)

        def build(r, c, v):
            if not r:
                return sp.csr_matrix(shape)
            return sp.csr_matrix(
                (np.concatenate(v), (np.concatenate(r), np.concatenate(c))), shape=shape
            )

        self.S_id = build(rows, cols, vals)
        self.S_ibp = build(rows_i, cols_i, vals_i)
        self.S_pen_int = build(rows_p, cols_p, vals_p)
        self.S_pen_bnd = build(rows_pb, cols_pb, vals_pb)
        self.S_pen = (self.S_pen_int + self.S_pen_bnd).tocsr()

    # ---------------- slab system ----------------

    def slab_matrix(self) -> sp.spmatrix:
        It = sp.identity(self.Nt, format="csr")
        D = sp.diags(self.d_tr)
        A = sp.kron(self.S_id, It)
        A = A + sp.kron(D, -self.Dt.T)
        A = A + sp.kron(D, np.outer(self.e_hi, self.e_hi))
        return A.tocsr()

    def ibp_slab_matrix(self) -> sp.spmatrix:
        It = sp.identity(self.Nt, format="csr")
        D = sp.diags(self.d_tr)
        A = sp.kron(self.S_ibp, It)
        A = A + sp.kron(D, self.Dt)
        A = A + sp.kron(D, np.outer(self.e_lo, self.e_lo))
        return A.tocsr()

    def coupling_matrix(self) -> sp.spmatrix:
        """Block (slab n+1 rows, slab n cols): minus the upwind bottom-trace
        mass term."""
        D = sp.diags(self.d_tr)
        return sp.kron(D, -np.outer(self.e_lo, self.e_hi)).tocsr()

    def global_matrix(self, form: str) -> sp.spmatrix:
        N = self.mesh.temporal.n_slabs
        cache = self._primal_global if form == "primal" else self._ibp_global
        if N not in cache:
            diag = self.slab_matrix() if form == "primal" else self.ibp_slab_matrix()
            C = self.coupling_matrix()
            blocks = [[None] * N for _ in range(N)]
            for n in range(N):
                blocks[n][n] = diag
                if n > 0:
                    blocks[n][n - 1] = C
            cache[N] = sp.bmat(blocks, format="csr")
        return cache[N]

    # ---------------- volume data integration ----------------

    def _element_groups(self):
        """(element ids, reference rule) pairs: corner elements use the
        sub-triangulated rule."""
        key = "groups"
        if key not in self._quad_cache:
            corner = self.mesh.element_corner
            ids_reg = np.nonzero(~corner)[0]
            ids_cor = np.nonzero(corner)[0]
            groups = []
            for ids, rule in ((ids_reg, self.vol_rule), (ids_cor, self.vol_rule_corner)):
                if len(ids) == 0:
                    continue
                pts = np.empty((len(ids), len(rule.weights), 2))
                det = np.empty(len(ids))
                scale_v = np.empty(len(ids))
                scale_s = np.empty(len(ids))
                for i, e in enumerate(ids):
                    b = self.basis_v[e]
                    pts[i] = b.vertices[0] + rule.points @ b.jac.T
                    det[i] = b.detj
                    scale_v[i] = b.scale
                    scale_s[i] = self.basis_s[e].scale
                Vv = bq.reference_tri_vals(self.degrees.p_x_v, rule.points)
                Vs = bq.reference_tri_vals(self.degrees.p_x_sigma, rule.points)
                groups.append(dict(ids=ids, rule=rule, pts=pts, det=det,
                                   scale_v=scale_v, scale_s=scale_s, Vv=Vv, Vs=Vs))
            self._quad_cache[key] = groups
        return self._quad_cache[key]

    def project_initial(self) -> np.ndarray:
        """Spatial coefficients of the initial data (v0, sigma0)."""
        up = np.zeros(self.n_spatial)
        for g in self._element_groups():
            x1, x2 = g["pts"][:, :, 0], g["pts"][:, :, 1]
            w = g["rule"].weights
            v0 = np.broadcast_to(np.asarray(self.problem.v0(x1, x2), dtype=float), x1.shape)
            s1, s2 = self.problem.sigma0(x1, x2)
            s1 = np.broadcast_to(np.asarray(s1, dtype=float), x1.shape)
            s2 = np.broadcast_to(np.asarray(s2, dtype=float), x1.shape)
            cv = np.einsum("q,eq,qk->ek", w, v0, g["Vv"]) * (g["det"] * g["scale_v"])[:, None]
            c1 = np.einsum("q,eq,qk->ek", w, s1, g["Vs"]) * (g["det"] * g["scale_s"])[:, None]
            c2 = np.einsum("q,eq,qk->ek", w, s2, g["Vs"]) * (g["det"] * g["scale_s"])[:, None]
            for i, e in enumerate(g["ids"]):
                up[self.v_offset(e) : self.v_offset(e) + self.Nxv] = cv[i]
                up[self.s_offset(e, 0) : self.s_offset(e, 0) + self.Nxs] = c1[i]
                up[self.s_offset(e, 1) : self.s_offset(e, 1) + self.Nxs] = c2[i]
        return up

    def _volume_rhs(self, n: int) -> np.ndarray:
        rhs = np.zeros(self.n_spatial * self.Nt)
        if self.problem.f is None:
            return rhs
        t0, t1 = self.mesh.temporal.slab(n)
        qt = bq.gauss_interval(self.n_quad_t, t0, t1)
        Vt = self.time_basis(n).eval(qt.points)  # (nqt, Nt)
        for g in self._element_groups():
            x1 = g["pts"][:, :, 0:1]
            x2 = g["pts"][:, :, 1:2]
            fv = np.asarray(self.problem.f(x1, x2, qt.points[None, None, :]), dtype=float)
            fv = np.broadcast_to(fv, (len(g["ids"]), len(g["rule"].weights), len(qt.points)))
            w = g["rule"].weights
            Fe = np.einsum("q,s,eqs,qk,sm->ekm", w, qt.weights, fv, g["Vv"], Vt)
            Fe = Fe * (g["det"] * g["scale_v"])[:, None, None]
            for i, e in enumerate(g["ids"]):
                o = self.v_offset(e) * 1
                base = o * self.Nt
                rhs[base : base + self.Nxv * self.Nt] += Fe[i].ravel()
        return rhs

    def _boundary_rhs(self, n: int) -> np.ndarray:
        rhs = np.zeros(self.n_spatial * self.Nt)
        has_d = self.problem.g_D is not None
        has_n = self.problem.g_N is not None
        if not (has_d or has_n):
            return rhs
        t0, t1 = self.mesh.temporal.slab(n)
        qt = bq.gauss_interval(self.n_quad_t, t0, t1)
        Vt = self.time_basis(n).eval(qt.points)  # (nqt, Nt)
        for face in self.mesh.spatial_faces:
            if face.kind == INTERIOR:
                continue
            if face.kind == "dirichlet" and not has_d:
                continue
            if face.kind == "neumann" and not has_n:
                continue
            pts, w = self._face_quadrature(face)
            e = face.left
            nvec = face.normal
            c_face = self.speed[e]
            alpha, beta = self.flux.alpha_beta(face, c_face)
            Tv = self.basis_v[e].eval(pts)
            Ts = self.basis_s[e].eval(pts)
            if face.kind == "dirichlet":
                gvals = np.asarray(
                    self.problem.g_D(pts[:, 0:1], pts[:, 1:2], qt.points[None, :]), dtype=float
                )
                gvals = np.broadcast_to(gvals, (len(w), len(qt.points)))
                # int g_D (alpha w - tau . n)
                bv = alpha * np.einsum("q,s,qs,qk,sm->km", w, qt.weights, gvals, Tv, Vt)
                bs = np.einsum("q,s,qs,qk,sm->km", w, qt.weights, gvals, Ts, Vt)
                ov = self.v_offset(e)
                rhs[ov * self.Nt : (ov + self.Nxv) * self.Nt] += bv.ravel()
                for i in range(2):
                    osi = self.s_offset(e, i)
                    rhs[osi * self.Nt : (osi + self.Nxs) * self.Nt] += (-nvec[i] * bs).ravel()
            else:
                gvals = np.asarray(
                    self.problem.g_N(pts[:, 0:1], pts[:, 1:2], qt.points[None, :]), dtype=float
                )
                gvals = np.broadcast_to(gvals, (len(w), len(qt.points)))
                # int g_N (beta tau . n - w)
                bv = np.einsum("q,s,qs,qk,sm->km", w, qt.weights, gvals, Tv, Vt)
                bs = beta * np.einsum("q,s,qs,qk,sm->km", w, qt.weights, gvals, Ts, Vt)
                ov = self.v_offset(e)
                rhs[ov * self.Nt : (ov + self.Nxv) * self.Nt] += (-bv).ravel()
                for i in range(2):
                    osi = self.s_offset(e, i)
                    rhs[osi * self.Nt : (osi + self.Nxs) * self.Nt] += (nvec[i] * bs).ravel()
        return rhs

    def assemble_rhs(self, n: int, upwind: np.ndarray) -> np.ndarray:
        rhs = self._volume_rhs(n) + self._boundary_rhs(n)
        rhs += (self.d_tr * upwind)[:, None].dot(self.e_lo[None, :]).ravel()
        return rhs

    def solve_slab(self, rhs: np.ndarray) -> np.ndarray:
        x = self._lu.solve(rhs)
        if not np.all(np.isfinite(x)):
            raise RuntimeError("sparse solve produced non-finite values")
        return x.reshape(self.n_spatial, self.Nt)


@dataclass
class DiscreteField:
    """Per-slab modal coefficients of (v, sigma)."""

    op: SlabOperator
    slabs: list[np.ndarray]  # each (n_spatial, Nt)
    initial_trace: np.ndarray | None = None  # projected data coefficients

    @property
    def n_dofs(self) -> int:
        return sum(s.size for s in self.slabs)

    def flat(self) -> np.ndarray:
        return np.concatenate([s.ravel() for s in self.slabs])

    def trace_below(self, n: int) -> np.ndarray:
        """Spatial coefficients of the trace at t_n from the earlier side
        (n = 1..N)."""
        return self.slabs[n - 1] @ self.op.e_hi

    def trace_above(self, n: int) -> np.ndarray:
        """Trace at t_n from the later side (n = 0..N-1)."""
        return self.slabs[n] @ self.op.e_lo

    def trace_at(self, t: float) -> np.ndarray:
        """Trace coefficients at a slab boundary, from below when possible."""
        bp = np.asarray(self.op.mesh.temporal.breakpoints)
        n = int(np.argmin(np.abs(bp - t)))
        if abs(bp[n] - t) > 1e-10 * max(1.0, bp[-1]):
            raise ValueError(f"{t} is not a slab boundary")
        return self.trace_above(0) if n == 0 else self.trace_below(n)

    def eval_spatial(self, coeffs: np.ndarray, pts: np.ndarray, elem_ids: np.ndarray):
        """Evaluate a spatial-coefficient vector at points grouped by their
        containing element.  Returns (v, s1, s2)."""
        op = self.op
        v = np.empty(len(pts))
        s1 = np.empty(len(pts))
        s2 = np.empty(len(pts))
        order = np.argsort(elem_ids, kind="stable")
        sorted_ids = elem_ids[order]
        bounds = np.searchsorted(sorted_ids, np.arange(op.n_elem + 1))
        for e in range(op.n_elem):
            sel = order[bounds[e] : bounds[e + 1]]
            if len(sel) == 0:
                continue
            P = pts[sel]
            Vv = op.basis_v[e].eval(P)
            Vs = op.basis_s[e].eval(P)
            ov, o1, o2 = op.v_offset(e), op.s_offset(e, 0), op.s_offset(e, 1)
            v[sel] = Vv @ coeffs[ov : ov + op.Nxv]
            s1[sel] = Vs @ coeffs[o1 : o1 + op.Nxs]
            s2[sel] = Vs @ coeffs[o2 : o2 + op.Nxs]
        return v, s1, s2


def march(mesh: SpaceTimeMesh, problem: ProblemData, flux: FluxParams,
          degrees: DegreeSpec, op: SlabOperator | None = None) -> DiscreteField:
    """Solve slab by slab, passing the upwind trace forward."""
    if op is None:
        op = SlabOperator(mesh, problem, flux, degrees)
    up = op.project_initial()
    field = DiscreteField(op, [], initial_trace=up.copy())
    for n in range(mesh.temporal.n_slabs):
        try:
            rhs = op.assemble_rhs(n, up)
            U = op.solve_slab(rhs)
        except Exception as exc:
            raise RuntimeError(f"slab {n} solve failed: {exc}") from exc
        field.slabs.append(U)
        up = U @ op.e_hi
    return field


def assemble_slab(op: SlabOperator, n: int, upwind: np.ndarray):
    """The (matrix, rhs) pair of one slab system."""
    return op.slab_matrix(), op.assemble_rhs(n, upwind)


def apply_bilinear(form: str, trial: DiscreteField, test: DiscreteField) -> float:
    """Value of the space-time DG bilinear form A(trial; test), either in its
    primal or its integrated-by-parts shape."""
    if form not in ("primal", "ibp"):
        raise ValueError(f"unknown form {form!r}")
    if trial.op is not test.op:
        if (trial.op.n_spatial, trial.op.Nt) != (test.op.n_spatial, test.op.Nt):
            raise ValueError("trial/test fields live on different discretizations")
    A = trial.op.global_matrix(form)
    return float(test.flat() @ (A @ trial.flat()))


def random_field(op: SlabOperator, rng: np.random.Generator) -> DiscreteField:
    slabs = [rng.standard_normal((op.n_spatial, op.Nt))
             for _ in range(op.mesh.temporal.n_slabs)]
    return DiscreteField(op, slabs)
