"""Orthonormal modal bases on triangles and intervals, plus quadrature.

The triangle basis is built once per degree on the reference triangle
(0,0)-(1,0)-(0,1) by an exact-rational LDL^T factorization of the monomial
moment matrix, so Gram matrices come out as the identity to machine
precision.  Physical bases are affine push-forwards normalized by the square
root of the area ratio, which keeps them orthonormal on every element.

Interval bases are scaled Legendre polynomials.  Quadrature on the triangle
is a collapsed Gauss-Legendre x Gauss-Jacobi tensor rule (exact for the
requested total degree); in time we use plain Gauss-Legendre.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre as npleg
from scipy.special import roots_jacobi

# ----------------------------------------------------------------------
# reference triangle modal basis
# ----------------------------------------------------------------------


def _monomials(p: int) -> list[tuple[int, int]]:
    return [(d - j, j) for d in range(p + 1) for j in range(d + 1)]


def _tri_moment(a: int, b: int) -> Fraction:
    # integral of x^a y^b over the reference triangle
    return Fraction(math.factorial(a) * math.factorial(b), math.factorial(a + b + 2))


@lru_cache(maxsize=None)
def _reference_coeffs(p: int) -> tuple[np.ndarray, tuple[tuple[int, int], ...]]:
    """Coefficient matrix C (n_fun x n_mono) with basis_k = sum_j C[k,j] mono_j,
    orthonormal on the reference triangle."""
    monos = _monomials(p)
    n = len(monos)
    M = [[_tri_moment(monos[i][0] + monos[j][0], monos[i][1] + monos[j][1]) for j in range(n)] for i in range(n)]
    # exact LDL^T: M = L D L^T with unit lower-triangular L
    L = [[Fraction(0)] * n for _ in range(n)]
    D = [Fraction(0)] * n
    for i in range(n):
        for j in range(i):
            s = M[i][j] - sum(L[i][k] * L[j][k] * D[k] for k in range(j))
            L[i][j] = s / D[j]
        L[i][i] = Fraction(1)
        D[i] = M[i][i] - sum(L[i][k] * L[i][k] * D[k] for k in range(i))
    # invert L exactly (forward substitution), then scale rows by 1/sqrt(D)
    Linv = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        Linv[i][i] = Fraction(1)
        for j in range(i):
            Linv[i][j] = -sum(L[i][k] * Linv[k][j] for k in range(j, i))
    C = np.array(
        [[float(Linv[i][j]) / math.sqrt(float(D[i])) for j in range(n)] for i in range(n)]
    )
    return C, tuple(monos)


def _mono_vals(monos, pts: np.ndarray) -> np.ndarray:
    x, y = pts[..., 0], pts[..., 1]
    return np.stack([x**a * y**b for a, b in monos], axis=-1)


def _mono_grads(monos, pts: np.ndarray) -> np.ndarray:
    x, y = pts[..., 0], pts[..., 1]
    gx = np.stack(
        [a * x ** max(a - 1, 0) * y**b if a > 0 else np.zeros_like(x) for a, b in monos],
        axis=-1,
    )
    gy = np.stack(
        [b * x**a * y ** max(b - 1, 0) if b > 0 else np.zeros_like(x) for a, b in monos],
        axis=-1,
    )
    return np.stack([gx, gy], axis=-1)  # (..., n_mono, 2)


def reference_tri_vals(p: int, pts: np.ndarray) -> np.ndarray:
    """Values of the orthonormal reference basis, shape (..., n_fun)."""
    C, monos = _reference_coeffs(p)
    return _mono_vals(monos, pts) @ C.T


def reference_tri_grads(p: int, pts: np.ndarray) -> np.ndarray:
    """Reference-coordinate gradients, shape (..., n_fun, 2)."""
    C, monos = _reference_coeffs(p)
    g = _mono_grads(monos, pts)  # (..., n_mono, 2)
    return np.einsum("...md,km->...kd", g, C)


def tri_space_dim(p: int) -> int:
    return (p + 1) * (p + 2) // 2


@dataclass
class TriangleBasis2D:
    """Orthonormal modal basis on a physical triangle."""

    degree: int
    vertices: np.ndarray  # (3,2)

    def __post_init__(self):
        v = self.vertices
        self.jac = np.column_stack([v[1] - v[0], v[2] - v[0]])  # d x / d xi
        self.detj = float(np.linalg.det(self.jac))
        if self.detj <= 0:
            raise ValueError("triangle must be positively oriented")
        self.jinv = np.linalg.inv(self.jac)
        self.area = 0.5 * self.detj
        self.scale = math.sqrt(0.5 / self.area)

    @property
    def n_fun(self) -> int:
        return tri_space_dim(self.degree)

    def to_reference(self, pts: np.ndarray) -> np.ndarray:
        return (pts - self.vertices[0]) @ self.jinv.T

    def eval(self, pts: np.ndarray) -> np.ndarray:
        return self.scale * reference_tri_vals(self.degree, self.to_reference(pts))

    def eval_grad(self, pts: np.ndarray) -> np.ndarray:
        g = reference_tri_grads(self.degree, self.to_reference(pts))
        return self.scale * np.einsum("...kd,de->...ke", g, self.jinv)


@dataclass
class LegendreBasis1D:
    """Scaled Legendre basis, orthonormal on (a, b)."""

    degree: int
    a: float = -1.0
    b: float = 1.0

    def __post_init__(self):
        j = np.arange(self.degree + 1)
        self.norms = np.sqrt((2.0 * j + 1.0) / (self.b - self.a))
        self._dcoeffs = []
        for jj in range(self.degree + 1):
            c = np.zeros(jj + 1)
            c[jj] = 1.0
            self._dcoeffs.append(npleg.legder(c))

    def to_reference(self, t):
        return 2.0 * (np.asarray(t, dtype=float) - self.a) / (self.b - self.a) - 1.0

    def eval(self, t) -> np.ndarray:
        xi = self.to_reference(t)
        return npleg.legvander(np.atleast_1d(xi), self.degree) * self.norms

    def eval_deriv(self, t) -> np.ndarray:
        xi = np.atleast_1d(self.to_reference(t))
        cols = [npleg.legval(xi, c) for c in self._dcoeffs]
        return np.stack(cols, axis=-1) * self.norms * (2.0 / (self.b - self.a))


# ----------------------------------------------------------------------
# quadrature
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray
    weights: np.ndarray
    exactness: int


def gauss_interval(n: int, a: float = -1.0, b: float = 1.0) -> QuadratureRule:
    x, w = npleg.leggauss(n)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return QuadratureRule(mid + half * x, half * w, 2 * n - 1)


@lru_cache(maxsize=None)
def triangle_rule(q: int) -> QuadratureRule:
    """Rule on the reference triangle exact for total degree q."""
    n = q // 2 + 1
    xa, wa = npleg.leggauss(n)
    xb, wb = roots_jacobi(n, 1.0, 0.0)
    # collapsed coordinates: xi = (1+a)(1-b)/4, eta = (1+b)/2
    A, B = np.meshgrid(xa, xb, indexing="ij")
    WA, WB = np.meshgrid(wa, wb, indexing="ij")
    xi = (1.0 + A) * (1.0 - B) / 4.0
    eta = (1.0 + B) / 2.0
    w = WA * WB / 8.0
    pts = np.column_stack([xi.ravel(), eta.ravel()])
    return QuadratureRule(pts, w.ravel(), q)


@lru_cache(maxsize=None)
def subdivided_triangle_rule(q: int, splits: int = 1) -> QuadratureRule:
    """Composite rule: the reference triangle is uniformly quadrisected
    ``splits`` times (4-fold sub-triangulation) and the base rule is applied
    on every sub-triangle."""
    base = triangle_rule(q)
    tris = [np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])]
    for _ in range(splits):
        new = []
        for t in tris:
            m01, m12, m20 = 0.5 * (t[0] + t[1]), 0.5 * (t[1] + t[2]), 0.5 * (t[2] + t[0])
            new += [
                np.array([t[0], m01, m20]),
                np.array([m01, t[1], m12]),
                np.array([m20, m12, t[2]]),
                np.array([m01, m12, m20]),
            ]
        tris = new
    pts, wts = [], []
    frac = 0.25**splits
    for t in tris:
        jac = np.column_stack([t[1] - t[0], t[2] - t[0]])
        pts.append(t[0] + base.points @ jac.T)
        wts.append(base.weights * frac)
    return QuadratureRule(np.vstack(pts), np.concatenate(wts), q)


def map_rule_to_triangle(rule: QuadratureRule, vertices: np.ndarray) -> QuadratureRule:
    jac = np.column_stack([vertices[1] - vertices[0], vertices[2] - vertices[0]])
    detj = abs(np.linalg.det(jac))
    return QuadratureRule(vertices[0] + rule.points @ jac.T, rule.weights * detj, rule.exactness)


# ----------------------------------------------------------------------
# local projection and inverse-inequality sampling
# ----------------------------------------------------------------------


def l2_project_local(
    f,
    tri_vertices: np.ndarray,
    interval: tuple[float, float],
    degrees: tuple[int, int],
    quad_xy: QuadratureRule | None = None,
    n_quad_t: int | None = None,
):
    """Modal coefficients (n_x, n_t) of the tensor L2 projection of
    ``f(x1, x2, t)`` on ``triangle x interval``."""
    p_x, p_t = degrees
    if quad_xy is None:
        quad_xy = triangle_rule(2 * p_x + 4)
    if n_quad_t is None:
        n_quad_t = p_t + 3
    basis_x = TriangleBasis2D(p_x, np.asarray(tri_vertices, dtype=float))
    basis_t = LegendreBasis1D(p_t, *interval)
    phys = map_rule_to_triangle(quad_xy, basis_x.vertices)
    qt = gauss_interval(n_quad_t, *interval)
    fvals = f(phys.points[:, None, 0], phys.points[:, None, 1], qt.points[None, :])
    fvals = np.broadcast_to(fvals, (len(phys.weights), len(qt.weights)))
    vx = basis_x.eval(phys.points)  # (nq, n_x)
    vt = basis_t.eval(qt.points)  # (nt, n_t)
    return np.einsum("q,s,qs,qk,sm->km", phys.weights, qt.weights, fvals, vx, vt)


def inverse_constants_check(p: int, trials: int = 10_000, seed: int = 0) -> tuple[float, float]:
    """Max observed sqrt(h)*L2/L1 and sqrt(h)*Linf/L2 ratios over random
    polynomials of degree p on random intervals."""
    rng = np.random.default_rng(seed)
    r21_max = rinf2_max = 0.0
    # dense evaluation grid (reference) for Linf, panels of Gauss for L1
    xs = np.linspace(-1.0, 1.0, 2001)
    panels = []
    edges = np.linspace(-1.0, 1.0, 17)
    for i in range(16):
        g = gauss_interval(12, edges[i], edges[i + 1])
        panels.append(g)
    qp = np.concatenate([g.points for g in panels])
    qw = np.concatenate([g.weights for g in panels])
    basis = LegendreBasis1D(p)
    V_dense = basis.eval(xs)
    V_quad = basis.eval(qp)
    coeffs = rng.standard_normal((trials, p + 1))
    # orthonormal basis on (-1,1): reference-interval L2 norm is |coeffs|
    l2_ref = np.linalg.norm(coeffs, axis=1)
    linf_ref = np.abs(coeffs @ V_dense.T).max(axis=1)
    l1_ref = np.abs(coeffs @ V_quad.T) @ qw
    h = rng.uniform(0.05, 2.0, trials)
    # affine map to an interval of length h: L2 scales by sqrt(h/2),
    # L1 by h/2, Linf unchanged
    l2 = l2_ref * np.sqrt(h / 2.0)
    l1 = l1_ref * h / 2.0
    r21 = np.sqrt(h) * l2 / l1
    rinf2 = np.sqrt(h) * linf_ref / l2
    r21_max = float(r21.max())
    rinf2_max = float(rinf2.max())
    return r21_max, rinf2_max
