"""Benchmark problems and experiment drivers.

Four setups: a smooth standing wave on the unit square (exact solution
known), a corner-singular solution on the L-shaped domain with Neumann data
(exact solution known), and two heterogeneous-medium Gaussian pulses (no
exact solution; probed and snapshotted instead).
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import basis_quad as bq
from .analysis import ErrorReport, error_at
from .dg_assembly import DegreeSpec, FluxParams, ProblemData, SlabOperator, march
from .mesh2d import (
    CornerSpec,
    Point2,
    SpatialMesh,
    box_mesh,
    corner_refine,
    l_shaped_mesh,
    unit_square_mesh,
    uniform_refine,
)
from .spacetime import build_spacetime, uniform_partition
from .sparse_combo import (
    build_index_set,
    combined_error_at_T,
    locate_points,
    solve_details,
    uniform_hierarchy,
)

RT2PI = math.sqrt(2.0) * math.pi
GAMMA = 2.0 / 3.0


class GateError(RuntimeError):
    """A numerical invariant gate failed during a run."""


@dataclass
class ProblemSetup:
    name: str
    base_mesh: SpatialMesh
    final_time: float
    problem: ProblemData
    probe: tuple[float, float] | None = None


def _test1() -> ProblemSetup:
    def u_t(x, y, t):
        return RT2PI * np.sin(np.pi * x) * np.sin(np.pi * y) * np.cos(RT2PI * t)

    def sig(x, y, t):
        s = np.sin(RT2PI * t)
        return (-np.pi * np.cos(np.pi * x) * np.sin(np.pi * y) * s,
                -np.pi * np.sin(np.pi * x) * np.cos(np.pi * y) * s)

    prob = ProblemData(
        [1.0],
        v0=lambda x, y: RT2PI * np.sin(np.pi * x) * np.sin(np.pi * y),
        sigma0=lambda x, y: (np.zeros_like(x), np.zeros_like(x)),
        g_D=lambda x, y, t: np.zeros(np.broadcast(x, y, t).shape),
        exact_v=u_t,
        exact_sigma=sig,
    )
    return ProblemSetup("test1", unit_square_mesh(), 1.0, prob)


def _polar(x, y):
    r = np.hypot(x, y)
    th = np.arctan2(y, x)
    th = np.where(th < 0, th + 2.0 * np.pi, th)
    return r, th


def _gamma_phi(x, y):
    r, th = _polar(x, y)
    return r**GAMMA * np.sin(GAMMA * th)


def _gamma_grad_phi(x, y):
    r, th = _polar(x, y)
    rs = np.where(r > 0, r, 1.0) ** (GAMMA - 1.0)
    rs = np.where(r > 0, rs, 0.0)
    return (GAMMA * rs * np.sin((GAMMA - 1.0) * th),
            GAMMA * rs * np.cos((GAMMA - 1.0) * th))


def _gamma_boundary_normal(x, y):
    """Outward normal of the L-shaped domain at a boundary point (undefined
    at corners, which quadrature never samples)."""
    tol = 1e-9
    n1 = np.zeros(np.broadcast(x, y).shape)
    n2 = np.zeros_like(n1)
    n1 = np.where(np.abs(x - 0.5) < tol, 1.0, n1)
    n1 = np.where(np.abs(x + 0.5) < tol, -1.0, n1)
    n2 = np.where(np.abs(y - 0.5) < tol, 1.0, n2)
    n2 = np.where(np.abs(y + 0.5) < tol, -1.0, n2)
    n1 = np.where((np.abs(x) < tol) & (y < -tol), 1.0, n1)
    n2 = np.where((np.abs(y) < tol) & (x > tol), -1.0, n2)
    return n1, n2


def _test2(grading_delta: float = 1.0 / 3.0, corner_radius: float = 0.245) -> ProblemSetup:
    def ex_v(x, y, t):
        return RT2PI * _gamma_phi(x, y) * np.cos(RT2PI * t)

    def ex_sigma(x, y, t):
        g1, g2 = _gamma_grad_phi(x, y)
        s = np.sin(RT2PI * t)
        return (-g1 * s, -g2 * s)

    def g_N(x, y, t):
        s1, s2 = ex_sigma(x, y, t)
        n1, n2 = _gamma_boundary_normal(x, y)
        return s1 * n1 + s2 * n2

    prob = ProblemData(
        [1.0],
        v0=lambda x, y: RT2PI * _gamma_phi(x, y),
        sigma0=lambda x, y: (np.zeros_like(x), np.zeros_like(x)),
        f=lambda x, y, t: -2.0 * np.pi**2 * _gamma_phi(x, y) * np.sin(RT2PI * t),
        g_N=g_N,
        exact_v=ex_v,
        exact_sigma=ex_sigma,
    )
    mesh = l_shaped_mesh(delta=grading_delta, radius=corner_radius)
    return ProblemSetup("test2", mesh, 1.0, prob)


def _gaussian_problem(speeds, subdomain_of, x0, width, final_time,
                      corners=None) -> tuple[SpatialMesh, ProblemData]:
    xs = [0.2 * i for i in range(11)]  # grid lines hit the interfaces

    def u0(x, y):
        return np.exp(-((x - x0[0]) ** 2 + (y - x0[1]) ** 2) / width**2)

    prob = ProblemData(
        speeds,
        v0=lambda x, y: np.zeros(np.broadcast(x, y).shape),
        sigma0=lambda x, y: (2.0 * (x - x0[0]) / width**2 * u0(x, y),
                             2.0 * (y - x0[1]) / width**2 * u0(x, y)),
        g_D=lambda x, y, t: np.zeros(np.broadcast(x, y, t).shape),
    )
    mesh = box_mesh(xs, xs, subdomain_of=subdomain_of, speeds=speeds, corners=corners)
    return mesh, prob


def _test3(gauss_width: float = 0.01) -> ProblemSetup:
    mesh, prob = _gaussian_problem(
        [1.0, 3.0], lambda xc, yc: 0 if xc <= 1.2 else 1,
        (1.0, 1.0), gauss_width, 1.0,
    )
    return ProblemSetup("test3", mesh, 1.0, prob, probe=(1.0, 0.25))


def _test4(gauss_width: float = 0.01, grading_delta: float = 0.4,
           corner_radius: float = 0.392) -> ProblemSetup:
    def sub(xc, yc):
        if yc > 1.0:
            return 0 if xc > 1.2 else 1
        return 2 if xc <= 1.2 else 3

    corners = [CornerSpec(Point2(1.2, 1.0), grading_delta, corner_radius)]
    mesh, prob = _gaussian_problem([3.0, 1.0, 3.0, 1.0], sub, (1.0, 1.125),
                                   gauss_width, 0.3, corners=corners)
    return ProblemSetup("test4", mesh, 0.3, prob)


def make_problem(name: str, **overrides) -> ProblemSetup:
    builders = {"test1": _test1, "test2": _test2, "test3": _test3, "test4": _test4}
    if name not in builders:
        raise ValueError(f"unknown problem {name!r}; choose from {sorted(builders)}")
    return builders[name](**overrides)


# ----------------------------------------------------------------------
# configuration
# ----------------------------------------------------------------------


@dataclass
class ExperimentConfig:
    problem: str = "test1"
    mesh_mode: str = "uniform"  # uniform / corner_refined
    levels: tuple[int, ...] = (1, 2, 3)
    p_x_v: int = 1
    p_t_v: int = 1
    p_x_sigma: int = 1
    p_t_sigma: int = 1
    flux_mode: str = "constant"  # constant / face_scaled / refined_scaled
    alpha: float = 1.0
    beta: float = 1.0
    h_t0: float = 0.5  # level-0 time-step width
    conforming: bool = True
    output: str = "convergence.csv"
    L0: tuple[int, int] = (0, 1)
    probe_x: float | None = None
    probe_y: float | None = None
    gauss_width: float | None = None
    grading_delta: float | None = None
    corner_radius: float | None = None

    def degrees(self) -> DegreeSpec:
        return DegreeSpec(self.p_x_v, self.p_t_v, self.p_x_sigma, self.p_t_sigma)

    def flux(self, h_x: float = 1.0) -> FluxParams:
        if self.flux_mode == "constant":
            return FluxParams.constant(self.alpha, self.beta)
        if self.flux_mode == "face_scaled":
            return FluxParams.face_scaled(self.alpha, self.beta)
        return FluxParams.refined_scaled(h_x)

    def setup(self) -> ProblemSetup:
        kw = {}
        if self.gauss_width is not None and self.problem in ("test3", "test4"):
            kw["gauss_width"] = self.gauss_width
        if self.grading_delta is not None and self.problem in ("test2", "test4"):
            kw["grading_delta"] = self.grading_delta
        if self.corner_radius is not None and self.problem in ("test2", "test4"):
            kw["corner_radius"] = self.corner_radius
        s = make_problem(self.problem, **kw)
        if self.probe_x is not None and self.probe_y is not None:
            s.probe = (self.probe_x, self.probe_y)
        return s


_BOOL = {"true": True, "false": False, "1": True, "0": False, "yes": True, "no": False}


def parse_config(text: str) -> ExperimentConfig:
    """Flat ``key = value`` lines, ``#`` comments."""
    cfg = ExperimentConfig()
    known = set(cfg.__dataclass_fields__)
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in known:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        if key in ("levels", "L0"):
            setattr(cfg, key, tuple(int(v) for v in value.replace(",", " ").split()))
        elif key == "conforming":
            setattr(cfg, key, _BOOL[value.lower()])
        elif key in ("problem", "mesh_mode", "flux_mode", "output"):
            setattr(cfg, key, value)
        elif key in ("p_x_v", "p_t_v", "p_x_sigma", "p_t_sigma"):
            setattr(cfg, key, int(value))
        else:
            setattr(cfg, key, float(value))
    return cfg


def load_config(path: str) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


# ----------------------------------------------------------------------
# convergence studies
# ----------------------------------------------------------------------

CSV_HEADER = "level,h_x,h_t,dofs,err_v,rate_v,err_sigma,rate_sigma,err_dg,rate_dg"


def _fmt(x: float | None) -> str:
    return "" if x is None else f"{x:.12g}"


def rows_to_csv(rows: list[dict]) -> str:
    out = [CSV_HEADER]
    for r in rows:
        out.append(",".join([
            str(r["level"]), _fmt(r["h_x"]), _fmt(r["h_t"]), str(r["dofs"]),
            _fmt(r["err_v"]), _fmt(r["rate_v"]), _fmt(r["err_sigma"]),
            _fmt(r["rate_sigma"]), _fmt(r["err_dg"]), _fmt(r["rate_dg"]),
        ]))
    return "\n".join(out) + "\n"


def rows_to_markdown(rows: list[dict]) -> str:
    cols = CSV_HEADER.split(",")
    out = ["| " + " | ".join(cols) + " |", "|" + "---|" * len(cols)]
    for r in rows:
        cells = [str(r["level"]), _fmt(r["h_x"]), _fmt(r["h_t"]), str(r["dofs"]),
                 _fmt(r["err_v"]), _fmt(r["rate_v"]), _fmt(r["err_sigma"]),
                 _fmt(r["rate_sigma"]), _fmt(r["err_dg"]), _fmt(r["rate_dg"])]
        out.append("| " + " | ".join(c if c else "-" for c in cells) + " |")
    return "\n".join(out) + "\n"


def parse_csv(text: str) -> list[dict]:
    lines = [l for l in text.strip().splitlines() if l]
    if lines[0] != CSV_HEADER:
        raise ValueError("unexpected CSV header")
    rows = []
    for line in lines[1:]:
        parts = line.split(",")
        rows.append({
            "level": int(parts[0]), "h_x": float(parts[1]), "h_t": float(parts[2]),
            "dofs": int(parts[3]), "err_v": float(parts[4]),
            "rate_v": float(parts[5]) if parts[5] else None,
            "err_sigma": float(parts[6]),
            "rate_sigma": float(parts[7]) if parts[7] else None,
            "err_dg": float(parts[8]) if parts[8] else None,
            "rate_dg": float(parts[9]) if parts[9] else None,
        })
    return rows


def _attach_rates(rows: list[dict]) -> None:
    for i, r in enumerate(rows):
        for err, rate in (("err_v", "rate_v"), ("err_sigma", "rate_sigma"),
                          ("err_dg", "rate_dg")):
            r.setdefault(rate, None)
            if i == 0 or r.get(err) is None or rows[i - 1].get(err) is None:
                continue
            prev, cur = rows[i - 1][err], r[err]
            if prev > 0 and cur > 0:
                r[rate] = math.log2(prev / cur)


def mesh_for_level(setup: ProblemSetup, cfg: ExperimentConfig, level: int) -> SpatialMesh:
    if cfg.mesh_mode == "uniform":
        return uniform_refine(setup.base_mesh, level)
    if cfg.mesh_mode == "corner_refined":
        return corner_refine(setup.base_mesh, 2.0**-level, cfg.p_x_sigma,
                             conforming=cfg.conforming)
    raise ValueError(f"unknown mesh mode {cfg.mesh_mode!r}")


def _check_error_gate(report: ErrorReport) -> None:
    # lower bound of the DG error seminorm by the final-slice norms
    if report.dg is None:
        return
    lhs = 0.5 * report.l2_v + 0.5 * report.l2_sigma
    if lhs > report.dg + 1e-9:
        raise GateError(
            f"slice error {lhs:.3e} exceeds the DG error seminorm {report.dg:.3e}")


def run_convergence(cfg: ExperimentConfig) -> list[dict]:
    setup = cfg.setup()
    if setup.problem.exact_v is None:
        raise ValueError(f"{cfg.problem} has no exact solution to converge against")
    rows: list[dict] = []
    for level in cfg.levels:
        mesh = mesh_for_level(setup, cfg, level)
        h_x = float(mesh.element_diameters().max())
        h_t = cfg.h_t0 * 2.0**-level
        n_slabs = max(1, round(setup.final_time / h_t))
        st = build_spacetime(mesh, uniform_partition(setup.final_time, n_slabs))
        try:
            fld = march(st, setup.problem, cfg.flux(h_x), cfg.degrees())
        except Exception as exc:
            raise RuntimeError(f"level {level}: {exc}") from exc
        rep = error_at(setup.final_time, fld, setup.problem)
        _check_error_gate(rep)
        rows.append({
            "level": level, "h_x": h_x, "h_t": setup.final_time / n_slabs,
            "dofs": rep.dofs, "err_v": rep.rel_v, "err_sigma": rep.rel_sigma,
            "err_dg": rep.rel_dg,
        })
    _attach_rates(rows)
    return rows


def run_sparse(cfg: ExperimentConfig) -> list[dict]:
    """Combination-formula study: one row per target level L, with
    L = (L, L + offset) and the configured base level L0."""
    setup = cfg.setup()
    if setup.problem.exact_v is None:
        raise ValueError(f"{cfg.problem} has no exact solution to converge against")
    if cfg.mesh_mode != "uniform":
        raise ValueError("sparse mode uses uniform hierarchies")
    offset = cfg.L0[1] - cfg.L0[0]
    base_slabs = max(1, round(setup.final_time / cfg.h_t0))
    mfl, pfl = uniform_hierarchy(setup.base_mesh, setup.final_time, base_slabs)
    rows: list[dict] = []
    for L in cfg.levels:
        ix = build_index_set((L, L + offset), cfg.L0)
        details = solve_details(setup.problem, cfg.flux(), cfg.degrees(), ix, mfl, pfl)
        rep = combined_error_at_T(details, ix, setup.problem, mfl(L))
        rows.append({
            "level": L, "h_x": float(mfl(L).element_diameters().max()),
            "h_t": setup.final_time / (base_slabs * 2 ** (L + offset)),
            "dofs": rep.dofs, "err_v": rep.rel_v, "err_sigma": rep.rel_sigma,
            "err_dg": None,
        })
    _attach_rates(rows)
    return rows


# ----------------------------------------------------------------------
# probe and snapshot
# ----------------------------------------------------------------------


def run_signal_probe(cfg: ExperimentConfig, level: int | None = None) -> list[dict]:
    """Time series of the mean-cell signal: v integrated over the element
    containing the probe point, sampled at slab boundaries, plus its
    trapezoidal antiderivative."""
    setup = cfg.setup()
    if setup.probe is None:
        raise ValueError("no probe point configured")
    level = cfg.levels[0] if level is None else level
    mesh = mesh_for_level(setup, cfg, level)
    probe = np.array([setup.probe])
    elem = int(locate_points(mesh, probe)[0])
    h_t = cfg.h_t0 * 2.0**-level
    n_slabs = max(1, round(setup.final_time / h_t))
    st = build_spacetime(mesh, uniform_partition(setup.final_time, n_slabs))
    fld = march(st, setup.problem, cfg.flux(), cfg.degrees())
    op = fld.op

    rule = bq.triangle_rule(2 * cfg.p_x_v + 2)
    xy = mesh.coords()
    phys = bq.map_rule_to_triangle(rule, xy[list(mesh.triangles[elem].vertex_ids)])
    Tv = op.basis_v[elem].eval(phys.points)
    ov = op.v_offset(elem)

    rows = []
    for n, t in enumerate(st.temporal.breakpoints):
        tr = fld.trace_above(0) if n == 0 else fld.trace_below(n)
        v_c = float(phys.weights @ (Tv @ tr[ov : ov + op.Nxv]))
        rows.append({"t": float(t), "v_c": v_c})
    u_c = 0.0
    rows[0]["u_c"] = 0.0
    for i in range(1, len(rows)):
        dt = rows[i]["t"] - rows[i - 1]["t"]
        u_c += 0.5 * dt * (rows[i]["v_c"] + rows[i - 1]["v_c"])
        rows[i]["u_c"] = u_c
    return rows


def probe_rows_to_csv(rows: list[dict]) -> str:
    out = ["t,v_c,u_c"]
    for r in rows:
        out.append(f"{_fmt(r['t'])},{_fmt(r['v_c'])},{_fmt(r['u_c'])}")
    return "\n".join(out) + "\n"


def snapshot(cfg: ExperimentConfig, t: float, grid: int, level: int | None = None,
             field=None) -> list[dict]:
    """Point samples (x1, x2, v, sigma1, sigma2) of the solution at a slab
    boundary on a uniform grid over the mesh bounding box; points outside
    the domain are omitted."""
    setup = cfg.setup()
    level = cfg.levels[0] if level is None else level
    if field is None:
        mesh = mesh_for_level(setup, cfg, level)
        h_t = cfg.h_t0 * 2.0**-level
        n_slabs = max(1, round(setup.final_time / h_t))
        st = build_spacetime(mesh, uniform_partition(setup.final_time, n_slabs))
        field = march(st, setup.problem, cfg.flux(), cfg.degrees())
    mesh = field.op.mesh.spatial
    xy = mesh.coords()
    lo, hi = xy.min(axis=0), xy.max(axis=0)
    g1 = np.linspace(lo[0], hi[0], grid)
    g2 = np.linspace(lo[1], hi[1], grid)
    X, Y = np.meshgrid(g1, g2, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    ids = locate_points(mesh, pts, missing_ok=True)
    keep = ids >= 0
    pts, ids = pts[keep], ids[keep]
    tr = field.trace_at(t)
    v, s1, s2 = field.eval_spatial(tr, pts, ids)
    return [{"x1": float(p[0]), "x2": float(p[1]), "v": float(a), "sigma1": float(b),
             "sigma2": float(c)} for p, a, b, c in zip(pts, v, s1, s2)]


def snapshot_rows_to_csv(rows: list[dict]) -> str:
    out = ["x1,x2,v,sigma1,sigma2"]
    for r in rows:
        out.append(",".join(_fmt(r[k]) for k in ("x1", "x2", "v", "sigma1", "sigma2")))
    return "\n".join(out) + "\n"
