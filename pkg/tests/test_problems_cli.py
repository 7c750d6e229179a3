import math
import os

import numpy as np
import pytest

from stdgwave import cli
from stdgwave.mesh2d import NEUMANN
from stdgwave.problems import (
    CSV_HEADER,
    ExperimentConfig,
    GateError,
    _attach_rates,
    make_problem,
    parse_config,
    parse_csv,
    probe_rows_to_csv,
    rows_to_csv,
    rows_to_markdown,
    run_convergence,
    run_signal_probe,
    snapshot,
    snapshot_rows_to_csv,
)


# ---------------- problem definitions ----------------


def test_unknown_problem_rejected():
    with pytest.raises(ValueError):
        make_problem("test9")


def test_test1_initial_data():
    s = make_problem("test1")
    x = np.array([0.25, 0.5])
    y = np.array([0.5, 0.5])
    np.testing.assert_allclose(
        s.problem.v0(x, y),
        math.sqrt(2) * np.pi * np.sin(np.pi * x) * np.sin(np.pi * y), rtol=1e-14)
    s1, s2 = s.problem.sigma0(x, y)
    assert np.all(s1 == 0) and np.all(s2 == 0)


def test_test2_exact_value_closed_form():
    # v at r = 0.5 is not inside the domain (|x| <= 0.5); evaluate the polar
    # formula at the cartesian point it corresponds to on the diagonal
    s = make_problem("test2")
    r, th, t = 0.5, np.pi / 2, 0.25
    x, y = r * np.cos(th), r * np.sin(th)
    expected = (math.sqrt(2) * np.pi * r ** (2 / 3) * math.sin(2 / 3 * th)
                * math.cos(math.sqrt(2) * np.pi * t))
    assert s.problem.exact_v(x, y, t) == pytest.approx(expected, rel=1e-12)
    # cross-check v = du/dt by finite differences on u = phi sin(sqrt2 pi t)
    eps = 1e-6
    phi = r ** (2 / 3) * math.sin(2 / 3 * th)
    u = lambda tt: phi * math.sin(math.sqrt(2) * np.pi * tt)
    assert s.problem.exact_v(x, y, t) == pytest.approx(
        (u(t + eps) - u(t - eps)) / (2 * eps), rel=1e-8)


def test_test2_neumann_setup():
    s = make_problem("test2")
    assert all(tag == NEUMANN for tag in s.base_mesh.boundary_edges.values())
    assert len(s.base_mesh.corners) == 1
    c = s.base_mesh.corners[0]
    assert (c.location.x1, c.location.x2) == (0.0, 0.0)
    assert c.delta == pytest.approx(1 / 3)
    assert c.radius == 0.245


def test_test2_source_and_wave_equation_consistency():
    # f = dv/dt + div sigma must hold; phi is harmonic so f = d2u/dt2 * phi-part
    s = make_problem("test2")
    x, y, t = -0.3, 0.2, 0.4
    eps = 1e-6
    dvdt = (s.problem.exact_v(x, y, t + eps) - s.problem.exact_v(x, y, t - eps)) / (2 * eps)
    div = ((s.problem.exact_sigma(x + eps, y, t)[0] - s.problem.exact_sigma(x - eps, y, t)[0])
           + (s.problem.exact_sigma(x, y + eps, t)[1] - s.problem.exact_sigma(x, y - eps, t)[1])
           ) / (2 * eps)
    assert s.problem.f(x, y, t) == pytest.approx(dvdt + div, rel=1e-6)


def test_test3_interface_and_speeds():
    s = make_problem("test3")
    speeds = s.base_mesh.subdomain_speeds
    assert speeds == [1.0, 3.0]
    for tri in s.base_mesh.triangles:
        xc, yc = s.base_mesh.coords()[list(tri.vertex_ids)].mean(axis=0)
        assert tri.subdomain_id == (0 if xc <= 1.2 else 1)
    assert s.probe == (1.0, 0.25)


def test_test4_quadrant_speeds_and_corner():
    s = make_problem("test4")
    assert s.final_time == 0.3
    assert s.base_mesh.subdomain_speeds == [3.0, 1.0, 3.0, 1.0]
    c = s.base_mesh.corners[0]
    assert (c.location.x1, c.location.x2) == (1.2, 1.0)
    assert c.delta == pytest.approx(0.4)
    assert c.radius == pytest.approx(0.392)


# ---------------- configuration ----------------


def test_parse_config_roundtrip_and_comments():
    text = """
    # convergence study
    problem = test2
    mesh_mode = corner_refined
    levels = 2, 3, 4
    p_x_v = 2
    flux_mode = face_scaled
    alpha = 0.5
    conforming = false
    output = out.csv
    """
    cfg = parse_config(text)
    assert cfg.problem == "test2"
    assert cfg.levels == (2, 3, 4)
    assert cfg.p_x_v == 2
    assert cfg.alpha == 0.5
    assert cfg.conforming is False
    assert cfg.output == "out.csv"


def test_parse_config_rejects_unknown_key():
    with pytest.raises(ValueError):
        parse_config("nonsense = 1\n")
    with pytest.raises(ValueError):
        parse_config("just a line without equals\n")


# ---------------- table plumbing ----------------


def _fake_rows():
    rows = [{"level": l, "h_x": 2.0**-l, "h_t": 2.0**-l, "dofs": 4**l,
             "err_v": 0.5 * 2.0 ** (-2 * l), "err_sigma": 0.25 * 2.0 ** (-2 * l),
             "err_dg": 2.0**-l} for l in (1, 2, 3)]
    _attach_rates(rows)
    return rows


def test_rate_extraction_is_exact_for_synthetic_sequences():
    rows = _fake_rows()
    for r in rows[1:]:
        assert r["rate_v"] == pytest.approx(2.0, abs=1e-12)
        assert r["rate_sigma"] == pytest.approx(2.0, abs=1e-12)
        assert r["rate_dg"] == pytest.approx(1.0, abs=1e-12)
    assert rows[0]["rate_v"] is None


def test_csv_roundtrip_exact():
    rows = _fake_rows()
    text = rows_to_csv(rows)
    assert text.splitlines()[0] == CSV_HEADER
    back = parse_csv(text)
    assert rows_to_csv(back) == text


def test_csv_deterministic():
    assert rows_to_csv(_fake_rows()) == rows_to_csv(_fake_rows())


def test_markdown_has_all_rows():
    md = rows_to_markdown(_fake_rows())
    assert md.count("\n") == 2 + 3


# ---------------- drivers ----------------


def test_run_convergence_smallest_case():
    cfg = ExperimentConfig(problem="test1", levels=(1, 2), h_t0=0.5)
    rows = run_convergence(cfg)
    assert len(rows) == 2
    assert rows[1]["err_v"] < rows[0]["err_v"]
    assert rows[1]["dofs"] == 8 * rows[0]["dofs"]


def test_run_convergence_requires_exact_solution():
    cfg = ExperimentConfig(problem="test3", levels=(1,))
    with pytest.raises(ValueError):
        run_convergence(cfg)


def test_probe_zero_data_is_identically_zero(monkeypatch):
    import stdgwave.problems as P

    cfg = ExperimentConfig(problem="test3", levels=(0,))
    s = cfg.setup()
    s.problem.v0 = lambda x, y: np.zeros(np.broadcast(x, y).shape)
    s.problem.sigma0 = lambda x, y: (np.zeros(np.broadcast(x, y).shape),) * 2
    monkeypatch.setattr(P.ExperimentConfig, "setup", lambda self: s)
    rows = run_signal_probe(cfg)
    assert all(r["v_c"] == 0.0 and r["u_c"] == 0.0 for r in rows)


def test_probe_sees_wave_arrivals():
    """Coarse heterogeneous run: the probe's integrated signal shows clear
    excursions above its pre-arrival baseline."""
    cfg = ExperimentConfig(problem="test3", levels=(1,), p_x_v=2, p_x_sigma=2,
                           h_t0=0.125)
    rows = run_signal_probe(cfg)
    ts = np.array([r["t"] for r in rows])
    uc = np.array([r["u_c"] for r in rows])
    baseline = np.abs(uc[(ts > 0) & (ts <= 0.25)]).max()
    excursions = np.abs(uc[ts >= 0.5]) > 5 * baseline
    assert excursions.sum() >= 2
    assert probe_rows_to_csv(rows).startswith("t,v_c,u_c\n")


def test_snapshot_gamma_domain_sample_count():
    cfg = ExperimentConfig(problem="test2", levels=(1,))
    rows = snapshot(cfg, 0.0, 100)
    # three quadrants of a 100x100 bounding-box grid lie inside the domain
    assert len(rows) == 7500
    text = snapshot_rows_to_csv(rows)
    assert text.splitlines()[0] == "x1,x2,v,sigma1,sigma2"


def test_snapshot_riemann_sum_matches_l2_norm():
    cfg = ExperimentConfig(problem="test1", levels=(2,))
    s = cfg.setup()
    rows = snapshot(cfg, 0.0, 200, level=2)
    v = np.array([r["v"] for r in rows])
    cell = (1.0 / 199) ** 2
    riemann = math.sqrt((v**2).sum() * cell)
    exact = math.sqrt(2) * np.pi / 2  # ||v0||_L2 on the unit square
    assert riemann == pytest.approx(exact, rel=0.05)


# ---------------- CLI ----------------


def test_cli_run_end_to_end(tmp_path, monkeypatch, capsys):
    cfgfile = tmp_path / "cfg.txt"
    cfgfile.write_text("problem = test1\nlevels = 1, 2\noutput = conv.csv\n")
    monkeypatch.setenv("STDGWAVE_OUTDIR", str(tmp_path / "out"))
    assert cli.main(["run", "--config", str(cfgfile)]) == 0
    produced = parse_csv((tmp_path / "out" / "conv.csv").read_text())
    assert [r["level"] for r in produced] == [1, 2]
    assert (tmp_path / "out" / "conv.md").exists()


def test_cli_sparse_mode(tmp_path, monkeypatch):
    cfgfile = tmp_path / "cfg.txt"
    cfgfile.write_text("problem = test1\nlevels = 1, 2\nL0 = 0, 1\noutput = sp.csv\n")
    monkeypatch.setenv("STDGWAVE_OUTDIR", str(tmp_path))
    assert cli.main(["run", "--config", str(cfgfile), "--mode", "sparse"]) == 0
    rows = parse_csv((tmp_path / "sp.csv").read_text())
    assert rows[1]["err_v"] < rows[0]["err_v"]
    assert rows[0]["err_dg"] is None


def test_cli_snapshot_and_probe(tmp_path, monkeypatch):
    cfgfile = tmp_path / "cfg.txt"
    cfgfile.write_text(
        "problem = test3\nlevels = 0\np_x_v = 1\np_x_sigma = 1\n"
        "h_t0 = 0.25\ngauss_width = 0.05\noutput = t3.csv\n")
    monkeypatch.setenv("STDGWAVE_OUTDIR", str(tmp_path))
    assert cli.main(["snapshot", "--config", str(cfgfile), "--t", "0.25",
                     "--grid", "20"]) == 0
    assert (tmp_path / "t3_t0.25.csv").exists()
    assert cli.main(["probe", "--config", str(cfgfile)]) == 0
    assert (tmp_path / "t3_probe.csv").exists()


def test_cli_bad_config_exits_nonzero(tmp_path, capsys):
    cfgfile = tmp_path / "bad.txt"
    cfgfile.write_text("problem = test9\n")
    assert cli.main(["run", "--config", str(cfgfile)]) == 1
    assert "error" in capsys.readouterr().err


def test_cli_missing_file_exits_nonzero(tmp_path):
    assert cli.main(["run", "--config", str(tmp_path / "nope.txt")]) == 1
