import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stdgwave.dg_assembly import DegreeSpec, FluxParams, ProblemData
from stdgwave.mesh2d import uniform_refine, unit_square_mesh
from stdgwave.analysis import dg_seminorm, energy_of_callbacks, error_at
from stdgwave.sparse_combo import (
    IndexSet,
    LevelIndex,
    build_index_set,
    combined_error_at_T,
    dof_count,
    locate_points,
    solve_details,
    uniform_hierarchy,
    unit_dof_weight,
)


def _poly_problem():
    return ProblemData(
        [1.0], v0=lambda x, y: x, sigma0=lambda x, y: (0 * x, 0 * x),
        g_D=lambda x, y, t: x + 0 * t,
        exact_v=lambda x, y, t: x + 0 * t,
        exact_sigma=lambda x, y, t: (-t + 0 * x, 0 * x + 0 * t),
    )


def test_index_set_seven_members():
    ix = build_index_set((4, 5), (1, 2))
    plus = {(l.l_x, l.l_t) for l, c in ix.members if c == 1}
    minus = {(l.l_x, l.l_t) for l, c in ix.members if c == -1}
    assert plus == {(4, 2), (3, 3), (2, 4), (1, 5)}
    assert minus == {(3, 2), (2, 3), (1, 4)}


def test_index_set_degenerate_is_single_solve():
    ix = build_index_set((2, 3), (2, 3))
    assert [(l.l_x, l.l_t, c) for l, c in ix.members] == [(2, 3, 1)]


def test_index_set_smallest_nontrivial():
    ix = build_index_set((1, 1), (0, 0))
    assert {(l.l_x, l.l_t): c for l, c in ix.members} == {
        (1, 0): 1, (0, 1): 1, (0, 0): -1}


def test_index_set_rejects_mismatched_offsets():
    with pytest.raises(ValueError):
        build_index_set((3, 5), (1, 2))
    with pytest.raises(ValueError):
        LevelIndex(-1, 0)


@given(st.integers(0, 3), st.integers(0, 3), st.integers(0, 5))
@settings(max_examples=60, deadline=None)
def test_coefficients_telescope(l0x, l0t, span):
    ix = build_index_set((l0x + span, l0t + span), (l0x, l0t))
    assert sum(c for _, c in ix.members) == 1
    # diagonal structure: coefficient determined by |l|
    upper = l0x + span + l0t
    for l, c in ix.members:
        assert c == (1 if l.total == upper else -1)


def test_dof_count_reference_values():
    assert unit_dof_weight(1, 1) == 36
    assert dof_count("sparse", (1, 1), (0, 0), 1, 1) == 252
    assert dof_count("full", (2, 2), (0, 0), 1, 1) == 2304


@pytest.mark.parametrize("L", range(1, 7))
def test_sparse_count_below_five_halves_full(L):
    C = unit_dof_weight(1, 1)
    Ms = dof_count("sparse", (L, L), (0, 0), 1, 1)
    assert Ms < 2.5 * C * 4**L
    closed = (5 - 3 * 2.0**-L) / 2 * 4**L * C
    assert Ms == pytest.approx(closed, rel=1e-12)


def test_dof_count_matches_actual_solves():
    prob = _poly_problem()
    mfl, pfl = uniform_hierarchy(unit_square_mesh(), 1.0, 1)
    ix = build_index_set((2, 3), (0, 1))
    details = solve_details(prob, FluxParams.constant(), DegreeSpec(1, 1, 1, 1),
                            ix, mfl, pfl)
    assert sum(f.n_dofs for f in details.values()) == dof_count(
        "sparse", (2, 3), (0, 1), 1, 1, base_elems=2, base_slabs=1)


def test_details_satisfy_stability_bound():
    from stdgwave.problems import make_problem

    s = make_problem("test1")
    mfl, pfl = uniform_hierarchy(s.base_mesh, 1.0, 1)
    ix = build_index_set((2, 3), (0, 1))
    details = solve_details(s.problem, FluxParams.constant(), DegreeSpec(1, 1, 1, 1),
                            ix, mfl, pfl)
    assert len(details) == 5
    for fld in details.values():
        data2 = 4.0 * energy_of_callbacks(
            fld.op, lambda x, y, t: s.problem.v0(x, y),
            lambda x, y, t: s.problem.sigma0(x, y), 0.0)
        assert dg_seminorm(fld) <= np.sqrt(data2) + 1e-9


def test_all_zero_data_gives_zero_details():
    prob = ProblemData([1.0], v0=lambda x, y: 0 * x,
                       sigma0=lambda x, y: (0 * x, 0 * x))
    mfl, pfl = uniform_hierarchy(unit_square_mesh(), 1.0, 1)
    ix = build_index_set((1, 2), (0, 1))
    details = solve_details(prob, FluxParams.constant(), DegreeSpec(1, 1, 1, 1),
                            ix, mfl, pfl)
    for fld in details.values():
        assert max(np.abs(U).max() for U in fld.slabs) == 0.0


def test_polynomial_reproduced_by_combination():
    prob = _poly_problem()
    mfl, pfl = uniform_hierarchy(unit_square_mesh(), 1.0, 1)
    ix = build_index_set((2, 3), (0, 1))
    details = solve_details(prob, FluxParams.constant(), DegreeSpec(1, 1, 1, 1),
                            ix, mfl, pfl)
    rep = combined_error_at_T(details, ix, prob, mfl(2))
    assert rep.l2_v < 1e-9 and rep.l2_sigma < 1e-9


def test_single_index_combination_matches_direct_error():
    prob = _poly_problem()
    mfl, pfl = uniform_hierarchy(unit_square_mesh(), 1.0, 1)
    ix = build_index_set((1, 2), (1, 2))
    details = solve_details(prob, FluxParams.constant(), DegreeSpec(1, 1, 1, 1),
                            ix, mfl, pfl)
    rep = combined_error_at_T(details, ix, prob, mfl(1))
    fld = next(iter(details.values()))
    direct = error_at(1.0, fld, prob, with_dg=False)
    assert rep.l2_v == pytest.approx(direct.l2_v, abs=1e-12)
    assert rep.l2_sigma == pytest.approx(direct.l2_sigma, abs=1e-12)


def test_locate_points_inside_and_outside():
    m = uniform_refine(unit_square_mesh(), 1)
    pts = np.array([[0.1, 0.1], [0.9, 0.9], [0.5, 0.25]])
    ids = locate_points(m, pts)
    assert (ids >= 0).all()
    with pytest.raises(ValueError):
        locate_points(m, np.array([[1.5, 0.5]]))
    out = locate_points(m, np.array([[1.5, 0.5], [0.5, 0.5]]), missing_ok=True)
    assert out[0] == -1 and out[1] >= 0


def test_locate_points_shared_edge_takes_lowest_id():
    m = unit_square_mesh()
    # the diagonal (0,0)-(1,1) is shared by elements 0 and 1
    ids = locate_points(m, np.array([[0.5, 0.5]]))
    assert ids[0] == 0


def test_combined_error_rejects_mismatched_final_times():
    prob = _poly_problem()
    mfl, pfl = uniform_hierarchy(unit_square_mesh(), 1.0, 1)
    ix = build_index_set((1, 2), (0, 1))
    details = solve_details(prob, FluxParams.constant(), DegreeSpec(1, 1, 1, 1),
                            ix, mfl, pfl)
    mfl2, pfl2 = uniform_hierarchy(unit_square_mesh(), 0.5, 1)
    ix1 = build_index_set((1, 2), (1, 2))
    other = solve_details(prob, FluxParams.constant(), DegreeSpec(1, 1, 1, 1),
                          ix1, mfl2, pfl2)
    details[next(iter(other))] = next(iter(other.values()))
    with pytest.raises(ValueError):
        combined_error_at_T(details, ix, prob, mfl(1))
