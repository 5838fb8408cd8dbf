import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qgnls import graph, solver
from qgnls.functions import (GraphFunction, Mesh, concavity_report, empirical_gn_constant, gn_check,
                             gn_ratio, l2_mass, norms, project_mass, trial_functions)


def const(mesh, c):
    return GraphFunction(mesh, np.full(mesh.n_nodes, float(c)))


def test_mesh_shares_vertex_nodes():
    m = Mesh(graph.star_halflines(3), 0.5, truncation=2.0)
    firsts = {int(em.nodes[0]) for em in m.edges}
    assert firsts == {m.vertex_index["o"]}
    assert m.n_nodes == 1 + 3 * 4
    assert all(len(em.nodes) >= 2 and em.h <= 0.5 for em in m.edges)


def test_mesh_refuses_coarse_h():
    with pytest.raises(ValueError):
        Mesh(graph.bethe_tree(3, 2, 0.5), 1.0)


def test_zero_norms():
    m = Mesh(graph.segment(2.0), 0.1)
    assert norms(const(m, 0.0), 3) == (0.0, 0.0, 0.0)


def test_constant_norms():
    m = Mesh(graph.segment(2.0), 0.1)
    lq, linf, d = norms(const(m, 1.0))
    assert lq == pytest.approx(math.sqrt(2), rel=1e-14)
    assert linf == 1.0 and d == 0.0


def test_norm_rejects_small_q():
    with pytest.raises(ValueError):
        norms(const(Mesh(graph.segment(), 0.1), 1.0), 0.5)


def test_sine_l2():
    m = Mesh(graph.segment(1.0), 1e-3)
    u = m.sample(lambda k, s: np.sin(np.pi * s))
    assert norms(u)[0] == pytest.approx(math.sqrt(0.5), rel=1e-5)


@settings(max_examples=30, deadline=None)
@given(st.floats(-5, 5).filter(lambda c: abs(c) > 1e-3), st.floats(1, 8), st.sampled_from(
    [graph.segment(3.0), graph.tadpole(2.0), graph.bethe_tree(3, 2), graph.periodic_ladder(2)]))
def test_constant_quadrature_exact(c, q, g):
    m = Mesh(g, 0.25, truncation=5.0)
    lq = norms(const(m, c), q)[0]
    assert lq == pytest.approx(abs(c) * m.total_length ** (1 / q), rel=1e-12)


def test_project_mass_constant():
    m = Mesh(graph.segment(1.0), 0.1)
    v = project_mass(const(m, 1.0), 4.0)
    assert np.allclose(v.values, 2.0)


def test_project_mass_sine():
    m = Mesh(graph.segment(1.0), 1e-3)
    u = m.sample(lambda k, s: np.sin(np.pi * s))
    v = project_mass(u, 1.0)
    assert v.values.max() == pytest.approx(math.sqrt(2), rel=1e-5)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=21, max_size=21).filter(lambda x: max(map(abs, x)) > 1e-2),
       st.floats(0.1, 10))
def test_project_mass_idempotent_and_sign(vals, mu):
    m = Mesh(graph.segment(2.0), 0.1)
    u = GraphFunction(m, vals)
    once = project_mass(u, mu)
    twice = project_mass(once, mu)
    assert l2_mass(once) == pytest.approx(mu, rel=1e-12)
    assert np.allclose(once.values, twice.values, rtol=1e-13, atol=0)
    assert np.array_equal(np.sign(once.values), np.sign(u.values))


def test_project_zero_rejected():
    with pytest.raises(ValueError):
        project_mass(const(Mesh(graph.segment(), 0.1), 0.0), 1.0)


def test_tent_gn_numbers():
    m = Mesh(graph.segment(10.0), 0.01)
    u = m.sample(lambda k, s: np.maximum(0.0, 1 - np.abs(s - 5)))
    rep = gn_check(u, 8.0)
    assert l2_mass(u) == pytest.approx(2 / 3, rel=1e-4)
    assert norms(u)[2] ** 2 == pytest.approx(2.0, rel=1e-12)
    assert rep.linf_lhs == pytest.approx(1.0)
    assert rep.linf_rhs == pytest.approx(math.sqrt(2) * (2 / 3) ** 0.25 * 2**0.25, rel=1e-4)
    assert rep.linf_slack > 0


def test_gn_degenerate_constant():
    rep = gn_check(const(Mesh(graph.segment(), 0.1), 1.0), 8.0)
    assert rep.degenerate
    assert gn_ratio(const(Mesh(graph.segment(), 0.1), 1.0), 8.0) == math.inf


CATALOG = [graph.segment(8.0), graph.star_halflines(3), graph.tadpole(2.0), graph.periodic_chain(4),
           graph.periodic_ladder(3), graph.bethe_tree(3, 3), graph.doubling_tree(3)]


@pytest.mark.parametrize("g", CATALOG, ids=lambda g: g.name)
def test_gn_holds_for_random_trials(g):
    # K = 2^((p-2)/2) follows from the L-infinity inequality and |u|^p <= |u|_inf^(p-2) u^2
    p = 8.0
    m = Mesh(g, 0.1, truncation=10.0)
    worst_inf = worst_p = math.inf
    for u in trial_functions(m, p, 1000, seed=1):
        rep = gn_check(u, p, K=2 ** ((p - 2) / 2))
        worst_inf = min(worst_inf, rep.linf_slack / rep.linf_rhs)
        worst_p = min(worst_p, rep.lp_slack / rep.lp_rhs)
    assert worst_inf >= -1e-12 and worst_p >= -1e-12


def test_empirical_constant_dominates_members_and_is_deterministic():
    g = graph.segment(10.0)
    m = Mesh(g, 0.05)
    trial = project_mass(m.sample(lambda k, s: np.exp(-(s - 5) ** 2)), 1.0)
    k = empirical_gn_constant(g, 8.0, samples=50, seed=3, extra_trials=[trial])
    assert k >= gn_ratio(trial, 8.0)
    assert k == empirical_gn_constant(g, 8.0, samples=50, seed=3, extra_trials=[trial])


def test_empirical_constant_on_line_beats_soliton():
    g = graph.star_halflines(2)
    mesh = Mesh(g, 0.05, truncation=40.0)
    sol = solver.soliton_profile(1.0, 1.0, 8.0, "o", mesh)
    k = empirical_gn_constant(g, 8.0, samples=50, truncation=40.0)
    assert k >= gn_ratio(sol, 8.0) * (1 - 1e-12)


def test_h1_seminorm_first_order_or_better():
    vals = []
    for h in (0.02, 0.01, 0.005):
        m = Mesh(graph.segment(1.0), h)
        vals.append(norms(m.sample(lambda k, s: np.sin(3 * s)))[2])
    exact = math.sqrt(9 * (0.5 + math.sin(6) / 12))
    errs = [abs(v - exact) for v in vals]
    assert errs[1] <= 0.6 * errs[0] and errs[2] <= 0.6 * errs[1]


def test_concavity():
    m = Mesh(graph.segment(2.0), 0.1)
    assert concavity_report(m.sample(lambda k, s: -s**2)) == [True]
    assert concavity_report(m.sample(lambda k, s: s**2)) == [False]


def test_concavity_of_state_where_nonlinearity_dominates(segment_state):
    st = segment_state
    x = st.u.values
    # edges or parts where u^(p-2) >= lam/rho are concave; check pointwise sign
    strong = x ** (st.p - 2) >= st.lam / st.rho
    d2 = np.zeros_like(x)
    em = st.mesh.edges[0]
    y = x[em.nodes]
    d2[em.nodes[1:-1]] = y[2:] - 2 * y[1:-1] + y[:-2]
    interior = np.zeros_like(strong)
    interior[em.nodes[1:-1]] = True
    assert np.all(d2[strong & interior] <= 0)


def test_csv_roundtrip():
    m = Mesh(graph.tadpole(1.0), 0.1, truncation=3.0)
    u = m.sample(lambda k, s: np.cos(s) + k)
    back = GraphFunction.from_csv(m, u.to_csv())
    assert np.array_equal(back.values, u.values)
    assert u.to_csv().splitlines()[0] == "edge_id,arclength,value"
