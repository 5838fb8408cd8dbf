import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qgnls import graph, morse, solver, spectra
from qgnls.functions import GraphFunction


def small_state(h=0.05):
    g = graph.segment(4.0)
    ops = spectra.assemble(g, h)
    lam = 40.0
    guess = solver.soliton_profile(lam, 1.0, 8.0, (0, 2.0), ops.mesh)
    return solver.solve_fixed_lambda(ops, lam, 1.0, 8.0, guess)


@pytest.fixture(scope="module")
def hess():
    return morse.build_hessian(small_state())


def test_matrices_symmetric(hess):
    assert abs(hess.H - hess.H.T).max() == 0
    assert abs(hess.G - hess.G.T).max() == 0


def test_projector_idempotent_and_tangent(hess):
    rng = np.random.default_rng(1)
    for _ in range(5):
        v = rng.standard_normal(hess.size)
        pv = hess.project(v)
        assert np.allclose(hess.project(pv), pv, rtol=0, atol=1e-12 * np.abs(v).max())
        assert abs(hess.c @ pv) <= 1e-12 * np.linalg.norm(hess.c) * np.linalg.norm(v)


def test_form_along_state(hess):
    st = small_state()
    x = st.ops.restrict(st.u)
    lhs = hess.form(x)
    rhs = (2 - st.p) * st.rho * float(np.sum(st.ops.lumped * x**st.p))
    assert lhs == pytest.approx(rhs, rel=1e-8)
    assert lhs < 0


def test_inertia_matches_dense(hess):
    for theta in (0.0, 1e-8, 1e-3):
        assert morse.negative_count(hess, theta) == morse.dense_morse_index(hess, theta)
        assert morse.full_space_index(hess, theta) == morse.dense_morse_index(hess, theta, constrained=False)


def test_full_and_tangent_counts_interlace(hess):
    full = morse.full_space_index(hess)
    tan = morse.approximate_morse_index(hess)
    assert full >= 1  # the state direction is negative
    assert tan <= full <= tan + 1


def test_index_monotone_in_theta(hess):
    counts = [morse.approximate_morse_index(hess, t) for t in (0.0, 1e-8, 1e-4, 1e-2, 1.0, 1e3)]
    assert all(b <= a for a, b in zip(counts, counts[1:]))


def test_large_theta_kills_index(hess):
    bound = np.max(np.abs(hess.H.diagonal() / hess.G.diagonal())) + np.max(
        np.abs(hess.H).sum(axis=1).A1 / hess.G.diagonal())
    assert morse.approximate_morse_index(hess, float(bound)) == 0


def test_negative_theta_rejected(hess):
    with pytest.raises(ValueError):
        morse.approximate_morse_index(hess, -1.0)
    with pytest.raises(ValueError):
        morse.negative_count(hess, -1e-3)


def test_sign_flip_leaves_hessian_unchanged():
    st = small_state()
    a = morse.build_hessian(st)
    b = morse.hessian_from(st.ops, st.u.scaled(-1.0), st.lam, st.rho, st.p)
    assert abs(a.H - b.H).max() == 0
    assert morse.approximate_morse_index(a) == morse.approximate_morse_index(b)


def test_defocusing_sign_has_no_negative_directions():
    st = small_state()
    hess = morse.hessian_from(st.ops, st.u, st.lam, -st.rho, st.p)
    assert morse.full_space_index(hess) == 0
    assert morse.approximate_morse_index(hess) == 0


def test_segment_ground_state_certificate():
    cert = morse.index_certificate(small_state())
    assert cert.index_theta <= cert.index_theta0 <= cert.full_index
    assert cert.passed and cert.verdict == "PASS"
    assert np.all(np.diff(cert.eigenvalues) >= -1e-12)
    assert np.all(cert.residuals <= 1e-6)


def test_sparse_lowest_values_agree_with_dense():
    st = small_state(0.002)
    hess = morse.build_hessian(st)
    assert hess.size > morse.DENSE_LIMIT
    vals, res = morse.most_negative(hess, 3)
    coarse = morse.build_hessian(small_state(0.004))
    ref, _ = morse.most_negative(coarse, 3)
    assert vals[0] == pytest.approx(ref[0], rel=1e-2)
    assert np.all(res <= 1e-6)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.5, 20.0), st.floats(0.1, 3.0))
def test_constant_function_counts(lam, c):
    # H = K + (lam - 7 c^6) W on a Neumann segment; its W-spectrum is (k pi / L)^2 + lam - 7 c^6
    ops = spectra.assemble(graph.segment(2.0), 0.1)
    u = GraphFunction(ops.mesh, np.full(ops.mesh.n_nodes, c))
    hess = morse.hessian_from(ops, u, lam, 1.0, 8.0)
    shift = lam - 7 * c**6
    if abs(shift) < 1e-6:
        return
    theta = 0.0
    dense = morse.dense_morse_index(hess, theta, constrained=False)
    assert morse.full_space_index(hess, theta) == dense
    # constants are the only W-normal direction, so the tangent count drops it when shift < 0
    assert morse.approximate_morse_index(hess) == dense - (1 if shift < 0 else 0)
    assert dense >= (1 if shift < 0 else 0)
