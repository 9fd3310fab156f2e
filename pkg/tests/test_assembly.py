import io

import numpy as np
import pytest
import scipy.linalg as sla
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from molecule_spectra.assembly import (
    SigmaProfile,
    assemble_hamiltonian,
    assemble_mass,
    assemble_polygon,
    assemble_stiffness,
    assemble_trace,
    element_stiffness,
    read_coo,
    write_coo,
)
from molecule_spectra.geometry import (
    DIRICHLET,
    NEUMANN,
    PolygonSpec,
    StripSpec,
    build_polygon_mesh,
    build_strip_mesh,
    gamma_tag,
    rectangle_mesh,
    reflection_permutation,
)


def unit_square(h, kind=NEUMANN):
    return build_polygon_mesh(PolygonSpec(((0, 0), (1, 0), (1, 1), (0, 1)), (kind,) * 4, h))


def dense_eigs(forms):
    return sla.eigh(forms.A.toarray(), forms.M.toarray(), eigvals_only=True)


@pytest.mark.parametrize("h", [0.5, 0.25, 0.1])
def test_stiffness_kills_constants(h):
    K = assemble_stiffness(unit_square(h))
    np.testing.assert_allclose(K @ np.ones(K.shape[0]), 0, atol=1e-12)


def test_stiffness_energy_of_linear_function():
    mesh = build_strip_mesh(StripSpec(1.0, 4.0, 4))
    K = assemble_stiffness(mesh)
    x = mesh.nodes[:, 0]
    assert x @ K @ x == pytest.approx(mesh.area(), rel=1e-12)
    r = 0.3 * mesh.nodes[:, 0] - 0.4 * mesh.nodes[:, 1]
    assert r @ K @ r == pytest.approx(0.25 * mesh.area(), rel=1e-12)


def quadrature_stiffness(p):
    """Local stiffness from barycentric gradients found by solving for them."""
    V = np.column_stack([np.ones(3), p])
    grads = np.linalg.inv(V)[1:].T  # row k: gradient of the k-th hat function
    area = 0.5 * abs(np.linalg.det(V))
    # three-point edge-midpoint rule; the integrand is constant
    pts = [(p[0] + p[1]) / 2, (p[1] + p[2]) / 2, (p[2] + p[0]) / 2]
    return sum(area / 3 * grads @ grads.T for _ in pts)


@pytest.mark.parametrize("h", [1.0, 0.25, 1 / 7])
def test_element_stiffness_right_triangle(h):
    p = np.array([[0.0, 0.0], [h, 0.0], [h, h]])
    local = element_stiffness(p[None])[0]
    stencil = 0.5 * np.array([[1, -1, 0], [-1, 2, -1], [0, -1, 1]])
    np.testing.assert_allclose(local, stencil, atol=1e-14)
    np.testing.assert_allclose(local, quadrature_stiffness(p), atol=1e-13)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=6, max_size=6))
def test_element_stiffness_general_triangle(coords):
    p = np.array(coords).reshape(3, 2)
    area = 0.5 * ((p[1, 0] - p[0, 0]) * (p[2, 1] - p[0, 1]) - (p[1, 1] - p[0, 1]) * (p[2, 0] - p[0, 0]))
    if area < 1e-2:
        return
    np.testing.assert_allclose(element_stiffness(p[None])[0], quadrature_stiffness(p), rtol=1e-9, atol=1e-9)


def test_mass_totals():
    assert assemble_mass(unit_square(0.25)).sum() == pytest.approx(1.0, rel=1e-13)


def test_mass_total_tiny_strip(tiny_strip):
    assert assemble_mass(tiny_strip()).sum() == pytest.approx(3.0, rel=1e-13)


def test_mass_positive_definite():
    M = assemble_mass(unit_square(0.2)).toarray()
    assert M.shape == (36, 36)
    assert sla.eigvalsh(M).min() > 0
    sla.cholesky(M)


def test_mass_integrates_products_exactly():
    # int_0^1 int_0^1 x y = 1/4 and int x^2 = 1/3 are reproduced for P1 functions
    mesh = unit_square(0.25)
    M = assemble_mass(mesh)
    x, y = mesh.nodes.T
    assert x @ M @ y == pytest.approx(0.25, rel=1e-12)
    assert x @ M @ x == pytest.approx(1 / 3, rel=1e-12)


def test_matrices_symmetric():
    mesh = build_strip_mesh(StripSpec(1.0, 5.0, 8), [0.5, 2.0])
    f = assemble_hamiltonian(mesh, [0.5, 2.0], 3.0)
    for A in (f.K, f.M, *f.T):
        assert abs(A - A.T).max() <= 1e-14 * abs(A).max()


def test_trace_constant(tiny_strip):
    mesh = tiny_strip(M=4, atoms=[1.0])
    # chain x = 1, y = 1 covers total length 4 in the L = 2 strip
    T = assemble_trace(mesh, gamma_tag(1), SigmaProfile.constant(1.0))
    assert T.sum() == pytest.approx(4.0)
    y = mesh.nodes[:, 1]
    # int y^2 over x = 1 (y in [0, 2]) plus over y = 1 (x in [0, 2]): 8/3 + 2
    assert y @ T @ y == pytest.approx(8 / 3 + 2, rel=1e-12)
    assert abs(assemble_trace(mesh, gamma_tag(1), 0.0)).sum() == 0


def test_trace_straight_chain_length_two():
    mesh = unit_square(0.25)
    bottom = np.flatnonzero(mesh.nodes[:, 1] == 0)
    bottom = bottom[np.argsort(mesh.nodes[bottom, 0])]
    edges = np.column_stack([bottom[:-1], bottom[1:]])  # y = 0, length 1
    chain = np.vstack([edges, edges])  # traversed twice: total length 2
    assert assemble_trace(mesh, chain, 1.0).sum() == pytest.approx(2.0)


def test_trace_piecewise_exact():
    mesh = rectangle_mesh(0.0, 2.0, 0.0, 1.0, 8, 1)
    chain = mesh.edge_groups["BOTTOM"]
    sigma = SigmaProfile.piecewise([1.0], [1.0, 3.0])
    T = assemble_trace(mesh, chain, sigma)
    assert T.sum() == pytest.approx(4.0, rel=1e-14)
    x = mesh.nodes[:, 0]
    # x is reproduced exactly by P1: int_0^1 x^2 dx + 3 int_1^2 x^2 dx = 1/3 + 7
    assert x @ T @ x == pytest.approx(1 / 3 + 7, rel=1e-12)


def test_trace_rejects_infinite(tiny_strip):
    with pytest.raises(ValueError):
        assemble_trace(tiny_strip(atoms=[1.0]), gamma_tag(1), SigmaProfile.infinite())


def test_trace_psd():
    mesh = build_strip_mesh(StripSpec(1.0, 4.0, 4), [1.0])
    T = assemble_trace(mesh, gamma_tag(1), SigmaProfile.piecewise([1.0], [2.0, 5.0])).toarray()
    assert sla.eigvalsh(T).min() > -1e-13


def test_dirichlet_unit_square_single_free_node():
    f = assemble_polygon(unit_square(0.5, DIRICHLET))
    assert f.n_dof == 1
    np.testing.assert_allclose(unit_square(0.5).nodes[f.free_nodes], [[0.5, 0.5]])


def test_dirichlet_removes_wall_nodes():
    mesh = build_strip_mesh(StripSpec(1.0, 4.0, 4))
    f = assemble_hamiltonian(mesh, [], 0.0)
    x, y = mesh.nodes.T
    on_wall = np.isclose(np.abs(x - y), 1.0)
    assert np.all(f.dof_map[on_wall] == -1)
    assert np.all(f.dof_map[~on_wall & (x < 4) & (y < 4)] >= 0)
    assert sla.eigvalsh(f.M.toarray()).min() > 0


def test_dirichlet_empty_free_set_rejected():
    mesh = unit_square(1.0, DIRICHLET)
    with pytest.raises(ValueError):
        assemble_polygon(mesh)


def test_infinite_strength_dominates_finite():
    mesh = build_strip_mesh(StripSpec(1.0, 4.0, 4), [1.0])
    hard = dense_eigs(assemble_hamiltonian(mesh, [1.0], SigmaProfile.infinite()))
    for s in (0.0, 1.0, 100.0, 1e6):
        soft = dense_eigs(assemble_hamiltonian(mesh, [1.0], s))
        k = len(hard)
        assert np.all(hard >= soft[:k] - 1e-9 * np.abs(hard))
    # a huge finite strength approaches the eliminated problem from below
    assert soft[0] == pytest.approx(hard[0], rel=1e-3)


def test_no_atoms_ignores_sigma():
    mesh = build_strip_mesh(StripSpec(1.0, 4.0, 4))
    a = assemble_hamiltonian(mesh, [], 7.0)
    b = assemble_hamiltonian(mesh, [], 0.0)
    assert (a.A != b.A).nnz == 0 and (a.M != b.M).nnz == 0


def test_zero_strength_atom_changes_nothing():
    spec = StripSpec(1.0, 4.0, 4)
    with_atom = assemble_hamiltonian(build_strip_mesh(spec, [1.0]), [1.0], 0.0)
    without = assemble_hamiltonian(build_strip_mesh(spec), [], 0.0)
    assert len(with_atom.T) == 1 and with_atom.T[0].sum() == 0
    np.testing.assert_allclose(dense_eigs(with_atom), dense_eigs(without), rtol=1e-10)


def test_atom_at_width_raises_ground_state():
    mesh = build_strip_mesh(StripSpec(1.0, 4.0, 4), [1.0])
    e0 = dense_eigs(assemble_hamiltonian(mesh, [1.0], 0.0))[0]
    e10 = dense_eigs(assemble_hamiltonian(mesh, [1.0], 10.0))[0]
    assert e10 > e0


def test_eigenvalues_monotone_in_sigma():
    mesh = build_strip_mesh(StripSpec(1.0, 4.0, 4), [1.0, 2.5])
    previous = None
    for s in (0.0, 1.0, 10.0, 100.0, 1000.0):
        ev = dense_eigs(assemble_hamiltonian(mesh, [1.0, 2.5], [SigmaProfile.constant(1.0), SigmaProfile.constant(s)]))
        if previous is not None:
            assert np.all(ev >= previous - 1e-10 * np.abs(ev))
        previous = ev


@settings(max_examples=20, deadline=None)
@given(st.floats(0, 50), st.floats(0, 50))
def test_form_monotone_for_random_vectors(s1, s2):
    lo, hi = sorted((s1, s2))
    mesh = build_strip_mesh(StripSpec(1.0, 4.0, 4), [1.5])
    u = np.random.default_rng(0).standard_normal(mesh.n_nodes)
    a = assemble_hamiltonian(mesh, [1.5], lo)
    b = assemble_hamiltonian(mesh, [1.5], hi)
    v = u[a.free_nodes]
    assert v @ a.A @ v <= v @ b.A @ v + 1e-12 * abs(v @ b.A @ v)


def test_merged_atoms_add_strengths():
    mesh = build_strip_mesh(StripSpec(1.0, 4.0, 4), [1.0])
    merged = assemble_hamiltonian(mesh, [0.99, 1.01], [SigmaProfile.constant(2.0), SigmaProfile.constant(3.0)])
    single = assemble_hamiltonian(mesh, [1.0], 5.0)
    assert abs(merged.A - single.A).max() < 1e-13


def test_reflection_symmetry():
    mesh = build_strip_mesh(StripSpec(1.0, 4.0, 4), [0.75, 2.0])
    f = assemble_hamiltonian(mesh, [0.75, 2.0], SigmaProfile.piecewise([1.0], [1.0, 4.0]))
    perm = reflection_permutation(mesh)
    full = np.flatnonzero(f.dof_map >= 0)
    P = sp.csr_matrix((np.ones(len(full)), (np.arange(len(full)), f.dof_map[perm[full]])))
    assert abs(P @ f.A @ P.T - f.A).max() < 1e-13
    assert abs(P @ f.M @ P.T - f.M).max() < 1e-15


def test_rayleigh_quotient_matches_continuous_form():
    # phi = x + 2 y lies in the P1 space: |grad phi|^2 = 5 and
    # int phi^2 = 1/3 + 4 * 1/4 + 4/3 = 8/3 on the unit square
    mesh = unit_square(0.5)
    f = assemble_polygon(mesh)
    u = mesh.nodes[:, 0] + 2 * mesh.nodes[:, 1]
    assert (u @ f.A @ u) / (u @ f.M @ u) == pytest.approx(5.0 / (8 / 3), rel=1e-12)


def test_coo_roundtrip(tmp_path):
    f = assemble_hamiltonian(build_strip_mesh(StripSpec(1.0, 4.0, 4), [1.0]), [1.0], 2.5)
    path = tmp_path / "A.coo"
    write_coo(path, f.A, comment="test matrix")
    back = read_coo(path)
    assert (back != f.A).nnz == 0
    buf = io.StringIO()
    write_coo(buf, f.M)
    assert buf.getvalue().splitlines()[0] == f"{f.n_dof} {f.n_dof} {f.M.nnz}"


@pytest.mark.parametrize("text", ["10", "inf", "0", "pw:1.0@1.0,3.0", "pw:0.5@1.0,2.0@2.5,4.0"])
def test_sigma_parse_roundtrip(text):
    prof = SigmaProfile.parse(text)
    assert SigmaProfile.parse(str(prof)) == prof
    assert SigmaProfile.from_json(prof.to_json()) == prof


def test_sigma_profile_values():
    prof = SigmaProfile.parse("pw:1@1,3")
    np.testing.assert_allclose(prof(np.array([0.5, 1.5])), [1.0, 3.0])
    assert prof.infimum() == 1.0
    assert SigmaProfile.constant(0).is_zero


@pytest.mark.parametrize("text", ["-1", "pw:1@2", "pw:1@2,-3", "pw:1@2,1@1,3", "abc"])
def test_sigma_parse_rejects(text):
    with pytest.raises(ValueError):
        SigmaProfile.parse(text)
