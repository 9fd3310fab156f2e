import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from molecule_spectra.geometry import (
    ANTI,
    DIRICHLET_STRIP,
    DIRICHLET_TRUNC,
    MAIN,
    NEUMANN,
    NEUMANN_AXIS,
    PolygonSpec,
    StripSpec,
    build_polygon_mesh,
    build_strip_mesh,
    chain_segments,
    corner_square,
    corner_trapezoid,
    gamma_tag,
    half_cross,
    inner_triangle,
    rectangle_mesh,
    reflected_trapezoid,
    reflection_permutation,
    robin,
    snap_atoms,
    stem_rectangle,
)


def test_snap_nearest_multiple():
    snapped, err = snap_atoms([0.49, 1.26], 0.25)
    np.testing.assert_allclose(snapped, [0.5, 1.25])
    assert err == pytest.approx(0.01)


def test_snap_already_on_grid():
    snapped, err = snap_atoms([0.5], 0.5)
    assert snapped.tolist() == [0.5]
    assert err == 0


def test_snap_merges_duplicates():
    # 0.24 and 0.26 are both nearest to 0.25 on the quarter grid
    snapped, err = snap_atoms([0.24, 0.26], 0.25)
    assert snapped.tolist() == [0.25]
    assert err == pytest.approx(0.01)


def test_snap_ties_round_up_and_stay_positive():
    snapped, _ = snap_atoms([0.125, 0.375], 0.25)
    assert snapped.tolist() == [0.25, 0.5]
    snapped, _ = snap_atoms([0.01], 0.25)
    assert snapped.tolist() == [0.25]


@pytest.mark.parametrize("atoms", [[1.0, 0.5], [0.5, 0.5], [-1.0, 2.0], [0.0]])
def test_snap_rejects_bad_input(atoms):
    with pytest.raises(ValueError):
        snap_atoms(atoms, 0.25)


@given(
    st.lists(st.floats(0.01, 50.0), min_size=1, max_size=20, unique=True),
    st.sampled_from([0.5, 0.25, 0.125, 1 / 16]),
)
def test_snap_error_bounded(atoms, h):
    atoms = sorted(atoms)
    snapped, err = snap_atoms(atoms, h)
    # atoms below h / 2 are pushed up to the first grid line
    assert err <= max(h / 2, h - atoms[0]) + 1e-12
    assert np.all(np.diff(snapped) > 0)
    k = snapped / h
    np.testing.assert_allclose(k, np.round(k), atol=1e-9)


def test_strip_spec_validation():
    with pytest.raises(ValueError):
        StripSpec(1.0, 2.0, 4)  # L < 4d
    with pytest.raises(ValueError):
        StripSpec(1.0, 4.1, 4)  # L off the grid
    with pytest.raises(ValueError):
        StripSpec(1.0, 4.0, 1)


def test_small_strip_area_and_triangles(tiny_strip):
    mesh = tiny_strip()
    np.testing.assert_allclose(mesh.triangle_areas(), 0.125)
    # {|x-y| <= 1} inside [0, 2]^2
    assert mesh.area() == pytest.approx(3.0, rel=1e-12)
    # walls y = x +- 1 clipped to the box: two segments of length sqrt(2)
    assert mesh.chain_length(DIRICHLET_STRIP) == pytest.approx(2 * math.sqrt(2))


def test_small_strip_atom_chains(tiny_strip):
    mesh = tiny_strip(atoms=[1.0])
    assert mesh.area() == pytest.approx(3.0)
    # x = 1, y in [0, 2] and y = 1, x in [0, 2]
    assert mesh.chain_length(gamma_tag(1)) == pytest.approx(4.0)
    runs = chain_segments(mesh, gamma_tag(1))
    assert sorted(round(sum(np.hypot(*(mesh.nodes[e[1]] - mesh.nodes[e[0]])) for e in r), 12) for r in runs) == [
        2.0,
        2.0,
    ]


def census_triangles(d, L, M):
    """Independent count: test each half-cell by its centroid."""
    h = d / M
    n = round(L / h)
    count = 0
    for i in range(n):
        for j in range(n):
            for cx, cy in ((i + 2 / 3, j + 1 / 3), (i + 1 / 3, j + 2 / 3)):
                if abs(cx - cy) * h <= d:
                    count += 1
    return count


def test_triangle_census_matches():
    spec = StripSpec(1.0, 4.0, 4)
    mesh = build_strip_mesh(spec)
    assert mesh.n_triangles == census_triangles(1.0, 4.0, 4) == 224


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 12), st.integers(0, 6))
def test_strip_area_conservation(M, extra):
    d = 0.7
    L = 4 * d + extra * d / M
    spec = StripSpec(d, L, M)
    mesh = build_strip_mesh(spec)
    assert mesh.area() == pytest.approx(spec.area(), rel=1e-12)
    assert np.all(mesh.triangle_areas() > 0)
    np.testing.assert_allclose(mesh.triangle_areas(), spec.h ** 2 / 2, rtol=1e-12)


def test_area_conservation_fine():
    spec = StripSpec(1.0, 4.0, 64)
    assert build_strip_mesh(spec).area() == pytest.approx(spec.area(), rel=1e-12)


def test_nodes_inside_strip():
    spec = StripSpec(1.0, 5.0, 8)
    mesh = build_strip_mesh(spec, [0.5, 2.0, 5.5])
    x, y = mesh.nodes.T
    assert np.all(np.abs(x - y) <= spec.d + 1e-12)
    assert np.all((x >= 0) & (y >= 0) & (x <= spec.L) & (y <= spec.L))


def _edge_counts(mesh):
    t = mesh.triangles
    e = np.sort(np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]]), axis=1)
    keys, counts = np.unique(e, axis=0, return_counts=True)
    return {tuple(k): c for k, c in zip(keys, counts)}


def test_tag_geometry_and_conformity():
    spec = StripSpec(1.0, 5.0, 8)
    atoms = [0.5, 2.0, 4.5, 5.5]
    mesh = build_strip_mesh(spec, atoms)
    counts = _edge_counts(mesh)
    seen = {}
    for tag, edges in mesh.edge_groups.items():
        for e in map(tuple, np.sort(edges, axis=1)):
            assert e not in seen, f"edge {e} tagged {seen.get(e)} and {tag}"
            seen[e] = tag
            expected = 2 if tag.startswith("GAMMA_") else 1
            assert counts[e] == expected
        for run in chain_segments(mesh, tag):
            assert np.all(run[1:, 0] == run[:-1, 1])

    x = mesh.nodes[:, 0]
    y = mesh.nodes[:, 1]
    wall = mesh.edge_groups[DIRICHLET_STRIP].ravel()
    np.testing.assert_allclose(np.abs(x[wall] - y[wall]), 1.0)
    axis = mesh.edge_groups[NEUMANN_AXIS].ravel()
    assert np.all((x[axis] == 0) | (y[axis] == 0))
    cut = mesh.edge_groups[DIRICHLET_TRUNC].ravel()
    assert np.all((x[cut] == 5.0) | (y[cut] == 5.0))
    for k, a in enumerate(atoms, start=1):
        e = mesh.edge_groups[gamma_tag(k)]
        ends = mesh.nodes[e]
        on_line = np.all(ends[:, :, 0] == a, axis=1) | np.all(ends[:, :, 1] == a, axis=1)
        assert np.all(on_line)


def test_wall_chain_covers_the_walls():
    spec = StripSpec(1.0, 5.0, 8)
    mesh = build_strip_mesh(spec)
    # y = x - 1 for x in [1, 5] and y = x + 1 for y in [1, 5]
    assert mesh.chain_length(DIRICHLET_STRIP) == pytest.approx(2 * 4 * math.sqrt(2))


@pytest.mark.parametrize(
    "a, expected",
    [(2.0, 2.0), (0.5, 1.5), (4.5, 1.5), (5.0, 0.0), (5.5, 0.0)],
)
def test_gamma_chain_clipped_length(a, expected):
    # expected per branch: 2d in the bulk, a + d near the axes, L - a + d near the cut
    spec = StripSpec(1.0, 5.0, 8)
    mesh = build_strip_mesh(spec, [a])
    assert mesh.chain_length(gamma_tag(1)) == pytest.approx(2 * expected)


def test_refinement_nesting():
    coarse = build_strip_mesh(StripSpec(1.0, 4.0, 4))
    fine = build_strip_mesh(StripSpec(1.0, 4.0, 8))
    fine_set = {tuple(p) for p in fine.nodes}
    assert all(tuple(p) in fine_set for p in coarse.nodes)


def test_reflection_permutation_maps_mesh():
    mesh = build_strip_mesh(StripSpec(1.0, 4.0, 4), [1.0])
    perm = reflection_permutation(mesh)
    np.testing.assert_array_equal(mesh.nodes[perm], mesh.nodes[:, ::-1])


def test_mesh_json_roundtrip():
    mesh = build_strip_mesh(StripSpec(1.0, 4.0, 2), [1.0])
    data = json.loads(mesh.dumps())
    assert set(data) == {"schema", "h", "nodes", "triangles", "edge_groups", "conditions"}
    assert np.array_equal(np.array(data["triangles"]), mesh.triangles)
    assert set(data["edge_groups"]) == {DIRICHLET_STRIP, NEUMANN_AXIS, DIRICHLET_TRUNC, gamma_tag(1)}


def test_mesh_is_immutable():
    mesh = build_strip_mesh(StripSpec(1.0, 4.0, 2))
    with pytest.raises(ValueError):
        mesh.nodes[0, 0] = 1.0


def test_atom_off_grid_rejected():
    with pytest.raises(ValueError):
        build_strip_mesh(StripSpec(1.0, 4.0, 4), [0.3])


# polygons


def test_unit_square_polygon():
    spec = PolygonSpec(((0, 0), (1, 0), (1, 1), (0, 1)), (NEUMANN,) * 4, 0.25)
    mesh = build_polygon_mesh(spec)
    assert mesh.n_triangles == 32
    assert mesh.area() == pytest.approx(1.0, rel=1e-12)


def test_triangle_polygon_anti_split():
    spec = PolygonSpec(((0, 0), (1, 0), (0, 1)), (NEUMANN,) * 3, 0.25, ANTI)
    mesh = build_polygon_mesh(spec)
    assert mesh.area() == pytest.approx(0.5, rel=1e-12)
    assert mesh.chain_length("EDGE_1") == pytest.approx(math.sqrt(2))


def test_polygon_split_conflict_rejected():
    with pytest.raises(ValueError):
        build_polygon_mesh(PolygonSpec(((0, 0), (1, 0), (0, 1)), (NEUMANN,) * 3, 0.25, MAIN))


def test_polygon_off_grid_rejected():
    with pytest.raises(ValueError):
        build_polygon_mesh(PolygonSpec(((0, 0), (1.1, 0), (1.1, 1), (0, 1)), (NEUMANN,) * 4, 0.25))


def trapezoid_area(d, a):
    # {0 <= x <= a, a <= y <= d - x}: heights d - a and d - 2a over width a
    return a * ((d - a) + (d - 2 * a)) / 2


def test_reflected_trapezoid_area():
    d, a = 1.0, 0.25
    mesh = build_polygon_mesh(reflected_trapezoid(d, a, 1.0, 0.0625))
    assert mesh.area() == pytest.approx(2 * trapezoid_area(d, a), rel=1e-12)


def test_half_cross_area():
    # doubling the L shape across y = d gives four copies of the trapezoid
    d, a = 1.0, 0.25
    mesh = build_polygon_mesh(half_cross(d, a, 1.0, 0.0625))
    assert mesh.area() == pytest.approx(4 * trapezoid_area(d, a), rel=1e-12)
    assert build_polygon_mesh(corner_trapezoid(d, a, 1.0, 0.0625)).area() == pytest.approx(trapezoid_area(d, a))


@pytest.mark.parametrize(
    "spec, area",
    [
        (corner_square(0.375, 3.0, 0.125), 0.375 ** 2),
        (inner_triangle(1.0, 0.25, 3.0, 0.125), 0.5 * 0.5 ** 2),
        (stem_rectangle(1.0, 0.25, 3.0, 0.125), 0.25 * 1.5),
    ],
)
def test_comparison_domain_areas(spec, area):
    mesh = build_polygon_mesh(spec)
    assert mesh.area() == pytest.approx(area, rel=1e-12)


def test_robin_chains_contiguous():
    mesh = build_polygon_mesh(half_cross(1.0, 0.25, 2.0, 0.0625))
    for tag, bc in mesh.conditions.items():
        runs = chain_segments(mesh, tag)
        assert len(runs) == 1
        if bc.kind == "ROBIN":
            assert bc.gamma == 2.0


def test_robin_infinite_is_dirichlet():
    assert robin(math.inf).kind == "DIRICHLET"


def test_rectangle_mesh_jitter_keeps_orientation():
    mesh = rectangle_mesh(0.0, 2.0, 1.0, 1.5, 6, 4, jitter=0.16, rng=np.random.default_rng(3))
    assert np.all(mesh.triangle_areas() > 0)
    assert mesh.area() == pytest.approx(1.0, rel=1e-12)


def test_rectangle_mesh_jitter_bound():
    with pytest.raises(ValueError):
        rectangle_mesh(0.0, 1.0, 0.0, 1.0, 4, 4, jitter=1 / 6, rng=np.random.default_rng(0))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(2, 8), st.integers(2, 8))
def test_rectangle_mesh_max_jitter_stays_oriented(seed, nx, ny):
    mesh = rectangle_mesh(0.0, 1.3, 0.0, 0.4, nx, ny, jitter=0.1666, rng=np.random.default_rng(seed))
    assert np.all(mesh.triangle_areas() > 0)
