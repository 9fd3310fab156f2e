"""Sparse P1 matrices of the molecule energy form.

The discrete form is ``u^T (K + sum_i T_i) u`` over the mass ``u^T M u``:
``K`` the stiffness, ``M`` the consistent mass and ``T_i`` the weighted edge
mass along the interaction lines of atom ``i``. Dirichlet parts of the
boundary (and interaction lines with infinite strength) are removed from the
unknowns rather than penalised.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp

from .geometry import (
    DIRICHLET_STRIP,
    DIRICHLET_TRUNC,
    StripMesh,
    gamma_tag,
    snap_atoms,
)

CONSTANT = "CONSTANT"
PIECEWISE = "PIECEWISE"
INFINITE = "INFINITE"


@dataclass(frozen=True)
class SigmaProfile:
    """Nonnegative interaction strength as a function of position along a line.

    For ``PIECEWISE`` profiles ``values[0]`` holds on ``[0, breakpoints[0])``,
    ``values[k]`` on ``[breakpoints[k-1], breakpoints[k])`` and the last value
    beyond the last breakpoint.
    """

    kind: str = CONSTANT
    value: float = 0.0
    breakpoints: tuple = ()
    values: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "breakpoints", tuple(float(b) for b in self.breakpoints))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if self.kind == CONSTANT:
            if not (self.value >= 0 and math.isfinite(self.value)):
                raise ValueError("constant strength must be finite and nonnegative")
        elif self.kind == PIECEWISE:
            if len(self.values) != len(self.breakpoints) + 1:
                raise ValueError("piecewise profile needs one more value than breakpoints")
            if any(v < 0 or not math.isfinite(v) for v in self.values):
                raise ValueError("piecewise values must be finite and nonnegative")
            if any(b1 <= b0 for b0, b1 in zip(self.breakpoints, self.breakpoints[1:])):
                raise ValueError("breakpoints must be strictly ascending")
        elif self.kind != INFINITE:
            raise ValueError(f"unknown profile kind {self.kind!r}")

    @classmethod
    def constant(cls, s: float) -> "SigmaProfile":
        if math.isinf(s):
            return cls.infinite()
        return cls(CONSTANT, float(s))

    @classmethod
    def piecewise(cls, breakpoints, values) -> "SigmaProfile":
        return cls(PIECEWISE, breakpoints=tuple(breakpoints), values=tuple(values))

    @classmethod
    def infinite(cls) -> "SigmaProfile":
        return cls(INFINITE)

    @property
    def is_infinite(self) -> bool:
        return self.kind == INFINITE

    @property
    def is_zero(self) -> bool:
        if self.kind == CONSTANT:
            return self.value == 0
        if self.kind == PIECEWISE:
            return all(v == 0 for v in self.values)
        return False

    def infimum(self) -> float:
        if self.kind == CONSTANT:
            return self.value
        if self.kind == PIECEWISE:
            return min(self.values)
        return math.inf

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == CONSTANT:
            return np.full(t.shape, self.value)
        if self.kind == PIECEWISE:
            k = np.searchsorted(np.asarray(self.breakpoints), t, side="right")
            return np.asarray(self.values)[k]
        raise ValueError("an infinite profile has no pointwise values; eliminate the chain instead")

    def to_json(self):
        if self.kind == CONSTANT:
            return {"kind": CONSTANT, "value": self.value}
        if self.kind == PIECEWISE:
            return {"kind": PIECEWISE, "breakpoints": list(self.breakpoints), "values": list(self.values)}
        return {"kind": INFINITE}

    @classmethod
    def from_json(cls, data) -> "SigmaProfile":
        kind = data["kind"]
        if kind == CONSTANT:
            return cls.constant(data["value"])
        if kind == PIECEWISE:
            return cls.piecewise(data["breakpoints"], data["values"])
        return cls.infinite()

    @classmethod
    def parse(cls, text: str) -> "SigmaProfile":
        """Parse ``"10"``, ``"inf"`` or ``"pw:1@1,3"`` (value 1, breakpoint 1, value 3)."""
        text = text.strip()
        if text.lower() in ("inf", "infinity", "dirichlet"):
            return cls.infinite()
        if text.lower().startswith("pw:"):
            parts = [p.strip() for p in text[3:].split(",")]
            values, breaks = [], []
            for p in parts[:-1]:
                v, b = p.split("@")
                values.append(float(v))
                breaks.append(float(b))
            values.append(float(parts[-1]))
            return cls.piecewise(breaks, values)
        return cls.constant(float(text))

    def __str__(self):
        if self.kind == CONSTANT:
            return repr(self.value)
        if self.kind == PIECEWISE:
            body = ",".join(f"{v!r}@{b!r}" for v, b in zip(self.values, self.breakpoints))
            return f"pw:{body},{self.values[-1]!r}"
        return "inf"


SigmaLike = Union[SigmaProfile, float, Sequence[SigmaProfile]]


def per_atom_profiles(sigma: SigmaLike, n_atoms: int) -> List[SigmaProfile]:
    """Expand a single profile (or number) to one profile per atom."""
    if isinstance(sigma, (int, float)):
        sigma = SigmaProfile.constant(float(sigma))
    if isinstance(sigma, SigmaProfile):
        return [sigma] * n_atoms
    profiles = list(sigma)
    if len(profiles) != n_atoms:
        raise ValueError(f"expected {n_atoms} strength profiles, got {len(profiles)}")
    return profiles


@dataclass(frozen=True, eq=False)
class AssembledForms:
    """Reduced matrices after Dirichlet elimination.

    ``dof_map[node]`` is the reduced index of a mesh node, ``-1`` if eliminated.
    """

    K: sp.csr_matrix
    M: sp.csr_matrix
    T: tuple
    dof_map: np.ndarray
    n_dof: int

    @property
    def A(self) -> sp.csr_matrix:
        A = self.K.copy()
        for T in self.T:
            A = A + T
        return A.tocsr()

    @property
    def free_nodes(self) -> np.ndarray:
        return np.flatnonzero(self.dof_map >= 0)

    def extend(self, u: np.ndarray) -> np.ndarray:
        """Nodal values on the full mesh, zero on eliminated nodes."""
        full = np.zeros(len(self.dof_map), dtype=np.result_type(u, float))
        full[self.free_nodes] = u
        return full


def _element_geometry(mesh: StripMesh):
    p = mesh.nodes[mesh.triangles]
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    area = 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    if np.any(area <= 0):
        raise ValueError("mesh contains degenerate or negatively oriented triangles")
    return p, area


def _scatter(mesh: StripMesh, local: np.ndarray) -> sp.csr_matrix:
    t = mesh.triangles
    rows = np.repeat(t, 3, axis=1).ravel()
    cols = np.tile(t, (1, 3)).ravel()
    n = mesh.n_nodes
    # csr conversion sums duplicates in a fixed order given fixed input order
    return sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def element_stiffness(p: np.ndarray) -> np.ndarray:
    """Local P1 stiffness matrices for vertex arrays of shape (n, 3, 2)."""
    # edge opposite vertex k, rotated: gradients of barycentric coordinates
    e = np.stack([p[:, 2] - p[:, 1], p[:, 0] - p[:, 2], p[:, 1] - p[:, 0]], axis=1)
    area = 0.5 * (e[:, 2, 0] * (-e[:, 1, 1]) - e[:, 2, 1] * (-e[:, 1, 0]))
    return np.einsum("nik,njk->nij", e, e) / (4.0 * area)[:, None, None]


def assemble_stiffness(mesh: StripMesh) -> sp.csr_matrix:
    """Piecewise-linear stiffness ``∫ grad u . grad v`` on the full node set."""
    p, _ = _element_geometry(mesh)
    return _scatter(mesh, element_stiffness(p))


_LOCAL_MASS = (np.ones((3, 3)) + np.eye(3)) / 12.0


def assemble_mass(mesh: StripMesh) -> sp.csr_matrix:
    """Consistent P1 mass matrix."""
    _, area = _element_geometry(mesh)
    return _scatter(mesh, area[:, None, None] * _LOCAL_MASS[None])


def edge_parameter(mesh: StripMesh, edges: np.ndarray) -> np.ndarray:
    """Coordinate along the line at each edge midpoint.

    Vertical edges are parametrised by ``y``, all others by ``x``; on the two
    branches ``x = a`` and ``y = a`` of an interaction line this is the
    coordinate of the other particle.
    """
    a, b = mesh.nodes[edges[:, 0]], mesh.nodes[edges[:, 1]]
    mid = 0.5 * (a + b)
    vertical = a[:, 0] == b[:, 0]
    return np.where(vertical, mid[:, 1], mid[:, 0])


def assemble_trace(mesh: StripMesh, chain: Union[str, np.ndarray], sigma: SigmaLike) -> sp.csr_matrix:
    """Weighted 1-d consistent mass ``∫ sigma |u|^2`` along an edge chain.

    ``sigma`` is evaluated at edge midpoints, which is exact for profiles that
    are constant on every edge.
    """
    edges = mesh.edge_groups[chain] if isinstance(chain, str) else np.asarray(chain)
    if isinstance(sigma, (int, float)):
        sigma = SigmaProfile.constant(float(sigma))
    if sigma.is_infinite:
        raise ValueError("infinite strength must be applied by eliminating the chain")
    n = mesh.n_nodes
    if len(edges) == 0:
        return sp.csr_matrix((n, n))
    v = mesh.nodes[edges[:, 1]] - mesh.nodes[edges[:, 0]]
    length = np.hypot(v[:, 0], v[:, 1])
    w = sigma(edge_parameter(mesh, edges)) * length / 6.0
    local = w[:, None, None] * np.array([[2.0, 1.0], [1.0, 2.0]])[None]
    rows = np.repeat(edges, 2, axis=1).ravel()
    cols = np.tile(edges, (1, 2)).ravel()
    return sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def apply_dirichlet(
    K: sp.spmatrix,
    M: sp.spmatrix,
    T: Sequence[sp.spmatrix],
    mesh: StripMesh,
    dirichlet_tags: Iterable[str],
) -> AssembledForms:
    """Remove the nodes of the tagged chains from all matrices."""
    fixed = mesh.tag_nodes(list(dirichlet_tags))
    keep = np.ones(mesh.n_nodes, dtype=bool)
    keep[fixed] = False
    free = np.flatnonzero(keep)
    if len(free) == 0:
        raise ValueError("no free nodes remain after Dirichlet elimination")
    dof_map = -np.ones(mesh.n_nodes, dtype=np.int64)
    dof_map[free] = np.arange(len(free))

    def reduce(A):
        return sp.csr_matrix(A)[free][:, free].tocsr()

    return AssembledForms(
        K=reduce(K),
        M=reduce(M),
        T=tuple(reduce(t) for t in T),
        dof_map=dof_map,
        n_dof=len(free),
    )


def atom_chain_index(atoms: Sequence[float], h: float) -> np.ndarray:
    """For each atom, the 0-based index of its grid line after snapping."""
    snapped, _ = snap_atoms(atoms, h)
    if len(snapped) == 0:
        return np.zeros(0, dtype=np.int64)
    k = np.maximum(np.floor(np.asarray(atoms, dtype=float) / h + 0.5), 1.0) * h
    return np.searchsorted(snapped, k)


def assemble_hamiltonian(mesh: StripMesh, atoms: Sequence[float], sigma: SigmaLike) -> AssembledForms:
    """Full strip problem for a mesh built from ``snap_atoms(atoms, mesh.h)``.

    Atoms that snap onto the same grid line share a chain; their trace terms
    add. Any atom with infinite strength turns its chain into a Dirichlet set.
    """
    atoms = list(getattr(atoms, "atoms", atoms))
    profiles = per_atom_profiles(sigma, len(atoms))
    chain_of = atom_chain_index(atoms, mesh.h)
    n_chains = sum(1 for t in mesh.edge_groups if t.startswith("GAMMA_"))
    if len(chain_of) and chain_of.max() >= n_chains:
        raise ValueError("mesh does not resolve every snapped atom")

    K = assemble_stiffness(mesh)
    Mm = assemble_mass(mesh)
    dirichlet = [DIRICHLET_STRIP, DIRICHLET_TRUNC]
    traces = []
    for prof, c in zip(profiles, chain_of):
        tag = gamma_tag(int(c) + 1)
        if prof.is_infinite:
            dirichlet.append(tag)
            traces.append(sp.csr_matrix(K.shape))
        else:
            traces.append(assemble_trace(mesh, tag, prof))
    return apply_dirichlet(K, Mm, traces, mesh, dirichlet)


def assemble_polygon(mesh: StripMesh) -> AssembledForms:
    """Laplacian on a polygon mesh with the boundary conditions it carries."""
    K = assemble_stiffness(mesh)
    Mm = assemble_mass(mesh)
    traces, dirichlet = [], []
    for tag, bc in mesh.conditions.items():
        if bc.kind == "DIRICHLET":
            dirichlet.append(tag)
        elif bc.kind == "ROBIN" and bc.gamma > 0:
            traces.append(assemble_trace(mesh, tag, SigmaProfile.constant(bc.gamma)))
    return apply_dirichlet(K, Mm, traces, mesh, dirichlet)


def write_coo(path_or_file, A: sp.spmatrix, comment: Optional[str] = None) -> None:
    """Write ``A`` as ``nrows ncols nnz`` then one ``i j value`` line per entry."""
    C = sp.coo_matrix(A)
    order = np.lexsort((C.col, C.row))
    lines = []
    if comment:
        lines.extend(f"% {c}" for c in comment.splitlines())
    lines.append(f"{C.shape[0]} {C.shape[1]} {C.nnz}")
    lines.extend(f"{i} {j} {v!r}" for i, j, v in zip(C.row[order], C.col[order], C.data[order].tolist()))
    text = "\n".join(lines) + "\n"
    if hasattr(path_or_file, "write"):
        path_or_file.write(text)
    else:
        with open(path_or_file, "w") as fh:
            fh.write(text)


def read_coo(path) -> sp.csr_matrix:
    with open(path) as fh:
        rows = [ln for ln in fh if not ln.startswith("%")]
    m, n, nnz = map(int, rows[0].split())
    data = np.array([ln.split() for ln in rows[1 : 1 + nnz]], dtype=object).reshape(-1, 3)
    i = data[:, 0].astype(np.int64)
    j = data[:, 1].astype(np.int64)
    v = data[:, 2].astype(float)
    return sp.coo_matrix((v, (i, j)), shape=(m, n)).tocsr()
