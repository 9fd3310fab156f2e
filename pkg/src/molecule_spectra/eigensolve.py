"""Lowest eigenpairs of ``A u = lambda M u`` with residual certificates.

Small problems are solved densely; larger ones by shift-invert Lanczos with a
shift placed safely below the spectrum, or by preconditioned block
Rayleigh-quotient minimisation. Eigenvalue counting below a level uses the
inertia of a symmetric factorisation of ``A - s M``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

logger = logging.getLogger(__name__)

DENSE = "DENSE"
SHIFT_INVERT = "SHIFT_INVERT"
BLOCK_RQ_MIN = "BLOCK_RQ_MIN"

DENSE_LIMIT = 2000


class SolverError(RuntimeError):
    """Factorisation breakdown or failure to reach the residual tolerance."""


@dataclass(eq=False)
class SpectralResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray
    method: str
    iterations: int
    n_dof: int
    shift: Optional[float] = None
    info: dict = field(default_factory=dict)

    @property
    def lowest(self) -> float:
        return float(self.eigenvalues[0])

    def to_json(self) -> dict:
        return {
            "eigenvalues": self.eigenvalues.tolist(),
            "residuals": self.residuals.tolist(),
            "method": self.method,
            "iterations": self.iterations,
            "n_dof": self.n_dof,
        }


def rayleigh_quotient(A, M, u) -> float:
    """``(u^T A u) / (u^T M u)``."""
    u = np.asarray(u, dtype=float)
    den = float(u @ (M @ u))
    if not np.any(u) or den <= 0:
        raise ValueError("Rayleigh quotient of the zero vector is undefined")
    return float(u @ (A @ u)) / den


def _norm1(A) -> float:
    if sp.issparse(A):
        return float(abs(A).sum(axis=0).max())
    return float(np.abs(np.asarray(A)).sum(axis=0).max())


def residuals(A, M, vals, vecs) -> np.ndarray:
    """Relative residuals ``|Au - lam Mu| / (|Au| + |lam| |Mu|)`` per pair.

    For a numerically null pair (``Au`` at roundoff level, as for the constant
    mode of a Neumann problem) that ratio is noise over noise; those pairs use
    the normwise backward error ``|Au - lam Mu| / (|A|_1 |u|)`` instead.
    """
    AU = A @ vecs
    MU = M @ vecs
    R = AU - MU * vals[None, :]
    num = np.linalg.norm(R, axis=0)
    den = np.linalg.norm(AU, axis=0) + np.abs(vals) * np.linalg.norm(MU, axis=0)
    scale = _norm1(A) * np.linalg.norm(vecs, axis=0)
    null = den <= 1e3 * np.finfo(float).eps * scale
    den = np.where(null, scale, den)
    return num / np.where(den > 0, den, 1.0)


def _normalise(M, vals, vecs):
    order = np.argsort(vals, kind="stable")
    vals, vecs = vals[order], vecs[:, order]
    # M-orthonormalise within the returned block
    G = vecs.T @ (M @ vecs)
    G = 0.5 * (G + G.T)
    L = np.linalg.cholesky(G)
    vecs = la.solve_triangular(L, vecs.T, lower=True).T
    # fix the sign so that results are reproducible
    pivot = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[pivot, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vals, vecs * signs[None, :]


def safe_shift(A, M) -> float:
    """A shift strictly below the lowest eigenvalue of a PSD pencil.

    Uses the Rayleigh quotient of the constant vector as a scale; negative
    shifts keep ``A - s M`` positive definite whenever ``A`` is semidefinite.
    """
    n = A.shape[0]
    rho = rayleigh_quotient(A, M, np.ones(n))
    return -max(0.05 * rho, 1e-3)


def solve_lowest(
    A,
    M,
    m: int = 1,
    tol: float = 1e-8,
    method: Optional[str] = None,
    maxiter: int = 5000,
) -> SpectralResult:
    """The ``m`` smallest eigenpairs of the symmetric pencil ``(A, M)``.

    Parameters
    ----------
    A, M : sparse or dense symmetric matrices
        ``A`` positive semidefinite, ``M`` positive definite.
    m : int
        Number of eigenpairs.
    tol : float
        Bound on every relative residual; exceeded bounds raise
        :class:`SolverError`.
    method : {"DENSE", "SHIFT_INVERT", "BLOCK_RQ_MIN"}, optional
        Defaults to dense for ``n <= 2000`` and shift-invert otherwise.
    """
    n = A.shape[0]
    if m < 1 or m >= n:
        raise ValueError(f"cannot compute {m} eigenpairs of a problem of size {n}")
    if method is None:
        method = DENSE if n <= DENSE_LIMIT else SHIFT_INVERT
    shift = None
    iterations = 0
    if method == DENSE:
        Ad = A.toarray() if sp.issparse(A) else np.asarray(A)
        Md = M.toarray() if sp.issparse(M) else np.asarray(M)
        try:
            vals, vecs = la.eigh(Ad, Md, subset_by_index=[0, m - 1], driver="gvx")
        except la.LinAlgError as exc:
            raise SolverError(f"dense generalized eigensolve failed (n={n}): {exc}") from exc
        iterations = 1
    elif method == SHIFT_INVERT:
        shift = safe_shift(A, M)
        As = sp.csc_matrix(A - shift * M)
        try:
            lu = spla.splu(As, permc_spec="MMD_AT_PLUS_A")
        except RuntimeError as exc:
            raise SolverError(f"sparse factorisation of A - {shift:g} M failed (n={n}): {exc}") from exc
        counter = {"k": 0}

        def apply_inverse(x):
            counter["k"] += 1
            return lu.solve(x)

        OPinv = spla.LinearOperator((n, n), matvec=apply_inverse, dtype=float)
        v0 = np.ones(n) / np.sqrt(n)
        ncv = min(n, max(2 * m + 1, 20))
        try:
            vals, vecs = spla.eigsh(
                A, k=m, M=M, sigma=shift, OPinv=OPinv, which="LM", v0=v0, ncv=ncv,
                tol=tol * 1e-3, maxiter=maxiter,
            )
        except spla.ArpackNoConvergence as exc:
            raise SolverError(f"shift-invert Lanczos did not converge in {maxiter} restarts") from exc
        iterations = counter["k"]
    elif method == BLOCK_RQ_MIN:
        vals, vecs, iterations = _block_rq_min(A, M, m, tol, maxiter)
    else:
        raise ValueError(f"unknown method {method!r}")

    vals, vecs = _normalise(M, np.asarray(vals, dtype=float), np.asarray(vecs, dtype=float))
    res = residuals(A, M, vals, vecs)
    if np.any(res > tol):
        raise SolverError(f"{method}: residuals {res.max():.3e} exceed tolerance {tol:.1e}")
    return SpectralResult(vals, vecs, res, method, iterations, n, shift)


def _block_rq_min(A, M, m, tol, maxiter):
    n = A.shape[0]
    k = min(n - 1, max(2 * m, m + 4))
    # incomplete LU of the shifted (positive definite) operator as preconditioner
    shift = safe_shift(A, M)
    try:
        ilu = spla.spilu(sp.csc_matrix(A - shift * M), drop_tol=1e-4, fill_factor=20)
    except RuntimeError as exc:
        raise SolverError(f"incomplete factorisation of A - {shift:g} M failed (n={n}): {exc}") from exc
    precond = spla.LinearOperator(
        (n, n),
        matvec=lambda x: ilu.solve(x.reshape(-1)),
        matmat=lambda X: ilu.solve(np.ascontiguousarray(X)),
        dtype=float,
    )
    rng = np.random.Generator(np.random.PCG64(12345))
    X = rng.standard_normal((n, k))
    vals, vecs, history = spla.lobpcg(
        A, X, B=M, M=precond, largest=False, tol=tol * 1e-3, maxiter=maxiter, retResidualNormsHistory=True
    )
    return vals[:m], vecs[:, :m], len(history)


def inertia(A, M, s: float, dense_limit: int = 400) -> int:
    """Number of eigenvalues of ``(A, M)`` strictly below ``s``.

    Counts negative pivots of an ``LDL^T`` factorisation of ``A - s M``
    (Sylvester's law of inertia). Sparse matrices are factorised by SuperLU in
    symmetric mode without pivoting; if SuperLU pivots anyway the dense
    Bunch-Kaufman factorisation is used instead.
    """
    n = A.shape[0]
    S = A - s * M
    if n > dense_limit and sp.issparse(S):
        try:
            lu = spla.splu(
                sp.csc_matrix(S),
                permc_spec="MMD_AT_PLUS_A",
                diag_pivot_thresh=0.0,
                options={"SymmetricMode": True},
            )
        except RuntimeError as exc:
            raise SolverError(f"A - {s:g} M is singular to working precision: {exc}") from exc
        if np.array_equal(lu.perm_r, lu.perm_c):
            d = lu.U.diagonal()
            if np.any(d == 0):
                raise SolverError(f"zero pivot: {s:g} is an eigenvalue to working precision")
            return int(np.count_nonzero(d < 0))
        logger.debug("SuperLU pivoted off the diagonal; falling back to dense LDL^T")
    Sd = S.toarray() if sp.issparse(S) else np.asarray(S)
    _, D, _ = la.ldl(Sd, lower=True)
    ev = _block_diagonal_eigenvalues(D)
    if np.any(ev == 0):
        raise SolverError(f"zero pivot: {s:g} is an eigenvalue to working precision")
    return int(np.count_nonzero(ev < 0))


def _block_diagonal_eigenvalues(D: np.ndarray) -> np.ndarray:
    n = D.shape[0]
    out = []
    i = 0
    while i < n:
        if i + 1 < n and D[i + 1, i] != 0:
            out.extend(np.linalg.eigvalsh(D[i : i + 2, i : i + 2]))
            i += 2
        else:
            out.append(D[i, i])
            i += 1
    return np.asarray(out)


def dense_spectrum(A, M) -> np.ndarray:
    """All generalized eigenvalues, for small oracle checks."""
    Ad = A.toarray() if sp.issparse(A) else np.asarray(A)
    Md = M.toarray() if sp.issparse(M) else np.asarray(M)
    return la.eigh(Ad, Md, eigvals_only=True)
