"""Experiment drivers: ground states, classification, convergence studies,
Monte-Carlo probabilities, Robin threshold estimates and the rectangle scaling
harnesses.
"""
from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np
from threadpoolctl import threadpool_limits

from .assembly import (
    AssembledForms,
    SigmaLike,
    SigmaProfile,
    assemble_hamiltonian,
    assemble_mass,
    assemble_polygon,
    assemble_stiffness,
    assemble_trace,
    per_atom_profiles,
)
from .eigensolve import SolverError, SpectralResult, inertia, rayleigh_quotient, solve_lowest
from .geometry import (
    ANTI,
    NEUMANN,
    PolygonSpec,
    StripMesh,
    StripSpec,
    build_polygon_mesh,
    build_strip_mesh,
    rectangle_mesh,
    robin,
    snap_atoms,
)
from .randomness import AtomConfiguration, derive_stream, sample_stream
from .separable_robin import mu_hat3, mu_square

logger = logging.getLogger(__name__)

SCHEMA_VERSION = "molecule-spectra/report/1"

NONEMPTY = "NONEMPTY"
EMPTY = "EMPTY"
UNDECIDED = "UNDECIDED"
CLASSES = (NONEMPTY, EMPTY, UNDECIDED)

WILSON_Z95 = 1.959963984540054


def threshold(d: float) -> float:
    """Bottom of the essential spectrum, ``pi^2 / (2 d^2)``."""
    return math.pi ** 2 / (2.0 * d * d)


def default_tau(d: float) -> float:
    return 0.05 * threshold(d)


# --------------------------------------------------------------------------
# reports


@dataclass
class ExperimentReport:
    """Serializable record of one experiment.

    ``wall_clock`` is kept out of :meth:`to_json` unless requested so that
    repeated runs serialise to identical bytes.
    """

    kind: str
    inputs: dict
    outputs: dict
    wall_clock: Optional[float] = None
    schema: str = SCHEMA_VERSION

    def to_json(self, include_timing: bool = False) -> dict:
        out = {"schema": self.schema, "kind": self.kind, "inputs": self.inputs, "outputs": self.outputs}
        if include_timing and self.wall_clock is not None:
            out["wall_clock"] = self.wall_clock
        return out

    @classmethod
    def from_json(cls, data: dict) -> "ExperimentReport":
        if data.get("schema") != SCHEMA_VERSION:
            raise ValueError(f"unsupported report schema {data.get('schema')!r}")
        return cls(data["kind"], data["inputs"], data["outputs"], data.get("wall_clock"))


# --------------------------------------------------------------------------
# ground states


@dataclass(eq=False)
class GroundState:
    """Lowest eigenpair(s) of one strip problem with its diagnostics."""

    E0: float
    spectrum: SpectralResult
    mesh: StripMesh
    forms: AssembledForms
    snapped_atoms: np.ndarray
    snap_error: float

    @property
    def eigenvector(self) -> np.ndarray:
        """Nodal values of the ground state on the full mesh."""
        return self.forms.extend(self.spectrum.eigenvectors[:, 0])

    @property
    def residual(self) -> float:
        return float(self.spectrum.residuals[0])

    def diagnostics(self) -> dict:
        return {
            "n_dof": self.forms.n_dof,
            "n_triangles": self.mesh.n_triangles,
            "method": self.spectrum.method,
            "iterations": self.spectrum.iterations,
            "residuals": self.spectrum.residuals.tolist(),
            "snapped_atoms": self.snapped_atoms.tolist(),
            "snap_error": self.snap_error,
        }


def _atoms_of(config) -> List[float]:
    if config is None:
        return []
    return list(getattr(config, "atoms", config))


def ground_state(
    d: float,
    L: float,
    M: int,
    config=None,
    sigma: SigmaLike = 0.0,
    m: int = 1,
    tol: float = 1e-8,
    method: Optional[str] = None,
) -> GroundState:
    """Lowest eigenvalue of the truncated strip problem.

    Atoms are snapped to the grid of pitch ``d / M``; atoms beyond ``L + d``
    do not meet the truncated domain and are dropped. The strip walls and
    the truncation cut are Dirichlet, the coordinate axes Neumann.
    """
    spec = StripSpec(d, L, M)
    all_atoms = _atoms_of(config)
    inside = [a <= L + d for a in all_atoms]
    atoms = [a for a, keep in zip(all_atoms, inside) if keep]
    profiles = [p for p, keep in zip(per_atom_profiles(sigma, len(all_atoms)), inside) if keep]
    snapped, err = snap_atoms(atoms, spec.h)
    mesh = build_strip_mesh(spec, snapped)
    forms = assemble_hamiltonian(mesh, atoms, profiles)
    spectrum = solve_lowest(forms.A, forms.M, m=m, tol=tol, method=method)
    return GroundState(spectrum.lowest, spectrum, mesh, forms, snapped, err)


def count_below(d: float, L: float, M: int, level: float, config=None, sigma: SigmaLike = 0.0) -> int:
    """Number of eigenvalues of the truncated problem below ``level`` (inertia)."""
    spec = StripSpec(d, L, M)
    atoms = [a for a in _atoms_of(config) if a <= L + d]
    snapped, _ = snap_atoms(atoms, spec.h)
    mesh = build_strip_mesh(spec, snapped)
    forms = assemble_hamiltonian(mesh, atoms, sigma)
    return inertia(forms.A, forms.M, level)


def classify_discrete(E0: float, error_bar: float, d: float, tau: Optional[float] = None) -> str:
    """Decide whether an eigenvalue lies below the essential spectrum.

    ``NONEMPTY`` if ``E0 + error_bar + tau`` is below ``pi^2/(2d^2)``, ``EMPTY``
    if ``E0 - error_bar - tau`` is above it, ``UNDECIDED`` otherwise. Truncated
    eigenvalues are upper bounds, so ``EMPTY`` is only as good as the
    truncation length.
    """
    if error_bar < 0:
        raise ValueError("error bar must be nonnegative")
    tau = default_tau(d) if tau is None else tau
    thr = threshold(d)
    if E0 + error_bar + tau < thr:
        return NONEMPTY
    if E0 - error_bar - tau > thr:
        return EMPTY
    return UNDECIDED


# --------------------------------------------------------------------------
# convergence


@dataclass
class ConvergenceStudy:
    L_list: List[float]
    M_list: List[int]
    table: np.ndarray  # E0[i_L, i_M]
    order: float
    extrapolated: float
    error_bar: float

    def to_json(self) -> dict:
        return {
            "L_list": list(self.L_list),
            "M_list": list(self.M_list),
            "E0": self.table.tolist(),
            "order": self.order,
            "extrapolated": self.extrapolated,
            "error_bar": self.error_bar,
        }


def observed_order(values: Sequence[float], ratios: Sequence[float]) -> float:
    """Convergence order from successive differences under refinement.

    Least-squares slope of ``log |E_k - E_{k+1}|`` against ``log h_k``; with
    uniform ratio ``r`` this is ``log_r`` of the difference ratio.
    """
    v = np.asarray(values, dtype=float)
    diffs = np.abs(np.diff(v))
    if len(diffs) < 2 or np.any(diffs == 0):
        raise ValueError("need three distinct refinement levels to estimate an order")
    log_h = -np.cumsum(np.concatenate([[0.0], np.log(ratios)]))[: len(diffs)]
    slope, _ = np.polyfit(log_h, np.log(diffs), 1)
    return float(slope)


def richardson(coarse: float, fine: float, ratio: float, order: float) -> float:
    return fine + (fine - coarse) / (ratio ** order - 1.0)


def convergence_study(
    d: float,
    config=None,
    sigma: SigmaLike = 0.0,
    L_list: Sequence[float] = (4.0, 6.0, 8.0),
    M_list: Sequence[int] = (8, 16, 32),
    monotone_rtol: float = 1e-9,
) -> ConvergenceStudy:
    """Tabulate ``E0(L, M)`` and extrapolate in ``h`` at the largest ``L``.

    The order used for extrapolation is measured from the three finest
    levels when available (corner singularities of the strip make it smaller
    than 2) and defaults to 2 otherwise. The error bar adds the extrapolation
    gap at ``L_max`` to the last change in ``L`` at the finest pitch.

    Raises
    ------
    SolverError
        If the table is not nonincreasing in ``L`` and in ``M``, which the nested
        discrete spaces guarantee.
    """
    L_list, M_list = list(L_list), list(M_list)
    if sorted(L_list) != L_list or sorted(M_list) != M_list:
        raise ValueError("L and M lists must be ascending")
    table = np.empty((len(L_list), len(M_list)))
    for i, L in enumerate(L_list):
        for j, M in enumerate(M_list):
            table[i, j] = ground_state(d, L, M, config, sigma).E0
    slack = monotone_rtol * np.abs(table).max()
    if np.any(np.diff(table, axis=0) > slack) or np.any(np.diff(table, axis=1) > slack):
        raise SolverError(f"E0 table is not monotone under refinement:\n{table}")

    finest = table[-1]
    ratios = [M_list[k + 1] / M_list[k] for k in range(len(M_list) - 1)]
    if len(M_list) >= 3:
        order = observed_order(finest[-3:], ratios[-2:])
        order = min(max(order, 1.0), 2.0)
    else:
        order = 2.0
    if len(M_list) >= 2:
        extrap = richardson(finest[-2], finest[-1], ratios[-1], order)
    else:
        extrap = finest[-1]
    err = abs(finest[-1] - extrap)
    if len(L_list) >= 2:
        err += abs(table[-1, -1] - table[-2, -1])
    return ConvergenceStudy(L_list, M_list, table, order, float(extrap), float(err))


# --------------------------------------------------------------------------
# Monte-Carlo


def wilson_interval(successes: int, n: int, z: float = WILSON_Z95):
    """Wilson score interval for a binomial proportion."""
    if n <= 0:
        raise ValueError("need at least one trial")
    p = successes / n
    z2 = z * z
    denom = 1.0 + z2 / n
    centre = (p + z2 / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


@dataclass
class MonteCarloResult:
    n: int
    counts: Dict[str, int]
    p_hat: Dict[str, float]
    ci: Dict[str, tuple]
    samples: List[ExperimentReport]
    summary: ExperimentReport


def _mc_sample(args) -> ExperimentReport:
    nu, d, sigma_text, master_seed, index, L, M, tau, tol = args
    cfg = sample_stream(nu, L + d, master_seed, index)
    inputs = {
        "d": d, "L": L, "M": M, "nu": nu, "sigma": sigma_text, "tau": tau, "tol": tol,
        "master_seed": master_seed, "stream_index": index, "seed": cfg.seed,
        "atoms": list(cfg.atoms),
    }
    with threadpool_limits(limits=1):
        try:
            gs = ground_state(d, L, M, cfg, SigmaProfile.parse(sigma_text), tol=tol)
        except (SolverError, np.linalg.LinAlgError) as exc:
            outputs = {"E0": None, "class": UNDECIDED, "error": str(exc)}
            return ExperimentReport("mc_sample", inputs, outputs)
    error_bar = gs.E0 * gs.residual
    cls = classify_discrete(gs.E0, error_bar, d, tau)
    outputs = {
        "E0": gs.E0,
        "error_bar": error_bar,
        "class": cls,
        "residual": gs.residual,
        "n_dof": gs.forms.n_dof,
        "snap_error": gs.snap_error,
    }
    return ExperimentReport("mc_sample", inputs, outputs)


def mc_probability(
    nu: float,
    d: float,
    sigma: SigmaLike,
    N: int,
    master_seed: int,
    L: float = 6.0,
    M: int = 16,
    tau: Optional[float] = None,
    tol: float = 1e-8,
    jobs: int = 1,
) -> MonteCarloResult:
    """Frequencies of the three spectral classes over ``N`` Poisson samples.

    Sample ``i`` uses stream ``derive_stream(master_seed, i)`` and lands in
    result slot ``i`` whatever the worker count, so the output depends only on
    the inputs. Failed solves count as ``UNDECIDED``.
    """
    if N < 1:
        raise ValueError("need at least one sample")
    tau = default_tau(d) if tau is None else float(tau)
    sigma_text = str(sigma if isinstance(sigma, SigmaProfile) else SigmaProfile.constant(float(sigma)))
    tasks = [(float(nu), float(d), sigma_text, int(master_seed), i, float(L), int(M), tau, tol) for i in range(N)]
    t0 = time.perf_counter()
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            samples = list(pool.map(_mc_sample, tasks, chunksize=max(1, N // (4 * jobs))))
    else:
        samples = [_mc_sample(t) for t in tasks]
    wall = time.perf_counter() - t0

    counts = {c: 0 for c in CLASSES}
    for s in samples:
        counts[s.outputs["class"]] += 1
    p_hat = {c: counts[c] / N for c in CLASSES}
    ci = {c: wilson_interval(counts[c], N) for c in CLASSES}
    summary = ExperimentReport(
        "mc_summary",
        {"d": d, "L": L, "M": M, "nu": nu, "sigma": sigma_text, "tau": tau, "tol": tol,
         "master_seed": master_seed, "n": N},
        {"counts": counts, "p_hat": p_hat, "ci95": {c: list(ci[c]) for c in CLASSES}},
        wall_clock=wall,
    )
    return MonteCarloResult(N, counts, p_hat, ci, samples, summary)


# --------------------------------------------------------------------------
# comparison domains and the Robin threshold


def polygon_ground_state(spec: PolygonSpec, tol: float = 1e-8) -> float:
    mesh = build_polygon_mesh(spec)
    forms = assemble_polygon(mesh)
    return solve_lowest(forms.A, forms.M, 1, tol=tol).lowest


def mu_triangle_fem(d: float, a: float, gamma: float, divisions: int = 32) -> float:
    """Inner triangle ``{x, y >= a, x + y <= d}``, Robin legs, by FEM.

    Meshed in local coordinates with ``divisions`` cells along each leg.
    """
    leg = d - 2 * a
    if not leg > 0:
        raise ValueError("need a < d/2")
    h = leg / divisions
    R = robin(gamma)
    spec = PolygonSpec(((0.0, 0.0), (leg, 0.0), (0.0, leg)), (R, NEUMANN, R), h, ANTI)
    return polygon_ground_state(spec)


def subdomain_bounds(d: float, a: float, gamma: float, divisions: int = 32) -> Dict[str, float]:
    """Lower bounds of the four corner-triangle pieces cut at ``a``.

    ``mu1`` the corner square, ``mu2`` the inner triangle (FEM), ``mu3`` and
    ``mu4`` the stem-rectangle bound shared by the two congruent trapezoids.
    """
    a = float(a)
    m3 = mu_hat3(a, gamma, d)
    return {
        "mu1": mu_square(a, gamma),
        "mu2": mu_triangle_fem(d, a, gamma, divisions),
        "mu3": m3,
        "mu4": m3,
    }


def _limit_bounds(d: float, a: float) -> Dict[str, float]:
    a = float(a)
    m3 = mu_hat3(a, math.inf, d)
    return {"mu1": mu_square(a, math.inf), "mu2": 2 * math.pi ** 2 / (d - 2 * a) ** 2, "mu3": m3, "mu4": m3}


def verify_destruction_config(
    d: float,
    a_k: float,
    gamma: float,
    L: float = 6.0,
    M: int = 16,
    tau: Optional[float] = None,
    tol: float = 1e-8,
) -> ExperimentReport:
    """Single-atom check of the destruction mechanism.

    Computes ``E0`` with one atom of strength ``gamma`` at ``a_k`` and the
    subdomain bounds at Robin constant ``gamma / 2``. When every bound clears
    the threshold the classification must not be ``NONEMPTY``.
    """
    t0 = time.perf_counter()
    thr = threshold(d)
    gs = ground_state(d, L, M, [a_k], SigmaProfile.constant(gamma), tol=tol)
    error_bar = gs.E0 * gs.residual
    cls = classify_discrete(gs.E0, error_bar, d, tau)
    if 0 < a_k < d / 2:
        bounds = subdomain_bounds(d, a_k, gamma / 2)
    else:
        bounds = {}
    all_clear = bool(bounds) and all(v > thr for v in bounds.values())
    consistent = (not all_clear) or cls != NONEMPTY
    return ExperimentReport(
        "destruction",
        {"d": d, "a_k": a_k, "gamma": gamma, "L": L, "M": M, "tau": default_tau(d) if tau is None else tau,
         "tol": tol},
        {"E0": gs.E0, "error_bar": error_bar, "class": cls, "threshold": thr, "bounds": bounds,
         "bounds_clear_threshold": all_clear, "chain_consistent": consistent,
         "snapped_atom": gs.snapped_atoms.tolist(), "snap_error": gs.snap_error},
        wall_clock=time.perf_counter() - t0,
    )


@dataclass
class ThresholdEstimate:
    d: float
    eta: float
    delta: float
    a_grid: np.ndarray
    gamma_hat: float
    gamma_lower: float
    margins: Dict[str, float]
    margins_lower: Dict[str, float]
    limit_bounds: Dict[str, float]

    def to_json(self) -> dict:
        return {
            "d": self.d, "eta": self.eta, "delta": self.delta, "a_grid": self.a_grid.tolist(),
            "gamma_hat": self.gamma_hat, "gamma_lower": self.gamma_lower,
            "margins": self.margins, "margins_lower": self.margins_lower,
            "limit_bounds": self.limit_bounds,
        }


def estimate_gamma(
    d: float = 1.0,
    eta: float = 1.05,
    delta: Optional[float] = None,
    n_a: int = 9,
    divisions: int = 32,
    rtol: float = 1e-6,
) -> ThresholdEstimate:
    """Smallest ``gamma`` (to ``rtol``) with every ``mu_l(gamma/2, a)`` above threshold.

    ``a`` ranges over ``n_a`` points of ``[(d/2 - delta)/eta, d/2 - delta]``.
    The predicate is monotone in ``gamma``, so bisection on a doubling bracket
    finds the crossing.

    Raises
    ------
    ValueError
        If even the Dirichlet limits fail, i.e. ``eta`` and ``delta`` are too
        large for the construction.
    """
    delta = 0.02 * d if delta is None else delta
    if not eta > 1:
        raise ValueError("eta must exceed 1")
    if not 0 < delta < d / 4:
        raise ValueError("delta must lie in (0, d/4)")
    thr = threshold(d)
    a_hi = d / 2 - delta
    a_grid = np.linspace(a_hi / eta, a_hi, n_a)

    def min_bounds(gamma):
        out = {k: math.inf for k in ("mu1", "mu2", "mu3", "mu4")}
        for a in a_grid:
            b = _limit_bounds(d, a) if math.isinf(gamma) else subdomain_bounds(d, a, gamma / 2, divisions)
            for k in out:
                out[k] = min(out[k], b[k])
        return out

    def margins(gamma):
        return {k: v - thr for k, v in min_bounds(gamma).items()}

    def ok(gamma):
        return all(v > 0 for v in margins(gamma).values())

    limits = min_bounds(math.inf)
    if not all(v > thr for v in limits.values()):
        raise ValueError(f"Dirichlet limits {limits} do not clear pi^2/(2d^2) = {thr}; shrink eta or delta")

    hi = 1.0 / d
    while not ok(hi):
        hi *= 2.0
        if hi > 1e12 / d:
            raise ValueError("no finite threshold found")
    lo = hi / 2.0
    while ok(lo):
        hi, lo = lo, lo / 2.0
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return ThresholdEstimate(d, eta, delta, a_grid, hi, lo, margins(hi), margins(lo), limits)


# --------------------------------------------------------------------------
# rectangle scaling harnesses


@dataclass
class PropertyCheck:
    name: str
    trials: int
    violations: int
    min_slack: float
    identity_max_error: float

    def to_json(self) -> dict:
        return dict(self.__dict__)


_SIDES = ("LEFT", "RIGHT", "BOTTOM", "TOP")


def robin_rectangle_quotient(mesh: StripMesh, u: np.ndarray, sigmas: Sequence[float]) -> float:
    """``(∫|grad u|^2 + sum_j sigma_j ∫_{side j} u^2) / ∫ u^2`` for a rectangle mesh."""
    K = assemble_stiffness(mesh)
    for side, s in zip(_SIDES, sigmas):
        K = K + assemble_trace(mesh, side, float(s))
    return rayleigh_quotient(K, assemble_mass(mesh), u)


def _scaled(mesh: StripMesh, alpha: float, beta: float) -> StripMesh:
    return StripMesh(
        nodes=mesh.nodes * np.array([alpha, beta]),
        triangles=mesh.triangles.copy(),
        edge_groups={k: v.copy() for k, v in mesh.edge_groups.items()},
        h=mesh.h * min(alpha, beta),
    )


def _random_rectangle_trial(rng: np.random.Generator):
    x0 = rng.uniform(0.0, 2.0)
    y0 = rng.uniform(0.0, 2.0)
    x1 = x0 + rng.uniform(0.2, 2.0)
    y1 = y0 + rng.uniform(0.2, 2.0)
    nx, ny = int(rng.integers(2, 9)), int(rng.integers(2, 9))
    mesh = rectangle_mesh(x0, x1, y0, y1, nx, ny, jitter=0.15, rng=rng)
    u = rng.standard_normal(mesh.n_nodes)
    sigmas = rng.uniform(0.0, 10.0, size=4) * (rng.random(4) < 0.8)
    return mesh, u, sigmas


def check_prop_A1(trials: int = 1000, seed: int = 0, tol: float = 1e-10) -> PropertyCheck:
    """Enlarging a Robin rectangle by ``alpha, beta >= 1`` cannot raise the quotient.

    Each trial draws a rectangle, a jittered mesh, random nodal values and
    Robin constants; the scaled function keeps its nodal values on the mesh
    with coordinates multiplied by ``(alpha, beta)``. Every tenth trial uses
    the identity scaling.
    """
    violations, slack_min, ident = 0, math.inf, 0.0
    for t in range(trials):
        rng = np.random.Generator(np.random.PCG64(derive_stream(seed, t)))
        mesh, u, sigmas = _random_rectangle_trial(rng)
        if t % 10 == 0:
            alpha = beta = 1.0
        else:
            alpha, beta = rng.uniform(1.0, 3.0, size=2)
        q1 = robin_rectangle_quotient(mesh, u, sigmas)
        q2 = robin_rectangle_quotient(_scaled(mesh, alpha, beta), u, sigmas)
        slack = q1 - q2
        if slack < -tol:
            violations += 1
        if alpha == beta == 1.0:
            ident = max(ident, abs(slack) / abs(q1))
        else:
            slack_min = min(slack_min, slack)
    return PropertyCheck("A1", trials, violations, slack_min, ident)


def check_prop_A2(
    trials: int = 1000, seed: int = 0, tol: float = 1e-10, tightest: bool = False
) -> PropertyCheck:
    """Stretch by ``alpha >= 1`` and shrink by ``1 > beta > lam > 0``: the quotient
    drops by at most the factor ``lam^2``.

    With ``tightest`` every trial uses ``lam = beta - 1e-6``.
    """
    violations, slack_min, ident = 0, math.inf, 0.0
    for t in range(trials):
        rng = np.random.Generator(np.random.PCG64(derive_stream(seed, t)))
        mesh, u, sigmas = _random_rectangle_trial(rng)
        alpha = 1.0 if t % 10 == 0 else rng.uniform(1.0, 3.0)
        beta = rng.uniform(0.05, 1.0)
        lam = beta - 1e-6 if tightest else rng.uniform(0.0, beta)
        q1 = robin_rectangle_quotient(mesh, u, sigmas)
        q2 = robin_rectangle_quotient(_scaled(mesh, alpha, beta), u, sigmas)
        slack = q1 - lam * lam * q2
        slack_min = min(slack_min, slack)
        if slack < -tol:
            violations += 1
    return PropertyCheck("A2", trials, violations, slack_min, ident)


# --------------------------------------------------------------------------
# single runs and replay


def solve_report(
    d: float,
    L: float,
    M: int,
    config=None,
    sigma: SigmaLike = 0.0,
    m: int = 1,
    tol: float = 1e-8,
    tau: Optional[float] = None,
) -> ExperimentReport:
    """Ground-state run packaged with everything needed to repeat it."""
    t0 = time.perf_counter()
    atoms = _atoms_of(config)
    sigma = sigma if isinstance(sigma, SigmaProfile) else SigmaProfile.constant(float(sigma))
    tau = default_tau(d) if tau is None else float(tau)
    gs = ground_state(d, L, M, atoms, sigma, m=m, tol=tol)
    error_bar = gs.E0 * gs.residual
    inputs = {"d": d, "L": L, "M": M, "sigma": str(sigma), "atoms": [float(a) for a in atoms],
              "m": m, "tol": tol, "tau": tau}
    if isinstance(config, AtomConfiguration):
        inputs.update(nu=config.nu, seed=config.seed, master_seed=config.master_seed,
                      stream_index=config.stream_index)
    outputs = {
        "E0": gs.E0,
        "eigenvalues": gs.spectrum.eigenvalues.tolist(),
        "error_bar": error_bar,
        "class": classify_discrete(gs.E0, error_bar, d, tau),
        "diagnostics": gs.diagnostics(),
    }
    return ExperimentReport("solve", inputs, outputs, wall_clock=time.perf_counter() - t0)


def replay(report: ExperimentReport) -> ExperimentReport:
    """Re-run a ``solve``, ``mc_sample`` or ``destruction`` report from its inputs."""
    i = report.inputs
    if report.kind == "solve":
        return solve_report(i["d"], i["L"], i["M"], i["atoms"], SigmaProfile.parse(i["sigma"]),
                            m=i["m"], tol=i["tol"], tau=i["tau"])
    if report.kind == "mc_sample":
        return _mc_sample((i["nu"], i["d"], i["sigma"], i["master_seed"], i["stream_index"],
                           i["L"], i["M"], i["tau"], i["tol"]))
    if report.kind == "destruction":
        return verify_destruction_config(i["d"], i["a_k"], i["gamma"], i["L"], i["M"], i["tau"], i["tol"])
    raise ValueError(f"reports of kind {report.kind!r} cannot be replayed")


def eigenvalues_of(report: ExperimentReport) -> List[float]:
    o = report.outputs
    if "eigenvalues" in o:
        return list(o["eigenvalues"])
    return [o.get("E0")]
