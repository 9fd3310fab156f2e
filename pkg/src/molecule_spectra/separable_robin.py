"""Ground-state eigenvalues of Robin Laplacians on intervals and rectangles.

Sign convention: the Robin form adds ``+gamma * |u|^2`` on the boundary, so the
natural condition is ``du/dn + gamma u = 0`` with ``n`` the outward normal.
``gamma = 0`` is Neumann, ``gamma = inf`` Dirichlet.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

from scipy.optimize import brentq

Condition = Union[str, float]

_BISECT_EPS = 1e-15
_BISECT_MAXITER = 200


def robin_root(length: float, gamma: float) -> float:
    """Lowest eigenvalue of ``-u''`` on ``[0, length]``, Neumann left, Robin right.

    For ``0 < gamma < inf`` this is the root ``mu`` of
    ``sqrt(mu) * tan(sqrt(mu) * length) = gamma`` with
    ``sqrt(mu) * length`` in ``(0, pi/2)``, found by bisection.

    >>> robin_root(1.0, 0.0)
    0.0
    >>> round(robin_root(1.0, math.inf), 10) == round(math.pi ** 2 / 4, 10)
    True
    """
    if not length > 0:
        raise ValueError("interval length must be positive")
    if gamma < 0 or math.isnan(gamma):
        raise ValueError("Robin constant must be nonnegative")
    top = (math.pi / (2.0 * length)) ** 2
    if gamma == 0:
        return 0.0
    if math.isinf(gamma):
        return top

    def excess(mu):
        k = math.sqrt(mu)
        return k * math.tan(k * length) - gamma

    lo, hi = 0.0, top * (1.0 - _BISECT_EPS)
    for _ in range(_BISECT_MAXITER):
        mid = 0.5 * (lo + hi)
        if excess(mid) < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * hi:
            break
    return 0.5 * (lo + hi)


def mu_square(a: float, gamma: float) -> float:
    """Ground state on ``[0, a]^2``: Robin on ``x = a``, ``y = a``, Neumann on the axes."""
    return 2.0 * robin_root(a, gamma)


def mu_hat3(a: float, gamma: float, d: float) -> float:
    """Ground state on ``[0, a] x [a, 2d - a]`` with Robin on top and bottom.

    By symmetry about ``y = d`` this is the Neumann-Robin interval of length
    ``d - a``; the ``x`` direction is Neumann on both ends and contributes 0.
    """
    if not 0 < a < d:
        raise ValueError("need 0 < a < d")
    return robin_root(d - a, gamma)


def triangle_leg(eta: float, delta: float, d: float) -> float:
    """Leg length ``d (1 - 1/eta) + 2 delta / eta`` of the inner triangle at the smallest cut."""
    return d * (1.0 - 1.0 / eta) + 2.0 * delta / eta


def mu_triangle_dirichlet_limit(eta: float, delta: float, d: float) -> float:
    """``2 pi^2 / l^2``: the isosceles right triangle with Dirichlet legs of length ``l``."""
    if not eta > 1:
        raise ValueError("eta must exceed 1")
    if not 0 <= delta < d / 2:
        raise ValueError("delta must lie in [0, d/2)")
    leg = triangle_leg(eta, delta, d)
    return 2.0 * math.pi ** 2 / leg ** 2


def _bc_coefficients(bc: Condition):
    """``(alpha, beta)`` with the condition written ``alpha du/dn + beta u = 0``."""
    if bc == "NEUMANN":
        return 1.0, 0.0
    if bc == "DIRICHLET":
        return 0.0, 1.0
    g = float(bc)
    if g < 0:
        raise ValueError("Robin constant must be nonnegative")
    if math.isinf(g):
        return 0.0, 1.0
    return 1.0, g


@dataclass(frozen=True)
class RobinInterval:
    """``-u''`` on ``[0, length]``; each end is ``"NEUMANN"``, ``"DIRICHLET"`` or a Robin constant."""

    length: float
    left: Condition = "NEUMANN"
    right: Condition = "NEUMANN"

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError("interval length must be positive")
        _bc_coefficients(self.left)
        _bc_coefficients(self.right)

    def lowest_eigenvalue(self) -> float:
        """Smallest root ``k^2`` of the characteristic equation.

        With ``u = alpha_l k cos(kx) + beta_l sin(kx)`` the left condition holds
        identically; the right one reads
        ``alpha_r k (beta_l cos - alpha_l k sin) + beta_r (alpha_l k cos + beta_l sin) = 0``
        at ``k * length``.
        """
        al, bl = _bc_coefficients(self.left)
        ar, br = _bc_coefficients(self.right)
        ell = self.length
        if bl == 0 and br == 0:
            return 0.0

        def char(k):
            c, s = math.cos(k * ell), math.sin(k * ell)
            return ar * k * (bl * c - al * k * s) + br * (al * k * c + bl * s)

        def reduced(k):
            # removes the spurious root at k = 0
            return char(k) / k

        # the Dirichlet-Dirichlet root pi/length bounds every ground state
        kmax = 1.01 * math.pi / ell
        grid = [kmax * j / 512 for j in range(1, 513)]
        prev_k, prev_v = grid[0], reduced(grid[0])
        if prev_v == 0:
            return prev_k ** 2
        for k in grid[1:]:
            v = reduced(k)
            if v == 0:
                return k ** 2
            if (v > 0) != (prev_v > 0):
                root = brentq(reduced, prev_k, k, xtol=1e-15, rtol=1e-15, maxiter=500)
                return root ** 2
            prev_k, prev_v = k, v
        raise ArithmeticError("no eigenvalue found below (pi/length)^2")
