"""scikit-learn style front end.

Samples are atom configurations: an ``AtomConfiguration``, or any sequence of
positive ascending atom positions. ``X`` is a list of such samples.

>>> est = GroundStateEstimator(d=1.0, L=4.0, M=4).fit()
>>> E = est.transform([[], [3.0]])
>>> E.shape
(2, 1)
"""
from __future__ import annotations

import math
from typing import List

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .assembly import SigmaProfile
from .experiments import classify_discrete, default_tau, ground_state, threshold
from .geometry import StripSpec


def check_configurations(X) -> List[tuple]:
    """Validate a batch of configurations and return them as atom tuples."""
    if isinstance(X, np.ndarray) and X.ndim == 1 and X.dtype != object:
        raise ValueError("X must be a list of configurations, not a single atom array")
    out = []
    for k, sample in enumerate(X):
        atoms = tuple(float(a) for a in getattr(sample, "atoms", sample))
        if any(not math.isfinite(a) or a <= 0 for a in atoms):
            raise ValueError(f"sample {k}: atoms must be finite and positive")
        if any(b <= a for a, b in zip(atoms, atoms[1:])):
            raise ValueError(f"sample {k}: atoms must be strictly ascending")
        out.append(atoms)
    return out


def check_sigma(sigma) -> SigmaProfile:
    if isinstance(sigma, SigmaProfile):
        return sigma
    if isinstance(sigma, str):
        return SigmaProfile.parse(sigma)
    return SigmaProfile.constant(float(sigma))


class GroundStateEstimator(TransformerMixin, BaseEstimator):
    """Map configurations to the lowest eigenvalues of the truncated strip.

    Parameters
    ----------
    d : float
        Molecule width.
    L : float
        Truncation length, a multiple of ``d / M`` with ``L >= 4 d``.
    M : int
        Grid cells across the molecule width.
    sigma : float, str or SigmaProfile
        Interaction strength applied to every atom.
    n_eigs : int
        Number of eigenvalues per configuration.
    tol : float
        Residual tolerance of the eigensolver.
    """

    def __init__(self, d=1.0, L=6.0, M=16, sigma=0.0, n_eigs=1, tol=1e-8):
        self.d = d
        self.L = L
        self.M = M
        self.sigma = sigma
        self.n_eigs = n_eigs
        self.tol = tol

    def _validate_params(self):
        StripSpec(self.d, self.L, self.M)
        if int(self.n_eigs) != self.n_eigs or self.n_eigs < 1:
            raise ValueError("n_eigs must be a positive integer")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        return check_sigma(self.sigma)

    def fit(self, X=None, y=None):
        """Validate parameters. Nothing is learned from ``X``."""
        self.sigma_ = self._validate_params()
        self.threshold_ = threshold(self.d)
        return self

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "sigma_")
        configs = check_configurations(X)
        out = np.empty((len(configs), self.n_eigs))
        for k, atoms in enumerate(configs):
            gs = ground_state(self.d, self.L, self.M, atoms, self.sigma_, m=self.n_eigs, tol=self.tol)
            out[k] = gs.spectrum.eigenvalues
        return out


class DiscreteSpectrumClassifier(BaseEstimator):
    """Label configurations ``NONEMPTY``, ``EMPTY`` or ``UNDECIDED``.

    ``tau`` defaults to 5% of the threshold ``pi^2 / (2 d^2)``.
    """

    def __init__(self, d=1.0, L=6.0, M=16, sigma=0.0, tau=None, tol=1e-8):
        self.d = d
        self.L = L
        self.M = M
        self.sigma = sigma
        self.tau = tau
        self.tol = tol

    def fit(self, X=None, y=None):
        self.ground_state_ = GroundStateEstimator(self.d, self.L, self.M, self.sigma, 1, self.tol).fit()
        self.tau_ = default_tau(self.d) if self.tau is None else float(self.tau)
        if self.tau_ < 0:
            raise ValueError("tau must be nonnegative")
        self.classes_ = np.array(["NONEMPTY", "EMPTY", "UNDECIDED"])
        return self

    def decision_function(self, X) -> np.ndarray:
        """Signed gap ``threshold - E0``; positive means a bound state."""
        check_is_fitted(self, "ground_state_")
        return self.ground_state_.threshold_ - self.ground_state_.transform(X)[:, 0]

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "ground_state_")
        configs = check_configurations(X)
        labels = []
        for atoms in configs:
            gs = ground_state(self.d, self.L, self.M, atoms, self.ground_state_.sigma_, tol=self.tol)
            labels.append(classify_discrete(gs.E0, gs.E0 * gs.residual, self.d, self.tau_))
        return np.array(labels)
