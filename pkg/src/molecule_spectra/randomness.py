"""Poisson atom configurations with reproducible per-sample random streams.

Stream derivation
-----------------
``derive_stream(master_seed, index)`` is the SplitMix64 finaliser applied to
``master_seed + (index + 1) * 0x9E3779B97F4A7C15 (mod 2**64)``::

    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    z =  z ^ (z >> 31)

all arithmetic modulo ``2**64``. The finaliser is a bijection of 64-bit words,
so distinct indices below ``2**64`` always give distinct seeds.

Sampling
--------
A derived seed initialises numpy's ``PCG64`` bit generator. Each gap draws a
53-bit integer ``k`` and uses ``u = (k + 0.5) / 2**53``, which lies strictly
inside ``(0, 1)``; the gap is ``-log(u) / nu``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(z: int) -> int:
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def derive_stream(master_seed: int, index: int) -> int:
    """64-bit seed of the ``index``-th independent stream under ``master_seed``."""
    if index < 0:
        raise ValueError("stream index must be nonnegative")
    return splitmix64((int(master_seed) + (int(index) + 1) * _GOLDEN) & _MASK)


@dataclass(frozen=True)
class AtomConfiguration:
    """One realisation of the atom process on ``(0, horizon]``."""

    nu: float
    atoms: Tuple[float, ...]
    horizon: float
    master_seed: int = 0
    stream_index: int = 0
    seed: int = field(default=0)

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(float(a) for a in self.atoms))
        a = np.asarray(self.atoms)
        if len(a) and (a[0] <= 0 or a[-1] > self.horizon or np.any(np.diff(a) <= 0)):
            raise ValueError("atoms must be strictly ascending inside (0, horizon]")

    @classmethod
    def fixed(cls, atoms, horizon: float | None = None, nu: float = 1.0) -> "AtomConfiguration":
        """A hand-placed configuration (no random provenance)."""
        atoms = tuple(atoms)
        if horizon is None:
            horizon = max(atoms) if atoms else 1.0
        return cls(nu=nu, atoms=atoms, horizon=horizon)

    def to_json(self) -> dict:
        # floats serialise via repr, which round-trips exactly
        return {
            "nu": self.nu,
            "seed": self.seed,
            "master_seed": self.master_seed,
            "stream_index": self.stream_index,
            "horizon": self.horizon,
            "atoms": list(self.atoms),
        }

    @classmethod
    def from_json(cls, data: dict) -> "AtomConfiguration":
        return cls(
            nu=float(data["nu"]),
            atoms=tuple(data["atoms"]),
            horizon=float(data["horizon"]),
            master_seed=int(data.get("master_seed", 0)),
            stream_index=int(data.get("stream_index", 0)),
            seed=int(data.get("seed", 0)),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json())


def open_uniform(rng: np.random.Generator, size=None):
    """Uniform variates strictly inside ``(0, 1)``."""
    k = rng.integers(0, 1 << 53, size=size, dtype=np.int64)
    return (k + 0.5) * (1.0 / (1 << 53))


def sample_configuration(nu: float, horizon: float, seed: int) -> AtomConfiguration:
    """Atoms of a Poisson process of intensity ``nu`` on ``(0, horizon]``.

    Gaps are i.i.d. exponential with rate ``nu``; sampling stops at the first
    partial sum exceeding ``horizon``, which is not kept.
    """
    if not nu > 0:
        raise ValueError("intensity nu must be positive")
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    rng = np.random.Generator(np.random.PCG64(int(seed) & _MASK))
    atoms = []
    position = 0.0
    while True:
        position += -np.log(open_uniform(rng)) / nu
        if position > horizon:
            break
        atoms.append(float(position))
    return AtomConfiguration(nu=float(nu), atoms=tuple(atoms), horizon=float(horizon), seed=int(seed) & _MASK)


def sample_stream(nu: float, horizon: float, master_seed: int, index: int) -> AtomConfiguration:
    """Sample configuration number ``index`` of a Monte-Carlo run."""
    seed = derive_stream(master_seed, index)
    cfg = sample_configuration(nu, horizon, seed)
    return AtomConfiguration(
        nu=cfg.nu,
        atoms=cfg.atoms,
        horizon=cfg.horizon,
        master_seed=int(master_seed) & _MASK,
        stream_index=int(index),
        seed=seed,
    )
