"""
Source-mass wavefunctions and the Newtonian force they induce on a point probe.

A localized mass is a 3-D Gaussian with position spread ``sigma``; a cat state
is a superposition of two such packets centred at +L/2 (branch ``+``) and
-L/2 (branch ``-``). Because the source position is a random variable, so is
the force on a nearby mass; ``force_statistics`` estimates its mean and
covariance by Monte Carlo.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .quantities import G

__all__ = [
    "CatStateSpec",
    "ForceStatistics",
    "CoincidentPoints",
    "MixtureApproximationWarning",
    "ProximityWarning",
    "density",
    "newton_force",
    "force_statistics",
]

# samples per RNG partition; fixed so results do not depend on worker count
PARTITION_SIZE = 1 << 16


class CoincidentPoints(ValueError):
    """Probe and source closer than the caller-supplied floor."""


class MixtureApproximationWarning(UserWarning):
    """Sampling drops the interference term, which matters when L < 8 sigma."""


class ProximityWarning(UserWarning):
    """Probe sits within 3 sigma of a Gaussian core."""


@dataclass(frozen=True)
class CatStateSpec:
    M: float
    sigma: float
    L: np.ndarray = field(default_factory=lambda: np.zeros(3))
    nu: float = 0.0
    c_plus: complex = 1 / math.sqrt(2)
    c_minus: complex = 1 / math.sqrt(2)

    def __post_init__(self):
        L = np.asarray(self.L, dtype=float).reshape(3)
        L.setflags(write=False)
        object.__setattr__(self, "L", L)
        if not self.M > 0:
            raise ValueError("M must be positive")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if self.nu < 0:
            raise ValueError("nu must be non-negative")
        weight = abs(self.c_plus) ** 2 + abs(self.c_minus) ** 2
        if abs(weight - 1.0) > 1e-12:
            raise ValueError(f"|c+|^2 + |c-|^2 = {weight!r}, expected 1")

    @classmethod
    def localized(cls, M: float, sigma: float) -> "CatStateSpec":
        """Single Gaussian at the origin."""
        return cls(M=M, sigma=sigma, L=np.zeros(3), c_plus=1.0, c_minus=0.0)

    @property
    def centers(self) -> tuple[np.ndarray, np.ndarray]:
        return self.L / 2, -self.L / 2

    @property
    def overlap(self) -> float:
        """<phi_+|phi_-> for the two unit-normalized packets."""
        return math.exp(-float(self.L @ self.L) / (8 * self.sigma**2))

    @property
    def norm(self) -> float:
        cross = (np.conj(self.c_plus) * self.c_minus).real
        return 1.0 + 2.0 * cross * self.overlap


@dataclass(frozen=True)
class ForceStatistics:
    mean: np.ndarray
    covariance: np.ndarray
    n_samples: int
    std_error: np.ndarray


def _packet(x: np.ndarray, center: np.ndarray, sigma: float) -> np.ndarray:
    r2 = np.sum((x - center) ** 2, axis=-1)
    return (2 * np.pi * sigma**2) ** -0.75 * np.exp(-r2 / (4 * sigma**2))


def density(spec: CatStateSpec, x) -> np.ndarray | float:
    """Probability density |psi(x)|^2 in m^-3.

    ``x`` may be a single 3-vector or an array of shape (..., 3). The
    superposition is renormalized by its exact norm, so the density integrates
    to one even when the packets overlap.
    """
    x = np.asarray(x, dtype=float)
    plus, minus = spec.centers
    psi = spec.c_plus * _packet(x, plus, spec.sigma) + spec.c_minus * _packet(x, minus, spec.sigma)
    rho = np.abs(psi) ** 2 / spec.norm
    return float(rho) if rho.ndim == 0 else rho


def newton_force(x, R, M: float, m: float, floor: float = 0.0) -> np.ndarray:
    """Force on a probe of mass ``m`` at ``R`` from a point mass ``M`` at ``x``.

    Vectorized over leading axes of ``x``. Raises ``CoincidentPoints`` when any
    separation is below ``floor`` (or exactly zero).
    """
    x = np.asarray(x, dtype=float)
    R = np.asarray(R, dtype=float)
    d = R - x
    r = np.sqrt(np.sum(d * d, axis=-1, keepdims=True))
    if np.any(r <= floor) or np.any(r == 0):
        raise CoincidentPoints(f"probe within {floor!r} m of the source point")
    return -G * M * m * d / r**3


def _sample_positions(spec: CatStateSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    p_plus = abs(spec.c_plus) ** 2
    branch = rng.random(n) < p_plus
    plus, minus = spec.centers
    centers = np.where(branch[:, None], plus, minus)
    # |phi|^2 is a normal with standard deviation sigma per axis
    return centers + spec.sigma * rng.standard_normal((n, 3))


def force_statistics(
    spec: CatStateSpec,
    R,
    m: float,
    n_samples: int = 100_000,
    seed: int = 0,
    floor: float | None = None,
) -> ForceStatistics:
    """Monte Carlo mean and covariance of the Newtonian force on a probe at ``R``.

    The mixture is sampled branch-by-branch with probabilities |c+|^2, |c-|^2;
    the interference term of |psi|^2 is neglected (exponentially small in
    L^2/sigma^2). Samples are drawn in fixed-size partitions, each with its own
    stream keyed by ``(seed, partition)``.
    """
    if n_samples < 1000:
        raise ValueError("n_samples must be at least 1000")
    R = np.asarray(R, dtype=float).reshape(3)
    Lmag = float(np.linalg.norm(spec.L))
    if 0 < Lmag < 8 * spec.sigma and abs(spec.c_plus) > 0 and abs(spec.c_minus) > 0:
        warnings.warn(
            f"|L| = {Lmag:.3g} m is below 8 sigma; branch sampling ignores interference",
            MixtureApproximationWarning,
            stacklevel=2,
        )
    for c in spec.centers:
        if np.linalg.norm(R - c) < 3 * spec.sigma:
            warnings.warn("probe lies within 3 sigma of a Gaussian core", ProximityWarning, stacklevel=2)
            break
    if floor is None:
        floor = 1e-3 * spec.sigma

    total = np.zeros(3)
    total_sq = np.zeros((3, 3))
    shift = newton_force(np.zeros(3), R, spec.M, m)  # centring improves the summation
    for part, start in enumerate(range(0, n_samples, PARTITION_SIZE)):
        count = min(PARTITION_SIZE, n_samples - start)
        rng = np.random.default_rng([seed, part])
        f = newton_force(_sample_positions(spec, count, rng), R, spec.M, m, floor) - shift
        total += f.sum(axis=0)
        total_sq += f.T @ f

    n = n_samples
    mean_c = total / n
    cov = (total_sq - n * np.outer(mean_c, mean_c)) / (n - 1)
    cov = (cov + cov.T) / 2
    return ForceStatistics(
        mean=mean_c + shift,
        covariance=cov,
        n_samples=n,
        std_error=np.sqrt(np.clip(np.diag(cov), 0.0, None) / n),
    )
