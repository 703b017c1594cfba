"""
Force statistics seen by a fixed classical probe near a two-branch cat.

The probe feels a horizontal force of +f0 or -f0 depending on which minimum
the source occupies. Under repeated measurement with resolution ``tau`` the
branch label relaxes with rate ``Gamma = nu^2 tau / 2``; the mean force decays
as ``-f0 exp(-Gamma t)`` and the two-time correlation as
``f0^2 exp(-Gamma |t' - t|)``.

``simulate_telegraph`` reproduces those statistics with a two-state Markov
jump process whose flip rate is Gamma/2 in each state: the master equation
for p+ - p- then reads d/dt (p+ - p-) = -Gamma (p+ - p-).
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from .quantities import G

__all__ = [
    "ClassicalProbeSpec",
    "TelegraphEnsemble",
    "TelegraphStatistics",
    "DegenerateGeometry",
    "StepTooCoarse",
    "InsufficientData",
    "probe_distance",
    "f0",
    "decay_constant",
    "mean_force",
    "force_correlation",
    "simulate_telegraph",
    "estimate_statistics",
]

# trajectories per RNG stream; the stream for block b is keyed by (seed, b)
BLOCK_SIZE = 4096


class DegenerateGeometry(ValueError):
    pass


class StepTooCoarse(ValueError):
    pass


class InsufficientData(ValueError):
    pass


@dataclass(frozen=True)
class ClassicalProbeSpec:
    m: float
    y: float
    tau: float

    def __post_init__(self):
        if not self.m > 0:
            raise ValueError("probe mass must be positive")
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if self.y < 0:
            raise ValueError("y must be non-negative")


def probe_distance(y: float, L: float) -> float:
    """Distance from a potential minimum to the probe, sqrt(y^2 + L^2/4)."""
    if y < 0 or L < 0:
        raise ValueError("y and L must be non-negative")
    if y == 0 and L == 0:
        raise DegenerateGeometry("probe coincides with the trap centre (y = L = 0)")
    return math.hypot(y, L / 2)


def f0(M: float, m: float, L: float, D: float) -> float:
    """Differential force amplitude G M m L / (2 D^3)."""
    return G * M * m * L / (2 * D**3)


def decay_constant(nu: float, tau: float) -> float:
    if nu < 0 or not tau > 0:
        raise ValueError("need nu >= 0 and tau > 0")
    return nu * nu * tau / 2


def mean_force(t, f0: float, Gamma: float):
    return -f0 * np.exp(-Gamma * np.asarray(t, dtype=float))


def force_correlation(t, t_prime, f0: float, Gamma: float):
    lag = np.abs(np.asarray(t_prime, dtype=float) - np.asarray(t, dtype=float))
    return f0 * f0 * np.exp(-Gamma * lag)


@dataclass(frozen=True)
class TelegraphEnsemble:
    """Force trajectories sampled on a uniform grid.

    ``trajectories`` has shape (n_traj, n_times); every entry is exactly
    +f0 or -f0.
    """

    times: np.ndarray
    trajectories: np.ndarray
    seed: int
    f0: float
    Gamma: float

    @property
    def n_traj(self) -> int:
        return self.trajectories.shape[0]

    @classmethod
    def from_flip_times(cls, times, flip_times, f0: float, initial: int = -1, Gamma: float = 0.0):
        """Build an ensemble from explicit flip instants, one list per trajectory."""
        times = np.asarray(times, dtype=float)
        rows = []
        for flips in flip_times:
            n = np.searchsorted(np.sort(np.asarray(flips, dtype=float)), times, side="right")
            rows.append(np.where(n % 2 == 0, initial * f0, -initial * f0))
        return cls(times=times, trajectories=np.array(rows, dtype=float), seed=-1, f0=f0, Gamma=Gamma)

    def to_csv(self, path=None) -> str:
        """CSV with header ``t,traj_0,...``; returns the text and writes it if ``path`` is given."""
        buf = io.StringIO()
        header = "t," + ",".join(f"traj_{i}" for i in range(self.n_traj))
        data = np.column_stack([self.times, self.trajectories.T])
        np.savetxt(buf, data, delimiter=",", header=header, comments="", fmt="%.17g")
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def _flip_counts(rate: float, times: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """Number of flips up to each grid time, from exponential waiting times."""
    t_max = times[-1]
    # enough waiting times for most rows; rows that fall short get extended
    k = max(4, int(rate * t_max + 6 * math.sqrt(rate * t_max + 1) + 4))
    arrivals = np.cumsum(rng.exponential(1.0 / rate, size=(n, k)), axis=1)
    while True:
        short = arrivals[:, -1] <= t_max
        if not short.any():
            break
        more = arrivals[:, -1:] + np.cumsum(rng.exponential(1.0 / rate, size=(n, k)), axis=1)
        arrivals = np.concatenate([arrivals, more], axis=1)
    counts = np.empty((n, times.size), dtype=np.int64)
    for i in range(n):
        counts[i] = np.searchsorted(arrivals[i], times, side="right")
    return counts


def simulate_telegraph(
    f0: float,
    Gamma: float,
    dt: float,
    t_max: float,
    n_traj: int,
    seed: int = 0,
    initial: int = -1,
) -> TelegraphEnsemble:
    """Sample the +-f0 telegraph force on the grid 0, dt, ..., t_max.

    Flips occur at rate Gamma/2 from either state, drawn as exact exponential
    waiting times; the grid only reads the resulting path. Every trajectory
    starts at ``initial * f0`` (default -f0).
    """
    if n_traj < 1:
        raise ValueError("n_traj must be at least 1")
    if Gamma < 0:
        raise ValueError("Gamma must be non-negative")
    if Gamma > 0 and dt > 0.1 / Gamma:
        raise StepTooCoarse(f"dt = {dt!r} s exceeds 0.1/Gamma = {0.1 / Gamma!r} s")
    if initial not in (-1, 1):
        raise ValueError("initial must be -1 or +1")
    n_steps = int(round(t_max / dt))
    times = np.arange(n_steps + 1) * dt

    out = np.empty((n_traj, times.size))
    for block, start in enumerate(range(0, n_traj, BLOCK_SIZE)):
        n = min(BLOCK_SIZE, n_traj - start)
        if Gamma == 0:
            counts = np.zeros((n, times.size), dtype=np.int64)
        else:
            counts = _flip_counts(Gamma / 2, times, n, np.random.default_rng([seed, block]))
        out[start:start + n] = np.where(counts % 2 == 0, initial * f0, -initial * f0)
    return TelegraphEnsemble(times=times, trajectories=out, seed=seed, f0=f0, Gamma=Gamma)


@dataclass(frozen=True)
class TelegraphStatistics:
    times: np.ndarray
    mean: np.ndarray
    mean_stderr: np.ndarray
    lags: np.ndarray
    autocorr: np.ndarray
    autocorr_stderr: np.ndarray
    burn_in: float


def estimate_statistics(ensemble: TelegraphEnsemble, burn_in: float | None = None) -> TelegraphStatistics:
    """Pointwise ensemble mean and time-origin-averaged autocorrelation.

    The autocorrelation at each lag averages F(t0) F(t0 + lag) over origins
    t0 >= ``burn_in`` within each trajectory; its standard error comes from
    the spread of those per-trajectory averages, which are independent.

    ``burn_in`` defaults to 5/Gamma when that leaves at least half the grid,
    and to 0 otherwise. F(t)^2 = f0^2 on every path, so the two-point product
    has the stationary law from the first instant and the short-record
    fallback is exact.
    """
    n = ensemble.n_traj
    if n < 2:
        raise InsufficientData("at least two trajectories are needed for standard errors")
    times = ensemble.times
    traj = ensemble.trajectories
    dt = times[1] - times[0] if times.size > 1 else 1.0
    if burn_in is None:
        tail = 5.0 / ensemble.Gamma if ensemble.Gamma > 0 else 0.0
        burn_in = tail if tail <= times[-1] / 2 else 0.0
    i0 = int(np.searchsorted(times, burn_in - 1e-9 * dt))

    mean = traj.mean(axis=0)
    mean_stderr = traj.std(axis=0, ddof=1) / math.sqrt(n)

    window = traj[:, i0:]
    n_lags = window.shape[1]
    lags = np.arange(n_lags) * dt
    autocorr = np.empty(n_lags)
    autocorr_se = np.empty(n_lags)
    for k in range(n_lags):
        per_traj = (window[:, : n_lags - k] * window[:, k:]).mean(axis=1)
        autocorr[k] = per_traj.mean()
        autocorr_se[k] = per_traj.std(ddof=1) / math.sqrt(n)
    return TelegraphStatistics(
        times=times,
        mean=mean,
        mean_stderr=mean_stderr,
        lags=lags,
        autocorr=autocorr,
        autocorr_stderr=autocorr_se,
        burn_in=float(times[i0]) if i0 < times.size else float(burn_in),
    )
