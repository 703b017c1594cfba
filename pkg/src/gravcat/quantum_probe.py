"""
Two-level source coupled to a harmonic-oscillator probe.

    H = nu sigma_1 + omega a^dag a + g sigma_3 (a + a^dag)

All Hamiltonian coefficients are angular frequencies (hbar = 1 inside this
module). The physical constant comes back only at the SI boundary:

    g      = -f0 / sqrt(2 m hbar omega)            [rad/s]
    d      = f0^2 / (m hbar omega^3)               [dimensionless]
    x      = sqrt(hbar / (2 m omega)) (a + a^dag)  [m]

The basis is qubit (x) Fock, index ``s * (n_max + 1) + n`` with ``s = 0`` for
the sigma_3 = +1 branch (|+>) and ``s = 1`` for |->.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply
from scipy.special import gammaln

from .quantities import HBAR

__all__ = [
    "QuantumProbeSpec",
    "HybridState",
    "HamiltonianMatrix",
    "TruncationTooSmall",
    "TruncationLeak",
    "NoPeak",
    "coupling_g",
    "distinguishability",
    "classical_center",
    "default_n_max",
    "jc_hamiltonian",
    "build_hamiltonian",
    "basis_state",
    "coherent_state",
    "evolve",
    "evolve_series",
    "expectation",
    "energy",
    "periodogram",
    "rabi_frequency_estimate",
]

log = logging.getLogger(__name__)

# above this dimension evolve() switches from a cached eigendecomposition to
# scipy's expm_multiply
DENSE_LIMIT = 1200
LEAK_THRESHOLD = 1e-6


class TruncationTooSmall(ValueError):
    pass


class TruncationLeak(RuntimeError):
    pass


class NoPeak(ValueError):
    pass


def coupling_g(f0: float, m: float, omega: float) -> float:
    if not (m > 0 and omega > 0):
        raise ValueError("m and omega must be positive")
    return -f0 / math.sqrt(2 * m * HBAR * omega)


def distinguishability(f0: float, m: float, omega: float) -> float:
    """f0^2 / (m hbar omega^3); the oscillator resolves the branches when this is >> 1."""
    if not (m > 0 and omega > 0):
        raise ValueError("m and omega must be positive")
    return f0 * f0 / (m * HBAR * omega**3)


def classical_center(f0: float, m: float, omega: float) -> float:
    if not (m > 0 and omega > 0):
        raise ValueError("m and omega must be positive")
    return f0 / (m * omega**2)


def default_n_max(g: float, omega: float) -> int:
    """Fock cutoff for a run that starts in the undisplaced vacuum.

    The oscillator swings out to 2|g|/omega from there, so the cutoff
    covers that amplitude's mean occupation plus a wide Poisson tail.
    """
    alpha = 2 * abs(g) / omega
    return max(16, math.ceil(4 * alpha**2 + 6 * alpha))


@dataclass(frozen=True)
class QuantumProbeSpec:
    m: float
    omega: float
    f0: float
    nu: float
    n_max: int | None = None

    def __post_init__(self):
        if not (self.m > 0 and self.omega > 0):
            raise ValueError("m and omega must be positive")
        if self.n_max is not None and self.n_max < 1:
            raise ValueError("n_max must be at least 1")

    @property
    def g(self) -> float:
        return coupling_g(self.f0, self.m, self.omega)

    @property
    def truncation(self) -> int:
        return self.n_max if self.n_max is not None else default_n_max(self.g, self.omega)


@dataclass(frozen=True)
class HamiltonianMatrix:
    matrix: sp.csr_matrix
    n_max: int
    nu: float
    omega: float
    g: float

    @property
    def dim(self) -> int:
        return 2 * (self.n_max + 1)

    @cached_property
    def eigensystem(self) -> tuple[np.ndarray, np.ndarray]:
        return scipy.linalg.eigh(self.matrix.toarray())


def _ladder(n_max: int) -> sp.csr_matrix:
    return sp.diags(np.sqrt(np.arange(1, n_max + 1, dtype=float)), 1, format="csr")


def jc_hamiltonian(nu: float, omega: float, g: float, n_max: int, check: bool = True) -> HamiltonianMatrix:
    """Assemble the Hamiltonian from coefficients already in rad/s."""
    if n_max < 0:
        raise ValueError("n_max must be non-negative")
    if check and omega > 0 and abs(g) / omega > math.sqrt(n_max) / 2:
        raise TruncationTooSmall(
            f"|g|/omega = {abs(g) / omega:.3g} needs n_max >= {math.ceil(4 * (g / omega) ** 2)}, got {n_max}"
        )
    a = _ladder(n_max)
    num = sp.diags(np.arange(n_max + 1, dtype=float), 0)
    eye_f = sp.identity(n_max + 1)
    s1 = sp.csr_matrix([[0.0, 1.0], [1.0, 0.0]])
    s3 = sp.csr_matrix([[1.0, 0.0], [0.0, -1.0]])
    H = nu * sp.kron(s1, eye_f) + omega * sp.kron(sp.identity(2), num) + g * sp.kron(s3, a + a.T)
    H = sp.csr_matrix(H)
    H.eliminate_zeros()
    return HamiltonianMatrix(matrix=H, n_max=n_max, nu=nu, omega=omega, g=g)


def build_hamiltonian(spec: QuantumProbeSpec) -> HamiltonianMatrix:
    return jc_hamiltonian(spec.nu, spec.omega, spec.g, spec.truncation)


@dataclass(frozen=True)
class HybridState:
    amplitudes: np.ndarray
    n_max: int

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (2 * (self.n_max + 1),):
            raise ValueError(f"expected {2 * (self.n_max + 1)} amplitudes, got {amps.shape}")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    @property
    def norm_drift(self) -> float:
        return abs(self.norm - 1.0)

    @property
    def labels(self) -> list[tuple[str, int]]:
        return [(s, n) for s in "+-" for n in range(self.n_max + 1)]

    def fock_populations(self) -> np.ndarray:
        blocks = self.amplitudes.reshape(2, self.n_max + 1)
        return np.sum(np.abs(blocks) ** 2, axis=0)

    def normalized(self) -> "HybridState":
        return HybridState(self.amplitudes / self.norm, self.n_max)


def basis_state(s: str, n: int, n_max: int) -> HybridState:
    """|s, n> with s in {'+', '-'}."""
    amps = np.zeros(2 * (n_max + 1), dtype=complex)
    amps["+-".index(s) * (n_max + 1) + n] = 1.0
    return HybridState(amps, n_max)


def coherent_state(s: str, alpha: complex, n_max: int) -> HybridState:
    """|s> (x) |alpha>, truncated at n_max and renormalized.

    ``alpha = -g/omega`` on the ``+`` branch is the ground state of that
    branch's displaced oscillator, centred on the classical equilibrium.
    """
    k = np.arange(n_max + 1)
    log_mag = k * np.log(abs(alpha)) if alpha != 0 else np.where(k == 0, 0.0, -np.inf)
    phase = np.exp(1j * k * np.angle(alpha)) if alpha != 0 else np.ones(n_max + 1)
    coeffs = np.exp(-abs(alpha) ** 2 / 2 + log_mag - 0.5 * gammaln(k + 1)) * phase
    amps = np.zeros(2 * (n_max + 1), dtype=complex)
    i = "+-".index(s)
    amps[i * (n_max + 1):(i + 1) * (n_max + 1)] = coeffs
    return HybridState(amps / np.linalg.norm(amps), n_max)


def _check_leak(psi: np.ndarray, n_max: int) -> None:
    if n_max < 2:
        return
    blocks = psi.reshape(-1, 2, n_max + 1) if psi.ndim == 2 else psi.reshape(1, 2, n_max + 1)
    top = np.sum(np.abs(blocks[..., -2:]) ** 2, axis=(1, 2))
    worst = float(top.max())
    if worst > LEAK_THRESHOLD:
        raise TruncationLeak(f"top two Fock levels hold {worst:.3g} > {LEAK_THRESHOLD}; raise n_max")


def _propagate(psi0: np.ndarray, H: HamiltonianMatrix, times: np.ndarray, tol: float) -> np.ndarray:
    if H.dim <= DENSE_LIMIT:
        E, V = H.eigensystem
        coeffs = V.T @ psi0
        return (V @ (np.exp(-1j * np.outer(E, times)) * coeffs[:, None])).T
    A = -1j * H.matrix.tocsc()
    out = np.empty((times.size, psi0.size), dtype=complex)
    for k, t in enumerate(times):
        out[k] = expm_multiply(A * t, psi0, traceA=(-1j * t * H.matrix.diagonal().sum()))
    return out


def evolve(state: HybridState, H: HamiltonianMatrix, t: float, tol: float = 1e-10) -> HybridState:
    """Return exp(-i H t)|state>.

    The result is not renormalized; inspect ``norm_drift`` on the output.
    """
    if not 1e-12 <= tol <= 1e-6:
        raise ValueError("tol must lie in [1e-12, 1e-6]")
    if state.n_max != H.n_max:
        raise ValueError("state and Hamiltonian truncations differ")
    if t == 0:
        return state
    psi = _propagate(state.amplitudes, H, np.array([float(t)]), tol)[0]
    _check_leak(psi, H.n_max)
    out = HybridState(psi, H.n_max)
    if out.norm_drift > tol:
        log.warning("norm drift %.3g exceeds tol %.3g", out.norm_drift, tol)
    return out


def evolve_series(state: HybridState, H: HamiltonianMatrix, times, tol: float = 1e-10) -> list[HybridState]:
    """Evolve to each entry of ``times`` from the same initial state."""
    if not 1e-12 <= tol <= 1e-6:
        raise ValueError("tol must lie in [1e-12, 1e-6]")
    times = np.asarray(times, dtype=float)
    psis = _propagate(state.amplitudes, H, times, tol)
    _check_leak(psis, H.n_max)
    return [HybridState(p, H.n_max) for p in psis]


def expectation(state: HybridState, observable: str, m: float | None = None, omega: float | None = None) -> float:
    """<observable> for ``sigma1``, ``sigma3``, ``number``, ``position`` or ``energy``.

    ``position`` needs the oscillator mass and angular frequency (SI) and
    returns metres.
    """
    n1 = state.n_max + 1
    psi = state.amplitudes
    up, down = psi[:n1], psi[n1:]
    if observable == "sigma3":
        return float(np.vdot(up, up).real - np.vdot(down, down).real)
    if observable == "sigma1":
        return float(2 * np.vdot(up, down).real)
    if observable == "number":
        n = np.arange(n1)
        return float(np.sum(n * (np.abs(up) ** 2 + np.abs(down) ** 2)))
    if observable == "position":
        if m is None or omega is None:
            raise ValueError("position needs m and omega")
        a = _ladder(state.n_max)
        quad = a + a.T
        val = np.vdot(up, quad @ up) + np.vdot(down, quad @ down)
        return float(val.real) * math.sqrt(HBAR / (2 * m * omega))
    raise ValueError(f"unknown observable {observable!r}")


def energy(state: HybridState, H: HamiltonianMatrix) -> float:
    return float(np.vdot(state.amplitudes, H.matrix @ state.amplitudes).real)


def periodogram(signal, dt: float, pad: int = 16) -> tuple[np.ndarray, np.ndarray]:
    """Hann-windowed, zero-padded power spectrum over angular frequency."""
    x = np.asarray(signal, dtype=float)
    x = (x - x.mean()) * np.hanning(x.size)
    nfft = pad * x.size
    power = np.abs(np.fft.rfft(x, n=nfft)) ** 2
    omega = 2 * np.pi * np.fft.rfftfreq(nfft, d=dt)
    return omega, power


def rabi_frequency_estimate(signal, dt: float, min_ratio: float = 10.0) -> float:
    """Dominant angular frequency of a uniformly sampled signal.

    Periodogram peak refined by a parabola through the peak bin and its
    neighbours. Raises ``NoPeak`` when the peak does not stand ``min_ratio``
    above the median power.
    """
    x = np.asarray(signal, dtype=float)
    if np.ptp(x) <= 16 * np.finfo(float).eps * np.max(np.abs(x), initial=0.0):
        raise NoPeak("signal is flat")
    omega, power = periodogram(x, dt)
    if power.size < 3:
        raise NoPeak("signal too short")
    k = int(np.argmax(power[1:])) + 1
    median = float(np.median(power))
    peak = float(power[k])
    if peak <= 0 or (median > 0 and peak / median < min_ratio):
        raise NoPeak(f"peak-to-median ratio below {min_ratio}")
    if k + 1 >= power.size:
        return float(omega[k])
    y0, y1, y2 = np.log(np.maximum(power[k - 1:k + 2], np.finfo(float).tiny))
    denom = y0 - 2 * y1 + y2
    shift = 0.5 * (y0 - y2) / denom if denom != 0 else 0.0
    return float(omega[k] + shift * (omega[1] - omega[0]))
