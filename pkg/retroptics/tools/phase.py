"""Canonical phase distributions, moments and the single-shot phase POM.

Phase states are |theta> = (2 pi)^(-1/2) sum_n exp(i n theta) |n> on the
window 0 <= theta < 2 pi, so P(theta) = <theta|rho|theta> and the
exponential moments alpha_q = sum_n rho_{n, n+q} are the Fourier
coefficients int P(theta) exp(-i q theta) dtheta.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np

from retroptics.config.settings import DEFAULT_GRID_SIZE
from retroptics.tools.fock import DensityMatrix, FockVector
from retroptics.tools.multiport import dft_matrix, retrodictive_mdo

logger = logging.getLogger(__name__)

StateLike = Union[DensityMatrix, FockVector]


@dataclass(frozen=True)
class PhaseDistribution:
    """Phase density sampled on a uniform grid plus its Fourier coefficients.

    Attributes:
        grid: Angles 2 pi k / grid_size, k = 0..grid_size-1
        density: P(theta) at the grid angles
        fourier: q -> alpha_q for -q_max <= q <= q_max
    """

    grid: np.ndarray
    density: np.ndarray
    fourier: Dict[int, complex]

    def integral(self) -> float:
        """Trapezoidal integral over one period (spectrally exact here)."""
        return float(np.sum(self.density) * 2 * np.pi / self.grid.size)

    def at(self, theta) -> np.ndarray:
        """Evaluate P(theta) = (1/2 pi) sum_q alpha_q exp(i q theta) anywhere."""
        theta = np.asarray(theta, dtype=float)
        total = np.zeros_like(theta, dtype=complex)
        for q, alpha in self.fourier.items():
            total = total + alpha * np.exp(1j * q * theta)
        return np.real(total) / (2 * np.pi)


def _as_density(rho: StateLike) -> DensityMatrix:
    if isinstance(rho, FockVector):
        return rho.to_density()
    return rho


def _grid(grid_size: int) -> np.ndarray:
    if grid_size < 1:
        raise ValueError(f"grid_size must be positive, got {grid_size}")
    return 2 * np.pi * np.arange(grid_size) / grid_size


def _distribution_from_moments(moments: Sequence[complex], grid_size: int) -> PhaseDistribution:
    fourier: Dict[int, complex] = {0: complex(moments[0])}
    for q in range(1, len(moments)):
        fourier[q] = complex(moments[q])
        fourier[-q] = complex(np.conj(moments[q]))
    grid = _grid(grid_size)
    partial = PhaseDistribution(grid=grid, density=np.zeros(grid_size), fourier=fourier)
    return PhaseDistribution(grid=grid, density=partial.at(grid), fourier=fourier)


def exponential_moments(rho: StateLike, q_max: int) -> List[complex]:
    """
    Exponential phase moments alpha_q = sum_n rho_{n, n+q} for q = 0..q_max.

    Moments beyond the operator's cutoff are zero.
    """
    if q_max < 0:
        raise ValueError(f"q_max must be non-negative, got {q_max}")
    entries = _as_density(rho).entries
    return [
        complex(np.trace(entries, offset=q)) if q < entries.shape[0] else 0j
        for q in range(q_max + 1)
    ]


def phase_distribution(rho: StateLike, grid_size: int = DEFAULT_GRID_SIZE) -> PhaseDistribution:
    """
    Canonical phase distribution P(theta) = <theta|rho|theta>.

    Args:
        rho: Normalized density matrix (or pure vector)
        grid_size: Number of grid angles on [0, 2 pi)

    Returns:
        PhaseDistribution: Exact for the truncated operator
    """
    rho = _as_density(rho)
    return _distribution_from_moments(exponential_moments(rho, rho.cutoff), grid_size)


def truncated_phase_state(N: int, m: int, phase_offset: float = 0.0) -> FockVector:
    """(N+1)^(-1/2) sum_n exp(i n (2 pi m / (N+1) + phase_offset)) |n>."""
    if not 0 <= m <= N:
        raise ValueError(f"need 0 <= m <= N, got m={m}, N={N}")
    theta = 2 * np.pi * m / (N + 1) + phase_offset
    amps = np.exp(1j * theta * np.arange(N + 1)) / math.sqrt(N + 1)
    return FockVector(amps, normalized=True)


def trig_moments(rho: StateLike, lam: int) -> Tuple[float, float, float, float]:
    """
    Means and variances of cos(lam theta) and sin(lam theta).

    Returns:
        tuple: (cos_mean, sin_mean, cos_var, sin_var) with
        cos_mean = Re alpha_lam, sin_mean = -Im alpha_lam and the variances
        from <cos^2> = (1 + <cos 2 lam theta>) / 2, <sin^2> = (1 - <cos 2 lam theta>) / 2
    """
    if lam < 1:
        raise ValueError(f"lambda must be at least 1, got {lam}")
    moments = exponential_moments(rho, 2 * lam)
    cos_mean = float(np.real(moments[lam]))
    sin_mean = float(-np.imag(moments[lam]))
    cos_double = float(np.real(moments[2 * lam]))
    cos_var, sin_var = trig_variances(cos_mean, sin_mean, cos_double)
    return cos_mean, sin_mean, cos_var, sin_var


def trig_variances(cos_mean: float, sin_mean: float, cos_double: float) -> Tuple[float, float]:
    """
    Variances of cos(lam theta) and sin(lam theta) from three means.

    Works equally on exact moments and on measured estimates, where
    ``cos_double`` is <cos 2 lam theta> taken at the doubled order.

    Returns:
        tuple: (cos_var, sin_var)
    """
    cos_var = 0.5 * (1 + cos_double) - cos_mean**2
    sin_var = 0.5 * (1 - cos_double) - sin_mean**2
    return cos_var, sin_var


def sample_angles(N: int) -> List[float]:
    """The 2N+2 reconstruction angles 2 pi m / (2N + 2)."""
    return [2 * np.pi * m / (2 * N + 2) for m in range(2 * N + 2)]


def sample_probabilities(rho: StateLike, N: int) -> List[Tuple[float, float]]:
    """
    Probabilities of projecting onto the truncated phase states at the sample angles.

    Even m belong to the basis |theta_k>, odd m to the basis rotated by
    pi / (N + 1); each basis alone sums to Tr[rho 1_N].
    """
    rho = _as_density(rho).padded(N)
    entries = rho.entries[: N + 1, : N + 1]
    samples = []
    for gamma in sample_angles(N):
        state = truncated_phase_state(N, 0, phase_offset=gamma).amps
        samples.append((gamma, float(np.real(np.vdot(state, entries @ state)))))
    return samples


def reconstruct_distribution(
    samples: Sequence[Tuple[float, float]], N: int, grid_size: int = DEFAULT_GRID_SIZE
) -> PhaseDistribution:
    """
    Continuous P(theta) from 2N+2 sampled phase-state probabilities.

    Uses 2 pi P(gamma_m) = (N + 1) Pr(gamma_m) and a discrete Fourier
    transform; a state with no photons above N is recovered exactly and the
    result integrates to one without renormalization.

    Args:
        samples: (gamma_m, Pr(gamma_m)) pairs, gamma_m = 2 pi m / (2N + 2)
        N: Truncation photon number
        grid_size: Output grid size

    Raises:
        ValueError: On a wrong sample count or spacing
    """
    expected = 2 * N + 2
    if len(samples) != expected:
        raise ValueError(f"expected {expected} phase samples for N={N}, got {len(samples)}")
    ordered = sorted(samples, key=lambda pair: pair[0])
    angles = np.array([gamma for gamma, _ in ordered], dtype=float)
    if np.max(np.abs(angles - np.array(sample_angles(N)))) > 1e-9:
        raise ValueError(f"phase samples must sit at 2 pi m / {expected}, m = 0..{expected - 1}")

    density_samples = (N + 1) * np.array([p for _, p in ordered], dtype=float) / (2 * np.pi)
    spectrum = np.fft.fft(density_samples) / expected
    moments = [2 * np.pi * spectrum[q] for q in range(N + 1)]
    return _distribution_from_moments(moments, grid_size)


def phase_state_product_identity(x: complex, y: complex, N: int, m: int) -> Tuple[complex, complex]:
    """
    Both sides of prod_{j != m} (x + w^j y) = sum_n x^n (-w^m y)^(N-n), w = exp(2 pi i / (N+1)).

    Returns:
        tuple: (product side, sum side)
    """
    omega = np.exp(2j * np.pi / (N + 1))
    product = complex(np.prod([x + omega**j * y for j in range(N + 1) if j != m]))
    total = complex(sum(x**n * (-(omega**m) * y) ** (N - n) for n in range(N + 1)))
    return product, total


def single_shot_pom(N: int, reference: FockVector, U: np.ndarray) -> List[DensityMatrix]:
    """
    Signal MDOs for the N+1 patterns with no photon in output m and one in every other.

    The signal enters port 0 of the DFT multiport, the reference port 1 and
    vacuum ports 2..N. Each MDO is |chi_m><chi_m| with
    chi_m = <ref|<0...0| S^dag |pattern_m>, so Tr[rho MDO_m] is the actual
    probability of pattern m.

    Args:
        N: Photons registered per pattern
        reference: Reference state in port 1 (coefficients above N never contribute)
        U: The (N+1)-port DFT matrix

    Returns:
        list: N+1 DensityMatrix operators of dimension N+1

    Raises:
        ValueError: If U is not the DFT multiport
    """
    if N < 1:
        raise ValueError(f"N must be at least 1, got {N}")
    U = np.asarray(U, dtype=complex)
    if U.shape != (N + 1, N + 1) or np.max(np.abs(U - dft_matrix(N + 1))) > 1e-9:
        raise ValueError(f"non-DFT multiport: single-shot phase POM needs dft_matrix({N + 1})")
    if reference.cutoff > N and np.any(np.abs(reference.amps[N + 1 :]) > 0):
        logger.warning(f"Reference coefficients above n={N} do not enter the phase POM")
    ref = FockVector(reference.padded(N).amps[: N + 1])

    return [
        retrodictive_mdo(U, phase_pattern(N, m), signal_mode=0, reference_mode=1, reference=ref)
        for m in range(N + 1)
    ]


def phase_pattern(N: int, m: int) -> Tuple[int, ...]:
    """No photon in output m and one photon in each of the other N outputs."""
    return tuple(0 if i == m else 1 for i in range(N + 1))


def pom_probabilities(rho: StateLike, mdos: Sequence[DensityMatrix]) -> Tuple[List[float], float]:
    """
    Renormalized outcome probabilities and the retained fraction.

    Returns:
        tuple: (Tr[rho MDO_m] / sum_k Tr[rho MDO_k] for each m, sum_k Tr[rho MDO_k])

    Raises:
        ValueError: If no pattern can occur
    """
    dim = mdos[0].dim
    rho = _as_density(rho).padded(dim - 1)
    entries = rho.entries[:dim, :dim]
    raw = [float(np.real(np.trace(entries @ mdo.entries))) for mdo in mdos]
    retained = float(sum(raw))
    if retained <= 0:
        raise ValueError("no retained pattern has nonzero probability")
    return [p / retained for p in raw], retained


def distribution_rows(dist: PhaseDistribution) -> List[List[float]]:
    """CSV rows (theta, density)."""
    return [[float(t), float(p)] for t, p in zip(dist.grid, dist.density)]
