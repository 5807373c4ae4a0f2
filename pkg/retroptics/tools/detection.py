"""Photodetector inefficiency: Bernoulli transforms and count correction.

An ideal joint photon-number distribution Q(n_1, ..., n_d) is recorded by
detectors of efficiency eta as

    P(m_1, ..., m_d) = sum_{n >= m} prod_i C(n_i, m_i) (1 - eta)^(n_i - m_i) eta^(m_i) Q(n)

and the inverse uses the same kernel with (eta - 1) and eta^(-n_i). Both act
axis by axis, so a d-detector transform is the tensor product of single
detector transforms.
"""

import logging
from typing import Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import binom

from retroptics.config.settings import DEFAULT_N_MAX, ILL_CONDITIONED_AMPLIFICATION

logger = logging.getLogger(__name__)

TransformDirection = Literal["ideal_to_counts", "counts_to_ideal"]


def _check_efficiency(eta: float) -> float:
    eta = float(eta)
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"detector efficiency must satisfy 0 < eta <= 1, got {eta}")
    return eta


def inverse_amplification(eta: float, n_max: int = DEFAULT_N_MAX) -> float:
    """Largest weight eta^(-n_max) in the inverse transform."""
    return float(_check_efficiency(eta) ** (-n_max))


def bernoulli_matrix(eta: float, size: int, direction: TransformDirection) -> np.ndarray:
    """
    Single-detector transform matrix.

    Args:
        eta: Detector efficiency in (0, 1]
        size: Number of photon-number levels kept
        direction: "ideal_to_counts" gives M[m, n] = C(n, m)(1-eta)^(n-m) eta^m,
            "counts_to_ideal" gives its exact inverse on the same levels

    Returns:
        np.ndarray: Upper-triangular size x size matrix
    """
    eta = _check_efficiency(eta)
    n = np.arange(size)
    low, high = np.meshgrid(n, n, indexing="ij")
    gap = np.clip(high - low, 0, None)
    if direction == "ideal_to_counts":
        kernel = binom(high, low) * (1.0 - eta) ** gap * eta**low
    elif direction == "counts_to_ideal":
        kernel = binom(high, low) * (eta - 1.0) ** gap * eta ** (-high.astype(float))
    else:
        raise ValueError(
            f"direction must be 'ideal_to_counts' or 'counts_to_ideal', got '{direction}'"
        )
    return np.where(high >= low, kernel, 0.0)


def _apply_per_axis(values: np.ndarray, matrices: Sequence[np.ndarray]) -> np.ndarray:
    result = values
    for axis, matrix in enumerate(matrices):
        result = np.moveaxis(np.tensordot(matrix, result, axes=([1], [axis])), 0, axis)
    return result


def detector_transform(
    dist: Union[Sequence[float], np.ndarray],
    eta: float,
    direction: TransformDirection,
    n_max: int = DEFAULT_N_MAX,
) -> np.ndarray:
    """
    Bernoulli transform of a single-detector or joint photon-number distribution.

    Args:
        dist: 1-D distribution over n = 0.. or a d-dimensional joint array
        eta: Detector efficiency in (0, 1]
        direction: "ideal_to_counts" or "counts_to_ideal"
        n_max: For the inverse, photocounts above n_max are ignored

    Returns:
        np.ndarray: Transformed distribution with the same shape (the
        inverse keeps levels 0..n_max only)

    Raises:
        ValueError: On an efficiency outside (0, 1] or a distribution summing above one
    """
    eta = _check_efficiency(eta)
    values = np.asarray(dist, dtype=float)
    total = float(values.sum())
    if total > 1.0 + 1e-10:
        raise ValueError(f"distribution sums to {total:.12g} > 1")
    if eta == 1.0:
        return values.copy()

    if direction == "counts_to_ideal":
        keep = tuple(slice(0, n_max + 1) for _ in range(values.ndim))
        if any(size > n_max + 1 for size in values.shape):
            dropped = total - float(values[keep].sum())
            logger.debug(f"Ignoring photocount mass {dropped:.3g} above n_max={n_max}")
        values = values[keep]
        amplification = eta ** (-(max(values.shape) - 1))
        if amplification > ILL_CONDITIONED_AMPLIFICATION:
            logger.warning(
                f"Ill-conditioned inverse Bernoulli transform: eta={eta}, "
                f"amplification {amplification:.3g}"
            )

    matrices = [bernoulli_matrix(eta, size, direction) for size in values.shape]
    return _apply_per_axis(values, matrices)


def _normalized_with_errors(
    weights: np.ndarray, frequencies: np.ndarray, trials: int
) -> Tuple[List[float], List[float], float]:
    """
    Ratio estimates w_a.f / sum_b w_b.f with delta-method standard errors.

    ``weights`` has one row per retained pattern over the flattened outcome
    space; ``frequencies`` are multinomial relative frequencies from ``trials`` runs.
    """
    values = weights @ frequencies
    total = float(values.sum())
    if trials <= 0 or total <= 0:
        nan = [float("nan")] * len(values)
        return nan, nan, total
    second = (weights * frequencies) @ weights.T
    covariance = (second - np.outer(values, values)) / trials
    probabilities = values / total
    jacobian = (np.eye(len(values)) - probabilities[:, None]) / total
    variance = np.einsum("ma,ab,mb->m", jacobian, covariance, jacobian)
    stderr = np.sqrt(np.clip(variance, 0.0, None))
    return [float(p) for p in probabilities], [float(s) for s in stderr], total


def _pattern_indicator(shape: Tuple[int, ...], patterns: Sequence[Tuple[int, ...]]) -> np.ndarray:
    weights = np.zeros((len(patterns), int(np.prod(shape))))
    for row, pattern in enumerate(patterns):
        weights[row, np.ravel_multi_index(pattern, shape)] = 1.0
    return weights


def retained_from_counts(
    counts: np.ndarray,
    patterns: Sequence[Tuple[int, ...]],
    trials: Optional[int] = None,
) -> Tuple[List[float], List[float], float]:
    """
    Normalized retained-pattern frequencies with binomial standard errors.

    Args:
        counts: Joint count histogram from one phase setting
        patterns: Retained patterns (indices into ``counts``)
        trials: Runs behind ``counts`` (default: the sum of ``counts``)

    Returns:
        tuple: (normalized probabilities, standard errors, retained fraction)
    """
    counts = np.asarray(counts, dtype=float)
    trials = int(round(counts.sum())) if trials is None else trials
    frequencies = counts.reshape(-1) / max(trials, 1)
    return _normalized_with_errors(_pattern_indicator(counts.shape, patterns), frequencies, trials)


def corrected_retained(
    counts: np.ndarray,
    patterns: Sequence[Tuple[int, ...]],
    eta: float,
    n_max: int = DEFAULT_N_MAX,
    trials: Optional[int] = None,
) -> Tuple[List[float], List[float], float]:
    """
    Inverse-Bernoulli corrected retained-pattern probabilities.

    The ideal probability of each retained pattern is a fixed linear
    combination of all observed joint frequencies, so its covariance follows
    from the multinomial covariance; normalization is propagated to first order.

    Args:
        counts: Joint count histogram from one phase setting (d detectors)
        patterns: Retained ideal patterns
        eta: Detector efficiency used for the correction
        n_max: Photocounts above n_max per detector are ignored
        trials: Runs behind ``counts`` (default: the sum of ``counts``)

    Returns:
        tuple: (normalized corrected probabilities, standard errors, corrected retained fraction)
    """
    eta = _check_efficiency(eta)
    counts = np.asarray(counts, dtype=float)
    trials = int(round(counts.sum())) if trials is None else trials
    frequencies = counts.reshape(-1) / max(trials, 1)
    inverses = [
        bernoulli_matrix(eta, min(size, n_max + 1), "counts_to_ideal") for size in counts.shape
    ]
    amplification = eta ** (-(max(m.shape[0] for m in inverses) - 1))
    if amplification > ILL_CONDITIONED_AMPLIFICATION:
        logger.warning(
            f"Ill-conditioned efficiency correction: eta={eta}, amplification {amplification:.3g}"
        )

    weights = np.zeros((len(patterns), frequencies.size))
    for row, pattern in enumerate(patterns):
        factors = []
        for axis, level in enumerate(pattern):
            line = np.zeros(counts.shape[axis])
            line[: inverses[axis].shape[0]] = inverses[axis][level]
            factors.append(line)
        outer = factors[0]
        for line in factors[1:]:
            outer = np.multiply.outer(outer, line)
        weights[row] = outer.reshape(-1)
    return _normalized_with_errors(weights, frequencies, trials)


def sample_counts(
    probabilities: np.ndarray, trials: int, rng: np.random.Generator
) -> np.ndarray:
    """
    Draw ``trials`` outcomes by inverse-CDF sampling.

    Args:
        probabilities: Flat outcome probabilities summing to at most one; the
            remainder is an extra "unresolved" outcome
        trials: Number of runs
        rng: Seeded generator

    Returns:
        np.ndarray: Counts per outcome, length len(probabilities) + 1
    """
    probabilities = np.clip(np.asarray(probabilities, dtype=float).reshape(-1), 0.0, None)
    cdf = np.cumsum(probabilities)
    if trials <= 0:
        return np.zeros(cdf.size + 1, dtype=np.int64)
    draws = np.searchsorted(cdf, rng.random(trials), side="right")
    return np.bincount(draws, minlength=cdf.size + 1)


def split_trials(trials: int, workers: int) -> List[int]:
    """Near-equal trial shares, earlier workers taking the remainder."""
    if workers < 1:
        raise ValueError(f"workers must be at least 1, got {workers}")
    base, extra = divmod(trials, workers)
    return [base + (1 if w < extra else 0) for w in range(workers)]


def binomial_stderr(
    coefficients: Dict[Tuple, float],
    probabilities: Dict[Tuple, float],
    trials: Dict[object, int],
) -> float:
    """
    Standard error of a linear estimator sum_k c_k p_k from multinomial frequencies.

    Keys are (setting, pattern) pairs; outcomes within one setting share a
    multinomial, different settings are independent.

    Args:
        coefficients: c_k per (setting, pattern)
        probabilities: Estimated p_k per (setting, pattern)
        trials: Runs per setting

    Returns:
        float: sqrt(sum_settings [sum c^2 p - (sum c p)^2] / T_setting)
    """
    variance = 0.0
    for setting, runs in trials.items():
        if runs <= 0:
            continue
        keys = [k for k in coefficients if k[0] == setting]
        mean = sum(coefficients[k] * probabilities.get(k, 0.0) for k in keys)
        square = sum(coefficients[k] ** 2 * probabilities.get(k, 0.0) for k in keys)
        variance += max(square - mean**2, 0.0) / runs
    return float(np.sqrt(variance))
