"""Retrodictive state engineering with a multiport and coherent references.

A target state sum_n psi_n |n> is written as kappa prod_i (a^dag - beta_i*)|0>,
where the beta_i* are the roots of the characteristic polynomial
sum_n psi_n z^n / sqrt(n!). Sending coherent states |alpha_j> into ports
j >= 1 of a multiport U, the signal into port 0, and registering the photon
pattern (n_0, ..., n_N) at the outputs makes the signal's retrodictive state

    kappa_bar prod_i (a^dag - beta_i*)^{n_i} |0>,

with beta_i = -sum_j U[i, j] alpha_j / U[i, 0] and the first-column
constraint sum_i |U[i, 0]|^2 beta_i = 0.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linprog, minimize

from retroptics.config.settings import FIRST_COLUMN_TOL, ROOT_RESIDUAL_TOL
from retroptics.logging_config import log_validation_result
from retroptics.tools.fock import FockVector, MultimodeState, coherent_state
from retroptics.tools.multiport import check_unitary, evolve_multimode

logger = logging.getLogger(__name__)

_ROOT_MATCH_TOL = 1e-4
_KKT_TOL = 1e-8


@dataclass(frozen=True)
class DetectionPattern:
    """Photon counts n_0..n_N registered at the multiport outputs."""

    counts: Tuple[int, ...]

    def __post_init__(self):
        counts = tuple(int(n) for n in self.counts)
        if not counts:
            raise ValueError("a detection pattern needs at least one mode")
        if any(n < 0 for n in counts):
            raise ValueError(f"photon counts must be non-negative, got {counts}")
        object.__setattr__(self, "counts", counts)

    @property
    def degree(self) -> int:
        return sum(self.counts)

    @property
    def modes(self) -> int:
        return len(self.counts)

    @classmethod
    def canonical(cls, dim: int) -> "DetectionPattern":
        """No photon in output 0 and one photon in every other output."""
        return cls((0,) + (1,) * (dim - 1))

    @classmethod
    def parse(cls, text: str) -> "DetectionPattern":
        """Parse "0,1,1" style patterns."""
        try:
            return cls(tuple(int(part) for part in text.split(",") if part.strip()))
        except ValueError as exc:
            raise ValueError(f"invalid detection pattern '{text}'") from exc


@dataclass(frozen=True)
class EngineeredTarget:
    """Everything needed to realize one target retrodictive state.

    ``betas`` and ``alphas`` are indexed by mode; ``betas[0]`` is the root
    fixed by the first-column constraint when output 0 is empty, and
    ``alphas[0]`` is zero (the signal port).
    """

    psi: FockVector
    betas: Tuple[complex, ...]
    alphas: Tuple[complex, ...]
    kappa_bar: complex
    kappa: complex
    efficiency: float
    pattern: DetectionPattern
    unitary: np.ndarray

    def to_dict(self) -> Dict:
        pair = lambda z: [float(np.real(z)), float(np.imag(z))]  # noqa: E731
        return {
            "psi": self.psi.to_dict(),
            "pattern": list(self.pattern.counts),
            "betas": [pair(b) for b in self.betas],
            "alphas": [pair(a) for a in self.alphas],
            "kappa_bar": pair(self.kappa_bar),
            "kappa_bar_abs2": float(abs(self.kappa_bar) ** 2),
            "kappa": pair(self.kappa),
            "efficiency": float(self.efficiency),
            "unitary": {
                "dim": int(self.unitary.shape[0]),
                "entries": [pair(u) for u in np.asarray(self.unitary).reshape(-1)],
            },
        }


def _polynomial_coefficients(psi: FockVector) -> np.ndarray:
    """c_n = psi_n / sqrt(n!), lowest order first."""
    return np.array(
        [a / math.sqrt(math.factorial(n)) for n, a in enumerate(psi.amps)], dtype=complex
    )


def _sort_key(beta: complex) -> Tuple[float, float]:
    arg = float(np.mod(np.angle(beta), 2 * np.pi))
    if arg > 2 * np.pi - 1e-9:
        arg = 0.0
    return (round(arg, 9), abs(beta))


def characteristic_roots(psi: FockVector) -> List[complex]:
    """
    Roots beta_i of the characteristic polynomial sum_n psi_n (beta*)^n / sqrt(n!).

    Companion-matrix eigenvalues (numpy.roots) refined by Newton steps; each
    root is checked by substitution.

    Args:
        psi: Target state (any normalization)

    Returns:
        list: deg roots with multiplicity, ordered by argument in [0, 2 pi)
        then by magnitude

    Raises:
        ValueError: For an all-zero target, a pure vacuum target, or a root
            whose substitution residual exceeds 1e-8
    """
    coefficients = _polynomial_coefficients(psi)
    scale = np.max(np.abs(coefficients))
    if scale == 0:
        raise ValueError("all-zero target")
    nonzero = np.nonzero(np.abs(coefficients) > 1e-14 * scale)[0]
    degree = int(nonzero[-1])
    if degree == 0:
        raise ValueError("no roots: zero-photon target")

    coefficients = coefficients[: degree + 1]
    highest_first = coefficients[::-1]
    derivative = np.polyder(highest_first)
    zs = np.roots(highest_first)

    roots = []
    for z in zs:
        for _ in range(3):
            slope = np.polyval(derivative, z)
            if abs(slope) < 1e-14:
                break
            step = np.polyval(highest_first, z) / slope
            z = z - step
            if abs(step) < 1e-15 * max(1.0, abs(z)):
                break
        residual = abs(np.polyval(highest_first, z))
        magnitude = float(np.sum(np.abs(coefficients) * np.abs(z) ** np.arange(degree + 1)))
        if residual > ROOT_RESIDUAL_TOL * max(1.0, magnitude):
            log_validation_result(
                logger, "root residual", False, {"root": complex(z), "residual": residual}
            )
            raise ValueError(f"root {complex(z):.6g} has substitution residual {residual:.3g}")
        roots.append(complex(np.conj(z)))

    return sorted(roots, key=_sort_key)


def kappa_from_roots(betas: Sequence[complex]) -> complex:
    """Normalization kappa of kappa prod_i (a^dag - beta_i*)|0> (taken real positive)."""
    state = _factored_amplitudes(betas, [1] * len(betas), len(betas))
    return complex(1.0 / np.linalg.norm(state))


def _factored_amplitudes(
    betas: Sequence[complex], multiplicities: Sequence[int], cutoff: int
) -> np.ndarray:
    """Number-basis amplitudes of prod_i (a^dag - beta_i*)^{n_i} |0>."""
    polynomial = np.array([1.0 + 0.0j])
    for beta, power in zip(betas, multiplicities):
        for _ in range(power):
            polynomial = np.convolve(polynomial, [-np.conj(beta), 1.0])
    amps = np.zeros(cutoff + 1, dtype=complex)
    for k, c in enumerate(polynomial):
        amps[k] = c * math.sqrt(math.factorial(k))
    return amps


def _first_column_weights(U: np.ndarray) -> np.ndarray:
    column = np.asarray(U)[:, 0]
    if np.any(np.abs(column) < FIRST_COLUMN_TOL):
        raise ValueError("first-column zero: state unreachable")
    return np.abs(column) ** 2


def _assign_roots(
    roots: Sequence[complex], pattern: DetectionPattern
) -> Dict[int, complex]:
    """Give each occupied output one root; n_i photons need an n_i-fold root."""
    if len(roots) != pattern.degree:
        raise ValueError(
            f"target has {len(roots)} roots but pattern {pattern.counts} "
            f"registers {pattern.degree} photons"
        )
    assigned: Dict[int, complex] = {}
    remaining = list(roots)
    for mode, count in enumerate(pattern.counts):
        if count == 0:
            continue
        beta = remaining[0]
        group = remaining[:count]
        if any(abs(b - beta) > _ROOT_MATCH_TOL * max(1.0, abs(beta)) for b in group):
            raise ValueError(
                f"pattern {pattern.counts} needs a {count}-fold root for output {mode}"
            )
        assigned[mode] = complex(np.mean(group))
        remaining = remaining[count:]
    return assigned


def _mode_betas(
    assigned: Dict[int, complex], weights: np.ndarray
) -> np.ndarray:
    """
    Complete per-output roots with the first-column constraint.

    Empty outputs share the value -S / X_F with S = sum over occupied outputs
    of x_i beta_i and X_F the total weight of the empty outputs; this is the
    choice with the smallest sum x_i |beta_i|^2.
    """
    dim = weights.size
    betas = np.zeros(dim, dtype=complex)
    occupied = sorted(assigned)
    free = [m for m in range(dim) if m not in assigned]
    s = sum(weights[m] * assigned[m] for m in occupied)
    for m in occupied:
        betas[m] = assigned[m]
    if free:
        shared = -s / sum(weights[m] for m in free)
        for m in free:
            betas[m] = shared
    elif abs(s) > ROOT_RESIDUAL_TOL:
        raise ValueError(
            f"first-column constraint violated: sum |U_i0|^2 beta_i = {complex(s):.3g}"
        )
    return betas


def _alphas_from_mode_betas(U: np.ndarray, betas: np.ndarray) -> np.ndarray:
    """alpha_j = -sum_i U*_{ij} U_{i0} beta_i for every port j."""
    return -(U.conj().T @ (U[:, 0] * betas))


def amplitudes_from_roots(
    betas: Sequence[complex], U: np.ndarray
) -> Tuple[List[complex], complex]:
    """
    Coherent reference amplitudes that realize the given roots.

    Args:
        betas: Roots for outputs 1..N (len dim-1, beta_0 is then solved from
            the first-column constraint) or for all outputs (len dim, the
            constraint is checked)
        U: Multiport unitary

    Returns:
        tuple: (alphas for ports 1..N, beta_0)

    Raises:
        ValueError: "first-column zero: state unreachable" when any
            |U_i0| < 1e-12, or when the constraint cannot hold
    """
    U = check_unitary(U)
    dim = U.shape[0]
    weights = _first_column_weights(U)
    betas = [complex(b) for b in betas]
    if len(betas) == dim - 1:
        assigned = {m + 1: b for m, b in enumerate(betas)}
    elif len(betas) == dim:
        assigned = dict(enumerate(betas))
    else:
        raise ValueError(
            f"expected {dim - 1} or {dim} roots for a {dim}-port, got {len(betas)}"
        )

    mode_betas = _mode_betas(assigned, weights)
    alphas = _alphas_from_mode_betas(U, mode_betas)
    residual = abs(alphas[0])
    log_validation_result(
        logger, "signal-port amplitude", residual < 1e-10, {"alpha_0": complex(alphas[0])}
    )
    return [complex(a) for a in alphas[1:]], complex(mode_betas[0])


def _kappa_bar(U: np.ndarray, alphas: np.ndarray, pattern: DetectionPattern) -> complex:
    value = np.exp(-0.5 * np.sum(np.abs(alphas[1:]) ** 2))
    for i, n in enumerate(pattern.counts):
        value = value * np.conj(U[i, 0]) ** n / math.sqrt(math.factorial(n))
    return complex(value)


def design_target(
    psi: FockVector, U: np.ndarray, pattern: Optional[DetectionPattern] = None
) -> EngineeredTarget:
    """
    Full engineering pipeline for one target, multiport and pattern.

    Args:
        psi: Target retrodictive state (normalized internally)
        U: Multiport unitary
        pattern: Detection pattern (default (0, 1, ..., 1))

    Returns:
        EngineeredTarget

    Raises:
        ValueError: For zero-photon targets, unreachable states, or
            pattern/root mismatches
    """
    U = check_unitary(U)
    dim = U.shape[0]
    pattern = pattern or DetectionPattern.canonical(dim)
    if pattern.modes != dim:
        raise ValueError(f"pattern has {pattern.modes} outputs but the multiport has {dim}")

    psi = psi.normalize()
    roots = characteristic_roots(psi)
    weights = _first_column_weights(U)
    mode_betas = _mode_betas(_assign_roots(roots, pattern), weights)
    alphas = _alphas_from_mode_betas(U, mode_betas)

    identity_gap = abs(np.sum(np.abs(alphas) ** 2) - np.sum(weights * np.abs(mode_betas) ** 2))
    log_validation_result(logger, "amplitude norm identity", identity_gap < 1e-10,
                          {"gap": identity_gap})

    degree = len(roots)
    kappa = complex(psi.amps[degree] / math.sqrt(math.factorial(degree)))
    kappa_bar = _kappa_bar(U, alphas, pattern)
    efficiency = float(abs(kappa_bar / kappa) ** 2)

    return EngineeredTarget(
        psi=psi,
        betas=tuple(complex(b) for b in mode_betas),
        alphas=tuple(complex(a) for a in alphas),
        kappa_bar=kappa_bar,
        kappa=kappa,
        efficiency=efficiency,
        pattern=pattern,
        unitary=U,
    )


def kappa_and_efficiency(
    target: FockVector, U: np.ndarray, pattern: Optional[DetectionPattern] = None
) -> Tuple[complex, float]:
    """
    Scale kappa_bar of the engineered state and the efficiency |kappa_bar/kappa|^2.

    |kappa_bar|^2 = exp(-sum_i |U_i0|^2 |beta_i|^2) prod_i |U_i0|^{2 n_i} / n_i!

    Returns:
        tuple: (kappa_bar, P_psi)
    """
    engineered = design_target(target, U, pattern)
    return engineered.kappa_bar, engineered.efficiency


def _full_alphas(alphas: Sequence[complex], dim: int) -> np.ndarray:
    alphas = np.array(alphas, dtype=complex)
    if alphas.size == dim - 1:
        return np.concatenate([[0.0], alphas])
    if alphas.size == dim:
        return alphas
    raise ValueError(f"expected {dim - 1} or {dim} coherent amplitudes, got {alphas.size}")


def engineered_state(
    U: np.ndarray, alphas: Sequence[complex], pattern: DetectionPattern, cutoff: int
) -> FockVector:
    """
    Unnormalized retrodictive state of the signal port, factored form.

    Args:
        U: Multiport unitary
        alphas: Coherent amplitudes for ports 1..N (or all ports, port 0 ignored)
        pattern: Registered photon counts
        cutoff: Cutoff of the returned vector

    Returns:
        FockVector: kappa_bar prod_i (a^dag - beta_i*)^{n_i} |0>

    Raises:
        ValueError: If cutoff < total photon number of the pattern
    """
    U = np.asarray(U, dtype=complex)
    dim = U.shape[0]
    if pattern.modes != dim:
        raise ValueError(f"pattern has {pattern.modes} outputs but the multiport has {dim}")
    if cutoff < pattern.degree:
        raise ValueError(f"cutoff {cutoff} below pattern photon number {pattern.degree}")
    alphas = _full_alphas(alphas, dim)
    alphas[0] = 0.0
    _first_column_weights(U)

    betas = -(U[:, 1:] @ alphas[1:]) / U[:, 0]
    amps = _kappa_bar(U, alphas, pattern) * _factored_amplitudes(betas, pattern.counts, cutoff)
    return FockVector(amps)


def brute_force_engineered_state(
    U: np.ndarray, alphas: Sequence[complex], pattern: DetectionPattern, cutoff: int
) -> FockVector:
    """
    Same state as :func:`engineered_state` by direct simulation.

    Evolves |n_0, ..., n_N> backward through the multiport and projects every
    reference port onto its coherent state.
    """
    U = np.asarray(U, dtype=complex)
    dim = U.shape[0]
    alphas = _full_alphas(alphas, dim)
    photons = pattern.degree
    detected = MultimodeState(
        modes=dim, terms={pattern.counts: 1.0 + 0.0j}, total_photon_cap=photons
    )
    backward = evolve_multimode(U, detected, "backward")
    bras = [np.conj(coherent_state(a, photons).amps) for a in alphas]

    amps = np.zeros(cutoff + 1, dtype=complex)
    for occupation, amplitude in backward.terms.items():
        if occupation[0] > cutoff:
            continue
        weight = amplitude
        for j in range(1, dim):
            weight = weight * bras[j][occupation[j]]
        amps[occupation[0]] += weight
    return FockVector(amps)


def zero_minus_state_efficiency(N: int) -> float:
    """Closed-form efficiency for |0> - |N+1> from one photon in every DFT output."""
    d = N + 1
    beta2 = math.factorial(d) ** (1.0 / d)
    return 2.0 * math.exp(-beta2) * math.factorial(d) / d**d


# --- first-column optimization -------------------------------------------


@dataclass
class _Objective:
    """log |kappa_bar|^2 over z = (x_occupied..., X_free)."""

    betas: np.ndarray
    counts: np.ndarray
    has_free: bool

    def value(self, z: np.ndarray) -> float:
        m = self.betas.size
        x = z[:m]
        if np.any(x <= 0) or (self.has_free and z[m] <= 0):
            return -np.inf
        result = -np.sum(x * np.abs(self.betas) ** 2) + np.sum(self.counts * np.log(x))
        if self.has_free:
            s = np.sum(x * self.betas)
            result -= abs(s) ** 2 / z[m]
        return float(result - sum(math.lgamma(n + 1) for n in self.counts))

    def gradient(self, z: np.ndarray) -> np.ndarray:
        m = self.betas.size
        x = z[:m]
        grad = np.zeros(z.size)
        grad[:m] = -np.abs(self.betas) ** 2 + self.counts / x
        if self.has_free:
            w = z[m]
            s = np.sum(x * self.betas)
            grad[:m] -= 2 * np.real(np.conj(s) * self.betas) / w
            grad[m] = abs(s) ** 2 / w**2
        return grad

    def hessian(self, z: np.ndarray) -> np.ndarray:
        m = self.betas.size
        x = z[:m]
        H = np.zeros((z.size, z.size))
        H[:m, :m] = -np.diag(self.counts / x**2)
        if self.has_free:
            w = z[m]
            s = np.sum(x * self.betas)
            H[:m, :m] -= 2 * np.real(np.outer(self.betas, np.conj(self.betas))) / w
            cross = 2 * np.real(np.conj(s) * self.betas) / w**2
            H[:m, m] = cross
            H[m, :m] = cross
            H[m, m] = -2 * abs(s) ** 2 / w**3
        return H

    def constraints(self) -> Tuple[np.ndarray, np.ndarray]:
        """(A, b) with A z = b; without an empty output sum x_i beta_i = 0 is added."""
        m = self.betas.size
        if self.has_free:
            return np.ones((1, m + 1)), np.array([1.0])
        A = np.vstack([np.ones(m), np.real(self.betas), np.imag(self.betas)])
        return A, np.array([1.0, 0.0, 0.0])


def _row_basis(A: np.ndarray) -> np.ndarray:
    """Orthonormal rows spanning the row space of A."""
    _, singular, vt = np.linalg.svd(A, full_matrices=False)
    rank = int(np.sum(singular > 1e-12 * singular[0]))
    return vt[:rank]


def _project_simplex(y: np.ndarray, floor: float) -> np.ndarray:
    """Euclidean projection onto {z >= floor, sum z = 1}."""
    budget = 1.0 - floor * y.size
    shifted = y - floor
    ordered = np.sort(shifted)[::-1]
    cumulative = np.cumsum(ordered) - budget
    index = np.arange(1, y.size + 1)
    rho = np.nonzero(ordered - cumulative / index > 0)[0][-1]
    tau = cumulative[rho] / (rho + 1)
    return np.maximum(shifted - tau, 0.0) + floor


def _projected_gradient_ascent(
    objective: _Objective, z: np.ndarray, iterations: int = 500
) -> np.ndarray:
    """Armijo-backtracked gradient steps projected back onto the simplex."""
    floor = 1e-9
    step = 1.0
    current = objective.value(z)
    for _ in range(iterations):
        grad = objective.gradient(z)
        accepted = None
        while step > 1e-16:
            candidate = _project_simplex(z + step * grad, floor)
            value = objective.value(candidate)
            if value >= current + 1e-4 * float(np.dot(grad, candidate - z)):
                accepted = (candidate, value)
                break
            step *= 0.5
        if accepted is None:
            break
        candidate, value = accepted
        moved = float(np.max(np.abs(candidate - z)))
        z, current = candidate, value
        if moved < 1e-13:
            break
        step = min(step * 2.0, 1e3)
    return z


def _kkt_residual(objective: _Objective, z: np.ndarray) -> float:
    """Norm of the objective gradient with its constraint-normal part removed."""
    A, _ = objective.constraints()
    grad = objective.gradient(z)
    multipliers, *_ = np.linalg.lstsq(A.T, grad, rcond=None)
    return float(np.linalg.norm(grad - A.T @ multipliers))


def _newton_polish(objective: _Objective, z: np.ndarray, iterations: int = 60) -> np.ndarray:
    """Equality-constrained Newton ascent from a feasible interior point."""
    A = _row_basis(objective.constraints()[0])
    rows = A.shape[0]
    for _ in range(iterations):
        grad = objective.gradient(z)
        H = objective.hessian(z)
        kkt = np.block([[-H, A.T], [A, np.zeros((rows, rows))]])
        rhs = np.concatenate([grad, np.zeros(rows)])
        try:
            direction = np.linalg.solve(kkt, rhs)[: z.size]
        except np.linalg.LinAlgError:
            break
        decrement = float(direction @ (-H) @ direction)
        if decrement < 1e-24:
            break
        step = 1.0
        while np.any(z + step * direction <= 0):
            step *= 0.5
        current = objective.value(z)
        while (
            step > 1e-12
            and objective.value(z + step * direction) < current + 0.25 * step * decrement
        ):
            step *= 0.5
        z = z + step * direction
    return z


def _constrained_start(objective: _Objective) -> np.ndarray:
    """Feasible point by linear programming, improved by SLSQP."""
    A, b = objective.constraints()
    size = A.shape[1]
    floor = 1e-6
    start = linprog(
        c=np.zeros(size), A_eq=A, b_eq=b, bounds=[(floor, 1.0)] * size, method="highs"
    )
    if not start.success:
        raise ValueError(
            "infeasible: no positive first column satisfies sum |U_i0|^2 beta_i = 0"
        )
    result = minimize(
        lambda z: -objective.value(z),
        np.asarray(start.x),
        jac=lambda z: -objective.gradient(z),
        method="SLSQP",
        bounds=[(floor, 1.0)] * size,
        constraints=[{"type": "eq", "fun": lambda z: A @ z - b, "jac": lambda z: A}],
        options={"maxiter": 500, "ftol": 1e-14},
    )
    z = np.asarray(result.x) if result.success else np.asarray(start.x)
    if not result.success:
        logger.warning(f"SLSQP stopped early: {result.message}")
    return np.clip(z, floor, None)


def symmetric_cubic(betas: Sequence[complex]) -> np.ndarray:
    """
    Stationarity cubic for two outputs with roots of equal modulus.

    With x_1 = x_2 = x, s = beta_1 + beta_2 and b = |beta_1|^2 the optimum
    solves (|s|^2 - 4b) x^3 + (4b + 4 - |s|^2) x^2 - (b + 4) x + 1 = 0.

    Returns:
        np.ndarray: Coefficients, highest order first
    """
    beta_1, beta_2 = (complex(b) for b in betas)
    s2 = abs(beta_1 + beta_2) ** 2
    b = abs(beta_1) ** 2
    return np.array([s2 - 4 * b, 4 * b + 4 - s2, -(b + 4), 1.0])


def _objective_for(
    betas: Sequence[complex], pattern: Optional[DetectionPattern]
) -> Tuple[_Objective, DetectionPattern, List[int], List[int], List[complex]]:
    roots = sorted((complex(b) for b in betas), key=_sort_key)
    pattern = pattern or DetectionPattern.canonical(len(roots) + 1)
    assigned = _assign_roots(roots, pattern)
    occupied = sorted(assigned)
    free = [m for m in range(pattern.modes) if m not in assigned]
    objective = _Objective(
        betas=np.array([assigned[m] for m in occupied], dtype=complex),
        counts=np.array([pattern.counts[m] for m in occupied], dtype=float),
        has_free=bool(free),
    )
    return objective, pattern, occupied, free, roots


def first_column_efficiency(
    x: Sequence[float], betas: Sequence[complex], pattern: Optional[DetectionPattern] = None
) -> float:
    """
    Efficiency P_psi reached with first-column weights x_i = |U_i0|^2.

    Empty outputs take the roots that satisfy the first-column constraint at
    least cost; with every output occupied the constraint is not checked.
    """
    x = np.asarray(x, dtype=float)
    pattern = pattern or DetectionPattern.canonical(x.size)
    objective, pattern, occupied, free, roots = _objective_for(betas, pattern)
    z = np.array([x[m] for m in occupied] + ([sum(x[m] for m in free)] if free else []))
    return float(math.exp(objective.value(z)) / abs(kappa_from_roots(roots)) ** 2)


def optimize_first_column(
    betas: Sequence[complex], pattern: Optional[DetectionPattern] = None
) -> Tuple[List[float], float]:
    """
    First-column weights x_i = |U_i0|^2 that maximize the efficiency.

    log |kappa_bar|^2 is concave on the simplex, so the maximum is unique.
    Two symmetric roots are solved with the stationarity cubic; otherwise a
    projected-gradient ascent (or SLSQP from a linear-programming feasible
    point when every output is occupied) is finished by equality-constrained
    Newton steps.

    Args:
        betas: Roots of the target (N of them for the default pattern)
        pattern: Detection pattern (default (0, 1, ..., 1) with N+1 outputs)

    Returns:
        tuple: (x, P_psi) with sum(x) = 1

    Raises:
        ValueError: If the optimum drives some |U_i0| to zero or no positive
            first column satisfies the constraint

    Example:
        >>> betas = characteristic_roots(FockVector(np.ones(3)))
        >>> x, efficiency = optimize_first_column(betas)
        >>> round(efficiency, 4)
        0.1492
    """
    objective, pattern, occupied, free, roots = _objective_for(betas, pattern)
    size = len(occupied) + (1 if free else 0)

    moduli = [abs(b) for b in roots]
    if pattern.counts == (0, 1, 1) and abs(moduli[0] - moduli[1]) < 1e-9 * max(1.0, moduli[0]):
        cubic_roots = np.roots(symmetric_cubic(roots))
        real = [r.real for r in cubic_roots if abs(r.imag) < 1e-10 and 0 < r.real < 0.5]
        if not real:
            raise ValueError("infeasible: stationarity cubic has no root in (0, 1/2)")
        x1 = max(real, key=lambda r: objective.value(np.array([r, r, 1 - 2 * r])))
        z = np.array([x1, x1, 1 - 2 * x1])
    elif free:
        z = _projected_gradient_ascent(objective, np.full(size, 1.0 / size))
        z = _newton_polish(objective, z)
    else:
        z = _newton_polish(objective, _constrained_start(objective))

    if np.min(z) < 1e-8:
        raise ValueError(
            f"infeasible: optimum drives a first-column weight to zero ({np.min(z):.3g})"
        )
    residual = _kkt_residual(objective, z)
    log_validation_result(
        logger, "first-column KKT", residual < _KKT_TOL, {"residual": residual}
    )

    x = np.zeros(pattern.modes)
    for index, m in enumerate(occupied):
        x[m] = z[index]
    for m in free:
        x[m] = z[-1] / len(free)
    efficiency = math.exp(objective.value(z)) / abs(kappa_from_roots(roots)) ** 2
    return [float(v) for v in x], float(efficiency)
