"""Linear-optical multiports: beam splitters, Reck factorization, evolution.

Mode-transform convention (used everywhere in the package): a multiport S
with matrix U maps input creation operators forward as

    S a_m^dag S^dag = sum_n U[n, m] a_n^dag

so a photon entering port m leaves in the superposition given by column m of
U. The backward (retrodictive) transform is

    S^dag a_m^dag S = sum_n conj(U[m, n]) a_n^dag.

A cascade S = S2 S1 has matrix U2 @ U1.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Dict, Iterator, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np

from retroptics.config.settings import PHOTON_CAP, UNITARITY_TOL
from retroptics.logging_config import log_validation_result
from retroptics.tools.fock import DensityMatrix, FockVector, MultimodeState, Occupation

logger = logging.getLogger(__name__)

Direction = Literal["forward", "backward"]

_ZERO_TOL = 1e-12


def _wrap_phase(x: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    return float(np.pi - np.mod(np.pi - x, 2 * np.pi))


def unitarity_error(U: np.ndarray) -> float:
    """Max-abs deviation of U^dag U from the identity."""
    U = np.asarray(U)
    return float(np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0]))))


def check_unitary(U: np.ndarray, tol: float = UNITARITY_TOL) -> np.ndarray:
    """
    Validate and return U as a complex square array.

    Raises:
        ValueError: If U is not square or not unitary within tol
    """
    U = np.asarray(U, dtype=complex)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise ValueError(f"unitary must be square, got shape {U.shape}")
    deviation = unitarity_error(U)
    if deviation > tol:
        raise ValueError(f"non-unitary input: max |U^dag U - 1| = {deviation:.3g}")
    return U


def bs_matrix(theta: float, phi: float, dim: int, p: int, q: int) -> np.ndarray:
    """
    Beam splitter with input phase shifter, embedded in dim modes.

    The (q, p) block is [[e^{i phi} cos(theta), i sin(theta)],
    [i e^{i phi} sin(theta), cos(theta)]]; reflectance r = sin(theta),
    transmittance t = cos(theta).

    Args:
        theta: Mixing angle in radians
        phi: Phase on port q in radians
        dim: Number of modes
        p: Higher mode index
        q: Lower mode index (q < p)

    Returns:
        np.ndarray: dim x dim unitary
    """
    if not 0 <= q < p < dim:
        raise ValueError(f"need 0 <= q < p < dim, got p={p}, q={q}, dim={dim}")
    T = np.eye(dim, dtype=complex)
    phase = np.exp(1j * phi)
    c, s = np.cos(theta), np.sin(theta)
    T[q, q] = phase * c
    T[q, p] = 1j * s
    T[p, q] = 1j * phase * s
    T[p, p] = c
    return T


def dft_matrix(dim: int) -> np.ndarray:
    """Symmetric multiport with entries exp(i 2 pi n m / dim) / sqrt(dim)."""
    if dim < 1:
        raise ValueError(f"dim must be at least 1, got {dim}")
    n = np.arange(dim)
    return np.exp(2j * np.pi * np.outer(n, n) / dim) / np.sqrt(dim)


def two_bs_cascade() -> np.ndarray:
    """Three-mode cascade of two 50:50 beam splitters, modes (0,1) then (0,2)."""
    first = bs_matrix(np.pi / 4, 0.0, 3, p=1, q=0)
    second = bs_matrix(np.pi / 4, 0.0, 3, p=2, q=0)
    return second @ first


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary from the QR decomposition of a Ginibre matrix."""
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    diagonal = np.diag(r)
    return q * (diagonal / np.abs(diagonal))


def unitary_with_first_column(column: Sequence[complex]) -> np.ndarray:
    """
    Complete a unit vector to a unitary whose first column it is.

    Only the first column matters for state engineering; the remaining
    columns are whatever the QR completion produces.
    """
    v = np.asarray(column, dtype=complex)
    norm = np.linalg.norm(v)
    if norm == 0:
        raise ValueError("first column must be nonzero")
    v = v / norm
    seed = np.eye(v.size, dtype=complex)
    seed[:, 0] = v
    q, _ = np.linalg.qr(seed)
    overlap = np.vdot(q[:, 0], v)
    q[:, 0] *= overlap / abs(overlap)
    return q


@dataclass(frozen=True)
class BSElement:
    """Beam splitter T_pq acting on modes q < p."""

    p: int
    q: int
    theta: float
    phi: float

    def __post_init__(self):
        if not 0 <= self.q < self.p:
            raise ValueError(f"need 0 <= q < p, got p={self.p}, q={self.q}")
        if not -1e-12 <= self.theta <= np.pi / 2 + 1e-12:
            raise ValueError(f"theta must lie in [0, pi/2], got {self.theta}")

    def matrix(self, dim: int) -> np.ndarray:
        return bs_matrix(self.theta, self.phi, dim, self.p, self.q)

    @property
    def reflectivity(self) -> float:
        return float(np.sin(self.theta) ** 2)


@dataclass(frozen=True)
class MultiportPlan:
    """Ordered beam-splitter elements plus the output phase diagonal."""

    dim: int
    elements: Tuple[BSElement, ...] = ()
    output_phases: Tuple[float, ...] = field(default=())

    def __post_init__(self):
        phases = tuple(float(d) for d in self.output_phases) or (0.0,) * self.dim
        if len(phases) != self.dim:
            raise ValueError(f"expected {self.dim} output phases, got {len(phases)}")
        for element in self.elements:
            if element.p >= self.dim:
                raise ValueError(f"element on mode {element.p} outside {self.dim} modes")
        object.__setattr__(self, "output_phases", phases)
        object.__setattr__(self, "elements", tuple(self.elements))

    def to_dict(self) -> Dict:
        return {
            "dim": self.dim,
            "elements": [
                {"p": e.p, "q": e.q, "theta": e.theta, "phi": e.phi} for e in self.elements
            ],
            "delta": list(self.output_phases),
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "MultiportPlan":
        elements = tuple(
            BSElement(int(e["p"]), int(e["q"]), float(e["theta"]), float(e["phi"]))
            for e in data.get("elements", [])
        )
        return cls(int(data["dim"]), elements, tuple(data.get("delta", ())))

    def netlist_rows(self) -> List[List]:
        """One row per element: index, p, q, theta, phi, reflectivity."""
        return [
            [index, e.p, e.q, e.theta, e.phi, e.reflectivity]
            for index, e in enumerate(self.elements)
        ]


def realize(plan: MultiportPlan) -> np.ndarray:
    """Matrix D . T_1 . T_2 ... for the plan's elements in order."""
    D = np.diag(np.exp(1j * np.asarray(plan.output_phases)))
    return reduce(lambda acc, e: acc @ e.matrix(plan.dim), plan.elements, D)


def reck_decompose(U: np.ndarray) -> MultiportPlan:
    """
    Factorize a unitary as D . R(2) . R(3) ... R(dim).

    R(d) = T_{d-1,0} T_{d-1,1} ... T_{d-1,d-2} is fixed by requiring that
    row d-1 of the current matrix equals e^{i delta} times row d-1 of R(d);
    the matrix is then multiplied by R(d)^dag and the procedure repeats on
    the upper-left block. Entries of zero magnitude give theta = phi = 0.

    Args:
        U: Unitary matrix

    Returns:
        MultiportPlan: Elements ordered T10, T20, T21, T30, ... and the
        output phases delta_n wrapped to (-pi, pi]

    Raises:
        ValueError: If U is not unitary
    """
    U = check_unitary(U).copy()
    dim = U.shape[0]
    rows: Dict[int, List[BSElement]] = {}

    for d in range(dim, 1, -1):
        last = d - 1
        row = U[last, :d]
        delta = float(np.angle(row[last])) if abs(row[last]) > _ZERO_TOL else 0.0
        elements = []
        for k in range(last):
            remaining = float(np.sqrt(np.sum(np.abs(row[k:]) ** 2)))
            magnitude = abs(row[k])
            if remaining < _ZERO_TOL or magnitude < _ZERO_TOL:
                theta, phi = 0.0, 0.0
            else:
                theta = float(np.arcsin(np.clip(magnitude / remaining, 0.0, 1.0)))
                phi = _wrap_phase(float(np.angle(row[k])) - np.pi / 2 - delta)
            elements.append(BSElement(p=last, q=k, theta=theta, phi=phi))
        R = reduce(lambda acc, e: acc @ e.matrix(dim), elements, np.eye(dim, dtype=complex))
        U = U @ R.conj().T
        rows[last] = elements

    phases = tuple(_wrap_phase(float(np.angle(U[n, n]))) for n in range(dim))
    ordered = tuple(e for last in sorted(rows) for e in rows[last])
    plan = MultiportPlan(dim=dim, elements=ordered, output_phases=phases)
    return plan


def _compositions(total: int, parts: int) -> Iterator[Tuple[int, ...]]:
    """All tuples of `parts` non-negative integers summing to `total`."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _power_expansion(
    coeffs: np.ndarray, power: int
) -> Dict[Occupation, complex]:
    """(sum_n c_n a_n^dag)^power / sqrt(power!) as a map exponent -> coefficient."""
    norm = 1.0 / math.sqrt(math.factorial(power))
    expansion: Dict[Occupation, complex] = {}
    for exponents in _compositions(power, coeffs.size):
        multinomial = math.factorial(power)
        value = 1.0 + 0.0j
        for n, e in enumerate(exponents):
            if e:
                multinomial //= math.factorial(e)
                value *= coeffs[n] ** e
        if value != 0:
            expansion[exponents] = multinomial * value * norm
    return expansion


def _multiply(
    left: Dict[Occupation, complex], right: Dict[Occupation, complex]
) -> Dict[Occupation, complex]:
    product: Dict[Occupation, complex] = {}
    for a, ca in left.items():
        for b, cb in right.items():
            key = tuple(x + y for x, y in zip(a, b))
            product[key] = product.get(key, 0.0) + ca * cb
    return product


def evolve_multimode(
    U: np.ndarray, state: MultimodeState, direction: Direction = "forward"
) -> MultimodeState:
    """
    Exact Schrodinger-picture evolution of a sparse multimode state.

    Each occupation tuple is rewritten as prod_m (a_m^dag)^{n_m} / sqrt(n_m!)
    acting on vacuum, every creation operator is replaced by its linear
    image under U (conjugated for backward evolution) and the product is
    expanded multinomially with exact integer coefficients.

    Args:
        U: Mode-transform matrix of the multiport
        state: Input state
        direction: "forward" for S|state>, "backward" for S^dag|state>

    Returns:
        MultimodeState: Evolved state with the same photon cap

    Raises:
        ValueError: If modes mismatch or any term exceeds the photon cap
    """
    U = np.asarray(U, dtype=complex)
    if U.shape != (state.modes, state.modes):
        raise ValueError(f"unitary of shape {U.shape} does not act on {state.modes} modes")
    if state.max_photons() > PHOTON_CAP:
        raise ValueError(
            f"photon cap exceeded: {state.max_photons()} photons > {PHOTON_CAP}"
        )
    if direction == "forward":
        images = [U[:, m] for m in range(state.modes)]
    elif direction == "backward":
        images = [U[m, :].conj() for m in range(state.modes)]
    else:
        raise ValueError(f"direction must be 'forward' or 'backward', got '{direction}'")

    cache: Dict[Tuple[int, int], Dict[Occupation, complex]] = {}
    vacuum = (0,) * state.modes
    result: Dict[Occupation, complex] = {}
    for occupation in sorted(state.terms):
        amplitude = state.terms[occupation]
        if amplitude == 0:
            continue
        polynomial: Dict[Occupation, complex] = {vacuum: 1.0 + 0.0j}
        for m, power in enumerate(occupation):
            if power == 0:
                continue
            if (m, power) not in cache:
                cache[(m, power)] = _power_expansion(images[m], power)
            polynomial = _multiply(polynomial, cache[(m, power)])
        for exponents, coefficient in polynomial.items():
            weight = math.sqrt(math.prod(math.factorial(e) for e in exponents))
            result[exponents] = result.get(exponents, 0.0) + amplitude * coefficient * weight

    terms = {k: v for k, v in sorted(result.items()) if abs(v) > 1e-15}
    return MultimodeState(
        modes=state.modes, terms=terms, total_photon_cap=state.total_photon_cap
    )


def conditional_bs_backaction(N: int, theta: float, cutoff: int) -> np.ndarray:
    """
    Non-unitary operator (i r a^dag)^N t^{n} / sqrt(N!) on a single mode.

    It is what a beam splitter does to the mode that continues when N
    photons are counted in the other output and its input was vacuum.

    Args:
        N: Photons detected in the reflected output
        theta: Mixing angle, r = sin(theta), t = cos(theta)
        cutoff: Matrix truncation

    Returns:
        np.ndarray: (cutoff+1) x (cutoff+1) matrix with entries
        B[N+m, m] = (i r)^N t^m sqrt((N+m)! / (m! N!))
    """
    if N < 0:
        raise ValueError(f"detected photon number must be non-negative, got {N}")
    r, t = np.sin(theta), np.cos(theta)
    B = np.zeros((cutoff + 1, cutoff + 1), dtype=complex)
    for m in range(cutoff + 1 - N):
        B[N + m, m] = (1j * r) ** N * t**m * math.sqrt(math.comb(N + m, m))
    return B


def retrodictive_mdo(
    U: np.ndarray,
    pattern: Sequence[int],
    signal_mode: int = 0,
    reference_mode: Optional[int] = None,
    reference: Optional[Union[FockVector, DensityMatrix]] = None,
) -> DensityMatrix:
    """
    Signal MDO for one detection pattern.

    The pattern is evolved backward through the multiport and projected on
    the known inputs: vacuum in every mode other than the signal and the
    reference, and the reference state (pure or mixed) in ``reference_mode``.
    With Phi[a, j] the amplitude of |a> (signal) |j> (reference) in
    S^dag |pattern>, the MDO is Phi conj(rho_ref) Phi^dag, so Tr[rho MDO] is
    the probability of the pattern.

    Args:
        U: Mode-transform matrix
        pattern: Photocounts at every output
        signal_mode: Input port of the signal
        reference_mode: Input port of the reference, or None for all-vacuum
        reference: Reference state in ``reference_mode``

    Returns:
        DensityMatrix: Unnormalized MDO over 0..sum(pattern) signal photons
    """
    U = np.asarray(U, dtype=complex)
    pattern = tuple(int(n) for n in pattern)
    modes = U.shape[0]
    if len(pattern) != modes:
        raise ValueError(f"pattern {pattern} does not have {modes} modes")
    if (reference_mode is None) != (reference is None):
        raise ValueError("reference_mode and reference must be given together")
    total = sum(pattern)

    detected = MultimodeState(modes=modes, terms={pattern: 1.0 + 0.0j}, total_photon_cap=total)
    backward = evolve_multimode(U, detected, "backward")
    known = {signal_mode} if reference_mode is None else {signal_mode, reference_mode}
    phi = np.zeros((total + 1, total + 1), dtype=complex)
    for occupation, amplitude in backward.terms.items():
        if any(occupation[m] for m in range(modes) if m not in known):
            continue
        j = 0 if reference_mode is None else occupation[reference_mode]
        phi[occupation[signal_mode], j] += amplitude

    ref = np.zeros((total + 1, total + 1), dtype=complex)
    if reference is None:
        ref[0, 0] = 1.0
    else:
        if isinstance(reference, FockVector):
            reference = reference.to_density()
        ref = reference.padded(total).entries[: total + 1, : total + 1]
    return DensityMatrix(phi @ ref.conj() @ phi.conj().T)


def verify_plan(plan: MultiportPlan, U: np.ndarray, tol: float = 1e-8) -> bool:
    """Check that a plan reproduces U and log the outcome."""
    deviation = float(np.max(np.abs(realize(plan) - np.asarray(U))))
    ok = deviation <= tol
    log_validation_result(
        logger, "reck round trip", ok, None if ok else {"max_deviation": deviation}
    )
    return ok
