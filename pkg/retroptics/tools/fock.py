"""Single-mode and multimode Fock-space states.

Vectors are amplitude arrays over photon number n = 0..cutoff. Every
constructor that truncates an infinite expansion records the probability it
dropped (``tail_mass``) so callers can decide whether the cutoff was large
enough.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from retroptics.config.settings import PSD_TOL, TAIL_TOL

logger = logging.getLogger(__name__)

Occupation = Tuple[int, ...]


def _frozen_array(values, dtype=complex) -> np.ndarray:
    array = np.array(values, dtype=dtype)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class FockVector:
    """Pure single-mode state as amplitudes over the number basis.

    Attributes:
        amps: Complex amplitudes, index n is the photon number
        normalized: True when sum |amps|^2 = 1 within 1e-12
        tail_mass: Probability lost to truncation (0 when exact)
    """

    amps: np.ndarray
    normalized: bool = False
    tail_mass: float = 0.0

    def __post_init__(self):
        amps = _frozen_array(self.amps).reshape(-1)
        if amps.size == 0:
            raise ValueError("FockVector needs at least one amplitude")
        object.__setattr__(self, "amps", amps)
        if self.normalized and abs(self.norm() ** 2 - 1.0) > TAIL_TOL:
            raise ValueError(
                f"FockVector flagged normalized but has norm^2 {self.norm() ** 2:.15g}"
            )

    @property
    def cutoff(self) -> int:
        return self.amps.size - 1

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def normalize(self) -> "FockVector":
        """Return a unit-norm copy.

        Raises:
            ValueError: If the vector is zero
        """
        norm = self.norm()
        if norm == 0.0:
            raise ValueError("cannot normalize a zero vector")
        return FockVector(self.amps / norm, normalized=True)

    def padded(self, cutoff: int) -> "FockVector":
        """Zero-pad (never truncate) to a larger cutoff."""
        if cutoff <= self.cutoff:
            return self
        amps = np.zeros(cutoff + 1, dtype=complex)
        amps[: self.amps.size] = self.amps
        return FockVector(amps, normalized=self.normalized, tail_mass=self.tail_mass)

    def phase_shift(self, phi: float) -> "FockVector":
        """Apply exp(i n phi)."""
        phases = np.exp(1j * phi * np.arange(self.amps.size))
        return FockVector(self.amps * phases, self.normalized, self.tail_mass)

    def to_density(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amps, self.amps.conj()))

    def to_dict(self) -> Dict:
        return {
            "cutoff": self.cutoff,
            "re": [float(v) for v in self.amps.real],
            "im": [float(v) for v in self.amps.imag],
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "FockVector":
        """Build from ``{"cutoff", "re", "im"}`` (``im`` optional)."""
        re = np.asarray(data["re"], dtype=float)
        im = np.asarray(data.get("im", np.zeros_like(re)), dtype=float)
        if re.shape != im.shape:
            raise ValueError("'re' and 'im' must have the same length")
        if "cutoff" in data and int(data["cutoff"]) != re.size - 1:
            raise ValueError(
                f"cutoff {data['cutoff']} does not match {re.size} amplitudes"
            )
        return cls(re + 1j * im)


@dataclass(frozen=True)
class DensityMatrix:
    """Single-mode operator in the number basis.

    Physical states are Hermitian with unit trace; unnormalized PDOs and MDOs
    relax the trace but stay non-negative.
    """

    entries: np.ndarray

    def __post_init__(self):
        entries = _frozen_array(self.entries)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError(f"DensityMatrix must be square, got shape {entries.shape}")
        object.__setattr__(self, "entries", entries)

    @property
    def cutoff(self) -> int:
        return self.entries.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def is_hermitian(self, tol: float = PSD_TOL) -> bool:
        return bool(np.max(np.abs(self.entries - self.entries.conj().T), initial=0.0) <= tol)

    def min_eigenvalue(self) -> float:
        hermitian = 0.5 * (self.entries + self.entries.conj().T)
        return float(np.linalg.eigvalsh(hermitian)[0])

    def is_non_negative(self, tol: float = PSD_TOL) -> bool:
        return self.is_hermitian(tol) and self.min_eigenvalue() >= -tol

    def normalize(self) -> "DensityMatrix":
        trace = self.trace()
        if abs(trace) == 0.0:
            raise ValueError("cannot normalize an operator with zero trace")
        return DensityMatrix(self.entries / trace)

    def padded(self, cutoff: int) -> "DensityMatrix":
        if cutoff <= self.cutoff:
            return self
        entries = np.zeros((cutoff + 1, cutoff + 1), dtype=complex)
        entries[: self.dim, : self.dim] = self.entries
        return DensityMatrix(entries)

    def phase_shift(self, phi: float) -> "DensityMatrix":
        """Conjugate by exp(i n phi): rho_nm -> exp(i (n - m) phi) rho_nm."""
        phases = np.exp(1j * phi * np.arange(self.dim))
        return DensityMatrix(self.entries * np.outer(phases, phases.conj()))

    def to_dict(self) -> Dict:
        return {
            "cutoff": self.cutoff,
            "entries": [[float(v.real), float(v.imag)] for v in self.entries.reshape(-1)],
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "DensityMatrix":
        dim = int(data["cutoff"]) + 1
        pairs = np.asarray(data["entries"], dtype=float)
        if pairs.shape != (dim * dim, 2):
            raise ValueError(f"expected {dim * dim} [re, im] pairs, got {pairs.shape[0]}")
        return cls((pairs[:, 0] + 1j * pairs[:, 1]).reshape(dim, dim))


@dataclass(frozen=True)
class MultimodeState:
    """Sparse multimode pure state keyed by occupation tuples.

    Treat ``terms`` as read-only; every operation builds a new state.
    """

    modes: int
    terms: Dict[Occupation, complex] = field(default_factory=dict)
    total_photon_cap: int = 0

    def __post_init__(self):
        for occupation in self.terms:
            if len(occupation) != self.modes:
                raise ValueError(
                    f"occupation {occupation} does not have {self.modes} modes"
                )
            if sum(occupation) > self.total_photon_cap:
                raise ValueError(
                    f"occupation {occupation} exceeds photon cap {self.total_photon_cap}"
                )

    @classmethod
    def product(cls, vectors: Sequence["FockVector"]) -> "MultimodeState":
        return tensor_product(*vectors)

    def norm2(self) -> float:
        return float(sum(abs(a) ** 2 for a in self.terms.values()))

    def amplitude(self, occupation: Sequence[int]) -> complex:
        return complex(self.terms.get(tuple(occupation), 0.0))

    def max_photons(self) -> int:
        return max((sum(k) for k in self.terms), default=0)

    def photon_number_distribution(self) -> Dict[int, float]:
        """Probability of each total photon number."""
        distribution: Dict[int, float] = {}
        for occupation, amplitude in self.terms.items():
            total = sum(occupation)
            distribution[total] = distribution.get(total, 0.0) + abs(amplitude) ** 2
        return distribution


def number_state(n: int, cutoff: Optional[int] = None) -> FockVector:
    """|n> on a cutoff of at least n."""
    if n < 0:
        raise ValueError(f"photon number must be non-negative, got {n}")
    cutoff = n if cutoff is None else cutoff
    if cutoff < n:
        raise ValueError(f"cutoff {cutoff} below photon number {n}")
    amps = np.zeros(cutoff + 1, dtype=complex)
    amps[n] = 1.0
    return FockVector(amps, normalized=True)


def coherent_state(alpha: complex, cutoff: int) -> FockVector:
    """
    Truncated coherent state exp(-|alpha|^2/2) alpha^n / sqrt(n!).

    Args:
        alpha: Complex amplitude
        cutoff: Largest photon number kept

    Returns:
        FockVector: Unrenormalized amplitudes; ``tail_mass`` is the Poisson
        probability above the cutoff and ``normalized`` is set only when that
        tail is below 1e-12.
    """
    if cutoff < 0:
        raise ValueError(f"cutoff must be non-negative, got {cutoff}")
    alpha = complex(alpha)
    amps = np.empty(cutoff + 1, dtype=complex)
    amps[0] = math.exp(-0.5 * abs(alpha) ** 2)
    for n in range(1, cutoff + 1):
        amps[n] = amps[n - 1] * alpha / math.sqrt(n)
    tail = max(0.0, 1.0 - float(np.sum(np.abs(amps) ** 2)))
    return FockVector(amps, normalized=tail < TAIL_TOL, tail_mass=tail)


def binomial_state(
    N: int, cutoff: Optional[int] = None, alternating: bool = False
) -> FockVector:
    """
    Binomial state 2^(-N/2) (+-1)^n C(N, n)^(1/2).

    Args:
        N: Binomial degree
        cutoff: Vector cutoff (default N)
        alternating: Use (-1)^n signs

    Raises:
        ValueError: If cutoff < N
    """
    if N < 0:
        raise ValueError(f"binomial degree must be non-negative, got {N}")
    cutoff = N if cutoff is None else cutoff
    if cutoff < N:
        raise ValueError("cutoff below binomial degree")
    amps = np.zeros(cutoff + 1, dtype=complex)
    sign = -1.0 if alternating else 1.0
    for n in range(N + 1):
        amps[n] = sign**n * math.sqrt(math.comb(N, n) / 2.0**N)
    return FockVector(amps / np.linalg.norm(amps), normalized=True)


def hermite(n: int, x, t: complex | None = None):
    """
    Hermite polynomial by the three-term recurrence.

    Without ``t`` this is the physicists' H_n(x). With ``t`` it is the scaled
    factor h_n = (t/2)^(n/2) H_n(x / sqrt(2t)) from h_{k+1} = x h_k - k t h_{k-1},
    which has no square-root branch and stays finite as t -> 0.
    """
    if n < 0:
        raise ValueError(f"Hermite order must be non-negative, got {n}")
    x = np.asarray(x)
    if t is None:
        x, t = 2 * x, 2.0
    h_prev = np.zeros_like(x, dtype=np.result_type(x, t, float))
    h = np.ones_like(h_prev)
    for k in range(n):
        h_prev, h = h, x * h - k * t * h_prev
    return h


def squeezed_state(alpha: complex, t: complex, cutoff: int) -> FockVector:
    """
    Displaced squeezed state with squeeze parameter t = exp(i phi) tanh|zeta|.

    Amplitudes carry the scaled Hermite factor ``hermite(n, y, t)`` with
    y = alpha + t alpha*.

    Args:
        alpha: Displacement parameter
        t: Complex squeeze parameter, |t| < 1
        cutoff: Largest photon number kept

    Returns:
        FockVector: Amplitudes with the physical prefactor
        (cosh|zeta|)^(-1/2) exp(-[|alpha|^2 + t alpha*^2]/2)

    Raises:
        ValueError: If |t| >= 1
    """
    alpha = complex(alpha)
    t = complex(t)
    if abs(t) >= 1.0:
        raise ValueError("unphysical squeezing")
    if cutoff < 0:
        raise ValueError(f"cutoff must be non-negative, got {cutoff}")

    prefactor = (1.0 - abs(t) ** 2) ** 0.25 * np.exp(
        -0.5 * (abs(alpha) ** 2 + t * alpha.conjugate() ** 2)
    )
    y = alpha + t * alpha.conjugate()

    amps = np.empty(cutoff + 1, dtype=complex)
    scale = 1.0  # 1/sqrt(n!)
    for n in range(cutoff + 1):
        if n > 0:
            scale /= math.sqrt(n)
        amps[n] = prefactor * complex(hermite(n, y, t)) * scale

    tail = max(0.0, 1.0 - float(np.sum(np.abs(amps) ** 2)))
    return FockVector(amps, normalized=tail < TAIL_TOL, tail_mass=tail)


def thermal_state(mean_photons: float, cutoff: int) -> DensityMatrix:
    """Diagonal thermal (Bose-Einstein) state, renormalized on the cutoff."""
    if mean_photons < 0:
        raise ValueError(f"mean photon number must be non-negative, got {mean_photons}")
    n = np.arange(cutoff + 1)
    if mean_photons == 0:
        probs = (n == 0).astype(float)
    else:
        probs = (mean_photons / (1 + mean_photons)) ** n / (1 + mean_photons)
    return DensityMatrix(np.diag(probs / probs.sum()).astype(complex))


def inner_product(a: FockVector, b: FockVector) -> complex:
    """<a|b>, zero-padding the shorter vector."""
    size = min(a.amps.size, b.amps.size)
    return complex(np.vdot(a.amps[:size], b.amps[:size]))


def tensor_product(*vectors: FockVector) -> MultimodeState:
    """Product state of single-mode vectors, one per mode."""
    if not vectors:
        raise ValueError("tensor_product needs at least one vector")
    terms: Dict[Occupation, complex] = {(): 1.0 + 0.0j}
    for vector in vectors:
        nonzero = [(n, a) for n, a in enumerate(vector.amps) if a != 0]
        terms = {
            occupation + (n,): amplitude * a
            for occupation, amplitude in terms.items()
            for n, a in nonzero
        }
    cap = sum(v.cutoff for v in vectors)
    return MultimodeState(modes=len(vectors), terms=terms, total_photon_cap=cap)


def partial_trace(
    state: Union[MultimodeState, np.ndarray],
    keep: Iterable[int],
    dims: Optional[Sequence[int]] = None,
) -> DensityMatrix:
    """
    Reduced operator on the kept modes.

    Args:
        state: Sparse multimode pure state, or a dense multimode operator
            whose tensor factors have sizes ``dims``
        keep: Mode indices to keep (ordered as given)
        dims: Per-mode dimensions, required for dense input

    Returns:
        DensityMatrix: Operator on the kept modes; several kept modes are
        flattened row-major, each with dimension total_photon_cap + 1 (sparse)
        or dims[k] (dense).
    """
    keep = list(keep)
    if not keep:
        raise ValueError("keep must name at least one mode")

    if isinstance(state, MultimodeState):
        if any(k < 0 or k >= state.modes for k in keep):
            raise ValueError(f"keep {keep} out of range for {state.modes} modes")
        local = state.total_photon_cap + 1
        size = local ** len(keep)
        traced = [m for m in range(state.modes) if m not in keep]
        groups: Dict[Occupation, Dict[int, complex]] = {}
        for occupation in sorted(state.terms):
            index = 0
            for k in keep:
                index = index * local + occupation[k]
            rest = tuple(occupation[m] for m in traced)
            bucket = groups.setdefault(rest, {})
            bucket[index] = bucket.get(index, 0.0) + state.terms[occupation]
        reduced = np.zeros((size, size), dtype=complex)
        for bucket in groups.values():
            vector = np.zeros(size, dtype=complex)
            for index, amplitude in bucket.items():
                vector[index] = amplitude
            reduced += np.outer(vector, vector.conj())
        return DensityMatrix(reduced)

    if dims is None:
        raise ValueError("dims are required for a dense multimode operator")
    dims = list(dims)
    operator = np.asarray(state, dtype=complex)
    total = int(np.prod(dims))
    if operator.shape != (total, total):
        raise ValueError(f"operator shape {operator.shape} does not match dims {dims}")
    n_modes = len(dims)
    tensor = operator.reshape(dims + dims)
    letters = "abcdefghijklmnopqrstuvwxyz"
    rows = list(letters[:n_modes])
    cols = list(letters[n_modes : 2 * n_modes])
    for m in range(n_modes):
        if m not in keep:
            cols[m] = rows[m]
    out = "".join(rows[k] for k in keep) + "".join(cols[k] for k in keep)
    reduced = np.einsum("".join(rows) + "".join(cols) + "->" + out, tensor)
    size = int(np.prod([dims[k] for k in keep]))
    return DensityMatrix(reduced.reshape(size, size))


def tail_mass(vector: FockVector) -> float:
    """Probability dropped by truncation (0 for vectors that were never cut)."""
    return float(vector.tail_mass)
