"""Simulated measurement schemes built on retrodictive MDOs.

Three set-ups are covered:

* the double beam splitter: the signal (mode 0) meets vacuum (mode 1) on a
  first beam splitter, then the continuing beam meets a reference (mode 2)
  on a second one; counting (n0, N, n2) measures rho_{N, N+lam} with
  lam = n0 + n2,
* the single beam splitter with the reference (|0> + |lam>)/sqrt(2),
* the eight-port DFT interferometer that projects the signal on truncated
  phase states when one output stays empty.

Probabilities are always Tr[rho MDO]; Monte Carlo only samples from them.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import (
    Any,
    Callable,
    Dict,
    List,
    Literal,
    Mapping,
    Optional,
    Sequence,
    Tuple,
    Union,
)

import numpy as np

from retroptics.config.settings import (
    DEFAULT_GRID_SIZE,
    DEFAULT_N_MAX,
    PHOTON_CAP,
    get_default_seed,
)
from retroptics.logging_config import log_simulation_run
from retroptics.schemas import CountsFile, ExperimentConfig, StateSpec
from retroptics.tools.detection import (
    binomial_stderr,
    corrected_retained,
    detector_transform,
    retained_from_counts,
    sample_counts,
    split_trials,
)
from retroptics.tools.fock import (
    DensityMatrix,
    FockVector,
    MultimodeState,
    binomial_state,
    coherent_state,
    number_state,
    squeezed_state,
    thermal_state,
)
from retroptics.tools.multiport import bs_matrix, evolve_multimode, retrodictive_mdo
from retroptics.tools.phase import (
    PhaseDistribution,
    phase_distribution,
    phase_pattern,
    reconstruct_distribution,
    sample_angles,
    trig_moments,
)

logger = logging.getLogger(__name__)

StateLike = Union[DensityMatrix, FockVector]
Pattern = Tuple[int, ...]
EstimatorMode = Literal["double_bs", "steuernagel_vaccaro"]
ProbabilitySource = Literal["counts", "analytic"]

# Reference phase settings are step * pi / lam
PHASE_STEPS = (0.0, 0.5, 1.0, 1.5)
_STEP_WEIGHTS = {0.0: 1.0 + 0.0j, 0.5: -1j, 1.0: -1.0 + 0.0j, 1.5: 1j}

EIGHT_PORT_N = 3
EIGHT_PORT_PATTERNS: Tuple[Pattern, ...] = tuple(
    phase_pattern(EIGHT_PORT_N, m) for m in range(EIGHT_PORT_N + 1)
)

RECORD_TOL = 1e-12
_ANGLE_TOL = 1e-9
_ZERO_SCALING = 1e-300


# --- input states -------------------------------------------------------------


def mixed_coherent_reference(alpha: complex, lam: int, cutoff: int) -> DensityMatrix:
    """
    Equal mixture (1/lam) sum_j |alpha_j><alpha_j|, alpha_j = alpha exp(2 pi i j / lam).

    Entries rho_{n,m} vanish unless n - m is a multiple of lam. Amplitudes
    are the truncated coherent ones, not renormalized.

    Raises:
        ValueError: If lam < 1
    """
    if lam < 1:
        raise ValueError(f"lambda must be at least 1, got {lam}")
    entries = np.zeros((cutoff + 1, cutoff + 1), dtype=complex)
    for j in range(lam):
        component = complex(alpha) * np.exp(2j * np.pi * j / lam)
        amps = coherent_state(component, cutoff).amps
        entries += np.outer(amps, amps.conj())
    return DensityMatrix(entries / lam)


def superposition_reference(lam: int, cutoff: Optional[int] = None) -> FockVector:
    """(|0> + |lam>)/sqrt(2)."""
    if lam < 1:
        raise ValueError(f"lambda must be at least 1, got {lam}")
    cutoff = lam if cutoff is None else cutoff
    if cutoff < lam:
        raise ValueError(f"cutoff {cutoff} below lambda {lam}")
    amps = np.zeros(cutoff + 1, dtype=complex)
    amps[0] = amps[lam] = 1 / math.sqrt(2)
    return FockVector(amps, normalized=True)


def build_state(spec: StateSpec) -> StateLike:
    """Turn a validated :class:`StateSpec` into a vector or density matrix."""
    if spec.kind == "coherent":
        return coherent_state(spec.complex_alpha(), spec.cutoff)
    if spec.kind == "fock":
        amps = [complex(re, im) for re, im in spec.amplitudes or []]
        return FockVector(amps).normalize()
    if spec.kind == "number":
        return number_state(int(spec.n or 0))
    if spec.kind == "thermal":
        return thermal_state(float(spec.mean_photons or 0.0), spec.cutoff)
    if spec.kind == "binomial":
        return binomial_state(int(spec.degree or 0), alternating=spec.alternating)
    if spec.kind == "squeezed":
        t = complex(spec.t[0], spec.t[1]) if spec.t else 0j
        return squeezed_state(spec.complex_alpha(), t, spec.cutoff)
    if spec.kind == "mixed_coherent":
        return mixed_coherent_reference(
            spec.complex_alpha(), int(spec.lam or 1), spec.cutoff
        )
    if spec.kind == "superposition":
        return superposition_reference(int(spec.lam or 1))
    raise ValueError(f"unknown state kind '{spec.kind}'")


def _as_density(rho: StateLike) -> DensityMatrix:
    return rho.to_density() if isinstance(rho, FockVector) else rho


def _pure_components(state: StateLike) -> List[Tuple[float, np.ndarray]]:
    """(weight, amplitudes) pairs whose mixture is the state."""
    if isinstance(state, FockVector):
        return [(1.0, np.asarray(state.amps))]
    hermitian = 0.5 * (state.entries + state.entries.conj().T)
    weights, vectors = np.linalg.eigh(hermitian)
    return [(float(w), vectors[:, k]) for k, w in enumerate(weights) if w > RECORD_TOL]


def _trace_probability(rho: StateLike, mdo: DensityMatrix) -> float:
    entries = _as_density(rho).padded(mdo.cutoff).entries[: mdo.dim, : mdo.dim]
    return float(np.real(np.sum(entries * mdo.entries.T)))


# --- double and single beam-splitter apparatus ---------------------------------


def double_bs_unitary(bs1_theta: float, bs2_theta: float) -> np.ndarray:
    """Modes (0, 1) mix first, then modes (0, 2)."""
    first = bs_matrix(bs1_theta, 0.0, 3, p=1, q=0)
    second = bs_matrix(bs2_theta, 0.0, 3, p=2, q=0)
    return second @ first


@dataclass(frozen=True)
class DoubleBeamSplitter:
    """Two beam splitters with a mixed coherent reference on the second.

    Attributes:
        alpha: Coherent amplitude of the reference mixture
        lam: Order of the measured off-diagonal elements
        bs1_theta: First beam splitter, r = sin(bs1_theta)
        bs2_theta: Second beam splitter
    """

    alpha: complex
    lam: int = 1
    bs1_theta: float = math.pi / 4
    bs2_theta: float = math.pi / 4

    mode: EstimatorMode = field(default="double_bs", init=False)

    def unitary(self) -> np.ndarray:
        return double_bs_unitary(self.bs1_theta, self.bs2_theta)

    def mdo(self, pattern: Sequence[int], reference_phase: float = 0.0) -> DensityMatrix:
        """Signal MDO for counts (n0, N, n2), reference shifted by reference_phase."""
        reference = mixed_coherent_reference(self.alpha, self.lam, sum(pattern))
        return retrodictive_mdo(
            self.unitary(),
            pattern,
            signal_mode=0,
            reference_mode=2,
            reference=reference.phase_shift(reference_phase),
        )

    def patterns(self, N: int) -> List[Pattern]:
        return [(n0, N, self.lam - n0) for n0 in range(self.lam + 1)]

    def scaling(self, pattern: Sequence[int]) -> complex:
        """sigma = MDO[N, N+lam] at zero reference phase."""
        N = pattern[1]
        return complex(self.mdo(pattern).entries[N, N + self.lam])

    def weighted_scaling(self, N: int) -> complex:
        """g_N = sum_n0 (-1)^n0 sigma(n0, N, lam - n0)."""
        return complex(sum((-1) ** p[0] * self.scaling(p) for p in self.patterns(N)))


@dataclass(frozen=True)
class SingleBeamSplitter:
    """One beam splitter mixing the signal with (|0> + |lam>)/sqrt(2)."""

    lam: int = 1
    theta: float = math.pi / 4

    mode: EstimatorMode = field(default="steuernagel_vaccaro", init=False)

    def unitary(self) -> np.ndarray:
        return bs_matrix(self.theta, 0.0, 2, p=1, q=0)

    def mdo(self, pattern: Sequence[int], reference_phase: float = 0.0) -> DensityMatrix:
        reference = superposition_reference(self.lam).phase_shift(reference_phase)
        return retrodictive_mdo(
            self.unitary(), pattern, signal_mode=0, reference_mode=1, reference=reference
        )

    def patterns(self, N: int) -> List[Pattern]:
        total = N + self.lam
        return [(n0, total - n0) for n0 in range(total + 1)]

    def z_product(self, pattern: Sequence[int]) -> complex:
        """z_N conj(z_{N+lam}) for the pattern, N = total - lam."""
        total = sum(pattern)
        z = sv_z_coefficients(pattern[0], total, self.theta)
        N = total - self.lam
        return complex(z[N] * np.conj(z[N + self.lam]))


Apparatus = Union[DoubleBeamSplitter, SingleBeamSplitter]


def sv_z_coefficients(n0: int, total: int, theta: float) -> np.ndarray:
    """
    Backward amplitudes of the single beam splitter.

    z[a] is the amplitude of |a>_signal |total - a>_reference in
    S^dag |n0, total - n0>. With this package's beam-splitter phases
    z_0 conj(z_lam) = (i t r)^lam (-1)^n0 C(lam, n0) when total = lam.
    """
    if not 0 <= n0 <= total:
        raise ValueError(f"need 0 <= n0 <= total, got n0={n0}, total={total}")
    U = bs_matrix(theta, 0.0, 2, p=1, q=0)
    detected = MultimodeState(
        modes=2, terms={(n0, total - n0): 1.0 + 0.0j}, total_photon_cap=total
    )
    backward = evolve_multimode(U, detected, "backward")
    return np.array([backward.amplitude((a, total - a)) for a in range(total + 1)])


def double_bs_probability(
    rho0: StateLike,
    alpha: complex,
    bs1_theta: float,
    pattern: Sequence[int],
    reference_phase: float,
    lam: int = 1,
    bs2_theta: float = math.pi / 4,
) -> float:
    """
    Probability of counts (n0, N, n2) in the double beam-splitter experiment.

    Args:
        rho0: Signal state
        alpha: Amplitude of the (mixed) coherent reference
        bs1_theta: First beam splitter angle
        pattern: Counts at outputs 0, 1 and 2
        reference_phase: Phase shift applied to the reference
        lam: Number of coherent components in the reference mixture
        bs2_theta: Second beam splitter angle

    Returns:
        float: Tr[rho0 MDO]
    """
    apparatus = DoubleBeamSplitter(complex(alpha), lam, bs1_theta, bs2_theta)
    return _trace_probability(rho0, apparatus.mdo(pattern, reference_phase))


# --- estimators -----------------------------------------------------------------


def setting_phase(step: float, lam: int) -> float:
    """Reference phase step * pi / lam."""
    return step * math.pi / lam


def _require_steps(available, needed: Sequence[float], lam: int) -> None:
    missing = [j for j in needed if j not in available]
    if missing:
        names = ", ".join(
            f"j={j:g} (phase {setting_phase(j, lam):.6g})" for j in missing
        )
        raise ValueError(f"missing phase setting: {names}")


def density_matrix_element(
    probabilities: Mapping[float, float],
    N: int,
    lam: int,
    mode: EstimatorMode,
    scaling: complex,
) -> complex:
    """
    Estimate rho_{N, N+lam} from one pattern measured at four reference phases.

    Args:
        probabilities: step j -> probability at reference phase j pi / lam,
            j in {0, 0.5, 1, 1.5}
        N: Lower photon number of the element
        lam: Offset of the element
        mode: "double_bs" with scaling sigma = MDO[N, N+lam], or
            "steuernagel_vaccaro" with scaling z_N conj(z_{N+lam})
        scaling: Mode-specific scaling factor

    Returns:
        complex: (P_0 - i P_1/2 - P_1 + i P_3/2) / (4 conj(sigma)), or the
        same combination over 2 conj(z_N conj(z_{N+lam}))

    Raises:
        ValueError: On a zero scaling factor or a missing phase setting
    """
    if lam < 1 or N < 0:
        raise ValueError(f"need N >= 0 and lambda >= 1, got N={N}, lambda={lam}")
    if mode == "double_bs":
        factor = 4.0
    elif mode == "steuernagel_vaccaro":
        factor = 2.0
    else:
        raise ValueError(
            f"mode must be 'double_bs' or 'steuernagel_vaccaro', got '{mode}'"
        )
    if abs(scaling) < _ZERO_SCALING:
        raise ValueError("zero scaling factor")
    _require_steps(probabilities, PHASE_STEPS, lam)
    combination = sum(_STEP_WEIGHTS[j] * probabilities[j] for j in PHASE_STEPS)
    return complex(combination / (factor * np.conj(scaling)))


def estimate_trig_moment(
    probabilities: Mapping[float, Mapping[int, float]],
    lam: int,
    n_max: int,
    scaling: Mapping[int, complex],
    mode: EstimatorMode = "double_bs",
) -> Tuple[float, Optional[float]]:
    """
    Estimate <cos lam theta> and <sin lam theta> from measured probabilities.

    Sums the element estimates rho_{N, N+lam} over N = 0..n_max. With only
    the settings j = 0 and 1 and real scaling factors the cosine is still
    available and the sine is returned as None.

    Args:
        probabilities: step j -> {N: probability (or weighted sum) for that N}
        lam: Moment order
        n_max: Largest N included
        scaling: N -> scaling factor for that N
        mode: Estimator normalization, as in :func:`density_matrix_element`

    Returns:
        tuple: (cos estimate, sin estimate or None)

    Raises:
        ValueError: If the needed phase settings are missing
    """
    if set(PHASE_STEPS) <= set(probabilities):
        total = 0j
        for N in range(n_max + 1):
            element = {j: probabilities[j].get(N, 0.0) for j in PHASE_STEPS}
            total += density_matrix_element(element, N, lam, mode, scaling[N])
        return float(total.real), float(-total.imag)

    values = [complex(scaling[N]) for N in range(n_max + 1)]
    real_scaling = all(abs(s.imag) <= 1e-12 * abs(s) for s in values)
    if not ({0.0, 1.0} <= set(probabilities) and real_scaling):
        _require_steps(probabilities, PHASE_STEPS, lam)

    factor = 4.0 if mode == "double_bs" else 2.0
    cosine = 0.0
    for N, s in enumerate(values):
        if abs(s) < _ZERO_SCALING:
            raise ValueError("zero scaling factor")
        difference = probabilities[0.0].get(N, 0.0) - probabilities[1.0].get(N, 0.0)
        cosine += difference / (factor * s.real)
    return float(cosine), None


def phase_setting_mdos(
    apparatus: "Apparatus", n_max: int
) -> Dict[Tuple[float, Pattern], DensityMatrix]:
    """MDOs of every pattern with N <= n_max at the four reference phases."""
    mdos = {}
    for N in range(n_max + 1):
        for pattern in apparatus.patterns(N):
            for j in PHASE_STEPS:
                phase = setting_phase(j, apparatus.lam)
                mdos[(j, pattern)] = apparatus.mdo(pattern, phase)
    return mdos


def exact_probabilities(
    rho: StateLike, mdos: Mapping[Tuple[float, Pattern], DensityMatrix]
) -> Dict[float, Dict[Pattern, float]]:
    """step -> pattern -> Tr[rho MDO]."""
    table: Dict[float, Dict[Pattern, float]] = {}
    for (j, pattern), mdo in mdos.items():
        table.setdefault(j, {})[pattern] = _trace_probability(rho, mdo)
    return table


def pattern_scaling(apparatus: Apparatus, pattern: Pattern) -> complex:
    """sigma for the double beam splitter, z_N conj(z_{N+lam}) for the single one."""
    if isinstance(apparatus, DoubleBeamSplitter):
        return apparatus.scaling(pattern)
    return apparatus.z_product(pattern)


def scaling_factors(apparatus: Apparatus, n_max: int) -> Dict[Pattern, complex]:
    """Scaling factor of every pattern with N <= n_max."""
    return {
        p: pattern_scaling(apparatus, p)
        for N in range(n_max + 1)
        for p in apparatus.patterns(N)
    }


def estimate_element(
    apparatus: Apparatus,
    probabilities: Mapping[float, Mapping[Pattern, float]],
    N: int,
    scalings: Optional[Mapping[Pattern, complex]] = None,
) -> complex:
    """
    rho_{N, N+lam} from every pattern that carries it.

    The double beam splitter combines its patterns as the weighted sum
    sum_n0 (-1)^n0 P(n0, N, lam - n0) against g_N; the single beam
    splitter averages per-pattern estimates weighted by |z_N z_{N+lam}|^2.
    """
    patterns = apparatus.patterns(N)
    if scalings is None:
        scalings = {p: pattern_scaling(apparatus, p) for p in patterns}
    _require_steps(probabilities, PHASE_STEPS, apparatus.lam)

    if isinstance(apparatus, DoubleBeamSplitter):
        weighted = {
            j: sum((-1) ** p[0] * probabilities[j].get(p, 0.0) for p in patterns)
            for j in PHASE_STEPS
        }
        g = sum((-1) ** p[0] * scalings[p] for p in patterns)
        return density_matrix_element(weighted, N, apparatus.lam, apparatus.mode, g)

    estimate, norm = 0j, 0.0
    for p in patterns:
        z = scalings[p]
        if abs(z) < 1e-12:
            continue
        single = {j: probabilities[j].get(p, 0.0) for j in PHASE_STEPS}
        element = density_matrix_element(single, N, apparatus.lam, apparatus.mode, z)
        estimate += abs(z) ** 2 * element
        norm += abs(z) ** 2
    if norm == 0.0:
        raise ValueError("zero scaling factor")
    return complex(estimate / norm)


def estimate_moment(
    apparatus: Apparatus,
    probabilities: Mapping[float, Mapping[Pattern, float]],
    n_max: int,
    scalings: Optional[Mapping[Pattern, complex]] = None,
) -> Tuple[float, float]:
    """(<cos lam theta>, <sin lam theta>) from all patterns with N <= n_max."""
    if scalings is None:
        scalings = scaling_factors(apparatus, n_max)
    _require_steps(probabilities, PHASE_STEPS, apparatus.lam)

    if isinstance(apparatus, DoubleBeamSplitter):
        weighted = {
            j: {
                N: sum(
                    (-1) ** p[0] * probabilities[j].get(p, 0.0)
                    for p in apparatus.patterns(N)
                )
                for N in range(n_max + 1)
            }
            for j in PHASE_STEPS
        }
        g = {
            N: sum((-1) ** p[0] * scalings[p] for p in apparatus.patterns(N))
            for N in range(n_max + 1)
        }
        cosine, sine = estimate_trig_moment(weighted, apparatus.lam, n_max, g)
        return cosine, float(sine or 0.0)

    total = sum(
        estimate_element(apparatus, probabilities, N, scalings) for N in range(n_max + 1)
    )
    return float(total.real), float(-total.imag)


def optimal_reference_strength(lam: int) -> float:
    """|alpha|^2 = lam / 2, maximizing |<0|rho_ref|lam>| for a coherent reference."""
    if lam < 1:
        raise ValueError(f"lambda must be at least 1, got {lam}")
    return lam / 2


def optimal_bs1_angle(N: int, lam: int) -> float:
    """Angle with tan(theta) = sqrt(2N / lam), maximizing r^2N t^lam."""
    if lam < 1 or N < 0:
        raise ValueError(f"need N >= 0 and lambda >= 1, got N={N}, lambda={lam}")
    return math.atan(math.sqrt(2 * N / lam))


# --- eight-port interferometer ----------------------------------------------------


def _hadamard(p: int, q: int) -> np.ndarray:
    """50:50 beam splitter on (q, p) sandwiched by -pi/2 phase shifts on p."""
    shift = np.eye(4, dtype=complex)
    shift[p, p] = -1j
    return shift @ bs_matrix(math.pi / 4, 0.0, 4, p=p, q=q) @ shift


def eight_port_matrix() -> np.ndarray:
    """
    Four 50:50 beam splitters, a pi/2 phase shifter and swapped outputs 1 and 2.

    Entries are i^(jk) / 2, the four-port DFT.
    """
    quarter = np.diag([1, 1, 1, 1j]).astype(complex)
    swap = np.eye(4, dtype=complex)[[0, 2, 1, 3]]
    return (
        swap
        @ _hadamard(3, 2)
        @ _hadamard(1, 0)
        @ quarter
        @ _hadamard(3, 1)
        @ _hadamard(2, 0)
    )


def pattern_angle(m: int, phase: float, N: int = EIGHT_PORT_N) -> float:
    """Phase measured by pattern m at a reference shift, wrapped to [0, 2 pi)."""
    return float(np.mod(2 * np.pi * m / (N + 1) + phase, 2 * np.pi))


def joint_distribution(
    U: np.ndarray,
    inputs: Sequence[Optional[StateLike]],
    phases: Sequence[float],
    reference_mode: int,
) -> List[np.ndarray]:
    """
    Ideal joint photocount distribution, one array per reference phase.

    Each product basis input is evolved forward once and reused for all
    phases and mixture components.

    Args:
        U: Mode-transform matrix
        inputs: State per input mode, None for vacuum
        phases: Reference phase shifts
        reference_mode: Mode whose state receives the phase shift

    Returns:
        list: Arrays of shape (cap + 1,) * modes with cap the summed cutoffs

    Raises:
        ValueError: If the summed cutoffs exceed the photon cap
    """
    U = np.asarray(U, dtype=complex)
    modes = U.shape[0]
    occupied = [m for m, state in enumerate(inputs) if state is not None]
    cutoffs = [inputs[m].cutoff for m in occupied]  # type: ignore[union-attr]
    cap = sum(cutoffs)
    if cap > PHOTON_CAP:
        raise ValueError(f"photon cap exceeded: {cap} photons > {PHOTON_CAP}")
    shape = (cap + 1,) * modes

    evolved: Dict[Pattern, Tuple[np.ndarray, np.ndarray]] = {}
    for local in np.ndindex(*[c + 1 for c in cutoffs]):
        occupation = [0] * modes
        for m, n in zip(occupied, local):
            occupation[m] = int(n)
        state = MultimodeState(
            modes=modes, terms={tuple(occupation): 1.0 + 0.0j}, total_photon_cap=cap
        )
        out = evolve_multimode(U, state, "forward")
        keys = np.array(list(out.terms.keys()), dtype=int).reshape(-1, modes)
        flat = np.ravel_multi_index(tuple(keys.T), shape)
        evolved[tuple(local)] = (flat, np.array(list(out.terms.values()), dtype=complex))

    components = [_pure_components(inputs[m]) for m in occupied]  # type: ignore[arg-type]
    size = int(np.prod(shape))
    distributions = []
    for phase in phases:
        probabilities = np.zeros(size)
        for choice in np.ndindex(*[len(c) for c in components]):
            weight = 1.0
            vectors = []
            for slot, (m, k) in enumerate(zip(occupied, choice)):
                w, amps = components[slot][k]
                if m == reference_mode:
                    amps = amps * np.exp(1j * phase * np.arange(amps.size))
                weight *= w
                vectors.append(amps)
            amplitude = np.zeros(size, dtype=complex)
            for local, (flat, values) in evolved.items():
                coefficient = np.prod([vectors[s][n] for s, n in enumerate(local)])
                if coefficient != 0:
                    amplitude[flat] += coefficient * values
            probabilities += weight * np.abs(amplitude) ** 2
        distributions.append(probabilities.reshape(shape))
    return distributions


def eight_port_joint_distribution(
    signal: StateLike, reference: StateLike, phase: float
) -> np.ndarray:
    """Joint four-detector distribution, signal in port 0 and reference in port 1."""
    inputs = [signal, reference, None, None]
    return joint_distribution(eight_port_matrix(), inputs, [phase], 1)[0]


def retained_probabilities(
    joint: np.ndarray, eta: float = 1.0
) -> Tuple[List[float], float]:
    """
    Normalized probabilities of the four phase patterns and their total.

    Args:
        joint: Ideal joint distribution of the eight-port outputs
        eta: Detector efficiency applied before selecting the patterns

    Raises:
        ValueError: If no retained pattern can occur
    """
    counts = detector_transform(joint, eta, "ideal_to_counts") if eta < 1.0 else joint
    raw = [float(counts[p]) for p in EIGHT_PORT_PATTERNS]
    retained = float(sum(raw))
    if retained <= 0:
        raise ValueError("no retained pattern has nonzero probability")
    return [p / retained for p in raw], retained


def efficiency_error(
    signal: StateLike, reference: StateLike, eta: float, phase: float = 0.0
) -> float:
    """Max-abs change of the normalized four-pattern probabilities at efficiency eta."""
    joint = eight_port_joint_distribution(signal, reference, phase)
    ideal, _ = retained_probabilities(joint, 1.0)
    lossy, _ = retained_probabilities(joint, eta)
    return float(max(abs(a - b) for a, b in zip(ideal, lossy)))


# --- Monte Carlo --------------------------------------------------------------------


@dataclass(frozen=True)
class CountRecord:
    """Sampled count of one pattern at one phase setting."""

    setting: int
    phase: float
    pattern: Pattern
    count: int
    probability: float

    def to_row(self) -> List[Any]:
        pattern = ",".join(str(n) for n in self.pattern)
        return [self.setting, self.phase, pattern, self.count, self.probability]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "setting": self.setting,
            "phase": self.phase,
            "pattern": list(self.pattern),
            "count": self.count,
            "probability": self.probability,
        }


@dataclass(frozen=True)
class HistogramRow:
    """One phase-histogram point; density and stderr are None without trials."""

    theta: float
    density: Optional[float]
    stderr: Optional[float]
    analytic_density: float

    def to_row(self) -> List[Any]:
        return [self.theta, self.density, self.stderr, self.analytic_density]


@dataclass
class SimulationResult:
    config: ExperimentConfig
    seed: int
    records: List[CountRecord]
    histogram: List[HistogramRow]
    analytic: Dict[str, Any]
    counts: List[np.ndarray] = field(default_factory=list)


def experiment_layout(
    config: ExperimentConfig,
) -> Tuple[np.ndarray, List[Optional[StateLike]], int]:
    """Multiport matrix, per-mode inputs and the reference mode of a config."""
    signal = build_state(config.signal)
    reference = build_state(config.reference)
    if config.experiment == "eight_port":
        return eight_port_matrix(), [signal, reference, None, None], 1
    if config.experiment == "double_bs":
        U = double_bs_unitary(config.bs1_theta, config.bs2_theta)
        return U, [signal, None, reference], 2
    return bs_matrix(config.bs1_theta, 0.0, 2, p=1, q=0), [signal, reference], 1


def _sample_worker(
    distributions: Sequence[np.ndarray], trials: int, seed: int
) -> List[np.ndarray]:
    rng = np.random.default_rng(seed)
    return [sample_counts(d, trials, rng) for d in distributions]


def _sample(
    distributions: Sequence[np.ndarray], trials: int, seed: int, workers: int
) -> List[np.ndarray]:
    """Counts per setting; worker k draws its share with seed + k."""
    shares = split_trials(trials, workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(
            pool.map(
                lambda k: _sample_worker(distributions, shares[k], seed + k),
                range(workers),
            )
        )
    return [sum(part[s] for part in parts) for s in range(len(distributions))]


def histogram_rows(
    counts: Sequence[np.ndarray],
    phases: Sequence[float],
    ideal: Sequence[np.ndarray],
    trials: int,
    eta: float = 1.0,
    correct: bool = False,
    n_max: int = DEFAULT_N_MAX,
) -> List[HistogramRow]:
    """
    Phase histogram of the eight-port experiment.

    Every retained pattern m at setting phase phi is one point at
    theta = 2 pi m / 4 + phi with density (N + 1)/(2 pi) times the
    normalized pattern frequency.

    Args:
        counts: Joint count arrays per setting
        phases: Reference shift per setting
        ideal: Ideal joint distributions per setting (for the analytic column)
        trials: Runs per setting
        eta: Detector efficiency, used when correcting
        correct: Apply the inverse Bernoulli correction to the counts
        n_max: Truncation of the inverse correction

    Returns:
        list: Rows sorted by theta
    """
    scale = (EIGHT_PORT_N + 1) / (2 * np.pi)
    empty: List[Optional[float]] = [None] * len(EIGHT_PORT_PATTERNS)
    rows = []
    for k, phase in enumerate(phases):
        analytic, _ = retained_probabilities(ideal[k], 1.0)
        estimate: Sequence[Optional[float]] = empty
        stderr: Sequence[Optional[float]] = empty
        if trials > 0 and correct:
            estimate, stderr, _ = corrected_retained(
                counts[k], EIGHT_PORT_PATTERNS, eta, n_max, trials
            )
        elif trials > 0:
            estimate, stderr, _ = retained_from_counts(
                counts[k], EIGHT_PORT_PATTERNS, trials
            )
        for m in range(EIGHT_PORT_N + 1):
            value, error = estimate[m], stderr[m]
            rows.append(
                HistogramRow(
                    theta=pattern_angle(m, phase),
                    density=None if value is None else scale * value,
                    stderr=None if error is None else scale * error,
                    analytic_density=scale * analytic[m],
                )
            )
    return sorted(rows, key=lambda row: row.theta)


def _records(
    counts: Sequence[np.ndarray],
    observed: Sequence[np.ndarray],
    phases: Sequence[float],
) -> List[CountRecord]:
    records = []
    for k, (count, dist) in enumerate(zip(counts, observed)):
        flat = dist.reshape(-1)
        sampled = count.reshape(-1)
        for index in np.flatnonzero((sampled > 0) | (flat > RECORD_TOL)):
            pattern = tuple(int(n) for n in np.unravel_index(index, dist.shape))
            records.append(
                CountRecord(
                    setting=k,
                    phase=float(phases[k]),
                    pattern=pattern,
                    count=int(sampled[index]),
                    probability=float(flat[index]),
                )
            )
    return records


def _analytic_summary(
    config: ExperimentConfig, observed: Sequence[np.ndarray], signal: StateLike
) -> Dict[str, Any]:
    settings = [
        {"setting": k, "phase": float(phase), "resolved_probability": float(d.sum())}
        for k, (phase, d) in enumerate(zip(config.phase_settings, observed))
    ]
    summary: Dict[str, Any] = {
        "experiment": config.experiment,
        "detector_efficiency": config.detector_efficiency,
        "settings": settings,
    }
    if config.experiment == "eight_port":
        for entry, dist in zip(settings, observed):
            probabilities, retained = retained_probabilities(dist, 1.0)
            entry["retained_fraction"] = retained
            entry["pattern_probabilities"] = probabilities
        inside = _as_density(signal).entries[: EIGHT_PORT_N + 1, : EIGHT_PORT_N + 1]
        canonical = phase_distribution(DensityMatrix(inside).normalize())
        summary["canonical_density"] = [
            {"theta": float(t), "density": float(p)}
            for t, p in zip(canonical.grid, canonical.density)
        ]
    else:
        rho = _as_density(signal).normalize()
        cos_mean, sin_mean, _, _ = trig_moments(rho, config.lam)
        summary["cos_mean"] = cos_mean
        summary["sin_mean"] = sin_mean
    return summary


def monte_carlo(config: ExperimentConfig) -> SimulationResult:
    """
    Sample photocount patterns for every phase setting of an experiment.

    The exact joint distribution is computed per setting, passed through the
    detector efficiency and sampled by inverse CDF; probability lost to the
    truncation is its own unrecorded outcome.

    Args:
        config: Validated experiment configuration

    Returns:
        SimulationResult: Records (empty when trials is 0), the eight-port
        histogram and analytic summaries
    """
    seed = config.seed if config.seed is not None else get_default_seed()
    log_simulation_run(logger, config.experiment, config.trials, seed, config.workers)

    U, inputs, reference_mode = experiment_layout(config)
    phases = [float(p) for p in config.phase_settings]
    ideal = joint_distribution(U, inputs, phases, reference_mode)
    eta = config.detector_efficiency
    observed = [
        detector_transform(d, eta, "ideal_to_counts") if eta < 1.0 else d for d in ideal
    ]

    flat = [d.reshape(-1) for d in observed]
    sampled = _sample(flat, config.trials, seed, config.workers)
    counts = [c[:-1].reshape(d.shape) for c, d in zip(sampled, observed)]
    records = _records(counts, observed, phases) if config.trials > 0 else []

    histogram: List[HistogramRow] = []
    if config.experiment == "eight_port":
        histogram = histogram_rows(
            counts,
            phases,
            ideal,
            config.trials,
            eta,
            config.correct_efficiency,
            config.n_max,
        )
    analytic = _analytic_summary(config, observed, inputs[0])  # type: ignore[arg-type]
    logger.info(f"Sampled {len(records)} pattern records over {len(phases)} setting(s)")
    return SimulationResult(config, seed, records, histogram, analytic, counts)


# --- analysis of saved counts ---------------------------------------------------------


def probability_table(
    counts_file: CountsFile, source: ProbabilitySource = "counts"
) -> Tuple[Dict[int, Dict[Pattern, float]], Dict[int, float]]:
    """
    Per-setting pattern probabilities from a counts file.

    Args:
        counts_file: Validated counts document
        source: "counts" for sampled frequencies, "analytic" for exact probabilities

    Returns:
        tuple: (setting -> pattern -> probability, setting -> phase)
    """
    if source not in ("counts", "analytic"):
        raise ValueError(f"source must be 'counts' or 'analytic', got '{source}'")
    if not counts_file.records:
        raise ValueError("counts file holds no records")
    table: Dict[int, Dict[Pattern, float]] = {}
    phases: Dict[int, float] = {}
    for record in counts_file.records:
        if source == "counts":
            value = record.count / counts_file.trials
        else:
            value = record.probability
        table.setdefault(record.setting, {})[tuple(record.pattern)] = value
        phases[record.setting] = record.phase
    return table, phases


def _match_steps(phases: Mapping[int, float], lam: int) -> Dict[float, int]:
    matched: Dict[float, int] = {}
    for j in PHASE_STEPS:
        target = setting_phase(j, lam)
        for setting, phase in sorted(phases.items()):
            if abs(np.angle(np.exp(1j * (phase - target)))) < _ANGLE_TOL:
                matched[j] = setting
                break
    _require_steps(matched, PHASE_STEPS, lam)
    return matched


def analysis_apparatus(config: ExperimentConfig, lam: int) -> Apparatus:
    """Apparatus model of a simulated config for moments of order lam."""
    if config.experiment == "double_bs":
        reference = config.reference
        components = reference.lam if reference.kind == "mixed_coherent" else 1
        if components != lam:
            raise ValueError(
                f"reference mixture of {components} coherent states "
                f"cannot isolate lambda={lam}"
            )
        return DoubleBeamSplitter(
            config.reference.complex_alpha(), lam, config.bs1_theta, config.bs2_theta
        )
    if config.experiment == "single_bs":
        if config.reference.lam != lam:
            raise ValueError(
                f"superposition reference has lambda={config.reference.lam}, "
                f"asked for {lam}"
            )
        return SingleBeamSplitter(lam, config.bs1_theta)
    raise ValueError(
        f"moment and element estimates need double_bs or single_bs, "
        f"got {config.experiment}"
    )


def _linear_with_stderr(
    estimator: Callable[[Dict[float, Dict[Pattern, float]]], complex],
    by_step: Dict[float, Dict[Pattern, float]],
    patterns: Sequence[Pattern],
    trials: int,
) -> Tuple[complex, float, float]:
    """Linear estimator value and binomial errors of its real and imaginary parts."""
    value = estimator(by_step)
    coefficients = {}
    for j in PHASE_STEPS:
        for pattern in patterns:
            unit = {s: ({pattern: 1.0} if s == j else {}) for s in PHASE_STEPS}
            coefficients[(j, pattern)] = estimator(unit)
    flat = {(j, p): by_step[j].get(p, 0.0) for j, p in coefficients}
    runs = {j: trials for j in PHASE_STEPS}
    real = binomial_stderr({k: c.real for k, c in coefficients.items()}, flat, runs)
    imag = binomial_stderr({k: c.imag for k, c in coefficients.items()}, flat, runs)
    return value, real, imag


def _steps_table(
    counts_file: CountsFile, lam: int, source: ProbabilitySource
) -> Dict[float, Dict[Pattern, float]]:
    table, phases = probability_table(counts_file, source)
    matched = _match_steps(phases, lam)
    return {j: table[setting] for j, setting in matched.items()}


def analyze_moments(
    counts_file: CountsFile,
    lam: Optional[int] = None,
    source: ProbabilitySource = "counts",
) -> Dict[str, Any]:
    """
    <cos lam theta>, <sin lam theta> and their standard errors from saved counts.

    Eight-port files give the moment of the reconstructed distribution
    (lam <= 3) without standard errors.
    """
    config = counts_file.config
    lam = lam or config.lam
    if config.experiment == "eight_port":
        if lam > EIGHT_PORT_N:
            raise ValueError(
                f"eight-port data resolves moments up to {EIGHT_PORT_N}, "
                f"asked for {lam}"
            )
        alpha = analyze_phase_distribution(counts_file, source).fourier[lam]
        return {
            "lam": lam,
            "cos": alpha.real,
            "sin": -alpha.imag,
            "cos_stderr": None,
            "sin_stderr": None,
        }

    apparatus = analysis_apparatus(config, lam)
    signal_cutoff = build_state(config.signal).cutoff
    n_max = max(0, min(config.n_max, signal_cutoff - lam))
    by_step = _steps_table(counts_file, lam, source)
    scalings = scaling_factors(apparatus, n_max)

    def estimator(table: Dict[float, Dict[Pattern, float]]) -> complex:
        cosine, sine = estimate_moment(apparatus, table, n_max, scalings)
        return complex(cosine, -sine)

    value, real_err, imag_err = _linear_with_stderr(
        estimator, by_step, list(scalings), counts_file.trials
    )
    return {
        "lam": lam,
        "n_max": n_max,
        "cos": value.real,
        "sin": -value.imag,
        "cos_stderr": real_err,
        "sin_stderr": imag_err,
    }


def analyze_element(
    counts_file: CountsFile,
    N: int,
    lam: Optional[int] = None,
    source: ProbabilitySource = "counts",
) -> Dict[str, Any]:
    """rho_{N, N+lam} with standard errors of its real and imaginary parts."""
    config = counts_file.config
    lam = lam or config.lam
    apparatus = analysis_apparatus(config, lam)
    by_step = _steps_table(counts_file, lam, source)
    scalings = {p: pattern_scaling(apparatus, p) for p in apparatus.patterns(N)}
    value, real_err, imag_err = _linear_with_stderr(
        lambda table: estimate_element(apparatus, table, N, scalings),
        by_step,
        list(scalings),
        counts_file.trials,
    )
    return {
        "N": N,
        "lam": lam,
        "mode": apparatus.mode,
        "re": value.real,
        "im": value.imag,
        "re_stderr": real_err,
        "im_stderr": imag_err,
    }


def _setting_joint(counts_file: CountsFile, setting: int) -> np.ndarray:
    size = max(max(r.pattern) for r in counts_file.records) + 1
    joint = np.zeros((size,) * (EIGHT_PORT_N + 1))
    for record in counts_file.records:
        if record.setting == setting:
            joint[tuple(record.pattern)] = record.count
    return joint


def analyze_phase_distribution(
    counts_file: CountsFile,
    source: ProbabilitySource = "counts",
    grid_size: int = DEFAULT_GRID_SIZE,
) -> PhaseDistribution:
    """
    Reconstruct P(theta) from eight-port data at the eight angles 2 pi m / 8.

    The settings must put pattern angles on every 2 pi m / 8 (for example
    reference shifts 0 and pi/4). Counts from a config with
    ``correct_efficiency`` are corrected for detector efficiency first.

    Raises:
        ValueError: If the file is not eight-port data or angles are missing
    """
    config = counts_file.config
    if config.experiment != "eight_port":
        raise ValueError(f"phase-dist needs eight_port data, got {config.experiment}")
    table, phases = probability_table(counts_file, source)
    correct = (
        config.correct_efficiency
        and config.detector_efficiency < 1.0
        and source == "counts"
    )
    angles = sample_angles(EIGHT_PORT_N)
    samples: Dict[int, float] = {}
    for setting in sorted(table):
        if correct:
            raw, _, _ = corrected_retained(
                _setting_joint(counts_file, setting),
                EIGHT_PORT_PATTERNS,
                config.detector_efficiency,
                config.n_max,
                counts_file.trials,
            )
        else:
            raw = [table[setting].get(p, 0.0) for p in EIGHT_PORT_PATTERNS]
        total = sum(raw)
        if total <= 0:
            continue
        for m, value in enumerate(raw):
            theta = pattern_angle(m, phases[setting])
            for index, gamma in enumerate(angles):
                close = abs(np.angle(np.exp(1j * (theta - gamma)))) < _ANGLE_TOL
                if close and index not in samples:
                    samples[index] = value / total
    missing = [index for index in range(len(angles)) if index not in samples]
    if missing:
        names = ", ".join(f"theta={angles[i]:.6g}" for i in missing)
        raise ValueError(f"missing phase setting: {names}")
    ordered = [(angles[i], samples[i]) for i in range(len(angles))]
    return reconstruct_distribution(ordered, EIGHT_PORT_N, grid_size)
