"""Preparation/measurement probability calculus.

A preparation device is a set of non-negative operators Lambda_i, one per
recorded preparation event; a measurement device is a set Gamma_j, one per
recorded outcome. Operators are stored unnormalized because every
probability is a ratio of traces and overall constants cancel.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Hashable, List, Literal, Tuple

import numpy as np

from retroptics.config.settings import PSD_TOL

logger = logging.getLogger(__name__)


class DeviceRole(str, Enum):
    """Which side of the experiment an operator set describes."""

    PREPARATION = "preparation"
    MEASUREMENT = "measurement"


ConditionalDirection = Literal["predictive", "retrodictive"]


@dataclass(frozen=True)
class DeviceOperatorSet:
    """Labelled non-negative operators for one device.

    Attributes:
        role: Preparation (Lambda_i) or measurement (Gamma_j)
        ops: Mapping label -> square operator
        dimension: State-space dimension shared by every operator
    """

    role: DeviceRole
    ops: Dict[Hashable, np.ndarray]
    dimension: int

    def __post_init__(self):
        object.__setattr__(self, "role", DeviceRole(self.role))
        if not self.ops:
            raise ValueError("a device needs at least one operator")
        frozen = {}
        for label, op in self.ops.items():
            array = np.array(op, dtype=complex)
            if array.shape != (self.dimension, self.dimension):
                raise ValueError(
                    f"operator '{label}' has shape {array.shape}, "
                    f"expected ({self.dimension}, {self.dimension})"
                )
            array.setflags(write=False)
            frozen[label] = array
        object.__setattr__(self, "ops", frozen)
        if np.allclose(self.sum_operator(), 0.0):
            raise ValueError("sum operator is zero")

    @property
    def labels(self) -> List[Hashable]:
        return list(self.ops.keys())

    def sum_operator(self) -> np.ndarray:
        return sum(self.ops.values())

    def check_non_negative(self, tol: float = PSD_TOL) -> None:
        """
        Verify every operator is Hermitian with eigenvalues >= -tol.

        Raises:
            ValueError: Naming the first offending label
        """
        for label, op in self.ops.items():
            if np.max(np.abs(op - op.conj().T)) > tol:
                raise ValueError(f"operator '{label}' is not Hermitian")
            smallest = float(np.linalg.eigvalsh(0.5 * (op + op.conj().T))[0])
            if smallest < -tol:
                raise ValueError(
                    f"operator '{label}' is not non-negative (eigenvalue {smallest:.3g})"
                )


def _trace_product(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.real(np.trace(a @ b)))


def _check_pair(prep: DeviceOperatorSet, meas: DeviceOperatorSet) -> None:
    if prep.role is not DeviceRole.PREPARATION:
        raise ValueError("first device must have role 'preparation'")
    if meas.role is not DeviceRole.MEASUREMENT:
        raise ValueError("second device must have role 'measurement'")
    if prep.dimension != meas.dimension:
        raise ValueError(
            f"dimension mismatch: preparation {prep.dimension}, "
            f"measurement {meas.dimension}"
        )


def joint_probability(
    prep: DeviceOperatorSet, meas: DeviceOperatorSet, i: Hashable, j: Hashable
) -> float:
    """
    Probability that preparation event i and measurement event j are both recorded.

    Args:
        prep: Preparation device
        meas: Measurement device
        i: Preparation label
        j: Measurement label

    Returns:
        float: Tr[Lambda_i Gamma_j] / Tr[Lambda Gamma]

    Raises:
        ValueError: If Tr[Lambda Gamma] = 0 ("degenerate device pair")
    """
    _check_pair(prep, meas)
    norm = _trace_product(prep.sum_operator(), meas.sum_operator())
    if abs(norm) < 1e-300:
        raise ValueError("degenerate device pair")
    return _trace_product(prep.ops[i], meas.ops[j]) / norm


def joint_table(prep: DeviceOperatorSet, meas: DeviceOperatorSet) -> np.ndarray:
    """All joint probabilities, rows indexed by prep labels, columns by meas labels."""
    return np.array(
        [[joint_probability(prep, meas, i, j) for j in meas.labels] for i in prep.labels]
    )


def conditional_probability(
    prep: DeviceOperatorSet,
    meas: DeviceOperatorSet,
    direction: ConditionalDirection,
    given: Hashable,
    query: Hashable,
) -> float:
    """
    Predictive Pr(j | i) or retrodictive Pr(i | j).

    Args:
        prep: Preparation device
        meas: Measurement device
        direction: "predictive" (given a prep label, query a meas label) or
            "retrodictive" (given a meas label, query a prep label)
        given: Label of the conditioning event
        query: Label of the event whose probability is returned

    Returns:
        float: Tr[Lambda_i Gamma_j] / Tr[Lambda_i Gamma] (predictive) or
        Tr[Lambda_i Gamma_j] / Tr[Lambda Gamma_j] (retrodictive)

    Raises:
        ValueError: If the conditioning event has zero probability
    """
    _check_pair(prep, meas)
    if direction == "predictive":
        i, j = given, query
        denominator = _trace_product(prep.ops[i], meas.sum_operator())
    elif direction == "retrodictive":
        i, j = query, given
        denominator = _trace_product(prep.sum_operator(), meas.ops[j])
    else:
        raise ValueError(
            f"direction must be 'predictive' or 'retrodictive', got '{direction}'"
        )
    if abs(denominator) < 1e-300:
        raise ValueError("conditioning event has zero probability")
    return _trace_product(prep.ops[i], meas.ops[j]) / denominator


def a_priori_probability(
    prep: DeviceOperatorSet, meas: DeviceOperatorSet, i: Hashable
) -> float:
    """Marginal Pr(i) = Tr[Lambda_i Gamma] / Tr[Lambda Gamma]."""
    _check_pair(prep, meas)
    norm = _trace_product(prep.sum_operator(), meas.sum_operator())
    if abs(norm) < 1e-300:
        raise ValueError("degenerate device pair")
    return _trace_product(prep.ops[i], meas.sum_operator()) / norm


def unitary_sandwich(
    device: DeviceOperatorSet, U: np.ndarray
) -> DeviceOperatorSet:
    """
    Carry a device's operators through an evolution U between the devices.

    Preparation operators become U Lambda U^dag; measurement operators become
    U^dag Gamma U. Either choice gives the same joint probabilities.
    """
    U = np.asarray(U, dtype=complex)
    if device.role is DeviceRole.PREPARATION:
        ops = {label: U @ op @ U.conj().T for label, op in device.ops.items()}
    else:
        ops = {label: U.conj().T @ op @ U for label, op in device.ops.items()}
    return DeviceOperatorSet(device.role, ops, device.dimension)


def reduce_composite(
    joint_op: np.ndarray,
    partner_op: np.ndarray,
    keep: int,
    dims: Tuple[int, int],
) -> np.ndarray:
    """
    Reduce a two-subsystem operator to an effective operator on one subsystem.

    keep=1 returns Tr_a[joint_op (partner_op x 1_b)]; keep=0 returns
    Tr_b[joint_op (1_a x partner_op)]. With a composite PDO and a measurement
    on subsystem a this is the effective PDO of b; with a composite MDO and a
    preparation of a it is the effective MDO of b.

    Args:
        joint_op: Operator on the d_a * d_b dimensional product space
        partner_op: Operator on the traced subsystem
        keep: Index (0 = a, 1 = b) of the subsystem kept
        dims: (d_a, d_b)

    Returns:
        np.ndarray: Unnormalized operator on the kept subsystem

    Raises:
        ValueError: On any dimension mismatch
    """
    d_a, d_b = dims
    joint_op = np.asarray(joint_op, dtype=complex)
    partner_op = np.asarray(partner_op, dtype=complex)
    if joint_op.shape != (d_a * d_b, d_a * d_b):
        raise ValueError(f"joint operator shape {joint_op.shape} does not match dims {dims}")
    if keep == 1:
        if partner_op.shape != (d_a, d_a):
            raise ValueError(f"partner operator must be {d_a}x{d_a}")
        product = joint_op @ np.kron(partner_op, np.eye(d_b))
        return np.einsum("ijik->jk", product.reshape(d_a, d_b, d_a, d_b))
    if keep == 0:
        if partner_op.shape != (d_b, d_b):
            raise ValueError(f"partner operator must be {d_b}x{d_b}")
        product = joint_op @ np.kron(np.eye(d_a), partner_op)
        return np.einsum("ijkj->ik", product.reshape(d_a, d_b, d_a, d_b))
    raise ValueError(f"keep must be 0 or 1, got {keep}")
