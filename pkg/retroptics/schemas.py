"""Pydantic models for config documents, saved records and CLI output.

Complex numbers travel as ``[re, im]`` pairs everywhere.
"""

import math
from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, Field, field_validator, model_validator

from retroptics.config.settings import DEFAULT_N_MAX

ComplexPair = Tuple[float, float]

StateKind = Literal[
    "coherent",
    "fock",
    "number",
    "thermal",
    "binomial",
    "squeezed",
    "mixed_coherent",
    "superposition",
]


class StateSpec(BaseModel):
    """Description of a single-mode input state.

    Which fields are read depends on ``kind``:
    coherent (``alpha`` or ``mean_photons``), fock (``amplitudes``),
    number (``n``), thermal (``mean_photons``), binomial (``degree``,
    ``alternating``), squeezed (``alpha``, ``t``), mixed_coherent
    (``alpha``, ``lam``) and superposition ((|0> + |lam>)/sqrt(2), ``lam``).
    """

    kind: StateKind
    cutoff: int = Field(default=10, ge=0)
    alpha: Optional[ComplexPair] = None
    mean_photons: Optional[float] = Field(default=None, ge=0.0)
    amplitudes: Optional[List[ComplexPair]] = None
    n: Optional[int] = Field(default=None, ge=0)
    degree: Optional[int] = Field(default=None, ge=0)
    alternating: bool = False
    t: Optional[ComplexPair] = None
    lam: Optional[int] = Field(default=None, ge=1)

    @model_validator(mode="after")
    def _check_kind_fields(self) -> "StateSpec":
        required = {
            "fock": ["amplitudes"],
            "number": ["n"],
            "thermal": ["mean_photons"],
            "binomial": ["degree"],
            "squeezed": ["alpha", "t"],
            "mixed_coherent": ["alpha", "lam"],
            "superposition": ["lam"],
        }.get(self.kind, [])
        missing = [name for name in required if getattr(self, name) is None]
        if self.kind == "coherent" and self.alpha is None and self.mean_photons is None:
            missing.append("alpha or mean_photons")
        if missing:
            raise ValueError(f"{self.kind} state needs {', '.join(missing)}")
        return self

    def complex_alpha(self) -> complex:
        """Coherent amplitude, real and positive when given as a mean photon number."""
        if self.alpha is not None:
            return complex(self.alpha[0], self.alpha[1])
        return complex(math.sqrt(self.mean_photons or 0.0), 0.0)


ExperimentKind = Literal["eight_port", "double_bs", "single_bs"]


class ExperimentConfig(BaseModel):
    """One simulated experiment.

    The signal always enters mode 0. The reference enters mode 1 of the
    eight-port and single beam-splitter set-ups and mode 2 of the
    double beam-splitter set-up, whose mode 1 is the empty port of the first
    beam splitter.
    """

    experiment: ExperimentKind
    signal: StateSpec
    reference: StateSpec
    bs1_theta: float = math.pi / 4
    bs2_theta: float = math.pi / 4
    lam: int = Field(default=1, ge=1)
    n_max: int = Field(default=DEFAULT_N_MAX, ge=0)
    detector_efficiency: float = Field(default=1.0, gt=0.0, le=1.0)
    correct_efficiency: bool = False
    phase_settings: List[float] = Field(default_factory=lambda: [0.0], min_length=1)
    trials: int = Field(default=0, ge=0)
    seed: Optional[int] = None
    workers: int = Field(default=1, ge=1)

    @field_validator("signal")
    @classmethod
    def _signal_kind(cls, value: StateSpec) -> StateSpec:
        if value.kind in ("mixed_coherent", "superposition"):
            raise ValueError(f"'{value.kind}' is a reference-only state kind")
        return value

    @model_validator(mode="after")
    def _check_reference(self) -> "ExperimentConfig":
        if self.experiment == "single_bs" and self.reference.kind != "superposition":
            raise ValueError("single_bs experiments need a superposition reference")
        if self.experiment == "double_bs" and self.reference.kind not in (
            "coherent",
            "mixed_coherent",
        ):
            raise ValueError(
                "double_bs experiments need a coherent or mixed_coherent reference"
            )
        return self


class EngineeredTargetRecord(BaseModel):
    """Saved output of the design command."""

    psi: Dict[str, Any]
    pattern: List[int]
    betas: List[ComplexPair]
    alphas: List[ComplexPair]
    kappa_bar: ComplexPair
    kappa_bar_abs2: float
    kappa: ComplexPair
    efficiency: float
    unitary: Dict[str, Any]


class BSElementRecord(BaseModel):
    p: int = Field(ge=1)
    q: int = Field(ge=0)
    theta: float
    phi: float


class MultiportPlanRecord(BaseModel):
    """Reck plan as written by the decompose command."""

    dim: int = Field(ge=1)
    elements: List[BSElementRecord]
    delta: List[float]


class CountRecordModel(BaseModel):
    setting: int = Field(ge=0)
    phase: float
    pattern: List[int]
    count: int = Field(ge=0)
    probability: float = Field(ge=0.0)


class CountsFile(BaseModel):
    """Simulated photocounts plus the config that produced them."""

    config: ExperimentConfig
    trials: int = Field(ge=0)
    records: List[CountRecordModel]


class CommandResult(BaseModel):
    """Machine-readable outcome of one CLI command."""

    status: Literal["ok", "error"]
    command: str
    paths: Dict[str, str] = Field(default_factory=dict)
    summary: str = ""
    data: Dict[str, Any] = Field(default_factory=dict)
