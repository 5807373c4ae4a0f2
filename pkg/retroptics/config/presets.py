"""Named scenarios for the design and simulate commands.

Each preset is a plain dictionary. Design presets carry a target state, a
multiport choice and a detection pattern; simulate presets carry an
experiment configuration that validates as ``ExperimentConfig``.
"""

import math
from typing import Any, Dict, Literal

PresetName = Literal[
    "simple-config",
    "dft3",
    "optimal3",
    "zero-minus-Nplus1",
    "fig5_3",
    "fig5_5",
]

# Squeezed reference that mimics the alternating N=3 binomial state
_SQUEEZED_REFERENCE = {
    "kind": "squeezed",
    "alpha": [-(2 + math.sqrt(2)) / 3, 0.0],
    "t": [0.5, 0.0],
    "cutoff": 10,
}

_EIGHT_PORT_SHIFTS = [k * math.pi / 8 for k in range(4)]

PRESETS: Dict[str, Dict[str, Any]] = {
    "simple-config": {
        "kind": "design",
        "description": "Truncated phase state (|0>+|1>+|2>)/sqrt(3) through two cascaded beam splitters.",
        "target": [1.0, 1.0, 1.0],
        "unitary": "two_bs",
        "pattern": [0, 1, 1],
    },
    "dft3": {
        "kind": "design",
        "description": "Truncated phase state (|0>+|1>+|2>)/sqrt(3) through the three-port DFT multiport.",
        "target": [1.0, 1.0, 1.0],
        "unitary": "dft",
        "pattern": [0, 1, 1],
    },
    "optimal3": {
        "kind": "design",
        "description": "Truncated phase state with the multiport first column chosen for maximum efficiency.",
        "target": [1.0, 1.0, 1.0],
        "unitary": "optimize",
        "pattern": [0, 1, 1],
    },
    "zero-minus-Nplus1": {
        "kind": "design",
        "description": "Superposition |0>-|4> from one photon in every output of the four-port DFT.",
        "target": [1.0, 0.0, 0.0, 0.0, -1.0],
        "unitary": "dft",
        "pattern": [1, 1, 1, 1],
    },
    "fig5_3": {
        "kind": "simulate",
        "description": "Eight-port canonical phase measurement, weak coherent signal, squeezed reference, ideal detectors.",
        "config": {
            "experiment": "eight_port",
            "signal": {"kind": "coherent", "mean_photons": 0.076, "cutoff": 5},
            "reference": _SQUEEZED_REFERENCE,
            "detector_efficiency": 1.0,
            "phase_settings": _EIGHT_PORT_SHIFTS,
            "trials": 1_000_000,
            "seed": 0,
        },
    },
    "fig5_5": {
        "kind": "simulate",
        "description": "Eight-port canonical phase measurement with detectors of efficiency 0.6.",
        "config": {
            "experiment": "eight_port",
            "signal": {"kind": "coherent", "mean_photons": 0.076, "cutoff": 5},
            "reference": _SQUEEZED_REFERENCE,
            "detector_efficiency": 0.6,
            "phase_settings": _EIGHT_PORT_SHIFTS,
            "trials": 1_000_000,
            "seed": 0,
        },
    },
}


def get_preset(name: str) -> Dict[str, Any]:
    """Get the definition of a named preset.

    Args:
        name: Preset identifier

    Returns:
        Preset dictionary (shared; copy before mutating)

    Raises:
        ValueError: If the preset is not recognized
    """
    if name not in PRESETS:
        raise ValueError(
            f"Unknown preset: {name}. " f"Valid presets are: {', '.join(PRESETS.keys())}"
        )
    return PRESETS[name]


def list_presets() -> list[str]:
    """Get list of all preset identifiers."""
    return list(PRESETS.keys())


def preset_kind(name: str) -> str:
    """Return which command a preset belongs to ("design" or "simulate")."""
    return get_preset(name)["kind"]
