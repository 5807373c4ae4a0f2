"""retroptics - Retrodictive state engineering and phase measurement in the Fock basis."""

from retroptics.tools.engineer import DetectionPattern, design_target
from retroptics.tools.experiments import monte_carlo
from retroptics.tools.fock import DensityMatrix, FockVector

__version__ = "0.1.0"
__all__ = ["DensityMatrix", "DetectionPattern", "FockVector", "design_target", "monte_carlo"]
