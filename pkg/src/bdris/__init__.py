"""Circuit-level simulation and beam-steering optimization of a surface that
simultaneously reflects and transmits.

Each cell pairs a 2-bit reflecting antenna and a 2-bit transmitting antenna
through a varactor-tuned series power splitter. The package models the
splitter and the switch loads at circuit level, solves the whole surface
with a Thevenin equivalent of the illuminated array, and searches the
discrete state space for steered beams.
"""

__version__ = "0.1.0"

from .antenna import PhaseState, Switch
from .cell import CellConfig, IdealSplitter, cell_network, cell_phases
from .emdata import EmDataset, Tier, generate_synthetic, load_dataset, save_dataset
from .errors import BdrisError, DataError, NumericalError, UsageError
from .netalg import TwoPortNetwork
from .optimize import BeamTarget, GaParams, exhaustive_search, ga_optimize
from .pattern import AngleGrid, FieldPattern, Sector, beam_metrics
from .splitter import Mode, VaractorCircuit, mode_preset, power_ratio_db
from .thevenin import SurfaceConfig, simulate

__all__ = [
    "AngleGrid", "BdrisError", "BeamTarget", "CellConfig", "DataError", "EmDataset", "FieldPattern",
    "GaParams", "IdealSplitter", "Mode", "NumericalError", "PhaseState", "Sector", "SurfaceConfig",
    "Switch", "Tier", "TwoPortNetwork", "UsageError", "VaractorCircuit", "beam_metrics",
    "cell_network", "cell_phases", "exhaustive_search", "ga_optimize", "generate_synthetic",
    "load_dataset", "mode_preset", "power_ratio_db", "save_dataset", "simulate",
]
