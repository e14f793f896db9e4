"""Built-in model families and their decompositions."""

from .age import AgeHawkesModel, AutoGammaLadder, PowerGammaLadder
from .analytic import AnalyticHawkesModel, PsiSeries
from .base import KalikowModel
from .gl import GLModel
from .linear import LinearHawkesModel
from .presets import LatticeAgeModel, lattice_c_gamma, lattice_gamma_bar, lattice_preset
from .table import TableEntry, TableModel

__all__ = [
    "AgeHawkesModel",
    "AnalyticHawkesModel",
    "AutoGammaLadder",
    "GLModel",
    "KalikowModel",
    "LatticeAgeModel",
    "LinearHawkesModel",
    "PowerGammaLadder",
    "PsiSeries",
    "TableEntry",
    "TableModel",
    "lattice_c_gamma",
    "lattice_gamma_bar",
    "lattice_preset",
]
