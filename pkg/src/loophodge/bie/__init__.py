"""Dense Galerkin CC-CFIER scattering from perfectly conducting limit surfaces."""

from .excitation import C0, ETA0, Excitation, wavenumber
from .farfield import cut_directions, radiated_far_field, rcs, rcs_dbsm, scattered_power
from .mie import mie_backscatter, mie_bistatic_rcs
from .operators import (Assembler, OperatorMatrix, QuadratureConfig, assemble_K, assemble_T, block_gram,
                        localize_calderon, pair_block)
from .scattering import FORMULATIONS, ScatteringConfig, ScatteringProblem, ScatteringSolution
from .space import CurrentSpace, FarRule
from .system import CalderonSystem, GramInverse, build_system, complexified_wavenumber, gmres_solve

__all__ = [
    "C0", "ETA0", "Excitation", "wavenumber",
    "cut_directions", "radiated_far_field", "rcs", "rcs_dbsm", "scattered_power",
    "mie_backscatter", "mie_bistatic_rcs",
    "Assembler", "OperatorMatrix", "QuadratureConfig", "assemble_K", "assemble_T", "block_gram",
    "localize_calderon", "pair_block",
    "FORMULATIONS", "ScatteringConfig", "ScatteringProblem", "ScatteringSolution",
    "CurrentSpace", "FarRule",
    "CalderonSystem", "GramInverse", "build_system", "complexified_wavenumber", "gmres_solve",
]
