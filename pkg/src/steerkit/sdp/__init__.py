"""Self-contained dense SDP solver and SDPA file I/O."""

from .problem import Block, ProblemBuilder, SdpProblem
from .sdpa import export_sdpa, import_sdpa
from .solver import SdpSolution, SolverSettings, solve

__all__ = [
    "Block",
    "ProblemBuilder",
    "SdpProblem",
    "SdpSolution",
    "SolverSettings",
    "export_sdpa",
    "import_sdpa",
    "solve",
]
