"""Simulation laboratory for two-type annihilating/coalescing random
walk systems on finite vertex-transitive graphs, plus the coupling and
estimator machinery used to check their limit identities at desk scale.
"""

from .engine import NEVER, UNBOUNDED, AnnihilationRecord, SimConfig, Species, init_state, run, run_discrete
from .topology import Topology, complete, cycle, make_topology, torus

__version__ = "0.1.0"

__all__ = [
    "AnnihilationRecord",
    "NEVER",
    "SimConfig",
    "Species",
    "Topology",
    "UNBOUNDED",
    "complete",
    "cycle",
    "init_state",
    "make_topology",
    "run",
    "run_discrete",
    "torus",
    "__version__",
]
