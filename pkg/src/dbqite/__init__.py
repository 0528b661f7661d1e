"""Double-bracket quantum imaginary-time evolution (DB-QITE)."""
from .operators import (
    CapacityError,
    EigenSystem,
    PauliString,
    PauliSum,
    commutator,
    eigh,
    exp_unitary,
    fidelity,
    hs_norm,
    to_dense,
)
from .models import HeisenbergParams, SaddleInitSpec, build_heisenberg, saddle_state, singlet_state
from .ite import energy, ite_evolve, variance
from .engine import StepConfig, gc_step, grid_search_step, hopf_step, run_dbqite
from .circuits import Circuit, Gate, GateMetrics, metrics
from .compiler import (
    CompileConfig,
    color_layers,
    compile_reflection,
    compile_trotter,
    synthesize_dbqite,
    synthesize_hopf,
)
from .simulator import circuit_unitary, run_circuit

__version__ = "0.1.0"
