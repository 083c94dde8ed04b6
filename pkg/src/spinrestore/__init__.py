"""Remote state restoring on homogeneous XX spin chains.

The receiver of a spin-chain communication line is steered by
piecewise-constant local magnetic fields so that, at the registration
time, its reduced density matrix is element-wise proportional to the
sender's initial state.
"""

from .chain import (
    ChainSpec,
    ControlSchedule,
    amplitudes_from_angles,
    build_couplings,
    one_excitation_hamiltonian,
)
from .propagator import (
    EvolutionModel,
    SubspacePropagator,
    compose_schedule,
    compose_schedule_exact,
    exact_segment,
    pulse_segment,
    trotter_segment,
)
from .restore import (
    LambdaSet,
    embed_sender_state,
    lambdas,
    receiver_block,
    receiver_density,
    residuals,
    restore_check,
)
from .solver import (
    SolveProblem,
    Solution,
    SolutionSet,
    initial_angles,
    multi_start,
    solve_once,
)
from .metrics import (
    MetricPoint,
    NSweepRow,
    PhysicalSchedule,
    SweepResult,
    point_metrics,
    rescale_pulse_solution,
    sweep_n,
    sweep_tau,
)

__version__ = "0.1.0"
