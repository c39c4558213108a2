"""qubitnet: simulation and planning for qubit networks driven by projective
measurements exchanged over classical links."""

from .errors import BudgetExceededError, ConfigError, NumericalError, QubitnetError
from .graph import (
    NetworkGraph,
    complete_graph,
    from_edge_list,
    jacobi_eigh,
    lambda2,
    laplacian,
    pair_selection_distribution,
    path_graph,
    read_edge_list,
    ring_graph,
)
from .planner import (
    FinitePlan,
    GridSpec,
    StationaryPlan,
    expectimax_oracle,
    rollout,
    solve_finite,
    solve_infinite,
    terminal_reward,
    transition_distribution,
)
from .pqp import (
    PqpEvent,
    Trajectory,
    consensus_reached,
    disagreement_h,
    make_state,
    pqp_step,
    run,
    select_pair,
    trajectory_csv,
)
from .qstate import (
    Outcome,
    canonicalize_measurement,
    canonicalize_state,
    density_of,
    eigenstate,
    fidelity,
    measure,
    outcome_probability,
    trace_product,
)
from .density import (
    average_limit,
    convergence_rate_check,
    density_vector,
    deviation,
    monte_carlo_density,
    propagate_expected,
)
from .seeding import make_rng, seed_stream

__version__ = "0.1.0"
