"""Monte Carlo simulator and analytical toolkit for entanglement
distribution policies on multiplexed quantum repeater chains."""

__version__ = "0.1.0"

from .distill import (
    DistillOutcome,
    banded_schedule,
    distill_age,
    distill_fidelity,
    distill_outcome,
    distill_success_prob,
    is_distill_useful,
    pumping_closed_form,
    pumping_limit,
    pumping_recurrence,
    pumping_solution,
)
from .engine import CCMode, Link, NetworkState, RunResult, SimParams, derive_rng, run
from .hardware import (
    HardwareProfile,
    PRESETS,
    get_preset,
    platform_params,
    profile_to_sim_params,
)
from .harness import (
    BatchStats,
    ImprovementReport,
    SweepSpec,
    design_study,
    improvement_factor,
    run_batches,
    sweep,
)
from .noise import (
    BellDiagonalState,
    PauliChannelParams,
    age_of_fidelity,
    decohere_bell_state,
    entanglement_loss_age,
    fidelity_of_age,
    pauli_channel_probs,
    swap_age,
    twirl_isotropic,
)
from .oracles import (
    OracleResult,
    oracle_mode_run,
    three_node_four_channel_distill_swap,
    three_node_four_channel_swap_distill,
    three_node_two_channel_distill_swap,
    three_node_two_channel_swap_distill,
)
from .policies import (
    DistillOrdering,
    SwapKind,
    SwapPolicy,
    parse_ordering,
    parse_policy,
)

__all__ = [name for name in dir() if not name.startswith("_")]
