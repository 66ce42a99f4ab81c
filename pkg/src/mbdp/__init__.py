"""Memory-bounded dynamic programming for finite-horizon decentralized POMDPs."""

from .analysis import EpsilonReport, EpsilonWitness, epsilon_at, epsilon_global, error_bound
from .backup import (
    CandidateSet,
    ObservationSelection,
    exhaustive_backup,
    fill_missing,
    partial_backup,
    pointwise_prune,
    rank_observations,
)
from .benchmarks import (
    BUILTIN_PROBLEMS,
    BoxPushConfig,
    build_boxpush,
    build_builtin,
    build_mabc,
    build_tiger,
    load_boxpush_config,
)
from .errors import (
    CapacityError,
    ConfigError,
    EvaluationError,
    ImpossibleEvidenceError,
    MbdpError,
    ModelError,
    ParseError,
)
from .heuristics import (
    BeliefTrajectory,
    MdpHeuristic,
    PolicyReplayHeuristic,
    RandomHeuristic,
    build_portfolio,
    generate_belief,
    solve_underlying_mdp,
)
from .model import PROB_TOL, BeliefState, DecPomdp, validate
from .policy import (
    CompiledPolicy,
    JointPolicy,
    PolicyEvaluator,
    PolicyTree,
    SimulationResult,
    ValueTable,
    evaluate_at_belief,
    evaluate_at_state,
    parse_policy,
    serialize_policy,
    simulate,
)
from .solver import (
    BaselineResult,
    ExactResult,
    LevelRecord,
    SolveReport,
    SolverConfig,
    exact_solve,
    improved_mbdp,
    mbdp,
    random_policy_baseline,
    uniform_random_value,
)

__version__ = "0.1.0"

__all__ = [
    "BUILTIN_PROBLEMS",
    "BaselineResult",
    "BeliefState",
    "BeliefTrajectory",
    "BoxPushConfig",
    "CandidateSet",
    "CapacityError",
    "CompiledPolicy",
    "ConfigError",
    "DecPomdp",
    "EpsilonReport",
    "EpsilonWitness",
    "EvaluationError",
    "ExactResult",
    "ImpossibleEvidenceError",
    "JointPolicy",
    "LevelRecord",
    "MbdpError",
    "MdpHeuristic",
    "ModelError",
    "ObservationSelection",
    "PROB_TOL",
    "ParseError",
    "PolicyEvaluator",
    "PolicyReplayHeuristic",
    "PolicyTree",
    "RandomHeuristic",
    "SimulationResult",
    "SolveReport",
    "SolverConfig",
    "ValueTable",
    "build_boxpush",
    "build_builtin",
    "build_mabc",
    "build_portfolio",
    "build_tiger",
    "epsilon_at",
    "epsilon_global",
    "error_bound",
    "evaluate_at_belief",
    "evaluate_at_state",
    "exact_solve",
    "exhaustive_backup",
    "fill_missing",
    "generate_belief",
    "improved_mbdp",
    "load_boxpush_config",
    "mbdp",
    "parse_policy",
    "partial_backup",
    "pointwise_prune",
    "random_policy_baseline",
    "rank_observations",
    "serialize_policy",
    "simulate",
    "solve_underlying_mdp",
    "uniform_random_value",
    "validate",
]
