"""teamsem: a workbench for team semantics.

Evaluate formulas with dependency atoms on teams of assignments, compile
the upwards-closed fragment to ordinary first-order sentences, and check
the structural properties (closure, boundedness, height) that make the
compilation tick.
"""

from .atoms import (
    AtomDefinition,
    AtomError,
    AtomRegistry,
    BUILTIN_ATOM_NAMES,
    Counterexample,
    DEFAULT_REGISTRY,
    RegistrationError,
    check_boundedness,
    check_downwards_closed,
    check_upwards_closed,
    eval_atom,
)
from .model import (
    EvalError,
    Model,
    ModelError,
    Relation,
    Team,
    duplicate,
    enumerate_covers,
    enumerate_choice_functions,
    supplement,
    tarski_eval,
    team_from_mappings,
    team_project,
    team_restrict,
)
from .syntax import (
    And,
    BoolLit,
    Const,
    DepAtom,
    EqLit,
    Exists,
    FALSE,
    Forall,
    Formula,
    FreshNames,
    Or,
    ParseError,
    Possibly,
    RelLit,
    RestrictedBy,
    SyntaxViolation,
    TRUE,
    Var,
    ands,
    desugar_possibility,
    flatten,
    free_variables,
    is_clean,
    is_first_order,
    negate_fo,
    ors,
    parse,
    pretty,
    restrict,
)
from .evaluator import (
    EvalStats,
    Evaluator,
    MODES,
    evaluate,
    sentence_true,
    upward_fragment,
)
from .translator import (
    TranslationError,
    TranslationResult,
    desugar_negated_atoms,
    eliminate_constancy,
    to_clean,
    translate,
)
from .analysis import (
    AnalysisError,
    Height,
    InvariantBreach,
    analyze,
    compute_height,
    find_small_witness,
    min_atom_instances_lower_bound,
    totality_unboundedness_witness,
)
from .harness import (
    GridConfig,
    HarnessError,
    Report,
    THEOREM_SUITES,
    check_formula_equivalence,
    check_translation_equivalence,
    enumerate_models,
    enumerate_teams,
    generate_formulas,
    grid_from_env,
    permute_model,
    permute_team,
)

__version__ = "0.1.0"

__all__ = [
    "AtomDefinition",
    "AtomError",
    "AtomRegistry",
    "BUILTIN_ATOM_NAMES",
    "Counterexample",
    "DEFAULT_REGISTRY",
    "RegistrationError",
    "check_boundedness",
    "check_downwards_closed",
    "check_upwards_closed",
    "eval_atom",
    "EvalError",
    "Model",
    "ModelError",
    "Relation",
    "Team",
    "duplicate",
    "enumerate_covers",
    "enumerate_choice_functions",
    "supplement",
    "tarski_eval",
    "team_from_mappings",
    "team_project",
    "team_restrict",
    "And",
    "BoolLit",
    "Const",
    "DepAtom",
    "EqLit",
    "Exists",
    "FALSE",
    "Forall",
    "Formula",
    "FreshNames",
    "Or",
    "ParseError",
    "Possibly",
    "RelLit",
    "RestrictedBy",
    "SyntaxViolation",
    "TRUE",
    "Var",
    "ands",
    "desugar_possibility",
    "flatten",
    "free_variables",
    "is_clean",
    "is_first_order",
    "negate_fo",
    "ors",
    "parse",
    "pretty",
    "restrict",
    "EvalStats",
    "Evaluator",
    "MODES",
    "evaluate",
    "sentence_true",
    "upward_fragment",
    "TranslationError",
    "TranslationResult",
    "desugar_negated_atoms",
    "eliminate_constancy",
    "to_clean",
    "translate",
    "AnalysisError",
    "Height",
    "InvariantBreach",
    "analyze",
    "compute_height",
    "find_small_witness",
    "min_atom_instances_lower_bound",
    "totality_unboundedness_witness",
    "GridConfig",
    "HarnessError",
    "Report",
    "THEOREM_SUITES",
    "check_formula_equivalence",
    "check_translation_equivalence",
    "enumerate_models",
    "enumerate_teams",
    "generate_formulas",
    "grid_from_env",
    "permute_model",
    "permute_team",
    "__version__",
]
