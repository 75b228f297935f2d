"""Belief machinery over first-order normal forms, with proving games.

The package splits along the natural seams: `syntax`/`semantics` for the
logic itself, `constituents` for the combinatorial core, `dnf` for normal
forms and consistency oracles, `belief` for weighted refinement trees and
renormalization, `embedding` for the inner-product view, `conjecture` for
ranked conjecturing, `abstraction` for masks and cells, and `arena` for game
play.
"""

from .abstraction import CellRef, Filtration, FiltrationNodes, Mask, head_mask
from .arena import (
    Challenge,
    ConjecturingTreePolicy,
    ConstituentGame,
    GameRecord,
    MonadicDepthPolicy,
    RationalTreePolicy,
    Refine,
    Select,
    WorldChainGame,
    legal_moves,
    play_game,
    self_play,
    validate_record,
)
from .belief import (
    BeliefTree,
    ConstituentNodes,
    ExplicitNodes,
    UndefinedRenorm,
    load_snapshot,
    save_snapshot,
)
from .conjecture import (
    Conjecture,
    rank_conjectures,
    regularized_universe,
    score_likelihood_entropy,
    weights_at_depth,
)
from .constituents import Attributive, CapExceeded, Constituent, ConstituentSpace
from .dnf import BoundedOracle, Decision, DnfEngine, DnfSet, ExactMonadicOracle, make_oracle
from .embedding import Embedded, EmbeddingSpace
from .semantics import FiniteStructure, QTypeWorld, enumerate_monadic_worlds, satisfies
from .syntax import (
    Atom,
    Exists,
    Formula,
    Not,
    Or,
    Signature,
    and_,
    depth,
    forall,
    free_variables,
    implies,
    normalize,
    parse_formula,
    parse_sentence,
    print_formula,
    universal_closure,
)

__version__ = "0.1.0"
