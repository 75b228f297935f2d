"""The proving games: alternating-turn select/challenge play, the masked
variant with refine moves, policies, and the seeded self-play runner.

Positions are the sequence of states chosen after the root; the mover at a
position with an even number of moves is player O.  A challenge targets the
current state: the challenger wins exactly when that state is inconsistent
according to the configured oracle, loses when it is consistent, and the game
is recorded unresolved when the oracle cannot tell.

All randomness flows through one seeded generator per game; a move is drawn
by comparing a uniform 64-bit rational against the policy's exact cumulative
distribution, so records replay bit-identically.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction

from .abstraction import CellRef, Filtration
from .belief import BeliefTree
from .conjecture import Conjecture, rank_conjectures, sqrt_weight
from .constituents import Constituent, ConstituentSpace
from .dnf import Decision, ExactMonadicOracle
from .semantics import enumerate_monadic_worlds
from .syntax import Signature

DRAW_BITS = 64


@dataclass(frozen=True)
class Select:
    child: object

    def token(self, gspace) -> str:
        return "S:" + gspace.state_token(self.child)


@dataclass(frozen=True)
class Challenge:
    def token(self, gspace) -> str:
        return "C"


@dataclass(frozen=True)
class Refine:
    cell: object

    def token(self, gspace) -> str:
        return "R:" + gspace.state_token(self.cell)


def mover(n_moves: int) -> str:
    return "O" if n_moves % 2 == 0 else "E"


class GameSpace:
    """What the runner needs to know about states."""

    def initial(self):
        raise NotImplementedError

    def is_child(self, parent, child) -> bool:
        raise NotImplementedError

    def children(self, state) -> list:
        """Selectable continuations; may raise CapExceeded on huge spaces."""
        raise NotImplementedError

    def is_refine(self, current, finer) -> bool:
        return False

    def refinements(self, state, masks=()) -> list:
        return []

    def consistency(self, state) -> Decision:
        raise NotImplementedError

    def state_token(self, state) -> str:
        raise NotImplementedError

    def parse_token(self, token: str):
        raise NotImplementedError


class ConstituentGame(GameSpace):
    """Play over sentence constituents with a consistency oracle."""

    def __init__(self, space: ConstituentSpace, oracle):
        self.space = space
        self.oracle = oracle

    def initial(self) -> Constituent:
        return self.space.top()

    def is_child(self, parent, child) -> bool:
        if not isinstance(child, Constituent) or child.depth != parent.depth + 1:
            return False
        return self.space.truncate(child) == parent

    def children(self, state) -> list:
        return list(self.space.refine_children(state))

    def consistency(self, state) -> Decision:
        return self.oracle.decide(state)

    def state_token(self, state) -> str:
        return f"{state.depth}|{self.space.text(state)}"

    def parse_token(self, token: str):
        d, _, text = token.partition("|")
        return self.space.parse_text(text, int(d), 0)


@dataclass(frozen=True)
class WorldState:
    """Symbolic consistent state: the depth-d description a type world pins down.

    These stand in for constituents too deep to write out positionally; the
    chain (world, d) -> (world, d+1) is exactly the world's refinement path.
    """

    world: frozenset  # realized type codes; None only at the root
    depth: int

    def text(self) -> str:
        if self.depth == 0:
            return "w:top"
        body = ",".join(str(t) for t in sorted(self.world))
        return f"w:{{{body}}}@{self.depth}"


class WorldChainGame(GameSpace):
    """Exact monadic play along world chains; every reachable state is
    consistent, so challenges always lose."""

    def __init__(self, sig: Signature):
        if not sig.is_monadic():
            raise ValueError("world-chain play requires a monadic signature")
        self.sig = sig
        self.worlds = tuple(enumerate_monadic_worlds(sig))

    def initial(self) -> WorldState:
        return WorldState(None, 0)

    def is_child(self, parent, child) -> bool:
        if not isinstance(child, WorldState) or child.depth != parent.depth + 1:
            return False
        if parent.depth == 0:
            return True
        return child.world == parent.world

    def children(self, state) -> list:
        if state.depth == 0:
            return [WorldState(w.realized, 1) for w in self.worlds]
        return [WorldState(state.world, state.depth + 1)]

    def consistency(self, state) -> Decision:
        return Decision.CONSISTENT

    def state_token(self, state) -> str:
        return state.text()

    def parse_token(self, token: str):
        if token == "w:top":
            return WorldState(None, 0)
        body, _, d = token[3:].partition("}@")
        types = frozenset(int(t) for t in body.split(",") if t)
        return WorldState(types, int(d))


class CellGame(GameSpace):
    """Masked play over filtration cells; refine moves are legal here."""

    def __init__(self, filtration: Filtration, oracle=None, effort: int = 0):
        self.filtration = filtration
        self.oracle = oracle
        self.effort = effort

    def initial(self) -> CellRef:
        return CellRef(0, ())

    def is_child(self, parent, child) -> bool:
        if not isinstance(child, CellRef):
            return False
        # mask-free: refine moves change the live partition mid-game
        return self.filtration.cell_refines(parent, child)

    def children(self, state) -> list:
        return [c for c in self.filtration.cells_at(state.depth + 1)
                if self.filtration.cell_refines(state, c)]

    def is_refine(self, current, finer) -> bool:
        if not isinstance(finer, CellRef) or finer.depth != current.depth:
            return False
        fixed = dict(finer.pattern)
        return all(fixed.get(p) == s for p, s in current.pattern) and len(
            finer.pattern
        ) >= len(current.pattern)

    def refinements(self, state, masks=()) -> list:
        """Strictly finer same-depth sub-cells under the admissible masks."""
        out = []
        for mask in masks:
            for cell in self.filtration.refine_cell(state, mask):
                if len(cell.pattern) > len(state.pattern) and cell not in out:
                    out.append(cell)
        return out

    def consistency(self, state) -> Decision:
        if self.oracle is not None and isinstance(self.oracle, ExactMonadicOracle):
            for m in self.filtration.members(state):
                if self.oracle.decide(m) == Decision.CONSISTENT:
                    return Decision.CONSISTENT
            return Decision.INCONSISTENT
        if self.filtration.super_trivially_inconsistent(state, self.effort):
            return Decision.INCONSISTENT
        return Decision.UNKNOWN

    def state_token(self, state) -> str:
        return str(state)

    def parse_token(self, token: str):
        return CellRef.parse(token)


def legal_moves(gspace: GameSpace, path: list, terminal: bool = False,
                refine_masks=()) -> list:
    """Every legal move at the current position: one select per continuation,
    a challenge, and (under masked play) one refine per strictly finer
    sub-cell of an admissible mask.  Terminal positions have none."""
    if terminal:
        return []
    current = path[-1]
    moves: list = [Select(c) for c in gspace.children(current)]
    moves.append(Challenge())
    moves.extend(Refine(c) for c in gspace.refinements(current, refine_masks))
    return moves


# --- policies ---


class Policy:
    """Maps the current path to an exact move distribution plus a value
    estimate in [0, 1] for player O."""

    def evaluate(self, path: list) -> tuple[list, Fraction]:
        raise NotImplementedError


class RationalTreePolicy(Policy):
    """Challenge in proportion to disbelief, select in proportion to belief.

    Disbelief in the current state is read conditionally on the play so far:
    a state carrying all of its parent's mass is never challenged.  A state
    whose materialized continuations carry no mass is always challenged.
    """

    def __init__(self, tree: BeliefTree):
        self.tree = tree

    def evaluate(self, path):
        node = path[-1]
        kids = self.tree.children_of(node)
        total = sum(self.tree.w[c] for c in kids) if kids else Fraction(0)
        if total == 0:
            return [(Challenge(), Fraction(1))], Fraction(0)
        parent = self.tree.parent_of(node)
        ceiling = self.tree.w[parent] if parent is not None else Fraction(1)
        conditional = self.tree.w[node] / ceiling if ceiling else Fraction(0)
        challenge_p = 1 - conditional
        dist = [(Challenge(), challenge_p)] if challenge_p else []
        for c in kids:
            p = conditional * self.tree.w[c] / total
            if p:
                dist.append((Select(c), p))
        return dist, conditional


class MonadicDepthPolicy(Policy):
    """The converged-belief player for a monadic signature.

    Weights in the limit are uniform over type worlds at every depth, with
    each consistent state owning a single consistent continuation, so play
    walks a uniformly chosen world chain and never challenges.
    """

    def __init__(self, sig: Signature):
        self.sig = sig
        self.worlds = tuple(enumerate_monadic_worlds(sig))

    def evaluate(self, path):
        state = path[-1]
        if state.depth == 0:
            share = Fraction(1, len(self.worlds))
            dist = [(Select(WorldState(w.realized, 1)), share) for w in self.worlds]
            return dist, Fraction(1)
        return [(Select(WorldState(state.world, state.depth + 1)), Fraction(1))], Fraction(1)


class ConjecturingTreePolicy(Policy):
    """Rational challenge behavior, but selects inside the best conjecture.

    The per-move conjecture pool is the refinement set of the current state
    (size-bounded subsets), ranked by likelihood-entropy score against the
    tree's weights; selection is weight-proportional within the top
    conjecture.
    """

    def __init__(self, tree: BeliefTree, size_weight=sqrt_weight, max_size: int = 2,
                 pool_limit: int = 16, universe_builder=None):
        self.tree = tree
        self.size_weight = size_weight
        self.max_size = max_size
        self.pool_limit = pool_limit
        self.universe_builder = universe_builder

    def _universe(self, node, kids):
        if self.universe_builder is not None:
            return self.universe_builder(node, kids)
        d = self.tree.space.depth_of(node) + 1
        pool = sorted(kids, key=lambda c: (-self.tree.w[c], self.tree.space.sort_key(c)))
        pool = pool[: self.pool_limit]
        out = []
        for size in range(1, min(self.max_size, len(pool)) + 1):
            for combo in itertools.combinations(pool, size):
                out.append(Conjecture(d, frozenset(combo)))
        return out

    def evaluate(self, path):
        node = path[-1]
        kids = self.tree.children_of(node)
        total = sum(self.tree.w[c] for c in kids) if kids else Fraction(0)
        if total == 0:
            return [(Challenge(), Fraction(1))], Fraction(0)
        parent = self.tree.parent_of(node)
        ceiling = self.tree.w[parent] if parent is not None else Fraction(1)
        conditional = self.tree.w[node] / ceiling if ceiling else Fraction(0)
        challenge_p = 1 - conditional
        weights = {c: self.tree.w[c] for c in kids}
        ranking = rank_conjectures(weights, self._universe(node, kids), self.size_weight)
        top = ranking[0][0] if ranking else Conjecture(0, frozenset())
        members = [c for c in sorted(top.members, key=self.tree.space.sort_key)]
        mass = sum(weights.get(c, Fraction(0)) for c in members)
        dist = [(Challenge(), challenge_p)] if challenge_p else []
        if mass == 0:
            # degenerate top conjecture; fall back to weight-proportional play
            members, mass = kids, total
        for c in members:
            p = conditional * weights.get(c, Fraction(0)) / mass
            if p:
                dist.append((Select(c), p))
        return dist, conditional


class ScriptedPolicy(Policy):
    """Plays a fixed move list, then delegates (default: challenges)."""

    def __init__(self, moves, then: Policy | None = None):
        self.moves = list(moves)
        self.then = then
        self._i = 0

    def evaluate(self, path):
        if self._i < len(self.moves):
            move = self.moves[self._i]
            self._i += 1
            return [(move, Fraction(1))], Fraction(0)
        if self.then is not None:
            return self.then.evaluate(path)
        return [(Challenge(), Fraction(1))], Fraction(0)

    def reset(self):
        self._i = 0


# --- the runner ---


@dataclass
class GameRecord:
    seed: int
    limit: int
    effort: int
    moves: list = field(default_factory=list)  # move tokens
    result: str = "drawn"  # O | E | drawn | unresolved
    z_o: int = 0
    z_e: int = 0
    forfeit: bool = False
    challenged: str | None = None
    verdict: str | None = None

    def log_line(self) -> str:
        # moves stays last: its tokens may contain spaces
        fields = [
            f"seed={self.seed}",
            f"n={len(self.moves)}",
            f"winner={self.result}",
            f"zO={self.z_o}",
            f"zE={self.z_e}",
            f"effort={self.effort}",
            f"forfeit={int(self.forfeit)}",
            f"moves={';'.join(self.moves) if self.moves else '-'}",
        ]
        return "game " + " ".join(fields)

    @staticmethod
    def parse_log_line(line: str) -> "GameRecord":
        if not line.startswith("game "):
            raise ValueError("not a game log line")
        head, _, moves_part = line[5:].partition(" moves=")
        if not moves_part:
            raise ValueError("log line missing moves field")
        kv = {}
        for part in head.split(" "):
            key, _, value = part.partition("=")
            kv[key] = value
        rec = GameRecord(seed=int(kv["seed"]), limit=0, effort=int(kv["effort"]))
        rec.moves = [] if moves_part == "-" else moves_part.split(";")
        rec.result = kv["winner"]
        rec.z_o = int(kv["zO"])
        rec.z_e = int(kv["zE"])
        rec.forfeit = kv["forfeit"] == "1"
        return rec


def _draw(rng: random.Random) -> Fraction:
    return Fraction(rng.getrandbits(DRAW_BITS), 1 << DRAW_BITS)


def sample_move(dist, rng: random.Random):
    """Exact cumulative sampling; distribution must sum to 1."""
    total = sum(p for _, p in dist)
    if total != 1:
        raise ValueError(f"move distribution sums to {total}, not 1")
    r = _draw(rng)
    acc = Fraction(0)
    for move, p in dist:
        acc += p
        if r < acc:
            return move
    return dist[-1][0]


def flip(rng: random.Random, q: Fraction) -> bool:
    """True with probability q, by exact rational comparison."""
    return _draw(rng) < q


def play_game(policy_o: Policy, policy_e: Policy, limit: int, gspace: GameSpace,
              seed: int, effort: int = 0) -> GameRecord:
    """One seeded game, at most `limit` moves; reproducible from the seed."""
    rng = random.Random(seed)
    rec = GameRecord(seed=seed, limit=limit, effort=effort)
    path = [gspace.initial()]
    for step in range(limit):
        policy = policy_o if mover(step) == "O" else policy_e
        dist, _value = policy.evaluate(path)
        move = sample_move(dist, rng)
        rec.moves.append(move.token(gspace))
        current = path[-1]
        if isinstance(move, Challenge):
            verdict = gspace.consistency(current)
            rec.challenged = gspace.state_token(current)
            rec.verdict = verdict.value
            challenger = mover(step)
            other = "E" if challenger == "O" else "O"
            if verdict == Decision.INCONSISTENT:
                rec.result = challenger
            elif verdict == Decision.CONSISTENT:
                rec.result = other
            else:
                rec.result = "unresolved"
            break
        if isinstance(move, Select):
            if not gspace.is_child(current, move.child):
                rec.forfeit = True
                rec.result = "E" if mover(step) == "O" else "O"
                break
            path.append(move.child)
            continue
        if isinstance(move, Refine):
            if not gspace.is_refine(current, move.cell):
                rec.forfeit = True
                rec.result = "E" if mover(step) == "O" else "O"
                break
            path.append(move.cell)
            continue
        raise TypeError(f"unknown move {move!r}")
    if rec.result == "O":
        rec.z_o, rec.z_e = 1, -1
    elif rec.result == "E":
        rec.z_o, rec.z_e = -1, 1
    return rec


@dataclass
class BatchStats:
    games: int = 0
    o_wins: int = 0
    e_wins: int = 0
    drawn: int = 0
    unresolved: int = 0
    forfeits: int = 0
    challenges: int = 0
    challenges_won: int = 0

    @property
    def challenge_accuracy(self) -> float:
        """Fraction of challenges that were correct; 1.0 when none were issued."""
        if self.challenges == 0:
            return 1.0
        return self.challenges_won / self.challenges

    def as_line(self) -> str:
        return (
            f"stats games={self.games} O={self.o_wins} E={self.e_wins} "
            f"drawn={self.drawn} unresolved={self.unresolved} forfeits={self.forfeits} "
            f"challenge_accuracy={self.challenge_accuracy:.6f}"
        )


def self_play(policy_factory, count: int, limit: int, gspace: GameSpace, seed: int,
              effort: int = 0, sink=None) -> tuple[BatchStats, list]:
    """`count` independent games with per-game seeds seed+i.

    `policy_factory` builds a fresh (policy_o, policy_e) pair per game so
    scripted policies restart cleanly; pass one policy object to use it for
    both sides.
    """
    stats = BatchStats()
    records = []
    for i in range(count):
        built = policy_factory() if callable(policy_factory) else policy_factory
        if isinstance(built, tuple):
            po, pe = built
        else:
            po = pe = built
        rec = play_game(po, pe, limit, gspace, seed + i, effort)
        records.append(rec)
        stats.games += 1
        if rec.result == "O":
            stats.o_wins += 1
        elif rec.result == "E":
            stats.e_wins += 1
        elif rec.result == "drawn":
            stats.drawn += 1
        else:
            stats.unresolved += 1
        stats.forfeits += int(rec.forfeit)
        if rec.moves and rec.moves[-1] == "C" and not rec.forfeit:
            stats.challenges += 1
            winner_is_challenger = rec.result == mover(len(rec.moves) - 1)
            stats.challenges_won += int(winner_is_challenger)
        if sink is not None:
            sink.write(rec.log_line() + "\n")
    return stats, records


def validate_record(rec: GameRecord, gspace: GameSpace) -> list[str]:
    """Replay a record against the rules; returns human-readable problems."""
    problems = []
    path = [gspace.initial()]
    for i, token in enumerate(rec.moves):
        if token == "C":
            if i != len(rec.moves) - 1:
                problems.append(f"move {i}: challenge before the final move")
            break
        kind, _, body = token.partition(":")
        try:
            state = gspace.parse_token(body)
        except Exception as exc:
            problems.append(f"move {i}: unparseable state ({exc})")
            break
        if kind == "S":
            if not gspace.is_child(path[-1], state):
                problems.append(f"move {i}: selected state does not refine the current one")
            path.append(state)
        elif kind == "R":
            if not gspace.is_refine(path[-1], state):
                problems.append(f"move {i}: refine target is not a finer sub-cell")
            path.append(state)
        else:
            problems.append(f"move {i}: unknown move kind {kind!r}")
    if rec.result in ("O", "E") and not rec.forfeit and rec.moves and rec.moves[-1] == "C":
        challenger = mover(len(rec.moves) - 1)
        verdict = gspace.consistency(path[-1])
        expect = None
        if verdict == Decision.INCONSISTENT:
            expect = challenger
        elif verdict == Decision.CONSISTENT:
            expect = "E" if challenger == "O" else "O"
        if expect is not None and rec.result != expect:
            problems.append("winner does not match the challenge verdict")
    return problems
