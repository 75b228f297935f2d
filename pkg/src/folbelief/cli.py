"""Command-line surface over the library.

Machine-readable results go to stdout, diagnostics to stderr.  Exit codes:
0 success, 1 domain error, 2 usage error.  Formats are documented in
FORMATS.md; every persistent file starts with a version header.
"""

from __future__ import annotations

import argparse
import os
import sys
from fractions import Fraction

from .abstraction import Filtration, FiltrationNodes
from .arena import (
    Challenge,
    CellGame,
    ConjecturingTreePolicy,
    ConstituentGame,
    GameRecord,
    MonadicDepthPolicy,
    Policy,
    RationalTreePolicy,
    Select,
    WorldChainGame,
    play_game,
    self_play,
    validate_record,
)
from .belief import BeliefTree, ConstituentNodes, UndefinedRenorm, load_snapshot, save_snapshot
from .constituents import CapExceeded, ConstituentSpace
from .conjecture import rank_conjectures, regularized_universe, sqrt_weight, weights_at_depth
from .dnf import Decision, DnfEngine, make_oracle
from .embedding import EmbeddingSpace
from .syntax import (
    Signature,
    SyntaxError_,
    depth as formula_depth,
    normalize,
    parse_formula,
    parse_sentence,
    print_formula,
    universal_closure,
)

GAMELOG_HEADER = "folbelief-gamelog 1"
MASK_HEADER = "# folbelief-mask 1"


class DomainError(Exception):
    pass


def _load_signature(value: str) -> Signature:
    if "/" in value and not os.path.exists(value):
        return Signature.parse(value)
    try:
        with open(value) as fh:
            body = "\n".join(ln for ln in fh if not ln.lstrip().startswith("#"))
    except OSError as exc:
        raise DomainError(f"cannot read signature: {exc}") from None
    return Signature.parse(body)


def _load_formula_text(value: str) -> str:
    if os.path.exists(value):
        with open(value) as fh:
            return fh.read().strip()
    return value


def _parse(args, sig: Signature):
    text = _load_formula_text(args.formula)
    try:
        if getattr(args, "close", False):
            return parse_sentence(text, sig, close=True)
        return parse_formula(text, sig)
    except SyntaxError_ as exc:
        raise DomainError(str(exc)) from None


def _space(args) -> ConstituentSpace:
    return ConstituentSpace(_load_signature(args.sig), cap=args.cap)


def _load_tree(args, space: ConstituentSpace) -> BeliefTree:
    nodes = ConstituentNodes(space)
    try:
        return load_snapshot(args.snapshot, nodes)
    except OSError as exc:
        raise DomainError(f"cannot read snapshot: {exc}") from None
    except ValueError as exc:
        raise DomainError(f"bad snapshot: {exc}") from None


def _write_tree(tree: BeliefTree, path: str | None):
    if path is None or path == "-":
        sys.stdout.write(tree.to_snapshot())
    else:
        save_snapshot(tree, path)


def cmd_parse(args) -> int:
    sig = _load_signature(args.sig)
    f = _parse(args, sig)
    if args.normalize:
        f = normalize(f)
    print(print_formula(f))
    print(f"depth {formula_depth(f)}", file=sys.stderr)
    return 0


def cmd_count(args) -> int:
    space = _space(args)
    print(space.constituent_count(args.depth, args.terms))
    return 0


def cmd_enumerate(args) -> int:
    space = _space(args)
    for c in space.enumerate_constituents(args.depth, args.terms):
        print(space.text(c))
    return 0


def cmd_dnf(args) -> int:
    space = _space(args)
    sig = space.sig
    f = _parse(args, sig)
    if formula_depth(f) > args.depth:
        raise DomainError("formula deeper than --depth")
    engine = DnfEngine(space)
    sentence = universal_closure(f)
    members = engine.dnf(sentence, args.depth).members
    if args.consistent_only:
        oracle = make_oracle(space, args.oracle, args.effort, args.max_domain)
        members = {c for c in members if oracle.decide(c) == Decision.CONSISTENT}
    for text in sorted(space.text(c) for c in members):
        print(text)
    return 0


def _filtration(args, space: ConstituentSpace) -> Filtration | None:
    if not getattr(args, "mask", None):
        return None
    with open(args.mask) as fh:
        return Filtration.parse_text(space, fh.read())


def cmd_belief_init(args) -> int:
    space = _space(args)
    filtration = _filtration(args, space)
    nodes = FiltrationNodes(filtration) if filtration else ConstituentNodes(space)
    if args.mode == "parent-uniform":
        tree = BeliefTree.parent_uniform(nodes, args.depth)
    else:
        tree, violations = BeliefTree.depth_uniform(nodes, args.depth)
        for node, residual in violations:
            print(f"incoherent {nodes.node_text(node)} residual={residual}", file=sys.stderr)
        if violations and not args.allow_incoherent:
            raise DomainError(
                f"depth-uniform weights are incoherent at {len(violations)} nodes "
                "(pass --allow-incoherent to keep them)"
            )
    _write_tree(tree, args.out)
    return 0


def cmd_belief_renorm(args) -> int:
    space = _space(args)
    tree = _load_tree(args, space)
    node = space.parse_text(args.minus, args.minus_depth, 0)
    try:
        tree = tree.renormalize(node)
    except UndefinedRenorm as exc:
        raise DomainError(f"renormalization undefined: {exc}") from None
    _write_tree(tree, args.out)
    return 0


def cmd_belief_step(args) -> int:
    space = _space(args)
    tree = _load_tree(args, space)
    depths = [args.at_depth] if args.at_depth else list(range(1, tree.max_depth() + 1))
    stages = [{space.text(n): tree.w[n] for n in tree.nodes_at_depth(args.track_depth or tree.max_depth())}]
    labels = ["init"]
    for d in depths:
        tree = tree.sequence_step(d)
        stages.append({space.text(n): tree.w[n]
                       for n in tree.nodes_at_depth(args.track_depth or tree.max_depth())})
        labels.append(f"d={d}")
        if args.trace:
            with open(args.trace, "a") as fh:
                for n in sorted(tree.nodes(), key=tree.space.sort_key):
                    fh.write(f"{d}\t{space.text(n)}\t{tree.w[n]}\n")
    if args.plot:
        from .viz import plot_weight_evolution

        plot_weight_evolution(stages, labels, args.plot)
        print(f"figure written to {args.plot}", file=sys.stderr)
    _write_tree(tree, args.out)
    return 0


def cmd_belief_query(args) -> int:
    space = _space(args)
    tree = _load_tree(args, space)
    f = _parse(args, space.sig)
    engine = DnfEngine(space)
    value = tree.belief_in(engine, f, args.depth)
    print(f"{value.numerator}/{value.denominator}")
    return 0


def cmd_belief_prove(args) -> int:
    space = _space(args)
    tree = _load_tree(args, space)
    f = _parse(args, space.sig)
    engine = DnfEngine(space)
    print("true" if tree.proves(engine, f, args.depth) else "false")
    return 0


def cmd_belief_snapshot(args) -> int:
    space = _space(args)
    tree = _load_tree(args, space)
    tree.check()
    _write_tree(tree, args.out)
    return 0


def cmd_embed(args) -> int:
    space = _space(args)
    tree = _load_tree(args, space)
    engine = DnfEngine(space)
    emb = EmbeddingSpace(tree, engine, args.depth)
    f = _parse(args, space.sig)
    vec = emb.embed(f)
    coeffs = dict(vec.coefficients)
    for node in sorted(tree.nodes_at_depth(args.depth), key=space.sort_key):
        c = coeffs.get(node, Fraction(0))
        print(f"{space.text(node)}\t{c}\t{tree.w[node]}")
    return 0


def cmd_geom(args) -> int:
    space = _space(args)
    tree = _load_tree(args, space)
    engine = DnfEngine(space)
    emb = EmbeddingSpace(tree, engine, args.depth)
    sig = space.sig
    f1 = parse_sentence(_load_formula_text(args.f1), sig, close=True)
    f2 = parse_sentence(_load_formula_text(args.f2), sig, close=True)
    e1, e2 = emb.embed(f1), emb.embed(f2)
    inner = emb.inner(e1, e2)
    print(f"inner\t{inner.numerator}/{inner.denominator}")
    for name, vec in (("norm1", e1), ("norm2", e2)):
        sq = emb.norm_sq(vec)
        print(f"{name}_sq\t{sq.numerator}/{sq.denominator}")
        print(f"{name}\t{emb.norm(vec):.{args.digits}f}")
    rho = emb.correlation(f1, f2)
    print("correlation\tundefined" if rho is None else f"correlation\t{rho:.{args.digits}f}")
    return 0


def _size_weight(name: str):
    import math

    return {
        "sqrt": sqrt_weight,
        "log": lambda n: math.log(n + 1),
        "linear": lambda n: float(n),
    }[name]


def cmd_conjecture(args) -> int:
    space = _space(args)
    tree = _load_tree(args, space)
    engine = DnfEngine(space)
    sig = space.sig
    sentences = []
    if args.k_file:
        with open(args.k_file) as fh:
            for ln in fh:
                ln = ln.strip()
                if ln and not ln.startswith("#"):
                    sentences.append(parse_sentence(ln, sig, close=True))
    universe = regularized_universe(engine, sentences, args.depth,
                                    max_size=args.max_size, full=args.full)
    weights = weights_at_depth(tree, args.depth)
    ranked = rank_conjectures(weights, universe, _size_weight(args.size_weight))
    for conj, score in ranked[: args.top or len(ranked)]:
        members = " ".join(space.text(m) for m in sorted(conj.members, key=space.sort_key))
        print(f"{score:.9f}\t{len(conj)}\t{members if members else 'BOT'}")
    return 0


class HumanPolicy(Policy):
    """Reads moves from stdin: 'c' to challenge, an index to select."""

    def __init__(self, gspace, tree=None):
        self.gspace = gspace
        self.tree = tree

    def evaluate(self, path):
        current = path[-1]
        options = []
        if self.tree is not None and not self.tree.is_frontier(current):
            options = self.tree.children_of(current)
        print(f"at {self.gspace.state_token(current)}", file=sys.stderr)
        for i, c in enumerate(options):
            print(f"  [{i}] {self.gspace.state_token(c)}", file=sys.stderr)
        while True:
            raw = input("move (c = challenge, index = select)> ").strip()
            if raw == "c":
                return [(Challenge(), Fraction(1))], Fraction(0)
            if raw.isdigit() and int(raw) < len(options):
                return [(Select(options[int(raw)]), Fraction(1))], Fraction(0)
            print("bad move", file=sys.stderr)


def _game_setup(args):
    space = _space(args)
    filtration = _filtration(args, space)
    agents = {getattr(args, "agent_o", args.agent), getattr(args, "agent_e", args.agent)}
    if "limit" in agents:
        if agents - {"limit"}:
            raise DomainError("the limit agent plays on world chains; both sides must use it")
        return WorldChainGame(space.sig), space, None, None
    oracle = make_oracle(space, args.oracle, args.effort, args.max_domain)
    if filtration is not None:
        gspace = CellGame(filtration, oracle if args.oracle == "exact" else None, args.effort)
        nodes = FiltrationNodes(filtration, args.effort)
    else:
        gspace = ConstituentGame(space, oracle)
        nodes = ConstituentNodes(space)
    if getattr(args, "snapshot", None):
        tree = load_snapshot(args.snapshot, nodes)
    else:
        tree = BeliefTree.parent_uniform(nodes, args.depth)
        if args.converge:
            tree = tree.run_sequence()
    return gspace, space, nodes, tree


def _make_policy(name: str, gspace, space, tree, args):
    if name == "limit":
        return MonadicDepthPolicy(space.sig)
    if name == "rational":
        return RationalTreePolicy(tree)
    if name == "conjecturing":
        return ConjecturingTreePolicy(tree)
    if name == "challenger":
        class _Always(Policy):
            def evaluate(self, path):
                return [(Challenge(), Fraction(1))], Fraction(0)

        return _Always()
    if name == "human":
        return HumanPolicy(gspace, tree)
    raise DomainError(f"unknown agent {name!r}")


def cmd_play(args) -> int:
    gspace, space, nodes, tree = _game_setup(args)
    po = _make_policy(args.agent_o, gspace, space, tree, args)
    pe = _make_policy(args.agent_e, gspace, space, tree, args)
    rec = play_game(po, pe, args.n, gspace, args.seed, args.effort)
    print(rec.log_line())
    return 0


def cmd_selfplay(args) -> int:
    gspace, space, nodes, tree = _game_setup(args)

    def factory():
        return (_make_policy(args.agent, gspace, space, tree, args),
                _make_policy(args.agent, gspace, space, tree, args))

    sink = None
    if args.log:
        sink = open(args.log, "w")
        sink.write(GAMELOG_HEADER + "\n")
    try:
        stats, _records = self_play(factory, args.count, args.n, gspace, args.seed,
                                    args.effort, sink=sink)
    finally:
        if sink:
            sink.close()
    print(stats.as_line())
    if args.plot:
        from .viz import plot_batch_outcomes

        plot_batch_outcomes(stats, args.plot)
        print(f"figure written to {args.plot}", file=sys.stderr)
    return 0


def cmd_replay(args) -> int:
    gspace, space, nodes, tree = _game_setup(args)
    bad = 0
    with open(args.log) as fh:
        for ln_no, ln in enumerate(fh, start=1):
            ln = ln.strip()
            if not ln or ln.startswith("folbelief-gamelog") or ln.startswith("stats "):
                continue
            rec = GameRecord.parse_log_line(ln)
            problems = validate_record(rec, gspace) if args.validate else []
            if problems:
                bad += 1
                for p in problems:
                    print(f"line {ln_no}: {p}")
            else:
                print(f"line {ln_no}: ok seed={rec.seed} winner={rec.result}")
    return 1 if bad else 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="folbelief",
                                description="Normal-form belief machinery and proving games")
    p.add_argument("--cap", type=int, default=1 << 20, help="enumeration cap (ids)")
    sub = p.add_subparsers(dest="command", required=True)

    def add_common(q, depth=True):
        q.add_argument("--sig", required=True, help="signature file or inline 'P/1 Q/2'")
        if depth:
            q.add_argument("--depth", type=int, required=True)

    q = sub.add_parser("parse", help="parse and print a formula")
    add_common(q, depth=False)
    q.add_argument("--formula", required=True)
    q.add_argument("--close", action="store_true", help="take the universal closure")
    q.add_argument("--normalize", action="store_true")
    q.set_defaults(fn=cmd_parse)

    q = sub.add_parser("count", help="exact constituent count")
    add_common(q)
    q.add_argument("--terms", type=int, default=0)
    q.set_defaults(fn=cmd_count)

    q = sub.add_parser("enumerate", help="list constituents in canonical order")
    add_common(q)
    q.add_argument("--terms", type=int, default=0)
    q.set_defaults(fn=cmd_enumerate)

    q = sub.add_parser("dnf", help="normal form members of a sentence")
    add_common(q)
    q.add_argument("--formula", required=True)
    q.add_argument("--close", action="store_true", default=True)
    q.add_argument("--consistent-only", action="store_true")
    q.add_argument("--oracle", choices=["exact", "bounded"], default="exact")
    q.add_argument("--effort", type=int, default=0)
    q.add_argument("--max-domain", type=int, default=2)
    q.set_defaults(fn=cmd_dnf)

    belief = sub.add_parser("belief", help="belief-tree operations")
    bsub = belief.add_subparsers(dest="subcommand", required=True)

    q = bsub.add_parser("init")
    add_common(q)
    q.add_argument("--mode", choices=["parent-uniform", "depth-uniform"],
                   default="parent-uniform")
    q.add_argument("--mask", help="mask file for a cell-level tree")
    q.add_argument("--allow-incoherent", action="store_true")
    q.add_argument("--out", default="-")
    q.set_defaults(fn=cmd_belief_init)

    q = bsub.add_parser("renorm")
    add_common(q, depth=False)
    q.add_argument("--snapshot", required=True)
    q.add_argument("--minus", required=True, help="constituent text form to refute")
    q.add_argument("--minus-depth", type=int, required=True)
    q.add_argument("--out", default="-")
    q.set_defaults(fn=cmd_belief_renorm)

    q = bsub.add_parser("step")
    add_common(q, depth=False)
    q.add_argument("--snapshot", required=True)
    q.add_argument("--at-depth", type=int, help="single depth; default sweeps all")
    q.add_argument("--track-depth", type=int)
    q.add_argument("--trace", help="append step TSV lines here")
    q.add_argument("--plot", help="write a weight-evolution figure here")
    q.add_argument("--out", default="-")
    q.set_defaults(fn=cmd_belief_step)

    q = bsub.add_parser("query")
    add_common(q)
    q.add_argument("--snapshot", required=True)
    q.add_argument("--formula", required=True)
    q.add_argument("--close", action="store_true", default=True)
    q.set_defaults(fn=cmd_belief_query)

    q = bsub.add_parser("prove")
    add_common(q)
    q.add_argument("--snapshot", required=True)
    q.add_argument("--formula", required=True)
    q.add_argument("--close", action="store_true", default=True)
    q.set_defaults(fn=cmd_belief_prove)

    q = bsub.add_parser("snapshot")
    add_common(q, depth=False)
    q.add_argument("--snapshot", required=True)
    q.add_argument("--out", default="-")
    q.set_defaults(fn=cmd_belief_snapshot)

    q = sub.add_parser("embed", help="indicator embedding of a sentence")
    add_common(q)
    q.add_argument("--snapshot", required=True)
    q.add_argument("--formula", required=True)
    q.add_argument("--close", action="store_true", default=True)
    q.set_defaults(fn=cmd_embed)

    q = sub.add_parser("geom", help="inner products, norms, correlation")
    add_common(q)
    q.add_argument("--snapshot", required=True)
    q.add_argument("--f1", required=True)
    q.add_argument("--f2", required=True)
    q.add_argument("--digits", type=int, default=12)
    q.set_defaults(fn=cmd_geom)

    q = sub.add_parser("conjecture", help="rank conjectures by likelihood-entropy score")
    add_common(q)
    q.add_argument("--snapshot", required=True)
    q.add_argument("--k-file", help="sentences, one per line")
    q.add_argument("--max-size", type=int, default=3)
    q.add_argument("--full", action="store_true")
    q.add_argument("--size-weight", choices=["sqrt", "log", "linear"], default="sqrt")
    q.add_argument("--top", type=int)
    q.set_defaults(fn=cmd_conjecture)

    def add_game(q, two_sided: bool):
        add_common(q)
        q.add_argument("--snapshot")
        q.add_argument("--mask")
        q.add_argument("--converge", action="store_true",
                       help="run the update sequence before play")
        q.add_argument("--oracle", choices=["exact", "bounded"], default="exact")
        q.add_argument("--effort", type=int, default=0)
        q.add_argument("--max-domain", type=int, default=2)
        q.add_argument("--n", type=int, default=6, help="move limit")
        q.add_argument("--seed", type=int, default=0)
        if two_sided:
            q.add_argument("--agent-o", default="rational",
                           choices=["rational", "conjecturing", "limit", "challenger", "human"])
            q.add_argument("--agent-e", default="rational",
                           choices=["rational", "conjecturing", "limit", "challenger", "human"])
            q.set_defaults(agent="rational")
        else:
            q.add_argument("--agent", default="rational",
                           choices=["rational", "conjecturing", "limit", "challenger"])
            q.set_defaults(agent_o=None, agent_e=None)

    q = sub.add_parser("play", help="one game")
    add_game(q, two_sided=True)
    q.add_argument("--interactive", action="store_true",
                   help="alias for --agent-o human")
    q.set_defaults(fn=cmd_play)

    q = sub.add_parser("selfplay", help="seeded batch of games")
    add_game(q, two_sided=False)
    q.add_argument("--count", type=int, default=100)
    q.add_argument("--log", help="write one record per line here")
    q.add_argument("--plot", help="write an outcome figure here")
    q.set_defaults(fn=cmd_selfplay)

    q = sub.add_parser("replay", help="validate a game log")
    add_game(q, two_sided=False)
    q.add_argument("--log", required=True)
    q.add_argument("--validate", action="store_true", default=True)
    q.set_defaults(fn=cmd_replay)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "interactive", False):
        args.agent_o = "human"
    try:
        return args.fn(args)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (CapExceeded, UndefinedRenorm, ValueError, SyntaxError_) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
