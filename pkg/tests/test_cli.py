import pytest

from folbelief.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_count_golden(capsys):
    code, out, _ = run(capsys, "count", "--sig", "Lt/2", "--depth", "2")
    assert code == 0
    assert out.strip() == str(2 ** 512)


def test_parse(capsys):
    code, out, err = run(capsys, "parse", "--sig", "P/1 Lt/2", "--formula",
                         "(A x)(E m) Lt(m, x)")
    assert code == 0
    assert "depth 2" in err
    code, out, _ = run(capsys, "parse", "--sig", "P/1", "--formula", "P(x)", "--close")
    assert code == 0 and out.startswith("~(E x)")


def test_parse_error_exit_one(capsys):
    code, _, err = run(capsys, "parse", "--sig", "P/1", "--formula", "P(x, y)")
    assert code == 1
    assert "arity" in err


def test_usage_error_exit_two(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["not-a-command"])
    assert exc.value.code == 2


def test_enumerate_and_cap(capsys):
    code, out, _ = run(capsys, "enumerate", "--sig", "P/1", "--depth", "1")
    assert code == 0
    assert len(out.strip().splitlines()) == 4
    code, _, err = run(capsys, "enumerate", "--sig", "Lt/2", "--depth", "2")
    assert code == 1 and "cap" in err


def test_dnf_lists_members_sorted(capsys):
    code, out, _ = run(capsys, "dnf", "--sig", "P/1", "--depth", "1",
                       "--formula", "(E x) P(x)")
    assert code == 0
    lines = out.strip().splitlines()
    assert len(lines) == 2
    assert lines == sorted(lines)


def test_belief_pipeline(tmp_path, capsys):
    snap = tmp_path / "snap.txt"
    code, _, _ = run(capsys, "belief", "init", "--sig", "P/1", "--depth", "1",
                     "--out", str(snap))
    assert code == 0 and snap.exists()
    code, out, _ = run(capsys, "belief", "prove", "--sig", "P/1", "--depth", "1",
                       "--snapshot", str(snap), "--formula", "(P(x) | ~P(x))")
    assert (code, out.strip()) == (0, "true")
    code, out, _ = run(capsys, "belief", "query", "--sig", "P/1", "--depth", "1",
                       "--snapshot", str(snap), "--formula", "(E x) P(x)")
    assert (code, out.strip()) == (0, "1/2")
    code, out, _ = run(capsys, "belief", "snapshot", "--sig", "P/1",
                       "--snapshot", str(snap))
    assert code == 0 and out == snap.read_text()


def test_belief_renorm_cli(tmp_path, capsys):
    snap = tmp_path / "snap.txt"
    run(capsys, "belief", "init", "--sig", "P/1", "--depth", "1", "--out", str(snap))
    code, out, _ = run(capsys, "enumerate", "--sig", "P/1", "--depth", "1")
    first = out.strip().splitlines()[0]
    out2 = tmp_path / "renormed.txt"
    code, _, _ = run(capsys, "belief", "renorm", "--sig", "P/1", "--snapshot", str(snap),
                     "--minus", first, "--minus-depth", "1", "--out", str(out2))
    assert code == 0
    body = out2.read_text()
    assert "\t0/1" in body and "1/3" in body


def test_belief_step_with_plot_and_trace(tmp_path, capsys):
    snap = tmp_path / "snap.txt"
    run(capsys, "belief", "init", "--sig", "P/1", "--depth", "2", "--out", str(snap))
    out2 = tmp_path / "stepped.txt"
    fig = tmp_path / "weights.png"
    trace = tmp_path / "trace.tsv"
    code, _, err = run(capsys, "belief", "step", "--sig", "P/1", "--snapshot", str(snap),
                       "--track-depth", "1", "--trace", str(trace),
                       "--plot", str(fig), "--out", str(out2))
    assert code == 0
    assert fig.exists() and fig.stat().st_size > 1000
    assert trace.exists() and "\t" in trace.read_text()
    assert out2.exists()


def test_depth_uniform_incoherence_reported(tmp_path, capsys):
    code, _, err = run(capsys, "belief", "init", "--sig", "P/1", "--depth", "2",
                       "--mode", "depth-uniform", "--out", str(tmp_path / "x.txt"))
    assert code == 1
    assert "incoherent" in err


def test_embed_and_geom(tmp_path, capsys):
    snap = tmp_path / "snap.txt"
    run(capsys, "belief", "init", "--sig", "P/1", "--depth", "2", "--out", str(snap))
    code, out, _ = run(capsys, "embed", "--sig", "P/1", "--depth", "2",
                       "--snapshot", str(snap), "--formula", "(E x) P(x)")
    assert code == 0
    rows = [ln.split("\t") for ln in out.strip().splitlines()]
    assert len(rows) == 256
    assert {r[1] for r in rows} == {"0", "1"}
    code, out, _ = run(capsys, "geom", "--sig", "P/1", "--depth", "2",
                       "--snapshot", str(snap), "--f1", "(E x) P(x)",
                       "--f2", "~(E x) P(x)")
    assert code == 0
    fields = dict(ln.split("\t") for ln in out.strip().splitlines())
    assert fields["inner"] == "0/1"
    assert fields["correlation"].startswith("-1.0")


def test_conjecture_cli(tmp_path, capsys):
    snap = tmp_path / "snap.txt"
    run(capsys, "belief", "init", "--sig", "P/1", "--depth", "1", "--out", str(snap))
    kfile = tmp_path / "k.txt"
    kfile.write_text("(E x) P(x)\n")
    code, out, _ = run(capsys, "conjecture", "--sig", "P/1", "--depth", "1",
                       "--snapshot", str(snap), "--k-file", str(kfile), "--max-size", "2")
    assert code == 0
    lines = out.strip().splitlines()
    assert any("BOT" in ln for ln in lines)
    scores = [float(ln.split("\t")[0]) for ln in lines]
    assert scores == sorted(scores, reverse=True)


def test_play_and_selfplay_and_replay(tmp_path, capsys):
    code, out, _ = run(capsys, "play", "--sig", "P/1", "--depth", "2",
                       "--agent-o", "limit", "--agent-e", "limit",
                       "--n", "6", "--seed", "3")
    assert code == 0
    assert "winner=drawn" in out
    log = tmp_path / "games.log"
    fig = tmp_path / "outcomes.png"
    code, out, _ = run(capsys, "selfplay", "--sig", "P/1", "--depth", "2",
                       "--agent", "rational", "--count", "25", "--n", "6",
                       "--seed", "9", "--log", str(log), "--plot", str(fig))
    assert code == 0 and out.startswith("stats games=25")
    assert fig.exists() and fig.stat().st_size > 1000
    body = log.read_text().splitlines()
    assert body[0] == "folbelief-gamelog 1"
    assert len(body) == 26
    code, out, _ = run(capsys, "replay", "--sig", "P/1", "--depth", "2",
                       "--log", str(log), "--validate")
    assert code == 0
    assert all("ok" in ln for ln in out.strip().splitlines())


def test_readme_snippet():
    from fractions import Fraction

    from folbelief import (
        BeliefTree,
        ConstituentNodes,
        ConstituentSpace,
        DnfEngine,
        Signature,
        parse_formula,
    )

    sig = Signature.monadic("P")
    space = ConstituentSpace(sig)
    tree = BeliefTree.parent_uniform(ConstituentNodes(space), 2).run_sequence()
    engine = DnfEngine(space)
    some_p = parse_formula("(E x) P(x)", sig)
    assert tree.belief_in(engine, some_p, 2) == Fraction(1, 2)
    assert not tree.proves(engine, some_p, 2)


def test_interactive_play(tmp_path, capsys, monkeypatch):
    answers = iter(["0", "c"])
    monkeypatch.setattr("builtins.input", lambda prompt="": next(answers))
    code, out, _ = run(capsys, "play", "--sig", "P/1", "--depth", "2",
                       "--interactive", "--agent-e", "rational",
                       "--n", "4", "--seed", "5")
    assert code == 0
    assert out.startswith("game ")


def test_masked_play_cli(tmp_path, capsys):
    mask = tmp_path / "mask.txt"
    mask.write_text("1 none\n2 none\n")
    code, out, _ = run(capsys, "play", "--sig", "P/1", "--depth", "2",
                       "--mask", str(mask), "--agent-o", "rational",
                       "--agent-e", "rational", "--n", "4", "--seed", "8")
    assert code == 0
    assert "cell" in out


def test_selfplay_deterministic(tmp_path, capsys):
    args = ["selfplay", "--sig", "P/1", "--depth", "2", "--agent", "rational",
            "--count", "10", "--n", "4", "--seed", "77"]
    _, out1, _ = run(capsys, *args)
    _, out2, _ = run(capsys, *args)
    assert out1 == out2


def test_masked_snapshot_round_trip(tmp_path, capsys):
    mask = tmp_path / "mask.txt"
    mask.write_text("1 none\n2 none\n")
    snap = tmp_path / "cells.txt"
    code, _, _ = run(capsys, "belief", "init", "--sig", "P/1", "--depth", "2",
                     "--mask", str(mask), "--out", str(snap))
    assert code == 0
    body = snap.read_text()
    assert "kind cells" in body
    assert "[cell d=2 ()]" in body

    from folbelief.abstraction import Filtration, FiltrationNodes, Mask
    from folbelief.belief import load_snapshot
    from folbelief.constituents import ConstituentSpace
    from folbelief.syntax import Signature

    sp = ConstituentSpace(Signature.monadic("P"))
    filt = Filtration(sp, {1: Mask.none(), 2: Mask.none()})
    tree = load_snapshot(str(snap), FiltrationNodes(filt))
    assert tree.to_snapshot() == body
