from __future__ import annotations

import random
from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gbdist import (
    Cost,
    DistanceTriple,
    EMPTY_TREE,
    FiniteTree,
    FormatError,
    RegularTree,
    assemble_limit,
    check_telescopic,
    fold_sequence,
    format_ccd,
    format_lts,
    format_metric,
    format_sequence,
    format_telescopic,
    format_tree,
    parse_ccd,
    parse_lts,
    parse_metric,
    parse_sequence,
    parse_telescopic,
    parse_tree,
    tree_equal,
    tree_sum,
    usual_metric,
    validate_sequence,
    verify_ccd,
)
from genutil import rand_lts, rand_metric, rand_steps, rand_tree

DATA = Path(__file__).parent / "data"

leaf = FiniteTree.leaf


def load(name: str) -> str:
    return (DATA / name).read_text()


class TestTreeGrammar:
    def test_empty(self):
        assert parse_tree("0") == EMPTY_TREE
        assert parse_tree("  0  ") == EMPTY_TREE

    def test_bare_action_is_a_leaf(self):
        assert parse_tree("a") == leaf("a")
        assert parse_tree("a.0") == leaf("a")
        assert parse_tree("x.(0)") == leaf("x")

    def test_two_summand_example(self):
        want = tree_sum([FiniteTree.of(("a", leaf("c"))),
                         FiniteTree.of(("b", leaf("d")))])
        assert parse_tree("a.c + b.d") == want
        assert parse_tree("a.c+b.d") == want

    def test_wide_example(self):
        want = FiniteTree([
            ("1", tree_sum([leaf(x) for x in "2345"])),
            ("1", tree_sum([leaf(x) for x in "1234"])),
        ])
        assert parse_tree("1.(2+3+4+5) + 1.(1+2+3+4)") == want
        # summand order in the text is irrelevant
        assert parse_tree("1.(1+2+3+4) + 1.(2+3+4+5)") == want

    def test_chains(self):
        assert parse_tree("a.b.c") == FiniteTree.chain(["a", "b", "c"])
        assert parse_tree("a.(b.c)") == FiniteTree.chain(["a", "b", "c"])
        mixed = parse_tree("a.(b.c+d)")
        assert mixed == FiniteTree([
            ("a", tree_sum([FiniteTree.chain(["b", "c"]), leaf("d")])),
        ])

    def test_zero_as_an_action(self):
        assert parse_tree("0.0") == leaf("0")
        assert parse_tree("0+1") == tree_sum([leaf("0"), leaf("1")])
        assert parse_tree("0.0.0") == FiniteTree([("0", leaf("0"))])
        assert parse_tree("a.0.0") == FiniteTree([("a", leaf("0"))])
        assert parse_tree("0.(0+0)") == FiniteTree(
            [("0", tree_sum([leaf("0"), leaf("0")]))])

    def test_whitespace_insignificant(self):
        assert parse_tree(" a . ( b + c ) ") == parse_tree("a.(b+c)")

    @pytest.mark.parametrize("text,column", [
        ("", 1),
        ("a.(b", 5),
        ("a..b", 3),
        ("a$", 2),
        ("a b", 3),
        ("a+", 3),
        ("(a)", 1),
        ("a.", 3),
        ("+a", 1),
    ])
    def test_syntax_errors_carry_a_column(self, text, column):
        with pytest.raises(FormatError) as err:
            parse_tree(text)
        assert err.value.column == column
        assert "column" in str(err.value)

    def test_printed_form_is_stable(self):
        for text in ["0", "a", "a.b.c", "a.(b+c)", "0.0", "0+0", "a.0.0",
                     "0.0.0", "a.c+a.d", "1.(1+2+3+4)+1.(2+3+4+5)"]:
            assert format_tree(parse_tree(text)) == text

    def test_random_round_trips(self):
        rng = random.Random(2024)
        for _ in range(100):
            dom = rand_metric(rng, rng.randint(2, 5))
            t = rand_tree(rng, dom.actions, rng.randint(0, 4), 3)
            assert parse_tree(format_tree(t)) == t


class TestMetricFiles:
    def test_two_pair_golden(self):
        dom = parse_metric(load("metric_ab4_cd1.txt"))
        assert dom.actions == ("a", "b", "c", "d")
        assert dom.entries() == [("a", "b", Fraction(4)), ("c", "d", Fraction(1))]

    def test_digits_golden_matches_usual_metric(self):
        dom = parse_metric(load("metric_digits.txt"))
        usual = usual_metric(5)
        assert dom.actions == usual.actions
        assert dom.entries() == usual.entries()

    def test_empty_file_is_the_default_domain(self):
        dom = parse_metric("# nothing here\n\n")
        assert dom.actions == ()
        assert dom.entries() == []

    def test_symmetric_closure(self):
        dom = parse_metric("b a 4")
        assert dom.entries() == [("a", "b", Fraction(4))]

    def test_actions_line_declares_isolated_actions(self):
        dom = parse_metric("actions x y\nx z 1\n")
        assert set(dom.actions) == {"x", "y", "z"}

    def test_conflicting_lines(self):
        with pytest.raises(FormatError) as err:
            parse_metric("a b 1\nb a 2\n")
        assert err.value.line == 2
        assert "line 1" in str(err.value)
        # restating the same value is not a conflict
        parse_metric("a b 1\nb a 1\n")

    @pytest.mark.parametrize("text,line", [
        ("a b 1\na a 1\n", 2),
        ("a b -1\n", 1),
        ("a b x\n", 1),
        ("a b\n", 1),
        ("actions\n", 1),
        ("a b 1 extra\n", 1),
    ])
    def test_bad_lines(self, text, line):
        with pytest.raises(FormatError) as err:
            parse_metric(text)
        assert err.value.line == line

    def test_metric_law_violations_surface(self):
        with pytest.raises(FormatError):
            parse_metric("a b 1\nb c 1\na c 5\n")

    def test_random_round_trips(self):
        rng = random.Random(7)
        for _ in range(50):
            dom = rand_metric(rng, rng.randint(2, 6))
            back = parse_metric(format_metric(dom))
            assert back.actions == dom.actions
            assert back.entries() == dom.entries()


class TestLtsFiles:
    def test_counter_goldens(self, counter_trees):
        t, tp, _ = counter_trees
        left = parse_lts(load("counter_left.lts"))
        right = parse_lts(load("counter_right.lts"))
        assert tree_equal(left, t)
        assert tree_equal(right, tp)
        assert format_tree(left.unfold_to_depth(2)) == "0+0.(0+0)"

    def test_round_trip_is_exact_for_named_states(self):
        r = parse_lts(load("counter_left.lts"))
        back = parse_lts(format_lts(r))
        assert back.states == r.states
        assert back.succ == r.succ
        assert back.root == r.root

    def test_parallel_transitions_survive(self):
        r = parse_lts("root s\ns -a-> s\ns -a-> s\n")
        assert r.succ["s"] == (("a", "s"), ("a", "s"))
        assert format_lts(r).count("s -a-> s") == 2

    def test_structural_states_get_renamed(self):
        tree = RegularTree.from_finite(parse_tree("a.(b+c)"))
        text = format_lts(tree)
        assert "root s0" in text
        assert tree_equal(parse_lts(text), tree)

    @pytest.mark.parametrize("text,line", [
        ("s -a-> t\n", None),
        ("root s\nroot t\n", 2),
        ("root s\ns => t\n", 2),
        ("root s\ns -a->\n", 2),
        ("root\n", 1),
    ])
    def test_bad_lines(self, text, line):
        with pytest.raises(FormatError) as err:
            parse_lts(text)
        assert err.value.line == line

    def test_random_round_trips(self):
        rng = random.Random(99)
        for _ in range(50):
            dom = rand_metric(rng, 3)
            r = rand_lts(rng, dom.actions, rng.randint(1, 5))
            back = parse_lts(format_lts(r))
            assert tree_equal(back, r)
            assert back.root == "q0"


class TestSequenceFiles:
    def test_projected_witness_goldens(self, running_pair, ab_cd_domain):
        names = ["seq_pi1.seq", "seq_pi2.seq", "seq_pi3.seq"]
        totals = [Cost(4), Cost(5), Cost(Fraction(11, 2))]
        for name, fixture, total in zip(names, running_pair, totals):
            seq = parse_sequence(load(name))
            assert seq == fixture
            assert seq.total == total
            validate_sequence(seq, ab_cd_domain)

    def test_seven_step_golden(self, digits):
        seq = parse_sequence(load("seq_seven.seq"))
        rep = validate_sequence(seq, digits)
        assert rep.declared_total == Cost(3)
        assert format_tree(rep.target) == "1.(1+2+4+5)"

    def test_round_trip_on_goldens(self):
        for name in ["seq_pi1.seq", "seq_pi2.seq", "seq_pi3.seq",
                     "seq_seven.seq"]:
            seq = parse_sequence(load(name))
            assert parse_sequence(format_sequence(seq)) == seq
            assert format_sequence(parse_sequence(format_sequence(seq))) \
                == format_sequence(seq)

    def test_spaced_at_sign(self):
        a = parse_sequence("alpha 1\nsource a+a\ndup @ 1\ndrop @ 0 1\n")
        b = parse_sequence("alpha 1\nsource a+a\ndup @1\ndrop @0 1\n")
        assert a == b

    def test_headers_from_keywords(self, half):
        src = parse_tree("a+a")
        seq = parse_sequence("dup @0\n", alpha=half, source=src)
        assert seq.alpha == half and seq.source == src
        # matching headers are fine, disagreeing ones are not
        parse_sequence("alpha 1/2\ndup @0\n", alpha=half, source=src)
        with pytest.raises(FormatError) as err:
            parse_sequence("alpha 1/3\ndup @0\n", alpha=half, source=src)
        assert "disagrees" in str(err.value)
        with pytest.raises(FormatError):
            parse_sequence("source b\ndup @0\n", alpha=half, source=src)

    @pytest.mark.parametrize("text,line", [
        ("source a\ndup @0\n", None),          # no alpha anywhere
        ("alpha 1\ndup @0\n", None),           # no source anywhere
        ("alpha 1\nalpha 1\nsource a\n", 2),
        ("alpha 1\nsource a\nwarp @0\n", 3),
        ("alpha 1\nsource a\ndup @0 extra\n", 3),
        ("alpha 1\nsource a\ndup @x\n", 3),
        ("alpha 1\nsource a\ndup @-1\n", 3),
        ("alpha 1\nsource a\nrelabel @0 a b\n", 3),
        ("alpha 1\nsource a\ndrop @0 x\n", 3),
        ("alpha 1\nsource a\ndup 0\n", 3),
        ("alpha 2\nsource a\n", 1),
        ("alpha 1\nsource a..b\n", 2),
    ])
    def test_bad_files(self, text, line):
        with pytest.raises(FormatError) as err:
            parse_sequence(text)
        assert err.value.line == line

    def test_random_round_trips(self, half):
        rng = random.Random(31)
        for _ in range(50):
            dom = rand_metric(rng, rng.randint(2, 5))
            src = rand_tree(rng, dom.actions, 3, 3)
            seq = rand_steps(rng, src, half, dom, rng.randint(0, 6),
                             pad_costs=rng.random() < 0.5)
            assert parse_sequence(format_sequence(seq)) == seq


class TestCcdFiles:
    def test_counter_golden(self, counter_trees):
        t, tp, _ = counter_trees
        cert = parse_ccd(load("cert_counter.ccd"))
        assert len(cert) == 1
        assert cert.triples[0].bound == Cost(2)
        assert tree_equal(cert.triples[0].left, t)
        assert tree_equal(cert.triples[0].right, tp)
        report = verify_ccd(cert)
        assert report.ok and report.verdicts[0].total == Cost(2)

    def test_chain_golden(self, chain_loop_pair):
        cert = parse_ccd(load("cert_chain.ccd"))
        assert verify_ccd(cert).ok
        assert tree_equal(cert.triples[0].left, chain_loop_pair[0])
        assert cert.witnesses[0][1].kind == "co"
        assert cert.witnesses[0][1].cite == 0

    def test_round_trip_on_goldens(self):
        for name in ["cert_counter.ccd", "cert_chain.ccd"]:
            cert = parse_ccd(load(name))
            text = format_ccd(cert)
            again = parse_ccd(text)
            assert verify_ccd(again).ok
            assert format_ccd(again) == text

    def test_finite_trees_print_as_terms(self, half, ab_cd_domain):
        seq = parse_sequence(load("seq_pi2.seq"))
        cert = fold_sequence(seq, ab_cd_domain)
        text = format_ccd(cert)
        assert "tree T0 a.c+a.d" in text
        assert not any(line.startswith("lts ") for line in text.splitlines())
        again = parse_ccd(text)
        rep = verify_ccd(again)
        assert rep.ok
        assert again.triples[0].bound == cert.triples[0].bound

    @pytest.mark.parametrize("text,line", [
        ("alpha 1/2\nmetric a b 1\ntriple 0 L R 2\nend\n", 3),
        ("alpha 1/2\nalpha 1/2\n", 2),
        ("alpha 1/2\nlts L\nroot x\n", None),
        ("alpha 1/2\ntree T a\ntree T a\n", 3),
        ("alpha 1/2\ntree T a\ntriple 1 T T 0\nend\n", 3),
        ("alpha 1/2\ntree T a\ntriple 0 T T 0\nco @0 0 1\nend\n", 4),
        ("alpha 1/2\ntree T a\ntriple 0 T T 0\nrelabel @0.1 a b 1\nend\n", 4),
        ("alpha 1/2\ntree T a\ntriple 0 T T inf\nend\n", 3),
        ("alpha 1/2\nfrobnicate\n", 2),
        ("alpha 1/2\ntree T a\ntriple 0 T T 0\nend trailing\n", 4),
    ])
    def test_bad_files(self, text, line):
        with pytest.raises(FormatError) as err:
            parse_ccd(text)
        assert err.value.line == line

    def test_no_alpha_or_no_triples(self):
        with pytest.raises(FormatError) as err:
            parse_ccd("tree T a\ntriple 0 T T 0\nend\n")
        assert "alpha" in str(err.value)
        with pytest.raises(FormatError) as err:
            parse_ccd("alpha 1/2\ntree T a\n")
        assert "triple" in str(err.value)

    def test_random_fold_round_trips(self, half):
        rng = random.Random(5)
        for _ in range(25):
            dom = rand_metric(rng, rng.randint(2, 4))
            src = rand_tree(rng, dom.actions, 3, 3)
            seq = rand_steps(rng, src, half, dom, rng.randint(0, 6),
                             pad_costs=rng.random() < 0.5)
            cert = fold_sequence(seq, dom)
            text = format_ccd(cert)
            again = parse_ccd(text)
            assert verify_ccd(again).ok
            assert len(again) == len(cert)
            for a, b in zip(again.triples, cert.triples):
                assert a.bound == b.bound
                assert tree_equal(a.left, b.left)
                assert tree_equal(a.right, b.right)
            assert again.witnesses == cert.witnesses
            assert format_ccd(again) == text


class TestTelescopicFiles:
    def test_chain_golden(self, chain_loop_pair):
        fam = parse_telescopic(load("telescopic_chain.tel"))
        assert fam.horizon == 3
        assert check_telescopic(fam).ok
        assert tree_equal(fam.source, chain_loop_pair[0])
        totals = [fam.stage(n).total for n in (1, 2, 3)]
        assert totals == [Cost(1), Cost(Fraction(3, 2)), Cost(Fraction(7, 4))]

    def test_limit_assembles_from_golden(self, chain_loop_pair):
        fam = parse_telescopic(load("telescopic_chain.tel"))
        claim = DistanceTriple(fam.source, fam.target, Cost(2))
        cert = assemble_limit(fam, (), claims=(claim,))
        assert cert.triples[0].bound == Cost(2)
        assert verify_ccd(cert).ok

    def test_round_trip(self):
        fam = parse_telescopic(load("telescopic_chain.tel"))
        text = format_telescopic(fam)
        again = parse_telescopic(text)
        assert check_telescopic(again).ok
        assert again.horizon == fam.horizon
        for n in range(1, fam.horizon + 1):
            assert again.stage(n) == fam.stage(n)
        assert format_telescopic(again) == text

    @pytest.mark.parametrize("text,line", [
        ("alpha 1\ntree T a\nsource T\ntarget T\nstage 2\nend\n", 5),
        ("alpha 1\ntree T a\nsource T\nsource T\n", 4),
        ("alpha 1\ntree T a\nsource Q\n", 3),
        ("alpha 1\ntree T a\nsource T\ntarget T\nstage 1\nwarp @0\nend\n", 6),
    ])
    def test_bad_files(self, text, line):
        with pytest.raises(FormatError) as err:
            parse_telescopic(text)
        assert err.value.line == line

    def test_missing_parts(self):
        base = "alpha 1\ntree T a\n"
        for missing, text in [
            ("source", base + "target T\nstage 1\nend\n"),
            ("target", base + "source T\nstage 1\nend\n"),
            ("stage", base + "source T\ntarget T\n"),
        ]:
            with pytest.raises(FormatError) as err:
                parse_telescopic(text)
            assert missing in str(err.value)


@given(st.text(max_size=300))
@settings(max_examples=120, deadline=None)
def test_parsers_never_crash(text):
    for parser in (parse_tree, parse_metric, parse_lts, parse_sequence,
                   parse_ccd, parse_telescopic):
        try:
            parser(text)
        except FormatError:
            pass


@given(st.text(alphabet="ab01 .+()@\n/#-><", max_size=120))
@settings(max_examples=120, deadline=None)
def test_parsers_never_crash_on_grammar_like_text(text):
    for parser in (parse_tree, parse_metric, parse_lts, parse_sequence,
                   parse_ccd, parse_telescopic):
        try:
            parser(text)
        except FormatError:
            pass
