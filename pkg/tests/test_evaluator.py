"""The lax team-semantics evaluator, in all three modes."""

import itertools

from hypothesis import given
from hypothesis import strategies as st

import pytest

from teamsem import Model, Relation, Team, evaluate, parse, sentence_true
from teamsem.atoms import DEFAULT_REGISTRY
from teamsem.evaluator import Evaluator, MODES, upward_fragment
from teamsem.model import EvalError, SINGLETON_EMPTY_TEAM, tarski_eval
from teamsem.syntax import free_variables
from teamsem.translator import desugar_possibility


def team(vars, *rows):
    return Team(tuple(vars), frozenset(tuple(r) for r in rows))


def all_teams(model, vars, max_rows):
    pool = list(itertools.product(model.domain, repeat=len(vars)))
    for size in range(min(max_rows, len(pool)) + 1):
        for combo in itertools.combinations(pool, size):
            yield Team(tuple(vars), frozenset(combo))


# --- sentences ----------------------------------------------------------------


def test_two_elements_force_an_unequal_pair(m2, m3):
    phi = parse("E x. E y. x != y")
    for m in (m2, m3):
        assert sentence_true(m, phi)


def test_sentence_examples(m2):
    assert sentence_true(m2, parse("E x. P(x)"))
    assert not sentence_true(m2, parse("A x. P(x)"))
    assert sentence_true(m2, parse("NE"))  # the singleton empty team is nonempty
    assert sentence_true(m2, parse("A x. total(x)"))


def test_sentence_true_rejects_free_variables(m2):
    with pytest.raises(EvalError):
        sentence_true(m2, parse("P(x)"))


# --- the empty team and degenerate teams ----------------------------------------


def test_empty_team_satisfies_all_first_order(m2):
    empty = Team(("x",), frozenset())
    for text in ["P(x)", "!P(x)", "x != x", "F", "A y. P(y)", "E y. x = y"]:
        assert evaluate(m2, empty, parse(text))


def test_empty_team_atoms(m2):
    empty = Team(("x", "y"), frozenset())
    assert not evaluate(m2, empty, parse("NE"))
    assert evaluate(m2, empty, parse("dep(x; y)"))
    assert evaluate(m2, empty, parse("const(x)"))
    assert not evaluate(m2, empty, parse("inconst(x)"))
    assert not evaluate(m2, empty, parse("poss(T)"))  # no nonempty subteam


def test_empty_team_differs_from_singleton_empty(m2):
    assert evaluate(m2, SINGLETON_EMPTY_TEAM, parse("NE"))
    assert not evaluate(m2, Team((), frozenset()), parse("NE"))


# --- frozen verdicts -------------------------------------------------------------


@pytest.mark.parametrize("mode", MODES)
def test_inclusion_with_reversed_noninclusion(mode, m2_bare):
    # X(x) = {a,b}, X(y) = {a}: inclusion of x in y already fails, and
    # {a} is included in {a,b} so its non-inclusion fails too.
    X = team("xy", ("a", "a"), ("b", "a"))
    assert not evaluate(m2_bare, X, parse("incl(x; y)"), mode=mode)
    assert not evaluate(m2_bare, X, parse("nonincl(y; x)"), mode=mode)
    assert not evaluate(
        m2_bare, X, parse("incl(x; y) /\\ nonincl(y; x)"), mode=mode
    )


@pytest.mark.parametrize("mode", MODES)
def test_disjunction_splits_the_team(mode, m2):
    # Neither disjunct holds on the whole team, but the split works.
    X = team("x", ("a",), ("b",))
    assert evaluate(m2, X, parse("P(x) \\/ !P(x)"), mode=mode)
    assert not evaluate(m2, X, parse("P(x)"), mode=mode)
    assert not evaluate(m2, X, parse("dep(x; x) /\\ P(x)"), mode=mode)


@pytest.mark.parametrize("mode", MODES)
def test_existential_uses_nonempty_value_sets(mode, m2):
    X = team("x", ("a",), ("b",))
    assert evaluate(m2, X, parse("E y. P(y)"), mode=mode)
    assert evaluate(m2, X, parse("E y. dep(x; y)"), mode=mode)
    assert not evaluate(m2, X, parse("E y. y != x /\\ P(y)"), mode=mode)


def test_possibility_direct_rule(m2):
    X = team("x", ("a",), ("b",))
    assert evaluate(m2, X, parse("poss(P(x))"))
    assert not evaluate(m2, team("x", ("b",)), parse("poss(P(x))"))
    # A possible subteam may be strict: total(x) needs both rows.
    assert evaluate(m2, X, parse("poss(total(x))"))


def test_restriction_direct_rule(m2):
    X = team("x", ("a",), ("b",))
    assert evaluate(m2, X, parse("restrict(NE ; P(x))"))
    assert not evaluate(m2, team("x", ("b",)), parse("restrict(NE ; P(x))"))
    assert evaluate(m2, X, parse("restrict(dep(x; x) ; P(x))"))


# --- flatness ---------------------------------------------------------------------


_fo_corpus = [
    "P(x)",
    "!P(x) \\/ x = y",
    "P(x) /\\ (P(y) \\/ x != y)",
    "E z. z != x /\\ z != y",
    "A z. z = x \\/ z = y \\/ !P(z)",
]


@given(
    st.sampled_from(_fo_corpus),
    st.sets(st.tuples(st.sampled_from("ab"), st.sampled_from("ab")), max_size=4),
)
def test_first_order_formulas_are_flat(text, rows):
    m = Model(("a", "b"), {"P": Relation(1, frozenset({("a",)}))}, {})
    X = Team(("x", "y"), frozenset(rows))
    phi = parse(text)
    pointwise = all(tarski_eval(m, s, phi) for s in X.assignments())
    for mode in MODES:
        assert evaluate(m, X, phi, mode=mode) == pointwise


# --- mode agreement -----------------------------------------------------------------


_mixed_corpus = [
    "NE \\/ P(x)",
    "dep(x; y) \\/ dep(y; x)",
    "incl(x; y) /\\ nonincl(y; x)",
    "E z. dep(z; x) /\\ inconst(y)",
    "A z. incl(z; x) \\/ NE",
    "poss(P(x) /\\ NE)",
    "restrict(inconst(x) ; P(x))",
    "E z. const(z) /\\ nonexcl(x; z)",
    "total(x) \\/ total(y)",
    "big(2; x) /\\ excl(x; y)",
    "indep(x; y) \\/ noncindep(x; y | x)",
]


@pytest.mark.parametrize("text", _mixed_corpus)
def test_three_modes_agree(text, m2):
    phi = parse(text)
    for X in all_teams(m2, ("x", "y"), 3):
        verdicts = {mode: evaluate(m2, X, phi, mode=mode) for mode in MODES}
        assert len(set(verdicts.values())) == 1, (text, sorted(X.rows), verdicts)


def test_possibility_desugar_equivalence(m2):
    for text in ["P(x)", "NE", "dep(x; y)", "P(x) /\\ inconst(y)"]:
        phi = parse(f"poss({text})")
        expanded = desugar_possibility(phi)
        for X in all_teams(m2, ("x", "y"), 3):
            assert evaluate(m2, X, phi) == evaluate(m2, X, expanded), (
                text,
                sorted(X.rows),
            )


# --- downwards closure of the dependence fragment -------------------------------------


@given(st.sets(st.tuples(st.sampled_from("ab"), st.sampled_from("ab")), max_size=4))
def test_dependence_fragment_downwards_closed(rows):
    m = Model(("a", "b"), {"P": Relation(1, frozenset({("a",)}))}, {})
    X = Team(("x", "y"), frozenset(rows))
    for text in ["dep(x; y)", "const(x) \\/ dep(y; x)", "E z. dep(x; z) /\\ P(z)"]:
        phi = parse(text)
        if evaluate(m, X, phi):
            for size in range(len(rows)):
                for sub in itertools.combinations(rows, size):
                    assert evaluate(m, Team(("x", "y"), frozenset(sub)), phi)


# --- statistics and witnesses ------------------------------------------------------------


def test_stats_literal_explores_no_covers(m2):
    ev = Evaluator(m2)
    ok, stats = ev.evaluate_with_stats(parse("P(x)"), team("x", ("a",)))
    assert ok
    assert stats["covers"] == 0
    assert stats["tarski_rows"] >= 1


@pytest.mark.parametrize("mode", MODES)
def test_stats_disjunction_cover_bound(mode, m2):
    ev = Evaluator(m2, mode=mode)
    ok, stats = ev.evaluate_with_stats(parse("T \\/ T"), team("x", ("a",), ("b",)))
    assert ok
    assert stats["covers"] <= 9  # 3^2 ordered covers of a 2-row team


def test_stats_agree_with_plain_eval(m2):
    for text in _mixed_corpus[:4]:
        phi = parse(text)
        X = team("xy", ("a", "a"), ("b", "a"))
        ok, _ = Evaluator(m2).evaluate_with_stats(phi, X)
        assert ok == evaluate(m2, X, phi)


def test_witness_kinds(m2):
    ev = Evaluator(m2)
    X = team("x", ("a",), ("b",))
    assert ev.witness(parse("P(x)"), team("x", ("a",)))["kind"] == "holds"
    assert ev.witness(parse("NE \\/ P(x)"), X)["kind"] == "split"
    assert ev.witness(parse("E y. P(y)"), X)["kind"] == "choice"
    assert ev.witness(parse("poss(P(x))"), X)["kind"] == "subteam"
    assert ev.witness(parse("F"), X) is None


def test_witness_split_parts_cover_team(m2):
    X = team("x", ("a",), ("b",))
    wit = Evaluator(m2).witness(parse("P(x) \\/ !P(x)"), X)
    rows = {tuple(r) for r in wit["left"]} | {tuple(r) for r in wit["right"]}
    assert rows == X.rows


# --- fast-mode gate ------------------------------------------------------------------------


def test_upward_fragment_gate():
    reg = DEFAULT_REGISTRY
    assert upward_fragment(parse("NE /\\ total(x)"), reg)
    assert upward_fragment(parse("E y. inconst(y) \\/ P(x)"), reg)
    assert not upward_fragment(parse("dep(x; y)"), reg)
    assert not upward_fragment(parse("NE /\\ incl(x; y)"), reg)
    # Possibility passes as a unit regardless of its body.
    assert upward_fragment(parse("poss(dep(x; y))"), reg)
    # Restriction is judged by its body alone.
    assert upward_fragment(parse("restrict(NE ; P(x))"), reg)
    assert not upward_fragment(parse("restrict(dep(x; y) ; P(x))"), reg)


# --- errors ----------------------------------------------------------------------------------


def test_eval_errors(m2):
    with pytest.raises(EvalError):
        evaluate(m2, team("x", ("a",)), parse("P(y)"))  # y not in the team
    with pytest.raises(EvalError):
        evaluate(m2, team("x", ("a",)), parse("Q(x)"))  # unknown relation
    with pytest.raises(ValueError):
        evaluate(m2, team("x", ("a",)), parse("P(x)"), mode="psychic")


def test_memoization_is_stable(m2):
    ev = Evaluator(m2)
    phi = parse("NE \\/ dep(x; y)")
    X = team("xy", ("a", "a"), ("b", "a"))
    first = ev.evaluate(phi, X)
    assert ev.evaluate(phi, X) == first == evaluate(m2, X, phi, mode="naive")
