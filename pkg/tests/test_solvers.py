import itertools
import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracle
from mbcg.analysis import example_game
from mbcg.model import (
    CongestionGame,
    LatencyFunction,
    PureProfile,
    TabulatedLatency,
    cg_social_cost,
    is_pure_bne,
    is_pure_ne,
    rosenthal_potential,
    uniform_game,
)
from mbcg.solvers import (
    EXHAUSTIVE,
    PRUNED,
    BudgetExceeded,
    SymmetricSingletonSpec,
    default_budget,
    enumerate_pure_bne,
    find_pure_bne,
    optimum,
    pure_nash_equilibria,
    rosenthal_best_response,
    symmetric_singleton_construct,
    symmetric_singleton_exists,
    worst_pure_ne,
)

LIN = LatencyFunction(1, 0)


def split_game():
    S = (("e1",), ("e2",))
    return CongestionGame(("e1", "e2"), (LIN, LIN), (S, S))


# ------------------------------------------------------------------- search


def test_windfall_game_has_unique_bne():
    g = example_game(3, F(1, 10), 1)
    rep = enumerate_pure_bne(g)
    assert rep.space_size == 729
    assert rep.equilibria == (PureProfile((0, 0, 0), (2, 2, 2)),)
    first = find_pure_bne(g)
    assert first.exists and first.witness == rep.equilibria[0]
    assert first.status == "exists"


def test_symmetric_negative_case():
    rep = find_pure_bne(SymmetricSingletonSpec(3, 3, F(3, 4)).game())
    assert rep.exists is False and rep.witness is None and rep.status == "none"


def test_single_strategy_players():
    g = uniform_game(["e1", "e2"], [LIN, LIN], [[["e1"]], [["e2"]]], F(1, 2))
    rep = find_pure_bne(g)
    assert rep.exists and rep.witness == PureProfile((0, 0), (0, 0))


def test_budget_gives_undecided():
    g = example_game(3, F(1, 10), 1)
    rep = find_pure_bne(g, budget=10)
    assert rep.undecided and rep.exists is None and rep.status == "undecided (budget)"


def test_budget_from_environment(monkeypatch):
    monkeypatch.setenv("MBCG_BUDGET", "5")
    assert default_budget() == 5
    assert find_pure_bne(example_game(3, F(1, 10), 1)).undecided


def test_witness_is_first_in_canonical_order():
    g = example_game(3, 0, 1)
    rep = enumerate_pure_bne(g)
    order = [PureProfile(s, m) for s, m in oracle.profiles(g)]
    assert list(rep.equilibria) == [prof for prof in order if is_pure_bne(g, prof)[0]]
    assert find_pure_bne(g).witness == rep.equilibria[0]


def test_pruned_mode_reports_pruning():
    g = example_game(4, F(1, 4), 2)
    ex, pr = find_pure_bne(g, EXHAUSTIVE), find_pure_bne(g, PRUNED)
    assert ex.exists == pr.exists
    assert pr.pruned > 0 and ex.pruned == 0
    assert is_pure_bne(g, pr.witness)[0]


def test_unknown_mode():
    with pytest.raises(ValueError):
        find_pure_bne(example_game(3, F(1, 10), 1), "magic")


def test_non_affine_latency_falls_back_to_scalar_scan():
    spec = SymmetricSingletonSpec(3, 2, F(1, 4), TabulatedLatency((1, 3, 4)))
    rep = enumerate_pure_bne(spec.game())
    assert rep.exists
    assert all(is_pure_bne(spec.game(), prof)[0] for prof in rep.equilibria)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_pruned_and_exhaustive_agree(seed):
    g = oracle.random_game(random.Random(seed))
    ex, pr = find_pure_bne(g, EXHAUSTIVE), find_pure_bne(g, PRUNED)
    assert ex.exists == pr.exists
    if pr.exists:
        assert is_pure_bne(g, pr.witness)[0]


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_enumeration_matches_oracle(seed):
    g = oracle.random_game(random.Random(seed))
    want = [PureProfile(s, m) for s, m in oracle.profiles(g) if oracle.first_violation(g, s, m) is None]
    assert list(enumerate_pure_bne(g).equilibria) == want


# ----------------------------------------------------- plain congestion games


@pytest.mark.parametrize("n,alpha", [(3, 1), (4, 2), (5, F(5, 2))])
def test_optimum_of_ring_game(n, alpha):
    s, val = optimum(example_game(n, 0, alpha).base)
    assert s == (0,) * n and val == 1 + alpha


def test_optimum_small_games():
    one = CongestionGame(("e1", "e2"), (LIN, LIN), (((("e1",),)), ((("e1",),))))
    assert optimum(one) == ((0, 0), 2)
    assert optimum(split_game()) == ((0, 1), 1)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_optimum_is_minimal(seed):
    base = oracle.random_game(random.Random(seed)).base
    _, val = optimum(base)
    S = base.strategy_sets
    costs = [cg_social_cost(base, s) for s in itertools.product(*(range(len(x)) for x in S))]
    assert val == min(costs)


def test_optimum_budget():
    with pytest.raises(BudgetExceeded):
        optimum(example_game(5, 0, 1).base, budget=10)


def test_worst_pure_ne():
    assert worst_pure_ne(example_game(3, 0, 1).base) == ((1, 1, 1), 5)
    assert worst_pure_ne(split_game()) == ((0, 1), 1)
    assert pure_nash_equilibria(split_game()) == [(0, 1), (1, 0)]


def test_rosenthal_from_all_s3():
    base = example_game(3, 0, 1).base
    trace = []
    end = rosenthal_best_response(base, (2, 2, 2), trace)
    assert is_pure_ne(base, end)[0]
    phis = [rosenthal_potential(base, (2, 2, 2))] + [phi for _, phi in trace]
    assert all(a > b for a, b in zip(phis, phis[1:]))


def test_rosenthal_fixed_point():
    base = example_game(3, 0, 1).base
    trace = []
    assert rosenthal_best_response(base, (0, 0, 0), trace) == (0, 0, 0)
    assert trace == []


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.data())
def test_rosenthal_reaches_equilibrium(seed, data):
    base = oracle.random_game(random.Random(seed)).base
    start = tuple(data.draw(st.integers(0, len(S) - 1)) for S in base.strategy_sets)
    assert is_pure_ne(base, rosenthal_best_response(base, start))[0]


# ------------------------------------------------- symmetric singleton games


@pytest.mark.parametrize(
    "n,r,p,want",
    [
        (5, 2, F(3, 10), True),
        (6, 3, F(1, 2), True),
        (7, 3, F(1, 4), False),
        (3, 3, F(3, 4), False),
        (4, 3, F(1, 2), False),
        (5, 3, 0, True),
    ],
)
def test_symmetric_predicate(n, r, p, want):
    assert symmetric_singleton_exists(SymmetricSingletonSpec(n, r, p)) is want


def test_construct_two_resources():
    prof = symmetric_singleton_construct(SymmetricSingletonSpec(4, 2, F(1, 4)))
    assert prof == PureProfile((0, 1, 0, 1), (1, 0, 1, 0))


def test_construct_divisible():
    spec = SymmetricSingletonSpec(6, 3, F(1, 2))
    prof = symmetric_singleton_construct(spec)
    assert prof.selfish == (0, 0, 1, 1, 2, 2)
    assert all(prof.selfish.count(k) == 2 and prof.malicious.count(k) == 2 for k in range(3))
    assert all(s != m for s, m in zip(prof.selfish, prof.malicious))


def test_construct_p_zero_is_plain_equilibrium():
    spec = SymmetricSingletonSpec(2, 2, 0)
    prof = symmetric_singleton_construct(spec)
    assert prof.selfish == (0, 1)
    assert is_pure_ne(spec.game().base, prof.selfish)[0]


def test_construct_refuses_when_none_exists():
    with pytest.raises(ValueError):
        symmetric_singleton_construct(SymmetricSingletonSpec(7, 3, F(1, 4)))


def test_spec_validation():
    with pytest.raises(ValueError):
        SymmetricSingletonSpec(1, 2, 0)
    with pytest.raises(ValueError):
        SymmetricSingletonSpec(3, 2, F(3, 2))


@settings(max_examples=40, deadline=None)
@given(
    st.integers(2, 12),
    st.integers(2, 5),
    st.sampled_from([0, F(1, 10), F(1, 4), F(1, 3), F(1, 2)]),
)
def test_construction_always_verifies(n, r, p):
    spec = SymmetricSingletonSpec(n, r, p)
    if symmetric_singleton_exists(spec):
        assert is_pure_bne(spec.game(), symmetric_singleton_construct(spec, verify=False))[0]
