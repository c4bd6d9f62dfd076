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
    MaliciousGame,
    PureProfile,
    TabulatedLatency,
    cg_private_cost,
    cg_social_cost,
    is_malicious_satisfied,
    is_pure_bne,
    is_pure_ne,
    is_selfish_satisfied,
    malicious_load,
    private_cost,
    rosenthal_potential,
    selfish_load,
    social_cost_bayes,
    strip_malice,
    uniform_game,
    validate_game,
    validate_profile,
    with_probabilities,
)

LIN = LatencyFunction(1, 0)


def two_player(p=(F(1, 2), F(1, 2))):
    return uniform_game(["e1", "e2"], [LIN, LIN], [[["e1"], ["e2"]], [["e1"], ["e2"]]], list(p))


ALL_S1_S3 = PureProfile((0, 0, 0), (2, 2, 2))


# ------------------------------------------------------------------ validation


def test_valid_game_has_no_violations():
    assert validate_game(two_player()) == []


def test_probability_out_of_range():
    bad = validate_game(two_player((F(3, 2), F(0))))
    assert [str(v) for v in bad] == ["probability out of range: player u1"]


def test_unknown_resource():
    g = uniform_game(["e1", "e2"], [LIN, LIN], [[["e1"]], [["e9"]]], 0)
    assert [v.kind for v in validate_game(g)] == ["unknown resource"]


def test_structural_violations():
    g = uniform_game(["e1"], [LIN], [[["e1", "e1"], []]], 0)
    kinds = {v.kind for v in validate_game(g)}
    assert {"too few players", "too few resources", "duplicate resource in strategy", "empty strategy"} <= kinds


def test_validate_profile_index_out_of_range():
    bad = validate_profile(two_player(), PureProfile((0, 2), (0, 0)))
    assert len(bad) == 1 and bad[0].kind == "strategy index out of range"


def test_floats_rejected():
    with pytest.raises(TypeError):
        LatencyFunction(0.5, 0)


# ----------------------------------------------------------------------- loads


def test_selfish_load():
    g = two_player()
    prof = PureProfile((0, 0), (1, 1))
    assert selfish_load(g, prof, "e1") == 1
    assert selfish_load(g, prof, "e1", exclude=0) == F(1, 2)
    assert selfish_load(g, prof, "e2") == 0


def test_malicious_load():
    g = example_game(3, F(1, 10), 1)
    prof = ALL_S1_S3
    assert malicious_load(g, prof, "h1") == F(3, 10)
    assert malicious_load(g, prof, "h1", exclude=0) == F(1, 5)
    zero = with_probabilities(g, (0, 0, 0))
    assert all(malicious_load(zero, prof, e) == 0 for e in g.base.resources)


def test_unknown_resource_load_raises():
    with pytest.raises(KeyError):
        selfish_load(two_player(), PureProfile((0, 0), (0, 0)), "zz")


# ----------------------------------------------------------------------- costs


def test_private_cost_two_player():
    g = two_player()
    prof = PureProfile((0, 0), (1, 1))
    assert private_cost(g, prof, 0) == F(3, 2)
    assert social_cost_bayes(g, prof) == F(3, 2)


@pytest.mark.parametrize("p", [F(1, 10), F(1, 4), F(1, 2)])
def test_windfall_profile_costs(p):
    g = example_game(3, p, 1)
    assert all(private_cost(g, ALL_S1_S3, u) == 2 + 4 * p for u in range(3))
    assert social_cost_bayes(g, ALL_S1_S3) == 2 + 4 * p


def test_private_cost_degenerates_at_p_zero():
    g = example_game(3, 0, 1)
    prof = PureProfile((1, 0, 2), (2, 1, 0))
    for u in range(3):
        assert private_cost(g, prof, u) == cg_private_cost(g.base, prof.selfish, u)


def test_plain_costs():
    base = example_game(3, 0, 1).base
    assert [cg_private_cost(base, (1, 1, 1), u) for u in range(3)] == [5, 5, 5]
    assert cg_social_cost(base, (1, 1, 1)) == 5
    alpha = F(7, 3)
    opt = example_game(3, 0, alpha).base
    assert cg_private_cost(opt, (0, 0, 0), 1) == 1 + alpha
    assert cg_social_cost(opt, (0, 0, 0)) == 1 + alpha


def test_single_resource_costs():
    g = CongestionGame(("e1", "e2"), (LatencyFunction(3, 1), LIN), ((("e1",),), (("e2",),)))
    assert cg_private_cost(g, (0, 0), 0) == 4
    assert cg_social_cost(g, (0, 0)) == F(5, 2)


def test_social_cost_undefined_when_all_malicious():
    with pytest.raises(ZeroDivisionError):
        social_cost_bayes(two_player((1, 1)), PureProfile((0, 0), (0, 0)))


def test_strip_malice():
    g = example_game(4, F(1, 4), 2)
    assert strip_malice(g).resources == g.base.resources
    assert strip_malice(with_probabilities(strip_malice(g), (0,) * 4)) == strip_malice(g)
    s = (0, 1, 2, 1)
    assert cg_social_cost(strip_malice(g), s) == social_cost_bayes(
        with_probabilities(g, (0,) * 4), PureProfile(s, (0,) * 4)
    )


def test_tabulated_latency_interpolates():
    f = TabulatedLatency((1, 3, 4))
    assert [f(1), f(2), f(3), f(F(3, 2)), f(4)] == [1, 3, 4, 2, 5]


# ---------------------------------------------------------------- satisfaction


def test_windfall_profile_is_bne():
    g = example_game(3, F(1, 10), 1)
    assert all(is_selfish_satisfied(g, ALL_S1_S3, u) == (True, None) for u in range(3))
    assert is_pure_bne(g, ALL_S1_S3) == (True, None)


def test_selfish_deviation_witness():
    g = example_game(3, F(1, 10), 1)
    prof = ALL_S1_S3.with_selfish(0, 1)
    assert is_selfish_satisfied(g, prof, 0) == (False, 0)
    ok, dev = is_pure_bne(g, prof)
    assert not ok and tuple(dev) == (0, "selfish", 0)


def test_malicious_deviation_witness():
    g = example_game(3, F(1, 4), 1)
    prof = PureProfile((1, 1, 1), (0, 2, 2))
    assert is_malicious_satisfied(g, prof, 0) == (False, 2)
    assert is_malicious_satisfied(g, ALL_S1_S3, 0) == (True, None)


def test_single_strategy_always_satisfied():
    g = uniform_game(["e1", "e2"], [LIN, LIN], [[["e1"]], [["e1"]]], F(1, 3))
    prof = PureProfile((0, 0), (0, 0))
    assert is_selfish_satisfied(g, prof, 0) == (True, None)
    assert is_pure_bne(g, prof)[0]


def test_zero_probability_malicious_always_satisfied():
    g = two_player((0, F(1, 2)))
    assert is_malicious_satisfied(g, PureProfile((0, 1), (0, 0)), 0) == (True, None)


@pytest.mark.parametrize("n,p", [(3, F(1, 10)), (5, F(1, 4)), (6, F(1, 2))])
def test_lower_bound_profile_is_bne(n, p):
    alpha = (1 + (n - 1) * p) / (1 - p)
    g = example_game(n, p, alpha)
    assert is_pure_bne(g, PureProfile((1,) * n, (2,) * n))[0]


def test_plain_equilibria():
    base = example_game(3, 0, 1).base
    assert is_pure_ne(base, (1, 1, 1)) == (True, None)
    assert is_pure_ne(base, (0, 0, 0)) == (True, None)
    g = CongestionGame(("e1", "e2"), (LIN, LIN), (((("e1",), ("e2",))), ((("e1",), ("e2",)))))
    assert is_pure_ne(g, (0, 0)) == (False, (0, 1))


def test_rosenthal_potential_tracks_improvement():
    g = CongestionGame(("e1", "e2"), (LIN, LIN), (((("e1",), ("e2",))), ((("e1",), ("e2",)))))
    assert rosenthal_potential(g, (0, 0)) == 3
    assert rosenthal_potential(g, (1, 0)) == 2


# ------------------------------------------------------------------ properties

games = st.integers(0, 2**32 - 1).map(lambda seed: oracle.random_game(random.Random(seed)))


@st.composite
def game_and_profile(draw):
    g = draw(games)
    S = g.base.strategy_sets
    sel = tuple(draw(st.integers(0, len(s) - 1)) for s in S)
    mal = tuple(draw(st.integers(0, len(s) - 1)) for s in S)
    return g, PureProfile(sel, mal)


@settings(max_examples=150, deadline=None)
@given(game_and_profile(), st.data())
def test_private_cost_ignores_own_malicious_agent(gp, data):
    g, prof = gp
    u = data.draw(st.integers(0, g.n - 1))
    k = data.draw(st.integers(0, len(g.base.strategy_sets[u]) - 1))
    assert private_cost(g, prof, u) == private_cost(g, prof.with_malicious(u, k), u)


@settings(max_examples=150, deadline=None)
@given(game_and_profile())
def test_costs_match_oracle(gp):
    g, prof = gp
    for u in range(g.n):
        assert private_cost(g, prof, u) == oracle.pc(g, prof.selfish, prof.malicious, u)
    assert social_cost_bayes(g, prof) == oracle.sc(g, prof.selfish, prof.malicious)


@settings(max_examples=150, deadline=None)
@given(game_and_profile())
def test_checker_matches_oracle(gp):
    g, prof = gp
    ok, dev = is_pure_bne(g, prof)
    want = oracle.first_violation(g, prof.selfish, prof.malicious)
    assert ok == (want is None)
    assert (dev is None and want is None) or tuple(dev) == want


@settings(max_examples=150, deadline=None)
@given(game_and_profile())
def test_plain_social_cost_is_mean_private_cost(gp):
    g, prof = gp
    s = prof.selfish
    assert cg_social_cost(g.base, s) * g.n == sum(cg_private_cost(g.base, s, u) for u in range(g.n))
    zero = MaliciousGame(g.base, (0,) * g.n)
    assert social_cost_bayes(zero, prof) == cg_social_cost(g.base, s)


@settings(max_examples=150, deadline=None)
@given(game_and_profile())
def test_load_decomposition(gp):
    g, prof = gp
    for e in g.base.resources:
        for u in range(g.n):
            own = g.base.strategy(u, prof.selfish[u])
            assert selfish_load(g, prof, e, exclude=u) + (1 - g.p[u] if e in own else 0) == selfish_load(g, prof, e)
            own = g.base.strategy(u, prof.malicious[u])
            assert malicious_load(g, prof, e, exclude=u) + (g.p[u] if e in own else 0) == malicious_load(g, prof, e)
