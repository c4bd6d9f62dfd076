"""Efficiency of equilibria: the ring instance family, analytic upper bounds,
lower-bound and windfall witnesses, and empirical pure-equilibrium ratios.

Bounds contain a square root and are evaluated in floating point; every
equilibrium and social-cost quantity stays an exact ``Fraction``.  A ratio is
compared with a bound using a one-sided slack of ``TOLERANCE`` in the bound's
favour.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .model import (
    CongestionGame,
    LatencyFunction,
    MaliciousGame,
    PureProfile,
    as_fraction,
    cg_social_cost,
    is_pure_bne,
    social_cost_bayes,
    strip_malice,
)
from .solvers import EXHAUSTIVE, enumerate_pure_bne, optimum, worst_pure_ne

TOLERANCE = 1e-9
POA_AFFINE = Fraction(5, 2)  # price of anarchy of affine congestion games


@dataclass(frozen=True)
class RatioReport:
    """Worst pure-equilibrium social cost over the malice-free optimum.

    ``ratio`` is ``None`` when the game has no pure equilibrium.  ``extra``
    holds named auxiliary values (closed forms, margins) for display.
    """

    descriptor: str
    equilibria: tuple[PureProfile, ...]
    sc_equilibrium: Fraction | None
    sc_optimum: Fraction
    ratio: Fraction | None
    analytic_bound: float | None
    tolerance: float = TOLERANCE
    extra: dict = field(default_factory=dict)

    @property
    def has_equilibrium(self) -> bool:
        return self.ratio is not None

    def within_bound(self) -> bool:
        if self.ratio is None or self.analytic_bound is None:
            return True
        return self.ratio <= self.analytic_bound + self.tolerance


@dataclass(frozen=True)
class WindfallReport:
    """Worst Nash equilibrium without malice against the worst pure Bayesian
    equilibrium with malice."""

    descriptor: str
    worst_ne: tuple[int, ...]
    sc_worst_ne: Fraction
    equilibria: tuple[PureProfile, ...]
    sc_bne: Fraction
    wom: Fraction


def _ring(j: int, n: int) -> int:
    """1-based index with wrap-around."""
    return (j - 1) % n + 1


def example_game(n: int, p, alpha) -> MaliciousGame:
    """Ring instance with resources ``g_1..g_n`` (slope ``alpha``) and
    ``h_1..h_n`` (slope 1).

    Player ``u`` may use ``{g_u, h_u}``, ``{g_{u+1}, h_{u+1}, h_{u+2}}`` or
    every resource, indices taken cyclically.  All players share type
    probability ``p``.
    """
    if n < 3:
        raise ValueError("the ring instance needs n >= 3")
    p, alpha = as_fraction(p), as_fraction(alpha)
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    g = [f"g{j}" for j in range(1, n + 1)]
    h = [f"h{j}" for j in range(1, n + 1)]
    every = tuple(g + h)
    sets = []
    for u in range(1, n + 1):
        s1 = (f"g{u}", f"h{u}")
        s2 = (f"g{_ring(u + 1, n)}", f"h{_ring(u + 1, n)}", f"h{_ring(u + 2, n)}")
        sets.append((s1, s2, every))
    latencies = (LatencyFunction(alpha, 0),) * n + (LatencyFunction(1, 0),) * n
    base = CongestionGame(every, latencies, tuple(sets))
    return MaliciousGame(base, (p,) * n)


def pob_upper_bound(n: int, delta, p_min) -> float:
    """Upper bound on the price of Byzantine anarchy for affine latencies,
    ``n/(n-delta) * (1-p_min) * (delta + (3 + sqrt(5 + 4 delta)) / 2)``."""
    delta, p_min = float(delta), float(p_min)
    if not 0 <= delta < n:
        raise ValueError("need 0 <= delta < n")
    if not 0 <= p_min <= 1:
        raise ValueError("need 0 <= p_min <= 1")
    return n / (n - delta) * (1 - p_min) * pob_upper_bound_identical(delta)


def pob_upper_bound_identical(delta) -> float:
    """``delta + (3 + sqrt(5 + 4 delta)) / 2``, the bound for identical type
    probabilities.  Exact whenever ``5 + 4 delta`` is a perfect square."""
    delta = float(delta)
    if delta < 0:
        raise ValueError("delta must be non-negative")
    return delta + (3 + math.sqrt(5 + 4 * delta)) / 2


def pom(delta, pob_at_delta, pob_at_zero) -> float:
    """Price of malice ``PoB(delta) / PoB(0)``."""
    if float(pob_at_zero) <= 0:
        raise ZeroDivisionError("PoB(0) must be positive")
    if float(delta) == 0:
        return 1.0
    return float(pob_at_delta) / float(pob_at_zero)


def pom_upper_bound(delta) -> float:
    """Price of malice implied by the identical-probability bound and the
    affine price of anarchy."""
    return pom(delta, pob_upper_bound_identical(delta), POA_AFFINE)


def lower_bound_alpha(n: int, p) -> Fraction:
    p = as_fraction(p)
    return (1 + (n - 1) * p) / (1 - p)


def lower_bound_witness(n: int, p) -> RatioReport:
    """Ring instance whose pure equilibrium (selfish on the 3-resource
    strategy, malicious on everything) costs more than ``delta + 2 - 3p``
    times the optimum.

    The social cost is computed from the model and compared with its closed
    form; the optimum is the all-``{g_u, h_u}`` profile, evaluated directly.
    """
    p = as_fraction(p)
    if not 0 < p < 1:
        raise ValueError("need 0 < p < 1")
    alpha = lower_bound_alpha(n, p)
    game = example_game(n, p, alpha)
    sigma = PureProfile((1,) * n, (2,) * n)
    ok, dev = is_pure_bne(game, sigma)
    if not ok:
        raise AssertionError(f"witness profile is not a pure BNE: {dev}")
    sc = social_cost_bayes(game, sigma)
    sc_closed = 2 * (1 + (1 - p) + (n - 1) * p) + (1 + (n - 1) * p) * alpha
    opt = cg_social_cost(strip_malice(game), (0,) * n)
    opt_closed = (2 + (n - 2) * p) / (1 - p)
    ratio = sc / opt
    ratio_closed = 2 * (1 - p) + (1 + (n - 1) * p) ** 2 / (2 + (n - 2) * p)
    delta = game.delta
    margin = delta + 2 - 3 * p
    extra = {
        "alpha": alpha,
        "sc_closed_form": sc_closed,
        "opt_closed_form": opt_closed,
        "ratio_closed_form": ratio_closed,
        "delta": delta,
        "delta_plus_2_minus_3p": margin,
    }
    if sc != sc_closed or opt != opt_closed or ratio != ratio_closed:
        raise AssertionError(f"closed forms disagree with the model: {extra}, sc={sc}, opt={opt}")
    if not ratio > margin:
        raise AssertionError(f"ratio {ratio} does not exceed {margin}")
    return RatioReport(
        descriptor=f"ring n={n} p={p} alpha={alpha}",
        equilibria=(sigma,),
        sc_equilibrium=sc,
        sc_optimum=opt,
        ratio=ratio,
        analytic_bound=pob_upper_bound_identical(delta),
        extra=extra,
    )


def wom_witness(p, budget: int | None = None) -> WindfallReport:
    """Three-player ring instance with ``alpha = 1``: malice removes the bad
    equilibrium and leaves a unique, cheaper one."""
    p = as_fraction(p)
    if not 0 < p < 1:
        raise ValueError("need 0 < p < 1")
    game = example_game(3, p, 1)
    worst, sc_worst = worst_pure_ne(strip_malice(game), budget)
    if worst != (1, 1, 1) or sc_worst != 5:
        raise AssertionError(f"unexpected worst Nash equilibrium {worst} with cost {sc_worst}")
    report = enumerate_pure_bne(game, EXHAUSTIVE, budget)
    expected = PureProfile((0, 0, 0), (2, 2, 2))
    if report.equilibria != (expected,):
        raise AssertionError(f"expected a unique pure BNE, found {report.equilibria}")
    sc = social_cost_bayes(game, expected)
    if sc != 2 + 4 * p:
        raise AssertionError(f"equilibrium cost {sc} differs from 2 + 4p")
    return WindfallReport(
        descriptor=f"ring n=3 p={p} alpha=1",
        worst_ne=worst,
        sc_worst_ne=sc_worst,
        equilibria=report.equilibria,
        sc_bne=sc,
        wom=sc_worst / sc,
    )


def empirical_pob(game: MaliciousGame, mode: str = EXHAUSTIVE, budget: int | None = None) -> RatioReport:
    """Worst pure Bayesian equilibrium over the malice-free optimum.

    Only pure equilibria are considered.  Raises ``ValueError`` when every
    player is surely malicious (social cost undefined) and reports an
    undecided search as ``RuntimeError``.
    """
    if game.all_malicious:
        raise ValueError("social cost is undefined when every player is malicious")
    _, opt = optimum(strip_malice(game), budget)
    if len(set(game.p)) == 1:
        bound = pob_upper_bound_identical(game.delta)
    else:
        bound = pob_upper_bound(game.n, game.delta, game.p_min)
    report = enumerate_pure_bne(game, mode, budget)
    if report.undecided:
        raise RuntimeError("profile space exceeds the budget")
    descriptor = f"n={game.n} r={game.base.r} delta={game.delta}"
    if not report.exists:
        return RatioReport(descriptor, (), None, opt, None, bound)
    worst, worst_sc = None, None
    for sigma in report.equilibria:
        sc = social_cost_bayes(game, sigma)
        if worst_sc is None or sc > worst_sc:
            worst, worst_sc = sigma, sc
    return RatioReport(
        descriptor,
        report.equilibria,
        worst_sc,
        opt,
        worst_sc / opt,
        bound,
        extra={"worst": worst},
    )


__all__ = [
    "POA_AFFINE",
    "RatioReport",
    "TOLERANCE",
    "WindfallReport",
    "empirical_pob",
    "example_game",
    "lower_bound_alpha",
    "lower_bound_witness",
    "pob_upper_bound",
    "pob_upper_bound_identical",
    "pom",
    "pom_upper_bound",
    "wom_witness",
]
