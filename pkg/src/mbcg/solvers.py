"""Deciding and constructing pure (Bayesian) Nash equilibria."""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import _engine
from .model import (
    CongestionGame,
    LatencyFunction,
    Latency,
    MaliciousGame,
    PureProfile,
    as_fraction,
    cg_best_responses,
    cg_social_cost,
    is_pure_bne,
    is_pure_ne,
    rosenthal_potential,
)

DEFAULT_BUDGET = 10**8
EXHAUSTIVE = "exhaustive"
PRUNED = "pruned"


def default_budget() -> int:
    env = os.environ.get("MBCG_BUDGET")
    return int(env) if env else DEFAULT_BUDGET


class BudgetExceeded(RuntimeError):
    """The profile space is larger than the allowed budget."""


@dataclass(frozen=True)
class SearchReport:
    """Outcome of a pure-BNE search.

    ``exists`` is ``None`` when the search was not run because the profile
    space exceeded the budget; it is never guessed.
    """

    exists: bool | None
    witness: PureProfile | None
    profiles_scanned: int
    pruned: int
    equilibria: tuple[PureProfile, ...] = field(default=())
    space_size: int = 0

    @property
    def undecided(self) -> bool:
        return self.exists is None

    @property
    def status(self) -> str:
        if self.exists is None:
            return "undecided (budget)"
        return "exists" if self.exists else "none"


def _profile_space(game: MaliciousGame, mode: str, compiled) -> tuple[_engine.Space, int]:
    full = _engine.full_space(game)
    if mode == EXHAUSTIVE or compiled is None:
        return full, 0
    if mode != PRUNED:
        raise ValueError(f"unknown search mode {mode!r}")
    reduced = _engine.prune(compiled, full)
    return reduced, full.size - reduced.size


def _scan(game: MaliciousGame, mode: str, budget: int | None, collect: bool) -> SearchReport:
    budget = default_budget() if budget is None else budget
    compiled = _engine.compile_game(game)
    space, pruned = _profile_space(game, mode, compiled)
    if space.size > budget:
        return SearchReport(None, None, 0, pruned, space_size=space.size)

    found: list[PureProfile] = []
    scanned = 0
    if compiled is not None:
        for block in _engine.iter_blocks(compiled, space):
            hits = _engine.equilibrium_filter(compiled, block)
            if len(hits) and not collect:
                first = int(hits[0])
                scanned = block.offset + first + 1
                found.append(PureProfile(*space.decode(block.offset + first)))
                break
            found.extend(PureProfile(*space.decode(block.offset + int(h))) for h in hits)
            scanned = block.offset + block.size
    else:
        for i in range(space.size):
            prof = PureProfile(*space.decode(i))
            scanned = i + 1
            if is_pure_bne(game, prof)[0]:
                found.append(prof)
                if not collect:
                    break
    return SearchReport(
        exists=bool(found),
        witness=found[0] if found else None,
        profiles_scanned=scanned,
        pruned=pruned,
        equilibria=tuple(found) if collect else (),
        space_size=space.size,
    )


def find_pure_bne(
    game: MaliciousGame, mode: str = EXHAUSTIVE, budget: int | None = None
) -> SearchReport:
    """First pure Bayesian Nash equilibrium in canonical profile order.

    ``exhaustive`` scans the whole profile box.  ``pruned`` first removes
    type-agent strategies that are strictly dominated against every
    completion (verified exactly) and scans what remains; it decides
    existence identically.
    """
    return _scan(game, mode, budget, collect=False)


def enumerate_pure_bne(
    game: MaliciousGame, mode: str = EXHAUSTIVE, budget: int | None = None
) -> SearchReport:
    """Every pure Bayesian Nash equilibrium (in canonical order)."""
    return _scan(game, mode, budget, collect=True)


# ------------------------------------------------------ plain congestion game


def _cg_profiles(game: CongestionGame, budget: int | None):
    budget = default_budget() if budget is None else budget
    space = _engine.full_space(game, bayesian=False)
    if space.size > budget:
        raise BudgetExceeded(f"{space.size} profiles exceed budget {budget}")
    return space


def optimum(game: CongestionGame, budget: int | None = None) -> tuple[tuple[int, ...], Fraction]:
    """Social-cost minimising pure profile (first in canonical order) and its cost."""
    space = _cg_profiles(game, budget)
    compiled = _engine.compile_game(game)
    if compiled is None:
        best = None
        for s in itertools.product(*(range(len(S)) for S in game.strategy_sets)):
            sc = cg_social_cost(game, s)
            if best is None or sc < best[1]:
                best = (s, sc)
        return best
    best_val, best_flat = None, None
    for block in _engine.iter_blocks(compiled, space):
        vals = _engine.cg_cost_scaled(compiled, block)
        i = int(np.argmin(vals))
        if best_val is None or vals[i] < best_val:
            best_val, best_flat = vals[i], block.offset + i
    s, _ = space.decode(best_flat)
    return s, cg_social_cost(game, s)


def pure_nash_equilibria(game: CongestionGame, budget: int | None = None) -> list[tuple[int, ...]]:
    """All pure Nash equilibria of a plain congestion game, canonical order."""
    space = _cg_profiles(game, budget)
    compiled = _engine.compile_game(game)
    if compiled is None:
        return [
            s
            for s in itertools.product(*(range(len(S)) for S in game.strategy_sets))
            if is_pure_ne(game, s)[0]
        ]
    out = []
    for block in _engine.iter_blocks(compiled, space):
        for h in _engine.equilibrium_filter(compiled, block):
            out.append(space.decode(block.offset + int(h))[0])
    return out


def worst_pure_ne(game: CongestionGame, budget: int | None = None) -> tuple[tuple[int, ...], Fraction]:
    """The pure Nash equilibrium of largest social cost (first among ties)."""
    worst = None
    for s in pure_nash_equilibria(game, budget):
        sc = cg_social_cost(game, s)
        if worst is None or sc > worst[1]:
            worst = (s, sc)
    # Rosenthal's potential argument guarantees at least one pure NE.
    assert worst is not None, "congestion game without a pure Nash equilibrium"
    return worst


def rosenthal_best_response(
    game: CongestionGame, start: Sequence[int], trace: list | None = None
) -> tuple[int, ...]:
    """Strict best-response dynamics until a pure Nash equilibrium is reached.

    Each step moves the lowest-index player that has a strictly improving
    move to her lowest-index best response.  The Rosenthal potential drops
    strictly on every step (asserted), so the loop terminates.
    """
    s = list(start)
    phi = rosenthal_potential(game, s)
    while True:
        for u in range(game.n):
            costs = cg_best_responses(game, s, u)
            best = min(costs)
            if costs[s[u]] > best:
                s[u] = costs.index(best)
                new_phi = rosenthal_potential(game, s)
                assert new_phi < phi, "Rosenthal potential did not decrease"
                phi = new_phi
                if trace is not None:
                    trace.append((tuple(s), phi))
                break
        else:
            return tuple(s)


# ------------------------------------------- symmetric singleton games


@dataclass(frozen=True)
class SymmetricSingletonSpec:
    """``n`` players, ``r`` resources, every strategy a single resource,
    common type probability ``p`` and one latency shared by all resources."""

    n: int
    r: int
    p: Fraction
    latency: Latency = LatencyFunction(1, 0)

    def __post_init__(self):
        object.__setattr__(self, "p", as_fraction(self.p))
        if self.n < 2 or self.r < 2:
            raise ValueError("need n >= 2 and r >= 2")
        if not 0 <= self.p <= 1:
            raise ValueError("type probability must lie in [0, 1]")

    def game(self) -> MaliciousGame:
        resources = tuple(f"e{j + 1}" for j in range(self.r))
        S = tuple((e,) for e in resources)
        base = CongestionGame(
            resources, (self.latency,) * self.r, (S,) * self.n, symmetric=True
        )
        return MaliciousGame(base, (self.p,) * self.n)


def symmetric_singleton_exists(spec: SymmetricSingletonSpec) -> bool:
    """Pure BNE existence: ``p <= 1/2`` and either two resources or ``r | n``.

    With ``p = 0`` nobody is malicious and the game is an ordinary congestion
    game, which always has a pure equilibrium.
    """
    if spec.p == 0:
        return True
    return spec.p <= Fraction(1, 2) and (spec.r == 2 or spec.n % spec.r == 0)


def symmetric_singleton_construct(spec: SymmetricSingletonSpec, verify: bool = True) -> PureProfile:
    """Build a pure BNE for a symmetric singleton game where one exists.

    Two resources: selfish agents alternate, each malicious agent takes the
    other resource.  ``r | n``: blocks of ``n/r`` consecutive players share a
    resource for their selfish agents and put their malicious agents on the
    next resource, cyclically.  The result is checked with
    :func:`is_pure_bne` unless ``verify`` is false.
    """
    if not symmetric_singleton_exists(spec):
        raise ValueError(f"no pure Bayesian Nash equilibrium exists for {spec}")
    n, r = spec.n, spec.r
    if r == 2:
        sel = [i % 2 for i in range(n)]
        mal = [1 - k for k in sel]
    else:
        sel = [i * r // n for i in range(n)]
        mal = [(k + 1) % r for k in sel]
    profile = PureProfile(tuple(sel), tuple(mal))
    if verify:
        ok, dev = is_pure_bne(spec.game(), profile)
        if not ok:
            raise AssertionError(f"constructed profile is not a pure BNE: {dev}")
    return profile


__all__ = [
    "BudgetExceeded",
    "DEFAULT_BUDGET",
    "EXHAUSTIVE",
    "PRUNED",
    "SearchReport",
    "SymmetricSingletonSpec",
    "default_budget",
    "enumerate_pure_bne",
    "find_pure_bne",
    "optimum",
    "pure_nash_equilibria",
    "rosenthal_best_response",
    "symmetric_singleton_construct",
    "symmetric_singleton_exists",
    "worst_pure_ne",
]
