"""Exact game model: congestion games, malicious Bayesian congestion games,
pure profiles, loads, costs and equilibrium checks.

All quantities are :class:`fractions.Fraction`; nothing in an equilibrium
decision ever touches floating point.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, NamedTuple, Sequence, Union

Rational = Fraction
Number = Union[int, Fraction]

SELFISH = "selfish"
MALICIOUS = "malicious"


def as_fraction(x: Number | str) -> Fraction:
    if isinstance(x, float):
        raise TypeError("floats are not accepted; use Fraction or 'num/den'")
    return Fraction(x)


@dataclass(frozen=True)
class LatencyFunction:
    """Affine latency ``f(x) = a*x + b`` with non-negative coefficients."""

    a: Fraction = Fraction(1)
    b: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "a", as_fraction(self.a))
        object.__setattr__(self, "b", as_fraction(self.b))

    def __call__(self, x: Number) -> Fraction:
        return self.a * x + self.b

    @property
    def is_linear(self) -> bool:
        return self.b == 0


@dataclass(frozen=True)
class TabulatedLatency:
    """Non-decreasing latency given by its values at loads 1, 2, ..., m.

    Fractional loads (which arise from expected loads) are evaluated by
    linear interpolation between the integer points; loads above ``m``
    continue the last segment's slope.
    """

    values: tuple[Fraction, ...]

    def __post_init__(self):
        vals = tuple(as_fraction(v) for v in self.values)
        if not vals:
            raise ValueError("tabulated latency needs at least one value")
        object.__setattr__(self, "values", vals)

    def __call__(self, x: Number) -> Fraction:
        x = Fraction(x)
        vals = self.values
        if len(vals) == 1:
            return vals[0]
        if x <= 1:
            return vals[0]
        i = min(int(x), len(vals) - 1)  # segment [i, i+1] in 1-based loads
        lo, hi = vals[i - 1], vals[i]
        return lo + (hi - lo) * (x - i)

    @property
    def is_linear(self) -> bool:
        return False


Latency = Union[LatencyFunction, TabulatedLatency, Callable[[Fraction], Fraction]]


@dataclass(frozen=True)
class CongestionGame:
    """Players choose resource subsets from their strategy sets.

    ``strategy_sets[u]`` is a tuple of strategies, each a tuple of resource
    ids.  Construction does not validate; call :func:`validate_game`.
    """

    resources: tuple[str, ...]
    latencies: tuple[Latency, ...]
    strategy_sets: tuple[tuple[tuple[str, ...], ...], ...]
    players: tuple[str, ...] = ()
    symmetric: bool = False

    def __post_init__(self):
        object.__setattr__(self, "resources", tuple(self.resources))
        object.__setattr__(self, "latencies", tuple(self.latencies))
        object.__setattr__(
            self,
            "strategy_sets",
            tuple(tuple(tuple(s) for s in S) for S in self.strategy_sets),
        )
        if not self.players:
            names = tuple(f"u{i + 1}" for i in range(len(self.strategy_sets)))
            object.__setattr__(self, "players", names)
        else:
            object.__setattr__(self, "players", tuple(self.players))

    @property
    def n(self) -> int:
        return len(self.strategy_sets)

    @property
    def r(self) -> int:
        return len(self.resources)

    def latency(self, e: str) -> Latency:
        return self.latencies[self._index[e]]

    def strategy(self, u: int, k: int) -> frozenset[str]:
        return self._sets[u][k]

    # Cached lookups; the dataclass is frozen so these never go stale.
    @property
    def _index(self) -> dict[str, int]:
        cache = self.__dict__.get("_index_cache")
        if cache is None:
            cache = {e: i for i, e in enumerate(self.resources)}
            object.__setattr__(self, "_index_cache", cache)
        return cache

    @property
    def _sets(self) -> tuple[tuple[frozenset[str], ...], ...]:
        cache = self.__dict__.get("_sets_cache")
        if cache is None:
            cache = tuple(tuple(frozenset(s) for s in S) for S in self.strategy_sets)
            object.__setattr__(self, "_sets_cache", cache)
        return cache


@dataclass(frozen=True)
class MaliciousGame:
    """A congestion game where player ``u`` is malicious with probability ``p[u]``."""

    base: CongestionGame
    p: tuple[Fraction, ...]

    def __post_init__(self):
        object.__setattr__(self, "p", tuple(as_fraction(x) for x in self.p))

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def delta(self) -> Fraction:
        """Expected number of malicious players."""
        return sum(self.p, Fraction(0))

    @property
    def p_min(self) -> Fraction:
        return min(self.p)

    @property
    def all_malicious(self) -> bool:
        return self.delta == self.n


@dataclass(frozen=True)
class PureProfile:
    """Strategy indices of each player's selfish and malicious type-agent."""

    selfish: tuple[int, ...]
    malicious: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "selfish", tuple(self.selfish))
        object.__setattr__(self, "malicious", tuple(self.malicious))

    def with_selfish(self, u: int, k: int) -> PureProfile:
        s = list(self.selfish)
        s[u] = k
        return PureProfile(tuple(s), self.malicious)

    def with_malicious(self, u: int, k: int) -> PureProfile:
        m = list(self.malicious)
        m[u] = k
        return PureProfile(self.selfish, tuple(m))


class Violation(NamedTuple):
    kind: str
    detail: str

    def __str__(self) -> str:
        return f"{self.kind}: {self.detail}"


class Deviation(NamedTuple):
    player: int
    agent: str
    strategy: int


def with_probabilities(game: CongestionGame | MaliciousGame, p: Sequence[Number]) -> MaliciousGame:
    base = game.base if isinstance(game, MaliciousGame) else game
    return MaliciousGame(base, tuple(p))


def strip_malice(game: MaliciousGame) -> CongestionGame:
    """The congestion game obtained by setting every type probability to 0."""
    return game.base


# ---------------------------------------------------------------- validation


def validate_game(game: MaliciousGame | CongestionGame) -> list[Violation]:
    """Every invariant violation of ``game``; an empty list means valid."""
    if isinstance(game, MaliciousGame):
        base, p = game.base, game.p
    else:
        base, p = game, None
    out: list[Violation] = []
    if base.n < 2:
        out.append(Violation("too few players", f"n = {base.n}, need n >= 2"))
    if base.r < 2:
        out.append(Violation("too few resources", f"r = {base.r}, need r >= 2"))
    if len(set(base.resources)) != len(base.resources):
        out.append(Violation("duplicate resource", "resource ids are not unique"))
    if len(base.latencies) != base.r:
        out.append(
            Violation("latency mismatch", f"{len(base.latencies)} latencies for {base.r} resources")
        )
    for e, f in zip(base.resources, base.latencies):
        if isinstance(f, LatencyFunction) and (f.a < 0 or f.b < 0):
            out.append(Violation("negative latency coefficient", f"resource {e}"))
        if isinstance(f, TabulatedLatency):
            vals = f.values
            if vals[0] < 0 or any(x > y for x, y in zip(vals, vals[1:])):
                out.append(Violation("latency not non-decreasing", f"resource {e}"))
    if len(base.players) != base.n or len(set(base.players)) != base.n:
        out.append(Violation("player ids", "player ids must be unique, one per strategy set"))
    known = set(base.resources)
    for u, S in enumerate(base.strategy_sets):
        name = base.players[u] if u < len(base.players) else f"#{u}"
        if not S:
            out.append(Violation("empty strategy set", f"player {name}"))
        seen = set()
        for k, s in enumerate(S):
            if not s:
                out.append(Violation("empty strategy", f"player {name} strategy {k}"))
            if len(set(s)) != len(s):
                out.append(Violation("duplicate resource in strategy", f"player {name} strategy {k}"))
            for e in s:
                if e not in known:
                    out.append(
                        Violation("unknown resource", f"player {name} strategy {k} uses {e!r}")
                    )
            key = frozenset(s)
            if key in seen:
                out.append(Violation("duplicate strategy", f"player {name} strategy {k}"))
            seen.add(key)
    if base.symmetric:
        sets = {frozenset(frozenset(s) for s in S) for S in base.strategy_sets}
        if len(sets) > 1:
            out.append(Violation("not symmetric", "symmetric flag set but strategy sets differ"))
    if p is not None:
        if len(p) != base.n:
            out.append(Violation("probability vector", f"length {len(p)} for {base.n} players"))
        for u, pu in enumerate(p):
            if not 0 <= pu <= 1:
                name = base.players[u] if u < len(base.players) else f"#{u}"
                out.append(Violation("probability out of range", f"player {name}"))
    return out


def validate_profile(game: MaliciousGame | CongestionGame, profile: PureProfile) -> list[Violation]:
    base = game.base if isinstance(game, MaliciousGame) else game
    out = []
    if len(profile.selfish) != base.n or len(profile.malicious) != base.n:
        return [Violation("profile size", f"profile covers {len(profile.selfish)} of {base.n} players")]
    for u, S in enumerate(base.strategy_sets):
        for agent, k in ((SELFISH, profile.selfish[u]), (MALICIOUS, profile.malicious[u])):
            if not 0 <= k < len(S):
                out.append(
                    Violation("strategy index out of range", f"player {base.players[u]} {agent} index {k}")
                )
    return out


# --------------------------------------------------------- malicious model


def _check_resource(game: MaliciousGame, e: str) -> None:
    if e not in game.base._index:
        raise KeyError(f"unknown resource {e!r}")


def selfish_load(
    game: MaliciousGame, profile: PureProfile, e: str, exclude: int | None = None
) -> Fraction:
    """Expected selfish load on ``e``: sum of ``1 - p_u`` over selfish users."""
    _check_resource(game, e)
    base = game.base
    total = Fraction(0)
    for u in range(base.n):
        if u != exclude and e in base.strategy(u, profile.selfish[u]):
            total += 1 - game.p[u]
    return total


def malicious_load(
    game: MaliciousGame, profile: PureProfile, e: str, exclude: int | None = None
) -> Fraction:
    """Expected malicious load on ``e``: sum of ``p_u`` over malicious users."""
    _check_resource(game, e)
    base = game.base
    total = Fraction(0)
    for u in range(base.n):
        if u != exclude and e in base.strategy(u, profile.malicious[u]):
            total += game.p[u]
    return total


def _loads(game: MaliciousGame, profile: PureProfile) -> dict[str, Fraction]:
    """Total expected load (selfish + malicious) per resource."""
    base = game.base
    load = dict.fromkeys(base.resources, Fraction(0))
    for u in range(base.n):
        pu = game.p[u]
        for e in base.strategy(u, profile.selfish[u]):
            load[e] += 1 - pu
        for e in base.strategy(u, profile.malicious[u]):
            load[e] += pu
    return load


def _private_cost_of(
    game: MaliciousGame, profile: PureProfile, u: int, strategy: int, load: dict[str, Fraction]
) -> Fraction:
    """PC of ``u`` if her selfish agent played ``strategy``, given full loads."""
    base = game.base
    pu = game.p[u]
    own_s = base.strategy(u, profile.selfish[u])
    own_m = base.strategy(u, profile.malicious[u])
    cost = Fraction(0)
    for e in base.strategy(u, strategy):
        others = load[e]
        if e in own_s:
            others -= 1 - pu
        if e in own_m:
            others -= pu
        cost += base.latency(e)(others + 1)
    return cost


def private_cost(game: MaliciousGame, profile: PureProfile, u: int) -> Fraction:
    """Expected latency of player ``u`` when she is selfish.

    Loads exclude both of ``u``'s own type-agents, so the result never
    depends on ``profile.malicious[u]``.
    """
    base = game.base
    cost = Fraction(0)
    for e in base.strategy(u, profile.selfish[u]):
        x = selfish_load(game, profile, e, exclude=u) + malicious_load(game, profile, e, exclude=u)
        cost += base.latency(e)(x + 1)
    return cost


def social_cost_bayes(game: MaliciousGame, profile: PureProfile) -> Fraction:
    """Weighted average private cost of the selfish type-agents."""
    denom = game.n - game.delta
    if denom <= 0:
        raise ZeroDivisionError("social cost undefined: every player is malicious (n - delta = 0)")
    load = _loads(game, profile)
    total = Fraction(0)
    for u in range(game.n):
        w = 1 - game.p[u]
        if w:
            total += w * _private_cost_of(game, profile, u, profile.selfish[u], load)
    return total / denom


def malicious_objective(game: MaliciousGame, profile: PureProfile) -> Fraction:
    """The quantity malicious type-agents maximise.

    Equal to :func:`social_cost_bayes` whenever it is defined.  When every
    player is malicious with probability 1 the weights ``1 - p_u`` all vanish
    and the objective falls back to the unweighted mean private cost, the
    limit of the social cost as the common type probability tends to 1.
    """
    load = _loads(game, profile)
    if game.all_malicious:
        pcs = [_private_cost_of(game, profile, u, profile.selfish[u], load) for u in range(game.n)]
        return sum(pcs, Fraction(0)) / game.n
    total = Fraction(0)
    for u in range(game.n):
        w = 1 - game.p[u]
        if w:
            total += w * _private_cost_of(game, profile, u, profile.selfish[u], load)
    return total / (game.n - game.delta)


def is_selfish_satisfied(
    game: MaliciousGame, profile: PureProfile, u: int
) -> tuple[bool, int | None]:
    """Whether ``u``'s selfish agent has no strictly cheaper strategy.

    Returns ``(True, None)`` or ``(False, k)`` with ``k`` the lowest-index
    cost-minimising alternative.
    """
    load = _loads(game, profile)
    costs = [
        _private_cost_of(game, profile, u, k, load) for k in range(len(game.base.strategy_sets[u]))
    ]
    best = min(costs)
    if costs[profile.selfish[u]] <= best:
        return True, None
    return False, costs.index(best)


def is_malicious_satisfied(
    game: MaliciousGame, profile: PureProfile, u: int
) -> tuple[bool, int | None]:
    """Whether ``u``'s malicious agent cannot strictly raise the social cost."""
    if game.p[u] == 0:
        return True, None
    values = [
        malicious_objective(game, profile.with_malicious(u, k))
        for k in range(len(game.base.strategy_sets[u]))
    ]
    best = max(values)
    if values[profile.malicious[u]] >= best:
        return True, None
    return False, values.index(best)


def is_pure_bne(game: MaliciousGame, profile: PureProfile) -> tuple[bool, Deviation | None]:
    """Pure Bayesian Nash equilibrium test.

    Scans players in index order, selfish agent before malicious agent, and
    reports the first unsatisfied type-agent with its improving strategy.
    """
    for u in range(game.n):
        ok, k = is_selfish_satisfied(game, profile, u)
        if not ok:
            return False, Deviation(u, SELFISH, k)
        ok, k = is_malicious_satisfied(game, profile, u)
        if not ok:
            return False, Deviation(u, MALICIOUS, k)
    return True, None


# ------------------------------------------------------ plain congestion game


def cg_loads(game: CongestionGame, s: Sequence[int]) -> dict[str, int]:
    load = dict.fromkeys(game.resources, 0)
    for u, k in enumerate(s):
        for e in game.strategy(u, k):
            load[e] += 1
    return load


def cg_private_cost(game: CongestionGame, s: Sequence[int], u: int) -> Fraction:
    load = cg_loads(game, s)
    return sum((Fraction(game.latency(e)(load[e])) for e in game.strategy(u, s[u])), Fraction(0))


def cg_social_cost(game: CongestionGame, s: Sequence[int]) -> Fraction:
    """Average latency, ``(1/n) * sum_e load_e * f_e(load_e)``."""
    load = cg_loads(game, s)
    total = sum(
        (d * Fraction(game.latency(e)(d)) for e, d in load.items() if d),
        Fraction(0),
    )
    return total / game.n


def cg_best_responses(game: CongestionGame, s: Sequence[int], u: int) -> list[Fraction]:
    """Private cost of every strategy of ``u`` against the others in ``s``."""
    load = cg_loads(game, s)
    for e in game.strategy(u, s[u]):
        load[e] -= 1
    return [
        sum((Fraction(game.latency(e)(load[e] + 1)) for e in game.strategy(u, k)), Fraction(0))
        for k in range(len(game.strategy_sets[u]))
    ]


def is_pure_ne(game: CongestionGame, s: Sequence[int]) -> tuple[bool, tuple[int, int] | None]:
    """Pure Nash equilibrium test; witness is ``(player, better strategy)``."""
    for u in range(game.n):
        costs = cg_best_responses(game, s, u)
        best = min(costs)
        if costs[s[u]] > best:
            return False, (u, costs.index(best))
    return True, None


def rosenthal_potential(game: CongestionGame, s: Sequence[int]) -> Fraction:
    load = cg_loads(game, s)
    total = Fraction(0)
    for e, d in load.items():
        f = game.latency(e)
        for i in range(1, d + 1):
            total += Fraction(f(i))
    return total


def uniform_game(
    resources: Sequence[str],
    latencies: Sequence[Latency] | dict[str, Latency],
    strategy_sets: Sequence[Sequence[Sequence[str]]],
    p: Sequence[Number] | Number | None = None,
    players: Sequence[str] = (),
) -> MaliciousGame:
    """Convenience constructor; a scalar ``p`` is broadcast to all players."""
    if isinstance(latencies, dict):
        latencies = [latencies[e] for e in resources]
    base = CongestionGame(tuple(resources), tuple(latencies), tuple(strategy_sets), tuple(players))
    if p is None:
        p = 0
    if not isinstance(p, (list, tuple)):
        p = [p] * base.n
    return MaliciousGame(base, tuple(p))


__all__ = [
    "CongestionGame",
    "Deviation",
    "LatencyFunction",
    "MALICIOUS",
    "MaliciousGame",
    "PureProfile",
    "Rational",
    "SELFISH",
    "TabulatedLatency",
    "Violation",
    "as_fraction",
    "cg_best_responses",
    "cg_loads",
    "cg_private_cost",
    "cg_social_cost",
    "is_malicious_satisfied",
    "is_pure_bne",
    "is_pure_ne",
    "is_selfish_satisfied",
    "malicious_load",
    "malicious_objective",
    "private_cost",
    "rosenthal_potential",
    "selfish_load",
    "social_cost_bayes",
    "strip_malice",
    "uniform_game",
    "validate_game",
    "validate_profile",
    "with_probabilities",
]
