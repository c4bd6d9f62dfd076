"""3-SAT gadgets: singleton malicious congestion games whose pure Bayesian
Nash equilibria encode satisfying assignments of a Tovey-restricted formula.

Four variants are built:

``a``   every player is malicious with the same probability ``0 < p < 1``;
``b``   only ``u_1`` is malicious (``0 < p <= 1``), no ``u_0``/``e_0``;
``a2``, ``b2``
        degree-bounded versions: the hub resource shared by ``u_2`` and all
        variable players becomes a binary tree of resources joined by tree
        players, and in ``a2`` the collector ``e_0`` is copied so that every
        resource is reachable by at most three players.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from math import ceil, log2
from typing import Iterator, Mapping, Sequence

from .model import (
    CongestionGame,
    LatencyFunction,
    MaliciousGame,
    PureProfile,
    Violation,
    as_fraction,
    is_pure_bne,
)
from .solvers import rosenthal_best_response

VARIANTS = ("a", "b", "a2", "b2")


# ----------------------------------------------------------------- formulas


class DimacsError(ValueError):
    """Malformed DIMACS text; carries the offending line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class CnfInstance:
    """A CNF formula over variables ``1..num_vars``.

    Each clause is a tuple of non-zero integers; ``-x`` is the negation of
    variable ``x``.
    """

    num_vars: int
    clauses: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "clauses", tuple(tuple(c) for c in self.clauses))

    @property
    def num_clauses(self) -> int:
        return len(self.clauses)

    def satisfied_by(self, assignment: Sequence[bool]) -> bool:
        return all(any(assignment[abs(l) - 1] == (l > 0) for l in c) for c in self.clauses)


def parse_dimacs(text: str) -> CnfInstance:
    """Parse DIMACS CNF: ``c`` comments, a ``p cnf <vars> <clauses>`` header
    and clauses of signed integers, each terminated by ``0``."""
    header = None
    clauses: list[tuple[int, ...]] = []
    current: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c") or line == "%":
            continue
        if line.startswith("p"):
            parts = line.split()
            if header is not None:
                raise DimacsError(lineno, "duplicate header")
            if len(parts) != 4 or parts[1] != "cnf":
                raise DimacsError(lineno, "expected 'p cnf <vars> <clauses>'")
            try:
                header = (int(parts[2]), int(parts[3]))
            except ValueError:
                raise DimacsError(lineno, "header counts must be integers") from None
            continue
        if header is None:
            raise DimacsError(lineno, "clause before header")
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError:
                raise DimacsError(lineno, f"bad literal {tok!r}") from None
            if lit == 0:
                clauses.append(tuple(current))
                current = []
            elif abs(lit) > header[0]:
                raise DimacsError(lineno, f"variable {abs(lit)} exceeds declared {header[0]}")
            else:
                current.append(lit)
    if header is None:
        raise DimacsError(0, "missing header")
    if current:
        raise DimacsError(len(text.splitlines()), "last clause not terminated by 0")
    if len(clauses) != header[1]:
        raise DimacsError(0, f"header declares {header[1]} clauses, found {len(clauses)}")
    return CnfInstance(header[0], tuple(clauses))


def to_dimacs(cnf: CnfInstance) -> str:
    lines = [f"p cnf {cnf.num_vars} {cnf.num_clauses}"]
    lines += [" ".join(map(str, c)) + " 0" for c in cnf.clauses]
    return "\n".join(lines) + "\n"


def validate_tovey(cnf: CnfInstance) -> list[Violation]:
    """Violations of the restricted form: clauses of 2 or 3 literals over
    distinct variables, each variable at most 3 times and at most twice per
    polarity."""
    out = []
    if cnf.num_vars < 1:
        out.append(Violation("no variables", "need at least one variable"))
    pos = [0] * (cnf.num_vars + 1)
    neg = [0] * (cnf.num_vars + 1)
    for j, c in enumerate(cnf.clauses, start=1):
        if len(c) not in (2, 3):
            out.append(Violation("clause size", f"clause {j} has {len(c)} literals"))
        vars_ = [abs(l) for l in c]
        if len(set(vars_)) != len(vars_):
            out.append(Violation("repeated variable", f"clause {j}"))
        for l in c:
            if l == 0 or abs(l) > cnf.num_vars:
                out.append(Violation("unknown variable", f"clause {j} literal {l}"))
                continue
            (pos if l > 0 else neg)[abs(l)] += 1
    for x in range(1, cnf.num_vars + 1):
        if pos[x] + neg[x] > 3:
            out.append(Violation("too many occurrences", f"x{x} occurs {pos[x] + neg[x]} times"))
        if pos[x] > 2:
            out.append(Violation("too many unnegated", f"x{x} occurs {pos[x]} times unnegated"))
        if neg[x] > 2:
            out.append(Violation("too many negated", f"x{x} occurs {neg[x]} times negated"))
    return out


def satisfying_assignments(cnf: CnfInstance) -> Iterator[tuple[bool, ...]]:
    """All satisfying assignments, brute force over ``2**num_vars``."""
    for bits in itertools.product((False, True), repeat=cnf.num_vars):
        if cnf.satisfied_by(bits):
            yield bits


def is_satisfiable(cnf: CnfInstance) -> bool:
    return next(satisfying_assignments(cnf), None) is not None


def random_tovey(num_vars: int, num_clauses: int, rng: random.Random, tries: int = 1000) -> CnfInstance:
    """A random instance obeying the Tovey restriction (rejection sampling)."""
    for _ in range(tries):
        pos = [0] * (num_vars + 1)
        neg = [0] * (num_vars + 1)
        clauses = []
        for _ in range(num_clauses):
            free = [x for x in range(1, num_vars + 1) if pos[x] + neg[x] < 3]
            size = rng.choice((2, 3))
            if len(free) < size:
                break
            clause = []
            for x in rng.sample(free, size):
                signs = [s for s, cnt in ((1, pos[x]), (-1, neg[x])) if cnt < 2]
                s = rng.choice(signs)
                (pos if s > 0 else neg)[x] += 1
                clause.append(s * x)
            clauses.append(tuple(clause))
        else:
            return CnfInstance(num_vars, tuple(clauses))
    raise ValueError(f"could not sample {num_clauses} clauses over {num_vars} variables")


# ------------------------------------------------------------------ gadgets


@dataclass(frozen=True)
class GadgetGame:
    """A reduction instance together with the names of its building blocks.

    ``role_map`` maps role names (``u_0``, ``e_{x_1}^0``, ``e_{3,0}``, ...)
    to player and resource ids of ``game``.
    """

    game: MaliciousGame
    role_map: Mapping[str, str]
    cnf: CnfInstance
    variant: str
    p: Fraction
    beta: Fraction
    M: Fraction | None
    depth: int | None = None
    leaves: tuple[str, ...] = field(default=())

    def player_index(self, role: str) -> int:
        return self.game.base.players.index(self.role_map[role])

    def strategy_index(self, player_role: str, resource_id: str) -> int:
        u = self.player_index(player_role)
        return self.game.base.strategy_sets[u].index((resource_id,))

    def resource(self, role: str) -> str:
        return self.role_map[role]

    @property
    def collectors(self) -> frozenset[str]:
        """Ids of ``e_0`` and its copies."""
        return frozenset(v for k, v in self.role_map.items() if k.startswith("e_0"))

    @property
    def hub(self) -> str:
        """The resource reserved for ``u_2``'s selfish agent."""
        return self.role_map["e_4" if self.depth is None else "e_{3,0}"]


def _var(i: int) -> str:
    return f"x_{i}"


class _Builder:
    def __init__(self):
        self.resources: list[str] = []
        self.latencies: list[LatencyFunction] = []
        self.players: list[str] = []
        self.sets: list[tuple[tuple[str, ...], ...]] = []
        self.p: list[Fraction] = []
        self.roles: dict[str, str] = {}

    def resource(self, role: str, rid: str, slope: Fraction) -> str:
        self.roles[role] = rid
        self.resources.append(rid)
        self.latencies.append(LatencyFunction(slope, 0))
        return rid

    def player(self, role: str, pid: str, choices: Sequence[str], p: Fraction) -> None:
        self.roles[role] = pid
        self.players.append(pid)
        self.sets.append(tuple((e,) for e in choices))
        self.p.append(p)

    def game(self) -> MaliciousGame:
        base = CongestionGame(
            tuple(self.resources), tuple(self.latencies), tuple(self.sets), tuple(self.players)
        )
        return MaliciousGame(base, tuple(self.p))


def _check_inputs(cnf: CnfInstance, p: Fraction, variant: str) -> None:
    bad = validate_tovey(cnf)
    if bad:
        raise ValueError("not a restricted 3-SAT instance: " + "; ".join(map(str, bad)))
    if variant.startswith("a") and not 0 < p < 1:
        raise ValueError("variant a needs 0 < p < 1")
    if variant.startswith("b") and not 0 < p <= 1:
        raise ValueError("variant b needs 0 < p <= 1")


def _literal_resources(c: Sequence[int]) -> list[str]:
    # A negated literal is true when its variable is false, i.e. when the
    # variable player leaves e_x^0 free.
    return [f"ex{abs(l)}_0" if l < 0 else f"ex{abs(l)}_1" for l in c]


def _flat(cnf: CnfInstance, p: Fraction, variant: str, M: Fraction | None) -> GadgetGame:
    malicious_all = variant == "a"
    beta = 2 - p if malicious_all else Fraction(3, 2)
    ell = cnf.num_vars
    if malicious_all:
        M = as_fraction(max(ell + 1, 4) if M is None else M)
    else:
        M = None
    b = _Builder()
    col = []
    if malicious_all:
        col = [b.resource("e_0", "e0", M)]
    for j in (1, 2, 3, 4):
        b.resource(f"e_{j}", f"e{j}", Fraction(1))
    for i in range(1, ell + 1):
        b.resource(f"e_{{{_var(i)}}}^0", f"ex{i}_0", beta)
        b.resource(f"e_{{{_var(i)}}}^1", f"ex{i}_1", beta)

    q = p if malicious_all else Fraction(0)
    if malicious_all:
        b.player("u_0", "u0", ["e0"], q)
    b.player("u_1", "u1", ["e1", "e2", "e3"], p)
    b.player("u_2", "u2", col + ["e1", "e2", "e3", "e4"], q)
    for i in range(1, ell + 1):
        b.player(f"u_{{{_var(i)}}}", f"ux{i}", col + ["e4", f"ex{i}_0", f"ex{i}_1"], q)
    for j, c in enumerate(cnf.clauses, start=1):
        b.player(f"u_{{c_{j}}}", f"uc{j}", col + _literal_resources(c), q)
    return GadgetGame(b.game(), b.roles, cnf, variant, p, beta, M)


def _tree_levels(ell: int) -> list[int]:
    """Node count per level, root first; the last level holds the ``ell`` leaves."""
    depth = ceil(log2(ell)) if ell > 1 else 0
    counts = [ell]
    for _ in range(depth):
        counts.append(ceil(counts[-1] / 2))
    return counts[::-1]


def _bounded(cnf: CnfInstance, p: Fraction, variant: str, M: Fraction | None) -> GadgetGame:
    malicious_all = variant == "a2"
    beta = 2 - p if malicious_all else Fraction(3, 2)
    ell = cnf.num_vars
    levels = _tree_levels(ell)
    depth = len(levels) - 1
    if malicious_all:
        M = as_fraction(2 ** (depth + 2) if M is None else M)
    else:
        M = None

    def node_id(j: int, i: int) -> str:
        if j == 0:
            return "e3_0"
        if j == depth:
            return f"e3_x{i + 1}"
        return f"e3_{j}_{i}"

    def node_role(j: int, i: int) -> str:
        if j == 0:
            return "e_{3,0}"
        if j == depth:
            return f"e_{{3,{_var(i + 1)}}}"
        return f"e_{{3,{j},{i}}}"

    q = p if malicious_all else Fraction(0)
    # (role, id, choices without a collector, type probability)
    specs: list[tuple[str, str, list[str], Fraction]] = []
    if malicious_all:
        # u_1's selfish agent parks on a cheap private e_3 so that u_2 only
        # needs e_1, e_2 and the tree root besides its collector.
        specs.append(("u_2", "u2", ["e1", "e2", "e3_0"], q))
    else:
        specs.append(("u_2", "u2", ["e1", "e2", "e3", "e3_0"], q))
    for j in range(1, depth + 1):
        for i in range(levels[j]):
            specs.append(
                (f"t_{{{j},{i}}}", f"t{j}_{i}", [node_id(j - 1, i // 2), node_id(j, i)], q)
            )
    for i in range(1, ell + 1):
        specs.append((f"u_{{{_var(i)}}}", f"ux{i}", [node_id(depth, i - 1), f"ex{i}_0", f"ex{i}_1"], q))
    for j, c in enumerate(cnf.clauses, start=1):
        specs.append((f"u_{{c_{j}}}", f"uc{j}", _literal_resources(c), q))

    b = _Builder()
    b.resource("e_1", "e1", Fraction(1))
    b.resource("e_2", "e2", Fraction(1))
    b.resource("e_3", "e3", Fraction(1, 2) if malicious_all else Fraction(1))
    for j, count in enumerate(levels):
        for i in range(count):
            b.resource(node_role(j, i), node_id(j, i), beta**j)
    # One level below the leaves, as the literal resources sit one slope
    # step above the hub in the flat gadget.
    ev_slope = beta ** (depth + 1)
    for i in range(1, ell + 1):
        b.resource(f"e_{{{_var(i)}}}^0", f"ex{i}_0", ev_slope)
        b.resource(f"e_{{{_var(i)}}}^1", f"ex{i}_1", ev_slope)

    copies = []
    if malicious_all:
        # Two ordinary players per collector copy, plus the copy's own u_0.
        for k in range((len(specs) + 1) // 2):
            copies.append(b.resource(f"e_0^{{({k + 1})}}", f"e0_{k + 1}", M))
        for k, cid in enumerate(copies):
            b.player(f"u_0^{{({k + 1})}}", f"u0_{k + 1}", [cid], q)
    b.player("u_1", "u1", ["e1", "e2", "e3"], p)
    for idx, (role, pid, choices, prob) in enumerate(specs):
        col = [copies[idx // 2]] if malicious_all else []
        b.player(role, pid, col + choices, prob)
    leaves = tuple(node_id(depth, i) for i in range(ell))
    return GadgetGame(b.game(), b.roles, cnf, variant, p, beta, M, depth, leaves)


def reduce_sat_a(cnf: CnfInstance, p, M=None) -> GadgetGame:
    """Gadget in which every player is malicious with probability ``p``.

    ``M`` is the slope of the collector ``e_0``.  The default
    ``max(num_vars + 1, 4)`` makes ``e_0`` strictly dominant for every
    malicious agent: elsewhere a malicious agent meets at most two other
    selfish agents on a literal resource (slope below 2) or at most
    ``num_vars`` on ``e_4`` (slope 1).
    """
    p = as_fraction(p)
    _check_inputs(cnf, p, "a")
    return _flat(cnf, p, "a", M)


def reduce_sat_b(cnf: CnfInstance, p) -> GadgetGame:
    """Gadget in which only ``u_1`` is malicious, with probability ``p``."""
    p = as_fraction(p)
    _check_inputs(cnf, p, "b")
    return _flat(cnf, p, "b", None)


def reduce_sat_bounded(cnf: CnfInstance, p, variant: str = "a", M=None) -> GadgetGame:
    """Degree-bounded gadget: at most 4 strategies per player and at most 3
    players per resource.  ``variant`` is ``a`` or ``b``.

    The hub is a binary tree of depth ``d = ceil(log2 num_vars)`` whose level
    ``j`` resources have slope ``beta**j``; literal resources get slope
    ``beta**(d + 1)`` and collector copies ``M = 2**(d + 2)`` by default.
    """
    if variant not in ("a", "b"):
        raise ValueError(f"unknown variant {variant!r}")
    p = as_fraction(p)
    _check_inputs(cnf, p, variant)
    return _bounded(cnf, p, variant + "2", M)


def reduce_sat(cnf: CnfInstance, p, variant: str, M=None) -> GadgetGame:
    """Dispatch on ``variant`` in ``a``, ``b``, ``a2``, ``b2``."""
    if variant == "a":
        return reduce_sat_a(cnf, p, M)
    if variant == "b":
        return reduce_sat_b(cnf, p)
    if variant in ("a2", "b2"):
        return reduce_sat_bounded(cnf, p, variant[0], M)
    raise ValueError(f"unknown variant {variant!r}")


def degree_audit(game: MaliciousGame | CongestionGame) -> tuple[int, int]:
    """(largest strategy set, largest number of players able to use one resource)."""
    base = game.base if isinstance(game, MaliciousGame) else game
    users = {e: set() for e in base.resources}
    for u, S in enumerate(base.strategy_sets):
        for s in S:
            for e in s:
                users[e].add(u)
    return max(len(S) for S in base.strategy_sets), max(len(v) for v in users.values())


# ------------------------------------------------- assignments and equilibria


class StructureError(AssertionError):
    """An equilibrium of a gadget lacks a structural property it must have."""


def _clause_placement(gg: GadgetGame, assignment: Sequence[bool]) -> dict[int, str]:
    """Selfish resources of the clause players: a pure Nash equilibrium of the
    plain congestion game on the literal resources left free by the variable
    players, reached by best-response dynamics."""
    occupied = {f"ex{i}_{0 if v else 1}" for i, v in enumerate(assignment, start=1)}
    free = [e for e in gg.game.base.resources if e.startswith("ex") and e not in occupied]
    slope = gg.game.base.latency(free[0]).a if free else Fraction(1)
    options = [[e for e in _literal_resources(c) if e in free] for c in gg.cnf.clauses]
    if not options:
        return {}
    sub = CongestionGame(
        tuple(free),
        tuple(LatencyFunction(slope, 0) for _ in free),
        tuple(tuple((e,) for e in opts) for opts in options),
    )
    s = rosenthal_best_response(sub, [0] * len(options))
    return {j: options[j][k] for j, k in enumerate(s)}


def assignment_to_bne(gg: GadgetGame, assignment: Sequence[bool]) -> PureProfile:
    """Pure Bayesian Nash equilibrium of ``gg`` encoding a satisfying assignment.

    ``assignment[i]`` is the value of variable ``i + 1``.  The result is
    verified with :func:`is_pure_bne`.
    """
    assignment = tuple(bool(v) for v in assignment)
    if len(assignment) != gg.cnf.num_vars:
        raise ValueError("assignment length differs from the variable count")
    if not gg.cnf.satisfied_by(assignment):
        raise ValueError("assignment does not satisfy the formula")
    base = gg.game.base
    sel = [0] * base.n
    mal = [0] * base.n  # collectors come first where they exist
    bounded = gg.depth is not None

    def put(role: str, sel_res: str | None = None, mal_res: str | None = None):
        if sel_res is not None:
            sel[gg.player_index(role)] = gg.strategy_index(role, sel_res)
        if mal_res is not None:
            mal[gg.player_index(role)] = gg.strategy_index(role, mal_res)

    if bounded and gg.variant == "a2":
        put("u_1", "e3", "e1")
    else:
        put("u_1", "e1", "e1")
    put("u_2", gg.hub)
    for i, v in enumerate(assignment, start=1):
        put(f"u_{{{_var(i)}}}", f"ex{i}_{0 if v else 1}")
    for j, e in _clause_placement(gg, assignment).items():
        put(f"u_{{c_{j + 1}}}", e)
    if bounded:
        for role, pid in gg.role_map.items():
            if role.startswith("t_"):
                u = base.players.index(pid)
                # the child node is always the last choice
                sel[u] = len(base.strategy_sets[u]) - 1

    profile = PureProfile(tuple(sel), tuple(mal))
    ok, _ = is_pure_bne(gg.game, profile)
    if not ok:
        u1 = gg.player_index("u_1")
        for k in range(len(base.strategy_sets[u1])):
            trial = profile.with_malicious(u1, k)
            if is_pure_bne(gg.game, trial)[0]:
                return trial
        raise AssertionError("constructed profile is not a pure Bayesian Nash equilibrium")
    return profile


def check_structure(gg: GadgetGame, profile: PureProfile) -> None:
    """Assert the two structural properties every equilibrium of a gadget has.

    (I) every malicious agent with positive probability other than ``u_1``'s
    sits on a collector, and only ``u_0`` selfish agents use collectors;
    (II) ``u_2``'s selfish agent is alone on its hub resource.  Agents of
    zero weight are ignored.
    """
    base, p = gg.game.base, gg.game.p
    u1 = gg.player_index("u_1")
    u0s = {base.players.index(v) for k, v in gg.role_map.items() if k.startswith("u_0")}
    cols = gg.collectors
    if cols:
        for u in range(base.n):
            (ms,) = base.strategy_sets[u][profile.malicious[u]]
            if u != u1 and p[u] > 0 and ms not in cols:
                raise StructureError(f"(I): malicious agent of {base.players[u]} on {ms}")
            (ss,) = base.strategy_sets[u][profile.selfish[u]]
            if u not in u0s and p[u] < 1 and ss in cols:
                raise StructureError(f"(I): selfish agent of {base.players[u]} on {ss}")
    u2 = gg.player_index("u_2")
    hub = gg.hub
    if base.strategy_sets[u2][profile.selfish[u2]] != (hub,):
        raise StructureError(f"(II): selfish agent of u2 not on {hub}")
    for u in range(base.n):
        if u != u2 and p[u] < 1 and base.strategy_sets[u][profile.selfish[u]] == (hub,):
            raise StructureError(f"(II): selfish agent of {base.players[u]} shares {hub}")
        if p[u] > 0 and base.strategy_sets[u][profile.malicious[u]] == (hub,):
            raise StructureError(f"(II): malicious agent of {base.players[u]} on {hub}")


def bne_to_assignment(gg: GadgetGame, profile: PureProfile) -> tuple[bool, ...]:
    """Read the truth assignment off a pure Bayesian Nash equilibrium.

    Variable ``x`` is true iff ``u_x``'s selfish agent uses ``e_x^0``.  Raises
    ``ValueError`` if ``profile`` is not an equilibrium and
    :class:`StructureError` if a structural property fails or the assignment
    does not satisfy the formula.
    """
    ok, dev = is_pure_bne(gg.game, profile)
    if not ok:
        raise ValueError(f"not a pure Bayesian Nash equilibrium: {dev}")
    check_structure(gg, profile)
    base = gg.game.base
    out = []
    for i in range(1, gg.cnf.num_vars + 1):
        u = gg.player_index(f"u_{{{_var(i)}}}")
        out.append(base.strategy_sets[u][profile.selfish[u]] == (f"ex{i}_0",))
    out = tuple(out)
    if not gg.cnf.satisfied_by(out):
        raise StructureError("extracted assignment does not satisfy the formula")
    return out


__all__ = [
    "CnfInstance",
    "DimacsError",
    "GadgetGame",
    "StructureError",
    "VARIANTS",
    "assignment_to_bne",
    "bne_to_assignment",
    "check_structure",
    "degree_audit",
    "is_satisfiable",
    "parse_dimacs",
    "random_tovey",
    "reduce_sat",
    "reduce_sat_a",
    "reduce_sat_b",
    "reduce_sat_bounded",
    "satisfying_assignments",
    "to_dimacs",
    "validate_tovey",
]
