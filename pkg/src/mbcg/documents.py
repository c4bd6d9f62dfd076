"""JSON documents for games and profiles.

Rationals are written as ``"num/den"`` strings (integers without a
denominator).  :func:`dumps` is canonical: sorted keys, two-space indent and
lowest-terms rationals, so a document survives a load/dump round trip
byte for byte.
"""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Any, Mapping

from .model import CongestionGame, LatencyFunction, MaliciousGame, PureProfile

GAME_FORMAT = "mbcg-game/1"
PROFILE_FORMAT = "mbcg-profile/1"


class DocumentError(ValueError):
    """A document that cannot be turned into a game or profile."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        where = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(where + message)
        self.line = line
        self.column = column


def rational(x: Fraction | int) -> str:
    return str(Fraction(x))


def parse_rational(text: Any, what: str) -> Fraction:
    if isinstance(text, bool) or not isinstance(text, (str, int)):
        raise DocumentError(f"{what}: expected a 'num/den' string, got {text!r}")
    try:
        return Fraction(text) if isinstance(text, int) else Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise DocumentError(f"{what}: bad rational {text!r}") from None


def dumps(doc: Mapping) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def loads(text: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise DocumentError(err.msg, err.lineno, err.colno) from None
    if not isinstance(doc, dict):
        raise DocumentError("top level must be an object")
    return doc


def game_to_document(game: MaliciousGame, role_map: Mapping[str, str] | None = None) -> dict:
    base = game.base
    resources = []
    for e, f in zip(base.resources, base.latencies):
        if not isinstance(f, LatencyFunction):
            raise TypeError("only affine latencies can be serialised")
        resources.append({"id": e, "a": rational(f.a), "b": rational(f.b)})
    players = [
        {"id": pid, "p": rational(pu), "strategies": [list(s) for s in S]}
        for pid, pu, S in zip(base.players, game.p, base.strategy_sets)
    ]
    doc = {"format": GAME_FORMAT, "resources": resources, "players": players}
    if base.symmetric:
        doc["symmetric"] = True
    if role_map:
        doc["role_map"] = dict(role_map)
    return doc


def _require(obj: Mapping, key: str, kind: type, what: str):
    if key not in obj:
        raise DocumentError(f"{what}: missing {key!r}")
    val = obj[key]
    if not isinstance(val, kind) or isinstance(val, bool) and kind is not bool:
        raise DocumentError(f"{what}: {key!r} has the wrong type")
    return val


def game_from_document(doc: Mapping) -> tuple[MaliciousGame, dict[str, str]]:
    """Build the game described by ``doc``; structural problems raise
    :class:`DocumentError`, semantic ones are left to ``validate_game``."""
    if doc.get("format") != GAME_FORMAT:
        raise DocumentError(f"expected format {GAME_FORMAT!r}")
    resources = _require(doc, "resources", list, "game")
    players = _require(doc, "players", list, "game")
    ids, lats = [], []
    for i, r in enumerate(resources):
        what = f"resource #{i}"
        if not isinstance(r, dict):
            raise DocumentError(f"{what}: expected an object")
        ids.append(_require(r, "id", str, what))
        lats.append(LatencyFunction(parse_rational(r.get("a"), what), parse_rational(r.get("b", "0"), what)))
    names, probs, sets = [], [], []
    for i, pl in enumerate(players):
        what = f"player #{i}"
        if not isinstance(pl, dict):
            raise DocumentError(f"{what}: expected an object")
        names.append(_require(pl, "id", str, what))
        probs.append(parse_rational(pl.get("p", "0"), what))
        strategies = _require(pl, "strategies", list, what)
        S = []
        for s in strategies:
            if not isinstance(s, list) or not all(isinstance(e, str) for e in s):
                raise DocumentError(f"{what}: a strategy must be a list of resource ids")
            S.append(tuple(s))
        sets.append(tuple(S))
    symmetric = doc.get("symmetric", False)
    if not isinstance(symmetric, bool):
        raise DocumentError("game: 'symmetric' must be true or false")
    role_map = doc.get("role_map", {})
    if not isinstance(role_map, dict) or not all(isinstance(v, str) for v in role_map.values()):
        raise DocumentError("game: 'role_map' must map names to ids")
    base = CongestionGame(tuple(ids), tuple(lats), tuple(sets), tuple(names), symmetric)
    return MaliciousGame(base, tuple(probs)), dict(role_map)


def profile_to_document(game: MaliciousGame, profile: PureProfile) -> dict:
    return {
        "format": PROFILE_FORMAT,
        "profile": {
            pid: {"selfish": s, "malicious": m}
            for pid, s, m in zip(game.base.players, profile.selfish, profile.malicious)
        },
    }


def profile_from_document(doc: Mapping, game: MaliciousGame) -> PureProfile:
    """Profile of ``game`` described by ``doc`` (0-based strategy indices)."""
    if doc.get("format") != PROFILE_FORMAT:
        raise DocumentError(f"expected format {PROFILE_FORMAT!r}")
    entries = _require(doc, "profile", dict, "profile")
    players = game.base.players
    unknown = sorted(set(entries) - set(players))
    if unknown:
        raise DocumentError(f"profile names unknown players: {', '.join(unknown)}")
    sel, mal = [], []
    for pid in players:
        if pid not in entries:
            raise DocumentError(f"profile misses player {pid}")
        entry = entries[pid]
        if not isinstance(entry, dict):
            raise DocumentError(f"player {pid}: expected an object")
        sel.append(_require(entry, "selfish", int, f"player {pid}"))
        mal.append(_require(entry, "malicious", int, f"player {pid}"))
    return PureProfile(tuple(sel), tuple(mal))


__all__ = [
    "DocumentError",
    "GAME_FORMAT",
    "PROFILE_FORMAT",
    "dumps",
    "game_from_document",
    "game_to_document",
    "loads",
    "parse_rational",
    "profile_from_document",
    "profile_to_document",
    "rational",
]
