"""Command-line interface.

Exit codes: 0 success or "yes", 1 "no", 2 validation failure, 3 parse
failure, 4 undecided within the profile budget, 5 unreadable file.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from typing import Sequence

from . import analysis
from .documents import (
    DocumentError,
    dumps,
    game_from_document,
    game_to_document,
    loads,
    parse_rational,
    profile_from_document,
    profile_to_document,
)
from .model import (
    MaliciousGame,
    is_malicious_satisfied,
    is_pure_bne,
    is_selfish_satisfied,
    private_cost,
    social_cost_bayes,
    validate_game,
    validate_profile,
)
from .reductions import DimacsError, VARIANTS, degree_audit, parse_dimacs, reduce_sat, validate_tovey
from .solvers import (
    EXHAUSTIVE,
    PRUNED,
    SymmetricSingletonSpec,
    enumerate_pure_bne,
    find_pure_bne,
)

EXIT_YES = 0
EXIT_NO = 1
EXIT_INVALID = 2
EXIT_PARSE = 3
EXIT_UNDECIDED = 4
EXIT_UNREADABLE = 5


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def fmt(x: Fraction) -> str:
    """Exact rational followed by a 6-place decimal."""
    return f"{Fraction(x)} ({float(x):.6f})"


def fmt_float(x: float) -> str:
    return f"{x:.6f}".rstrip("0").rstrip(".")


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as err:
        raise CliError(EXIT_UNREADABLE, f"cannot read {path}: {err.strerror}") from None


def _load_game(path: str) -> MaliciousGame:
    try:
        game, _ = game_from_document(loads(_read(path)))
    except DocumentError as err:
        raise CliError(EXIT_PARSE, f"{path}: {err}") from None
    bad = validate_game(game)
    if bad:
        raise CliError(EXIT_INVALID, "\n".join(map(str, bad)))
    return game


def _rational_arg(text: str) -> Fraction:
    try:
        return parse_rational(text, "argument")
    except DocumentError as err:
        raise argparse.ArgumentTypeError(str(err)) from None


def _strategy(game: MaliciousGame, u: int, k: int) -> str:
    return "{" + ", ".join(game.base.strategy_sets[u][k]) + "}"


def _profile_line(game: MaliciousGame, profile) -> str:
    parts = [
        f"{pid}=({s},{m})"
        for pid, s, m in zip(game.base.players, profile.selfish, profile.malicious)
    ]
    return " ".join(parts)


def _emit(text: str, out) -> None:
    out.write(text if text.endswith("\n") else text + "\n")


# ------------------------------------------------------------------ commands


def cmd_validate(args, out) -> int:
    _load_game(args.game)
    return EXIT_YES


def cmd_check(args, out) -> int:
    game = _load_game(args.game)
    try:
        profile = profile_from_document(loads(_read(args.profile)), game)
    except DocumentError as err:
        raise CliError(EXIT_PARSE, f"{args.profile}: {err}") from None
    bad = validate_profile(game, profile)
    if bad:
        raise CliError(EXIT_INVALID, "\n".join(map(str, bad)))
    for u, pid in enumerate(game.base.players):
        ok, k = is_selfish_satisfied(game, profile, u)
        cost = private_cost(game, profile, u)
        if ok:
            _emit(f"{pid} selfish: satisfied, cost {fmt(cost)}", out)
        else:
            better = private_cost(game, profile.with_selfish(u, k), u)
            _emit(f"{pid} selfish: improves to {k} {_strategy(game, u, k)}, cost {fmt(cost)} -> {fmt(better)}", out)
        if game.p[u] == 0:
            _emit(f"{pid} malicious: vacuous (p=0)", out)
            continue
        ok, k = is_malicious_satisfied(game, profile, u)
        if ok:
            _emit(f"{pid} malicious: satisfied", out)
        else:
            _emit(f"{pid} malicious: improves to {k} {_strategy(game, u, k)}", out)
    ok, dev = is_pure_bne(game, profile)
    if dev is not None:
        pid = game.base.players[dev.player]
        _emit(f"witness: {pid} {dev.agent} -> {dev.strategy} {_strategy(game, dev.player, dev.strategy)}", out)
    if game.all_malicious:
        _emit("SC = undefined (every player malicious)", out)
    else:
        _emit(f"SC = {fmt(social_cost_bayes(game, profile))}", out)
    _emit(f"PURE-BNE: {'yes' if ok else 'no'}", out)
    return EXIT_YES if ok else EXIT_NO


def cmd_solve(args, out) -> int:
    game = _load_game(args.game)
    search = enumerate_pure_bne if args.all else find_pure_bne
    report = search(game, args.mode, args.budget)
    _emit(f"mode: {args.mode}", out)
    _emit(f"profiles: {report.space_size}", out)
    _emit(f"profiles_scanned: {report.profiles_scanned}", out)
    _emit(f"pruned: {report.pruned}", out)
    if report.undecided:
        _emit("status: undecided (budget)", out)
        return EXIT_UNDECIDED
    if not report.exists:
        _emit("status: no pure BNE", out)
        return EXIT_NO
    listed = report.equilibria if args.all else (report.witness,)
    _emit(f"status: exists ({len(listed)} listed)" if args.all else "status: exists", out)
    for profile in listed:
        sc = "undefined" if game.all_malicious else fmt(social_cost_bayes(game, profile))
        _emit(f"BNE {_profile_line(game, profile)}  SC = {sc}", out)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(dumps(profile_to_document(game, report.witness)))
    return EXIT_YES


def cmd_reduce(args, out) -> int:
    try:
        cnf = parse_dimacs(_read(args.cnf))
    except DimacsError as err:
        raise CliError(EXIT_PARSE, f"{args.cnf}: {err}") from None
    bad = validate_tovey(cnf)
    if bad:
        raise CliError(EXIT_INVALID, "\n".join(map(str, bad)))
    try:
        gg = reduce_sat(cnf, args.p, args.variant, args.M)
    except ValueError as err:
        raise CliError(EXIT_INVALID, str(err)) from None
    text = dumps(game_to_document(gg.game, gg.role_map))
    smax, rmax = degree_audit(gg.game)
    summary = [
        f"variant: {args.variant}",
        f"players: {gg.game.n}",
        f"resources: {gg.game.base.r}",
        f"max |S_u| = {smax}",
        f"max players/resource = {rmax}",
    ]
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
        _emit("\n".join(summary), out)
    else:
        out.write(text)
        sys.stderr.write("\n".join(summary) + "\n")
    return EXIT_YES


def cmd_generate(args, out) -> int:
    if args.family == "ring":
        if args.n < 3:
            raise CliError(EXIT_INVALID, "the ring family needs --n >= 3")
        game = analysis.example_game(args.n, args.p, args.alpha)
    else:
        try:
            spec = SymmetricSingletonSpec(args.n, args.r, args.p)
        except ValueError as err:
            raise CliError(EXIT_INVALID, str(err)) from None
        game = spec.game()
    text = dumps(game_to_document(game))
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        out.write(text)
    return EXIT_YES


def _rows(records: list[dict], out, as_json: bool) -> None:
    if as_json:
        for rec in records:
            out.write(json.dumps(rec, sort_keys=True) + "\n")
        return
    keys = list(records[0])
    cells = [[str(rec[k]) for k in keys] for rec in records]
    widths = [max(len(k), *(len(c[i]) for c in cells)) for i, k in enumerate(keys)]
    _emit("  ".join(k.ljust(w) for k, w in zip(keys, widths)).rstrip(), out)
    for c in cells:
        _emit("  ".join(v.ljust(w) for v, w in zip(c, widths)).rstrip(), out)


def _exact(x) -> str:
    return "-" if x is None else str(Fraction(x))


def _dec(x) -> str:
    return "-" if x is None else f"{float(x):.6f}"


def cmd_analyze(args, out) -> int:
    if args.bounds:
        if args.delta is None:
            raise CliError(EXIT_INVALID, "--bounds needs --delta")
        pob = analysis.pob_upper_bound_identical(args.delta)
        pm = analysis.pom_upper_bound(args.delta)
        _emit(f"PoB ≤ {fmt_float(pob)}, PoM ≤ {fmt_float(pm)} (vs PoA {analysis.POA_AFFINE})", out)
        if args.json:
            rec = {"delta": _exact(args.delta), "pob_bound": pob, "pom_bound": pm, "poa": _exact(analysis.POA_AFFINE)}
            out.write(json.dumps(rec, sort_keys=True) + "\n")
        return EXIT_YES
    if args.p is None:
        raise CliError(EXIT_INVALID, "--p is required")
    if args.wom:
        try:
            rep = analysis.wom_witness(args.p, args.budget)
        except ValueError as err:
            raise CliError(EXIT_INVALID, str(err)) from None
        rec = {
            "game": rep.descriptor,
            "worst_ne_sc": _exact(rep.sc_worst_ne),
            "bne_sc": _exact(rep.sc_bne),
            "bne_sc_dec": _dec(rep.sc_bne),
            "wom": _exact(rep.wom),
            "wom_dec": _dec(rep.wom),
            "bne_count": len(rep.equilibria),
        }
        _rows([rec], out, args.json)
        return EXIT_YES
    if args.n is None or args.n < 3:
        raise CliError(EXIT_INVALID, "the ring family needs --n >= 3")
    try:
        if args.lower_bound:
            rep = analysis.lower_bound_witness(args.n, args.p)
        else:
            if args.alpha is None:
                raise CliError(EXIT_INVALID, "give --alpha, --lower-bound or --wom")
            rep = analysis.empirical_pob(analysis.example_game(args.n, args.p, args.alpha), args.mode, args.budget)
    except ValueError as err:
        raise CliError(EXIT_INVALID, str(err)) from None
    except RuntimeError as err:
        _emit(f"status: undecided (budget): {err}", out)
        return EXIT_UNDECIDED
    rec = {
        "game": rep.descriptor,
        "delta": _exact(Fraction(args.n) * args.p),
        "sc_eq": _exact(rep.sc_equilibrium),
        "sc_opt": _exact(rep.sc_optimum),
        "ratio": _exact(rep.ratio),
        "ratio_dec": _dec(rep.ratio),
        "bound": "-" if rep.analytic_bound is None else str(round(rep.analytic_bound, 6)),
        "within": "yes" if rep.within_bound() else "no",
    }
    if not rep.has_equilibrium:
        rec["status"] = "no pure BNE"
    _rows([rec], out, args.json)
    return EXIT_YES if rep.has_equilibrium else EXIT_NO


# -------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mbcg", description="Malicious Bayesian congestion games: equilibria, reductions, ratios."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a game document")
    p.add_argument("game")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("check", help="test whether a profile is a pure Bayesian Nash equilibrium")
    p.add_argument("game")
    p.add_argument("profile")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("solve", help="search for pure Bayesian Nash equilibria")
    p.add_argument("game")
    p.add_argument("--mode", choices=(EXHAUSTIVE, PRUNED), default=EXHAUSTIVE)
    p.add_argument("--budget", type=int, default=None, help="profile budget (default $MBCG_BUDGET or 10^8)")
    p.add_argument("--all", action="store_true", help="list every equilibrium")
    p.add_argument("-o", "--output", help="write the first equilibrium as a profile document")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("reduce", help="build a gadget game from a DIMACS CNF file")
    p.add_argument("cnf")
    p.add_argument("--variant", choices=VARIANTS, default="a")
    p.add_argument("--p", type=_rational_arg, required=True)
    p.add_argument("--M", type=_rational_arg, default=None, help="collector slope override")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("generate", help="write a ring or symmetric singleton game document")
    p.add_argument("family", choices=("ring", "symmetric"))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--r", type=int, default=2)
    p.add_argument("--p", type=_rational_arg, default=Fraction(0))
    p.add_argument("--alpha", type=_rational_arg, default=Fraction(1))
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("analyze", help="equilibrium ratios on the ring family and analytic bounds")
    p.add_argument("--family", choices=("ring",), default="ring")
    p.add_argument("--n", type=int)
    p.add_argument("--p", type=_rational_arg)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--alpha", type=_rational_arg)
    group.add_argument("--lower-bound", action="store_true", help="alpha = (1+(n-1)p)/(1-p) witness")
    group.add_argument("--wom", action="store_true", help="n = 3, alpha = 1 windfall witness")
    group.add_argument("--bounds", action="store_true", help="evaluate the analytic bounds at --delta")
    p.add_argument("--delta", type=_rational_arg)
    p.add_argument("--mode", choices=(EXHAUSTIVE, PRUNED), default=EXHAUSTIVE)
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--json", action="store_true", help="one JSON record per line")
    p.set_defaults(func=cmd_analyze)
    return parser


def main(argv: Sequence[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except CliError as err:
        sys.stderr.write(str(err) + "\n")
        return err.code


if __name__ == "__main__":
    sys.exit(main())
