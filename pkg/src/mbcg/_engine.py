"""Block-vectorised enumeration of pure profiles with exact integer arithmetic.

Affine games are compiled to integer arrays by scaling every probability to
a common denominator ``D`` and every latency coefficient to a common
denominator ``L``.  All comparisons made here are then comparisons between
exact integers that are fixed positive multiples of the rational quantities
in :mod:`mbcg.model`, so ties are preserved bit for bit.

Profile order: player 0 is the most significant digit; within a player the
malicious index is more significant than the selfish one, so the selfish
index of the last player varies fastest.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm, prod
from typing import Iterator, Sequence

import numpy as np

from .model import CongestionGame, LatencyFunction, MaliciousGame

_INT64_SAFE = 2**62
_BLOCK_CELLS = 1 << 22


@dataclass
class Compiled:
    n: int
    r: int
    D: int
    inc: list[np.ndarray]  # (|S_u|, r) 0/1 incidence per player
    incT: list[np.ndarray]
    ws: list[int]  # selfish weight (1 - p_u) * D
    wm: list[int]  # malicious weight p_u * D
    ow: list[int]  # weight of u's private cost in the malicious objective
    A: np.ndarray  # scaled slopes
    BD: np.ndarray  # scaled offsets times D
    dtype: object


def compile_game(game: MaliciousGame | CongestionGame) -> Compiled | None:
    """Integer form of an affine game, or ``None`` if some latency is not affine."""
    if isinstance(game, CongestionGame):
        game = MaliciousGame(game, (0,) * game.n)
    base = game.base
    if not all(isinstance(f, LatencyFunction) for f in base.latencies):
        return None
    D = lcm(*(Fraction(x).denominator for x in game.p)) if game.p else 1
    L = lcm(*(Fraction(c).denominator for f in base.latencies for c in (f.a, f.b)))
    ws = [int((1 - pu) * D) for pu in game.p]
    wm = [int(pu * D) for pu in game.p]
    ow = [D] * base.n if game.all_malicious else list(ws)
    A = [int(f.a * L) for f in base.latencies]
    BD = [int(f.b * L) * D for f in base.latencies]

    smax = max((len(s) for S in base.strategy_sets for s in S), default=1)
    bound = base.n * D * smax * (max(A, default=0) * (base.n + 1) * D + max(BD, default=0)) + 1
    dtype = np.int64 if bound < _INT64_SAFE else object

    idx = base._index
    inc = []
    for S in base.strategy_sets:
        m = np.zeros((len(S), base.r), dtype=dtype)
        for k, s in enumerate(S):
            for e in set(s):
                m[k, idx[e]] = 1
        inc.append(m)
    return Compiled(
        n=base.n,
        r=base.r,
        D=D,
        inc=inc,
        incT=[m.T.copy() for m in inc],
        ws=ws,
        wm=wm,
        ow=ow,
        A=np.array(A, dtype=dtype),
        BD=np.array(BD, dtype=dtype),
        dtype=dtype,
    )


class Space:
    """A (possibly reduced) box of pure profiles in canonical order.

    ``sel[u]`` and ``mal[u]`` list the strategy indices still allowed for each
    type-agent, ascending.  With ``mal=None`` only selfish digits exist
    (plain congestion-game profiles).
    """

    def __init__(self, sel: Sequence[Sequence[int]], mal: Sequence[Sequence[int]] | None):
        self.sel = [np.asarray(list(s), dtype=np.int64) for s in sel]
        self.mal = None if mal is None else [np.asarray(list(m), dtype=np.int64) for m in mal]
        self.n = len(self.sel)
        slots = []  # (player, is_malicious, allowed values)
        for u in range(self.n):
            if self.mal is not None:
                slots.append((u, True, self.mal[u]))
            slots.append((u, False, self.sel[u]))
        self.slots = slots
        self.radices = [len(v) for _, _, v in slots]
        self.size = prod(self.radices)
        strides = [1] * len(slots)
        for j in range(len(slots) - 2, -1, -1):
            strides[j] = strides[j + 1] * self.radices[j + 1]
        self.strides = strides

    def decode(self, flat: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
        sel, mal = [0] * self.n, [0] * self.n
        for (u, is_mal, vals), stride, radix in zip(self.slots, self.strides, self.radices):
            k = int(vals[(flat // stride) % radix])
            if is_mal:
                mal[u] = k
            else:
                sel[u] = k
        return tuple(sel), tuple(mal)


class Block:
    """A contiguous run of profiles: ``groups`` outer combinations times all
    ``inner`` combinations of the trailing digits."""

    def __init__(self, offset, size, inner, tot, ols, inner_vals, outer_vals, slot_of):
        self.offset = offset
        self.size = size
        self.inner = inner
        self.tot = tot
        self.ols = ols
        self._inner_vals = inner_vals
        self._outer_vals = outer_vals
        self._slot_of = slot_of

    def _digit(self, key, idx):
        where, j = self._slot_of[key]
        if where == "inner":
            return self._inner_vals[j][idx % self.inner]
        return self._outer_vals[j][idx // self.inner]

    def sel(self, u: int, idx: np.ndarray) -> np.ndarray:
        return self._digit((u, False), idx)

    def mal(self, u: int, idx: np.ndarray) -> np.ndarray | None:
        if (u, True) not in self._slot_of:
            return None
        return self._digit((u, True), idx)


def _slot_weights(c: Compiled, u: int, is_mal: bool):
    if is_mal:
        return c.wm[u], 0
    return c.ws[u], c.ow[u]


def iter_blocks(c: Compiled, space: Space, target: int | None = None) -> Iterator[Block]:
    """Walk ``space`` in canonical order, block by block."""
    if space.size == 0:
        return
    target = target or block_size(c)
    split = len(space.slots)
    inner = 1
    while split > 0 and inner * space.radices[split - 1] <= target:
        split -= 1
        inner *= space.radices[split]
    outer_size = space.size // inner
    groups = max(1, target // inner)

    flat = np.arange(inner, dtype=np.int64)
    inner_vals = []
    in_tot = np.zeros((inner, c.r), dtype=c.dtype)
    in_ols = np.zeros((inner, c.r), dtype=c.dtype)
    slot_of = {}
    for j in range(split, len(space.slots)):
        u, is_mal, vals = space.slots[j]
        v = vals[(flat // space.strides[j]) % space.radices[j]]
        slot_of[(u, is_mal)] = ("inner", len(inner_vals))
        inner_vals.append(v)
        wt, wo = _slot_weights(c, u, is_mal)
        if wt:
            in_tot += wt * c.inc[u][v]
        if wo:
            in_ols += wo * c.inc[u][v]
    for j in range(split):
        u, is_mal, _ = space.slots[j]
        slot_of[(u, is_mal)] = ("outer", j)

    for o0 in range(0, outer_size, groups):
        o1 = min(outer_size, o0 + groups)
        ofl = np.arange(o0, o1, dtype=np.int64)
        G = o1 - o0
        out_vals = []
        out_tot = np.zeros((G, c.r), dtype=c.dtype)
        out_ols = np.zeros((G, c.r), dtype=c.dtype)
        for j in range(split):
            u, is_mal, vals = space.slots[j]
            v = vals[(ofl // (space.strides[j] // inner)) % space.radices[j]]
            out_vals.append(v)
            wt, wo = _slot_weights(c, u, is_mal)
            if wt:
                out_tot += wt * c.inc[u][v]
            if wo:
                out_ols += wo * c.inc[u][v]
        tot = (out_tot[:, None, :] + in_tot[None, :, :]).reshape(G * inner, c.r)
        ols = (out_ols[:, None, :] + in_ols[None, :, :]).reshape(G * inner, c.r)
        yield Block(o0 * inner, G * inner, inner, tot, ols, inner_vals, out_vals, slot_of)


def block_size(c: Compiled) -> int:
    return max(256, min(1 << 17, _BLOCK_CELLS // max(1, c.r * 4)))


def _take(a: np.ndarray, k: np.ndarray) -> np.ndarray:
    return np.take_along_axis(a, k[:, None], axis=1)[:, 0]


def selfish_costs(c: Compiled, u: int, sel_u, mal_u, tot) -> np.ndarray:
    """Scaled private cost of every strategy of ``u``, shape (B, |S_u|)."""
    others = tot - c.ws[u] * c.inc[u][sel_u]
    if mal_u is not None and c.wm[u]:
        others -= c.wm[u] * c.inc[u][mal_u]
    G = c.A * (others + c.D) + c.BD
    return G @ c.incT[u]


def malicious_values(c: Compiled, u: int, sel_u, ols) -> np.ndarray:
    """Scaled objective gain of every malicious choice of ``u``, shape (B, |S_u|).

    For affine latencies the objective change caused by moving ``u``'s
    malicious agent is ``p_u`` times the slope-weighted selfish load of the
    other players on the resources entered minus those left, so comparing
    these values is equivalent to comparing social costs.
    """
    Q = c.A * (ols - c.ow[u] * c.inc[u][sel_u])
    return Q @ c.incT[u]


def equilibrium_filter(c: Compiled, block: Block) -> np.ndarray:
    """Indices (within the block) of profiles where every type-agent is satisfied."""
    idx = np.arange(block.size)
    for u in range(c.n):
        if len(idx) == 0:
            return idx
        if c.inc[u].shape[0] < 2:
            continue
        s_u = block.sel(u, idx)
        costs = selfish_costs(c, u, s_u, block.mal(u, idx), block.tot[idx])
        idx = idx[_take(costs, s_u) <= costs.min(axis=1)]
    for u in range(c.n):
        if len(idx) == 0:
            return idx
        m_u = block.mal(u, idx)
        if m_u is None or c.inc[u].shape[0] < 2 or not c.wm[u]:
            continue
        vals = malicious_values(c, u, block.sel(u, idx), block.ols[idx])
        idx = idx[_take(vals, m_u) >= vals.max(axis=1)]
    return idx


def cg_cost_scaled(c: Compiled, block: Block) -> np.ndarray:
    """``n * L * SC`` of plain congestion-game profiles (integer loads)."""
    load = block.tot
    return (load * (c.A * load + c.BD)).sum(axis=1)


# ------------------------------------------------------------------ pruning


def _separable_min(c: Compiled, u: int, coef: np.ndarray, space: Space) -> int:
    """Exact minimum over the other players' allowed choices of
    ``sum_v ws_v * coef . inc(sel_v) + wm_v * coef . inc(mal_v)``."""
    total = 0
    for v in range(c.n):
        if v == u:
            continue
        per = c.inc[v] @ coef
        if c.ws[v]:
            total += c.ws[v] * int(min(per[k] for k in space.sel[v]))
        if space.mal is not None and c.wm[v]:
            total += c.wm[v] * int(min(per[k] for k in space.mal[v]))
    return total


def _objective_min(c: Compiled, u: int, coef: np.ndarray, space: Space) -> int:
    total = 0
    for v in range(c.n):
        if v == u or not c.ow[v]:
            continue
        per = c.inc[v] @ coef
        total += c.ow[v] * int(min(per[k] for k in space.sel[v]))
    return total


def prune(c: Compiled, space: Space, collapse_inert: bool = True) -> Space:
    """Iterated elimination of strictly dominated type-agent strategies.

    A selfish strategy ``k`` is dropped when some ``k2`` is strictly cheaper
    against every remaining completion; a malicious strategy is dropped when
    another strictly raises the objective against every remaining selfish
    completion.  Both tests are exact: for affine latencies the cost
    differences are separable across the other players, so the minimum over
    all completions is a sum of per-player minima.  Malicious agents with
    ``p_u = 0`` have no effect on any payoff; with ``collapse_inert`` they are
    fixed to their first allowed strategy.
    """
    sel = [list(map(int, s)) for s in space.sel]
    mal = None if space.mal is None else [list(map(int, m)) for m in space.mal]
    if mal is not None and collapse_inert:
        for u in range(c.n):
            if not c.wm[u]:
                mal[u] = mal[u][:1]
    changed = True
    while changed:
        changed = False
        cur = Space(sel, mal)
        for u in range(c.n):
            keep = []
            for k in sel[u]:
                dominated = False
                for k2 in sel[u]:
                    if k2 == k:
                        continue
                    diff = c.inc[u][k] - c.inc[u][k2]
                    const = int((diff * (c.A * c.D + c.BD)).sum())
                    if const + _separable_min(c, u, diff * c.A, cur) > 0:
                        dominated = True
                        break
                if not dominated:
                    keep.append(k)
            if len(keep) < len(sel[u]):
                sel[u] = keep
                changed = True
            if mal is None or not c.wm[u]:
                continue
            keep = []
            for k in mal[u]:
                dominated = False
                for k2 in mal[u]:
                    if k2 == k:
                        continue
                    diff = c.inc[u][k2] - c.inc[u][k]
                    if _objective_min(c, u, diff * c.A, cur) > 0:
                        dominated = True
                        break
                if not dominated:
                    keep.append(k)
            if len(keep) < len(mal[u]):
                mal[u] = keep
                changed = True
            if changed:
                cur = Space(sel, mal)
    return Space(sel, mal)


def full_space(game: MaliciousGame | CongestionGame, bayesian: bool = True) -> Space:
    base = game.base if isinstance(game, MaliciousGame) else game
    sel = [range(len(S)) for S in base.strategy_sets]
    mal = [range(len(S)) for S in base.strategy_sets] if bayesian else None
    return Space(sel, mal)
