"""Independent reference computations the tests compare against.

Nothing here imports the engine's sampling code: probabilities are
obtained by brute-force enumeration or exact rational arithmetic.
"""
from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from itertools import combinations, product
from math import comb


def enumerate_match(contents: dict, lhs: dict) -> Fraction:
    """Chance that a uniform |lhs|-subset of the (labelled) objects equals lhs.

    Every molecule gets its own identity and all subsets are listed.
    """
    objs = [o for o, n in sorted(contents.items()) for _ in range(n)]
    k = sum(lhs.values())
    if k > len(objs):
        return Fraction(0)
    hits = total = 0
    for pick in combinations(range(len(objs)), k):
        total += 1
        drawn: dict = {}
        for i in pick:
            drawn[objs[i]] = drawn.get(objs[i], 0) + 1
        hits += drawn == {o: n for o, n in lhs.items() if n}
    return Fraction(hits, total)


def boolean_truth_table(fn, arity):
    return {bits: fn(*bits) for bits in product((0, 1), repeat=arity)}


def _hyper(counts: dict, lhs: dict, total: int) -> Fraction:
    k = sum(lhs.values())
    if k > total:
        return Fraction(0)
    fav = 1
    for s, n in lhs.items():
        fav *= comb(counts.get(s, 0), n)
    return Fraction(fav, comb(total, k))


def first_firing(counts: dict, logic: list, deletions: list) -> dict:
    """Outcome distribution of a one-region race between logic and deletion rules.

    ``logic`` holds ``(lhs, weight, result)`` and ``deletions`` holds
    ``(species, weight)`` for ``species^2 -> species``. Returns the exact
    probabilities that the first logic rule to fire has each ``result``,
    plus ``None`` for the chain dying (no logic rule can ever fire).
    """
    species = sorted(counts)
    weight = sum(w for _, w, _ in logic) + sum(w for _, w in deletions)

    @lru_cache(maxsize=None)
    def solve(state):
        c = dict(zip(species, state))
        total = sum(state)
        if not any(all(c.get(s, 0) >= n for s, n in lhs.items()) for lhs, _, _ in logic):
            return ((None, Fraction(1)),)
        moves = []
        for lhs, w, res in logic:
            p = Fraction(w, weight) * _hyper(c, lhs, total)
            if p:
                moves.append((p, res, None))
        for s, w in deletions:
            p = Fraction(w, weight) * _hyper(c, {s: 2}, total)
            if p:
                nxt = tuple(v - (sp == s) for sp, v in zip(species, state))
                moves.append((p, None, nxt))
        go = sum(p for p, _, _ in moves)
        out: dict = {}
        for p, res, nxt in moves:
            if nxt is None:
                out[res] = out.get(res, 0) + p / go
            else:
                for r, q in solve(nxt):
                    out[r] = out.get(r, 0) + p / go * q
        return tuple(sorted(out.items(), key=lambda kv: str(kv[0])))

    return dict(solve(tuple(counts[s] for s in species)))
