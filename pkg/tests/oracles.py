"""Brute-force reference implementations used only by the tests.

Nothing here calls the library's enumeration or Moebius code; partitions are
plain lists of frozensets so the oracles stay independent of ``Partition``.
"""
from __future__ import annotations

import itertools
from functools import lru_cache
from math import comb

import numpy as np


def catalan(k: int) -> int:
    return comb(2 * k, k) // (k + 1)


def all_set_partitions(n: int) -> list[tuple[frozenset, ...]]:
    """Every set partition of {1..n}, by inserting n into partitions of n-1."""
    if n == 1:
        return [(frozenset({1}),)]
    out = []
    for p in all_set_partitions(n - 1):
        out.append(p + (frozenset({n}),))
        for k in range(len(p)):
            out.append(p[:k] + (p[k] | {n},) + p[k + 1:])
    return out


def canon(p) -> tuple[tuple[int, ...], ...]:
    return tuple(sorted(tuple(sorted(b)) for b in p))


def crossing(p) -> bool:
    blocks = [sorted(b) for b in p]
    for u, v in itertools.permutations(blocks, 2):
        for a, c in itertools.combinations(u, 2):
            for b, e in itertools.product(v, v):
                if a < b < c < e:
                    return True
    return False


def inc_predicate(p, chi: str) -> bool:
    if crossing(p):
        return False
    for block in p:
        lo, hi = min(block), max(block)
        for w in range(lo + 1, hi):
            if chi[w - 1] == "B" and w not in block:
                return False
    return True


def inc_brute(chi: str) -> list[tuple[tuple[int, ...], ...]]:
    return sorted(canon(p) for p in all_set_partitions(len(chi)) if inc_predicate(p, chi))


def refines(s, p) -> bool:
    return all(any(set(b) <= set(c) for c in p) for b in s)


def segment_sizes(chi: str) -> list[int]:
    n = len(chi)
    cuts = [1] + [k for k in range(2, n) if chi[k - 1] == "B"] + [n]
    if n == 1:
        return [1]
    return [b - a + 1 for a, b in zip(cuts, cuts[1:])]


def moebius_brute(chi: str) -> dict[tuple, int]:
    """``{(sigma, pi): mu}`` over comparable pairs by the defining recursion."""
    elems = inc_brute(chi)
    mu: dict[tuple, int] = {}
    order = sorted(elems, key=lambda p: -len(p))  # finer first
    for s in order:
        above = [p for p in order if refines(s, p)]
        for p in above:
            if p == s:
                mu[(s, p)] = 1
            else:
                mu[(s, p)] = -sum(mu[(s, r)] for r in above if r != p and refines(r, p) and (s, r) in mu)
    return mu


def meet_brute(a, b, chi: str):
    lower = [p for p in inc_brute(chi) if refines(p, a) and refines(p, b)]
    top = [p for p in lower if all(refines(q, p) for q in lower)]
    assert len(top) == 1
    return top[0]


def join_brute(a, b, chi: str):
    upper = [p for p in inc_brute(chi) if refines(a, p) and refines(b, p)]
    bottom = [p for p in upper if all(refines(p, q) for q in upper)]
    assert len(bottom) == 1
    return bottom[0]


def phi_nested(expect, letters: list[tuple], blocks) -> np.ndarray:
    """Partitioned moment by outer-block recursion.

    ``expect`` maps a factor tuple to a ``(d, d)`` array; ``blocks`` is a
    noncrossing partition of ``range(len(letters))`` (0-based).  The block of
    the first letter is evaluated with every gap replaced by its own nested
    value, then multiplied by the value of whatever follows the block.
    """
    n = len(letters)
    first = sorted(next(b for b in blocks if 0 in b))
    last = first[-1]
    factors: list = []
    for a, b in zip(first, first[1:] + [None]):
        factors.extend(letters[a])
        if b is not None and b > a + 1:
            gap = list(range(a + 1, b))
            sub = [frozenset(x - (a + 1) for x in blk) for blk in blocks if min(blk) in gap]
            factors.append(phi_nested(expect, letters[a + 1:b], sub))
    head = expect(tuple(factors))
    if last == n - 1:
        return head
    sub = [frozenset(x - (last + 1) for x in blk) for blk in blocks if min(blk) > last]
    return head @ phi_nested(expect, letters[last + 1:], sub)


def numpy_word_expectation(ops: dict, d: int, factors) -> np.ndarray:
    """``<xi, T xi>`` for dense operators on stacked B-blocks, no truncation tricks."""
    dim = next(iter(ops.values())).shape[0]
    v = np.zeros((dim, d), dtype=complex)
    v[:d] = np.eye(d)
    for f in reversed(factors):
        if isinstance(f, np.ndarray):
            v = np.einsum("ij,kjl->kil", f, v.reshape(-1, d, d)).reshape(-1, d)
        else:
            m = ops[f]
            v = (m.toarray() if hasattr(m, "toarray") else m) @ v
    return v[:d]


@lru_cache(maxsize=None)
def classical_free_cumulant_4(m2: float, m4: float) -> float:
    return m4 - 2 * m2 ** 2
