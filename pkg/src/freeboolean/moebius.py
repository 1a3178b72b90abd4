"""Incidence algebra of ``INC(chi)``: delta, zeta, convolution and Möbius.

Values are exact (Python ints or :class:`fractions.Fraction`).  The Möbius
function is available two ways: :func:`moebius_oracle` inverts zeta
recursively over the whole lattice, and :func:`moebius_product` evaluates the
product formula over segments and blocks using ``NC`` Möbius values.  The two
must agree on every comparable pair; the test suite checks this exhaustively.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from .inc import decompose, enumerate_inc, inc_context, is_inc
from .partitions import (
    Partition,
    chi_restrict,
    is_noncrossing,
    leq,
    noncrossing_partitions,
    parse_chi,
    restrict,
)

__all__ = [
    "IncidenceFunction",
    "comparability_matrix",
    "delta_function",
    "zeta_function",
    "convolve",
    "moebius_oracle",
    "moebius_matrix",
    "moebius_nc",
    "moebius_nc_kreweras",
    "moebius_product",
    "moebius_by_segments",
    "moebius_by_blocks",
]


@lru_cache(maxsize=256)
def comparability_matrix(chi: str) -> np.ndarray:
    """Boolean matrix ``Z[a, b] = elements[a] <= elements[b]`` over ``enumerate_inc(chi)``."""
    elems = enumerate_inc(chi)
    labels = np.array([e.labels for e in elems])
    m = len(elems)
    z = np.zeros((m, m), dtype=bool)
    for a, s in enumerate(elems):
        # s <= p iff p's labels are constant on every block of s
        ok = np.ones(m, dtype=bool)
        for block in s.blocks:
            if len(block) > 1:
                cols = labels[:, [x - 1 for x in block]]
                ok &= (cols == cols[:, :1]).all(axis=1)
        z[a] = ok
    z.setflags(write=False)
    return z


@dataclass
class IncidenceFunction:
    """A function on comparable pairs ``(sigma, pi)`` of ``INC(chi)``.

    ``matrix[a, b]`` holds the value on ``(elements[a], elements[b])``; entries
    on incomparable pairs are structurally zero and never read.
    """

    chi: str
    elements: tuple[Partition, ...]
    matrix: np.ndarray  # object dtype, exact entries
    index: dict[Partition, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.index = {p: k for k, p in enumerate(self.elements)}

    def __call__(self, sigma: Partition, pi: Partition):
        a, b = self.index[sigma], self.index[pi]
        if not comparability_matrix(self.chi)[a, b]:
            raise ValueError(f"{sigma} is not below {pi}")
        return self.matrix[a, b]

    @property
    def table(self) -> dict[tuple[Partition, Partition], object]:
        z = comparability_matrix(self.chi)
        return {
            (self.elements[a], self.elements[b]): self.matrix[a, b]
            for a, b in zip(*np.nonzero(z))
        }

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, IncidenceFunction):
            return NotImplemented
        return self.chi == other.chi and bool((self.matrix == other.matrix).all())


def _from_rule(chi: str, rule: Callable[[int, int], object]) -> IncidenceFunction:
    chi = parse_chi(chi)
    elems = enumerate_inc(chi)
    z = comparability_matrix(chi)
    m = len(elems)
    mat = np.zeros((m, m), dtype=object)
    for a, b in zip(*np.nonzero(z)):
        mat[a, b] = rule(a, b)
    return IncidenceFunction(chi, elems, mat)


def delta_function(chi: str) -> IncidenceFunction:
    return _from_rule(chi, lambda a, b: int(a == b))


def zeta_function(chi: str) -> IncidenceFunction:
    return _from_rule(chi, lambda a, b: 1)


def incidence_from_table(chi: str, values: dict[tuple[Partition, Partition], object]) -> IncidenceFunction:
    """Build an incidence function from a ``{(sigma, pi): value}`` mapping (missing pairs are 0)."""
    elems = enumerate_inc(chi)
    return _from_rule(chi, lambda a, b: values.get((elems[a], elems[b]), 0))


def convolve(f: IncidenceFunction, g: IncidenceFunction) -> IncidenceFunction:
    """``(f * g)(sigma, pi) = sum over sigma <= rho <= pi of f(sigma, rho) g(rho, pi)``."""
    if f.chi != g.chi:
        raise ValueError(f"cannot convolve over different type maps {f.chi!r} and {g.chi!r}")
    z = comparability_matrix(f.chi)
    fm = np.where(z, f.matrix, 0)
    gm = np.where(z, g.matrix, 0)
    out = fm.dot(gm)
    out = np.where(z, out, 0).astype(object)
    return IncidenceFunction(f.chi, f.elements, out)


def _rank_order(elems: tuple[Partition, ...]) -> list[int]:
    # finer partitions first: a linear extension of the order
    return sorted(range(len(elems)), key=lambda k: -len(elems[k]))


@lru_cache(maxsize=256)
def _oracle_matrix(chi: str) -> np.ndarray:
    elems = enumerate_inc(chi)
    z = comparability_matrix(chi)
    order = _rank_order(elems)
    m = len(elems)
    zo = z[np.ix_(order, order)].astype(np.int64)
    mu = np.zeros((m, m), dtype=np.int64)
    for s in range(m):
        mu[s, s] = 1
        for p in range(s + 1, m):
            if not zo[s, p]:
                continue
            # mu(s, p) = -sum_{s <= r < p} mu(s, r); mu(s, r) is zero unless s <= r
            mu[s, p] = -int(mu[s, s:p] @ zo[s:p, p])
    inv = np.empty(m, dtype=np.int64)
    inv[order] = np.arange(m)
    out = mu[np.ix_(inv, inv)]
    out.setflags(write=False)
    return out


def moebius_matrix(chi: str) -> np.ndarray:
    """Integer Möbius matrix of ``INC(chi)`` in :func:`enumerate_inc` order (read-only)."""
    return _oracle_matrix(parse_chi(chi))


def moebius_oracle(chi: str) -> IncidenceFunction:
    """Möbius function by recursive inversion of zeta over the whole lattice."""
    chi = parse_chi(chi)
    mat = _oracle_matrix(chi).astype(object)
    return IncidenceFunction(chi, enumerate_inc(chi), mat)


@lru_cache(maxsize=None)
def _moebius_nc_to_top(n: int) -> dict[Partition, int]:
    elems = enumerate_inc("F" * n)
    top = elems.index(Partition.one(n))
    col = _oracle_matrix("F" * n)[:, top]
    return {p: int(v) for p, v in zip(elems, col)}


def moebius_nc(sigma: Partition, n: int | None = None) -> int:
    """``mu_NC(sigma, 1_n)`` by inversion on the noncrossing lattice."""
    n = sigma.n if n is None else n
    if sigma.n != n:
        raise ValueError(f"sigma lives on {sigma.n} points, not {n}")
    if not is_noncrossing(sigma):
        raise ValueError(f"{sigma} is not noncrossing")
    return _moebius_nc_to_top(n)[sigma]


def _catalan(k: int) -> int:
    from math import comb

    return comb(2 * k, k) // (k + 1)


def kreweras_complement(sigma: Partition) -> Partition:
    """Kreweras complement of a noncrossing partition (interleaving construction)."""
    n = sigma.n
    # points 1..n are placed at 2k-1, primed points at 2k; the complement is the
    # coarsest partition of the primed points that stays noncrossing with sigma
    best = None
    for cand in noncrossing_partitions(n):
        labels = []
        for k in range(n):
            labels.append(("s", sigma.labels[k]))
            labels.append(("k", cand.labels[k]))
        if is_noncrossing(Partition.from_labels(labels)):
            if best is None or len(cand) < len(best):
                best = cand
    return best


def moebius_nc_kreweras(sigma: Partition) -> int:
    """Closed form ``prod over blocks V of K(sigma) of (-1)^{|V|-1} Cat(|V|-1)``."""
    out = 1
    for block in kreweras_complement(sigma).blocks:
        k = len(block) - 1
        out *= (-1) ** k * _catalan(k)
    return out


def _check_pair(sigma: Partition, pi: Partition, chi: str) -> None:
    if not (is_inc(sigma, chi) and is_inc(pi, chi)):
        raise ValueError(f"both {sigma} and {pi} must lie in INC({chi})")
    if not leq(sigma, pi):
        raise ValueError(f"{sigma} is not below {pi}")


def moebius_product(sigma: Partition, pi: Partition, chi: str) -> int:
    """Triple product over segments and blocks of ``NC`` Möbius values."""
    chi = parse_chi(chi)
    _check_pair(sigma, pi, chi)
    ctx = inc_context(chi)
    out = 1
    for i in range(len(ctx.segments)):
        seg = set(ctx.segment_range(i))
        for block in pi.blocks:
            piece = [x for x in block if x in seg]
            if not piece:
                continue
            out *= moebius_nc(restrict(sigma, piece))
    return out


def moebius_by_segments(sigma: Partition, pi: Partition, chi: str) -> int:
    """First factorisation: product of segment-local ``NC`` Möbius values."""
    chi = parse_chi(chi)
    _check_pair(sigma, pi, chi)
    ctx = inc_context(chi)
    out = 1
    for s_i, p_i in zip(decompose(sigma, ctx), decompose(pi, ctx)):
        fn = moebius_oracle("F" * s_i.n)
        out *= fn(s_i, p_i)
    return out


def moebius_by_blocks(sigma: Partition, pi: Partition, chi: str) -> int:
    """Second factorisation: product over blocks ``V`` of ``mu(sigma|V, 1_V)``."""
    chi = parse_chi(chi)
    _check_pair(sigma, pi, chi)
    out = 1
    for block in pi.blocks:
        sub_chi = chi_restrict(chi, block)
        fn = moebius_oracle(sub_chi)
        out *= fn(restrict(sigma, block), Partition.one(len(block)))
    return out
