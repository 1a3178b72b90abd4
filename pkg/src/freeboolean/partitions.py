"""Set partitions of ``{1..n}`` and their structural predicates.

Partitions are immutable values kept in canonical form: every block is a
sorted tuple and blocks are ordered by their minimum.  Equality, hashing and
ordering all go through that canonical form, so two partitions built from
differently ordered input compare equal.

The text encoding used throughout the package writes blocks as comma lists
separated by slashes, e.g. ``"1,3,4,7/2/5,6/8,9/10"``.
"""
from __future__ import annotations

from functools import lru_cache
from typing import Hashable, Iterable, Iterator, Sequence

__all__ = [
    "Partition",
    "is_noncrossing",
    "is_interval_block",
    "is_inner_block",
    "is_interval_partition",
    "kernel",
    "leq",
    "restrict",
    "set_partitions",
    "noncrossing_partitions",
    "parse_chi",
    "chi_restrict",
]


class Partition:
    """A partition of ``{1, ..., n}``.

    Parameters
    ----------
    blocks : iterable of iterables of int
        Disjoint nonempty blocks whose union is ``{1..n}``.
    n : int, optional
        Size of the ground set.  Inferred from the blocks when omitted.
    """

    __slots__ = ("_blocks", "_n", "_labels")

    def __init__(self, blocks: Iterable[Iterable[int]], n: int | None = None):
        canon = sorted((tuple(sorted(int(x) for x in b)) for b in blocks), key=lambda b: b[:1])
        if any(len(b) == 0 for b in canon):
            raise ValueError("partition blocks must be nonempty")
        elements = [x for b in canon for x in b]
        if n is None:
            n = max(elements) if elements else 0
        if n < 1:
            raise ValueError("ground set must be {1..n} with n >= 1")
        if sorted(elements) != list(range(1, n + 1)):
            raise ValueError(f"blocks {canon} do not partition {{1..{n}}}")
        self._blocks: tuple[tuple[int, ...], ...] = tuple(canon)
        self._n = n
        labels = [0] * n
        for k, b in enumerate(canon):
            for x in b:
                labels[x - 1] = k
        self._labels = tuple(labels)

    @classmethod
    def from_labels(cls, labels: Sequence[Hashable]) -> "Partition":
        """Partition grouping positions with equal labels (1-based positions)."""
        groups: dict[Hashable, list[int]] = {}
        for pos, lab in enumerate(labels, start=1):
            groups.setdefault(lab, []).append(pos)
        return cls(groups.values(), n=len(labels))

    @classmethod
    def from_string(cls, text: str) -> "Partition":
        text = text.strip()
        if not text:
            raise ValueError("empty partition string")
        try:
            blocks = [[int(x) for x in part.split(",")] for part in text.split("/")]
        except ValueError as exc:
            raise ValueError(f"malformed partition string {text!r}") from exc
        return cls(blocks)

    @classmethod
    def zero(cls, n: int) -> "Partition":
        return cls([[i] for i in range(1, n + 1)], n=n)

    @classmethod
    def one(cls, n: int) -> "Partition":
        return cls([range(1, n + 1)], n=n)

    @property
    def n(self) -> int:
        return self._n

    @property
    def blocks(self) -> tuple[tuple[int, ...], ...]:
        return self._blocks

    @property
    def labels(self) -> tuple[int, ...]:
        """Block index of each element ``1..n`` (restricted growth string)."""
        return self._labels

    def block_of(self, x: int) -> tuple[int, ...]:
        return self._blocks[self._labels[x - 1]]

    def same_block(self, x: int, y: int) -> bool:
        return self._labels[x - 1] == self._labels[y - 1]

    def __len__(self) -> int:
        return len(self._blocks)

    def __iter__(self) -> Iterator[tuple[int, ...]]:
        return iter(self._blocks)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Partition):
            return NotImplemented
        return self._n == other._n and self._blocks == other._blocks

    def __hash__(self) -> int:
        return hash((self._n, self._blocks))

    def __lt__(self, other: "Partition") -> bool:
        return self.sort_key() < other.sort_key()

    def sort_key(self) -> tuple:
        return (self._n, self._blocks)

    def __str__(self) -> str:
        return "/".join(",".join(str(x) for x in b) for b in self._blocks)

    def __repr__(self) -> str:
        return f"Partition({str(self)!r})"


def is_noncrossing(p: Partition) -> bool:
    """True iff no ``v1 < w1 < v2 < w2`` with ``v1~v2``, ``w1~w2`` in different blocks."""
    lab = p.labels
    # stack-based check: scanning left to right, a block may only be
    # re-entered if every block opened after it has been closed
    last = {}
    for k, b in enumerate(p.blocks):
        last[k] = b[-1]
    stack: list[int] = []
    for x in range(1, p.n + 1):
        k = lab[x - 1]
        if stack and stack[-1] == k:
            pass
        elif k in stack:
            return False
        else:
            stack.append(k)
        if last[k] == x:
            stack.pop()
    return True


def _check_block(p: Partition, block_index: int) -> tuple[int, ...]:
    if not 0 <= block_index < len(p):
        raise IndexError(f"block index {block_index} out of range for {len(p)} blocks")
    return p.blocks[block_index]


def is_interval_block(p: Partition, block_index: int) -> bool:
    b = _check_block(p, block_index)
    return b[-1] - b[0] + 1 == len(b)


def is_inner_block(p: Partition, block_index: int) -> bool:
    """True iff another block has elements on both sides of the whole block."""
    b = _check_block(p, block_index)
    lo, hi = b[0], b[-1]
    for k, other in enumerate(p.blocks):
        if k == block_index:
            continue
        if any(v < lo for v in other) and any(v > hi for v in other):
            return True
    return False


def is_interval_partition(p: Partition) -> bool:
    return all(is_interval_block(p, k) for k in range(len(p)))


def kernel(word: Sequence[Hashable]) -> Partition:
    """Partition whose blocks are the level sets of ``word``."""
    if len(word) == 0:
        raise ValueError("kernel of an empty word is undefined")
    return Partition.from_labels(word)


def leq(s: Partition, p: Partition) -> bool:
    """Reversed refinement order: every block of ``s`` lies inside a block of ``p``."""
    if s.n != p.n:
        raise ValueError(f"ground sets differ: {s.n} != {p.n}")
    pl = p.labels
    for b in s.blocks:
        k = pl[b[0] - 1]
        if any(pl[x - 1] != k for x in b[1:]):
            return False
    return True


def restrict(p: Partition, subset: Sequence[int]) -> Partition:
    """Restriction of ``p`` to ``subset``, relabelled to ``{1..len(subset)}``."""
    subset = sorted(subset)
    if not subset:
        raise ValueError("cannot restrict to the empty set")
    if len(set(subset)) != len(subset) or subset[0] < 1 or subset[-1] > p.n:
        raise ValueError(f"subset {subset} not within {{1..{p.n}}}")
    lab = p.labels
    return Partition.from_labels([lab[x - 1] for x in subset])


def set_partitions(n: int) -> Iterator[Partition]:
    """All set partitions of ``{1..n}`` via restricted growth strings."""
    if n < 1:
        raise ValueError("n must be >= 1")

    def grow(prefix: list[int], top: int) -> Iterator[list[int]]:
        if len(prefix) == n:
            yield prefix
            return
        for v in range(top + 2):
            yield from grow(prefix + [v], max(top, v))

    for rgs in grow([0], 0):
        yield Partition.from_labels(rgs)


@lru_cache(maxsize=None)
def _nc_blocks(lo: int, hi: int) -> tuple[tuple[tuple[int, ...], ...], ...]:
    # noncrossing partitions of the integer range [lo, hi], as block tuples;
    # recursion on the block containing lo
    if lo > hi:
        return ((),)
    out = []
    rest = list(range(lo + 1, hi + 1))
    # choose the other members of lo's block; gaps between consecutive
    # members (and after the last one) are filled independently
    for mask in range(1 << len(rest)):
        members = [lo] + [rest[k] for k in range(len(rest)) if mask >> k & 1]
        gaps = []
        for a, b in zip(members, members[1:] + [hi + 1]):
            gaps.append(_nc_blocks(a + 1, b - 1))
        partial = [(tuple(members),)]
        for g in gaps:
            partial = [acc + blocks for acc in partial for blocks in g]
        out.extend(partial)
    return tuple(out)


@lru_cache(maxsize=None)
def _noncrossing_cached(n: int) -> tuple[Partition, ...]:
    return tuple(sorted(Partition(blocks, n=n) for blocks in _nc_blocks(1, n)))


def noncrossing_partitions(n: int) -> tuple[Partition, ...]:
    """``NC(n)`` in canonical order, built by decomposing on the block of 1."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return _noncrossing_cached(n)


def parse_chi(chi: str | Sequence[str]) -> str:
    """Validate a type map over ``{F, B}`` and return it as a string."""
    s = "".join(chi).strip().upper() if not isinstance(chi, str) else chi.strip().upper()
    if not s:
        raise ValueError("chi must be nonempty")
    bad = set(s) - {"F", "B"}
    if bad:
        raise ValueError(f"chi may only contain F and B, got {sorted(bad)}")
    return s


def chi_restrict(chi: str, subset: Sequence[int]) -> str:
    return "".join(chi[x - 1] for x in sorted(subset))
