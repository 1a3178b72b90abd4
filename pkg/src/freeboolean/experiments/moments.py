"""Canonical words and the moment conditions for free-Boolean pairs.

A *simple product* is a product of face operators of one pair; it is
*Boolean* when at least one factor comes from the Boolean face.  Products of
simple products with alternating owners are expanded by centering every
free-only factor, ``A = (A - E(A)) + E(A) 1``; pushing ``E(A)`` into a
neighbour may make the two neighbours share an owner, in which case they fuse
into one simple product.  What is left is a sum of words of six types, keyed
by the pattern of free (``f``) and Boolean (``b``) factors:

==========  ===========
tag         pattern
==========  ===========
``Z0``      empty
``Zf``      ``f+``
``Zb``      ``b+``
``Zfb``     ``f+ b+``
``Zbf``     ``b+ f+``
``Zfbf``    ``f+ b+ f+``
==========  ===========

Any other pattern has a centered free run with Boolean factors on both sides
and is the zero operator; such words are dropped (and can be kept for
inspection with ``keep_zero=True``).
"""
from __future__ import annotations

import re
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from ..bvalued import max_abs
from ..cumulants import ResidualReport
from ..fock import Family, FaceOperator, FockModel

__all__ = [
    "SimpleProduct",
    "CanonicalWord",
    "simple_product",
    "classify_word",
    "word_operator",
    "random_simple_product",
    "random_canonical",
    "random_alternating_owners",
    "boolean_factorization_check",
    "boolean_pair_splitting_check",
    "mixed_vanishing_check",
    "canonical_expectation_checks",
    "classification_check",
    "zero_on_short_inputs",
    "TAGS",
]

TAGS = ("Z0", "Zf", "Zb", "Zfb", "Zbf", "Zfbf")
_PATTERNS = {
    "Zf": re.compile(r"f+"),
    "Zb": re.compile(r"b+"),
    "Zfb": re.compile(r"f+b+"),
    "Zbf": re.compile(r"b+f+"),
    "Zfbf": re.compile(r"f+b+f+"),
}


@dataclass(frozen=True)
class SimpleProduct:
    """A product of face operators of one pair, with its provenance."""

    owner: int
    op: FaceOperator
    boolean: bool
    centered: bool = False
    label: str = ""

    @property
    def kind(self) -> str:
        return "b" if self.boolean else "f"

    def adjoint(self) -> "SimpleProduct":
        return replace(self, op=self.op.adjoint(), label=f"({self.label})*")


def simple_product(family: Family, factors: Sequence) -> SimpleProduct:
    """Multiply handles of one pair (and optional ``B`` coefficients) into a simple product."""
    model = family.model
    owner, boolean, op, names = None, False, None, []
    for f in factors:
        if isinstance(f, np.ndarray):
            term = model.coefficient(f)
            names.append("b")
        else:
            i, face = family.labels[f]
            if owner is not None and i != owner:
                raise ValueError(f"handles {factors!r} belong to different pairs")
            owner = i
            boolean = boolean or face == "B"
            term = family.operators[f]
            names.append(str(f))
        op = term if op is None else op @ term
    if owner is None:
        raise ValueError("a simple product needs at least one handle")
    return SimpleProduct(owner, FaceOperator(op.matrix, op.degree, owner, "B" if boolean else "F"), boolean,
                         label=" ".join(names))


def _check_alternating(products: Sequence[SimpleProduct]) -> None:
    for a, b in zip(products, products[1:]):
        if a.owner == b.owner:
            raise ValueError(f"consecutive simple products share owner {a.owner}; owners must alternate")


def word_operator(model: FockModel, products: Sequence[SimpleProduct]) -> FaceOperator:
    op = model.identity()
    for p in products:
        op = op @ p.op
    return op


@dataclass
class CanonicalWord:
    """``left * A_1 ... A_k * right`` with a type tag."""

    tag: str
    factors: tuple[SimpleProduct, ...]
    left: np.ndarray
    right: np.ndarray | None = None

    @property
    def pattern(self) -> str:
        return "".join(p.kind for p in self.factors)

    @property
    def degree(self) -> int:
        return sum(p.op.degree for p in self.factors)

    def operator(self, model: FockModel) -> FaceOperator:
        op = model.coefficient(self.left)
        for p in self.factors:
            op = op @ p.op
        if self.right is not None:
            op = op @ model.coefficient(self.right)
        return op

    def adjoint(self) -> "CanonicalWord":
        flip = {"Zfb": "Zbf", "Zbf": "Zfb"}
        right = self.left.conj().T
        left = self.right.conj().T if self.right is not None else np.eye(self.left.shape[0], dtype=complex)
        return CanonicalWord(
            flip.get(self.tag, self.tag),
            tuple(p.adjoint() for p in reversed(self.factors)),
            left,
            right,
        )

    def describe(self) -> str:
        return f"{self.tag}[{' | '.join(p.label for p in self.factors)}]"


def tag_of(pattern: str) -> str | None:
    """Type tag of a free/Boolean pattern, or ``None`` for the vanishing patterns."""
    if not pattern:
        return "Z0"
    for tag, rx in _PATTERNS.items():
        if rx.fullmatch(pattern):
            return tag
    return None


def _center(model: FockModel, p: SimpleProduct) -> tuple[SimpleProduct, np.ndarray]:
    mean = model.expectation(p.op)
    op = p.op - model.coefficient(mean)
    return replace(p, op=FaceOperator(op.matrix, p.op.degree, p.owner, "F"), centered=True,
                   label=f"{p.label}~"), mean


def _absorb(model: FockModel, items: list, k: int, mean: np.ndarray, left: np.ndarray):
    # drop items[k] (replaced by its mean) and fold the mean into a neighbour
    items = list(items)
    del items[k]
    if not items:
        return items, left @ mean
    coef = model.coefficient(mean)
    if k < len(items):
        nxt = items[k]
        op = coef @ nxt.op
        items[k] = replace(nxt, op=FaceOperator(op.matrix, nxt.op.degree, nxt.owner, nxt.op.face),
                           centered=False, label=f"E.{nxt.label}")
        if k > 0 and items[k - 1].owner == items[k].owner:
            a, b = items[k - 1], items[k]
            op = a.op @ b.op
            fused = SimpleProduct(a.owner, FaceOperator(op.matrix, op.degree, a.owner, None),
                                  a.boolean or b.boolean, False, f"{a.label} {b.label}")
            items[k - 1 : k + 1] = [fused]
    else:
        prev = items[k - 1]
        op = prev.op @ coef
        items[k - 1] = replace(prev, op=FaceOperator(op.matrix, prev.op.degree, prev.owner, prev.op.face),
                               centered=False, label=f"{prev.label}.E")
    return items, left


def classify_word(
    model: FockModel,
    products: Sequence[SimpleProduct],
    keep_zero: bool = False,
) -> list[CanonicalWord]:
    """Expand ``A_1 ... A_m`` into canonical words by centering free-only factors.

    The returned words sum to the original operator exactly.  Words of a
    vanishing pattern are omitted unless ``keep_zero`` (then tagged ``"zero"``).
    """
    products = list(products)
    _check_alternating(products)
    eye = np.eye(model.d, dtype=complex)
    out: list[CanonicalWord] = []
    stack = [(products, eye)]
    while stack:
        items, left = stack.pop()
        k = next((j for j, p in enumerate(items) if not p.boolean and not p.centered), None)
        if k is None:
            tag = tag_of("".join(p.kind for p in items))
            if tag is None:
                if keep_zero:
                    out.append(CanonicalWord("zero", tuple(items), left))
                continue
            out.append(CanonicalWord(tag, tuple(items), left))
            continue
        centered, mean = _center(model, items[k])
        with_center = list(items)
        with_center[k] = centered
        stack.append(_absorb(model, items, k, mean, left))
        stack.append((with_center, left))
    return out


# random instances -------------------------------------------------------------


def random_alternating_owners(rng: np.random.Generator, indices: Sequence[int], m: int) -> list[int]:
    owners = [int(rng.choice(indices))]
    for _ in range(m - 1):
        owners.append(int(rng.choice([i for i in indices if i != owners[-1]])))
    return owners


def _random_b(rng: np.random.Generator, d: int) -> np.ndarray:
    return (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)


def random_simple_product(
    family: Family,
    owner: int,
    rng: np.random.Generator,
    kind: str,
    length: int = 1,
    coefficients: bool = True,
) -> SimpleProduct:
    """Random simple product of ``length`` handles; ``kind`` is ``"f"`` (free only) or ``"b"`` (Boolean)."""
    free = family.handles(owner, "F")
    both = family.handles(owner)
    if kind == "f":
        picks = [str(rng.choice(free)) for _ in range(length)]
    elif kind == "b":
        picks = [str(rng.choice(both)) for _ in range(length)]
        if not any(family.labels[h][1] == "B" for h in picks):
            picks[int(rng.integers(length))] = str(rng.choice(family.handles(owner, "B")))
    else:
        raise ValueError(f"kind must be 'f' or 'b', got {kind!r}")
    factors: list = []
    for j, h in enumerate(picks):
        if j and coefficients:
            factors.append(_random_b(rng, family.model.d))
        factors.append(h)
    return simple_product(family, factors)


def random_canonical(
    family: Family,
    tag: str,
    rng: np.random.Generator,
    lengths: Sequence[int],
    owners: Sequence[int] | None = None,
) -> CanonicalWord:
    """A random canonical word of the given tag with run lengths ``lengths``.

    ``lengths`` has one entry per run of the tag's pattern (e.g. two for
    ``Zfb``).  Every factor has a single handle, so the degree is
    ``sum(lengths)``.
    """
    model = family.model
    d = model.d
    if tag == "Z0":
        return CanonicalWord("Z0", (), _random_b(rng, d))
    runs = {"Zf": "f", "Zb": "b", "Zfb": "fb", "Zbf": "bf", "Zfbf": "fbf"}[tag]
    if len(lengths) != len(runs):
        raise ValueError(f"{tag} needs {len(runs)} run lengths")
    pattern = "".join(k * n for k, n in zip(runs, lengths))
    if owners is None:
        owners = random_alternating_owners(rng, model.indices, len(pattern))
    factors = []
    for kind, i in zip(pattern, owners):
        p = random_simple_product(family, i, rng, kind)
        if kind == "f":
            p, _ = _center(model, p)
        factors.append(p)
    return CanonicalWord(tag, tuple(factors), _random_b(rng, d))


def _random_element(family: Family, rng: np.random.Generator, max_degree: int) -> FaceOperator:
    """Random product of simple products (owners need not alternate), degree <= max_degree."""
    model = family.model
    op = model.coefficient(_random_b(rng, model.d))
    for _ in range(int(rng.integers(1, max_degree + 1))):
        i = int(rng.choice(model.indices))
        op = op @ random_simple_product(family, i, rng, str(rng.choice(["f", "b"]))).op
    return op


# checks ---------------------------------------------------------------------


def _prod_E(model: FockModel, products: Sequence[SimpleProduct]) -> np.ndarray:
    out = np.eye(model.d, dtype=complex)
    for p in products:
        out = out @ model.expectation(p.op)
    return out


def boolean_factorization_check(
    family: Family,
    instances: int,
    seed: int,
    max_m: int = 5,
    tolerance: float | None = None,
) -> ResidualReport:
    """``|E(A_1 ... A_m) - E(A_1) ... E(A_m)|`` for alternating Boolean products."""
    model = family.model
    rng = np.random.default_rng(seed)
    report = ResidualReport("boolean_factorization", tolerance=tolerance)
    for t in range(instances):
        m = int(rng.integers(1, max_m + 1))
        owners = random_alternating_owners(rng, model.indices, m)
        budget = model.depth - m
        prods = []
        for i in owners:
            extra = int(rng.integers(0, 2)) if budget > 0 else 0
            budget -= extra
            prods.append(random_simple_product(family, i, rng, "b", 1 + extra))
        lhs = model.expectation(*[p.op for p in prods])
        report.record(max_abs(lhs - _prod_E(model, prods)), f"#{t} m={m} owners={owners}")
    return report


def boolean_pair_splitting_check(family: Family, instances: int, seed: int, tolerance: float | None = None) -> ResidualReport:
    """``|E(B_1 B_2 A) - E(B_1) E(B_2 A)|`` for Boolean ``B_1, B_2`` of different pairs and random ``A``."""
    model = family.model
    rng = np.random.default_rng(seed)
    report = ResidualReport("boolean_pair_splitting", tolerance=tolerance)
    for t in range(instances):
        i, j = random_alternating_owners(rng, model.indices, 2)
        b1 = random_simple_product(family, i, rng, "b", int(rng.integers(1, 3)))
        b2 = random_simple_product(family, j, rng, "b", int(rng.integers(1, 3)))
        a = _random_element(family, rng, max(1, model.depth - b1.op.degree - b2.op.degree))
        lhs = model.expectation(b1.op, b2.op, a)
        rhs = model.expectation(b1.op) @ model.expectation(b2.op, a)
        report.record(max_abs(lhs - rhs), f"#{t} owners=({i},{j})")
    return report


def zero_on_short_inputs(model: FockModel, op: FaceOperator) -> float:
    """Max entry of ``op`` on input slots short enough that no truncation interferes."""
    limit = model.depth - op.degree
    if limit < 0:
        raise ValueError(f"operator of degree {op.degree} exceeds depth {model.depth}")
    cols = np.repeat(model.slot_length() <= limit, model.d)
    m = op.matrix[:, np.flatnonzero(cols)]
    return max_abs(m.toarray() if hasattr(m, "toarray") else m)


def _vanishing_instance(family: Family, rng: np.random.Generator, case: str):
    """Products satisfying the centered-free-run hypothesis; ``case`` places the run."""
    model = family.model
    run = int(rng.integers(1, 3))
    before = {"interior": int(rng.integers(1, 3)), "left": 0, "right": int(rng.integers(1, 3)), "whole": 0}[case]
    after = {"interior": int(rng.integers(1, 3)), "left": int(rng.integers(1, 3)), "right": 0, "whole": 0}[case]
    m = before + run + after
    while m > model.depth - 1 and m > 3:
        if after > 1:
            after -= 1
        elif before > 1:
            before -= 1
        else:
            run -= 1
        m = before + run + after
    owners = random_alternating_owners(rng, model.indices, m)
    prods = []
    for k, i in enumerate(owners):
        if before <= k < before + run:
            p, _ = _center(model, random_simple_product(family, i, rng, "f"))
        elif k == before - 1 or k == before + run:
            p = random_simple_product(family, i, rng, "b")
        else:
            p = random_simple_product(family, i, rng, str(rng.choice(["f", "b"])))
        prods.append(p)
    return prods, before, run


def mixed_vanishing_check(
    family: Family,
    instances: int,
    seed: int,
    tolerance: float | None = None,
) -> dict[str, ResidualReport]:
    """Expectation of words with a centered free run flanked by Boolean products or the word ends.

    Returns one report per placement of the run (``interior``, ``left``,
    ``right``, ``whole``) plus ``operator_zero``: for interior runs the
    operator itself vanishes, checked on every input slot that the
    truncation cannot reach.
    """
    model = family.model
    rng = np.random.default_rng(seed)
    cases = ("interior", "left", "right", "whole")
    reports = {c: ResidualReport(f"mixed_vanishing_{c}", tolerance=tolerance) for c in cases}
    reports["operator_zero"] = ResidualReport("mixed_vanishing_operator_zero", tolerance=tolerance)
    for t in range(instances):
        for case in cases:
            prods, before, run = _vanishing_instance(family, rng, case)
            value = model.expectation(*[p.op for p in prods])
            label = f"#{t} pattern={''.join(p.kind for p in prods)}"
            reports[case].record(max_abs(value), label)
            if case == "interior":
                reports["operator_zero"].record(zero_on_short_inputs(model, word_operator(model, prods)), label)
    return reports


def canonical_expectation_checks(
    family: Family,
    instances: int,
    seed: int,
    tolerance: float | None = None,
) -> dict[str, ResidualReport]:
    """``E(Z_fb A)``, ``E(B Z_bf)``, ``E(Z_fbf A)``, ``E(B Z_fbf)`` and ``E(Z)`` for non-Boolean types."""
    model = family.model
    rng = np.random.default_rng(seed)
    names = ("Zfb_A", "B_Zbf", "Zfbf_A", "B_Zfbf", "E_Zf", "E_Zfb", "E_Zbf", "E_Zfbf")
    reports = {n: ResidualReport(f"canonical_expectation_{n}", tolerance=tolerance) for n in names}
    half = model.depth
    for t in range(instances):
        lens = {
            "Zf": [int(rng.integers(1, 4))],
            "Zfb": [int(rng.integers(1, 3)), int(rng.integers(1, 3))],
            "Zbf": [int(rng.integers(1, 3)), int(rng.integers(1, 3))],
            "Zfbf": [1, int(rng.integers(1, 3)), 1],
        }
        words = {tag: random_canonical(family, tag, rng, ls) for tag, ls in lens.items()}
        ops = {tag: w.operator(model) for tag, w in words.items()}
        for tag in ("Zf", "Zfb", "Zbf", "Zfbf"):
            reports[f"E_{tag}"].record(max_abs(model.expectation(ops[tag])), f"#{t} {words[tag].describe()}")
        a = _random_element(family, rng, max(1, half - 1))
        b = _random_element(family, rng, max(1, half - 1))
        reports["Zfb_A"].record(max_abs(model.expectation(ops["Zfb"], a)), f"#{t}")
        reports["B_Zbf"].record(max_abs(model.expectation(b, ops["Zbf"])), f"#{t}")
        reports["Zfbf_A"].record(max_abs(model.expectation(ops["Zfbf"], a)), f"#{t}")
        reports["B_Zfbf"].record(max_abs(model.expectation(b, ops["Zfbf"])), f"#{t}")
    return reports


def classification_check(
    family: Family,
    instances: int,
    seed: int,
    max_m: int = 4,
    tolerance: float | None = None,
) -> dict[str, ResidualReport]:
    """``classify_word`` on random alternating words.

    ``sum_back`` compares the sum of the produced words with the original
    operator on untruncated inputs; ``zero_mean`` checks that every produced
    word of type ``Zf``, ``Zfb``, ``Zbf`` or ``Zfbf`` has zero expectation;
    ``dropped_zero`` checks that the discarded words vanish.
    """
    model = family.model
    rng = np.random.default_rng(seed)
    reports = {
        "sum_back": ResidualReport("classify_sum_back", tolerance=tolerance),
        "zero_mean": ResidualReport("classify_zero_mean", tolerance=tolerance),
        "dropped_zero": ResidualReport("classify_dropped_zero", tolerance=tolerance),
    }
    tags_seen: dict[str, int] = {}
    for t in range(instances):
        m = int(rng.integers(1, max_m + 1))
        owners = random_alternating_owners(rng, model.indices, m)
        prods = [random_simple_product(family, i, rng, str(rng.choice(["f", "b"]))) for i in owners]
        original = word_operator(model, prods)
        words = classify_word(model, prods, keep_zero=True)
        total = None
        for w in words:
            op = w.operator(model)
            total = op if total is None else total + op
            tags_seen[w.tag] = tags_seen.get(w.tag, 0) + 1
            if w.tag == "zero":
                reports["dropped_zero"].record(zero_on_short_inputs(model, op), f"#{t} {w.describe()}")
            elif w.tag not in ("Z0", "Zb"):
                reports["zero_mean"].record(max_abs(model.expectation(op)), f"#{t} {w.describe()}")
        diff = FaceOperator(total.matrix - original.matrix, original.degree)
        reports["sum_back"].record(zero_on_short_inputs(model, diff), f"#{t} m={m}")
    reports["sum_back"].details = {"tags": dict(sorted(tags_seen.items()))}
    return reports
