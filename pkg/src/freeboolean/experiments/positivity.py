"""Positivity of the joint expectation and the Boolean-run reductions.

``Psi`` collapses all but the last Boolean factor of a leading Boolean run
through ``E``; ``Psi*`` collapses all but the first Boolean factor of a
trailing run.  For a random ``Z`` written as a ``B``-combination of canonical
words these give the chain

    E[Z Z*] = E[Z_1 Z_1*] = E[Z_2 Z_2*]

where ``Z_1`` drops the ``Zfb`` and ``Zfbf`` words and ``Z_2`` applies ``Psi``
to the ``Zb`` and ``Zbf`` words.  :func:`positivity_check` also evaluates
``E[Z Z*]`` a second way, from the per-pair moments alone through the
free-Boolean moment formula, and reports the smallest eigenvalue of both.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..bvalued import max_abs
from ..cumulants import ResidualReport, star_formula
from ..fock import FaceOperator, Family, FockModel
from .moments import (
    CanonicalWord,
    _center,
    _random_b,
    _random_element,
    random_alternating_owners,
    random_canonical,
    random_simple_product,
)

__all__ = [
    "psi",
    "psi_star",
    "psi_reduce",
    "boolean_run_collapse_left_check",
    "boolean_run_collapse_right_check",
    "adjoint_compatibility_check",
    "pairing_check",
    "positivity_check",
    "PositivityResult",
    "min_hermitian_eigenvalue",
]


def min_hermitian_eigenvalue(m: np.ndarray) -> float:
    return float(np.linalg.eigvalsh((m + m.conj().T) / 2).min())


def _runs(word: CanonicalWord) -> tuple[int, int]:
    # length of the leading and trailing Boolean runs
    pat = word.pattern
    lead = len(pat) - len(pat.lstrip("b"))
    trail = len(pat) - len(pat.rstrip("b"))
    return lead, trail


def psi(model: FockModel, word: CanonicalWord) -> CanonicalWord:
    """``Psi`` on ``Zb`` / ``Zbf``: ``E(B_1 ... B_{k-1}) B_k (F ...)``."""
    if word.tag not in ("Zb", "Zbf"):
        raise ValueError(f"Psi is defined on Zb and Zbf words, not {word.tag}")
    k, _ = _runs(word)
    if k == 1:
        return word
    head = model.expectation(*[p.op for p in word.factors[: k - 1]])
    return CanonicalWord(word.tag, word.factors[k - 1 :], word.left @ head, word.right)


def psi_star(model: FockModel, word: CanonicalWord) -> CanonicalWord:
    """``Psi*`` on ``Zb`` / ``Zfb``: ``(F ...) B_1 E(B_2 ... B_k)``."""
    if word.tag not in ("Zb", "Zfb"):
        raise ValueError(f"Psi* is defined on Zb and Zfb words, not {word.tag}")
    _, k = _runs(word)
    if k == 1:
        return word
    cut = len(word.factors) - k + 1
    tail = model.expectation(*[p.op for p in word.factors[cut:]])
    right = tail if word.right is None else tail @ word.right
    return CanonicalWord(word.tag, word.factors[:cut], word.left, right)


def psi_reduce(model: FockModel, word: CanonicalWord, star: bool = False) -> CanonicalWord:
    return psi_star(model, word) if star else psi(model, word)


def _lens(rng: np.random.Generator, tag: str) -> list[int]:
    return {
        "Zb": [int(rng.integers(1, 4))],
        "Zbf": [int(rng.integers(1, 3)), int(rng.integers(1, 3))],
        "Zfb": [int(rng.integers(1, 3)), int(rng.integers(1, 3))],
        "Zf": [int(rng.integers(1, 3))],
        "Zfbf": [1, int(rng.integers(1, 3)), 1],
    }[tag]


def boolean_run_collapse_left_check(family: Family, instances: int, seed: int, tolerance: float | None = None) -> ResidualReport:
    """``E[Z_bf Z'] = E[Psi(Z_bf) Z']`` for random ``Z'``."""
    model = family.model
    rng = np.random.default_rng(seed)
    report = ResidualReport("boolean_run_collapse_left", tolerance=tolerance)
    for t in range(instances):
        z = random_canonical(family, "Zbf", rng, [int(rng.integers(1, 4)), int(rng.integers(1, 3))])
        zp = _random_element(family, rng, model.depth - 1)
        lhs = model.expectation(z.operator(model), zp)
        rhs = model.expectation(psi(model, z).operator(model), zp)
        report.record(max_abs(lhs - rhs), f"#{t} {z.describe()}")
    return report


def boolean_run_collapse_right_check(family: Family, instances: int, seed: int, tolerance: float | None = None) -> ResidualReport:
    """``E[Z' Z_fb] = E[Z' Psi*(Z_fb)]`` for random ``Z'``; includes ``Z_fb`` with no free run."""
    model = family.model
    rng = np.random.default_rng(seed)
    report = ResidualReport("boolean_run_collapse_right", tolerance=tolerance)
    for t in range(instances):
        if t % 4 == 3:
            z = random_canonical(family, "Zb", rng, [int(rng.integers(1, 4))])
        else:
            z = random_canonical(family, "Zfb", rng, [int(rng.integers(1, 3)), int(rng.integers(1, 4))])
        zp = _random_element(family, rng, model.depth - 1)
        lhs = model.expectation(zp, z.operator(model))
        rhs = model.expectation(zp, psi_star(model, z).operator(model))
        report.record(max_abs(lhs - rhs), f"#{t} {z.describe()}")
    return report


def adjoint_compatibility_check(
    family: Family, instances: int, seed: int, tolerance: float | None = None
) -> ResidualReport:
    """``Psi(Z_bf)* = Psi*(Z_bf*)`` as operators."""
    model = family.model
    rng = np.random.default_rng(seed)
    report = ResidualReport("psi_adjoint", tolerance=tolerance)
    for t in range(instances):
        z = random_canonical(family, "Zbf", rng, [int(rng.integers(1, 4)), int(rng.integers(1, 3))])
        lhs = psi(model, z).operator(model).adjoint()
        rhs = psi_star(model, z.adjoint()).operator(model)
        report.record(max_abs((lhs - rhs).dense()), f"#{t} {z.describe()}")
    return report


def _centered_word(family: Family, rng: np.random.Generator, owners: list[int]) -> list[FaceOperator]:
    # a_1 any centered element of its pair, a_2.. centered free products
    model = family.model
    out = []
    for k, i in enumerate(owners):
        kind = str(rng.choice(["f", "b"])) if k == 0 else "f"
        p = random_simple_product(family, i, rng, kind)
        p, _ = _center(model, p)
        out.append(p.op)
    return out


def pairing_check(family: Family, instances: int, seed: int, tolerance: float | None = None) -> ResidualReport:
    """``E[a_1 ... a_n b_m ... b_1] = delta_{nm} E[a_1 ... E[a_n b_m] ... b_1]`` on centered words."""
    model = family.model
    rng = np.random.default_rng(seed)
    report = ResidualReport("pairing", tolerance=tolerance)
    for t in range(instances):
        n = int(rng.integers(1, 4))
        w1 = random_alternating_owners(rng, model.indices, n)
        if t % 2 == 0:
            w2 = list(w1)
        else:
            w2 = random_alternating_owners(rng, model.indices, int(rng.integers(1, 4)))
        a = _centered_word(family, rng, w1)
        b = _centered_word(family, rng, w2)
        lhs = model.expectation(*a, *reversed(b))
        if len(a) != len(b):
            rhs = np.zeros((model.d, model.d), dtype=complex)
        else:
            inner = np.eye(model.d, dtype=complex)
            for x, y in zip(reversed(a), reversed(b)):
                inner = model.expectation(x, model.coefficient(inner), y)
            rhs = inner
        report.record(max_abs(lhs - rhs), f"#{t} n={len(a)} m={len(b)} same={w1 == w2}")
    return report


@dataclass
class PositivityResult:
    min_eigenvalue: ResidualReport
    min_eigenvalue_from_pairs: ResidualReport
    model_vs_pairs: ResidualReport
    drop_fb: ResidualReport
    psi_reduction: ResidualReport

    def reports(self) -> dict[str, ResidualReport]:
        return {
            "min_eigenvalue": self.min_eigenvalue,
            "min_eigenvalue_from_pairs": self.min_eigenvalue_from_pairs,
            "model_vs_pairs": self.model_vs_pairs,
            "drop_fb": self.drop_fb,
            "psi_reduction": self.psi_reduction,
        }


def _random_Z(family: Family, rng: np.random.Generator, terms: int) -> list[CanonicalWord]:
    tags = ["Zf", "Zb", "Zbf", "Zfb", "Zfbf"]
    words = [random_canonical(family, "Z0", rng, [])]
    for _ in range(terms):
        tag = str(rng.choice(tags))
        words.append(random_canonical(family, tag, rng, _lens(rng, tag)))
    return words


def _sum_ops(model: FockModel, words: list[CanonicalWord]) -> FaceOperator:
    total = None
    for w in words:
        op = w.operator(model)
        total = op if total is None else total + op
    return total


def _generator_words(family: Family, rng: np.random.Generator, terms: int, max_len: int):
    """``Z = b_0 + sum_t c_t x_{t,1} ... x_{t,k}`` with self-adjoint generator letters."""
    model = family.model
    handles = sorted(family.labels)
    out = []
    for _ in range(terms):
        k = int(rng.integers(1, max_len + 1))
        out.append((_random_b(rng, model.d), [str(rng.choice(handles)) for _ in range(k)]))
    return _random_b(rng, model.d), out


def _zz_star_from_pairs(family: Family, space, b0, words) -> np.ndarray:
    # E[Z Z*] summed word by word through the free-Boolean moment formula
    labels = family.labels
    total = b0 @ b0.conj().T
    for c, w in words:
        om = [labels[h][0] for h in w]
        chi = "".join(labels[h][1] for h in w)
        m = star_formula(space, w, chi, om)
        total = total + b0 @ m.conj().T @ c.conj().T + c @ m @ b0.conj().T
    for c1, w1 in words:
        for c2, w2 in words:
            word = list(w1) + list(reversed(w2))
            om = [labels[h][0] for h in word]
            chi = "".join(labels[h][1] for h in word)
            total = total + c1 @ star_formula(space, word, chi, om) @ c2.conj().T
    return total


def positivity_check(
    family: Family,
    trials: int,
    seed: int,
    terms: int = 4,
    max_len: int = 3,
    tolerance: float = 1e-8,
    identity_tolerance: float = 1e-9,
) -> PositivityResult:
    """Smallest eigenvalue of ``E[Z Z*]`` over random ``Z``, plus the reduction chain.

    Each trial draws two elements: a combination of words in the (self-adjoint)
    generators, whose ``E[Z Z*]`` is computed both in the model and from the
    per-pair moments, and a combination of random canonical words, used for
    ``E[Z Z*] = E[Z_1 Z_1*] = E[Z_2 Z_2*]``.
    """
    model = family.model
    if 2 * max_len > 12:
        raise ValueError("max_len above 6 makes the moment formula enumerate too many partitions")
    for h, op in family.operators.items():
        if max_abs((op - op.adjoint()).dense()) > 1e-12:
            raise ValueError(f"operator {h!r} is not self-adjoint; build the family with self_adjoint=True")
    rng = np.random.default_rng(seed)
    space = family.space()
    lowest = {"generators": np.inf, "from_pairs": np.inf, "canonical": np.inf}
    eig = ResidualReport("positivity_min_eigenvalue", tolerance=tolerance)
    eig_pairs = ResidualReport("positivity_min_eigenvalue_from_pairs", tolerance=tolerance)
    agree = ResidualReport("positivity_model_vs_pairs", tolerance=identity_tolerance)
    drop = ResidualReport("positivity_drop_fb", tolerance=identity_tolerance)
    red = ResidualReport("positivity_psi_reduction", tolerance=identity_tolerance)
    for t in range(trials):
        b0, words = _generator_words(family, rng, terms, max_len)
        z = model.coefficient(b0)
        for c, w in words:
            op = model.coefficient(c)
            for h in w:
                op = op @ family.operators[h]
            z = z + op
        direct = model.expectation(z, z.adjoint())
        from_pairs = _zz_star_from_pairs(family, space, b0, words)
        # eigenvalue reports record the negative part, so "residual <= tol" means lambda_min >= -tol
        lam = min_hermitian_eigenvalue(direct)
        lam_p = min_hermitian_eigenvalue(from_pairs)
        lowest["generators"] = min(lowest["generators"], lam)
        lowest["from_pairs"] = min(lowest["from_pairs"], lam_p)
        eig.record(max(0.0, -lam), f"#{t} lambda_min={lam:.3e}")
        eig_pairs.record(max(0.0, -lam_p), f"#{t} lambda_min={lam_p:.3e}")
        agree.record(max_abs(direct - from_pairs), f"#{t}")

        cwords = _random_Z(family, rng, terms)
        z_all = _sum_ops(model, cwords)
        z1_words = [w for w in cwords if w.tag not in ("Zfb", "Zfbf")]
        z1 = _sum_ops(model, z1_words)
        z2 = _sum_ops(model, [psi(model, w) if w.tag in ("Zb", "Zbf") else w for w in z1_words])
        e0 = model.expectation(z_all, z_all.adjoint())
        e1 = model.expectation(z1, z1.adjoint())
        e2 = model.expectation(z2, z2.adjoint())
        tags = ",".join(w.tag for w in cwords)
        drop.record(max_abs(e0 - e1), f"#{t} {tags}")
        red.record(max_abs(e1 - e2), f"#{t} {tags}")
        lam0 = min_hermitian_eigenvalue(e0)
        lowest["canonical"] = min(lowest["canonical"], lam0)
        eig.record(max(0.0, -lam0), f"#{t} canonical lambda_min={lam0:.3e}")
    eig.details = {"lowest_eigenvalue": {k: float(f"{v:.6e}") for k, v in lowest.items() if k != "from_pairs"}}
    eig_pairs.details = {"lowest_eigenvalue": float(f"{lowest['from_pairs']:.6e}")}
    return PositivityResult(eig, eig_pairs, agree, drop, red)
