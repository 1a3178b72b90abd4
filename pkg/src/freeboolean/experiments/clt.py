"""Central limit behaviour of normalised sums of free-Boolean summands.

Summand ``m`` lives on its own leg ``m`` of one Fock model: its free labels
are ``lambda_m(x_k)`` and its Boolean labels are ``beta_m(y_k)`` for fixed
centered local operators ``x_k, y_k`` shared by every ``m``.  For such a
sequence the cumulants of ``S_N = N^{-1/2} sum_m a_m`` obey, exactly,

* order 1: zero,
* order 2: equal to the single-summand cumulant for every ``N``,
* order ``n``: ``N^{1 - n/2}`` times the single-summand cumulant.

Depth 2 suffices: cumulants up to order 4 only need products of four lifts,
which the model evaluates exactly by pairing two-step vectors.
"""
from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, field

import numpy as np

from ..bvalued import MatrixSpace, max_abs
from ..cumulants import ResidualReport, cumulant
from ..fock import FaceOperator, build_model, center_local, lift_beta, lift_lambda, random_local

__all__ = ["CltConfig", "CltResult", "clt_run", "clt_space"]


@dataclass(frozen=True)
class CltConfig:
    """``pairs`` free labels ``I1..`` and as many Boolean labels ``J1..`` per summand."""

    d: int = 2
    pairs: int = 1
    n_max: int = 4
    Ns: tuple[int, ...] = (1, 4, 16, 64)
    seed: int = 0
    rank: int = 1
    max_dim: int = 50_000

    def __post_init__(self) -> None:
        if self.n_max < 1 or self.n_max > 4:
            raise ValueError("n_max must be between 1 and 4 (depth-2 models are exact up to order 4)")
        if any(n < 1 for n in self.Ns):
            raise ValueError("every N must be positive")
        if self.pairs < 1:
            raise ValueError("pairs must be >= 1")


@dataclass
class CltResult:
    config: CltConfig
    reports: dict[str, ResidualReport]
    curve: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "checks": {k: r.to_dict() for k, r in self.reports.items()},
            "curve": self.curve,
        }

    def csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=["N", "order", "max_abs_cumulant", "predicted"], lineterminator="\n")
        writer.writeheader()
        for row in self.curve:
            writer.writerow(row)
        return buf.getvalue()


def _local_ops(cfg: CltConfig, rng: np.random.Generator):
    model1 = build_model(cfg.d, [cfg.rank], 1)
    n = model1.local_dim(1)
    free = [center_local(model1, random_local(rng, n)) for _ in range(cfg.pairs)]
    boolean = [center_local(model1, random_local(rng, n)) for _ in range(cfg.pairs)]
    return free, boolean


def clt_space(cfg: CltConfig, N: int, free, boolean) -> MatrixSpace:
    """``S_{N,k}`` for every label as a matrix space (depth 2, split evaluation)."""
    model = build_model(cfg.d, [cfg.rank] * N, depth=2, max_dim=cfg.max_dim)
    scale = 1 / np.sqrt(N)
    ops: dict[str, object] = {}
    for k, x in enumerate(free, start=1):
        total = None
        for m in model.indices:
            op = lift_lambda(model, m, x).matrix
            total = op if total is None else total + op
        ops[f"I{k}"] = total * scale
    for k, y in enumerate(boolean, start=1):
        total = None
        for m in model.indices:
            op = lift_beta(model, m, y).matrix
            total = op if total is None else total + op
        ops[f"J{k}"] = total * scale
    return MatrixSpace(cfg.d, ops, exact_degree=model.depth)


def _words(cfg: CltConfig, n: int):
    labels = [f"I{k}" for k in range(1, cfg.pairs + 1)] + [f"J{k}" for k in range(1, cfg.pairs + 1)]
    return itertools.product(labels, repeat=n)


def _letters(word, coefs):
    # S_{w1} b_1, ..., S_{w(n-1)} b_(n-1), S_{wn}
    return [(h, b) for h, b in zip(word[:-1], coefs)] + [(word[-1],)]


def clt_run(cfg: CltConfig) -> CltResult:
    rng = np.random.default_rng(cfg.seed)
    free, boolean = _local_ops(cfg, rng)
    # one set of B-coefficients per word, shared by all N
    coef_rng = np.random.default_rng([cfg.seed, 1])
    cases = []
    for n in range(1, cfg.n_max + 1):
        for word in _words(cfg, n):
            chi = "".join("F" if h.startswith("I") else "B" for h in word)
            coefs = [
                (coef_rng.standard_normal((cfg.d, cfg.d)) + 1j * coef_rng.standard_normal((cfg.d, cfg.d))) / np.sqrt(2)
                for _ in range(n - 1)
            ]
            cases.append((n, word, chi, _letters(word, coefs)))

    single = clt_space(cfg, 1, free, boolean)
    reference = {k: cumulant(single, letters, chi) for k, (n, word, chi, letters) in enumerate(cases)}

    reports = {
        "order1_zero": ResidualReport("clt_order1_zero", tolerance=1e-10),
        "order2_exact": ResidualReport("clt_order2_exact", tolerance=1e-10),
    }
    for n in range(3, cfg.n_max + 1):
        reports[f"order{n}_scaling"] = ResidualReport(f"clt_order{n}_scaling", tolerance=1e-9)
    curve = []
    for N in cfg.Ns:
        space = single if N == 1 else clt_space(cfg, N, free, boolean)
        peak: dict[int, float] = {}
        predicted: dict[int, float] = {}
        for k, (n, word, chi, letters) in enumerate(cases):
            value = cumulant(space, letters, chi)
            factor = N ** (1 - n / 2)
            label = f"N={N} word={' '.join(word)}"
            if n == 1:
                reports["order1_zero"].record(max_abs(value), label)
            elif n == 2:
                reports["order2_exact"].record(max_abs(value - reference[k]), label)
            else:
                reports[f"order{n}_scaling"].record(max_abs(value - factor * reference[k]), label)
            peak[n] = max(peak.get(n, 0.0), max_abs(value))
            predicted[n] = max(predicted.get(n, 0.0), factor * max_abs(reference[k]))
        for n in sorted(peak):
            curve.append({
                "N": N,
                "order": n,
                "max_abs_cumulant": float(f"{peak[n]:.6e}"),
                "predicted": float(f"{predicted[n]:.6e}"),
            })
    return CltResult(cfg, reports, curve)
