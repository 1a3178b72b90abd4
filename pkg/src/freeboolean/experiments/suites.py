"""Named verification suites shared by the CLI and the acceptance tests.

Every suite returns a plain dict that serialises deterministically: residuals
are rounded to seven significant digits and no timing data is recorded.
"""
from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass, field

import numpy as np

from ..bvalued import MatrixSpace, max_abs
from ..cumulants import (
    ResidualReport,
    cumulant,
    cumulant_multiplicative,
    star_check,
    test_combinatorial_independence,
    vanishing_extension_check,
    word_labels,
)
from ..fock import Family, build_model, random_family
from .clt import CltConfig, clt_run
from .moments import (
    boolean_factorization_check,
    classification_check,
    canonical_expectation_checks,
    boolean_pair_splitting_check,
    mixed_vanishing_check,
)
from .positivity import (
    adjoint_compatibility_check,
    boolean_run_collapse_left_check,
    boolean_run_collapse_right_check,
    pairing_check,
    positivity_check,
)

__all__ = ["SUITES", "VerifyConfig", "ConfigError", "run_suite", "run_verify"]

SUITES = ("independence", "star", "section6", "clt", "positivity")
NEGATIVE_CONTROL_FLOOR = 1e-3


class ConfigError(ValueError):
    """Invalid or unsafe suite configuration."""


@dataclass(frozen=True)
class VerifyConfig:
    seed: int = 0
    d: int = 2
    ranks: tuple[int, ...] = (1, 2)
    section_ranks: tuple[int, ...] = (1, 1, 1)
    depth: int = 6
    max_length: int | None = None
    tolerance: float = 1e-9
    eigen_tolerance: float = 1e-8
    instances: int = 100
    trials: int = 200
    Ns: tuple[int, ...] = (1, 4, 16, 64)
    clt_pairs: int = 1
    sabotage: str | None = None

    def __post_init__(self) -> None:
        if self.tolerance <= 0 or self.eigen_tolerance <= 0:
            raise ConfigError("tolerances must be positive")
        if self.depth < 1:
            raise ConfigError("depth must be >= 1")
        if self.sabotage not in (None, "shared-ops"):
            raise ConfigError(f"unknown sabotage mode {self.sabotage!r}")
        if self.max_length is not None and self.max_length > self.depth:
            raise ConfigError(
                f"word length {self.max_length} exceeds depth {self.depth}; the truncated model would not be exact"
            )
        if self.max_length is not None and self.max_length < 2:
            raise ConfigError("word length must be at least 2 for mixed words")
        if len(self.ranks) < 2 or len(self.section_ranks) < 2:
            raise ConfigError("need at least two pairs")
        if self.instances < 1 or self.trials < 1:
            raise ConfigError("instances and trials must be positive")

    @property
    def word_length(self) -> int:
        return self.max_length if self.max_length is not None else min(6, self.depth)

    @property
    def shared(self) -> bool:
        return self.sabotage == "shared-ops"


def _entry(report: ResidualReport, statement: str, negative_control: bool = False, name: str | None = None) -> dict:
    out = report.to_dict()
    if name is not None:
        out["name"] = name
    out["statement"] = statement
    if negative_control:
        out["expect"] = f"residual > {NEGATIVE_CONTROL_FLOOR:g}"
        out["passed"] = report.max_residual > NEGATIVE_CONTROL_FLOOR
        out.pop("tolerance", None)
    return out


def _family(cfg: VerifyConfig, ranks, shared: bool, self_adjoint: bool = False, ops_per_pair: int = 1) -> Family:
    if shared:
        # sharing needs equal local dimensions
        ranks = [ranks[0]] * len(ranks)
    model = build_model(cfg.d, list(ranks), cfg.depth)
    return random_family(model, seed=cfg.seed, ops_per_pair=ops_per_pair, self_adjoint=self_adjoint, shared=shared)


def _additivity(fam: Family, max_n: int, tol: float) -> ResidualReport:
    """Full cumulants are additive over families of different pairs sharing faces."""
    ops = fam.operators
    sums = {}
    for face, prefix in (("F", "c"), ("B", "d")):
        a, b = f"{prefix}1.0", f"{prefix}2.0"
        sums[face] = (a, b, f"{prefix}+.0")
    mats = {h: op.matrix for h, op in ops.items()}
    degrees = {h: 1 for h in ops}
    for a, b, s in sums.values():
        mats[s] = ops[a].matrix + ops[b].matrix
        degrees[s] = 1
    space = MatrixSpace(fam.model.d, mats, degrees=degrees, exact_degree=fam.model.depth)
    report = ResidualReport("additivity", tolerance=tol)
    for n in range(1, max_n + 1):
        for chi in itertools.product("FB", repeat=n):
            chi = "".join(chi)
            summed = cumulant(space, [sums[c][2] for c in chi], chi)
            first = cumulant(space, [sums[c][0] for c in chi], chi)
            second = cumulant(space, [sums[c][1] for c in chi], chi)
            report.record(max_abs(summed - first - second), chi)
    return report


def _dual(fam: Family, max_n: int, seed: int, tol: float) -> ResidualReport:
    """Moebius-sum and peeling cumulants agree on random words and partitions."""
    from ..inc import enumerate_inc

    rng = np.random.default_rng(seed)
    space = fam.space()
    handles = sorted(fam.labels)
    report = ResidualReport("dual_cumulants", tolerance=tol)
    for n in range(1, max_n + 1):
        for _ in range(4):
            word = [str(rng.choice(handles)) for _ in range(n)]
            _, chi = word_labels(word, fam.labels)
            elems = enumerate_inc(chi)
            pi = elems[int(rng.integers(len(elems)))]
            a = cumulant(space, word, chi, pi)
            b = cumulant_multiplicative(space, word, chi, pi)
            report.record(max_abs(a - b), f"{' '.join(word)} | {pi}")
    return report


def suite_independence(cfg: VerifyConfig) -> list[dict]:
    fam = _family(cfg, cfg.ranks, cfg.shared)
    space = fam.space()
    L = cfg.word_length
    tol = cfg.tolerance
    checks = [
        _entry(test_combinatorial_independence(space, fam.labels, L, tolerance=tol),
               "mixed full cumulants vanish"),
        _entry(test_combinatorial_independence(space, fam.labels, min(L, 4), coefficient_seed=cfg.seed,
                                               tolerance=tol),
               "mixed full cumulants vanish with B-coefficients inside letters",
               name="combinatorial_independence_coefficients"),
        _entry(vanishing_extension_check(space, fam.labels, min(L, 5), tolerance=tol),
               "cumulants vanish when a block mixes pairs"),
        _entry(_additivity(fam, min(L, 4), tol), "full cumulants are additive over independent pairs"),
        _entry(_dual(fam, L, cfg.seed, 1e-10), "Moebius-sum and peeling cumulants agree"),
    ]
    if not cfg.shared:
        bad = _family(cfg, cfg.ranks, True)
        checks.append(_entry(
            test_combinatorial_independence(bad.space(), bad.labels, min(L, 4)),
            "negative control: shared operators across pairs break the vanishing",
            negative_control=True,
            name="negative_control_independence",
        ))
    return checks


def suite_star(cfg: VerifyConfig) -> list[dict]:
    fam = _family(cfg, cfg.ranks, cfg.shared)
    L = cfg.word_length
    checks = [_entry(star_check(fam.space(), fam.labels, L, tolerance=cfg.tolerance),
                     "mixed moments follow the free-Boolean moment formula")]
    if not cfg.shared:
        bad = _family(cfg, cfg.ranks, True)
        checks.append(_entry(star_check(bad.space(), bad.labels, min(L, 4)),
                             "negative control: shared operators break the moment formula",
                             negative_control=True, name="negative_control_star"))
    return checks


def _canonical_word_checks(fam: Family, cfg: VerifyConfig) -> list[dict]:
    tol, n, s = cfg.tolerance, cfg.instances, cfg.seed
    checks = [
        _entry(boolean_factorization_check(fam, n, s, tolerance=tol),
               "alternating Boolean products factorise"),
        _entry(boolean_pair_splitting_check(fam, n, s + 1, tolerance=tol),
               "a leading Boolean product factors out of E(B1 B2 A)"),
    ]
    statements = {
        "interior": "centered free run between Boolean products has zero mean",
        "left": "centered free run at the word start has zero mean",
        "right": "centered free run at the word end has zero mean",
        "whole": "centered free words have zero mean",
        "operator_zero": "centered free run between Boolean products is the zero operator",
    }
    for key, rep in mixed_vanishing_check(fam, n, s + 2, tolerance=tol).items():
        checks.append(_entry(rep, statements[key]))
    for key, rep in canonical_expectation_checks(fam, n, s + 3, tolerance=tol).items():
        checks.append(_entry(rep, f"canonical-word vanishing: {key}"))
    cls = classification_check(fam, n, s + 4, tolerance=tol)
    checks.append(_entry(cls["sum_back"], "canonical expansion sums back to the word"))
    checks.append(_entry(cls["zero_mean"], "canonical words other than Z0 and Zb have zero mean"))
    checks.append(_entry(cls["dropped_zero"], "dropped canonical words are zero operators"))
    return checks


def suite_section6(cfg: VerifyConfig) -> list[dict]:
    fam = _family(cfg, cfg.section_ranks, cfg.shared, ops_per_pair=2)
    checks = _canonical_word_checks(fam, cfg)
    if not cfg.shared:
        bad = _family(cfg, cfg.section_ranks, True, ops_per_pair=2)
        control = mixed_vanishing_check(bad, 20, cfg.seed + 2)["interior"]
        checks.append(_entry(control, "negative control: shared operators break the vanishing",
                             negative_control=True, name="negative_control_mixed_vanishing"))
    return checks


def suite_clt(cfg: VerifyConfig) -> list[dict]:
    result = clt_run(CltConfig(d=cfg.d, pairs=cfg.clt_pairs, Ns=cfg.Ns, seed=cfg.seed))
    statements = {
        "order1_zero": "first cumulant of the normalised sum vanishes",
        "order2_exact": "second cumulant equals the single-summand covariance",
        "order3_scaling": "third cumulant scales as N^(-1/2)",
        "order4_scaling": "fourth cumulant scales as N^(-1)",
    }
    return [_entry(rep, statements.get(k, k)) for k, rep in result.reports.items()]


def suite_positivity(cfg: VerifyConfig) -> list[dict]:
    fam = _family(cfg, cfg.section_ranks, cfg.shared, self_adjoint=True)
    tol, n, s = cfg.tolerance, cfg.instances, cfg.seed
    res = positivity_check(fam, cfg.trials, s, tolerance=cfg.eigen_tolerance, identity_tolerance=tol)
    statements = {
        "min_eigenvalue": "E[ZZ*] has no eigenvalue below -tolerance",
        "min_eigenvalue_from_pairs": "E[ZZ*] assembled from per-pair moments is positive",
        "model_vs_pairs": "E[ZZ*] from the model equals E[ZZ*] from per-pair moments",
        "drop_fb": "dropping Zfb and Zfbf words leaves E[ZZ*] unchanged",
        "psi_reduction": "applying Psi to Zb and Zbf words leaves E[ZZ*] unchanged",
    }
    checks = [_entry(rep, statements[k]) for k, rep in res.reports().items()]
    checks += [
        _entry(boolean_run_collapse_left_check(fam, n, s + 5, tolerance=tol), "E[Zbf Z'] = E[Psi(Zbf) Z']"),
        _entry(boolean_run_collapse_right_check(fam, n, s + 6, tolerance=tol), "E[Z' Zfb] = E[Z' Psi*(Zfb)]"),
        _entry(adjoint_compatibility_check(fam, n, s + 7, tolerance=tol), "Psi(Zbf)* = Psi*(Zbf*)"),
        _entry(pairing_check(fam, n, s + 8, tolerance=tol), "centered words pair up in nested fashion"),
    ]
    return checks


_RUNNERS = {
    "independence": suite_independence,
    "star": suite_star,
    "section6": suite_section6,
    "clt": suite_clt,
    "positivity": suite_positivity,
}


def run_suite(name: str, cfg: VerifyConfig) -> dict:
    if name not in _RUNNERS:
        raise ConfigError(f"unknown suite {name!r}; choose from {', '.join(SUITES)} or all")
    checks = _RUNNERS[name](cfg)
    return {"suite": name, "passed": all(c["passed"] for c in checks), "checks": checks}


def run_verify(suite: str, cfg: VerifyConfig) -> dict:
    names = list(SUITES) if suite == "all" else [suite]
    results = [run_suite(n, cfg) for n in names]
    config = asdict(cfg)
    config["word_length"] = cfg.word_length
    return {
        "config": config,
        "suites": results,
        "passed": all(r["passed"] for r in results),
    }
