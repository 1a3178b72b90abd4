"""Command-line interface: ``freeboolean <command> ...``.

Exit codes are 0 when every check passes, 1 when a check fails and 2 for
usage or configuration errors.  Output is JSON (sorted keys) unless a CSV
curve is requested.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path


from . import __version__
from .bvalued import MomentLookupError, MomentTable, TruncationError, bmatrix_to_json, max_abs
from .cumulants import cumulant, cumulant_multiplicative
from .experiments.clt import CltConfig, clt_run
from .experiments.suites import SUITES, ConfigError, VerifyConfig, run_verify
from .fock import build_model, random_family
from .inc import enumerate_inc, inc_context
from .moebius import comparability_matrix, moebius_by_blocks, moebius_by_segments, moebius_matrix, moebius_product
from .partitions import Partition, parse_chi

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
TARGET_ALIASES = {"moments": "section6", "cumulants": "independence", "model": "star"}


class UsageError(ValueError):
    pass


def _int_list(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError("tolerance must be positive")
    return value


def _emit(payload, args, text: str | None = None) -> None:
    out = text if text is not None else json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if getattr(args, "out", None):
        Path(args.out).write_text(out)
    else:
        sys.stdout.write(out)


# commands -----------------------------------------------------------------

def cmd_partitions(args) -> int:
    chi = parse_chi(args.chi)
    elems = enumerate_inc(chi, cap=args.cap)
    ctx = inc_context(chi)
    _emit({
        "chi": chi,
        "n": len(chi),
        "count": len(elems),
        "segments": [list(s) for s in ctx.segments],
        "partitions": [str(p) for p in elems],
    }, args)
    return EXIT_OK


def cmd_moebius(args) -> int:
    chi = parse_chi(args.chi)
    elems = enumerate_inc(chi, cap=args.cap)
    mu = moebius_matrix(chi)
    comp = comparability_matrix(chi)
    rows, agree = [], True
    for s, sigma in enumerate(elems):
        for p, pi in enumerate(elems):
            if not comp[s, p]:
                continue
            value = int(mu[s, p])
            agree &= moebius_product(sigma, pi, chi) == value
            agree &= moebius_by_segments(sigma, pi, chi) == value
            agree &= moebius_by_blocks(sigma, pi, chi) == value
            rows.append({"sigma": str(sigma), "pi": str(pi), "mu": value})
    _emit({"chi": chi, "count": len(elems), "rows": rows, "product_formula_agrees": bool(agree)}, args)
    return EXIT_OK if agree else EXIT_FAIL


def cmd_cumulants(args) -> int:
    chi = parse_chi(args.chi)
    n = len(chi)
    table = MomentTable.load(args.moments)
    if args.word:
        word = [h.strip() for h in args.word.split(",")]
    else:
        word = next((list(h) for h, _, _ in table.records if len(h) == n), None)
        if word is None:
            raise UsageError(f"moment table has no word of length {n}; pass --word")
    if len(word) != n:
        raise UsageError(f"word has {len(word)} letters but chi has {n}")
    pi = Partition.from_string(args.partition) if args.partition else Partition.one(n)
    value = cumulant(table, word, chi, pi)
    other = cumulant_multiplicative(table, word, chi, pi)
    residual = max_abs(value - other)
    _emit({
        "chi": chi,
        "word": word,
        "partition": str(pi),
        "value": bmatrix_to_json(value),
        "residual": float(f"{residual:.6e}"),
        "tolerance": args.tolerance,
    }, args)
    return EXIT_OK if residual <= args.tolerance else EXIT_FAIL


def cmd_fock_build(args) -> int:
    model = build_model(args.d, list(args.ranks), args.depth, max_dim=args.max_dim)
    summary = model.summary()
    summary["seed"] = args.seed
    _emit(summary, args)
    return EXIT_OK


def cmd_fock_export(args) -> int:
    if args.max_length > args.depth:
        raise UsageError(f"max length {args.max_length} exceeds depth {args.depth}")
    model = build_model(args.d, list(args.ranks), args.depth, max_dim=args.max_dim)
    fam = random_family(model, seed=args.seed, ops_per_pair=args.ops_per_pair, self_adjoint=args.self_adjoint)
    handles = sorted(fam.labels)
    table = MomentTable.from_space(fam.space(), handles, args.max_length, unit_coefficients=not args.no_units)
    payload = table.to_json()
    payload["labels"] = {h: list(fam.labels[h]) for h in handles}
    _emit(payload, args, text=json.dumps(payload, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_clt(args) -> int:
    cfg = CltConfig(d=args.d, pairs=args.pairs, n_max=args.nmax, Ns=tuple(args.Ns), seed=args.seed, rank=args.rank)
    result = clt_run(cfg)
    ok = all(r.passed for r in result.reports.values())
    if args.format == "csv":
        _emit(None, args, text=result.csv())
    else:
        payload = result.to_dict()
        payload["passed"] = ok
        _emit(payload, args)
    return EXIT_OK if ok else EXIT_FAIL


def _verify_config(args, **extra) -> VerifyConfig:
    kwargs = dict(seed=args.seed, d=args.d, depth=args.depth, sabotage=args.sabotage, **extra)
    if args.ranks is not None:
        kwargs["ranks"] = args.ranks
        kwargs["section_ranks"] = args.ranks
    if args.tolerance is not None:
        kwargs["tolerance"] = args.tolerance
    if getattr(args, "max_length", None) is not None:
        kwargs["max_length"] = args.max_length
    if getattr(args, "instances", None) is not None:
        kwargs["instances"] = args.instances
    if getattr(args, "trials", None) is not None:
        kwargs["trials"] = args.trials
    if getattr(args, "Ns", None) is not None:
        kwargs["Ns"] = tuple(args.Ns)
    return VerifyConfig(**kwargs)


def cmd_verify(args) -> int:
    suite = args.suite
    if suite is None:
        target = args.target or "all"
        suite = TARGET_ALIASES.get(target, target)
    if suite not in SUITES and suite != "all":
        raise UsageError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)} or all")
    report = run_verify(suite, _verify_config(args))
    _emit(report, args)
    return EXIT_OK if report["passed"] else EXIT_FAIL


def cmd_positivity(args) -> int:
    report = run_verify("positivity", _verify_config(args))
    _emit(report, args)
    return EXIT_OK if report["passed"] else EXIT_FAIL


# parser -------------------------------------------------------------------

def _model_flags(p: argparse.ArgumentParser, ranks_default=(1, 2)) -> None:
    p.add_argument("--d", type=int, default=2, help="matrix size of the amalgamation algebra")
    p.add_argument("--ranks", type=_int_list, default=ranks_default, help="comma-separated bimodule ranks")
    p.add_argument("--depth", type=int, default=6, help="maximal alternating word length kept")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write output to this file instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="freeboolean", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("partitions", help="list INC(chi)")
    p.add_argument("--chi", required=True, help="string over F and B")
    p.add_argument("--cap", type=int, default=12, help="largest n enumerated")
    p.add_argument("--out")
    p.set_defaults(func=cmd_partitions)

    p = sub.add_parser("moebius", help="Moebius table of INC(chi)")
    p.add_argument("--chi", required=True)
    p.add_argument("--cap", type=int, default=8)
    p.add_argument("--out")
    p.set_defaults(func=cmd_moebius)

    p = sub.add_parser("cumulants", help="cumulants from a moment table")
    csub = p.add_subparsers(dest="action", required=True)
    c = csub.add_parser("compute")
    c.add_argument("--chi", required=True)
    c.add_argument("--partition", help='e.g. "1,3/2"; defaults to the one-block partition')
    c.add_argument("--moments", required=True, help="moment-table JSON file")
    c.add_argument("--word", help="comma-separated handles; defaults to the first table word of matching length")
    c.add_argument("--tolerance", type=_positive_float, default=1e-10)
    c.add_argument("--out")
    c.set_defaults(func=cmd_cumulants)

    p = sub.add_parser("fock", help="truncated reduced free product model")
    fsub = p.add_subparsers(dest="action", required=True)
    b = fsub.add_parser("build", help="print the model summary")
    _model_flags(b)
    b.add_argument("--max-dim", type=int, default=20_000)
    b.set_defaults(func=cmd_fock_build)
    e = fsub.add_parser("export", help="export a random operator family as a moment table")
    _model_flags(e)
    e.add_argument("--max-dim", type=int, default=20_000)
    e.add_argument("--max-length", type=int, default=3)
    e.add_argument("--ops-per-pair", type=int, default=1)
    e.add_argument("--self-adjoint", action="store_true")
    e.add_argument("--no-units", action="store_true", help="skip matrix-unit coefficient entries")
    e.set_defaults(func=cmd_fock_export)

    p = sub.add_parser("clt", help="central limit cumulant scaling")
    lsub = p.add_subparsers(dest="action", required=True)
    r = lsub.add_parser("run")
    r.add_argument("--pairs", type=int, default=1)
    r.add_argument("--nmax", type=int, default=4)
    r.add_argument("--Ns", type=_int_list, default=(1, 4, 16, 64))
    r.add_argument("--d", type=int, default=2)
    r.add_argument("--rank", type=int, default=1)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--format", choices=("json", "csv"), default="json")
    r.add_argument("--out")
    r.set_defaults(func=cmd_clt)

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("target", nargs="?", help="suite name or alias (moments, cumulants, model)")
    p.add_argument("--suite", help=f"one of {', '.join(SUITES)}, all")
    _model_flags(p, ranks_default=None)
    p.add_argument("--max-length", type=int, help="longest word checked (must not exceed --depth)")
    p.add_argument("--tolerance", type=_positive_float)
    p.add_argument("--instances", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--Ns", type=_int_list)
    p.add_argument("--sabotage", choices=("shared-ops",))
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("positivity", help="positivity of E[ZZ*]")
    psub = p.add_subparsers(dest="action", required=True)
    k = psub.add_parser("check")
    _model_flags(k, ranks_default=None)
    k.add_argument("--trials", type=int, default=200)
    k.add_argument("--instances", type=int)
    k.add_argument("--tolerance", type=_positive_float)
    k.add_argument("--sabotage", choices=("shared-ops",))
    k.set_defaults(func=cmd_positivity)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (UsageError, ConfigError, MomentLookupError, TruncationError, FileNotFoundError, ValueError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"freeboolean: error: {msg}", file=sys.stderr)
        return EXIT_USAGE


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
