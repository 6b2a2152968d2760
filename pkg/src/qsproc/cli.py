"""Command-line drivers over the library.

Exit codes: 0 when every requested check passes, 1 on a mathematical failure
(axiom violation, refused construction), 2 on unreadable or malformed input.
Reports are deterministic: identical inputs and configuration produce
byte-identical output.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .config import RunConfig
from .kernels import check_axioms
from .models import check_model
from .sites import derive_classes
from .words import enumerate_words
from . import serialize

EXIT_OK = 0
EXIT_MATH = 1
EXIT_INPUT = 2


class InputError(Exception):
    pass


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _config_from_args(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.handler(args, config)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def build_parser() -> argparse.ArgumentParser:
    # shared flags live on the main parser and, with suppressed defaults, on
    # every subparser, so they are accepted on either side of the subcommand
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--config", default=argparse.SUPPRESS,
        help="JSON file with configuration overrides",
    )
    common.add_argument(
        "--policy", choices=["all", "atoms"], default=argparse.SUPPRESS,
        help="word enumeration policy",
    )
    common.add_argument(
        "--cap", type=int, default=argparse.SUPPRESS,
        help="word enumeration cap",
    )
    common.add_argument(
        "--format", choices=["json", "text"], default=argparse.SUPPRESS,
        help="report format",
    )
    parser = argparse.ArgumentParser(
        prog="qsproc",
        parents=[common],
        description=(
            "Causal correlation kernels of sequential measurement models: "
            "validation, axiom checking, minimal reconstruction, equivalence, "
            "Markov diagnostics, level lifts, and classical reduction."
        ),
    )
    sub = parser.add_subparsers(required=True)

    p = sub.add_parser("check", parents=[common],
                       help="validate a model and its kernel axioms")
    p.add_argument("model")
    p.add_argument("site")
    p.set_defaults(handler=cmd_check)

    p = sub.add_parser("kernels", parents=[common],
                       help="emit the kernel table of a model")
    p.add_argument("model")
    p.add_argument("site")
    p.set_defaults(handler=cmd_kernels)

    p = sub.add_parser("reconstruct", parents=[common],
                       help="minimal model from a kernel table")
    p.add_argument("source", help="kernel table JSON, or a model JSON with --site")
    p.add_argument("--site", help="site JSON when reconstructing from a model")
    p.add_argument("--verify", action="store_true", help="also verify the round trip")
    p.set_defaults(handler=cmd_reconstruct)

    p = sub.add_parser("roundtrip", parents=[common],
                       help="reconstruct and compare the tables")
    p.add_argument("model")
    p.add_argument("site")
    p.set_defaults(handler=cmd_roundtrip)

    p = sub.add_parser("equiv", parents=[common],
                       help="wide-sense equivalence of two models")
    p.add_argument("action", choices=["check", "unitary"])
    p.add_argument("model1")
    p.add_argument("model2")
    p.add_argument("site")
    p.set_defaults(handler=cmd_equiv)

    p = sub.add_parser("markov", parents=[common],
                       help="dynamicity, regression, commutativity")
    p.add_argument("action", choices=["check"])
    p.add_argument("model")
    p.add_argument("site")
    p.set_defaults(handler=cmd_markov)

    p = sub.add_parser("lift", parents=[common],
                       help="level lift of a device field")
    p.add_argument("field", help="field JSON: devices, initial vector, depth")
    p.set_defaults(handler=cmd_lift)

    p = sub.add_parser("classical", parents=[common],
                       help="reduce a commuting model to a measure")
    p.add_argument("model")
    p.add_argument("site")
    p.set_defaults(handler=cmd_classical)
    return parser


def _config_from_args(args) -> RunConfig:
    # shared flags may be absent from the namespace entirely (suppressed
    # defaults keep the subcommand position from clobbering the global one)
    config_file = getattr(args, "config", None)
    config = RunConfig.from_file(config_file) if config_file else RunConfig()
    overrides = {}
    policy = getattr(args, "policy", None)
    if policy:
        overrides["policy"] = "all_subsets" if policy == "all" else "atoms_plus_unit"
    if getattr(args, "cap", None):
        overrides["cap"] = args.cap
    if getattr(args, "format", None):
        overrides["format"] = args.format
    if overrides:
        config = RunConfig.from_dict({**config.to_dict(), **overrides})
    return config


def _load_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"{path}: {exc}") from None


def _load_model_site(model_path: str, site_path: str):
    try:
        site, sym = serialize.site_from_json(_load_json(site_path))
        model = serialize.model_from_json(_load_json(model_path))
    except InputError:
        raise
    except (KeyError, ValueError, TypeError) as exc:
        raise InputError(str(exc)) from None
    return model, site, sym


def _emit(report: dict, config: RunConfig) -> None:
    report = {"version": __version__, "config": config.to_dict(), **report}
    if config.format == "json":
        print(serialize.dumps(report))
    else:
        _print_text(report)


def _print_text(report: dict, indent: int = 0) -> None:
    pad = "  " * indent
    for key in sorted(report):
        value = report[key]
        if isinstance(value, dict):
            print(f"{pad}{key}:")
            _print_text(value, indent + 1)
        elif isinstance(value, list):
            print(f"{pad}{key}: {json.dumps(value, sort_keys=True)}")
        else:
            print(f"{pad}{key}: {value}")


def _word_list(site, spaces, config: RunConfig):
    try:
        return enumerate_words(site, spaces, config.policy, config.cap)
    except ValueError as exc:
        raise InputError(str(exc)) from None


# -- handlers ---------------------------------------------------------------------


def cmd_check(args, config: RunConfig) -> int:
    model, site, sym = _load_model_site(args.model, args.site)
    classes = derive_classes(site)
    model_report = check_model(model, site, classes, config.projector_tol, sym)
    words = _word_list(site, model.spaces, config)
    oracle = model.kernel_table(site, words, classes, site_sym=sym)
    axiom_report = check_axioms(
        oracle,
        positivity_tol=config.positivity_tol,
        normalization_tol=config.normalization_tol,
        additivity_tol=config.axiom_tol,
        factorizability_tol=config.axiom_tol,
        covariance_tol=config.axiom_tol,
        projectivity_tol=config.axiom_tol,
    )
    # inconclusive checks (restricted word policies) are not violations
    ok = model_report.ok and not axiom_report.failed
    _emit(
        {
            "model": model_report.to_dict(),
            "axioms": axiom_report.to_dict(),
            "words": len(words),
            "ok": ok,
        },
        config,
    )
    return EXIT_OK if ok else EXIT_MATH


def cmd_kernels(args, config: RunConfig) -> int:
    model, site, sym = _load_model_site(args.model, args.site)
    words = _word_list(site, model.spaces, config)
    oracle = model.kernel_table(site, words, site_sym=sym)
    print(serialize.dumps(serialize.oracle_to_json(oracle)))
    return EXIT_OK


def cmd_reconstruct(args, config: RunConfig) -> int:
    from .reconstruct import ReconstructionRefused, reconstruct, verify_decomposition

    if args.site:
        model, site, sym = _load_model_site(args.source, args.site)
        words = _word_list(site, model.spaces, config)
        oracle = model.kernel_table(site, words, site_sym=sym)
    else:
        try:
            oracle = serialize.oracle_from_json(_load_json(args.source))
        except InputError:
            raise
        except (KeyError, ValueError, TypeError) as exc:
            raise InputError(str(exc)) from None
    try:
        recon = reconstruct(oracle, rank_tol=config.rank_tol)
    except ReconstructionRefused as exc:
        print(f"reconstruction refused: {exc}", file=sys.stderr)
        return EXIT_MATH
    report = {
        "model": serialize.model_to_json(recon.model),
        "provenance": recon.provenance(),
    }
    if args.verify:
        from .equivalence import build_unitary

        decomp = verify_decomposition(recon, oracle, config.decomposition_tol)
        report["verification"] = decomp.to_dict()
        # idempotence: the emitted model's own table reconstructs to a
        # unitarily equivalent model
        second = reconstruct(
            recon.model.kernel_table(oracle.site, list(oracle.words)),
            rank_tol=config.rank_tol,
        )
        morphism = build_unitary(
            recon.model, second.model, oracle.site, list(oracle.words),
            config.equivalence_tol,
        )
        report["idempotence"] = morphism.to_dict()
        if not decomp.ok or not morphism.ok:
            _emit(report, config)
            return EXIT_MATH
    _emit(report, config)
    return EXIT_OK


def cmd_roundtrip(args, config: RunConfig) -> int:
    from .reconstruct import ReconstructionRefused, reconstruct, verify_decomposition

    model, site, sym = _load_model_site(args.model, args.site)
    words = _word_list(site, model.spaces, config)
    oracle = model.kernel_table(site, words, site_sym=sym)
    try:
        recon = reconstruct(oracle, rank_tol=config.rank_tol)
    except ReconstructionRefused as exc:
        print(f"reconstruction refused: {exc}", file=sys.stderr)
        return EXIT_MATH
    decomp = verify_decomposition(recon, oracle, config.decomposition_tol)
    shrink = {"ambient_dimension": model.dim, "minimal_dimension": recon.rank}
    _emit({"roundtrip": decomp.to_dict(), "dimensions": shrink}, config)
    return EXIT_OK if decomp.ok else EXIT_MATH


def cmd_equiv(args, config: RunConfig) -> int:
    from .equivalence import (
        EquivalenceRefused,
        build_unitary,
        check_wide_equivalence,
        minimal_modification,
    )

    m1, site, _ = _load_model_site(args.model1, args.site)
    try:
        m2 = serialize.model_from_json(_load_json(args.model2))
    except (KeyError, ValueError, TypeError) as exc:
        raise InputError(str(exc)) from None
    words = _word_list(site, m1.spaces, config)
    if args.action == "check":
        verdict = check_wide_equivalence(m1, m2, site, words, config.equivalence_tol)
        _emit({"equivalence": verdict.to_dict()}, config)
        return EXIT_OK if verdict.equivalent else EXIT_MATH
    mm1 = minimal_modification(m1, site, words)
    mm2 = minimal_modification(m2, site, words)
    try:
        morphism = build_unitary(mm1, mm2, site, words, config.equivalence_tol)
    except EquivalenceRefused as exc:
        print(f"unitary construction refused: {exc}", file=sys.stderr)
        return EXIT_MATH
    _emit(
        {
            "morphism": morphism.to_dict(),
            "unitary": serialize.matrix_to_json(morphism.u),
            "dimensions": {
                "first_minimal": mm1.dim,
                "second_minimal": mm2.dim,
            },
        },
        config,
    )
    return EXIT_OK if morphism.ok else EXIT_MATH


def cmd_markov(args, config: RunConfig) -> int:
    from .markov import check_dynamicity, check_narrow_commutativity, check_regression

    model, site, _ = _load_model_site(args.model, args.site)
    classes = derive_classes(site)
    dyn = check_dynamicity(model, site, classes, config.membership_tol)
    report = {"dynamicity": dyn.to_dict()}
    ok = dyn.ok
    if dyn.ok:
        reg = check_regression(model, site, classes=classes, tol=config.membership_tol)
        report["regression"] = reg.to_dict()
        ok = ok and reg.ok
    if model.is_narrow(site):
        comm = check_narrow_commutativity(
            model, site, classes, tol=config.commutativity_tol
        )
        report["narrow_commutativity"] = comm.to_dict()
    _emit(report, config)
    return EXIT_OK if ok else EXIT_MATH


def cmd_lift(args, config: RunConfig) -> int:
    from .bridges import verify_lift

    data = _load_json(args.field)
    try:
        devices = {
            x: {o: serialize.matrix_from_json(m) for o, m in fam.items()}
            for x, fam in data["devices"].items()
        }
        initial = serialize.matrix_from_json(data["initial"])
        depth = int(data["depth"])
        spaces = {x: tuple(v) for x, v in data["spaces"].items()}
    except (KeyError, ValueError, TypeError) as exc:
        raise InputError(str(exc)) from None
    report = verify_lift(devices, initial, depth, spaces, cap=config.cap)
    _emit({"lift": report.to_dict()}, config)
    return EXIT_OK if report.ok else EXIT_MATH


def cmd_classical(args, config: RunConfig) -> int:
    from .bridges import ReductionRefused, classical_reduce

    model, site, _ = _load_model_site(args.model, args.site)
    try:
        reduction = classical_reduce(model, site, config.classical_tol)
    except ReductionRefused as exc:
        print(f"classical reduction refused: {exc}", file=sys.stderr)
        return EXIT_MATH
    except ValueError as exc:
        raise InputError(str(exc)) from None
    _emit({"classical": reduction.to_dict()}, config)
    return EXIT_OK if reduction.ok else EXIT_MATH


if __name__ == "__main__":
    sys.exit(main())
