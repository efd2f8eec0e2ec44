"""Command-line entry point.

Subcommands: ``conditions``, ``lts``, ``sslts``, ``cose``, ``congruence``,
``refine``, ``threshold``, ``verify``.  Exit code 0 means every requested
check passed, 1 means a check failed (with a counterexample where one
exists), 2 means a usage error or diagnostic.  Paths that do not exist are
resolved against the bundled corpus, so ``pcsp refine mutex.pcsp ...``
works out of the box.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import analysis, conditions, cose, dot, reduction, ssos, std_semantics
from .errors import ParseError, PcspError
from .parser import parse_file

CORPUS_DIR = Path(__file__).parent / "corpus"


def corpus_path(name: str) -> Path:
    return CORPUS_DIR / name


def _resolve(path: str) -> Path:
    p = Path(path)
    if p.exists():
        return p
    candidate = corpus_path(path)
    if candidate.exists():
        return candidate
    raise FileNotFoundError(f"no such file: {path}")


def _sizes(spec: str) -> list[int]:
    if ".." in spec:
        lo, hi = spec.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(part) for part in spec.split(",") if part]


def _emit(args, payload: dict, text: str) -> None:
    if args.format == "json":
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(text)


def _add_common(p, with_format=True):
    p.add_argument("file", help="definition file (.pcsp); bundled corpus "
                   "names are resolved automatically")
    if with_format:
        p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--max-states", type=int, default=200_000)


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="pcsp",
        description="Parameterised verification for a CSP subset: operational "
        "semantics, refinement checking, and type-reduction thresholds.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("conditions", help="run the syntactic condition checkers")
    _add_common(p)
    p.add_argument("--proc", help="check one process (default: all)")
    p.add_argument("--eqt-model", choices=("traces", "failures"),
                   help="also sample the equality-test condition in this model")
    p.add_argument("--eqt-sizes", default="2,3")
    p.add_argument("--typesym-sizes",
                   help="also sample semantic symmetry in t at these sizes")

    p = sub.add_parser("lts", help="build the concrete transition system")
    _add_common(p)
    p.add_argument("--proc", required=True)
    p.add_argument("--tsize", type=int, required=True)
    p.add_argument("--dot", action="store_true")

    p = sub.add_parser("sslts", help="build the semi-symbolic transition system")
    _add_common(p)
    p.add_argument("--proc", required=True)
    p.add_argument("--dot", action="store_true")

    p = sub.add_parser("cose", help="instantiate the symbolic system at a size")
    _add_common(p)
    p.add_argument("--proc", required=True)
    p.add_argument("--tsize", type=int, required=True)
    p.add_argument("--dot", action="store_true")

    p = sub.add_parser("congruence", help="check the two concrete semantics "
                       "are strongly bisimilar")
    _add_common(p)
    p.add_argument("--proc", required=True)
    p.add_argument("--tsize", type=int, required=True)

    p = sub.add_parser("refine", help="check a refinement at one size")
    _add_common(p)
    p.add_argument("--spec", required=True)
    p.add_argument("--impl", required=True)
    p.add_argument("--model", choices=("traces", "failures"), default="traces")
    p.add_argument("--tsize", type=int, required=True)

    p = sub.add_parser("threshold", help="compute the specification threshold")
    _add_common(p)
    p.add_argument("--spec", required=True)
    p.add_argument("--model", choices=("traces", "failures"), default="traces")

    p = sub.add_parser("verify", help="run the full reduction pipeline")
    _add_common(p)
    p.add_argument("--spec", required=True)
    p.add_argument("--impl", required=True)
    p.add_argument("--model", choices=("traces", "failures"), default="traces")
    p.add_argument("--sizes", required=True, help="e.g. 1..4 or 2,3")
    p.add_argument("--abst", help="abstraction process for the universal "
                   "conclusion")
    p.add_argument("--valid-from", type=int,
                   help="size from which the abstraction premise holds")
    p.add_argument("--sample-premise", default="",
                   help="sizes at which to sample the abstraction premise")
    p.add_argument("--eqt-sizes", default="2,3")
    p.add_argument("--assume-typesym", action="store_true",
                   help="accept symmetry in t of the implementation on "
                   "assertion when the syntactic check fails")
    return ap


def _fmt_verdict(v) -> str:
    if v.holds:
        return "holds"
    return f"FAILS with counterexample {v.counterexample_str()}"


def cmd_conditions(args, defs) -> int:
    names = [args.proc] if args.proc else sorted(defs.equations)
    reports = {}
    failed = False
    for name in names:
        rs = conditions.check_all(name, defs)
        if args.eqt_model:
            rs.append(conditions.revposconjeqt_evidence(
                name, defs, args.eqt_model, tuple(_sizes(args.eqt_sizes)),
                args.max_states))
        if args.typesym_sizes:
            rs.append(analysis.permutation_bisim_check(
                defs, name, _sizes(args.typesym_sizes), args.max_states))
        reports[name] = rs
        failed = failed or any(r.verdict == "fail" for r in rs)
    payload = {n: [r.to_dict() for r in rs] for n, rs in reports.items()}
    text_lines = []
    for n, rs in reports.items():
        text_lines.append(f"== {n}")
        for r in rs:
            text_lines.append("  " + r.render().replace("\n", "\n  "))
    _emit(args, payload, "\n".join(text_lines))
    return 1 if failed else 0


def cmd_lts(args, defs) -> int:
    lts = std_semantics.build_lts(defs, args.proc, args.tsize, args.max_states)
    if args.dot:
        print(dot.lts_to_dot(lts, "lts"), end="")
        return 0
    _emit(args, {"proc": args.proc, "tsize": args.tsize,
                 "states": lts.n_states(), "edges": lts.n_edges()},
          f"{args.proc} at #T={args.tsize}: {lts.n_states()} states, "
          f"{lts.n_edges()} transitions")
    return 0


def cmd_sslts(args, defs) -> int:
    s = ssos.build_sslts(defs, args.proc, args.max_states)
    if args.dot:
        print(dot.sslts_to_dot(s, "sslts"), end="")
        return 0
    _emit(args, {"proc": args.proc, "states": s.n_states(), "edges": s.n_edges()},
          f"{args.proc}: {s.n_states()} symbolic states, "
          f"{s.n_edges()} symbolic transitions")
    return 0


def cmd_cose(args, defs) -> int:
    lts = cose.concretize(defs, args.proc, args.tsize, max_states=args.max_states)
    if args.dot:
        print(dot.lts_to_dot(lts, "cose"), end="")
        return 0
    _emit(args, {"proc": args.proc, "tsize": args.tsize,
                 "states": lts.n_states(), "edges": lts.n_edges()},
          f"{args.proc} at #T={args.tsize}: {lts.n_states()} configurations, "
          f"{lts.n_edges()} transitions")
    return 0


def cmd_congruence(args, defs) -> int:
    std = std_semantics.build_lts(defs, args.proc, args.tsize, args.max_states)
    sym = cose.concretize(defs, args.proc, args.tsize, max_states=args.max_states)
    ok, formula = analysis.strong_bisim(std, sym)
    payload = {"proc": args.proc, "tsize": args.tsize, "bisimilar": ok}
    if not ok:
        payload["distinguished_by"] = formula
    _emit(args, payload,
          f"standard and environment semantics of {args.proc} at "
          f"#T={args.tsize}: "
          + ("strongly bisimilar" if ok else f"NOT bisimilar ({formula})"))
    return 0 if ok else 1


def cmd_refine(args, defs) -> int:
    lhs = std_semantics.build_lts(defs, args.spec, args.tsize, args.max_states)
    rhs = std_semantics.build_lts(defs, args.impl, args.tsize, args.max_states)
    verdict = analysis.refines(lhs, rhs, args.model)
    op = "[T=" if args.model == "traces" else "[F="
    payload = {"spec": args.spec, "impl": args.impl, "model": args.model,
               "tsize": args.tsize}
    payload.update(verdict.to_dict())
    _emit(args, payload,
          f"{args.spec} {op} {args.impl} at #T={args.tsize}: "
          + _fmt_verdict(verdict))
    return 0 if verdict.holds else 1


def cmd_threshold(args, defs) -> int:
    report = reduction.compute_thresholds(defs, args.spec, args.model,
                                          args.max_states)
    value = report.traces if args.model == "traces" else report.failures
    lines = [f"B = {value} ({args.model} model threshold of {args.spec})"]
    if report.traces_witness:
        lines.append("traces witness: " + report.traces_witness.render())
    if args.model == "failures" and report.failures_witness:
        lines.append("failures witness: " + report.failures_witness)
    _emit(args, {"spec": args.spec, "model": args.model, "B": value,
                 "thresholds": report.to_dict()}, "\n".join(lines))
    return 0


def cmd_verify(args, defs) -> int:
    verdict = reduction.verify_pmcp(
        defs, args.spec, args.impl, args.model, _sizes(args.sizes),
        abst=args.abst, valid_from=args.valid_from,
        premise_sizes=_sizes(args.sample_premise) if args.sample_premise else (),
        eqt_sizes=tuple(_sizes(args.eqt_sizes)),
        assume_typesym=args.assume_typesym, max_states=args.max_states)
    lines = [f"mode: {verdict.mode}", f"model: {verdict.model}"]
    if verdict.bound is not None:
        lines.append(f"B = {verdict.bound}")
    for c in verdict.conditions:
        lines.append(c.render())
    for r in verdict.premises:
        lines.append(f"premise {r.lhs} vs {r.rhs} [{r.method}]: "
                     + _fmt_verdict(r.verdict))
    for r in verdict.sizes:
        lines.append(f"#T={r.n} [{r.method}] {r.lhs} vs {r.rhs}: "
                     + _fmt_verdict(r.verdict))
    lines.append("conclusion: " + verdict.conclusion)
    for c in verdict.caveats:
        lines.append("caveat: " + c)
    _emit(args, verdict.to_dict(), "\n".join(lines))
    return 0 if verdict.holds() else 1


_COMMANDS = {
    "conditions": cmd_conditions,
    "lts": cmd_lts,
    "sslts": cmd_sslts,
    "cose": cmd_cose,
    "congruence": cmd_congruence,
    "refine": cmd_refine,
    "threshold": cmd_threshold,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    ap = make_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        defs = parse_file(_resolve(args.file))
        return _COMMANDS[args.command](args, defs)
    except ParseError as exc:
        for d in exc.diagnostics:
            print(d.render(), file=sys.stderr)
        return 2
    except (PcspError, FileNotFoundError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
