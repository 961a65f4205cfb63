"""Command-line front end.

Exit codes: 0 success, 1 domain failure (invalid document, failed suite,
oracle disagreement), 2 usage or parse error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from typing import Optional, Sequence

import numpy as np

from .analysis import CONDITIONS, AnalysisConfig, OracleMismatchError, analyze
from .document import DocumentInvalid, DocumentParseError, read_document
from .gaps import env_defaults
from .kr import KRCertificateError, kr_distance
from .measures import Measure
from .oracles import MAX_ORACLE_SIZE

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE = 0, 1, 2

log = logging.getLogger("sufeller")


class UsageError(Exception):
    pass


def _load(path):
    try:
        return read_document(path)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def cmd_validate(args) -> int:
    _load(args.path)
    print(f"{args.path}: ok")
    return EXIT_OK


def _conditions(text: str) -> tuple:
    conds = tuple(c.strip() for c in text.split(",") if c.strip())
    bad = [c for c in conds if c not in CONDITIONS]
    if bad or not conds:
        raise UsageError(f"--conditions takes a comma list drawn from {','.join(CONDITIONS)}")
    return conds


def _analysis_config(args, doc) -> AnalysisConfig:
    env_eps, env_win = env_defaults()
    has_env_eps = "SUFELLER_EPSILON" in os.environ
    has_env_win = "SUFELLER_WINDOW" in os.environ
    eps = args.epsilon
    if eps is None:
        eps = env_eps if has_env_eps else doc.config.get("epsilon", env_eps)
    win = args.window
    if win is None:
        win = env_win if has_env_win else doc.config.get("window", env_win)
    conds = _conditions(args.conditions) if args.conditions else tuple(doc.config.get("conditions", CONDITIONS))
    k_max = args.k_max if args.k_max is not None else doc.config.get("k_max")
    return AnalysisConfig(float(eps), int(win), conds, oracle=args.oracle == "on", k_max=k_max)


def _csv_path(report_path: Optional[str], name: str, multiple: bool) -> Optional[str]:
    if report_path is None:
        return None
    stem = os.path.splitext(report_path)[0]
    return f"{stem}.{name}.csv" if multiple else f"{stem}.csv"


def cmd_analyze(args) -> int:
    doc = _load(args.path)
    cfg = _analysis_config(args, doc)
    targets = doc.targets()
    if not targets:
        raise DocumentInvalid(["$.kernels: no kernel family or kernel-plus-sequence to analyse"])
    out = {"document": args.path, "families": {}}
    for name, F in targets:
        if cfg.oracle and len(F.s2_space) > MAX_ORACLE_SIZE:
            raise UsageError(f"--oracle on refused for {name!r}: |S2| = {len(F.s2_space)} exceeds {MAX_ORACLE_SIZE}")
        funcs, sets, base = doc.witnesses_for(F)
        report = analyze(F, funcs, sets, base, cfg)
        out["families"][name] = report.to_dict()
        path = _csv_path(args.report, name, len(targets) > 1)
        if path is not None:
            with open(path, "w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh)
                w.writerow(["condition", "witness_id", "n", "gap"])
                for row in report.csv_rows():
                    w.writerow([row[0], row[1], row[2], repr(row[3])])
    text = json.dumps(out, indent=1)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
        for name, rep in out["families"].items():
            print(f"{name}: semi_uniform_feller={rep['semi_uniform_feller']} "
                  f"marginal_tv={rep['hypotheses']['marginal_tv']} full_tv={rep['full_tv']}")
    else:
        print(text)
    return EXIT_OK


def _weights(text: str) -> np.ndarray:
    try:
        return np.array([float(x) for x in text.split(",")])
    except ValueError:
        raise UsageError(f"cannot read weights {text!r}") from None


def cmd_kr(args) -> int:
    doc = _load(args.path)
    if args.space not in doc.spaces:
        raise DocumentInvalid([f"--space: unresolved reference {args.space!r} to a space"])
    space = doc.spaces[args.space]
    try:
        mu, nu = Measure(space, _weights(args.mu)), Measure(space, _weights(args.nu))
    except ValueError as exc:
        raise DocumentInvalid([f"--mu/--nu: {exc}"]) from None
    res = kr_distance(mu, nu)
    print(json.dumps({"kr": repr(res.value), "dual_bound": repr(res.certificate.dual_bound),
                      "gap": repr(res.certificate.gap),
                      "witness": [repr(float(x)) for x in res.witness.values]}, indent=1))
    return EXIT_OK


def _sizes(text: str) -> tuple:
    try:
        sizes = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise UsageError(f"cannot read sizes {text!r}") from None
    if len(sizes) != 3:
        raise UsageError("--sizes takes n1,n2,N")
    return sizes


def cmd_generate(args) -> int:
    from .harness.documents import recipe_document
    from .harness.generators import CONSTRUCTIONS, InstanceRecipe

    recipe_name = {"indicator": "indicator_example"}.get(args.recipe, args.recipe)
    if recipe_name not in CONSTRUCTIONS:
        raise UsageError(f"unknown recipe {args.recipe!r}; choose from {', '.join(CONSTRUCTIONS)}")
    try:
        recipe = InstanceRecipe(args.seed, _sizes(args.sizes), recipe_name)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    recipe_document(recipe).write(args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_verify(args) -> int:
    from .harness.suites import SUITES, reports_json, run_suite, summary_table

    if args.suite != "all" and args.suite not in SUITES:
        raise UsageError(f"unknown suite {args.suite!r}; choose from all, {', '.join(SUITES)}")
    if args.trials < 1:
        raise UsageError("--trials must be positive")
    reports = run_suite(args.suite, args.trials, args.seed, args.dump_dir, args.jobs)
    print(summary_table(reports))
    for r in reports:
        for f in r.failures[:10]:
            print(f"  {r.name} trial {f['trial']} (seed {f['seed']}): {f['message']}", file=sys.stderr)
        for note in r.notes:
            print(f"  {r.name}: {note}")
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(reports_json(reports) + "\n")
    return EXIT_OK if all(r.ok for r in reports) else EXIT_DOMAIN


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sufeller",
                                description="Finite checks of set-wise continuity of stochastic kernels.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="check a document's references and invariants")
    v.add_argument("path")
    v.set_defaults(func=cmd_validate)

    a = sub.add_parser("analyze", help="gap series, verdicts and conclusion for every family")
    a.add_argument("path")
    a.add_argument("--conditions", help="comma list from a,b,c,d,e (default: all)")
    a.add_argument("--epsilon", type=float)
    a.add_argument("--window", type=int)
    a.add_argument("--k-max", type=int, dest="k_max", help="intersection depth for base families")
    a.add_argument("--oracle", choices=("on", "off"), default="off",
                   help="recompute every gap by subset enumeration and require agreement")
    a.add_argument("--report", help="write the report here (CSV companions alongside)")
    a.set_defaults(func=cmd_analyze)

    k = sub.add_parser("kr", help="certified KR distance between two measures on a document space")
    k.add_argument("path")
    k.add_argument("--space", required=True)
    k.add_argument("--mu", required=True, help="comma-separated weights")
    k.add_argument("--nu", required=True, help="comma-separated weights")
    k.set_defaults(func=cmd_kr)

    g = sub.add_parser("generate", help="write an instance document for a recipe")
    g.add_argument("--recipe", required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--sizes", default="3,3,20", help="n1,n2,N (default 3,3,20)")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("verify", help="run a theorem suite")
    s.add_argument("--suite", required=True)
    s.add_argument("--trials", type=int, default=50)
    s.add_argument("--seed", type=int, default=42)
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--dump-dir", dest="dump_dir", default="sufeller-failures")
    s.add_argument("--report", help="write suite reports as JSON")
    s.set_defaults(func=cmd_verify)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DocumentParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DocumentInvalid as exc:
        for d in exc.diagnostics:
            print(d, file=sys.stderr)
        return EXIT_DOMAIN
    except (OracleMismatchError, KRCertificateError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
