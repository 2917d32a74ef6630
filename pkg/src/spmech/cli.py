"""Command-line entry point.

Exit codes: 0 everything passed, 2 some property failed, 3 an enumeration
exceeded the sweep budget, 4 malformed input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .audit import CHECKS, AuditReport, audit_catalog
from .catalog import catalog
from .menus import MenuError, delta_group, delta_self, menu_group, menu_self
from .model import CapacityError, OpposingProfile, format_objects, object_letter, parse_profile
from .prices import PriceError, price_report
from .repro import REGISTRY, run_item
from .rules import (
    ControlRightsTable,
    RuleError,
    SpecificationIncompleteError,
    spec_from_json,
    validate_control_rights,
)
from .stochastic import (
    closed_form_conditional,
    empirical_conditional,
    exact_delta_distribution,
    exact_rank_distribution,
)
from .voting import VotingError, parse_game, power_indices, table_from_text

EXIT_OK, EXIT_FAIL, EXIT_CAPACITY, EXIT_INPUT = 0, 2, 3, 4


class InputError(Exception):
    """Bad command-line input; the message says where."""


@dataclass
class RunConfig:
    command: str
    rule_paths: list[str] = field(default_factory=list)
    n: int | None = None
    checks: list[str] = field(default_factory=list)
    out: str | None = None
    format: str = "json"
    workers: int = 1
    budget: int | None = None
    seed: int = 0

    def to_json(self) -> dict:
        return {
            "command": self.command,
            "rules": self.rule_paths,
            "n": self.n,
            "checks": self.checks,
            "format": self.format,
            "workers": self.workers,
            "budget": self.budget,
            "seed": self.seed,
        }


# -- input helpers ------------------------------------------------------------------------


def load_rule(path: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise InputError(f"{path}: rule spec must be a JSON object")
    try:
        return spec_from_json(data)
    except RuleError as exc:
        raise InputError(f"{path}: {exc}") from None


def _profile(text: str, what: str):
    try:
        return parse_profile(text)
    except ValueError as exc:
        raise InputError(f"{what}: {exc}") from None


def _agents(text: str) -> list[int]:
    try:
        return [int(a) for a in text.split(",") if a.strip()]
    except ValueError:
        raise InputError(f"--group: expected comma-separated agent indices, got {text!r}") from None


def _dump(payload: Any) -> str:
    return json.dumps(payload, indent=2, sort_keys=True)


def _csv(rows: Sequence[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    csv.writer(buffer, lineterminator="\n").writerows(rows)
    return buffer.getvalue()


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _reports_exit(reports: Sequence[AuditReport]) -> int:
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


# -- subcommands --------------------------------------------------------------------------


def cmd_audit(args, config: RunConfig) -> int:
    rule = load_rule(args.rule)
    checks = [c for c in args.checks.split(",") if c]
    unknown = [c for c in checks if c not in CHECKS]
    if unknown:
        raise InputError(f"--checks: unknown check(s) {', '.join(unknown)}; known: {', '.join(CHECKS)}")
    config.checks = checks
    reports = [CHECKS[c](rule) for c in checks]
    payload = {
        "config": config.to_json(),
        "rule": rule.to_json(),
        "reports": [r.to_json() for r in reports],
    }
    if config.format == "csv":
        rows = [["check", "property", "verdict", "work"]]
        rows += [[c, r.property, r.verdict, r.work] for c, r in zip(checks, reports)]
        _emit(_csv(rows), config.out)
    else:
        _emit(_dump(payload), config.out)
    return _reports_exit(reports)


def cmd_menu(args, config: RunConfig) -> int:
    rule = load_rule(args.rule)
    others = _profile(args.opposing, "--opposing")
    if len(others) != rule.n - 1:
        raise InputError(f"--opposing: need {rule.n - 1} orders, got {len(others)}")
    if not 0 <= args.agent < rule.n:
        raise InputError(f"--agent: must be in 0..{rule.n - 1}")
    if any(len(o) != rule.m for o in others):
        raise InputError(f"--opposing: orders must rank {rule.m} objects")
    opp = OpposingProfile(args.agent, tuple(others))
    own_menu = menu_self(rule, args.agent, opp)
    payload: dict[str, Any] = {
        "config": config.to_json(),
        "agent": args.agent,
        "opposing": args.opposing,
        "menu": format_objects(own_menu),
        "delta": delta_self(rule, args.agent, opp),
    }
    if args.group:
        group = _agents(args.group)
        try:
            tuples = menu_group(rule, args.agent, group, opp)
        except MenuError as exc:
            raise InputError(f"--group: {exc}") from None
        payload["group"] = group
        payload["group_menu"] = sorted("".join(object_letter(x) for x in t) for t in tuples)
        payload["group_delta"] = delta_group(rule, args.agent, group, opp)
    if config.format == "json":
        _emit(_dump(payload), config.out)
    else:
        lines = [f"menu: {payload['menu']}", f"delta: {payload['delta']}"]
        if args.group:
            lines += [
                f"group menu: {' '.join(payload['group_menu'])}",
                f"group delta: {payload['group_delta']}",
            ]
        _emit("\n".join(lines), config.out)
    return EXIT_OK


def cmd_dist(args, config: RunConfig) -> int:
    rule = load_rule(args.rule)
    if not 0 <= args.agent < rule.n:
        raise InputError(f"--agent: must be in 0..{rule.n - 1}")
    if args.law in ("rank", "delta"):
        law = (exact_rank_distribution if args.law == "rank" else exact_delta_distribution)(rule, args.agent)
        header = ["value", "numerator", "denominator", "decimal"]
        rows = [list(r) for r in law.rows()]
        ok = True
    else:
        table = empirical_conditional(rule, args.agent)
        header = ["r", "s", "numerator", "denominator", "decimal", "closed_form"]
        rows = []
        ok = True
        for (r, s), value in sorted(table.items()):
            expected = closed_form_conditional(rule.m, r, s)
            ok &= value == expected
            rows.append([r, s, value.numerator, value.denominator, float(value), str(expected)])
    if config.format == "csv":
        _emit(_csv([header] + rows), config.out)
    else:
        payload = {
            "config": config.to_json(),
            "agent": args.agent,
            "law": args.law,
            "rows": [dict(zip(header, row)) for row in rows],
        }
        _emit(_dump(payload), config.out)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_prices(args, config: RunConfig) -> int:
    rule = load_rule(args.rule)
    if rule.kind != "ttc":
        raise InputError(f"{args.rule}: prices need a ttc rule, got {rule.kind!r}")
    profile = _profile(args.profile, "--profile")
    if len(profile) != rule.n or any(len(o) != rule.n for o in profile):
        raise InputError(f"--profile: need {rule.n} orders over {rule.n} objects")
    try:
        report = price_report(rule.endowment, profile)
    except PriceError as exc:
        raise InputError(str(exc)) from None
    if not args.witness:
        report.pop("witness")
    if config.format == "json":
        _emit(_dump({"config": config.to_json(), **report}), config.out)
    else:
        letter = object_letter
        lines = ["assignment: " + " ".join(letter(x) for x in report["assignment"])]
        lines += [f"weak: p({letter(u)}) <= p({letter(v)})" for u, v in report["weak"]]
        lines += [f"strict: p({letter(u)}) < p({letter(v)})" for u, v in report["strict"]]
        if args.witness:
            lines.append("witness: " + " ".join(f"{letter(x)}={p}" for x, p in enumerate(report["witness"])))
        for item in report["agents"]:
            lines.append(
                f"agent {item['agent']}: budget {format_objects(item['budget_intersection'])}"
                f" menu {format_objects(item['menu'])}"
            )
        lines.append(f"menus match: {report['menus_match']}")
        _emit("\n".join(lines), config.out)
    return EXIT_OK if report["menus_match"] else EXIT_FAIL


def cmd_voting(args, config: RunConfig) -> int:
    try:
        if args.game:
            rule = parse_game(args.game)
        else:
            try:
                text = Path(args.table).read_text()
            except OSError as exc:
                raise InputError(f"{args.table}: {exc.strerror}") from None
            rule = table_from_text(text, name=Path(args.table).stem)
    except VotingError as exc:
        raise InputError(str(exc)) from None
    report = power_indices(rule)
    if config.format == "csv":
        _emit(_csv(report.csv_rows()), config.out)
    else:
        _emit(_dump({"config": config.to_json(), **report.to_json()}), config.out)
    return EXIT_OK


def cmd_repro(args, config: RunConfig) -> int:
    if args.all:
        ids = [i for i in REGISTRY if args.n >= REGISTRY[i].min_n]
    elif args.id:
        ids = [i.strip() for i in args.id.split(",") if i.strip()]
        unknown = [i for i in ids if i not in REGISTRY]
        if unknown:
            raise InputError(f"--id: unknown id(s) {', '.join(unknown)}; known: {', '.join(REGISTRY)}")
    else:
        raise InputError("repro needs --id or --all")
    bundles = []
    for item_id in ids:
        try:
            bundles.append(run_item(item_id, args.n, config.seed))
        except ValueError as exc:
            raise InputError(f"{item_id}: {exc}") from None
    if config.format == "csv":
        rows = [["id", "n", "verdict", "reports", "failed"]]
        for b in bundles:
            rows.append([b.id, b.n, "pass" if b.passed else "fail", len(b.reports), sum(not r.passed for r in b.reports)])
        _emit(_csv(rows), config.out)
    else:
        _emit(_dump({"config": config.to_json(), "bundles": [b.to_json() for b in bundles]}), config.out)
    return EXIT_OK if all(b.passed for b in bundles) else EXIT_FAIL


def cmd_validate(args, config: RunConfig) -> int:
    path = args.rule
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise InputError(f"{path}: rule spec must be a JSON object")
    violations: list[dict] = []
    if data.get("kind") in ("he", "tc") and "control" in data and "n" in data:
        try:
            n = int(data["n"])
            table = ControlRightsTable.from_json(n, data["control"])
        except (RuleError, KeyError, TypeError, ValueError) as exc:
            raise InputError(f"{path}: {exc}") from None
        report = validate_control_rights(table, n, n)
        violations = [
            {"condition": v.condition, "submatching": [list(p) for p in v.submatching], "detail": v.detail}
            for v in report.violations
        ]
        if data["kind"] == "he" and not table.owners_only:
            violations.append({"condition": "owners-only", "submatching": None, "detail": "brokers in a hierarchical exchange table"})
    if not violations:
        load_rule(path)
    payload = {"config": config.to_json(), "rule": path, "valid": not violations, "violations": violations}
    _emit(_dump(payload), config.out)
    return EXIT_OK if not violations else EXIT_FAIL


def cmd_catalog(args, config: RunConfig) -> int:
    entries = catalog(args.n)
    if args.export:
        target = Path(args.export)
        target.mkdir(parents=True, exist_ok=True)
        for e in entries:
            (target / f"{e.key}{args.n}.json").write_text(_dump(e.rule.to_json()) + "\n")
    payload: dict[str, Any] = {
        "config": config.to_json(),
        "rules": [{"key": e.key, "expected": e.expected} for e in entries],
    }
    code = EXIT_OK
    if args.audit:
        results = audit_catalog(args.n)
        payload["audit"] = [
            {"rule": r.key, "check": r.check, "expected": r.expected, "verdict": r.report.verdict, "matches": r.matches}
            for r in results
        ]
        code = EXIT_OK if all(r.matches for r in results) else EXIT_FAIL
    if config.format == "csv" and args.audit:
        rows = [["rule", "check", "expected", "verdict", "matches"]]
        rows += [[a["rule"], a["check"], a["expected"], a["verdict"], a["matches"]] for a in payload["audit"]]
        _emit(_csv(rows), config.out)
    else:
        _emit(_dump(payload), config.out)
    return code


# -- parser -------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--workers", type=int, default=os.cpu_count() or 1, help="worker count (recorded)")
    common.add_argument("--budget", type=int, help="profile budget for full sweeps")
    common.add_argument("--seed", type=int, default=0, help="seed for sampled checks (recorded)")

    parser = argparse.ArgumentParser(prog="spmech", description="Exact menu, power and freedom audits for assignment and voting rules.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("audit", parents=[common], help="run property checks on a rule")
    p.add_argument("--rule", required=True)
    p.add_argument("--checks", default="sp,gsp,eff,nonbossy,nonautarky,realloc")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("menu", parents=[common], help="menu of one agent at an opposing profile")
    p.add_argument("--rule", required=True)
    p.add_argument("--agent", type=int, required=True)
    p.add_argument("--opposing", required=True, help='other agents\' orders, e.g. "abc,acb"')
    p.add_argument("--group", help="comma-separated agents for a group menu")
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.set_defaults(func=cmd_menu)

    p = sub.add_parser("dist", parents=[common], help="exact law of rank or menu size under impartial culture")
    p.add_argument("--rule", required=True)
    p.add_argument("--agent", type=int, required=True)
    p.add_argument("--law", choices=["rank", "delta", "conditional"], required=True)
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.set_defaults(func=cmd_dist)

    p = sub.add_parser("prices", parents=[common], help="supporting price constraints for a TTC outcome")
    p.add_argument("--rule", required=True)
    p.add_argument("--profile", required=True)
    p.add_argument("--witness", action="store_true")
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.set_defaults(func=cmd_prices)

    p = sub.add_parser("voting", parents=[common], help="power indices of a binary game")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--game", help='weighted game such as "[3;2,1,1]"')
    source.add_argument("--table", help="file holding a 0/1 truth table")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.set_defaults(func=cmd_voting)

    p = sub.add_parser("repro", parents=[common], help="run reproduction harnesses")
    p.add_argument("--id", help="comma-separated harness ids")
    p.add_argument("--all", action="store_true")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--list", action="store_true", help="list harness ids and exit")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.set_defaults(func=cmd_repro)

    p = sub.add_parser("validate", parents=[common], help="validate a rule spec file")
    p.add_argument("--rule", required=True)
    p.set_defaults(func=cmd_validate, format="json")

    p = sub.add_parser("catalog", parents=[common], help="list, export or audit the rule catalog")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--export", help="directory for one JSON spec per rule")
    p.add_argument("--audit", action="store_true")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.set_defaults(func=cmd_catalog)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "repro" and args.list:
        for item in REGISTRY.values():
            print(f"{item.id}\t{item.description}")
        return EXIT_OK
    config = RunConfig(
        command=args.command,
        rule_paths=[args.rule] if getattr(args, "rule", None) else [],
        n=getattr(args, "n", None),
        out=args.out,
        format=args.format,
        workers=args.workers,
        budget=args.budget,
        seed=args.seed,
    )
    try:
        if config.budget is not None:
            if config.budget <= 0:
                raise InputError("--budget must be positive")
            os.environ["SPMECH_BUDGET"] = str(config.budget)
        if config.workers <= 0:
            raise InputError("--workers must be positive")
        return args.func(args, config)
    except InputError as exc:
        print(f"spmech: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except CapacityError as exc:
        print(f"spmech: capacity: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except SpecificationIncompleteError as exc:
        print(f"spmech: error: incomplete rule spec: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
