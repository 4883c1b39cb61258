"""Command-line driver: `bfo check|run-source|run-target|translate|audit|crosscheck`.

Exit codes: 0 success, 1 a semantic outcome (type error, Fail, audit violation,
inconsistency), 2 bad input files or usage.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path

from .audit import audit_run
from .checker import check_program, dump_env
from .corpus import corpus_root, load_manifest
from .crosscheck import DEFAULT_STEPS, DEFAULT_STREAMS, crosscheck
from .emit import emit
from .errors import AuditViolation, BfoError
from .explore import DEFAULT_FUEL as EXPLORE_FUEL
from .explore import explore
from .interp import DEFAULT_FUEL as RUN_FUEL
from .interp import DONE, Havoc, run
from .parser import parse
from .target import term_head_str
from .tparse import parse_target
from .translate import translate_program
from .tsemantics import DEFAULT_DOMAIN, RUNNING, TargetMachine, parse_domain

SCHEMA = "bfo-report/1"
EXIT_OK, EXIT_SEMANTIC, EXIT_IO = 0, 1, 2


class _Usage(Exception):
    pass


def _jsonable(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (int, float, str, bool)) or v is None:
        return v
    return repr(v)


class Out:
    """Collects the report; prints text as it goes or one JSON document at the end."""

    def __init__(self, args):
        self.json = getattr(args, "json", False)
        self.report = {"schema": SCHEMA, "command": args.command, "input": getattr(args, "file", None)}

    def say(self, text: str) -> None:
        if not self.json:
            print(text)

    def set(self, **kw) -> None:
        self.report.update(kw)

    def finish(self, code: int) -> int:
        if self.json:
            self.report["exit"] = code
            print(json.dumps(_jsonable(self.report), indent=2, ensure_ascii=False))
        return code


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise _Usage(f"cannot read {path}: {e.strerror or e}") from None


def _havoc(args) -> Havoc:
    domain = args.domain
    if args.havoc is not None:
        try:
            values = [int(x) for x in args.havoc.split(",") if x.strip()]
        except ValueError:
            raise _Usage(f"bad --havoc list {args.havoc!r}") from None
        return Havoc(values=values)
    return Havoc(seed=args.seed, lo=min(domain), hi=max(domain))


def _domain(text: str):
    try:
        d = parse_domain(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None
    if not d:
        raise argparse.ArgumentTypeError("the domain is empty")
    return d


def _typed(args, out: Out, unchecked: bool = False):
    text = _read(args.file)
    tp = check_program(parse(text), unchecked=unchecked)
    return text, tp


def _target(args):
    text = _read(args.file)
    if args.file.endswith(".bfo"):
        return translate_program(check_program(parse(text)), peephole=not getattr(args, "no_peephole", False))
    return parse_target(text)


# ---------------------------------------------------------------- commands

def cmd_check(args, out: Out) -> int:
    text, tp = _typed(args, out)
    out.say(f"{args.file}: ok")
    funcs = {name: str(ft) for name, ft in tp.fn_types.items()}
    out.set(ok=True, functions=funcs)
    if args.dump_env:
        listing = dump_env(tp, text)
        out.set(env=listing)
        if not out.json:
            sys.stdout.write(listing)
    return EXIT_OK


def cmd_run_source(args, out: Out) -> int:
    _, tp = _typed(args, out)
    hv = _havoc(args)
    if args.audit:
        res, report = audit_run(tp, hv, args.fuel or RUN_FUEL, trace=args.trace)
        out.set(audit={"checks": report.checks, "max_own": str(report.max_own)})
    else:
        res = run(tp, hv, args.fuel or RUN_FUEL, trace=args.trace)
    if args.trace and res.trace:
        for s in res.trace:
            out.say(s.render())
        out.set(trace=[s.render() for s in res.trace])
    out.say(f"status: {res.status}")
    if res.status == DONE:
        out.say(f"value: {res.value}")
    out.say(f"havoc: {res.havoc}")
    out.set(status=res.status, value=res.value if res.status == DONE else None, steps=res.steps, havoc=res.havoc)
    return EXIT_OK if res.status == DONE else EXIT_SEMANTIC


def cmd_run_target(args, out: Out) -> int:
    p = _target(args)
    if args.explore:
        r = explore(p, args.domain, args.fuel or EXPLORE_FUEL)
        out.say(f"fail reachable: {'yes' if r.fail_reachable else 'no'}")
        if r.fail_reachable:
            out.say(f"witness choices: {r.witness}")
            if args.trace:
                for _, t in r.trace:
                    out.say(f"  {t}")
        out.set(explore=r.to_json(), domain=list(args.domain))
        return EXIT_SEMANTIC if r.fail_reachable else EXIT_OK
    trace = []
    observers = [_TermTrace(trace)] if args.trace else []
    m = TargetMachine(p, _havoc(args), observers=observers)
    fuel = args.fuel or RUN_FUEL
    while m.status == RUNNING and m.steps < fuel:
        m.step()
    status = m.status if m.status != RUNNING else "FuelExhausted"
    for line in trace:
        out.say(line)
    out.say(f"status: {status}")
    if status == DONE:
        out.say(f"value: {m.value}")
    out.say(f"choices: {m.havoc.used}")
    out.set(status=status, value=_jsonable(m.value) if status == DONE else None, steps=m.steps,
            choices=m.havoc.used, trace=trace or None)
    return EXIT_OK if status == DONE else EXIT_SEMANTIC


class _TermTrace:
    def __init__(self, lines):
        self.lines = lines

    def on_term(self, m, t):
        self.lines.append(f"{m.steps + 1:>5} {term_head_str(t)}")


def cmd_translate(args, out: Out) -> int:
    text = _read(args.file)
    tp = check_program(parse(text))
    p = translate_program(tp, peephole=not args.no_peephole)
    rendered = emit(p, args.emit)
    if args.output:
        try:
            Path(args.output).write_text(rendered, encoding="utf-8")
        except OSError as e:
            raise _Usage(f"cannot write {args.output}: {e.strerror or e}") from None
        out.say(f"wrote {args.output}")
    elif not out.json:
        sys.stdout.write(rendered)
    out.set(emit=args.emit, output=args.output, text=None if args.output else rendered)
    return EXIT_OK


def cmd_audit(args, out: Out) -> int:
    _, tp = _typed(args, out, unchecked=args.audit_only)
    for pos, code, msg in tp.problems:
        out.say(f"note: {code}: {msg}" + (f" (line {pos[0]})" if pos else ""))
    res, report = audit_run(tp, _havoc(args), args.fuel or RUN_FUEL, collect=True)
    out.say(f"status: {res.status}")
    out.say(f"audit: {report.checks} checks, max ownership sum {report.max_own}")
    for v in report.violations:
        out.say(f"violation[{v.kind}]: {v.message}")
        for holder, ty in v.details.get("holders", ()):
            out.say(f"  {holder}: {ty}")
    out.set(status=res.status, checks=report.checks, max_own=str(report.max_own),
            problems=[{"code": c, "message": m} for _, c, m in tp.problems],
            violations=[{"kind": v.kind, "message": v.message, "own_sum": str(v.details.get("own_sum")),
                         "holders": v.details.get("holders", [])} for v in report.violations])
    return EXIT_SEMANTIC if report.violations else EXIT_OK


def _crosscheck_file(path: str, streams: int, seed: int, domain, fuel: int, steps: int, havoc) -> dict:
    tp = check_program(parse(Path(path).read_text(encoding="utf-8")))
    return crosscheck(tp, streams, seed, domain, fuel, steps, havoc).to_json()


def _summarise(out: Out, name: str, rep: dict) -> None:
    ex = rep["explore"]
    out.say(f"{name}: {rep['consistent_streams']}/{len(rep['streams'])} streams consistent, "
            f"source fail {'seen' if rep['source_failed'] else 'not seen'}, "
            f"explore: fail {'reachable' if ex['fail_reachable'] else 'unreachable'} -> "
            f"{'ok' if rep['ok'] else 'FAILED'}")
    for p in rep["problems"]:
        out.say(f"  problem: {p}")
    if rep["counterexample"] is not None:
        out.say(f"  shrunk havoc stream: {rep['counterexample']}")


def cmd_crosscheck(args, out: Out) -> int:
    havoc = None
    if args.havoc is not None:
        havoc = _havoc(args).values
    fuel = args.fuel or EXPLORE_FUEL
    if args.corpus:
        paths = sorted({str(e.path) for e in load_manifest() if e.is_source and e.checks})
        jobs = args.jobs or os.cpu_count() or 1
        work = [(p, args.streams, args.seed, args.domain, fuel, args.steps, havoc) for p in paths]
        if jobs > 1:
            with ProcessPoolExecutor(jobs) as pool:
                reports = list(pool.map(_crosscheck_file, *zip(*work)))
        else:
            reports = [_crosscheck_file(*w) for w in work]
        root = corpus_root()
        results = {}
        for p, rep in zip(paths, reports):
            name = str(Path(p).relative_to(root)) if Path(p).is_relative_to(root) else p
            _summarise(out, name, rep)
            results[name] = rep
        ok = all(r["ok"] for r in results.values())
        out.set(ok=ok, corpus=str(root), results=results)
        return EXIT_OK if ok else EXIT_SEMANTIC
    if not args.file:
        raise _Usage("crosscheck needs FILE or --corpus")
    _read(args.file)
    rep = _crosscheck_file(args.file, args.streams, args.seed, args.domain, fuel, args.steps, havoc)
    _summarise(out, args.file, rep)
    out.set(**rep)
    return EXIT_OK if rep["ok"] else EXIT_SEMANTIC


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bfo", description="Borrowable fractional ownership toolchain.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, file_required=True, havoc=True):
        p.add_argument("file", metavar="FILE", nargs=None if file_required else "?")
        p.add_argument("--json", action="store_true", help="print one JSON report")
        if havoc:
            g = p.add_mutually_exclusive_group()
            g.add_argument("--havoc", metavar="V1,V2,...", help="values for `_`, in order (then 0)")
            g.add_argument("--seed", type=int, default=0, help="seed for random `_` values (default 0)")
        p.add_argument("--domain", type=_domain, default=DEFAULT_DOMAIN, metavar="LO..HI",
                       help="range of nondeterministic values (default -2..2)")
        p.add_argument("--fuel", type=int, default=None,
                       help="step bound for runs, call-depth bound for exploration")
        return p

    p = common(sub.add_parser("check", help="type-check a source program"), havoc=False)
    p.add_argument("--dump-env", action="store_true", help="print the environment after each line")

    p = common(sub.add_parser("run-source", help="run a source program"))
    p.add_argument("--trace", action="store_true", help="print one line per step")
    p.add_argument("--audit", action="store_true", help="run under the ownership auditor")

    p = common(sub.add_parser("run-target", help="run or explore a target program (.tgt/.ml/.sexp or .bfo)"))
    p.add_argument("--trace", action="store_true", help="print one line per step")
    p.add_argument("--explore", action="store_true", help="search all choices for a reachable fail")
    p.add_argument("--no-peephole", action="store_true")

    p = common(sub.add_parser("translate", help="translate a source program"), havoc=False)
    p.add_argument("--emit", choices=("ml", "sexp", "tgt"), default="ml")
    p.add_argument("-o", "--output", metavar="PATH")
    p.add_argument("--no-peephole", action="store_true", help="keep fresh pairs before conversions")

    p = common(sub.add_parser("audit", help="run under the ownership auditor"))
    p.add_argument("--audit-only", action="store_true",
                   help="record well-formedness problems instead of rejecting the program")

    p = common(sub.add_parser("crosscheck", help="differential check of source and translation"),
               file_required=False)
    p.add_argument("--streams", type=int, default=DEFAULT_STREAMS)
    p.add_argument("--steps", type=int, default=DEFAULT_STEPS, help="step bound per run")
    p.add_argument("--corpus", action="store_true", help="check every source program of the corpus")
    p.add_argument("--jobs", type=int, default=None, help="worker processes for --corpus")
    return ap


COMMANDS = {
    "check": cmd_check,
    "run-source": cmd_run_source,
    "run-target": cmd_run_target,
    "translate": cmd_translate,
    "audit": cmd_audit,
    "crosscheck": cmd_crosscheck,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    out = Out(args)
    try:
        code = COMMANDS[args.command](args, out)
    except _Usage as e:
        print(f"bfo: {e}", file=sys.stderr)
        out.set(ok=False, error={"code": "IOError", "message": str(e)})
        return out.finish(EXIT_IO)
    except AuditViolation as e:
        out.say(e.render(args.file))
        out.set(ok=False, error={"code": e.code, "kind": e.kind, "message": e.message})
        return out.finish(EXIT_SEMANTIC)
    except BfoError as e:
        if not out.json:
            print(e.render(args.file or "<input>"), file=sys.stderr)
        out.set(ok=False, error={"code": e.code, "message": e.message, "pos": list(e.pos) if e.pos else None})
        return out.finish(EXIT_SEMANTIC)
    return out.finish(code)


if __name__ == "__main__":
    sys.exit(main())
