"""Differential check of a source program against its translation.

For each seeded havoc stream the source runs and the oracle drives the translation
along the same execution; every run must be consistent. Independently, the target
is explored over a finite domain: if any tested stream makes the source fail, the
exploration must find a reachable `fail`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .checker import TypedProgram, check_program
from .explore import DEFAULT_FUEL, ExploreResult, explore
from .interp import FAIL, Havoc
from .oracle import OracleResult, oracle_run
from .syntax import Program
from .translate import translate_program
from .tsemantics import DEFAULT_DOMAIN

DEFAULT_STREAMS = 100
DEFAULT_STEPS = 10_000


@dataclass
class StreamReport:
    seed: int | None
    havoc: list
    result: OracleResult

    def to_json(self) -> dict:
        return {"seed": self.seed, **self.result.to_json()}


@dataclass
class CrosscheckReport:
    streams: list = field(default_factory=list)
    explore: ExploreResult | None = None
    problems: list = field(default_factory=list)
    counterexample: list | None = None  # shrunk havoc stream of the first inconsistent run

    @property
    def ok(self) -> bool:
        return not self.problems

    @property
    def source_failed(self) -> bool:
        return any(s.result.source_status == FAIL for s in self.streams)

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "streams": [s.to_json() for s in self.streams],
            "consistent_streams": sum(s.result.consistent for s in self.streams),
            "source_failed": self.source_failed,
            "explore": self.explore.to_json() if self.explore else None,
            "problems": self.problems,
            "counterexample": self.counterexample,
        }


def shrink(still_bad, havoc: list) -> list:
    """Greedily drop havoc entries while `still_bad(stream)` holds."""
    cur = list(havoc)
    i = 0
    while i < len(cur):
        cand = cur[:i] + cur[i + 1:]
        if still_bad(cand):
            cur = cand
        else:
            i += 1
    return cur


def crosscheck(tp: TypedProgram | Program, streams: int = DEFAULT_STREAMS, seed: int = 0,
               domain=DEFAULT_DOMAIN, fuel: int = DEFAULT_FUEL, steps: int = DEFAULT_STEPS,
               havoc: list | None = None, explored: ExploreResult | None = None) -> CrosscheckReport:
    """`steps` bounds each source and target run; `fuel` bounds the exploration's call depth.
    With `havoc`, that single stream is used instead of seeded ones."""
    if isinstance(tp, Program):
        tp = check_program(tp)
    target = translate_program(tp)
    rep = CrosscheckReport()
    lo, hi = min(domain), max(domain)
    runs = [(None, Havoc(values=havoc))] if havoc is not None else [
        (s, Havoc(seed=s, lo=lo, hi=hi)) for s in range(seed, seed + streams)]
    for s, hv in runs:
        r = oracle_run(tp, target, hv, fuel=steps)
        rep.streams.append(StreamReport(s, r.havoc, r))
        if not r.consistent:
            rep.problems.append(f"stream {s if s is not None else 'given'}: {r.divergence}")
            if rep.counterexample is None:
                rep.counterexample = shrink(
                    lambda h: not oracle_run(tp, target, Havoc(values=h), fuel=steps).consistent, r.havoc)
    rep.explore = explored if explored is not None else explore(target, domain, fuel)
    if rep.source_failed and not rep.explore.fail_reachable:
        rep.problems.append("the source fails under a tested stream but exploration finds no reachable fail")
    return rep


__all__ = ["crosscheck", "CrosscheckReport", "StreamReport", "shrink", "DEFAULT_STREAMS"]
