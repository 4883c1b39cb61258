"""Dynamic ownership audit.

Runs alongside the interpreter and mirrors the typing of the current configuration:
the environment of every live frame (taken from the checker's evidence, with lifetime
variables mapped to runtime lifetimes) plus the residues discarded at returns. After
every step it checks, for each address touched, that the ownership held by all
references to it sums to at most 1 and that what is lent to a lifetime is covered by
what that lifetime owns or has lent on.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction

from .checker import TypedProgram
from .errors import AuditViolation
from .interp import DONE, RUNNING, Addr, Machine, Step
from .ownership import ONE, ZERO, RefType, format_frac, substitute
from .syntax import EndLft, LetCall, NewLft, Tuple, Var


@dataclass
class _Agg:
    own: Fraction = ZERO
    by_lft: dict = field(default_factory=lambda: defaultdict(Fraction))
    bby: dict = field(default_factory=lambda: defaultdict(Fraction))
    bfrm: dict = field(default_factory=lambda: defaultdict(Fraction))


@dataclass
class AuditReport:
    steps: int = 0
    checks: int = 0
    max_own: Fraction = ZERO
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


class Auditor:
    """Observer for `interp.Machine`. Raises AuditViolation on the first inconsistency
    unless `collect` is set, in which case violations are accumulated in `report`."""

    def __init__(self, tp: TypedProgram, collect: bool = False):
        self.tp = tp
        self.ev = tp.evidence
        self.collect = collect
        self.report = AuditReport()
        self.bindings: dict = {}  # key -> (runtime type, address)
        self.by_lft: dict = defaultdict(set)  # runtime lifetime -> keys mentioning it
        self.by_frame: dict = defaultdict(set)  # fid -> keys of that frame's environment
        self.aggs: dict = defaultdict(_Agg)
        self.lmaps: dict = {}  # fid -> static lifetime -> runtime lifetime
        self.dirty: set = set()
        self.delta_ids = 0

    # ---------------------------------------------------------------- bookkeeping

    def _account(self, t: RefType, a: Addr, sign: int) -> None:
        g = self.aggs[a]
        g.own += sign * t.own
        g.by_lft[t.lft] += sign * t.own
        if t.lend is not None:
            g.bby[t.lend.lft] += sign * t.lend.amount
            g.bfrm[t.lft] += sign * t.lend.amount
        self.dirty.add(a)

    def _add(self, key, t: RefType, a: Addr) -> None:
        self.bindings[key] = (t, a)
        self.by_lft[t.lft].add(key)
        if t.lend is not None:
            self.by_lft[t.lend.lft].add(key)
        self._account(t, a, 1)

    def _remove(self, key) -> None:
        t, a = self.bindings.pop(key)
        self.by_lft[t.lft].discard(key)
        if t.lend is not None:
            self.by_lft[t.lend.lft].discard(key)
        self._account(t, a, -1)

    def _set_frame(self, m: Machine, fid: int, regs: dict, G: dict, skip=()) -> None:
        lmap = self.lmaps[fid]
        want = {}
        for x, t in G.items():
            if isinstance(t, RefType) and x not in skip and x in regs:
                want[(fid, x)] = (substitute(t, lmap), regs[x])
        for key in list(self.by_frame[fid]):
            if want.get(key) != self.bindings.get(key):
                self._remove(key)
                self.by_frame[fid].discard(key)
        for key, (t, a) in want.items():
            if key not in self.bindings:
                self._add(key, t, a)
                self.by_frame[fid].add(key)

    def _drop_frame(self, fid: int) -> None:
        for key in list(self.by_frame.pop(fid, ())):
            self._remove(key)
        self.lmaps.pop(fid, None)

    def _end_lifetime(self, rt: str) -> None:
        for key in list(self.by_lft.get(rt, ())):
            t, a = self.bindings[key]
            self._remove(key)
            if t.lft == rt:
                if isinstance(key, tuple) and key[0] in self.by_frame:
                    self.by_frame[key[0]].discard(key)
                continue
            self._add(key, RefType(t.lft, t.own + t.lend.amount), a)
        self.by_lft.pop(rt, None)

    def _env_at(self, nid: int) -> dict:
        entry = self.ev.env.get(nid)
        if entry is None:
            raise AuditViolation(f"no typing evidence for node {nid}", "evidence")
        return entry[1]

    # ---------------------------------------------------------------- observer

    def on_start(self, m: Machine) -> None:
        self.lmaps[m.frame.fid] = {}
        self._set_frame(m, m.frame.fid, m.frame.regs, self._env_at(m.expr.nid))
        self._check(m, None)

    def on_step(self, m: Machine, step: Step) -> None:
        e = step.node
        fid = step.fid
        self.report.steps += 1
        if isinstance(e, NewLft):
            self.lmaps[fid][e.lft] = step.detail["runtime"]
        elif isinstance(e, EndLft):
            self._end_lifetime(self.lmaps[fid][e.lft])
            self.lmaps[fid].pop(e.lft, None)
        if m.status != RUNNING:
            self._check(m, step)
            return
        if isinstance(e, LetCall):
            info = self.ev.call[e.nid]
            caller_map = self.lmaps[fid]
            callee = m.frame
            self.lmaps[callee.fid] = {a: caller_map.get(b, b) for a, b in info.mapping.items()}
            # arguments now belong to the callee
            caller = callee.caller
            self._set_frame(m, fid, caller.regs, self._env_at(e.nid), skip=set(e.args))
            self._set_frame(m, callee.fid, callee.regs, self._env_at(m.expr.nid))
        elif isinstance(e, (Var, Tuple)) and "returned_from" in step.detail:
            info = self.ev.ret[e.nid]
            lmap = self.lmaps[fid]
            callee_regs = {k: v for k, v in self._regs_snapshot(fid).items()}
            for x, t in info.delta.items():
                if isinstance(t, RefType) and (t.own > 0 or t.lend is not None) and x in callee_regs:
                    self.delta_ids += 1
                    self._add(("Δ", self.delta_ids, x), substitute(t, lmap), callee_regs[x])
            self._drop_frame(fid)
            self._set_frame(m, m.frame.fid, m.frame.regs, self._env_at(m.expr.nid))
        else:
            self._set_frame(m, fid, m.frame.regs, self._env_at(m.expr.nid))
        self._check(m, step)

    def _regs_snapshot(self, fid: int) -> dict:
        out = {}
        for key in self.by_frame.get(fid, ()):
            out[key[1]] = self.bindings[key][1]
        return out

    # ---------------------------------------------------------------- checks

    def holders(self, a: Addr) -> list:
        out = []
        for key, (t, addr) in self.bindings.items():
            if addr == a:
                label = f"{key[2]} (discarded)" if key[0] == "Δ" else str(key[1])
                out.append((label, str(t)))
        return sorted(out)

    def _check(self, m: Machine, step: Step | None) -> None:
        for a in self.dirty:
            g = self.aggs[a]
            self.report.checks += 1
            if g.own > self.report.max_own:
                self.report.max_own = g.own
            problems = []
            if g.own > ONE:
                problems.append(("fraction", f"ownership sum {format_frac(g.own)} exceeds 1"))
            for b, v in g.bby.items():
                cap = g.by_lft.get(b, ZERO) + g.bfrm.get(b, ZERO)
                if v > cap:
                    problems.append(("borrow", f"lent to {b}: {format_frac(v)} exceeds own + lent-on {format_frac(cap)}"))
            for kind, msg in problems:
                where = f" after {step.rule}" if step else " at start"
                details = {"own_sum": g.own, "holders": self.holders(a), "step": step.index if step else 0}
                exc = AuditViolation(f"address {a}: {msg}{where}", kind, a, details,
                                     pos=step.node.pos if step else None)
                if not self.collect:
                    self.dirty.clear()
                    raise exc
                self.report.violations.append(exc)
        self.dirty.clear()


def audit_run(tp: TypedProgram, havoc=None, fuel: int | None = None, collect: bool = False, trace: bool = False):
    """Run `tp` under the auditor. Returns (RunResult, AuditReport)."""
    from .interp import DEFAULT_FUEL, run

    auditor = Auditor(tp, collect=collect)
    res = run(tp.program, havoc, fuel or DEFAULT_FUEL, trace=trace, observers=[auditor])
    return res, auditor.report


__all__ = ["Auditor", "AuditReport", "audit_run", "DONE"]
