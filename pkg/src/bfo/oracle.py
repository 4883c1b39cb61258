"""Oracle-driven target runs: replay a source execution on its translation.

The source program runs first to fix the havoc stream. Then source and target run in
lockstep on one register: every target node that starts the code of a source node
(`head`) waits until the source reaches that node, and both states are compared there:
integers must agree and every reference with positive ownership must hold the heap
value in its first component (TXZ).

Target `_` are resolved from the source run: havoc from the recorded stream, reads
through zero-ownership references from the heap, prophecies by logic variables that
the assume at the end of the reference's lifetime binds. A pass that had to inspect a
still-unbound prophecy is repeated with the values learned, until nothing new is
learned.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .checker import TypedProgram, check_program
from .errors import BfoError, OracleMismatch
from .interp import DONE, FAIL, RUNNING, Havoc, Machine, run
from .ownership import IntType, RefType, own
from .syntax import LetDeref, Program
from .target import TFail, TNondet, TProgram, program_terms, term_head_str
from .translate import translate_program
from .tsemantics import INFEASIBLE, TargetMachine

MAX_PASSES = 8


class LVar:
    """Unresolved prophecy: the k-th prophecy drawn in the run."""

    __slots__ = ("k",)

    def __init__(self, k: int):
        self.k = k

    def __repr__(self):
        return f"π{self.k}"


@dataclass
class OracleResult:
    consistent: bool
    source_status: str
    target_status: str
    divergence: str | None = None
    step: int | None = None  # target step of the first divergence
    passes: int = 0
    syncs: int = 0
    prophecies: dict = field(default_factory=dict)  # draw index -> resolved value
    havoc: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "consistent": self.consistent,
            "source_status": self.source_status,
            "target_status": self.target_status,
            "divergence": None if self.divergence is None else {"message": self.divergence, "step": self.step},
            "passes": self.passes,
            "syncs": self.syncs,
            "prophecies": {str(k): v for k, v in sorted(self.prophecies.items())},
            "havoc": self.havoc,
        }


class _Pass:
    def __init__(self, tp: TypedProgram, tgt: TProgram, heads: frozenset, havoc: list, known: dict,
                 corrupt: dict, fuel: int):
        self.tp = tp
        self.env = tp.evidence.env
        self.heads = heads
        self.hv = havoc
        self.known = dict(known)  # prophecy index -> int or LVar
        self.corrupt = corrupt
        self.fuel = fuel
        self.n_havoc = 0
        self.n_proph = 0
        self.tentative = False
        self.syncs = 0
        self.pending = False  # the source sits on a node the target has started; step past it first
        self.src = Machine(tp.program, Havoc(values=havoc))
        self.tgt = TargetMachine(tgt, draw=self.draw, observers=[self], num=self.num, equal=self.equal)

    # ---------------------------------------------------------------- prophecy values

    def resolve(self, v):
        while isinstance(v, LVar) and v.k in self.known:
            v = self.known[v.k]
        if isinstance(v, tuple):
            return tuple(self.resolve(x) for x in v)
        return v

    def num(self, v):
        v = self.resolve(v)
        if isinstance(v, LVar):
            self.tentative = True
            return 0
        return v

    def equal(self, a, b) -> bool:
        a, b = self.resolve(a), self.resolve(b)
        if isinstance(a, LVar) and isinstance(b, LVar):
            if a.k != b.k:
                self.known[a.k] = b
            return True
        if isinstance(a, LVar) or isinstance(b, LVar):
            var, val = (a, b) if isinstance(a, LVar) else (b, a)
            if isinstance(val, tuple):
                return False
            self.known[var.k] = val
            return True
        if isinstance(a, tuple) and isinstance(b, tuple):
            return len(a) == len(b) and all(self.equal(x, y) for x, y in zip(a, b))
        return a == b

    def draw(self, node: TNondet):
        if node.kind == "prophecy":
            k = self.n_proph
            self.n_proph += 1
            v = self.resolve(LVar(k))
            if k in self.corrupt and isinstance(v, int):
                v += self.corrupt[k]
            return v
        if node.kind == "deref":
            e = self.src.expr
            if isinstance(e, LetDeref):
                return self.src.heap[self.src.read_addr(e.src)]
            return 0
        if node.kind == "havoc":
            k = self.n_havoc
            self.n_havoc += 1
            return self.hv[k] if k < len(self.hv) else 0
        return 0

    # ---------------------------------------------------------------- lockstep

    def mismatch(self, msg: str):
        raise OracleMismatch(msg, self.tgt.steps)

    def on_term(self, m, t) -> None:
        if not getattr(t, "head", False) or t.origin is None:
            return
        self.advance_to(t.origin, t)
        self.syncs += 1
        self.compare(t.origin)

    def advance_to(self, nid: int, t) -> None:
        src = self.src
        if self.pending and src.status == RUNNING:
            src.step()
        self.pending = True
        while True:
            if src.status != RUNNING:
                self.mismatch(f"source ended ({src.status}) before reaching the node of `{term_head_str(t)}`")
            here = src.expr.nid
            if here == nid:
                return
            if here in self.heads:
                self.mismatch(f"control diverged: target is at `{term_head_str(t)}`, source at node {here}")
            if src.steps >= self.fuel:
                raise _OutOfFuel
            src.step()

    def compare(self, nid: int) -> None:
        entry = self.env.get(nid)
        if entry is None:
            return
        regs = self.src.frame.regs
        tenv = self.tgt.frame.env
        for x, ty in entry[1].items():
            if x not in regs:
                continue
            if x not in tenv:
                self.mismatch(f"{x} is not bound in the target")
            tv = self.resolve(tenv[x])
            if isinstance(ty, IntType):
                if isinstance(tv, LVar):
                    self.tentative = True
                elif tv != regs[x]:
                    self.mismatch(f"{x} is {tv!r} in the target but {regs[x]!r} in the source")
            elif isinstance(ty, RefType) and own(ty) > 0:
                if not isinstance(tv, tuple) or len(tv) != 2:
                    self.mismatch(f"reference {x} is {tv!r} in the target, not a pair")
                heap = self.src.heap[regs[x]]
                if isinstance(tv[0], LVar):
                    self.tentative = True
                elif tv[0] != heap:
                    self.mismatch(f"TXZ: fst {x} is {tv[0]!r} but the heap holds {heap!r}")

    def run(self) -> str:
        tgt = self.tgt
        while tgt.status == RUNNING:
            if tgt.steps >= self.fuel:
                raise _OutOfFuel
            tgt.step()
        if tgt.status == INFEASIBLE:
            self.mismatch(f"assume failed at `{term_head_str(tgt.term)}`")
        if tgt.status == DONE:
            src = self.src
            if self.pending and src.status == RUNNING:
                src.step()
            while src.status == RUNNING:
                if src.expr.nid in self.heads:
                    self.mismatch(f"target finished but the source still has node {src.expr.nid} to run")
                if src.steps >= self.fuel:
                    raise _OutOfFuel
                src.step()
            if src.status != DONE:
                self.mismatch(f"target finished but the source ended in {src.status}")
            v = self.resolve(tgt.value)
            if isinstance(src.value, int) and isinstance(v, int) and v != src.value:
                self.mismatch(f"results differ: target {v}, source {src.value}")
        elif tgt.status == FAIL and not isinstance(tgt.term, TFail):
            self.mismatch("target failed outside a `fail`")
        return tgt.status


class _OutOfFuel(Exception):
    pass


def head_origins(p: TProgram) -> frozenset:
    return frozenset(t.origin for t in program_terms(p) if getattr(t, "head", False) and t.origin is not None)


def oracle_run(tp: TypedProgram | Program, target: TProgram | None = None, havoc: Havoc | None = None,
               fuel: int = 10**6, corrupt: dict | None = None) -> OracleResult:
    """Drive the translation of `tp` with a source run under `havoc`.

    `corrupt` maps a prophecy draw index to an offset added to its resolved value
    (mutation testing: the run must then be reported inconsistent)."""
    if isinstance(tp, Program):
        tp = check_program(tp)
    if target is None:
        target = translate_program(tp)
    first = run(tp.program, havoc or Havoc(seed=0), fuel)
    hv = list(first.havoc)
    heads = head_origins(target)
    corrupt = corrupt or {}
    known: dict = {}
    res = OracleResult(True, first.status, "", havoc=hv)
    for n in range(1, MAX_PASSES + 1):
        p = _Pass(tp, target, heads, hv, known, corrupt if known else {}, fuel)
        res.passes = n
        try:
            status = p.run()
            err = None
        except OracleMismatch as e:
            status, err = p.tgt.status, e
        except _OutOfFuel:
            res.target_status = "FuelExhausted"
            res.syncs = p.syncs
            return res
        except BfoError as e:
            status, err = p.tgt.status, OracleMismatch(f"{e.code}: {e.message}", p.tgt.steps)
        learned = {k: v for k, v in p.known.items() if known.get(k) is not v and known.get(k) != v}
        again = (p.tentative and learned) or (corrupt and not known and p.known)
        known = p.known
        if again and n < MAX_PASSES:
            continue
        res.target_status = status
        res.syncs = p.syncs
        res.prophecies = {k: v for k, v in ((k, p.resolve(LVar(k))) for k in range(p.n_proph)) if isinstance(v, int)}
        if err is not None:
            res.consistent = False
            res.divergence = err.message
            res.step = err.step
        elif first.status == FAIL and status != FAIL:
            res.consistent = False
            res.divergence = f"source failed but the target ended in {status}"
        return res
    return res


__all__ = ["oracle_run", "OracleResult", "LVar", "head_origins"]
