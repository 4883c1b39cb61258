"""Bounded search for reachable `fail` in target programs.

In the register-set semantics every register evolves on its own: lets extend each
register, and assume and the branches of `ifz` only filter. So a configuration reaching
Fail contains a register that reaches Fail by itself, and the search can look at one
register at a time. It runs each function body over a set of states (register plus
the choices that produced it, keyed by the live part of the register) and memoises
calls by their arguments.

* Lazy choices: `_` yields an unknown. An `assume` that equates an unknown with a
  value binds it; arithmetic, comparison or a branch on an unknown tries every value
  of the domain. With `strict`, bindings outside the domain are dropped, which is
  exactly the finite-domain restriction; by default they are kept, so a prophecy can
  take any integer an assume demands of it.
* Summaries: (function, arguments) -> possible results, each with the choices that
  produce it. Recursion through a call that is still being computed reads the current
  approximation; rounds repeat until no approximation that was read has grown.
* Demand projection: argument components a function never inspects are replaced by
  placeholders before the lookup, so one summary serves all their values. Inspection
  is discovered at run time: touching a placeholder records the demand and restarts.
* Recursion fuel bounds the call depth; deeper calls contribute nothing and the
  result is marked as cut.

A found Fail comes with the choices that reach it; `replay` runs them on the
single-register machine to produce a trace.
"""

import itertools
from dataclasses import dataclass, field

from .errors import FuelExhausted, ProjectionError, StuckError
from .interp import Havoc
from .target import (
    TAssume, TBin, TCall, TFail, TFst, TIf, TLet, TNondet, TNum, TProgram, TRet, TSnd, TTuple, TVar,
    apply_target_op, term_head_str,
)
from .tsemantics import DEFAULT_DOMAIN, FAIL, RUNNING, TargetMachine, free_vars

DEFAULT_FUEL = 64

_ids = itertools.count()


class Unk:
    """An unresolved `_`. Compared by identity."""

    __slots__ = ("n",)

    def __init__(self):
        self.n = next(_ids)

    def __repr__(self):
        return f"?{self.n}"


@dataclass(frozen=True)
class Sym:
    """Placeholder for an argument component the callee has not inspected so far."""

    func: str
    path: tuple


class _Demand(Exception):
    def __init__(self, sym: Sym):
        self.sym = sym


class _Found(Exception):
    def __init__(self, choices):
        self.choices = choices  # a choice tree


@dataclass
class ExploreResult:
    fail_reachable: bool
    witness: list  # choices for `_`, in evaluation order
    trace: list  # (tid, text) of the terms the witness run reduces
    stats: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "fail_reachable": self.fail_reachable,
            "witness": {"choices": self.witness, "trace": [t for _, t in self.trace]} if self.fail_reachable else None,
            "stats": self.stats,
        }


# ---------------------------------------------------------------- values under a substitution

def resolve(v, sub: dict):
    if type(v) is int:
        return v
    if type(v) is Unk:
        while isinstance(v, Unk) and v in sub:
            v = sub[v]
        return v
    if isinstance(v, tuple) and sub:
        return tuple(resolve(x, sub) for x in v)
    return v


def _rename(v, ren: dict):
    if isinstance(v, Unk):
        r = ren.get(v)
        if r is None:
            r = ren[v] = Unk()
        return r
    if isinstance(v, tuple):
        return tuple(_rename(x, ren) for x in v)
    return v


def canon(v, ren: dict):
    """v with unknowns numbered by first occurrence (for comparing states)."""
    if type(v) is int:
        return v
    if type(v) is Unk:
        r = ren.get(v)
        if r is None:
            r = ren[v] = ("?", len(ren))
        return r
    if isinstance(v, tuple):
        return tuple(canon(x, ren) for x in v)
    return v


def _subst_sym(v, actual: dict):
    if isinstance(v, Sym):
        return actual[v]
    if isinstance(v, tuple):
        return tuple(_subst_sym(x, actual) for x in v)
    return v


# ---------------------------------------------------------------- choice sequences
# Choices are kept as a tree and only flattened when a Fail is found: a leaf is a tuple
# of picks, the nodes concatenate, rename unknowns (a call instance) or apply bindings.

class _Cat:
    __slots__ = ("a", "b")

    def __init__(self, a, b):
        self.a, self.b = a, b


class _Ren:
    __slots__ = ("ren", "inner")

    def __init__(self, ren, inner):
        self.ren, self.inner = ren, inner


class _Sub:
    __slots__ = ("sub", "inner")

    def __init__(self, sub, inner):
        self.sub, self.inner = sub, inner


def cat(a, b):
    if type(b) is tuple and not b:
        return a
    if type(a) is tuple and not a:
        return b
    return _Cat(a, b)


def flatten(ch) -> list:
    work, vals = [(0, ch)], []
    while work:
        op, x = work.pop()
        if op == 0:
            if type(x) is tuple:
                vals.append(list(x))
            elif type(x) is _Cat:
                work += [(1, None), (0, x.b), (0, x.a)]
            elif type(x) is _Ren:
                work += [(2, x.ren), (0, x.inner)]
            else:
                work += [(3, x.sub), (0, x.inner)]
        elif op == 1:
            b = vals.pop()
            vals[-1].extend(b)
        elif op == 2:
            vals[-1] = [_rename(c, x) for c in vals[-1]]
        else:
            vals[-1] = [resolve(c, x) for c in vals[-1]]
    return vals[0]


class Explorer:
    def __init__(self, p: TProgram, domain=DEFAULT_DOMAIN, fuel: int = DEFAULT_FUEL, max_states: int = 2_000_000,
                 strict: bool = False):
        self.p = p
        self.funs = {f.name: f for f in p.funs}
        self.domain = tuple(domain)
        self.dset = frozenset(self.domain)
        self.fuel = fuel
        self.max_states = max_states
        self.strict = strict
        self.demanded: dict[str, set] = {f.name: set() for f in p.funs}
        self.final: dict = {}  # key -> results computed without cuts or approximations
        self.approx: dict = {}  # key -> results, grows across rounds
        self.stats = {"rounds": 0, "restarts": 0, "calls": 0, "summaries": 0, "states": 0, "cut": False}

    # ---------------------------------------------------------------- evaluation

    def num(self, v, sub: dict):
        """Integer readings of v: [(int, sub')]."""
        v = resolve(v, sub)
        if isinstance(v, int):
            return [(v, sub)]
        if isinstance(v, Unk):
            return [(d, {**sub, v: d}) for d in self.domain]
        if isinstance(v, Sym):
            raise _Demand(v)
        raise ProjectionError(f"expected an integer, found {v!r}")

    def pair(self, v, sub: dict):
        v = resolve(v, sub)
        if isinstance(v, Sym):
            raise _Demand(v)
        if not isinstance(v, tuple) or len(v) < 2:
            raise ProjectionError(f"projection of non-pair {v!r}")
        return v

    def ev(self, e, env: dict, sub: dict):
        """[(value, picks, sub')] for every way of evaluating e."""
        if isinstance(e, TNum):
            return [(e.value, (), sub)]
        if isinstance(e, TVar):
            try:
                return [(resolve(env[e.name], sub), (), sub)]
            except KeyError:
                raise StuckError(f"unbound target variable {e.name}") from None
        if isinstance(e, TNondet):
            u = Unk()
            return [(u, (u,), sub)]
        if isinstance(e, TFst):
            return [(self.pair(v, s)[0], p, s) for v, p, s in self.ev(e.arg, env, sub)]
        if isinstance(e, TSnd):
            return [(self.pair(v, s)[1], p, s) for v, p, s in self.ev(e.arg, env, sub)]
        if isinstance(e, (TTuple, TCall)):
            items = e.items if isinstance(e, TTuple) else e.args
            out = [((), (), sub)]
            for item in items:
                out = [(vs + (v,), ps + p, s2) for vs, ps, s in out for v, p, s2 in self.ev(item, env, s)]
            return out
        if isinstance(e, TBin):
            out = []
            for a, pa, s1 in self.ev(e.left, env, sub):
                for b, pb, s2 in self.ev(e.right, env, s1):
                    for ai, s3 in self.num(a, s2):
                        for bi, s4 in self.num(b, s3):
                            out.append((apply_target_op(e.op, ai, bi), pa + pb, s4))
            return out
        raise StuckError(f"not an expression: {e!r}")

    def unify(self, a, b, sub: dict):
        a, b = resolve(a, sub), resolve(b, sub)
        if isinstance(a, Sym):
            raise _Demand(a)
        if isinstance(b, Sym):
            raise _Demand(b)
        if a is b or (isinstance(a, int) and isinstance(b, int) and a == b):
            return sub
        if isinstance(a, Unk) or isinstance(b, Unk):
            u, other = (a, b) if isinstance(a, Unk) else (b, a)
            if isinstance(other, tuple):
                return None
            if isinstance(other, int) and self.strict and other not in self.dset:
                return None
            return {**sub, u: other}
        if isinstance(a, tuple) and isinstance(b, tuple) and len(a) == len(b):
            for x, y in zip(a, b):
                sub = self.unify(x, y, sub)
                if sub is None:
                    return None
            return sub
        return None

    def bind(self, pat, v, out: dict, sub: dict) -> None:
        if isinstance(pat, tuple):
            v = self.pair(v, sub)
            if len(v) != len(pat):
                raise ProjectionError(f"cannot match {v!r} against a pattern of width {len(pat)}")
            for p, x in zip(pat, v):
                self.bind(p, x, out, sub)
        elif pat != "_":
            out[pat] = v

    @staticmethod
    def settle(env: dict, choices, sub: dict):
        if not sub:
            return env, choices
        return {k: resolve(v, sub) for k, v in env.items()}, _Sub(sub, choices)

    @staticmethod
    def key(env: dict, live) -> tuple:
        ren: dict = {}
        return tuple((k, canon(env[k], ren)) for k in sorted(env) if k in live)

    # ---------------------------------------------------------------- calls

    def concretize(self, fname: str, args: tuple, sub: dict):
        """Resolve unknowns sitting at demanded argument paths: [(args, sub')]."""
        demanded = self.demanded[fname]

        def go(v, path, s):
            v = resolve(v, s)
            if path not in demanded:
                return [(v, s)]
            if isinstance(v, tuple):
                out = [((), s)]
                for i, x in enumerate(v):
                    out = [(vs + (y,), s3) for vs, s2 in out for y, s3 in go(x, path + (i,), s2)]
                return out
            if isinstance(v, Sym):
                raise _Demand(v)
            return self.num(v, s)

        out = [((), sub)]
        for i, a in enumerate(args):
            out = [(vs + (y,), s2) for vs, s in out for y, s2 in go(a, (i,), s)]
        return out

    def project(self, fname: str, args: tuple):
        """Replace undemanded components by placeholders; returns (key args, placeholder map)."""
        demanded = self.demanded[fname]
        actual: dict = {}

        def go(v, path):
            # a demanded path is opened one level: a pair gets placeholders for its parts
            if path in demanded:
                if isinstance(v, tuple):
                    return tuple(go(x, path + (i,)) for i, x in enumerate(v))
                if isinstance(v, Sym):
                    raise _Demand(v)
                return v
            s = Sym(fname, path)
            actual[s] = v
            return s

        return tuple(go(a, (i,)) for i, a in enumerate(args)), actual

    def call(self, fname: str, args: tuple, budget: int) -> list:
        """Results of a call as [(value, choices)], with fresh unknowns."""
        self.stats["calls"] += 1
        f = self.funs.get(fname)
        if f is None:
            raise StuckError(f"unknown target function {fname}")
        if len(args) != len(f.params):
            raise StuckError(f"{fname} takes {len(f.params)} arguments, {len(args)} given")
        if budget < 0:
            self.stats["cut"] = True
            if self.stack:
                self.stack[-1]["cut"] = True
            return []
        projected, actual = self.project(fname, args)
        key = (fname, projected)
        results = self.final.get(key)
        if results is None:
            entry = self.round.get(key)
            if entry is not None and entry[1] and entry[0] < budget:
                entry = None  # computed with less fuel and cut short
            if entry is not None:
                results = entry[3]
                if self.stack:
                    self.stack[-1]["cut"] |= entry[1]
                    self.stack[-1]["provisional"] |= entry[2]
            else:
                on_stack = next((i for i, fr in enumerate(self.stack) if fr["key"] == key), None)
                if on_stack is not None:
                    for fr in self.stack[on_stack:]:
                        fr["provisional"] = True
                    self.partial_reads.add(key)
                    results = self.approx.get(key, {})
                else:
                    results = self.compute(f, key, projected, budget)
        out = []
        for v, ch in results.values():
            ren: dict = {}
            v = _rename(v, ren)  # only the callee's own unknowns get fresh names
            if actual:
                v = _subst_sym(v, actual)
            out.append((v, _Ren(ren, ch)))
        return out

    def compute(self, f, key, projected, budget) -> dict:
        frame = {"key": key, "cut": False, "provisional": False}
        self.stack.append(frame)
        try:
            env = dict(zip(f.params, projected))
            results = self.run(f.body, {(): (env, ())}, budget)
        finally:
            self.stack.pop()
        self.stats["summaries"] += 1
        old = self.approx.get(key, {})
        grown = {k: r for k, r in results.items() if k not in old}
        merged = {**old, **grown}
        self.approx[key] = merged
        if grown and key in self.partial_reads:
            self.changed = True
        if self.stack:
            self.stack[-1]["cut"] |= frame["cut"]
            self.stack[-1]["provisional"] |= frame["provisional"]
        if not frame["cut"] and not frame["provisional"]:
            self.final[key] = merged
        else:
            self.round[key] = (budget, frame["cut"], frame["provisional"], merged)
        return merged

    # ---------------------------------------------------------------- bodies

    def _add(self, new: dict, env: dict, ch, sub: dict, live) -> None:
        env, ch = self.settle(env, ch, sub)
        k = self.key(env, live)
        if k not in new:
            new[k] = (env, ch)

    def run(self, t, states: dict, budget: int) -> dict:
        """Results reachable from `states` (key -> (env, choices)) at term t: canon -> (value, choices)."""
        results: dict = {}
        while True:
            self.stats["states"] += len(states)
            if self.stats["states"] > self.max_states:
                raise FuelExhausted(f"more than {self.max_states} states explored")
            if not states:
                return results
            if isinstance(t, TLet):
                live = free_vars(t.body)
                new: dict = {}
                if isinstance(t.rhs, TCall):
                    fname = t.rhs.func
                    for env, ch in states.values():
                        for args, picks, s in self.ev(t.rhs, env, {}):
                            for args2, s2 in self.concretize(fname, args, s):
                                env1, prefix = self.settle(env, cat(ch, picks), s2)
                                try:
                                    outs = self.call(fname, args2, budget - 1)
                                except _Found as found:
                                    found.choices = _Cat(prefix, found.choices)
                                    raise
                                for v, sub_ch in outs:
                                    env2 = dict(env1)
                                    self.bind(t.pat, v, env2, {})
                                    self._add(new, env2, _Cat(prefix, sub_ch), {}, live)
                else:
                    for env, ch in states.values():
                        for v, picks, s in self.ev(t.rhs, env, {}):
                            env2 = dict(env)
                            self.bind(t.pat, v, env2, s)
                            self._add(new, env2, cat(ch, picks), s, live)
                states = new
                t = t.body
            elif isinstance(t, TAssume):
                live = free_vars(t.body)
                new = {}
                for env, ch in states.values():
                    for a, pa, s1 in self.ev(t.left, env, {}):
                        for b, pb, s2 in self.ev(t.right, env, s1):
                            s3 = self.unify(a, b, s2)
                            if s3 is not None:
                                self._add(new, env, cat(ch, pa + pb), s3, live)
                states = new
                t = t.body
            elif isinstance(t, TIf):
                yes: dict = {}
                no: dict = {}
                live_y, live_n = free_vars(t.then), free_vars(t.els)
                for env, ch in states.values():
                    for c, picks, s in self.ev(t.cond, env, {}):
                        for ci, s2 in self.num(c, s):
                            if ci == 0:
                                self._add(yes, env, cat(ch, picks), s2, live_y)
                            else:
                                self._add(no, env, cat(ch, picks), s2, live_n)
                for k, r in self.run(t.then, yes, budget).items():
                    results.setdefault(k, r)
                for k, r in self.run(t.els, no, budget).items():
                    results.setdefault(k, r)
                return results
            elif isinstance(t, TFail):
                _, ch = next(iter(states.values()))
                raise _Found(ch)
            elif isinstance(t, TRet):
                for env, ch in states.values():
                    for v, picks, s in self.ev(t.value, env, {}):
                        v = resolve(v, s)
                        _, ch2 = self.settle({}, cat(ch, picks), s)
                        results.setdefault(canon(v, {}), (v, ch2))
                return results
            else:
                raise StuckError(f"not a term: {t!r}")

    # ---------------------------------------------------------------- driver

    def main_states(self) -> dict:
        env: dict = {}
        ch: list = []
        for x in self.p.main_params:
            u = Unk()
            env[x] = u
            ch.append(u)
        return {(): (env, tuple(ch))}

    def explore(self) -> ExploreResult:
        while True:
            self.stats["rounds"] += 1
            self.round: dict = {}
            self.stack: list = []
            self.partial_reads: set = set()
            self.changed = False
            try:
                self.run(self.p.main, self.main_states(), self.fuel)
            except _Demand as d:
                self.stats["restarts"] += 1
                self.demanded[d.sym.func].add(d.sym.path)
                self.approx = {k: v for k, v in self.approx.items() if k[0] != d.sym.func}
                continue
            except _Found as found:
                return self.found(found.choices)
            if not self.changed:
                break
        self.stats["demanded"] = self.demand_report()
        return ExploreResult(False, [], [], dict(self.stats))

    def demand_report(self) -> dict:
        return {f: sorted(list(p) for p in ps) for f, ps in self.demanded.items() if ps}

    def found(self, tree) -> ExploreResult:
        choices = flatten(tree)
        default = 0 if 0 in self.dset else self.domain[0]
        choices = [default if isinstance(c, Unk) else c for c in choices]
        trace, status = replay(self.p, choices)
        if status != FAIL:
            raise AssertionError(f"witness replay ended in {status}, not Fail")
        self.stats["demanded"] = self.demand_report()
        return ExploreResult(True, choices, trace, dict(self.stats))


class _Tracer:
    def __init__(self):
        self.trace = []

    def on_term(self, m, t):
        self.trace.append((t.tid, term_head_str(t)))


def replay(p: TProgram, choices: list, fuel: int = 10**6):
    """Run the single-register machine on `choices`; returns (trace, status)."""
    tracer = _Tracer()
    m = TargetMachine(p, Havoc(values=choices), observers=[tracer])
    while m.status == RUNNING and m.steps < fuel:
        m.step()
    return tracer.trace, m.status


def explore(p: TProgram, domain=DEFAULT_DOMAIN, fuel: int = DEFAULT_FUEL, max_states: int = 2_000_000,
            strict: bool = False) -> ExploreResult:
    return Explorer(p, domain, fuel, max_states, strict).explore()


__all__ = ["explore", "Explorer", "ExploreResult", "replay", "Sym", "Unk", "DEFAULT_FUEL"]
