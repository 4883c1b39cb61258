"""Semantics of target programs.

Two executable readings:

* `TargetMachine`: one register, a frame stack and a stream of choices for `_`.
  Observers see every term before it is reduced; the oracle and witness replay use it.
* `step_target`: the register-set semantics. A configuration holds a set of registers
  that all share one variable domain; `_` ranges over a finite domain, `assume` and the
  two branches of `ifz` filter the set, and calls rename the callee apart (Refresh).
  An empty set is Infeasible. `explore_naive` searches this transition system
  breadth-first and serves as the reference for `explore.explore`.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Iterable

from .errors import FuelExhausted, ProjectionError, StuckError
from .interp import Havoc
from .target import (
    TAssume, TBin, TCall, TFail, TFst, TIf, TLet, TNondet, TNum, TProgram, TRet, TSnd, TTuple, TVar,
    apply_target_op, expr_vars, pat_names,
)

RUNNING, DONE, FAIL, INFEASIBLE, OUT_OF_FUEL = "Running", "Done", "Fail", "Infeasible", "FuelExhausted"

DEFAULT_DOMAIN = tuple(range(-2, 3))


def parse_domain(text: str) -> tuple[int, ...]:
    """`LO..HI` or a comma-separated list."""
    if ".." in text:
        lo, hi = text.split("..", 1)
        lo_i, hi_i = int(lo), int(hi)
        if lo_i > hi_i:
            raise ValueError(f"empty domain {text}")
        return tuple(range(lo_i, hi_i + 1))
    vals = tuple(sorted({int(x) for x in text.split(",") if x.strip()}))
    if not vals:
        raise ValueError("empty domain")
    return vals


# ---------------------------------------------------------------- values

def project(v, which: int, what: str = ""):
    if not isinstance(v, tuple) or len(v) < 2:
        raise ProjectionError(f"{'fst' if which == 0 else 'snd'} of non-pair {v!r}{what}")
    return v[which]


def bind_pattern(pat, v, out: dict) -> None:
    if isinstance(pat, tuple):
        if not isinstance(v, tuple) or len(v) != len(pat):
            raise ProjectionError(f"cannot match {v!r} against a pattern of width {len(pat)}")
        for p, x in zip(pat, v):
            bind_pattern(p, x, out)
    elif pat != "_":
        out[pat] = v


def eval_expr(e, env, draw, num=None):
    """Evaluate with `draw(node)` supplying `_`; `num` turns a value into an int for arithmetic."""
    if isinstance(e, TNum):
        return e.value
    if isinstance(e, TVar):
        try:
            return env[e.name]
        except KeyError:
            raise StuckError(f"unbound target variable {e.name}") from None
    if isinstance(e, TNondet):
        return draw(e)
    if isinstance(e, TFst):
        return project(eval_expr(e.arg, env, draw, num), 0)
    if isinstance(e, TSnd):
        return project(eval_expr(e.arg, env, draw, num), 1)
    if isinstance(e, TTuple):
        return tuple(eval_expr(x, env, draw, num) for x in e.items)
    if isinstance(e, TBin):
        a = eval_expr(e.left, env, draw, num)
        b = eval_expr(e.right, env, draw, num)
        if num is not None:
            a, b = num(a), num(b)
        if not isinstance(a, int) or not isinstance(b, int):
            raise ProjectionError(f"arithmetic on a pair: {a!r} {e.op} {b!r}")
        return apply_target_op(e.op, a, b)
    raise StuckError(f"not an expression: {e!r}")


def eval_all(e, env, domain):
    """All values of e when every `_` ranges over `domain` (evaluation order respected)."""
    if isinstance(e, TNum):
        yield e.value
    elif isinstance(e, TVar):
        if e.name not in env:
            raise StuckError(f"unbound target variable {e.name}")
        yield env[e.name]
    elif isinstance(e, TNondet):
        yield from domain
    elif isinstance(e, TFst):
        for v in eval_all(e.arg, env, domain):
            yield project(v, 0)
    elif isinstance(e, TSnd):
        for v in eval_all(e.arg, env, domain):
            yield project(v, 1)
    elif isinstance(e, TTuple):
        for combo in itertools.product(*(list(eval_all(x, env, domain)) for x in e.items)):
            yield tuple(combo)
    elif isinstance(e, TBin):
        for a in eval_all(e.left, env, domain):
            for b in eval_all(e.right, env, domain):
                if not isinstance(a, int) or not isinstance(b, int):
                    raise ProjectionError(f"arithmetic on a pair: {a!r} {e.op} {b!r}")
                yield apply_target_op(e.op, a, b)
    else:
        raise StuckError(f"not an expression: {e!r}")


# ---------------------------------------------------------------- single register

@dataclass
class TFrame:
    env: dict
    func: str | None
    pat: object = None  # pattern waiting for the callee's result
    cont: object = None  # caller term after the call
    caller: "TFrame | None" = None
    depth: int = 0


class TargetMachine:
    """Single-register execution. `draw(node)` supplies values for `_` (defaults to a Havoc
    stream); observers get `on_term(machine, term)` before each term is reduced."""

    def __init__(self, program: TProgram, havoc: Havoc | None = None, draw=None, observers: Iterable = (),
                 num=None, equal=None):
        self.program = program
        self.funs = {f.name: f for f in program.funs}
        self.havoc = havoc or Havoc(seed=0)
        self.draw = draw or (lambda node: self.havoc.next())
        self.num = num
        self.equal = equal or (lambda a, b: a == b)
        self.observers = list(observers)
        self.frame = TFrame({}, None)
        for x in program.main_params:
            self.frame.env[x] = self.draw(TNondet("havoc"))
        self.term = program.main
        self.status = RUNNING
        self.value = None
        self.steps = 0
        self.max_depth = 0

    def ev(self, e):
        return eval_expr(e, self.frame.env, self.draw, self.num)

    def step(self) -> None:
        t = self.term
        for ob in self.observers:
            ob.on_term(self, t)
        self.steps += 1
        if isinstance(t, TLet):
            if isinstance(t.rhs, TCall):
                f = self.funs.get(t.rhs.func)
                if f is None:
                    raise StuckError(f"unknown target function {t.rhs.func}")
                args = [self.ev(a) for a in t.rhs.args]
                if len(args) != len(f.params):
                    raise StuckError(f"{f.name} takes {len(f.params)} arguments, {len(args)} given")
                self.frame = TFrame(dict(zip(f.params, args)), f.name, t.pat, t.body, self.frame,
                                    self.frame.depth + 1)
                self.max_depth = max(self.max_depth, self.frame.depth)
                self.term = f.body
            else:
                bind_pattern(t.pat, self.ev(t.rhs), self.frame.env)
                self.term = t.body
        elif isinstance(t, TAssume):
            if self.equal(self.ev(t.left), self.ev(t.right)):
                self.term = t.body
            else:
                self.status = INFEASIBLE
        elif isinstance(t, TIf):
            c = self.ev(t.cond)
            if self.num is not None:
                c = self.num(c)
            self.term = t.then if c == 0 else t.els
        elif isinstance(t, TFail):
            self.status = FAIL
        elif isinstance(t, TRet):
            v = self.ev(t.value)
            callee = self.frame
            if callee.caller is None:
                self.status = DONE
                self.value = v
            else:
                self.frame = callee.caller
                bind_pattern(callee.pat, v, self.frame.env)
                self.term = callee.cont
        else:
            raise StuckError(f"not a term: {t!r}")


@dataclass
class TargetResult:
    status: str
    value: object
    steps: int
    choices: list
    max_depth: int = 0


def run_target(program: TProgram, havoc: Havoc | None = None, fuel: int = 10**6, observers: Iterable = ()):
    m = TargetMachine(program, havoc, observers=observers)
    while m.status == RUNNING:
        if m.steps >= fuel:
            m.status = OUT_OF_FUEL
            break
        m.step()
    return TargetResult(m.status, m.value, m.steps, list(m.havoc.used), m.max_depth)


# ---------------------------------------------------------------- register sets

def _freeze(env: dict) -> tuple:
    return tuple(sorted(env.items()))


@dataclass(frozen=True)
class SFrame:
    pat: object
    cont: object


@dataclass(frozen=True)
class TargetConfig:
    regs: frozenset  # of registers, each a sorted tuple of (variable, value)
    stack: tuple  # SFrame, innermost last
    term: object
    status: str = RUNNING
    values: frozenset = frozenset()  # results once Done
    fresh: int = field(default=0, compare=False)  # Refresh counter

    @property
    def depth(self) -> int:
        return len(self.stack)

    def registers(self) -> list[dict]:
        return [dict(r) for r in self.regs]


def initial_config(p: TProgram, domain=DEFAULT_DOMAIN) -> TargetConfig:
    regs = {()}
    for x in p.main_params:
        regs = {r + ((x, v),) for r in regs for v in domain}
    return TargetConfig(frozenset(tuple(sorted(r)) for r in regs), (), p.main)


def _rename_expr(e, ren):
    if isinstance(e, TVar):
        return TVar(ren.get(e.name, e.name))
    if isinstance(e, TFst):
        return TFst(_rename_expr(e.arg, ren))
    if isinstance(e, TSnd):
        return TSnd(_rename_expr(e.arg, ren))
    if isinstance(e, TTuple):
        return TTuple(tuple(_rename_expr(x, ren) for x in e.items))
    if isinstance(e, TBin):
        return TBin(e.op, _rename_expr(e.left, ren), _rename_expr(e.right, ren))
    if isinstance(e, TCall):
        return TCall(e.func, tuple(_rename_expr(x, ren) for x in e.args))
    return e


def _rename_pat(p, ren):
    if isinstance(p, tuple):
        return tuple(_rename_pat(q, ren) for q in p)
    return ren.get(p, p)


def refresh(params, body, suffix: str):
    """Rename every variable bound in the callee (parameters and lets) to a fresh name."""
    names = set(params)
    stack = [body]
    while stack:
        t = stack.pop()
        if isinstance(t, TLet):
            names.update(pat_names(t.pat))
            stack.append(t.body)
        elif isinstance(t, TAssume):
            stack.append(t.body)
        elif isinstance(t, TIf):
            stack += [t.then, t.els]
    ren = {x: f"{x}{suffix}" for x in names}

    def go(t):
        chain = []
        while isinstance(t, (TLet, TAssume)):
            chain.append(t)
            t = t.body
        if isinstance(t, TIf):
            tail = replace(t, cond=_rename_expr(t.cond, ren), then=go(t.then), els=go(t.els))
        elif isinstance(t, TRet):
            tail = replace(t, value=_rename_expr(t.value, ren))
        else:
            tail = t
        for n in reversed(chain):
            if isinstance(n, TLet):
                tail = replace(n, pat=_rename_pat(n.pat, ren), rhs=_rename_expr(n.rhs, ren), body=tail)
            else:
                tail = replace(n, left=_rename_expr(n.left, ren), right=_rename_expr(n.right, ren), body=tail)
        return tail

    return tuple(ren[x] for x in params), go(body)


_FREE_CACHE: dict = {}


def free_vars(t) -> frozenset:
    """Variables a term reads before binding them."""
    key = id(t)
    hit = _FREE_CACHE.get(key)
    if hit is not None and hit[0] is t:
        return hit[1]
    chain = []
    cur = t
    while isinstance(cur, (TLet, TAssume)):
        chain.append(cur)
        cur = cur.body
    if isinstance(cur, TIf):
        acc = set(expr_vars(cur.cond)) | free_vars(cur.then) | free_vars(cur.els)
    elif isinstance(cur, TRet):
        acc = set(expr_vars(cur.value))
    else:
        acc = set()
    for n in reversed(chain):
        if isinstance(n, TLet):
            acc -= set(pat_names(n.pat))
            acc |= set(expr_vars(n.rhs))
        else:
            acc |= set(expr_vars(n.left)) | set(expr_vars(n.right))
    out = frozenset(acc)
    _FREE_CACHE[key] = (t, out)
    return out


def live_vars(term, stack) -> frozenset:
    live = set(free_vars(term))
    for fr in stack:
        live |= free_vars(fr.cont) - set(pat_names(fr.pat))
    return frozenset(live)


def _regs(envs, live=None) -> frozenset:
    if live is None:
        return frozenset(_freeze(e) for e in envs)
    return frozenset(tuple(sorted((k, v) for k, v in e.items() if k in live)) for e in envs)


def step_target(p: TProgram, c: TargetConfig, domain=DEFAULT_DOMAIN, gc: bool = False) -> list[TargetConfig]:
    """All successors of a running configuration.

    With `gc`, registers are restricted to the variables still live afterwards, which
    merges registers that differ only in dead variables. Fail-reachability is unchanged.
    """
    if c.status != RUNNING:
        raise StuckError(f"configuration is {c.status}")
    out = _step(p, c, domain)
    if not gc:
        return out
    res = []
    for n in out:
        if n.status == RUNNING:
            live = live_vars(n.term, n.stack)
            n = replace(n, regs=_regs((dict(r) for r in n.regs), live))
        res.append(n)
    return res


def _step(p: TProgram, c: TargetConfig, domain) -> list[TargetConfig]:
    t = c.term
    envs = c.registers()
    if isinstance(t, TLet):
        if isinstance(t.rhs, TCall):
            f = p.fun(t.rhs.func)
            if f is None:
                raise StuckError(f"unknown target function {t.rhs.func}")
            params, body = refresh(f.params, f.body, f"#{c.fresh + 1}")
            out = []
            for env in envs:
                for combo in itertools.product(*(list(eval_all(a, env, domain)) for a in t.rhs.args)):
                    out.append({**env, **dict(zip(params, combo))})
            stack = c.stack + (SFrame(t.pat, t.body),)
            return [replace(c, regs=_regs(out), stack=stack, term=body, fresh=c.fresh + 1)]
        out = []
        for env in envs:
            for v in eval_all(t.rhs, env, domain):
                new = dict(env)
                bind_pattern(t.pat, v, new)
                out.append(new)
        return [replace(c, regs=_regs(out), term=t.body)]
    if isinstance(t, TAssume):
        kept = [env for env in envs
                if any(a == b for a in eval_all(t.left, env, domain) for b in eval_all(t.right, env, domain))]
        if not kept:
            return [replace(c, regs=frozenset(), status=INFEASIBLE)]
        return [replace(c, regs=_regs(kept), term=t.body)]
    if isinstance(t, TIf):
        yes, no = [], []
        for env in envs:
            vals = set(eval_all(t.cond, env, domain))
            if any(v == 0 for v in vals):
                yes.append(env)
            if any(v != 0 for v in vals):
                no.append(env)
        out = []
        if yes:
            out.append(replace(c, regs=_regs(yes), term=t.then))
        if no:
            out.append(replace(c, regs=_regs(no), term=t.els))
        return out
    if isinstance(t, TFail):
        return [replace(c, status=FAIL)]
    if isinstance(t, TRet):
        if not c.stack:
            vals = frozenset(v for env in envs for v in eval_all(t.value, env, domain))
            return [replace(c, status=DONE, values=vals)]
        frame = c.stack[-1]
        out = []
        for env in envs:
            for v in eval_all(t.value, env, domain):
                new = dict(env)
                bind_pattern(frame.pat, v, new)
                out.append(new)
        return [replace(c, regs=_regs(out), stack=c.stack[:-1], term=frame.cont)]
    raise StuckError(f"not a term: {t!r}")


@dataclass
class NaiveResult:
    fail_reachable: bool
    witness: list  # configurations from the initial one to Fail
    configs: int
    cut: bool  # some path was cut off by the depth bound


def explore_naive(p: TProgram, domain=DEFAULT_DOMAIN, fuel: int = 64, max_configs: int = 200_000,
                  gc: bool = True) -> NaiveResult:
    """Breadth-first search of the register-set transition system.

    Configurations whose call stack is deeper than `fuel` are not expanded."""
    start = initial_config(p, domain)
    seen = {start: None}
    queue = deque([start])
    cut = False
    while queue:
        c = queue.popleft()
        for n in step_target(p, c, domain, gc):
            if n in seen:
                continue
            seen[n] = c
            if len(seen) > max_configs:
                raise FuelExhausted(f"more than {max_configs} configurations")
            if n.status == FAIL:
                path = [n]
                while seen[path[-1]] is not None:
                    path.append(seen[path[-1]])
                return NaiveResult(True, list(reversed(path)), len(seen), cut)
            if n.status != RUNNING:
                continue
            if n.depth > fuel:
                cut = True
                continue
            queue.append(n)
    return NaiveResult(False, [], len(seen), cut)


__all__ = [
    "DEFAULT_DOMAIN", "DONE", "FAIL", "INFEASIBLE", "OUT_OF_FUEL", "RUNNING", "TargetConfig", "TargetMachine",
    "TargetResult", "bind_pattern", "eval_all", "eval_expr", "explore_naive", "initial_config", "parse_domain",
    "project", "refresh", "run_target", "step_target",
]
