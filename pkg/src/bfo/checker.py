"""Type checker for borrowable fractional ownership types.

The checker is syntax directed. Each function body is checked against its declared
post environment, which is known up front, so the output environment of every
sub-expression is the post environment of the enclosing body. Alongside the verdict
it records evidence per node (environment before the node, the chosen splits, call
instantiations, dropped references, return residues); the translator and the
ownership auditor consume that evidence rather than re-deriving typings.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .errors import AddError, LftError, TypeCheckError
from .ownership import (
    INT, ONE, ZERO, FnType, IntType, Lend, LifetimeEnv, OwnType, RefType, add_types, end_lifetime,
    lift_type, split_type, substitute, wf_problem,
)
from .syntax import (
    AliasAssume, Assign, BorrowAnn, EndLft, Expr, Fail, FunDef, IfZ, LetAlias, LetArith, LetCall,
    LetDeref, LetHavoc, LetMkRef, NewLft, Program, Tuple, TypeAnn, Var, arith_vars, walk,
)

Env = dict  # variable -> OwnType, in binding order


@dataclass(frozen=True)
class CallInfo:
    fn_type: FnType
    mapping: dict
    params: tuple  # instantiated argument types
    posts: tuple  # instantiated post types
    ret: tuple  # instantiated result types, one per binder


@dataclass(frozen=True)
class ReturnInfo:
    """How the environment at a return point splits into kept, returned and discarded parts."""

    components: tuple  # (variable, returned type) per returned value
    post: dict  # variable -> post type (parameters of the function)
    need: dict  # variable -> post + returned parts
    delta: dict  # variable -> discarded residue (the whole type if not needed)
    dropped: tuple  # reference variables dropped entirely (they get an assume)


@dataclass
class Evidence:
    env: dict = field(default_factory=dict)  # nid -> (L, G) before the node
    func: dict = field(default_factory=dict)  # nid -> enclosing function name (None for main)
    let_split: dict = field(default_factory=dict)  # nid -> (whole, tx, ty)
    alias: dict = field(default_factory=dict)  # nid -> (tx, ty, rx, ry)
    mkref: dict = field(default_factory=dict)  # nid -> lifetime
    call: dict = field(default_factory=dict)  # nid -> CallInfo
    endlft: dict = field(default_factory=dict)  # nid -> dropped variables
    ret: dict = field(default_factory=dict)  # nid -> ReturnInfo
    notes: list = field(default_factory=list)  # (pos, text) diagnostics that are not errors


@dataclass
class TypedProgram:
    program: Program
    fn_types: dict
    evidence: Evidence
    problems: list = field(default_factory=list)  # well-formedness problems tolerated in unchecked mode

    def fun_of(self, nid: int) -> str | None:
        return self.evidence.func.get(nid)


def _err(code: str, msg: str, node=None) -> TypeCheckError:
    return TypeCheckError(msg, getattr(node, "pos", None), code=code)


def _describe_env(G: Mapping[str, OwnType]) -> str:
    return ", ".join(f"{x}:{t}" for x, t in G.items() if not x.startswith("__")) or "(empty)"


class Checker:
    def __init__(self, program: Program, unchecked: bool = False):
        self.program = program
        self.unchecked = unchecked
        self.ev = Evidence()
        self.problems: list = []
        self.theta: dict[str, FnType] = {}
        for f in program.funs:
            self.theta[f.name] = f.fn_type()

    # ---------------------------------------------------------------- helpers

    def wf(self, L: LifetimeEnv, t: OwnType, node, what: str) -> None:
        problem = wf_problem(L, t)
        if problem is None:
            return
        code = "UnknownLifetime" if "not live" in problem else "LifetimeOrderViolation"
        if self.unchecked:
            self.problems.append((node.pos, code, f"{what}: {problem}"))
            return
        raise _err(code, f"{what}: {problem}", node)

    def lookup(self, G: Env, x: str, node) -> OwnType:
        if x not in G:
            raise _err("UnboundVariable", f"variable {x} is not in scope (it may have been dropped)", node)
        return G[x]

    def expect_int(self, G: Env, x: str, node) -> None:
        if not isinstance(self.lookup(G, x, node), IntType):
            raise _err("TypeMismatch", f"{x} is a reference where an integer is expected", node)

    def expect_ref(self, G: Env, x: str, node) -> RefType:
        t = self.lookup(G, x, node)
        if not isinstance(t, RefType):
            raise _err("TypeMismatch", f"{x} is an integer where a reference is expected", node)
        return t

    def bind(self, G: Env, x: str, t: OwnType, post: Mapping, node) -> None:
        if x in post:
            raise _err("ScopeEscape", f"binder {x} clashes with a variable of the result environment", node)
        if x in G:
            raise _err("ScopeEscape", f"binder {x} shadows a variable in scope", node)
        G[x] = t

    # ---------------------------------------------------------------- bodies

    def check_body(self, e: Expr, L: LifetimeEnv, G: Env, post_L: LifetimeEnv, post: Env,
                   ret: tuple | None, fname: str | None) -> None:
        G = dict(G)
        while True:
            self.ev.env[e.nid] = (L, dict(G))
            self.ev.func[e.nid] = fname
            if isinstance(e, LetArith):
                for v in arith_vars(e.arith):
                    self.expect_int(G, v, e)
                self.bind(G, e.name, INT, post, e)
                e = e.body
            elif isinstance(e, LetHavoc):
                self.bind(G, e.name, INT, post, e)
                e = e.body
            elif isinstance(e, LetAlias):
                L, G = L, self.let_alias(e, L, G, post)
                e = e.body
            elif isinstance(e, LetMkRef):
                self.expect_int(G, e.src, e)
                lft = self.mkref_lifetime(e, L)
                self.ev.mkref[e.nid] = lft
                self.bind(G, e.name, RefType(lft, ONE), post, e)
                e = e.body
            elif isinstance(e, LetDeref):
                self.expect_ref(G, e.src, e)
                self.bind(G, e.name, INT, post, e)
                e = e.body
            elif isinstance(e, Assign):
                t = self.expect_ref(G, e.target, e)
                self.expect_int(G, e.src, e)
                if t.own != ONE:
                    raise _err("OwnershipInsufficient",
                               f"assignment through {e.target} needs ownership 1, it has {t}", e)
                e = e.cont
            elif isinstance(e, IfZ):
                self.expect_int(G, e.cond, e)
                self.branches(e, L, G, post_L, post, ret, fname)
                return
            elif isinstance(e, LetCall):
                G = self.let_call(e, L, G, post)
                e = e.body
            elif isinstance(e, AliasAssume):
                G = self.alias(e, L, G)
                e = e.cont
            elif isinstance(e, NewLft):
                if e.lft in L:
                    raise _err("ScopeEscape", f"lifetime {e.lft} is already live", e)
                L = L.add_min(e.lft)
                e = e.body
            elif isinstance(e, EndLft):
                try:
                    L2, G2 = end_lifetime(L, G, e.lft)
                except LftError as exc:
                    code = "LifetimeNotMinimal" if exc.code == "NotMinimal" else "UnknownLifetime"
                    raise _err(code, exc.message, e) from None
                self.ev.endlft[e.nid] = tuple(x for x, t in G.items() if lift_type(t, e.lft) is None)
                L, G = L2, G2
                e = e.cont
            elif isinstance(e, Fail):
                return
            elif isinstance(e, (Var, Tuple)):
                self.ret_point(e, L, G, post_L, post, ret)
                return
            else:
                raise TypeError(f"unknown node {e!r}")

    def branches(self, e: IfZ, L, G, post_L, post, ret, fname) -> None:
        errors = []
        for branch in (e.then, e.els):
            try:
                self.check_body(branch, L, G, post_L, post, ret, fname)
                errors.append(None)
            except TypeCheckError as exc:
                errors.append(exc)
        then_err, else_err = errors
        for exc in errors:
            if exc is None:
                continue
            other = else_err if exc is then_err else then_err
            if exc.code == "PostEnvMismatch" and other is None:
                side = "then" if exc is then_err else "else"
                raise TypeCheckError(
                    f"branches end in different environments: the {side} branch cannot reach the "
                    f"result environment ({exc.message})", exc.pos, code="BranchEnvMismatch")
            raise exc

    # ---------------------------------------------------------------- rules

    def mkref_lifetime(self, e: LetMkRef, L: LifetimeEnv) -> str:
        if e.lft is not None:
            if e.lft not in L:
                raise _err("UnknownLifetime", f"lifetime {e.lft} is not live", e)
            return e.lft
        mins = L.minimal()
        if not mins:
            raise _err("UnknownLifetime", "mkref needs a live lifetime; add `newlft α in` first", e)
        if len(mins) > 1:
            raise _err("UnknownLifetime",
                       f"several minimal lifetimes ({', '.join(mins)}); annotate `mkref y as ref<α,1>`", e)
        return mins[0]

    def let_alias(self, e: LetAlias, L, G: Env, post) -> Env:
        whole = self.lookup(G, e.src, e)
        try:
            if isinstance(whole, IntType):
                if e.ann is not None and not (isinstance(e.ann, TypeAnn) and e.ann.type == INT):
                    raise _err("TypeMismatch", f"{e.src} is an integer; it cannot be borrowed", e)
                tx, ty = INT, INT
            elif isinstance(e.ann, BorrowAnn):
                if whole.lend is not None:
                    raise AddError(f"{e.src}: {whole} already lends to {whole.lend.lft}")
                if e.ann.lft not in L:
                    raise _err("UnknownLifetime", f"lifetime {e.ann.lft} is not live", e)
                tx = RefType(e.ann.lft, whole.own)
                ty = split_type(whole, tx)
            elif isinstance(e.ann, TypeAnn):
                tx = e.ann.type
                ty = split_type(whole, tx)
            else:
                tx, ty = whole, RefType(whole.lft, ZERO)
        except AddError as exc:
            raise _err("SplitUnderivable", f"let {e.name} = {e.src}: {exc.message}", e) from None
        self.wf(L, tx, e, e.name)
        self.wf(L, ty, e, e.src)
        self.ev.let_split[e.nid] = (whole, tx, ty)
        G = dict(G)
        G[e.src] = ty
        self.bind(G, e.name, tx, post, e)
        return G

    def alias(self, e: AliasAssume, L, G: Env) -> Env:
        tx = self.expect_ref(G, e.left, e)
        ty = self.expect_ref(G, e.right, e)
        if e.left == e.right:
            raise _err("SplitUnderivable", "alias of a variable with itself", e)
        try:
            total = add_types(tx, ty)
        except AddError as exc:
            raise _err("SplitUnderivable", f"alias({e.left} = {e.right}): {exc.message}", e) from None
        if e.ann is not None:
            rx, ry = e.ann
            try:
                back = add_types(rx, ry)
            except AddError as exc:
                raise _err("SplitUnderivable", f"alias annotation: {exc.message}", e) from None
            if back != total:
                raise _err("SplitUnderivable",
                           f"alias annotation redistributes {back}, but {e.left} and {e.right} hold {total}", e)
        else:
            if tx.lft != ty.lft:
                raise _err("SplitUnderivable",
                           f"alias between lifetimes {tx.lft} and {ty.lft} needs `as <type>, <type>`", e)
            half = total.own / 2
            lend = Lend(total.lend.lft, total.lend.amount / 2) if total.lend else None
            rx = ry = RefType(total.lft, half, lend)
        if tx.lft != ty.lft:
            self.ev.notes.append((e.pos, f"alias({e.left} = {e.right}) moves ownership across lifetimes"))
        self.wf(L, rx, e, e.left)
        self.wf(L, ry, e, e.right)
        self.ev.alias[e.nid] = (tx, ty, rx, ry)
        G = dict(G)
        G[e.left] = rx
        G[e.right] = ry
        return G

    def let_call(self, e: LetCall, L: LifetimeEnv, G: Env, post) -> Env:
        sig = self.theta.get(e.func)
        if sig is None:
            raise _err("UnknownFunction", f"unknown function {e.func}", e)
        if len(e.args) != len(sig.params):
            raise _err("ArityMismatch", f"{e.func} takes {len(sig.params)} arguments, {len(e.args)} given", e)
        if len(set(e.args)) != len(e.args):
            raise _err("ArityMismatch", f"the same variable is passed twice to {e.func}", e)
        actual = [self.lookup(G, a, e) for a in e.args]
        if e.lfts is not None:
            if len(e.lfts) != len(sig.lfts):
                raise _err("ArityMismatch",
                           f"{e.func} takes {len(sig.lfts)} lifetime arguments, {len(e.lfts)} given", e)
            for a in e.lfts:
                if a not in L:
                    raise _err("UnknownLifetime", f"lifetime {a} is not live", e)
            mapping = dict(zip(sig.lfts, e.lfts))
        else:
            mapping = self.infer_lifetimes(e, sig, actual)
        params = tuple(substitute(t, mapping) for t in sig.params)
        posts = tuple(substitute(t, mapping) for t in sig.posts)
        rets = tuple(substitute(t, mapping) for t in sig.ret_types())
        for a, want, have in zip(e.args, params, actual):
            if want != have:
                raise _err("ArgumentMismatch", f"argument {a} of {e.func} has type {have}, expected {want}", e)
        needed = {(mapping[a], mapping[b]) for a, b in sig.order}
        missing = sorted(p for p in needed if p not in L.below)
        if missing:
            text = ", ".join(f"{a} < {b}" for a, b in missing)
            raise _err("CallOrderNotEntailed", f"call to {e.func} needs {text}, which the live order does not give", e)
        if len(e.binders) != len(rets):
            raise _err("ArityMismatch", f"{e.func} returns {len(rets)} values, pattern binds {len(e.binders)}", e)
        G = dict(G)
        for a, t in zip(e.args, posts):
            G[a] = t
            self.wf(L, t, e, a)
        for b, t in zip(e.binders, rets):
            self.wf(L, t, e, b)
            self.bind(G, b, t, post, e)
        self.ev.call[e.nid] = CallInfo(sig, mapping, params, posts, rets)
        return G

    def infer_lifetimes(self, e: LetCall, sig: FnType, actual: list) -> dict:
        mapping: dict = {}

        def unify(formal: str, real: str):
            if mapping.setdefault(formal, real) != real:
                raise _err("ArgumentMismatch",
                           f"lifetime {formal} of {e.func} would be both {mapping[formal]} and {real}", e)

        for want, have in zip(sig.params, actual):
            if isinstance(want, RefType) and isinstance(have, RefType):
                unify(want.lft, have.lft)
                if want.lend is not None and have.lend is not None:
                    unify(want.lend.lft, have.lend.lft)
        missing = [a for a in sig.lfts if a not in mapping]
        if missing:
            raise _err("UnknownLifetime",
                       f"cannot infer lifetime {missing[0]} of {e.func}; write {e.func}<...>(...)", e)
        return mapping

    def ret_point(self, e, L: LifetimeEnv, G: Env, post_L: LifetimeEnv, post: Env, ret: tuple | None) -> None:
        if L != post_L:
            live = sorted(L.lifetimes - post_L.lifetimes)
            if live:
                msg = f"lifetimes {', '.join(live)} are still live at the end; add endlft"
            else:
                msg = f"lifetime environment {L} differs from the declared {post_L}"
            raise _err("PostEnvMismatch", msg, e)
        names = (e.name,) if isinstance(e, Var) else e.names
        for x in names:
            self.lookup(G, x, e)
        if ret is None:
            if len(set(names)) != len(names):
                raise _err("PostEnvMismatch", "the same variable is returned twice", e)
            comps = tuple((x, G[x]) for x in names)
        else:
            if len(ret) != len(names):
                raise _err("PostEnvMismatch", f"returns {len(names)} values, {len(ret)} declared", e)
            comps = tuple(zip(names, ret))
        for x in post:
            if x not in G:
                raise _err("PostEnvMismatch", f"{x} is not available at the end of the body", e)
        need: dict = {}
        for x, t in post.items():
            need[x] = t
        try:
            for x, t in comps:
                need[x] = add_types(need[x], t) if x in need else t
        except AddError as exc:
            raise _err("PostEnvMismatch", f"cannot return {x}: {exc.message}", e) from None
        delta: dict = {}
        for x, t in G.items():
            if x in need:
                try:
                    delta[x] = split_type(t, need[x])
                except AddError:
                    want = post.get(x)
                    detail = f"declared {want}" if want is not None else "needed"
                    raise _err("PostEnvMismatch",
                               f"{x} has {t} but {detail} {need[x]} cannot be carved out of it", e) from None
            else:
                delta[x] = t
        returned = {x for x, _ in comps}
        dropped = tuple(x for x, t in G.items()
                        if isinstance(t, RefType) and x not in post and x not in returned)
        self.ev.ret[e.nid] = ReturnInfo(comps, dict(post), need, delta, dropped)

    # ---------------------------------------------------------------- entry points

    def check_fundef(self, f: FunDef) -> None:
        sig = self.theta[f.name]
        L = sig.lifetime_env()
        G: Env = {}
        for q in f.params:
            self.wf(L, q.type, f, q.name)
            self.wf(L, q.post, f, q.name)
            G[q.name] = q.type
        for t in sig.ret_types():
            self.wf(L, t, f, f"{f.name} result")
        post = {q.name: q.post for q in f.params}
        self.check_body(f.body, L, G, L, post, sig.ret_types(), f.name)

    def check_program(self) -> TypedProgram:
        for f in self.program.funs:
            self.check_fundef(f)
        self.check_body(self.program.main, LifetimeEnv(), {}, LifetimeEnv(), {}, None, None)
        return TypedProgram(self.program, dict(self.theta), self.ev, list(self.problems))


def check_program(p: Program, unchecked: bool = False) -> TypedProgram:
    """Type-check a whole program. With `unchecked`, well-formedness violations are
    recorded in `problems` instead of rejecting the program (used for audit-only runs)."""
    return Checker(p, unchecked).check_program()


def check_fundef(theta: Mapping[str, FnType], f: FunDef) -> None:
    prog = Program((f,), Var("__unused"))
    c = Checker(prog)
    c.theta.update(theta)
    c.check_fundef(f)


# ---------------------------------------------------------------- reporting

def env_after(tp: TypedProgram, e: Expr):
    """(L, G) right after node `e` executes (before for terminal nodes)."""
    ev = tp.evidence.env
    if isinstance(e, (Var, Tuple, Fail, IfZ)):
        return ev.get(e.nid)
    nxt = e.cont if isinstance(e, (Assign, AliasAssume, EndLft)) else e.body
    return ev.get(nxt.nid, ev.get(e.nid))


def format_env(G: Mapping[str, OwnType]) -> str:
    return ", ".join(f"{x}:{t}" for x, t in G.items() if not x.startswith("__"))


def dump_env(tp: TypedProgram, text: str) -> str:
    """Source listing with the environment after each line appended as a comment."""
    per_line = {n: format_env(G) for n, G in line_envs(tp).items()}
    out = []
    for n, line in enumerate(text.splitlines(), 1):
        code = line.split("//", 1)[0].rstrip()
        if not code.strip():
            if not line.strip():
                out.append("")
            continue
        if n in per_line:
            out.append(f"{code}  // {per_line[n] or '∅'}")
        else:
            out.append(code)
    return "\n".join(out) + "\n"


def line_envs(tp: TypedProgram) -> dict[int, dict]:
    """Line number → environment after the last node that starts on that line."""
    per_line: dict[int, dict] = {}
    roots = [f.body for f in tp.program.funs] + [tp.program.main]
    for root in roots:
        for node in walk(root):
            if node.pos is None or node.nid not in tp.evidence.env:
                continue
            after = env_after(tp, node)
            if after is not None:
                per_line[node.pos[0]] = after[1]
    return per_line
