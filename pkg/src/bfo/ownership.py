"""Ownership types with exact rational fractions, lifetime orders and type addition."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from .errors import AddError, LftError

ZERO = Fraction(0)
ONE = Fraction(1)


def frac(value) -> Fraction:
    """Exact rational from int, Fraction or a literal such as '0.5' or '1/3'."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        raise TypeError("ownership must be exact; pass a string or Fraction, not a float")
    return Fraction(value)


def format_frac(q: Fraction) -> str:
    if q.denominator == 1:
        return str(q.numerator)
    d = q.denominator
    while d % 2 == 0:
        d //= 2
    while d % 5 == 0:
        d //= 5
    if d == 1:
        digits = 0
        scaled = q
        while scaled.denominator != 1:
            scaled *= 10
            digits += 1
        sign = "-" if scaled < 0 else ""
        n = abs(scaled.numerator)
        whole, part = divmod(n, 10 ** digits)
        return f"{sign}{whole}.{part:0{digits}d}"
    return f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True)
class IntType:
    def __str__(self) -> str:
        return "int"

    def lifetimes(self) -> frozenset:
        return frozenset()


INT = IntType()


@dataclass(frozen=True)
class Lend:
    """Amount of a reference's ownership lent to references of lifetime `lft`."""

    lft: str
    amount: Fraction

    def __post_init__(self):
        object.__setattr__(self, "amount", frac(self.amount))
        if not (ZERO < self.amount <= ONE):
            raise ValueError(f"lend amount {self.amount} outside (0, 1]")


@dataclass(frozen=True)
class RefType:
    lft: str
    own: Fraction
    lend: Lend | None = None

    def __post_init__(self):
        object.__setattr__(self, "own", frac(self.own))
        if not (ZERO <= self.own <= ONE):
            raise ValueError(f"ownership {self.own} outside [0, 1]")
        if self.lend is not None and self.lend.amount == 0:
            object.__setattr__(self, "lend", None)

    @property
    def lent(self) -> Fraction:
        return self.lend.amount if self.lend else ZERO

    def lifetimes(self) -> frozenset:
        if self.lend:
            return frozenset((self.lft, self.lend.lft))
        return frozenset((self.lft,))

    def __str__(self) -> str:
        if self.lend:
            return f"ref<{self.lft},{format_frac(self.own)} lend {self.lend.lft}:{format_frac(self.lend.amount)}>"
        return f"ref<{self.lft},{format_frac(self.own)}>"


OwnType = IntType | RefType


def ref(lft: str, own=1, lend_lft: str | None = None, amount=0) -> RefType:
    """Shorthand constructor: ref('α', '0.5', 'β', '0.5')."""
    amount = frac(amount)
    lend = Lend(lend_lft, amount) if lend_lft is not None and amount != 0 else None
    return RefType(lft, frac(own), lend)


def _lend_parts(t: RefType, lft: str | None = None) -> tuple[str | None, Fraction]:
    if t.lend is None:
        return lft, ZERO
    return t.lend.lft, t.lend.amount


def own(t: OwnType) -> Fraction:
    return t.own if isinstance(t, RefType) else ZERO


def nullify(t: OwnType) -> OwnType:
    """Strip every fraction: int stays int, a reference keeps only its lifetime."""
    if isinstance(t, RefType):
        return RefType(t.lft, ZERO)
    return t


def substitute(t: OwnType, mapping: Mapping[str, str]) -> OwnType:
    if isinstance(t, IntType):
        return t
    lend = Lend(mapping.get(t.lend.lft, t.lend.lft), t.lend.amount) if t.lend else None
    return RefType(mapping.get(t.lft, t.lft), t.own, lend)


# ---------------------------------------------------------------- addition

def _share(a: RefType, b: RefType) -> RefType:
    ta, sa = _lend_parts(a)
    tb, sb = _lend_parts(b)
    if ta is not None and tb is not None and ta != tb:
        raise AddError(f"cannot add {a} and {b}: lent to different lifetimes")
    r = a.own + b.own
    s = sa + sb
    if r > ONE:
        raise AddError(f"cannot add {a} and {b}: ownership {format_frac(r)} exceeds 1")
    if s > ONE:
        raise AddError(f"cannot add {a} and {b}: lent amount {format_frac(s)} exceeds 1")
    target = ta if ta is not None else tb
    return RefType(a.lft, r, Lend(target, s) if s else None)


def _borrow(lender: RefType, borrower: RefType) -> RefType | None:
    if lender.lend is None or lender.lend.lft != borrower.lft or borrower.lend is not None:
        return None
    if lender.lend.amount != borrower.own:
        return None
    return RefType(lender.lft, lender.own + lender.lend.amount)


def add_types(a: OwnType, b: OwnType) -> OwnType:
    """The unique τ with τ = a + b, trying A-Int, A-Borrow (either order), then A-Share."""
    if isinstance(a, IntType) and isinstance(b, IntType):
        return INT
    if isinstance(a, IntType) or isinstance(b, IntType):
        raise AddError(f"cannot add {a} and {b}: int and reference")
    if a.lft != b.lft:
        merged = _borrow(a, b) or _borrow(b, a)
        if merged is None:
            raise AddError(f"cannot add {a} and {b}: different lifetimes without a matching loan")
        return merged
    return _share(a, b)


def split_type(whole: OwnType, left: OwnType) -> OwnType:
    """The `right` with add_types(left, right) == whole."""
    if isinstance(whole, IntType) or isinstance(left, IntType):
        if isinstance(whole, IntType) and isinstance(left, IntType):
            return INT
        raise AddError(f"cannot split {whole} by {left}: int and reference")
    right: RefType | None = None
    if left.lft == whole.lft:
        wt, ws = _lend_parts(whole)
        lt, ls = _lend_parts(left)
        if whole.lend is None and left.lend is not None and left.own + ls == whole.own:
            # left is the lender of an A-Borrow; right is the borrower
            right = RefType(left.lend.lft, ls)
        elif (wt is None or lt is None or wt == lt) and left.own <= whole.own and ls <= ws:
            s = ws - ls
            right = RefType(whole.lft, whole.own - left.own, Lend(wt, s) if s else None)
    elif whole.lend is None and left.lend is None and ZERO < left.own <= whole.own:
        # left is the borrower; right keeps the rest and records the loan
        right = RefType(whole.lft, whole.own - left.own, Lend(left.lft, left.own))
    if right is None:
        raise AddError(f"cannot split {whole} into {left} and a remainder")
    try:
        back = add_types(left, right)
    except AddError:
        back = None
    if back != whole:
        raise AddError(f"cannot split {whole} into {left} and a remainder")
    return right


def env_add(g1: Mapping[str, OwnType], g2: Mapping[str, OwnType]) -> dict[str, OwnType]:
    out = dict(g1)
    for x, t in g2.items():
        out[x] = add_types(out[x], t) if x in out else t
    return out


# ---------------------------------------------------------------- lifetimes

class LifetimeEnv:
    """Strict partial order on lifetimes, stored as its transitive closure.

    `below` holds pairs (a, b) meaning a ⊏ b: a ends no later than b.
    """

    __slots__ = ("lifetimes", "below")

    def __init__(self, lifetimes: Iterable[str] = (), below: Iterable[tuple[str, str]] = ()):
        lts = set(lifetimes)
        rel = set(below)
        for a, b in rel:
            lts.add(a)
            lts.add(b)
        changed = True
        while changed:
            changed = False
            for a, b in list(rel):
                for c, d in list(rel):
                    if b == c and (a, d) not in rel:
                        rel.add((a, d))
                        changed = True
        for a, b in rel:
            if a == b:
                raise LftError(f"cyclic lifetime order through {a}", code="LifetimeOrderViolation")
        self.lifetimes = frozenset(lts)
        self.below = frozenset(rel)

    def __contains__(self, a: str) -> bool:
        return a in self.lifetimes

    def __eq__(self, other) -> bool:
        return isinstance(other, LifetimeEnv) and self.lifetimes == other.lifetimes and self.below == other.below

    def __hash__(self):
        return hash((self.lifetimes, self.below))

    def __repr__(self):
        rel = ", ".join(f"{a}<{b}" for a, b in sorted(self.below))
        return f"LifetimeEnv({{{', '.join(sorted(self.lifetimes))}}}; {rel})"

    def lt(self, a: str, b: str) -> bool:
        return (a, b) in self.below

    def is_minimal(self, a: str) -> bool:
        return a in self.lifetimes and not any(y == a for _, y in self.below)

    def minimal(self) -> list[str]:
        return sorted(a for a in self.lifetimes if self.is_minimal(a))

    def add_min(self, a: str) -> "LifetimeEnv":
        """Add `a` below every existing lifetime."""
        if a in self.lifetimes:
            raise LftError(f"lifetime {a} already live", code="ScopeEscape")
        env = LifetimeEnv.__new__(LifetimeEnv)
        env.lifetimes = self.lifetimes | {a}
        env.below = self.below | {(a, b) for b in self.lifetimes}
        return env

    def remove(self, a: str) -> "LifetimeEnv":
        env = LifetimeEnv.__new__(LifetimeEnv)
        env.lifetimes = self.lifetimes - {a}
        env.below = frozenset((x, y) for x, y in self.below if a not in (x, y))
        return env

    def entails(self, pairs: Iterable[tuple[str, str]]) -> bool:
        return all(p in self.below for p in pairs)


def well_formed(L: LifetimeEnv, t: OwnType) -> bool:
    if isinstance(t, IntType):
        return True
    if t.lft not in L:
        return False
    if t.lend is None:
        return True
    return t.lend.lft in L and t.own + t.lend.amount <= ONE and L.lt(t.lend.lft, t.lft)


def wf_problem(L: LifetimeEnv, t: OwnType) -> str | None:
    """Why `t` is not well formed under L, or None."""
    if isinstance(t, IntType):
        return None
    for a in sorted(t.lifetimes()):
        if a not in L:
            return f"lifetime {a} is not live"
    if t.lend is not None:
        if t.own + t.lend.amount > ONE:
            return f"{t}: ownership plus lent amount exceeds 1"
        if not L.lt(t.lend.lft, t.lft):
            return f"{t}: lends to {t.lend.lft}, which is not shorter than {t.lft}"
    return None


def env_well_formed(L: LifetimeEnv, G: Mapping[str, OwnType]) -> bool:
    return all(well_formed(L, t) for t in G.values())


def lift_type(t: OwnType, a: str) -> OwnType | None:
    """Type after lifetime `a` ends; None when the binding is dropped."""
    if isinstance(t, IntType):
        return t
    if t.lft == a:
        return None
    if t.lend is not None and t.lend.lft == a:
        return RefType(t.lft, t.own + t.lend.amount)
    return t


def lift_env(G: Mapping[str, OwnType], a: str) -> dict[str, OwnType]:
    out = {}
    for x, t in G.items():
        u = lift_type(t, a)
        if u is not None:
            out[x] = u
    return out


def end_lifetime(L: LifetimeEnv, G: Mapping[str, OwnType], a: str) -> tuple[LifetimeEnv, dict[str, OwnType]]:
    if a not in L:
        raise LftError(f"lifetime {a} is not live", code="Unknown")
    if not L.is_minimal(a):
        shorter = sorted(x for x, y in L.below if y == a)
        raise LftError(f"lifetime {a} is not minimal: {', '.join(shorter)} must end first", code="NotMinimal")
    return L.remove(a), lift_env(G, a)


# ---------------------------------------------------------------- accounting

@dataclass
class Metrics:
    own: Fraction
    own_by_lft: dict
    bby: dict
    bfrm: dict
    brr: dict

    def borrow_consistent(self) -> bool:
        return all(v <= self.own_by_lft.get(a, ZERO) + self.bfrm.get(a, ZERO) for a, v in self.bby.items())

    def violations(self) -> list[str]:
        out = []
        if self.own > ONE:
            out.append(f"ownership sum {format_frac(self.own)} exceeds 1")
        for a, v in sorted(self.bby.items()):
            cap = self.own_by_lft.get(a, ZERO) + self.bfrm.get(a, ZERO)
            if v > cap:
                out.append(f"borrowed by {a} is {format_frac(v)} but own + lent-from is {format_frac(cap)}")
        return out


def ownership_metrics(G: Mapping[str, OwnType], R: Mapping[str, object], a) -> Metrics:
    """Per-address sums over the reference bindings of G that point at `a`.

    own: total ownership. own_by_lft[α]: ownership held by lifetime-α references.
    bby[α]: amount lent to α. bfrm[α]: amount lent by lifetime-α references.
    brr[(α, β)]: amount lent by lifetime-α references to β.
    """
    total = ZERO
    by_lft: dict = {}
    bby: dict = {}
    bfrm: dict = {}
    brr: dict = {}
    for x, t in G.items():
        if not isinstance(t, RefType) or R.get(x) != a:
            continue
        total += t.own
        by_lft[t.lft] = by_lft.get(t.lft, ZERO) + t.own
        if t.lend is not None:
            b, s = t.lend.lft, t.lend.amount
            bby[b] = bby.get(b, ZERO) + s
            bfrm[t.lft] = bfrm.get(t.lft, ZERO) + s
            brr[(t.lft, b)] = brr.get((t.lft, b), ZERO) + s
    return Metrics(total, by_lft, bby, bfrm, brr)


# ---------------------------------------------------------------- functions

@dataclass(frozen=True)
class FnType:
    """∀ lfts : order. ⟨params⟩ → ⟨posts | ret⟩. `ret` is a tuple when the function returns several values."""

    lfts: tuple[str, ...]
    order: frozenset  # pairs (a, b) meaning a ⊏ b
    params: tuple[OwnType, ...]
    posts: tuple[OwnType, ...]
    ret: OwnType | tuple[OwnType, ...]

    def __post_init__(self):
        known = set(self.lfts)
        for t in self.all_types():
            extra = t.lifetimes() - known
            if extra:
                raise LftError(f"type {t} mentions undeclared lifetime {sorted(extra)[0]}", code="ScopeEscape")
        for a, b in self.order:
            if a not in known or b not in known:
                raise LftError(f"order {a} < {b} mentions an undeclared lifetime", code="ScopeEscape")

    def all_types(self):
        yield from self.params
        yield from self.posts
        yield from self.ret_types()

    def ret_types(self) -> tuple[OwnType, ...]:
        return self.ret if isinstance(self.ret, tuple) else (self.ret,)

    def lifetime_env(self) -> LifetimeEnv:
        return LifetimeEnv(self.lfts, self.order)


def type_key(t: OwnType) -> tuple:
    """Stable sort key; used by generators and printers."""
    if isinstance(t, IntType):
        return (0,)
    lend = (t.lend.lft, t.lend.amount) if t.lend else ("", ZERO)
    return (1, t.lft, t.own, lend)
