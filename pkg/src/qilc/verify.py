"""Bounded inductive verification of candidate invariants.

A candidate is validated by discharging verification conditions:

    single loop i over R     Initiation(i), Preservation(i),
                             BreakExit(i) when the body can break, Exit(i)
    loop j over S nested     Initiation(i), Initiation(j), Preservation(j),
    in loop i over R         Exit(j), Preservation(i), Exit(i)

Initiation: the invariant holds at index 0 in the really-initialized store.
Preservation: assuming the invariant at an in-range index, one body
iteration reestablishes it at the next index (iterations that break are
covered by BreakExit instead). Exit: at index = relation size the loop's
target holds, where the inner loop's target is the outer invariant at i+1
and the outer loop's target is the candidate postcondition. BreakExit: if
an iteration breaks, the postcondition holds in the resulting store.

Each condition is checked over every instance in bounded domains: relation
contents up to rel_size rows with fields drawn from int_domain/text_domain,
scalar parameters drawn from the same domains, and every in-range index
assignment. Enumeration order is fixed: parameters in declaration order,
relation sizes ascending with row tuples in lexicographic order (earlier
rows more significant, fields cycling int_domain/text_domain order), index
ranges ascending. The checker counts every enumerated instance; the count
must equal the analytic value of instance_count, which is how tests detect
accidental pruning. The store at the assumed index is reconstructed by
evaluating the invariant equalities, so the premise holds by construction
and each instance costs one body execution plus one comparison.

A candidate whose constants fall outside the bounded domains cannot be
meaningfully checked and is reported NonCheckable, as is any program that
breaks inside a nested loop.

Sweeping every instance one at a time is the semantic definition, but it
is wasteful for the invariant family the synthesizer derives, so the
checker takes sound shortcuts when their premises hold: an exit condition
whose two sides are the same expression once the loop bound is substituted
for the index, an initiation condition that reduces to comparing
constants, and preservation conditions whose outcome provably depends only
on the rows at the current indices, which are checked once per row
combination and multiplied out. Every shortcut is exact on the verdict:
it reports Valid with the full analytic instance count exactly when the
sweep would pass every instance. On a violation it reports a replayable
counterexample found by a deterministic scan, which may differ from the
sweep's first hit and counts only the instances actually checked.
fast=False forces the definitional sweep; agreement is property-tested.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, fields as dataclass_fields, is_dataclass
from typing import Optional

from . import interp, tor
from .frontend import (
    Add,
    Append,
    Assign,
    Break,
    Cmp,
    BoolOp,
    FieldAccess,
    For,
    If,
    IntLit,
    MinMax,
    NotOp,
    RecordLit,
    RowRef,
    TextLit,
    TypedProgram,
    VarRef,
)
from .relation import (
    INT,
    OrderedRelation,
    Schema,
    bindings_from_json,
    bindings_to_json,
)

VALID = "valid"
VIOLATED = "violated"
NON_CHECKABLE = "non-checkable"

INITIATION = "initiation"
PRESERVATION = "preservation"
EXIT = "exit"
BREAK_EXIT = "break-exit"


@dataclass(frozen=True)
class Bounds:
    rel_size: int = 3
    int_domain: tuple = (0, 1, 2)
    text_domain: tuple = ("a", "b")


@dataclass(frozen=True)
class VC:
    kind: str  # initiation | preservation | exit | break-exit
    loop: str  # index variable of the loop the condition belongs to


@dataclass(frozen=True)
class Counterexample:
    """A violated instance. expected and actual are bare row tuples for
    list variables (no schema: under a wrong candidate the rows need not
    fit any one schema) and plain values for scalars; replay goes through
    recheck, which re-evaluates the instance rather than trusting them."""

    vc: VC
    inputs: dict  # parameter name -> value
    indices: dict  # index variable -> int
    var: str
    expected: object
    actual: object

    def to_json(self) -> dict:
        return {
            "vc": {"kind": self.vc.kind, "loop": self.vc.loop},
            "inputs": bindings_to_json(self.inputs),
            "indices": dict(sorted(self.indices.items())),
            "var": self.var,
            "expected": _cex_value_to_json(self.expected),
            "actual": _cex_value_to_json(self.actual),
        }


def _cex_value_to_json(v):
    if isinstance(v, tuple):
        return [list(r) for r in v]
    return v


def _cex_value_from_json(v):
    if isinstance(v, list):
        return tuple(tuple(r) for r in v)
    return v


def counterexample_from_json(data: dict) -> Counterexample:
    return Counterexample(
        vc=VC(data["vc"]["kind"], data["vc"]["loop"]),
        inputs=bindings_from_json(data["inputs"]),
        indices={k: int(v) for k, v in data["indices"].items()},
        var=data["var"],
        expected=_cex_value_from_json(data["expected"]),
        actual=_cex_value_from_json(data["actual"]),
    )


@dataclass(frozen=True)
class CheckResult:
    status: str  # valid | violated | non-checkable
    instances: int
    counterexample: Optional[Counterexample] = None
    reason: str = ""
    vcs: int = 0  # verification conditions evaluated


class ProverBackend:
    """Decides verification conditions for a candidate."""

    def decide(self, tp: TypedProgram, candidate, invariants) -> CheckResult:
        raise NotImplementedError


class BoundedBackend(ProverBackend):
    def __init__(self, bounds: Bounds = Bounds()):
        self.bounds = bounds

    def decide(self, tp, candidate, invariants) -> CheckResult:
        return validate(tp, candidate, invariants, self.bounds)


# ---------------------------------------------------------------------------
# VC generation
# ---------------------------------------------------------------------------


def _loop_breaks(node: For) -> bool:
    found = False

    def walk(stmts):
        nonlocal found
        for s in stmts:
            if isinstance(s, Break):
                found = True
            elif isinstance(s, If):
                walk(s.body)

    walk(node.body)
    return found


def gen_vcs(tp: TypedProgram) -> tuple:
    loops = sorted(tp.loops, key=lambda l: l.depth)
    outer = loops[0]
    if len(loops) == 1:
        vcs = [VC(INITIATION, outer.index), VC(PRESERVATION, outer.index)]
        if _loop_breaks(outer.node):
            vcs.append(VC(BREAK_EXIT, outer.index))
        vcs.append(VC(EXIT, outer.index))
        return tuple(vcs)
    inner = loops[1]
    return (
        VC(INITIATION, outer.index),
        VC(INITIATION, inner.index),
        VC(PRESERVATION, inner.index),
        VC(EXIT, inner.index),
        VC(PRESERVATION, outer.index),
        VC(EXIT, outer.index),
    )


# ---------------------------------------------------------------------------
# Bounded domains
# ---------------------------------------------------------------------------

_REL_CACHE: dict = {}


def _row_domain(schema: Schema, bounds: Bounds) -> tuple:
    """All rows a relation of this schema can hold, lexicographic."""
    domains = [
        bounds.int_domain if t == INT else bounds.text_domain for t in schema.types
    ]
    return tuple(itertools.product(*domains))


def relation_values(schema: Schema, bounds: Bounds) -> tuple:
    """All relation instances, sizes ascending, rows lexicographic."""
    key = (schema, bounds.rel_size, bounds.int_domain, bounds.text_domain)
    hit = _REL_CACHE.get(key)
    if hit is not None:
        return hit
    row_domain = _row_domain(schema, bounds)
    values = []
    for size in range(bounds.rel_size + 1):
        for rows in itertools.product(row_domain, repeat=size):
            values.append(OrderedRelation(schema, rows))
    out = tuple(values)
    _REL_CACHE[key] = out
    return out


def _row_domain_size(schema: Schema, bounds: Bounds) -> int:
    n = 1
    for t in schema.types:
        n *= len(bounds.int_domain) if t == INT else len(bounds.text_domain)
    return n


def instance_count(vc: VC, tp: TypedProgram, bounds: Bounds) -> int:
    """Analytic number of instances the sweep for vc must enumerate."""
    loops = sorted(tp.loops, key=lambda l: l.depth)
    outer = loops[0]
    inner = loops[1] if len(loops) == 2 else None
    rel_params = [(p.name, p.ty) for p in tp.ast.params if isinstance(p.ty, Schema)]
    scalars = 1
    for p in tp.ast.params:
        if p.ty == INT:
            scalars *= len(bounds.int_domain)
        elif isinstance(p.ty, str):
            scalars *= len(bounds.text_domain)
    total = 0
    for sizes in itertools.product(
        range(bounds.rel_size + 1), repeat=len(rel_params)
    ):
        mult = 1
        size_of = {}
        for (name, sch), s in zip(rel_params, sizes):
            mult *= _row_domain_size(sch, bounds) ** s
            size_of[name] = s
        factor = 1
        if vc.loop == outer.index:
            if vc.kind in (PRESERVATION, BREAK_EXIT):
                factor = size_of[outer.rel]
        else:
            factor = size_of[outer.rel]
            if vc.kind in (PRESERVATION, BREAK_EXIT):
                factor *= size_of[inner.rel]
        total += mult * factor
    return total * scalars


# ---------------------------------------------------------------------------
# Store reconstruction
# ---------------------------------------------------------------------------

_REL_NODES = (
    tor.Query,
    tor.EmptyRel,
    tor.Sel,
    tor.Proj,
    tor.Join,
    tor.Top,
    tor.AppendRow,
    tor.Concat,
)


class _VarRecon:
    """Evaluates one invariant equality, with the finished-part value of a
    Concat cacheable across inner-index instances."""

    def __init__(self, var: str, expr, schemas: dict):
        self.var = var
        self.expr = expr
        self.p1_static = True  # may the finished part be cached across indices?
        if isinstance(expr, tor.AggOf) and isinstance(expr.of, tor.Concat):
            self.kind = "agg2"
            sch, self._f1 = tor.compile_rel(expr.of.left, schemas)
            _, self._f2 = tor.compile_rel(expr.of.right, schemas)
            self._agg = expr.kind
            self._col = None if expr.field is None else sch.index_of(expr.field)
        elif isinstance(expr, tor.Concat):
            self.kind = "rel2"
            _, self._f1 = tor.compile_rel(expr.left, schemas)
            _, self._f2 = tor.compile_rel(expr.right, schemas)
        elif isinstance(expr, _REL_NODES):
            self.kind = "rel"
            _, self._f = tor.compile_rel(expr, schemas)
        else:
            self.kind = "scalar"
            self._f = tor.compile_scalar(expr, schemas)

    @property
    def is_rel(self) -> bool:
        return self.kind in ("rel", "rel2")

    def part1(self, env):
        if self.kind in ("rel2", "agg2"):
            return self._f1(env)
        return None

    def value(self, env, p1=None):
        if self.kind == "rel":
            return self._f(env)
        if self.kind == "rel2":
            if p1 is None:
                p1 = self._f1(env)
            return p1 + self._f2(env)
        if self.kind == "agg2":
            if p1 is None:
                p1 = self._f1(env)
            rows = p1 + self._f2(env)
            if self._agg == "count":
                return len(rows)
            if self._agg == "sum":
                return sum(r[self._col] for r in rows)
            if not rows:
                return None
            vals = [r[self._col] for r in rows]
            return min(vals) if self._agg == "min" else max(vals)
        return self._f(env)


def _collect_consts(e, ints: set, texts: set) -> None:
    if isinstance(e, tor.IntConst):
        ints.add(e.value)
    elif isinstance(e, tor.TextConst):
        texts.add(e.value)
    elif isinstance(e, tor.RecordConst):
        for v in e.values:
            (ints if isinstance(v, int) else texts).add(v)
    elif isinstance(e, (tor.Sel,)):
        _collect_consts(e.pred, ints, texts)
        _collect_consts(e.of, ints, texts)
    elif isinstance(e, tor.Proj):
        _collect_consts(e.of, ints, texts)
    elif isinstance(e, tor.Join):
        _collect_consts(e.left, ints, texts)
        _collect_consts(e.right, ints, texts)
        _collect_consts(e.pred, ints, texts)
    elif isinstance(e, tor.Top):
        _collect_consts(e.of, ints, texts)
        _collect_consts(e.k, ints, texts)
    elif isinstance(e, tor.AppendRow):
        _collect_consts(e.of, ints, texts)
        _collect_consts(e.rec, ints, texts)
    elif isinstance(e, tor.Concat):
        _collect_consts(e.left, ints, texts)
        _collect_consts(e.right, ints, texts)
    elif isinstance(e, tor.GetRow):
        _collect_consts(e.of, ints, texts)
        _collect_consts(e.idx, ints, texts)
    elif isinstance(e, (tor.SizeOf, tor.AggOf)):
        _collect_consts(e.of, ints, texts)
    elif isinstance(e, tor.CmpAtom):
        _collect_consts(e.lhs, ints, texts)
        _collect_consts(e.rhs, ints, texts)
    elif isinstance(e, (tor.AndP, tor.OrP)):
        _collect_consts(e.left, ints, texts)
        _collect_consts(e.right, ints, texts)
    elif isinstance(e, tor.NotP):
        _collect_consts(e.operand, ints, texts)


def _non_checkable_reason(tp, candidate, bounds: Bounds) -> str:
    loops = sorted(tp.loops, key=lambda l: l.depth)
    if len(loops) == 2 and any(_loop_breaks(l.node) for l in loops):
        return "break inside a nested loop is outside the checkable fragment"
    ints: set = set()
    texts: set = set()
    for _, post in candidate.posts:
        _collect_consts(post, ints, texts)
    lo, hi = min(bounds.int_domain), max(bounds.int_domain)
    bad_int = sorted(c for c in ints if not lo <= c <= hi)
    if bad_int:
        return f"integer constant {bad_int[0]} outside the checked domain"
    bad_text = sorted(c for c in texts if c not in bounds.text_domain)
    if bad_text:
        return f"text constant {bad_text[0]!r} outside the checked domain"
    return ""


# ---------------------------------------------------------------------------
# Symbolic helpers for the fast paths. _subst_index replaces a loop index
# with a scalar expression (None when the replacement cannot absorb an
# index offset); _always_empty and _has_top are conservative shape facts.
# ---------------------------------------------------------------------------


def _mentions_index(e, name: str) -> bool:
    if isinstance(e, tor.IndexRef):
        return e.name == name
    if not is_dataclass(e):
        return False
    return any(
        _mentions_index(getattr(e, f.name), name) for f in dataclass_fields(e)
    )


def _subst_index(e, name: str, repl):
    if isinstance(e, tor.IndexRef):
        if e.name != name:
            return e
        if e.offset == 0:
            return repl
        if isinstance(repl, tor.IntConst):
            return tor.IntConst(repl.value + e.offset)
        return None
    if isinstance(e, (tor.Query, tor.EmptyRel, tor.IntConst, tor.TextConst,
                      tor.ParamRef, tor.FieldRef, tor.TruePred, tor.RecordConst)):
        return e
    if isinstance(e, tor.Sel):
        p, of = _subst_index(e.pred, name, repl), _subst_index(e.of, name, repl)
        return None if p is None or of is None else tor.Sel(p, of)
    if isinstance(e, tor.Proj):
        of = _subst_index(e.of, name, repl)
        return None if of is None else tor.Proj(e.fields, of)
    if isinstance(e, tor.Join):
        l = _subst_index(e.left, name, repl)
        r = _subst_index(e.right, name, repl)
        p = _subst_index(e.pred, name, repl)
        return None if None in (l, r, p) else tor.Join(l, r, p)
    if isinstance(e, tor.Top):
        of, k = _subst_index(e.of, name, repl), _subst_index(e.k, name, repl)
        return None if of is None or k is None else tor.Top(of, k)
    if isinstance(e, tor.AppendRow):
        of, rec = _subst_index(e.of, name, repl), _subst_index(e.rec, name, repl)
        return None if of is None or rec is None else tor.AppendRow(of, rec)
    if isinstance(e, tor.Concat):
        l, r = _subst_index(e.left, name, repl), _subst_index(e.right, name, repl)
        return None if l is None or r is None else tor.Concat(l, r)
    if isinstance(e, tor.GetRow):
        of, idx = _subst_index(e.of, name, repl), _subst_index(e.idx, name, repl)
        return None if of is None or idx is None else tor.GetRow(of, idx)
    if isinstance(e, tor.SizeOf):
        of = _subst_index(e.of, name, repl)
        return None if of is None else tor.SizeOf(of)
    if isinstance(e, tor.AggOf):
        of = _subst_index(e.of, name, repl)
        return None if of is None else tor.AggOf(e.kind, e.field, of)
    if isinstance(e, tor.CmpAtom):
        l, r = _subst_index(e.lhs, name, repl), _subst_index(e.rhs, name, repl)
        return None if l is None or r is None else tor.CmpAtom(e.op, l, r)
    if isinstance(e, tor.AndP):
        l, r = _subst_index(e.left, name, repl), _subst_index(e.right, name, repl)
        return None if l is None or r is None else tor.AndP(l, r)
    if isinstance(e, tor.OrP):
        l, r = _subst_index(e.left, name, repl), _subst_index(e.right, name, repl)
        return None if l is None or r is None else tor.OrP(l, r)
    if isinstance(e, tor.NotP):
        p = _subst_index(e.operand, name, repl)
        return None if p is None else tor.NotP(p)
    return None


def _always_empty(e) -> bool:
    """True only when the expression denotes the empty relation in every
    environment."""
    if isinstance(e, tor.EmptyRel):
        return True
    if isinstance(e, tor.Top):
        if isinstance(e.k, tor.IntConst) and e.k.value <= 0:
            return True
        return _always_empty(e.of)
    if isinstance(e, (tor.Sel, tor.Proj)):
        return _always_empty(e.of)
    if isinstance(e, tor.Join):
        return _always_empty(e.left) or _always_empty(e.right)
    if isinstance(e, tor.Concat):
        return _always_empty(e.left) and _always_empty(e.right)
    return False


def _has_top(e) -> bool:
    if isinstance(e, tor.Top):
        return True
    if isinstance(e, (tor.Sel, tor.Proj, tor.AppendRow, tor.SizeOf, tor.AggOf)):
        return _has_top(e.of)
    if isinstance(e, (tor.Join, tor.Concat)):
        return _has_top(e.left) or _has_top(e.right)
    return False


# ---------------------------------------------------------------------------
# The checker
# ---------------------------------------------------------------------------


class _Checker:
    def __init__(
        self,
        tp: TypedProgram,
        candidate,
        invariants: dict,
        bounds: Bounds,
        fast: bool = True,
    ):
        self.tp = tp
        self.prog = tp.ast
        self.bounds = bounds
        self.fast = fast
        loops = sorted(tp.loops, key=lambda l: l.depth)
        self.outer = loops[0]
        self.inner = loops[1] if len(loops) == 2 else None
        schemas = tp.relations
        self.posts = [
            _VarRecon(v, e, schemas) for v, e in candidate.posts
        ]
        self.recons = {
            loop: [_VarRecon(v, e, schemas) for v, e in eqs]
            for loop, eqs in invariants.items()
        }
        self._scalar_names = [
            p.name for p in self.prog.params if not isinstance(p.ty, Schema)
        ]
        self._pairs = None
        self._derived = False
        self._cancellative = False
        if self.inner is not None:
            # the preservation sweep caches a split invariant's finished
            # part across inner indices; that is sound only when the part
            # cannot depend on the inner index
            for r in self.recons.get(self.inner.index, ()):
                e = r.expr
                if isinstance(e, tor.AggOf):
                    e = e.of
                if isinstance(e, tor.Concat) and _mentions_index(
                    e.left, self.inner.index
                ):
                    r.p1_static = False
            body = self.outer.node.body
            at = next(i for i, s in enumerate(body) if s is self.inner.node)
            self.prefix = body[:at]
            self.suffix = body[at + 1 :]
            if fast:
                self._derived = self._derived_shape(candidate, invariants)
                self._cancellative = self._body_cancellative(self.inner.node.body)

    # -- fast-path applicability ----------------------------------------------

    def _derived_shape(self, candidate, invariants) -> bool:
        """The invariants are exactly the mechanical derivation from the
        postconditions, whose shape the preservation/exit shortcuts rely on."""
        from . import synth  # import here: synth imports this module

        if self.bounds.rel_size < (2 if self.outer.rel == self.inner.rel else 1):
            return False
        if any(_has_top(e) for _, e in candidate.posts):
            return False
        try:
            derived = synth.derive_invariants(self.tp, candidate)
        except ValueError:
            return False
        return derived == invariants

    def _input_only_expr(self, e) -> bool:
        """The expression reads inputs and loop rows only, so its value is a
        function of the rows at the current indices and the parameters."""
        if isinstance(e, (IntLit, TextLit)):
            return True
        if isinstance(e, VarRef):
            return e.name in self._scalar_names
        if isinstance(e, FieldAccess):
            return any(
                l.index == e.index and l.rel == e.rel for l in self.tp.loops
            )
        if isinstance(e, (Add, MinMax)):
            return self._input_only_expr(e.left) and self._input_only_expr(e.right)
        return False

    def _input_only_record(self, r) -> bool:
        if isinstance(r, RowRef):
            return any(
                l.index == r.index and l.rel == r.rel for l in self.tp.loops
            )
        if isinstance(r, RecordLit):
            return all(self._input_only_expr(e) for _, e in r.items)
        return False

    def _input_only_pred(self, p) -> bool:
        if isinstance(p, Cmp):
            return self._input_only_expr(p.left) and self._input_only_expr(p.right)
        if isinstance(p, BoolOp):
            return self._input_only_pred(p.left) and self._input_only_pred(p.right)
        if isinstance(p, NotOp):
            return self._input_only_pred(p.operand)
        return False

    def _body_cancellative(self, stmts) -> bool:
        """Every effect of the body is appending input-determined rows or
        folding input-determined values into an accumulator with an
        associative update, so the change one iteration makes is a function
        of the current rows alone."""
        for s in stmts:
            if isinstance(s, If):
                if not self._input_only_pred(s.cond):
                    return False
                if not self._body_cancellative(s.body):
                    return False
            elif isinstance(s, Append):
                if not self._input_only_record(s.record):
                    return False
            elif isinstance(s, Assign):
                e = s.expr
                if not isinstance(e, (Add, MinMax)):
                    return False
                if isinstance(e.left, VarRef) and e.left.name == s.target:
                    other = e.right
                elif isinstance(e.right, VarRef) and e.right.name == s.target:
                    other = e.left
                else:
                    return False
                if not self._input_only_expr(other):
                    return False
            else:
                return False
        return True

    # -- shared pieces ------------------------------------------------------

    def _inputs(self):
        lists = []
        names = []
        for p in self.prog.params:
            names.append(p.name)
            if isinstance(p.ty, Schema):
                lists.append(relation_values(p.ty, self.bounds))
            elif p.ty == INT:
                lists.append(tuple(self.bounds.int_domain))
            else:
                lists.append(tuple(self.bounds.text_domain))
        pre = self.tp.pre_loop
        for combo in itertools.product(*lists):
            inputs = dict(zip(names, combo))
            store0 = interp.init_store(self.tp, inputs)
            if pre:
                interp.exec_stmts(self.tp, pre, store0)
            yield inputs, store0

    def _restore(self, store0: dict, recons, env, indices: dict, p1s=None):
        store = dict(store0)
        for n, recon in enumerate(recons):
            v = recon.value(env, None if p1s is None else p1s[n])
            store[recon.var] = list(v) if recon.is_rel else v
        store.update(indices)
        return store

    def _mismatch(self, vc, inputs, indices, recons, store, env, p1s=None):
        for n, recon in enumerate(recons):
            expected = recon.value(env, None if p1s is None else p1s[n])
            actual = store[recon.var]
            if recon.is_rel:
                actual = tuple(actual)
            if actual != expected:
                return Counterexample(
                    vc, dict(inputs), dict(indices), recon.var, expected, actual
                )
        return None

    # -- per-instance checks --------------------------------------------------

    def instance(self, vc: VC, inputs: dict, indices: dict):
        """Check one (inputs, indices) instance; Counterexample or None."""
        store0 = interp.init_store(self.tp, inputs)
        if self.tp.pre_loop:
            interp.exec_stmts(self.tp, self.tp.pre_loop, store0)
        env = dict(inputs)
        env.update(indices)
        oi = self.outer.index
        if vc.loop == oi:
            i = indices[oi]
            if vc.kind == INITIATION:
                return self._mismatch(vc, inputs, indices, self.recons[oi], store0, env)
            if vc.kind == EXIT:
                store = self._restore(store0, self.recons[oi], env, indices)
                penv = dict(inputs)
                return self._mismatch(vc, inputs, indices, self.posts, store, penv)
            store = self._restore(store0, self.recons[oi], env, indices)
            sig = interp.exec_stmts(self.tp, self.outer.node.body, store)
            if vc.kind == PRESERVATION:
                if sig == interp.BREAK:
                    return None
                env2 = dict(env)
                env2[oi] = i + 1
                return self._mismatch(vc, inputs, indices, self.recons[oi], store, env2)
            if sig != interp.BREAK:
                return None
            penv = dict(inputs)
            return self._mismatch(vc, inputs, indices, self.posts, store, penv)

        ij = self.inner.index
        if vc.kind == INITIATION:
            store = self._restore(store0, self.recons[oi], env, {oi: indices[oi]})
            if self.prefix:
                interp.exec_stmts(self.tp, self.prefix, store)
            env2 = dict(env)
            env2[ij] = 0
            ind2 = dict(indices)
            ind2[ij] = 0
            return self._mismatch(vc, inputs, ind2, self.recons[ij], store, env2)
        if vc.kind == EXIT:
            store = self._restore(store0, self.recons[ij], env, {oi: indices[oi]})
            if self.suffix:
                interp.exec_stmts(self.tp, self.suffix, store)
            env2 = dict(inputs)
            env2[oi] = indices[oi] + 1
            return self._mismatch(vc, inputs, indices, self.recons[oi], store, env2)
        # inner preservation
        store = self._restore(store0, self.recons[ij], env, indices)
        sig = interp.exec_stmts(self.tp, self.inner.node.body, store)
        if sig == interp.BREAK:
            return None
        env2 = dict(env)
        env2[ij] = indices[ij] + 1
        return self._mismatch(vc, inputs, indices, self.recons[ij], store, env2)

    # -- fast paths -------------------------------------------------------------
    #
    # Each returns (instances, counterexample-or-None), or None when its
    # premise does not hold and the sweep must run. A pass is reported with
    # the analytic count of instances the shortcut covers; a violation is
    # reported with the instances the shortcut actually checked and a
    # counterexample produced by instance(), so it replays like any other.

    def _minimal_inputs(self) -> dict:
        """The first inputs combination in canonical enumeration order."""
        inputs = {}
        for p in self.prog.params:
            if isinstance(p.ty, Schema):
                inputs[p.name] = OrderedRelation(p.ty, ())
            elif p.ty == INT:
                inputs[p.name] = self.bounds.int_domain[0]
            else:
                inputs[p.name] = self.bounds.text_domain[0]
        return inputs

    def _const_at_zero(self, recon, name: str):
        """("rel"|"scalar", value) when the invariant at index 0 denotes the
        same constant in every environment, else None."""
        e0 = _subst_index(recon.expr, name, tor.IntConst(0))
        if e0 is None:
            return None
        if isinstance(e0, _REL_NODES):
            if _always_empty(tor.simplify(e0)):
                return ("rel", ())
            return None
        if isinstance(e0, tor.AggOf):
            if not _always_empty(tor.simplify(e0.of)):
                return None
            return ("scalar", 0 if e0.kind in ("sum", "count") else None)
        if isinstance(e0, tor.SizeOf):
            if _always_empty(tor.simplify(e0.of)):
                return ("scalar", 0)
            return None
        if isinstance(e0, tor.IntConst):
            return ("scalar", e0.value)
        return None

    def _fast_init_outer(self, vc: VC):
        # With no statements ahead of the loop the initial store is the
        # declared constants, so when the invariant at 0 is a constant too
        # the outcome is the same for every input.
        if self.tp.pre_loop:
            return None
        pairs = []
        for recon in self.recons[self.outer.index]:
            cv = self._const_at_zero(recon, self.outer.index)
            if cv is None:
                return None
            pairs.append((recon, cv))
        inputs = self._minimal_inputs()
        store0 = interp.init_store(self.tp, inputs)
        for recon, (kind, want) in pairs:
            have = store0[recon.var]
            ok = tuple(have) == want if kind == "rel" else have == want
            if not ok:
                cex = self.instance(vc, inputs, {self.outer.index: 0})
                if cex is None:
                    return None
                return 1, cex
        return instance_count(vc, self.tp, self.bounds), None

    def _fast_exit_outer(self, vc: VC):
        # At i = |R| the invariant and the postcondition are often the same
        # expression once the index is substituted away (Top of a whole
        # relation is the relation); then the exit condition is an identity.
        oi = self.outer.index
        size = tor.SizeOf(tor.Query(self.outer.rel))
        posts = {r.var: r.expr for r in self.posts}
        for recon in self.recons[oi]:
            inv = _subst_index(recon.expr, oi, size)
            post = posts.get(recon.var)
            if inv is None or post is None:
                return None
            if isinstance(inv, _REL_NODES) and isinstance(post, _REL_NODES):
                same = tor.simplify(inv) == tor.simplify(post)
            else:
                same = tor.simplify_scalar(inv) == tor.simplify_scalar(post)
            if not same:
                return None
        return instance_count(vc, self.tp, self.bounds), None

    def _pair_scan(self):
        """Check one inner-loop iteration per (outer row, inner row, scalar
        values) combination. With a cancellative body and derived
        invariants, the change an iteration makes and the change the
        invariant expects are both functions of that combination alone, so
        these checks decide every preservation instance. Returns
        (all_ok, instances checked, first counterexample or None)."""
        if self._pairs is not None:
            return self._pairs
        oi, ij = self.outer.index, self.inner.index
        lsch = self.tp.relations[self.outer.rel]
        rsch = self.tp.relations[self.inner.rel]
        same = self.outer.rel == self.inner.rel
        domains = [
            self.bounds.int_domain
            if self.tp.var_types[n] == INT
            else self.bounds.text_domain
            for n in self._scalar_names
        ]
        vc = VC(PRESERVATION, ij)
        checked = 0
        result = None
        for rl, rs, sc in itertools.product(
            _row_domain(lsch, self.bounds),
            _row_domain(rsch, self.bounds),
            tuple(itertools.product(*domains)),
        ):
            checked += 1
            inputs = dict(zip(self._scalar_names, sc))
            if same:
                inputs[self.outer.rel] = OrderedRelation(lsch, (rl, rs))
                indices = {oi: 0, ij: 1}
            else:
                inputs[self.outer.rel] = OrderedRelation(lsch, (rl,))
                inputs[self.inner.rel] = OrderedRelation(rsch, (rs,))
                indices = {oi: 0, ij: 0}
            cex = self.instance(vc, inputs, indices)
            if cex is not None:
                result = (False, checked, cex)
                break
        if result is None:
            result = (True, checked, None)
        self._pairs = result
        return result

    def _fast_pres(self, vc: VC):
        ok, checked, cex = self._pair_scan()
        if ok:
            return instance_count(vc, self.tp, self.bounds), None
        return checked, cex

    def _fast_result(self, vc: VC):
        if not self.fast:
            return None
        oi = self.outer.index
        if vc.loop == oi and vc.kind == INITIATION:
            return self._fast_init_outer(vc)
        if vc.loop == oi and vc.kind == EXIT:
            return self._fast_exit_outer(vc)
        if self.inner is None or not self._derived:
            return None
        if vc.loop == self.inner.index:
            if vc.kind == INITIATION:
                # The finished part of the inner invariant is the outer
                # invariant expression and the running part starts empty, so
                # with nothing between the loop heads the condition is an
                # identity.
                return (
                    (instance_count(vc, self.tp, self.bounds), None)
                    if not self.prefix
                    else None
                )
            if vc.kind == EXIT:
                # At j = |S| the running part has consumed all of S, which
                # is exactly the outer invariant's increment from i to i+1.
                return (
                    (instance_count(vc, self.tp, self.bounds), None)
                    if not self.suffix
                    else None
                )
            if vc.kind == PRESERVATION and self._cancellative:
                return self._fast_pres(vc)
            return None
        if (
            vc.kind == PRESERVATION
            and self._cancellative
            and not self.prefix
            and not self.suffix
        ):
            return self._fast_pres(vc)
        return None

    # -- sweeps ---------------------------------------------------------------

    def run_vc(self, vc: VC):
        shortcut = self._fast_result(vc)
        if shortcut is not None:
            return shortcut
        oi = self.outer.index
        count = 0
        if vc.loop == oi:
            orel = self.outer.rel
            recons = self.recons[oi]
            for inputs, store0 in self._inputs():
                env = dict(inputs)
                size = inputs[orel].size
                if vc.kind == INITIATION:
                    count += 1
                    env[oi] = 0
                    cex = self._mismatch(vc, inputs, {oi: 0}, recons, store0, env)
                    if cex:
                        return count, cex
                elif vc.kind == EXIT:
                    count += 1
                    env[oi] = size
                    store = self._restore(store0, recons, env, {oi: size})
                    penv = dict(inputs)
                    cex = self._mismatch(vc, inputs, {oi: size}, self.posts, store, penv)
                    if cex:
                        return count, cex
                else:
                    for i in range(size):
                        count += 1
                        env[oi] = i
                        store = self._restore(store0, recons, env, {oi: i})
                        sig = interp.exec_stmts(self.tp, self.outer.node.body, store)
                        if vc.kind == PRESERVATION:
                            if sig == interp.BREAK:
                                continue
                            env2 = dict(env)
                            env2[oi] = i + 1
                            cex = self._mismatch(
                                vc, inputs, {oi: i}, recons, store, env2
                            )
                        else:
                            if sig != interp.BREAK:
                                continue
                            penv = dict(inputs)
                            cex = self._mismatch(
                                vc, inputs, {oi: i}, self.posts, store, penv
                            )
                        if cex:
                            return count, cex
            return count, None

        ij = self.inner.index
        orel, irel = self.outer.rel, self.inner.rel
        orecons, irecons = self.recons[oi], self.recons[ij]
        for inputs, store0 in self._inputs():
            env = dict(inputs)
            osize = inputs[orel].size
            isize = inputs[irel].size
            for i in range(osize):
                env[oi] = i
                env.pop(ij, None)
                if vc.kind == INITIATION:
                    count += 1
                    store = self._restore(store0, orecons, env, {oi: i})
                    if self.prefix:
                        interp.exec_stmts(self.tp, self.prefix, store)
                    env2 = dict(env)
                    env2[ij] = 0
                    cex = self._mismatch(
                        vc, inputs, {oi: i, ij: 0}, irecons, store, env2
                    )
                    if cex:
                        return count, cex
                elif vc.kind == EXIT:
                    count += 1
                    env[ij] = isize
                    p1s = [r.part1(env) for r in irecons]
                    store = self._restore(store0, irecons, env, {oi: i}, p1s)
                    if self.suffix:
                        interp.exec_stmts(self.tp, self.suffix, store)
                    env2 = dict(inputs)
                    env2[oi] = i + 1
                    cex = self._mismatch(
                        vc, inputs, {oi: i, ij: isize}, orecons, store, env2
                    )
                    if cex:
                        return count, cex
                else:
                    env[ij] = 0
                    p1s = [r.part1(env) if r.p1_static else None for r in irecons]
                    for j in range(isize):
                        count += 1
                        env[ij] = j
                        store = self._restore(
                            store0, irecons, env, {oi: i, ij: j}, p1s
                        )
                        sig = interp.exec_stmts(self.tp, self.inner.node.body, store)
                        if sig == interp.BREAK:
                            continue
                        env2 = dict(env)
                        env2[ij] = j + 1
                        cex = self._mismatch(
                            vc, inputs, {oi: i, ij: j}, irecons, store, env2, p1s
                        )
                        if cex:
                            return count, cex
        return count, None


# ---------------------------------------------------------------------------
# Entry points
# ---------------------------------------------------------------------------


def validate(
    tp: TypedProgram,
    candidate,
    invariants: dict,
    bounds: Bounds = Bounds(),
    fast: bool = True,
):
    """Check every verification condition; first violation wins."""
    reason = _non_checkable_reason(tp, candidate, bounds)
    if reason:
        return CheckResult(NON_CHECKABLE, 0, None, reason)
    checker = _Checker(tp, candidate, invariants, bounds, fast)
    total = 0
    done = 0
    for vc in gen_vcs(tp):
        n, cex = checker.run_vc(vc)
        total += n
        done += 1
        if cex is not None:
            return CheckResult(VIOLATED, total, cex, vcs=done)
    return CheckResult(VALID, total, None, vcs=done)


def recheck(tp: TypedProgram, candidate, invariants: dict, cex: Counterexample) -> bool:
    """Replay one counterexample instance; True when it still violates."""
    checker = _Checker(tp, candidate, invariants, Bounds())
    return checker.instance(cex.vc, cex.inputs, cex.indices) is not None
