"""Candidate synthesis.

The synthesizer mines a template from the program (relations, scalar
parameters, literal constants, comparison operators, accumulator kinds,
loop structure), enumerates candidate postconditions for every variable
assigned inside the loops, derives the matching loop invariants
mechanically, and accepts the first candidate the verifier validates.

Candidate postconditions are translatable by construction:

    list variable    Top? . Proj? . Sel? . base
    accumulator      Agg(kind, field?, Sel?(base))

where base is Query(R) for a single loop over R and Join(Query(R),
Query(S), p) for a loop over S nested in a loop over R. Top appears only
for single-loop programs containing break. Selection predicates are single
atoms or two-atom conjunctions; atoms compare a field against another
field, a mined constant, or a scalar parameter.

Candidates are ordered by (total cost, canonical serialization), so the
accepted candidate is cost-minimal and reruns accept the same one. With
jobs > 1 the candidates are verified concurrently but accepted in order,
and reported statistics cover exactly the candidates up to the accepted
one, which keeps reports byte identical across job counts.

The invariants: for the outer loop the postcondition with the outer rows
restricted to the first i; for the inner loop the concatenation of the
finished part (first i outer rows, all inner rows) and the current part
(outer row i alone, first j inner rows). Aggregates wrap the concatenation
instead of concatenating scalars. Index range conjuncts (0 <= i <= Size)
are implicit; the verifier enumerates only in-range indices.
"""

from __future__ import annotations

import itertools
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from . import tor
from .frontend import (
    Add,
    Assign,
    BoolOp,
    Cmp,
    For,
    If,
    IntLit,
    MinMax,
    NotOp,
    OPTINT,
    RecordLit,
    TextLit,
    TypedProgram,
)
from .relation import INT, TEXT, Schema

_MIRROR = {"<": ">", "<=": ">=", ">": "<", ">=": "<=", "=": "=", "!=": "!="}
_CMP_ORDER = ("=", "!=", "<", "<=", ">", ">=")


# ---------------------------------------------------------------------------
# Template
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Template:
    relations: tuple  # (name, Schema) in parameter order
    scalar_params: tuple  # (name, "int" | "text")
    constants: tuple  # mined literals, ints then texts, each sorted
    cmps: tuple  # comparison operators appearing in the program
    agg_kinds: tuple  # accumulator kinds appearing in the program
    has_append: bool
    has_break: bool
    loop_relations: tuple  # relation names outermost first, length 1 or 2


def _mine_literals(node, ints: set, texts: set) -> None:
    if isinstance(node, IntLit):
        ints.add(node.value)
    elif isinstance(node, TextLit):
        texts.add(node.value)
    elif isinstance(node, (Add, MinMax, Cmp, BoolOp)):
        _mine_literals(node.left, ints, texts)
        _mine_literals(node.right, ints, texts)
    elif isinstance(node, NotOp):
        _mine_literals(node.operand, ints, texts)
    elif isinstance(node, RecordLit):
        for _, e in node.items:
            _mine_literals(e, ints, texts)


def _mine_cmps(node, ops: set) -> None:
    if isinstance(node, Cmp):
        op = "=" if node.op == "==" else node.op
        ops.add(op)
    elif isinstance(node, BoolOp):
        _mine_cmps(node.left, ops)
        _mine_cmps(node.right, ops)
    elif isinstance(node, NotOp):
        _mine_cmps(node.operand, ops)


def _walk_stmts(stmts, on_stmt) -> None:
    for s in stmts:
        on_stmt(s)
        if isinstance(s, If):
            _walk_stmts(s.body, on_stmt)
        elif isinstance(s, For):
            _walk_stmts(s.body, on_stmt)


def extract_template(tp: TypedProgram) -> Template:
    ints: set = set()
    texts: set = set()
    ops: set = set()
    has_append = False
    has_break = False

    def on_stmt(s):
        nonlocal has_append, has_break
        from .frontend import Append, Break

        if isinstance(s, Assign):
            _mine_literals(s.expr, ints, texts)
        elif isinstance(s, Append):
            has_append = True
            _mine_literals(s.record, ints, texts)
        elif isinstance(s, If):
            _mine_literals(s.cond, ints, texts)
            _mine_cmps(s.cond, ops)
        elif isinstance(s, Break):
            has_break = True

    _walk_stmts(tp.ast.body, on_stmt)
    loops = sorted(tp.loops, key=lambda l: l.depth)
    return Template(
        relations=tuple(sorted(tp.relations.items())),
        scalar_params=tuple(
            (p.name, p.ty) for p in tp.ast.params if isinstance(p.ty, str)
        ),
        constants=tuple(sorted(ints)) + tuple(sorted(texts)),
        cmps=tuple(op for op in _CMP_ORDER if op in ops),
        agg_kinds=tuple(k for k in tor.AGG_KINDS if k in set(tp.agg_updates.values())),
        has_append=has_append,
        has_break=has_break,
        loop_relations=tuple(l.rel for l in loops),
    )


# ---------------------------------------------------------------------------
# Live variables
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LiveVar:
    """A local assigned inside the loops; it needs a postcondition."""

    name: str
    schema: object  # Schema for list variables, None for accumulators
    agg_kind: str  # "" for list variables


def live_vars(tp: TypedProgram) -> tuple:
    from .frontend import Append, ListDecl

    assigned: list = []

    def on_stmt(s):
        if isinstance(s, Assign) and s.target not in assigned:
            assigned.append(s.target)
        elif isinstance(s, Append) and s.target not in assigned:
            assigned.append(s.target)

    for loop in tp.ast.body:
        if isinstance(loop, For):
            _walk_stmts([loop], on_stmt)
    out = []
    decls = {d.name: d for d in tp.ast.decls}
    for name in assigned:
        d = decls[name]
        if isinstance(d, ListDecl):
            out.append(LiveVar(name, d.schema, ""))
        else:
            out.append(LiveVar(name, None, tp.agg_updates[name]))
    return tuple(out)


# ---------------------------------------------------------------------------
# Enumeration
# ---------------------------------------------------------------------------


def _atoms_for(schema: Schema, template: Template, cross_only: bool) -> list:
    """Comparison atoms over a schema, canonicalized and deduplicated.

    Field-field atoms keep the lexicographically smaller field on the left,
    mirroring the operator when needed. Constants and parameters sit on the
    right. cross_only restricts to atoms relating an l.* and an r.* field,
    the join predicate vocabulary.
    """
    atoms = set()
    names = schema.names
    for op in template.cmps:
        for f in names:
            ft = schema.type_of(f)
            if ft == TEXT and op not in ("=", "!="):
                continue
            for g in names:
                if g == f or schema.type_of(g) != ft:
                    continue
                if cross_only and f.split(".")[0] == g.split(".")[0]:
                    continue
                a, b, o = (f, g, op) if f < g else (g, f, _MIRROR[op])
                atoms.add(tor.CmpAtom(o, tor.FieldRef(a), tor.FieldRef(b)))
            if cross_only:
                continue
            for c in template.constants:
                if (INT if isinstance(c, int) else TEXT) != ft:
                    continue
                rhs = tor.IntConst(c) if isinstance(c, int) else tor.TextConst(c)
                atoms.add(tor.CmpAtom(op, tor.FieldRef(f), rhs))
            for pname, pty in template.scalar_params:
                if pty != ft:
                    continue
                atoms.add(tor.CmpAtom(op, tor.FieldRef(f), tor.ParamRef(pname)))
    return sorted(atoms, key=tor.to_sexpr)


def _preds_for(schema: Schema, template: Template, cross_only: bool = False) -> list:
    """true, each atom, and each two-atom conjunction in canonical order."""
    atoms = _atoms_for(schema, template, cross_only)
    preds: list = [tor.TruePred()]
    preds.extend(atoms)
    for a, b in itertools.combinations(atoms, 2):
        preds.append(tor.AndP(a, b))
    return preds


def _bases(template: Template) -> list:
    """Base expressions fixed by the loop structure."""
    schemas = dict(template.relations)
    if len(template.loop_relations) == 1:
        return [tor.Query(template.loop_relations[0])]
    outer, inner = template.loop_relations
    joined = schemas[outer].joined_with(schemas[inner])
    out = []
    for jp in _preds_for(joined, template, cross_only=True):
        out.append(tor.Join(tor.Query(outer), tor.Query(inner), jp))
    return out


def _projections(schema: Schema) -> list:
    """Proper nonempty order-preserving field subsequences."""
    names = schema.names
    out = []
    for r in range(1, len(names)):
        out.extend(itertools.combinations(names, r))
    return out


def _top_bounds(template: Template) -> list:
    out = [tor.ParamRef(n) for n, t in template.scalar_params if t == INT]
    out.extend(tor.IntConst(c) for c in template.constants if isinstance(c, int))
    return out


def posts_for(var: LiveVar, template: Template, bound: int, schemas: dict) -> list:
    """All candidate postconditions for one variable, cost-bounded, sorted."""
    out = []
    nested = len(template.loop_relations) == 2
    for base in _bases(template):
        base_schema = tor.schema_of(base, schemas)
        if var.agg_kind:
            fields = [None] if var.agg_kind == "count" else [
                n for n in base_schema.names if base_schema.type_of(n) == INT
            ]
            for pred in _preds_for(base_schema, template):
                body = base if isinstance(pred, tor.TruePred) else tor.Sel(pred, base)
                for f in fields:
                    e = tor.AggOf(var.agg_kind, f, body)
                    if tor.cost(e) <= bound:
                        out.append(e)
            continue
        projs: list = [None]
        projs.extend(_projections(base_schema))
        for pred in _preds_for(base_schema, template):
            selected = base if isinstance(pred, tor.TruePred) else tor.Sel(pred, base)
            for proj in projs:
                shaped = selected if proj is None else tor.Proj(proj, selected)
                sch = base_schema if proj is None else base_schema.restrict(proj)
                if sch.types != var.schema.types:
                    continue
                if tor.cost(shaped) <= bound:
                    out.append(shaped)
                if template.has_break and not nested:
                    for k in _top_bounds(template):
                        topped = tor.Top(shaped, k)
                        if tor.cost(topped) <= bound:
                            out.append(topped)
    return sorted(out, key=lambda e: (tor.cost(e), tor.to_sexpr(e)))


@dataclass(frozen=True)
class Candidate:
    """One postcondition per live variable, declaration order."""

    posts: tuple  # ((var name, expression), ...)
    cost: int

    def serialization(self) -> tuple:
        return tuple(tor.to_sexpr(e) for _, e in self.posts)


def enumerate_candidates(tp: TypedProgram, template: Template, bound: int) -> list:
    """The full candidate list in acceptance order."""
    lvs = live_vars(tp)
    if not lvs:
        return []
    schemas = tp.relations
    per_var = []
    for v in lvs:
        posts = posts_for(v, template, bound, schemas)
        if not posts:
            return []
        per_var.append(posts)
    cands = []
    for combo in itertools.product(*per_var):
        total = sum(tor.cost(e) for e in combo)
        if total <= bound:
            cands.append(
                Candidate(tuple(zip((v.name for v in lvs), combo)), total)
            )
    cands.sort(key=lambda c: (c.cost, c.serialization()))
    return cands


# ---------------------------------------------------------------------------
# Invariant derivation
# ---------------------------------------------------------------------------


def _transform_base(e, f):
    """Rebuild a candidate postcondition with its base replaced by f(base)."""
    if isinstance(e, tor.AggOf):
        return tor.AggOf(e.kind, e.field, _transform_base(e.of, f))
    if isinstance(e, tor.Top):
        return tor.Top(_transform_base(e.of, f), e.k)
    if isinstance(e, tor.Proj):
        return tor.Proj(e.fields, _transform_base(e.of, f))
    if isinstance(e, tor.Sel):
        return tor.Sel(e.pred, _transform_base(e.of, f))
    if isinstance(e, (tor.Query, tor.Join)):
        return f(e)
    raise ValueError(f"not a candidate postcondition: {e!r}")


def _outer_prefix(i: str):
    def f(base):
        if isinstance(base, tor.Query):
            return tor.Top(base, tor.IndexRef(i))
        return tor.Join(tor.Top(base.left, tor.IndexRef(i)), base.right, base.pred)

    return f


def _current_row_prefix(i: str, j: str, outer_schema: Schema):
    def f(base):
        left = tor.AppendRow(
            tor.EmptyRel(outer_schema), tor.GetRow(base.left, tor.IndexRef(i))
        )
        return tor.Join(left, tor.Top(base.right, tor.IndexRef(j)), base.pred)

    return f


def derive_invariants(tp: TypedProgram, candidate: Candidate) -> dict:
    """Map each loop index to its invariant equalities ((var, expr), ...)."""
    loops = sorted(tp.loops, key=lambda l: l.depth)
    outer = loops[0]
    inv: dict = {}
    inv[outer.index] = tuple(
        (v, _transform_base(p, _outer_prefix(outer.index))) for v, p in candidate.posts
    )
    if len(loops) == 2:
        inner = loops[1]
        outer_schema = tp.relations[outer.rel]
        eqs = []
        for v, p in candidate.posts:
            part1 = _transform_base(p, _outer_prefix(outer.index))
            part2 = _transform_base(
                p, _current_row_prefix(outer.index, inner.index, outer_schema)
            )
            if isinstance(p, tor.AggOf):
                eqs.append((v, tor.AggOf(p.kind, p.field, tor.Concat(part1.of, part2.of))))
            else:
                eqs.append((v, tor.Concat(part1, part2)))
        inv[inner.index] = tuple(eqs)
    return inv


# ---------------------------------------------------------------------------
# Search
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SynthStats:
    enumerated: int
    tried: int
    rejected: int
    non_checkable: int
    vcs_checked: int
    vc_instances: int


@dataclass(frozen=True)
class Solution:
    candidate: Candidate
    invariants: dict
    sql: object  # abstract SQL for the returned variable
    sql_text: str
    rank: int
    stats: SynthStats


@dataclass(frozen=True)
class Failure:
    reason: str  # "exhausted" | "timeout"
    stats: SynthStats


@dataclass(frozen=True)
class Options:
    cost_bound: int = 24
    rel_bound: int = 3
    int_domain: tuple = (0, 1, 2)
    text_domain: tuple = ("a", "b")
    timeout: float = 0.0  # seconds; 0 disables
    jobs: int = 1


def synthesize(tp: TypedProgram, options: Options = Options()):
    """Search candidates in order; return Solution or Failure."""
    from . import emit, verify

    template = extract_template(tp)
    if tp.ast.result not in {v.name for v in live_vars(tp)}:
        return Failure("exhausted", SynthStats(0, 0, 0, 0, 0, 0))
    cands = enumerate_candidates(tp, template, options.cost_bound)
    bounds = verify.Bounds(
        rel_size=options.rel_bound,
        int_domain=tuple(options.int_domain),
        text_domain=tuple(options.text_domain),
    )
    started = time.monotonic()

    def check(candidate: Candidate):
        invariants = derive_invariants(tp, candidate)
        return verify.validate(tp, candidate, invariants, bounds), invariants

    def finish(idx: int, results: list):
        candidate = cands[idx]
        verdict, invariants = results[idx]
        tried = idx + 1
        instances = sum(r.instances for r, _ in results[:tried])
        vcs = sum(r.vcs for r, _ in results[:tried])
        non_checkable = sum(
            1 for r, _ in results[:tried] if r.status == verify.NON_CHECKABLE
        )
        rejected = tried - 1 - non_checkable
        stats = SynthStats(len(cands), tried, rejected, non_checkable, vcs, instances)
        post = dict(candidate.posts)[tp.ast.result]
        sql = emit.to_sql(post, tp.relations)
        return Solution(candidate, invariants, sql, emit.render(sql), idx, stats)

    results: list = []
    if options.jobs <= 1:
        for idx, cand in enumerate(cands):
            if options.timeout and time.monotonic() - started > options.timeout:
                return Failure("timeout", _failure_stats(cands, results))
            results.append(check(cand))
            if results[-1][0].status == verify.VALID:
                return finish(idx, results)
        return Failure("exhausted", _failure_stats(cands, results))

    with ThreadPoolExecutor(max_workers=options.jobs) as pool:
        futures = [pool.submit(check, c) for c in cands]
        try:
            for idx, fut in enumerate(futures):
                if options.timeout and time.monotonic() - started > options.timeout:
                    return Failure("timeout", _failure_stats(cands, results))
                results.append(fut.result())
                if results[-1][0].status == verify.VALID:
                    return finish(idx, results)
        finally:
            for fut in futures:
                fut.cancel()
    return Failure("exhausted", _failure_stats(cands, results))


def _failure_stats(cands: list, results: list) -> SynthStats:
    from . import verify

    non_checkable = sum(1 for r, _ in results if r.status == verify.NON_CHECKABLE)
    return SynthStats(
        enumerated=len(cands),
        tried=len(results),
        rejected=len(results) - non_checkable,
        non_checkable=non_checkable,
        vcs_checked=sum(r.vcs for r, _ in results),
        vc_instances=sum(r.instances for r, _ in results),
    )
