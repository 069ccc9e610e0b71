"""Algebra of ordered relations.

Expressions denote either an ordered relation (sequence of records,
duplicates allowed, position meaningful) or a scalar derived from one.
Relation operators: Query, Empty, Sel, Proj, Join, Top, Append, Concat.
Scalar operators: Agg (sum/count/min/max), Size, plus Get for single rows.

Conventions fixed here and relied on everywhere else:
    - Top(e, k) takes the first k records; k < 0 gives the empty prefix,
      k >= Size(e) gives e itself.
    - Join(l, r, p) emits surviving pairs left-major: the pair (i, j) sits
      before (i', j') iff i < i' or (i = i' and j < j').
    - Agg(sum) of no rows is 0, Agg(count) is the row count, Agg(min/max)
      of no rows is absent (None).
    - Serialization is a canonical s-expression, e.g.
      (sel (> (field a) 2) (query R)); candidate ordering ties break on it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from .relation import INT, TEXT, OrderedRelation, Schema, SchemaError


class UnboundName(KeyError):
    """An expression referenced a name the environment does not bind."""


# ---------------------------------------------------------------------------
# Expression types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IntConst:
    value: int


@dataclass(frozen=True)
class TextConst:
    value: str


@dataclass(frozen=True)
class ParamRef:
    name: str


@dataclass(frozen=True)
class IndexRef:
    """A loop index as a scalar, optionally shifted by a constant."""

    name: str
    offset: int = 0


@dataclass(frozen=True)
class FieldRef:
    """A field of the row a predicate is being applied to."""

    name: str


@dataclass(frozen=True)
class TruePred:
    pass


@dataclass(frozen=True)
class CmpAtom:
    op: str  # = != < <= > >=
    lhs: object
    rhs: object


@dataclass(frozen=True)
class AndP:
    left: object
    right: object


@dataclass(frozen=True)
class OrP:
    left: object
    right: object


@dataclass(frozen=True)
class NotP:
    operand: object


Pred = Union[TruePred, CmpAtom, AndP, OrP, NotP]


@dataclass(frozen=True)
class Query:
    rel: str


@dataclass(frozen=True)
class EmptyRel:
    schema: Schema


@dataclass(frozen=True)
class Sel:
    pred: object
    of: object


@dataclass(frozen=True)
class Proj:
    fields: tuple[str, ...]
    of: object


@dataclass(frozen=True)
class Join:
    left: object
    right: object
    pred: object


@dataclass(frozen=True)
class Top:
    of: object
    k: object  # scalar expression


@dataclass(frozen=True)
class AppendRow:
    of: object
    rec: object  # record expression


@dataclass(frozen=True)
class Concat:
    left: object
    right: object


RelExpr = Union[Query, EmptyRel, Sel, Proj, Join, Top, AppendRow, Concat]


@dataclass(frozen=True)
class GetRow:
    """The record at a 0-based position; out of range raises IndexError."""

    of: object
    idx: object


@dataclass(frozen=True)
class RecordConst:
    values: tuple


@dataclass(frozen=True)
class SizeOf:
    of: object


@dataclass(frozen=True)
class AggOf:
    kind: str  # sum | count | min | max
    field: Optional[str]  # None only for count
    of: object


ScalarExpr = Union[IntConst, TextConst, ParamRef, IndexRef, SizeOf, AggOf]

AGG_KINDS = ("sum", "count", "min", "max")


# ---------------------------------------------------------------------------
# Schema inference and static validation
# ---------------------------------------------------------------------------


def schema_of(e, schemas: dict) -> Schema:
    """Schema of a relation expression given the schemas of named relations.

    Also validates predicates (fields exist, comparisons well typed) and
    projections; raises SchemaError or UnboundName.
    """
    if isinstance(e, Query):
        if e.rel not in schemas:
            raise UnboundName(e.rel)
        return schemas[e.rel]
    if isinstance(e, EmptyRel):
        return e.schema
    if isinstance(e, Sel):
        sch = schema_of(e.of, schemas)
        check_pred(e.pred, sch)
        return sch
    if isinstance(e, Proj):
        return schema_of(e.of, schemas).restrict(e.fields)
    if isinstance(e, Join):
        sch = schema_of(e.left, schemas).joined_with(schema_of(e.right, schemas))
        check_pred(e.pred, sch)
        return sch
    if isinstance(e, Top):
        return schema_of(e.of, schemas)
    if isinstance(e, AppendRow):
        return schema_of(e.of, schemas)
    if isinstance(e, Concat):
        left = schema_of(e.left, schemas)
        right = schema_of(e.right, schemas)
        if left.types != right.types:
            raise SchemaError(
                f"concat operands disagree: {left.fields} vs {right.fields}"
            )
        return left
    raise SchemaError(f"not a relation expression: {e!r}")


def _operand_type(o, sch: Schema) -> str:
    if isinstance(o, FieldRef):
        return sch.type_of(o.name)
    if isinstance(o, IntConst):
        return INT
    if isinstance(o, TextConst):
        return TEXT
    if isinstance(o, (ParamRef, IndexRef)):
        # parameters are typed by use; comparisons force both sides equal
        return "param"
    raise SchemaError(f"not a predicate operand: {o!r}")


def check_pred(p, sch: Schema) -> None:
    if isinstance(p, TruePred):
        return
    if isinstance(p, CmpAtom):
        lt = _operand_type(p.lhs, sch)
        rt = _operand_type(p.rhs, sch)
        if "param" not in (lt, rt) and lt != rt:
            raise SchemaError(f"comparison mixes {lt} and {rt}")
        if TEXT in (lt, rt) and p.op not in ("=", "!="):
            raise SchemaError("text supports only = and !=")
        return
    if isinstance(p, (AndP, OrP)):
        check_pred(p.left, sch)
        check_pred(p.right, sch)
        return
    if isinstance(p, NotP):
        check_pred(p.operand, sch)
        return
    raise SchemaError(f"not a predicate: {p!r}")


def pred_fields(p) -> set:
    if isinstance(p, CmpAtom):
        out = set()
        for o in (p.lhs, p.rhs):
            if isinstance(o, FieldRef):
                out.add(o.name)
        return out
    if isinstance(p, (AndP, OrP)):
        return pred_fields(p.left) | pred_fields(p.right)
    if isinstance(p, NotP):
        return pred_fields(p.operand)
    return set()


# ---------------------------------------------------------------------------
# Evaluation (reference implementation)
# ---------------------------------------------------------------------------


def _env_rel(env: dict, name: str) -> OrderedRelation:
    try:
        v = env[name]
    except KeyError:
        raise UnboundName(name) from None
    if not isinstance(v, OrderedRelation):
        raise SchemaError(f"{name!r} is bound to a scalar, expected a relation")
    return v


def _env_scalar(env: dict, name: str):
    try:
        v = env[name]
    except KeyError:
        raise UnboundName(name) from None
    if isinstance(v, OrderedRelation):
        raise SchemaError(f"{name!r} is bound to a relation, expected a scalar")
    return v


def eval_scalar(e, env: dict):
    if isinstance(e, IntConst):
        return e.value
    if isinstance(e, TextConst):
        return e.value
    if isinstance(e, ParamRef):
        return _env_scalar(env, e.name)
    if isinstance(e, IndexRef):
        return _env_scalar(env, e.name) + e.offset
    if isinstance(e, SizeOf):
        return eval_rel(e.of, env).size
    if isinstance(e, AggOf):
        rel = eval_rel(e.of, env)
        if e.kind == "count":
            return rel.size
        i = rel.schema.index_of(e.field)
        if rel.schema.types[i] != INT:
            raise SchemaError(f"cannot aggregate over text field {e.field!r}")
        col = [r[i] for r in rel.rows]
        if e.kind == "sum":
            return sum(col)
        if not col:
            return None
        return min(col) if e.kind == "min" else max(col)
    raise SchemaError(f"not a scalar expression: {e!r}")


def eval_record(e, env: dict) -> tuple:
    if isinstance(e, RecordConst):
        return e.values
    if isinstance(e, GetRow):
        rel = eval_rel(e.of, env)
        i = eval_scalar(e.idx, env)
        if not (0 <= i < rel.size):
            raise IndexError(f"get index {i} out of range 0..{rel.size - 1}")
        return rel.rows[i]
    raise SchemaError(f"not a record expression: {e!r}")


def _atom_operand(o, schema: Schema, row: tuple, env: dict):
    if isinstance(o, FieldRef):
        return row[schema.index_of(o.name)]
    if isinstance(o, (IntConst, TextConst)):
        return o.value
    if isinstance(o, ParamRef):
        return _env_scalar(env, o.name)
    if isinstance(o, IndexRef):
        return _env_scalar(env, o.name) + o.offset
    raise SchemaError(f"not a predicate operand: {o!r}")


def eval_pred(p, schema: Schema, row: tuple, env: dict) -> bool:
    if isinstance(p, TruePred):
        return True
    if isinstance(p, CmpAtom):
        a = _atom_operand(p.lhs, schema, row, env)
        b = _atom_operand(p.rhs, schema, row, env)
        return {
            "=": a == b,
            "!=": a != b,
            "<": a < b,
            "<=": a <= b,
            ">": a > b,
            ">=": a >= b,
        }[p.op]
    if isinstance(p, AndP):
        return eval_pred(p.left, schema, row, env) and eval_pred(p.right, schema, row, env)
    if isinstance(p, OrP):
        return eval_pred(p.left, schema, row, env) or eval_pred(p.right, schema, row, env)
    if isinstance(p, NotP):
        return not eval_pred(p.operand, schema, row, env)
    raise SchemaError(f"not a predicate: {p!r}")


def eval_rel(e, env: dict) -> OrderedRelation:
    """Evaluate a relation expression; order is part of the value."""
    if isinstance(e, Query):
        return _env_rel(env, e.rel)
    if isinstance(e, EmptyRel):
        return OrderedRelation(e.schema, ())
    if isinstance(e, Sel):
        rel = eval_rel(e.of, env)
        rows = tuple(
            r for r in rel.rows if eval_pred(e.pred, rel.schema, r, env)
        )
        return OrderedRelation(rel.schema, rows)
    if isinstance(e, Proj):
        rel = eval_rel(e.of, env)
        sch = rel.schema.restrict(e.fields)
        idx = [rel.schema.index_of(n) for n in e.fields]
        return OrderedRelation(sch, tuple(tuple(r[i] for i in idx) for r in rel.rows))
    if isinstance(e, Join):
        left = eval_rel(e.left, env)
        right = eval_rel(e.right, env)
        sch = left.schema.joined_with(right.schema)
        rows = []
        for lr in left.rows:
            for rr in right.rows:
                combined = lr + rr
                if eval_pred(e.pred, sch, combined, env):
                    rows.append(combined)
        return OrderedRelation(sch, tuple(rows))
    if isinstance(e, Top):
        rel = eval_rel(e.of, env)
        k = eval_scalar(e.k, env)
        if k <= 0:
            return OrderedRelation(rel.schema, ())
        return OrderedRelation(rel.schema, rel.rows[:k])
    if isinstance(e, AppendRow):
        rel = eval_rel(e.of, env)
        rec = eval_record(e.rec, env)
        if len(rec) != len(rel.schema.fields):
            raise SchemaError(f"appended record {rec!r} does not fit schema")
        return OrderedRelation(rel.schema, rel.rows + (rec,))
    if isinstance(e, Concat):
        left = eval_rel(e.left, env)
        right = eval_rel(e.right, env)
        if left.schema.types != right.schema.types:
            raise SchemaError("concat operands disagree on schema")
        return OrderedRelation(left.schema, left.rows + right.rows)
    raise SchemaError(f"not a relation expression: {e!r}")


# ---------------------------------------------------------------------------
# Compiled evaluation: same semantics as eval_rel/eval_scalar, specialized
# once per expression so the bounded verifier can run millions of instances.
# Closures take an environment dict and return rows tuples / scalars.
# ---------------------------------------------------------------------------


def compile_pred(p, schema: Schema):
    """Build row_test(row, env) for a predicate over a fixed schema."""
    if isinstance(p, TruePred):
        return lambda row, env: True
    if isinstance(p, CmpAtom):
        lhs = _compile_operand(p.lhs, schema)
        rhs = _compile_operand(p.rhs, schema)
        op = p.op
        if op == "=":
            return lambda row, env: lhs(row, env) == rhs(row, env)
        if op == "!=":
            return lambda row, env: lhs(row, env) != rhs(row, env)
        if op == "<":
            return lambda row, env: lhs(row, env) < rhs(row, env)
        if op == "<=":
            return lambda row, env: lhs(row, env) <= rhs(row, env)
        if op == ">":
            return lambda row, env: lhs(row, env) > rhs(row, env)
        return lambda row, env: lhs(row, env) >= rhs(row, env)
    if isinstance(p, AndP):
        a = compile_pred(p.left, schema)
        b = compile_pred(p.right, schema)
        return lambda row, env: a(row, env) and b(row, env)
    if isinstance(p, OrP):
        a = compile_pred(p.left, schema)
        b = compile_pred(p.right, schema)
        return lambda row, env: a(row, env) or b(row, env)
    if isinstance(p, NotP):
        a = compile_pred(p.operand, schema)
        return lambda row, env: not a(row, env)
    raise SchemaError(f"not a predicate: {p!r}")


def _compile_operand(o, schema: Schema):
    if isinstance(o, FieldRef):
        i = schema.index_of(o.name)
        return lambda row, env: row[i]
    if isinstance(o, (IntConst, TextConst)):
        v = o.value
        return lambda row, env: v
    if isinstance(o, ParamRef):
        n = o.name
        return lambda row, env: env[n]
    if isinstance(o, IndexRef):
        n, d = o.name, o.offset
        return lambda row, env: env[n] + d
    raise SchemaError(f"not a predicate operand: {o!r}")


def compile_rel(e, schemas: dict):
    """Return (schema, fn) where fn(env) yields the rows tuple of e."""
    sch = schema_of(e, schemas)
    if isinstance(e, Query):
        name = e.rel
        return sch, lambda env: env[name].rows
    if isinstance(e, EmptyRel):
        return sch, lambda env: ()
    if isinstance(e, Sel):
        _, of = compile_rel(e.of, schemas)
        test = compile_pred(e.pred, sch)
        return sch, lambda env: tuple(r for r in of(env) if test(r, env))
    if isinstance(e, Proj):
        of_sch, of = compile_rel(e.of, schemas)
        idx = tuple(of_sch.index_of(n) for n in e.fields)
        return sch, lambda env: tuple(tuple(r[i] for i in idx) for r in of(env))
    if isinstance(e, Join):
        _, lf = compile_rel(e.left, schemas)
        _, rf = compile_rel(e.right, schemas)
        test = compile_pred(e.pred, sch)

        def join(env):
            rrows = rf(env)
            return tuple(
                lr + rr
                for lr in lf(env)
                for rr in rrows
                if test(lr + rr, env)
            )

        return sch, join
    if isinstance(e, Top):
        _, of = compile_rel(e.of, schemas)
        k = compile_scalar(e.k, schemas)

        def top(env):
            n = k(env)
            return of(env)[:n] if n > 0 else ()

        return sch, top
    if isinstance(e, AppendRow):
        _, of = compile_rel(e.of, schemas)
        rec = compile_record(e.rec, schemas)
        return sch, lambda env: of(env) + (rec(env),)
    if isinstance(e, Concat):
        _, lf = compile_rel(e.left, schemas)
        _, rf = compile_rel(e.right, schemas)
        return sch, lambda env: lf(env) + rf(env)
    raise SchemaError(f"not a relation expression: {e!r}")


def compile_scalar(e, schemas: dict):
    if isinstance(e, (IntConst, TextConst)):
        v = e.value
        return lambda env: v
    if isinstance(e, ParamRef):
        n = e.name
        return lambda env: env[n]
    if isinstance(e, IndexRef):
        n, d = e.name, e.offset
        return lambda env: env[n] + d
    if isinstance(e, SizeOf):
        _, of = compile_rel(e.of, schemas)
        return lambda env: len(of(env))
    if isinstance(e, AggOf):
        of_sch, of = compile_rel(e.of, schemas)
        if e.kind == "count":
            return lambda env: len(of(env))
        i = of_sch.index_of(e.field)
        if of_sch.types[i] != INT:
            raise SchemaError(f"cannot aggregate over text field {e.field!r}")
        if e.kind == "sum":
            return lambda env: sum(r[i] for r in of(env))
        pick = min if e.kind == "min" else max

        def agg(env):
            rows = of(env)
            if not rows:
                return None
            return pick(r[i] for r in rows)

        return agg
    raise SchemaError(f"not a scalar expression: {e!r}")


def compile_record(e, schemas: dict):
    if isinstance(e, RecordConst):
        v = e.values
        return lambda env: v
    if isinstance(e, GetRow):
        _, of = compile_rel(e.of, schemas)
        k = compile_scalar(e.idx, schemas)

        def get(env):
            rows = of(env)
            i = k(env)
            if not (0 <= i < len(rows)):
                raise IndexError(f"get index {i} out of range 0..{len(rows) - 1}")
            return rows[i]

        return get
    raise SchemaError(f"not a record expression: {e!r}")


# ---------------------------------------------------------------------------
# Canonical serialization and cost
# ---------------------------------------------------------------------------


def to_sexpr(e) -> str:
    """Canonical text; total order on expressions via string comparison."""
    if isinstance(e, Query):
        return f"(query {e.rel})"
    if isinstance(e, EmptyRel):
        fields = " ".join(f"({n} {t})" for n, t in e.schema.fields)
        return f"(empty {fields})"
    if isinstance(e, Sel):
        return f"(sel {to_sexpr(e.pred)} {to_sexpr(e.of)})"
    if isinstance(e, Proj):
        return f"(proj ({' '.join(e.fields)}) {to_sexpr(e.of)})"
    if isinstance(e, Join):
        return f"(join {to_sexpr(e.left)} {to_sexpr(e.right)} {to_sexpr(e.pred)})"
    if isinstance(e, Top):
        return f"(top {to_sexpr(e.of)} {to_sexpr(e.k)})"
    if isinstance(e, AppendRow):
        return f"(append {to_sexpr(e.of)} {to_sexpr(e.rec)})"
    if isinstance(e, Concat):
        return f"(concat {to_sexpr(e.left)} {to_sexpr(e.right)})"
    if isinstance(e, GetRow):
        return f"(get {to_sexpr(e.of)} {to_sexpr(e.idx)})"
    if isinstance(e, RecordConst):
        return f"(record {' '.join(_lit(v) for v in e.values)})"
    if isinstance(e, SizeOf):
        return f"(size {to_sexpr(e.of)})"
    if isinstance(e, AggOf):
        return f"(agg {e.kind} {e.field if e.field is not None else '*'} {to_sexpr(e.of)})"
    if isinstance(e, IntConst):
        return str(e.value)
    if isinstance(e, TextConst):
        return _lit(e.value)
    if isinstance(e, ParamRef):
        return f"(param {e.name})"
    if isinstance(e, IndexRef):
        if e.offset == 0:
            return f"(idx {e.name})"
        return f"(idx {e.name} {e.offset:+d})"
    if isinstance(e, FieldRef):
        return f"(field {e.name})"
    if isinstance(e, TruePred):
        return "true"
    if isinstance(e, CmpAtom):
        return f"({e.op} {to_sexpr(e.lhs)} {to_sexpr(e.rhs)})"
    if isinstance(e, AndP):
        return f"(and {to_sexpr(e.left)} {to_sexpr(e.right)})"
    if isinstance(e, OrP):
        return f"(or {to_sexpr(e.left)} {to_sexpr(e.right)})"
    if isinstance(e, NotP):
        return f"(not {to_sexpr(e.operand)})"
    raise SchemaError(f"cannot serialize {e!r}")


def _lit(v) -> str:
    if isinstance(v, str):
        return f'"{v}"'
    return str(v)


def cost(e) -> int:
    """Leaf-inclusive node count; the enumeration's cost measure.

    Every operator node counts 1 plus its operands; leaves (constants,
    parameter and index references, field references, projected field names,
    the relation name under Query) count 1 each.
    """
    if isinstance(e, Query):
        return 2
    if isinstance(e, EmptyRel):
        return 1 + len(e.schema.fields)
    if isinstance(e, Sel):
        return 1 + cost(e.pred) + cost(e.of)
    if isinstance(e, Proj):
        return 1 + len(e.fields) + cost(e.of)
    if isinstance(e, Join):
        return 1 + cost(e.left) + cost(e.right) + cost(e.pred)
    if isinstance(e, Top):
        return 1 + cost(e.of) + cost(e.k)
    if isinstance(e, AppendRow):
        return 1 + cost(e.of) + cost(e.rec)
    if isinstance(e, Concat):
        return 1 + cost(e.left) + cost(e.right)
    if isinstance(e, GetRow):
        return 1 + cost(e.of) + cost(e.idx)
    if isinstance(e, RecordConst):
        return 1 + len(e.values)
    if isinstance(e, SizeOf):
        return 1 + cost(e.of)
    if isinstance(e, AggOf):
        return 1 + (1 if e.field is not None else 0) + cost(e.of)
    if isinstance(e, (IntConst, TextConst, ParamRef, IndexRef, FieldRef)):
        return 1
    if isinstance(e, TruePred):
        return 1
    if isinstance(e, CmpAtom):
        return 1 + cost(e.lhs) + cost(e.rhs)
    if isinstance(e, (AndP, OrP)):
        return 1 + cost(e.left) + cost(e.right)
    if isinstance(e, NotP):
        return 1 + cost(e.operand)
    raise SchemaError(f"no cost for {e!r}")


# ---------------------------------------------------------------------------
# Simplifier: a terminating rewrite system. Every rule is an identity of the
# algebra (checked by the axiom suite) and strictly reduces the number of
# relation-operator nodes, so bottom-up application reaches a fixpoint.
# ---------------------------------------------------------------------------


def _rewrite_here(e):
    """One rewrite step at the root, or None."""
    # merge stacked selections: Sel(p2, Sel(p1, e)) = Sel(p1 and p2, e)
    if isinstance(e, Sel) and isinstance(e.of, Sel):
        return Sel(AndP(e.of.pred, e.pred), e.of.of)
    # a selection by true is the identity
    if isinstance(e, Sel) and isinstance(e.pred, TruePred):
        return e.of
    # selecting from nothing gives nothing
    if isinstance(e, Sel) and isinstance(e.of, EmptyRel):
        return e.of
    if isinstance(e, Proj) and isinstance(e.of, EmptyRel):
        return EmptyRel(e.of.schema.restrict(e.fields))
    if isinstance(e, Top):
        # the whole prefix of e is e
        if isinstance(e.k, SizeOf) and e.k.of == e.of:
            return e.of
        # constant prefixes compose by the smaller bound
        if (
            isinstance(e.of, Top)
            and isinstance(e.k, IntConst)
            and isinstance(e.of.k, IntConst)
        ):
            return Top(e.of.of, IntConst(min(e.k.value, e.of.k.value)))
        if isinstance(e.of, EmptyRel):
            return e.of
    if isinstance(e, Concat):
        if isinstance(e.left, EmptyRel):
            return e.right
        if isinstance(e.right, EmptyRel):
            return e.left
        # a one-row concat is an append
        if isinstance(e.right, AppendRow) and isinstance(e.right.of, EmptyRel):
            return AppendRow(e.left, e.right.rec)
    return None


def _simplify_children(e):
    if isinstance(e, Sel):
        return Sel(e.pred, simplify(e.of))
    if isinstance(e, Proj):
        return Proj(e.fields, simplify(e.of))
    if isinstance(e, Join):
        return Join(simplify(e.left), simplify(e.right), e.pred)
    if isinstance(e, Top):
        return Top(simplify(e.of), simplify_scalar(e.k))
    if isinstance(e, AppendRow):
        return AppendRow(simplify(e.of), e.rec)
    if isinstance(e, Concat):
        return Concat(simplify(e.left), simplify(e.right))
    return e


def simplify(e):
    """Normalize a relation expression by the rewrite rules, to fixpoint."""
    e = _simplify_children(e)
    while True:
        step = _rewrite_here(e)
        if step is None:
            return e
        e = _simplify_children(step)


def simplify_scalar(e):
    if isinstance(e, SizeOf):
        return SizeOf(simplify(e.of))
    if isinstance(e, AggOf):
        return AggOf(e.kind, e.field, simplify(e.of))
    return e
