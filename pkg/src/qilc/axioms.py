"""Executable axiom suite for the ordered-relation algebra.

Each check sweeps its axiom exhaustively over bounded domains (relations up
to rel_size rows, int fields over int_domain, text fields over text_domain)
and returns (instances checked, violations). The simplifier's rewrite rules
are sound only if these identities hold, so the suite doubles as the
simplifier's ground truth.

    A1  Top(e, k) = e whenever k >= Size(e)
    A2  Size(Concat(l, r)) = Size(l) + Size(r)
    A3  Agg(kind, f, Concat(l, r)) combines Agg of the parts: sum and count
        add; min and max take the extremum with absent as identity
    A4  Sel(p2, Sel(p1, e)) = Sel(p1 and p2, e)
    A5  Proj(F, Sel(p, e)) = Sel(p, Proj(F, e)) when p mentions only F
    A6  Append(e, rec) = Concat(e, single-row relation of rec)
    A7  Join(l, r, true) places the concatenation of l's row i and r's
        row j at output position i * Size(r) + j (left-major law)
"""

from __future__ import annotations

import itertools

from . import tor
from .relation import INT, TEXT, OrderedRelation, Schema
from .verify import Bounds, relation_values

INT_SCHEMA = Schema((("a", INT),))
MIXED_SCHEMA = Schema((("a", INT), ("b", TEXT)))
PAIR_LEFT = Schema((("a", INT),))
PAIR_RIGHT = Schema((("b", INT),))


def _mixed_preds(bounds: Bounds) -> list:
    preds = []
    for c in bounds.int_domain:
        preds.append(tor.CmpAtom(">", tor.FieldRef("a"), tor.IntConst(c)))
        preds.append(tor.CmpAtom("=", tor.FieldRef("a"), tor.IntConst(c)))
    for t in bounds.text_domain:
        preds.append(tor.CmpAtom("=", tor.FieldRef("b"), tor.TextConst(t)))
        preds.append(tor.CmpAtom("!=", tor.FieldRef("b"), tor.TextConst(t)))
    return preds


def _pred_fields_only(p, fields: tuple) -> bool:
    return tor.pred_fields(p) <= set(fields)


def check_a1(bounds: Bounds = Bounds()):
    checked, violations = 0, []
    for v in relation_values(INT_SCHEMA, bounds):
        env = {"R": v}
        for k in range(v.size, bounds.rel_size + 3):
            checked += 1
            got = tor.eval_rel(tor.Top(tor.Query("R"), tor.IntConst(k)), env)
            if got.rows != v.rows:
                violations.append({"axiom": "A1", "relation": v.rows, "k": k})
    return checked, violations


def check_a2(bounds: Bounds = Bounds()):
    checked, violations = 0, []
    values = relation_values(INT_SCHEMA, bounds)
    for l, r in itertools.product(values, values):
        checked += 1
        env = {"L": l, "R": r}
        got = tor.eval_scalar(
            tor.SizeOf(tor.Concat(tor.Query("L"), tor.Query("R"))), env
        )
        if got != l.size + r.size:
            violations.append({"axiom": "A2", "left": l.rows, "right": r.rows})
    return checked, violations


def _combine(kind: str, a, b):
    if kind in ("sum", "count"):
        return a + b
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b) if kind == "min" else max(a, b)


def check_a3(bounds: Bounds = Bounds()):
    checked, violations = 0, []
    values = relation_values(INT_SCHEMA, bounds)
    for kind in tor.AGG_KINDS:
        field = None if kind == "count" else "a"
        for l, r in itertools.product(values, values):
            checked += 1
            env = {"L": l, "R": r}
            whole = tor.eval_scalar(
                tor.AggOf(kind, field, tor.Concat(tor.Query("L"), tor.Query("R"))),
                env,
            )
            left = tor.eval_scalar(tor.AggOf(kind, field, tor.Query("L")), env)
            right = tor.eval_scalar(tor.AggOf(kind, field, tor.Query("R")), env)
            if whole != _combine(kind, left, right):
                violations.append(
                    {"axiom": "A3", "kind": kind, "left": l.rows, "right": r.rows}
                )
    return checked, violations


def check_a4(bounds: Bounds = Bounds()):
    checked, violations = 0, []
    preds = _mixed_preds(bounds)
    for v in relation_values(MIXED_SCHEMA, bounds):
        env = {"R": v}
        for p1, p2 in itertools.product(preds, preds):
            checked += 1
            nested = tor.eval_rel(
                tor.Sel(p2, tor.Sel(p1, tor.Query("R"))), env
            )
            merged = tor.eval_rel(tor.Sel(tor.AndP(p1, p2), tor.Query("R")), env)
            if nested.rows != merged.rows:
                violations.append(
                    {
                        "axiom": "A4",
                        "relation": v.rows,
                        "p1": tor.to_sexpr(p1),
                        "p2": tor.to_sexpr(p2),
                    }
                )
    return checked, violations


def check_a5(bounds: Bounds = Bounds()):
    checked, violations = 0, []
    preds = _mixed_preds(bounds)
    projections = (("a",), ("b",), ("a", "b"))
    for v in relation_values(MIXED_SCHEMA, bounds):
        env = {"R": v}
        for fields in projections:
            for p in preds:
                if not _pred_fields_only(p, fields):
                    continue
                checked += 1
                a = tor.eval_rel(
                    tor.Proj(fields, tor.Sel(p, tor.Query("R"))), env
                )
                b = tor.eval_rel(
                    tor.Sel(p, tor.Proj(fields, tor.Query("R"))), env
                )
                if a.rows != b.rows:
                    violations.append(
                        {
                            "axiom": "A5",
                            "relation": v.rows,
                            "fields": fields,
                            "p": tor.to_sexpr(p),
                        }
                    )
    return checked, violations


def check_a6(bounds: Bounds = Bounds()):
    checked, violations = 0, []
    rows = [
        (i,) for i in bounds.int_domain
    ]
    for v in relation_values(INT_SCHEMA, bounds):
        env = {"R": v}
        for rec in rows:
            checked += 1
            appended = tor.eval_rel(
                tor.AppendRow(tor.Query("R"), tor.RecordConst(rec)), env
            )
            single = tor.AppendRow(tor.EmptyRel(INT_SCHEMA), tor.RecordConst(rec))
            concat = tor.eval_rel(tor.Concat(tor.Query("R"), single), env)
            if appended.rows != concat.rows:
                violations.append({"axiom": "A6", "relation": v.rows, "rec": rec})
    return checked, violations


def check_a7(bounds: Bounds = Bounds()):
    """Left-major law, exhaustive one size beyond the shared bound."""
    wider = Bounds(
        rel_size=bounds.rel_size + 1,
        int_domain=bounds.int_domain,
        text_domain=bounds.text_domain,
    )
    checked, violations = 0, []
    lefts = relation_values(PAIR_LEFT, wider)
    rights = relation_values(PAIR_RIGHT, wider)
    for l, r in itertools.product(lefts, rights):
        checked += 1
        env = {"L": l, "R": r}
        got = tor.eval_rel(
            tor.Join(tor.Query("L"), tor.Query("R"), tor.TruePred()), env
        )
        ok = got.size == l.size * r.size
        if ok:
            for i, j in itertools.product(range(l.size), range(r.size)):
                if got.rows[i * r.size + j] != l.rows[i] + r.rows[j]:
                    ok = False
                    break
        if not ok:
            violations.append({"axiom": "A7", "left": l.rows, "right": r.rows})
    return checked, violations


ALL_CHECKS = (
    ("A1", check_a1),
    ("A2", check_a2),
    ("A3", check_a3),
    ("A4", check_a4),
    ("A5", check_a5),
    ("A6", check_a6),
    ("A7", check_a7),
)


def check_all(bounds: Bounds = Bounds()):
    """Run every axiom check; returns {name: (checked, violations)}."""
    return {name: fn(bounds) for name, fn in ALL_CHECKS}
