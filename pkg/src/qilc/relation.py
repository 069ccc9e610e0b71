"""Ordered relations and their schemas.

The data model shared by the interpreter, the expression algebra, the SQL
engine, and the test tooling. A relation is a finite *sequence* of records:
duplicates are allowed and position is meaningful, so two relations with the
same rows in a different order are different values.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Iterable

INT = "int"
TEXT = "text"

#: Scalar runtime values are plain Python ints/strs. Absent optional ints
#: (a min/max accumulator that was never updated) are represented as None.
Scalar = Any
Row = tuple


class SchemaError(ValueError):
    """A schema was malformed or an operation violated one."""


@dataclass(frozen=True)
class Schema:
    """Ordered field list of a relation.

    Invariants:
        - at least one field
        - field names unique
        - every field type is "int" or "text"
    """

    fields: tuple[tuple[str, str], ...]

    def __post_init__(self) -> None:
        if not self.fields:
            raise SchemaError("schema must have at least one field")
        names = [n for n, _ in self.fields]
        if len(set(names)) != len(names):
            raise SchemaError(f"duplicate field names in schema: {names}")
        for name, ty in self.fields:
            if ty not in (INT, TEXT):
                raise SchemaError(f"field {name!r} has unknown type {ty!r}")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.fields)

    @property
    def types(self) -> tuple[str, ...]:
        return tuple(t for _, t in self.fields)

    def index_of(self, name: str) -> int:
        for i, (n, _) in enumerate(self.fields):
            if n == name:
                return i
        raise SchemaError(f"no field {name!r} in schema {self.names}")

    def type_of(self, name: str) -> str:
        return self.fields[self.index_of(name)][1]

    def has(self, name: str) -> bool:
        return name in self.names

    def restrict(self, names: Iterable[str]) -> "Schema":
        """Schema of a projection onto the given fields, in the given order."""
        picked = tuple(names)
        if len(set(picked)) != len(picked):
            raise SchemaError(f"projection repeats a field: {picked}")
        return Schema(tuple((n, self.type_of(n)) for n in picked))

    def joined_with(self, other: "Schema") -> "Schema":
        """Schema of a join: both field lists, disambiguated as l.f / r.f."""
        left = tuple((f"l.{n}", t) for n, t in self.fields)
        right = tuple((f"r.{n}", t) for n, t in other.fields)
        return Schema(left + right)


@dataclass(frozen=True)
class OrderedRelation:
    """A schema plus an ordered sequence of rows.

    Rows are tuples whose arity and element types follow the schema
    positionally. Equality is structural and order sensitive.
    """

    schema: Schema
    rows: tuple[Row, ...]

    def __post_init__(self) -> None:
        arity = len(self.schema.fields)
        for r in self.rows:
            if len(r) != arity:
                raise SchemaError(
                    f"row {r!r} has arity {len(r)}, schema wants {arity}"
                )

    @property
    def size(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> list:
        i = self.schema.index_of(name)
        return [r[i] for r in self.rows]


def rows_equal_positional(a: OrderedRelation, b: OrderedRelation) -> bool:
    """Order-sensitive comparison ignoring field names.

    Column names are labels (the kernel, the algebra, and SQL each pick their
    own); agreement means same arity, same column types positionally, same
    rows in the same order.
    """
    return a.schema.types == b.schema.types and a.rows == b.rows


def values_agree(a, b) -> bool:
    """Compare two results (relation or scalar); None maps to SQL NULL."""
    if isinstance(a, OrderedRelation) and isinstance(b, OrderedRelation):
        return rows_equal_positional(a, b)
    if isinstance(a, OrderedRelation) or isinstance(b, OrderedRelation):
        return False
    return a == b


# ---------------------------------------------------------------------------
# Shared JSON input-binding format.
#
# A binding maps parameter names to values:
#     {"R": {"schema": [["a", "int"]], "rows": [[1], [3]]}, "k": 2}
# Row arrays follow the schema's field order. The same shape is used by the
# interpreter, CLI replay, the SQL engine loader, and counterexamples.
# ---------------------------------------------------------------------------


def value_to_json(v):
    if isinstance(v, OrderedRelation):
        return {
            "schema": [[n, t] for n, t in v.schema.fields],
            "rows": [list(r) for r in v.rows],
        }
    return v


def value_from_json(v):
    if isinstance(v, dict):
        schema = Schema(tuple((n, t) for n, t in v["schema"]))
        rows = tuple(tuple(r) for r in v["rows"])
        rel = OrderedRelation(schema, rows)
        for row in rows:
            for cell, ty in zip(row, schema.types):
                ok = isinstance(cell, int) and not isinstance(cell, bool) \
                    if ty == INT else isinstance(cell, str)
                if not ok:
                    raise SchemaError(f"cell {cell!r} does not fit type {ty}")
        return rel
    return v


def bindings_to_json(bindings: dict) -> dict:
    return {name: value_to_json(v) for name, v in bindings.items()}


def bindings_from_json(data: dict) -> dict:
    return {name: value_from_json(v) for name, v in data.items()}


def dump_bindings(bindings: dict) -> str:
    return json.dumps(bindings_to_json(bindings), indent=2, sort_keys=True)


def load_bindings(text: str) -> dict:
    return bindings_from_json(json.loads(text))
