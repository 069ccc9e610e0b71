"""Kernel-language frontend: AST, parser, typechecker, pretty-printer.

The kernel language (QIL, files with a .qil extension) is a small imperative
language whose programs traverse relation parameters with counted loops and
build one output: an ordered list of records or a scalar accumulator. The
normative grammar lives in docs/grammar.md; the parser here accepts exactly
that grammar.

Shape restrictions enforced by the typechecker (not the parser):
    - exactly one top-level loop, and it is the last statement before return
    - loop nesting depth at most 2
    - inside loop bodies, assignments must be accumulator updates
      (v = v + e, v = v + 1, v = min(v, e), v = max(v, e))
    - break appears only as `if cond { break; }`, last statement of a loop body
    - row access R[i] must use the index of the enclosing loop over R
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from .relation import INT, TEXT, Schema

# Internal scalar type for min/max accumulators: an int that may be absent.
OPTINT = "optint"


class ParseError(Exception):
    """Syntax error with a 1-based source position."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


@dataclass(frozen=True)
class TypeIssue:
    message: str
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}: {self.message}"


class TypeCheckError(Exception):
    """All type violations found in one pass, in traversal order."""

    def __init__(self, issues: list[TypeIssue]):
        super().__init__("; ".join(str(i) for i in issues))
        self.issues = issues


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Loc:
    line: int
    col: int


@dataclass(frozen=True)
class Param:
    name: str
    # "int", "text", or a Schema for relation parameters
    ty: object
    loc: Loc = field(compare=False, default=Loc(0, 0))


@dataclass(frozen=True)
class ListDecl:
    name: str
    schema: Schema
    loc: Loc = field(compare=False, default=Loc(0, 0))


@dataclass(frozen=True)
class ScalarDecl:
    name: str
    base: str  # "int" or "text"
    # int literal, text literal, or None for the absent-int initializer `none`
    init: object
    loc: Loc = field(compare=False, default=Loc(0, 0))


@dataclass(frozen=True)
class IntLit:
    value: int
    loc: Loc = field(compare=False, default=Loc(0, 0))


@dataclass(frozen=True)
class TextLit:
    value: str
    loc: Loc = field(compare=False, default=Loc(0, 0))


@dataclass(frozen=True)
class VarRef:
    name: str
    loc: Loc = field(compare=False, default=Loc(0, 0))


@dataclass(frozen=True)
class FieldAccess:
    rel: str
    index: str
    fieldname: str
    loc: Loc = field(compare=False, default=Loc(0, 0))


@dataclass(frozen=True)
class RowRef:
    rel: str
    index: str
    loc: Loc = field(compare=False, default=Loc(0, 0))


@dataclass(frozen=True)
class RecordLit:
    items: tuple[tuple[str, object], ...]
    loc: Loc = field(compare=False, default=Loc(0, 0))


@dataclass(frozen=True)
class Add:
    left: object
    right: object
    loc: Loc = field(compare=False, default=Loc(0, 0))


@dataclass(frozen=True)
class MinMax:
    op: str  # "min" | "max"
    left: object
    right: object
    loc: Loc = field(compare=False, default=Loc(0, 0))


@dataclass(frozen=True)
class Cmp:
    op: str  # == != < <= > >=
    left: object
    right: object
    loc: Loc = field(compare=False, default=Loc(0, 0))


@dataclass(frozen=True)
class BoolOp:
    op: str  # "and" | "or"
    left: object
    right: object
    loc: Loc = field(compare=False, default=Loc(0, 0))


@dataclass(frozen=True)
class NotOp:
    operand: object
    loc: Loc = field(compare=False, default=Loc(0, 0))


@dataclass(frozen=True)
class Assign:
    target: str
    expr: object
    loc: Loc = field(compare=False, default=Loc(0, 0))


@dataclass(frozen=True)
class Append:
    target: str
    record: object  # RowRef or RecordLit
    loc: Loc = field(compare=False, default=Loc(0, 0))


@dataclass(frozen=True)
class If:
    cond: object
    body: tuple
    loc: Loc = field(compare=False, default=Loc(0, 0))


@dataclass(frozen=True)
class Break:
    loc: Loc = field(compare=False, default=Loc(0, 0))


@dataclass(frozen=True)
class For:
    index: str
    rel: str
    body: tuple
    loc: Loc = field(compare=False, default=Loc(0, 0))


@dataclass(frozen=True)
class Program:
    name: str
    params: tuple[Param, ...]
    decls: tuple
    body: tuple
    result: str
    loc: Loc = field(compare=False, default=Loc(0, 0))


# ---------------------------------------------------------------------------
# Lexer
# ---------------------------------------------------------------------------

KEYWORDS = {
    "fn", "var", "for", "in", "if", "break", "return",
    "rel", "list", "int", "text", "none", "min", "max", "size",
}

_TOKEN_RE = re.compile(
    r"""
      (?P<ws>[ \t\r\n]+)
    | (?P<comment>//[^\n]*)
    | (?P<int>\d+)
    | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
    | (?P<string>"[^"\\\n]*")
    | (?P<op>\.\.|==|!=|<=|>=|&&|\|\||[-+(){}\[\]:;,.<>=!])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # "int" | "ident" | "string" | "op" | keyword itself | "eof"
    text: str
    line: int
    col: int


def _lex(source: str) -> list[Token]:
    tokens: list[Token] = []
    line, col, pos = 1, 1, 0
    n = len(source)
    while pos < n:
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ParseError(f"unexpected character {source[pos]!r}", line, col)
        text = m.group(0)
        kind = m.lastgroup
        if kind not in ("ws", "comment"):
            if kind == "ident" and text in KEYWORDS:
                tokens.append(Token(text, text, line, col))
            else:
                tokens.append(Token(kind, text, line, col))
        newlines = text.count("\n")
        if newlines:
            line += newlines
            col = len(text) - text.rfind("\n")
        else:
            col += len(text)
        pos = m.end()
    tokens.append(Token("eof", "", line, col))
    return tokens


# ---------------------------------------------------------------------------
# Parser (recursive descent)
# ---------------------------------------------------------------------------


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.toks = tokens
        self.pos = 0

    def peek(self) -> Token:
        return self.toks[self.pos]

    def next(self) -> Token:
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def fail(self, msg: str) -> ParseError:
        t = self.peek()
        return ParseError(msg, t.line, t.col)

    def expect(self, kind: str, text: Optional[str] = None) -> Token:
        t = self.peek()
        if t.kind != kind or (text is not None and t.text != text):
            want = text if text is not None else kind
            raise self.fail(f"expected {want!r}, found {t.text or 'end of input'!r}")
        return self.next()

    def accept(self, kind: str, text: Optional[str] = None) -> Optional[Token]:
        t = self.peek()
        if t.kind == kind and (text is None or t.text == text):
            return self.next()
        return None

    def loc(self) -> Loc:
        t = self.peek()
        return Loc(t.line, t.col)

    # --- program structure ---

    def program(self) -> Program:
        loc = self.loc()
        self.expect("fn")
        name = self.expect("ident").text
        self.expect("op", "(")
        params = []
        if not self.accept("op", ")"):
            params.append(self.param())
            while self.accept("op", ","):
                params.append(self.param())
            self.expect("op", ")")
        self.expect("op", "{")
        decls = []
        while self.peek().kind == "var":
            decls.append(self.decl())
        body = []
        while self.peek().kind not in ("return", "eof"):
            body.append(self.stmt())
        self.expect("return")
        result = self.expect("ident").text
        self.expect("op", ";")
        self.expect("op", "}")
        self.expect("eof")
        return Program(name, tuple(params), tuple(decls), tuple(body), result, loc)

    def param(self) -> Param:
        loc = self.loc()
        name = self.expect("ident").text
        self.expect("op", ":")
        t = self.peek()
        if t.kind == "rel":
            self.next()
            return Param(name, self.schema(), loc)
        if t.kind in ("int", "text"):
            self.next()
            return Param(name, t.kind, loc)
        raise self.fail("expected a parameter type (rel(...), int, or text)")

    def schema(self) -> Schema:
        self.expect("op", "(")
        fields = [self.schema_field()]
        while self.accept("op", ","):
            fields.append(self.schema_field())
        self.expect("op", ")")
        try:
            return Schema(tuple(fields))
        except Exception as e:
            raise self.fail(str(e))

    def schema_field(self) -> tuple[str, str]:
        name = self.expect("ident").text
        self.expect("op", ":")
        t = self.peek()
        if t.kind not in ("int", "text"):
            raise self.fail("expected a field type (int or text)")
        self.next()
        return (name, t.kind)

    def decl(self):
        loc = self.loc()
        self.expect("var")
        name = self.expect("ident").text
        self.expect("op", ":")
        t = self.peek()
        if t.kind == "list":
            self.next()
            schema = self.schema()
            self.expect("op", ";")
            return ListDecl(name, schema, loc)
        if t.kind in ("int", "text"):
            base = self.next().kind
            self.expect("op", "=")
            init = self.initializer(base)
            self.expect("op", ";")
            return ScalarDecl(name, base, init, loc)
        raise self.fail("expected a declaration type (list(...), int, or text)")

    def initializer(self, base: str):
        t = self.peek()
        if t.kind == "none":
            self.next()
            return None
        if t.kind == "int":
            self.next()
            return int(t.text)
        if t.kind == "op" and t.text == "-":
            self.next()
            v = self.expect("int")
            return -int(v.text)
        if t.kind == "string":
            self.next()
            return t.text[1:-1]
        raise self.fail("expected an initializer (integer, string, or none)")

    # --- statements ---

    def stmt(self):
        t = self.peek()
        if t.kind == "for":
            return self.for_stmt()
        if t.kind == "if":
            return self.if_stmt()
        if t.kind == "break":
            loc = self.loc()
            self.next()
            self.expect("op", ";")
            return Break(loc)
        if t.kind == "ident":
            return self.assign_or_append()
        raise self.fail(f"expected a statement, found {t.text!r}")

    def for_stmt(self) -> For:
        loc = self.loc()
        self.expect("for")
        index = self.expect("ident").text
        self.expect("in")
        zero = self.expect("int")
        if zero.text != "0":
            raise ParseError("loop lower bound must be 0", zero.line, zero.col)
        self.expect("op", "..")
        self.expect("size")
        self.expect("op", "(")
        rel = self.expect("ident").text
        self.expect("op", ")")
        body = self.block()
        return For(index, rel, body, loc)

    def if_stmt(self) -> If:
        loc = self.loc()
        self.expect("if")
        cond = self.pred()
        body = self.block()
        return If(cond, body, loc)

    def block(self) -> tuple:
        self.expect("op", "{")
        stmts = []
        while not self.accept("op", "}"):
            if self.peek().kind == "eof":
                raise self.fail("unterminated block")
            stmts.append(self.stmt())
        return tuple(stmts)

    def assign_or_append(self):
        loc = self.loc()
        name = self.expect("ident").text
        if self.accept("op", "."):
            self.expect_ident_text("append")
            self.expect("op", "(")
            record = self.record_expr()
            self.expect("op", ")")
            self.expect("op", ";")
            return Append(name, record, loc)
        self.expect("op", "=")
        expr = self.expr()
        self.expect("op", ";")
        return Assign(name, expr, loc)

    def expect_ident_text(self, text: str) -> None:
        t = self.peek()
        if t.kind != "ident" or t.text != text:
            raise self.fail(f"expected {text!r}")
        self.next()

    def record_expr(self):
        t = self.peek()
        if t.kind == "op" and t.text == "{":
            loc = self.loc()
            self.next()
            items = [self.record_item()]
            while self.accept("op", ","):
                items.append(self.record_item())
            self.expect("op", "}")
            return RecordLit(tuple(items), loc)
        if t.kind == "ident":
            loc = self.loc()
            rel = self.next().text
            self.expect("op", "[")
            index = self.expect("ident").text
            self.expect("op", "]")
            return RowRef(rel, index, loc)
        raise self.fail("expected a record expression (R[i] or {f: e, ...})")

    def record_item(self) -> tuple[str, object]:
        name = self.expect("ident").text
        self.expect("op", ":")
        return (name, self.expr())

    # --- expressions ---
    # expr := term (+ term)*            (int only; checked later)
    # term := INT | STRING | ident | ident [ ident ] . ident
    #       | min(expr, expr) | max(expr, expr) | ( expr )

    def expr(self):
        loc = self.loc()
        e = self.term()
        while True:
            if self.accept("op", "+"):
                e = Add(e, self.term(), loc)
            else:
                return e

    def term(self):
        t = self.peek()
        loc = self.loc()
        if t.kind == "int":
            self.next()
            return IntLit(int(t.text), loc)
        if t.kind == "op" and t.text == "-":
            self.next()
            v = self.expect("int")
            return IntLit(-int(v.text), loc)
        if t.kind == "string":
            self.next()
            return TextLit(t.text[1:-1], loc)
        if t.kind in ("min", "max"):
            op = self.next().kind
            self.expect("op", "(")
            a = self.expr()
            self.expect("op", ",")
            b = self.expr()
            self.expect("op", ")")
            return MinMax(op, a, b, loc)
        if t.kind == "op" and t.text == "(":
            self.next()
            e = self.expr()
            self.expect("op", ")")
            return e
        if t.kind == "ident":
            name = self.next().text
            if self.accept("op", "["):
                index = self.expect("ident").text
                self.expect("op", "]")
                self.expect("op", ".")
                fieldname = self.expect("ident").text
                return FieldAccess(name, index, fieldname, loc)
            return VarRef(name, loc)
        raise self.fail(f"expected an expression, found {t.text or 'end of input'!r}")

    # --- predicates: ! binds tightest, then &&, then || ---

    def pred(self):
        e = self.pred_and()
        while True:
            loc = self.loc()
            if self.accept("op", "||"):
                e = BoolOp("or", e, self.pred_and(), loc)
            else:
                return e

    def pred_and(self):
        e = self.pred_not()
        while True:
            loc = self.loc()
            if self.accept("op", "&&"):
                e = BoolOp("and", e, self.pred_not(), loc)
            else:
                return e

    def pred_not(self):
        loc = self.loc()
        if self.accept("op", "!"):
            return NotOp(self.pred_not(), loc)
        return self.pred_atom()

    def pred_atom(self):
        # A parenthesized predicate or a comparison between two expressions.
        # "(" is ambiguous (grouping vs arithmetic); resolve by backtracking.
        if self.peek().kind == "op" and self.peek().text == "(":
            saved = self.pos
            try:
                self.next()
                inner = self.pred()
                self.expect("op", ")")
                return inner
            except ParseError:
                self.pos = saved
        loc = self.loc()
        left = self.expr()
        t = self.peek()
        if t.kind != "op" or t.text not in ("==", "!=", "<", "<=", ">", ">="):
            raise self.fail("expected a comparison operator")
        op = self.next().text
        right = self.expr()
        return Cmp(op, left, right, loc)


def parse(source: str) -> Program:
    """Parse kernel source into an AST; raises ParseError on the first
    syntactically offending token."""
    return _Parser(_lex(source)).program()


# ---------------------------------------------------------------------------
# Typechecker
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LoopInfo:
    """One loop of the (at most two deep) nest, outermost first."""

    index: str
    rel: str
    depth: int  # 1 = outer, 2 = inner
    node: For = field(compare=False)


@dataclass
class TypedProgram:
    """A parse tree that passed all checks, plus the facts later passes need.

    var_types maps every name in scope to "int" | "text" | "optint" |
    ("rel", Schema) | ("list", Schema). loops lists the nest outermost first.
    """

    ast: Program
    var_types: dict
    loops: list[LoopInfo]
    result_type: object
    pre_loop: tuple  # statements before the top-level loop
    agg_updates: dict  # accumulator name -> "sum" | "count" | "min" | "max"

    @property
    def name(self) -> str:
        return self.ast.name

    @property
    def relations(self) -> dict:
        return {
            p.name: p.ty for p in self.ast.params if isinstance(p.ty, Schema)
        }

    @property
    def scalar_params(self) -> dict:
        return {
            p.name: p.ty for p in self.ast.params if not isinstance(p.ty, Schema)
        }

    def loop_by_index(self, index: str) -> LoopInfo:
        for li in self.loops:
            if li.index == index:
                return li
        raise KeyError(index)


class _Checker:
    def __init__(self, ast: Program):
        self.ast = ast
        self.issues: list[TypeIssue] = []
        self.var_types: dict = {}
        self.loops: list[LoopInfo] = []
        self.agg_updates: dict = {}
        # index var -> relation it traverses, for row-access checks
        self.loop_rel: dict = {}

    def issue(self, msg: str, loc: Loc) -> None:
        self.issues.append(TypeIssue(msg, loc.line, loc.col))

    def check(self) -> TypedProgram:
        ast = self.ast
        for p in ast.params:
            if p.name in self.var_types:
                self.issue(f"duplicate parameter {p.name!r}", p.loc)
            self.var_types[p.name] = ("rel", p.ty) if isinstance(p.ty, Schema) else p.ty
        for d in ast.decls:
            if d.name in self.var_types:
                self.issue(f"{d.name!r} is already declared", d.loc)
            if isinstance(d, ListDecl):
                self.var_types[d.name] = ("list", d.schema)
            else:
                if d.base == "int":
                    self.var_types[d.name] = OPTINT if d.init is None else "int"
                else:
                    if d.init is None:
                        self.issue("none initializer is only for int accumulators", d.loc)
                    self.var_types[d.name] = "text"

        pre_loop = self.check_toplevel(ast.body)

        # return target: a declared local
        rt = self.var_types.get(ast.result)
        decl_names = {d.name for d in ast.decls}
        if ast.result not in decl_names:
            self.issue(
                f"return target {ast.result!r} is not a declared local", ast.loc
            )
            rt = rt or "int"

        if self.issues:
            raise TypeCheckError(self.issues)
        return TypedProgram(
            ast=ast,
            var_types=self.var_types,
            loops=self.loops,
            result_type=rt,
            pre_loop=pre_loop,
            agg_updates=self.agg_updates,
        )

    def check_toplevel(self, body: tuple) -> tuple:
        """The program body: simple statements, then exactly one loop."""
        loop_seen = False
        pre = []
        for st in body:
            if isinstance(st, For):
                if loop_seen:
                    self.issue("only one top-level loop is allowed", st.loc)
                    continue
                loop_seen = True
                self.check_loop(st, depth=1)
            elif loop_seen:
                self.issue("statements after the top-level loop are not allowed", st.loc)
            else:
                if isinstance(st, Assign):
                    self.check_plain_assign(st)
                elif isinstance(st, (If, Break, Append)):
                    self.issue(
                        "only scalar initialization may precede the loop", st.loc
                    )
                pre.append(st)
        if not loop_seen:
            self.issue("program must contain a loop", self.ast.loc)
        return tuple(pre)

    def check_loop(self, st: For, depth: int) -> None:
        if depth > 2:
            self.issue("loops nest at most two deep", st.loc)
            return
        relty = self.var_types.get(st.rel)
        if relty is None:
            self.issue(f"undeclared identifier {st.rel!r}", st.loc)
            return
        if not (isinstance(relty, tuple) and relty[0] == "rel"):
            self.issue(f"{st.rel!r} is not a relation parameter", st.loc)
            return
        if st.index in self.var_types:
            self.issue(f"loop index {st.index!r} shadows another name", st.loc)
            return
        self.var_types[st.index] = "index"
        self.loop_rel[st.index] = st.rel
        self.loops.append(LoopInfo(st.index, st.rel, depth, st))
        self.check_loop_body(st.body, depth)

    def check_loop_body(self, body: tuple, depth: int) -> None:
        for pos, st in enumerate(body):
            last = pos == len(body) - 1
            if isinstance(st, For):
                self.check_loop(st, depth + 1)
            elif isinstance(st, Break):
                self.issue("break must appear as `if cond { break; }`", st.loc)
            elif isinstance(st, If):
                if self.is_guarded_break(st):
                    if not last:
                        self.issue(
                            "a guarded break must be the last statement of the loop body",
                            st.loc,
                        )
                    self.check_pred(st.cond)
                else:
                    self.check_pred(st.cond)
                    self.check_cond_body(st.body, depth)
            elif isinstance(st, Append):
                self.check_append(st)
            elif isinstance(st, Assign):
                self.check_accum_update(st)

    def check_cond_body(self, body: tuple, depth: int) -> None:
        """Statements under a non-break conditional inside a loop."""
        for st in body:
            if isinstance(st, For):
                self.issue("loops may not appear under a conditional", st.loc)
            elif isinstance(st, Break):
                self.issue(
                    "break must be the last statement of the loop body", st.loc
                )
            elif isinstance(st, If):
                if self.is_guarded_break(st):
                    self.issue(
                        "a guarded break must be the last statement of the loop body",
                        st.loc,
                    )
                else:
                    self.check_pred(st.cond)
                    self.check_cond_body(st.body, depth)
            elif isinstance(st, Append):
                self.check_append(st)
            elif isinstance(st, Assign):
                self.check_accum_update(st)

    @staticmethod
    def is_guarded_break(st: If) -> bool:
        return len(st.body) == 1 and isinstance(st.body[0], Break)

    # --- statement checks ---

    def check_plain_assign(self, st: Assign) -> None:
        ty = self.var_types.get(st.target)
        if ty is None:
            self.issue(f"undeclared identifier {st.target!r}", st.loc)
            return
        if ty not in ("int", "text"):
            self.issue(f"{st.target!r} is not an assignable scalar", st.loc)
            return
        ety = self.expr_type(st.expr)
        if ety is not None and ety != ty:
            self.issue(f"cannot assign {ety} to {st.target!r} ({ty})", st.loc)

    def check_accum_update(self, st: Assign) -> None:
        """Loop-body assignments: v = v + e | v = min(v, e) | v = max(v, e)."""
        ty = self.var_types.get(st.target)
        if ty is None:
            self.issue(f"undeclared identifier {st.target!r}", st.loc)
            return
        e = st.expr
        if isinstance(e, Add) and isinstance(e.left, VarRef) and e.left.name == st.target:
            if ty != "int":
                self.issue(f"accumulator {st.target!r} must be int", st.loc)
                return
            rty = self.expr_type(e.right)
            if rty is not None and rty != "int":
                self.issue("accumulator increment must be int", st.loc)
            if isinstance(e.right, IntLit) and e.right.value == 1:
                self.note_agg(st.target, "count", st.loc)
            else:
                self.note_agg(st.target, "sum", st.loc)
            return
        if isinstance(e, MinMax) and isinstance(e.left, VarRef) and e.left.name == st.target:
            if ty not in ("int", OPTINT):
                self.issue(f"accumulator {st.target!r} must be int", st.loc)
                return
            rty = self.expr_type(e.right)
            if rty is not None and rty != "int":
                self.issue(f"{e.op} argument must be int", st.loc)
            self.note_agg(st.target, e.op, st.loc)
            return
        self.issue(
            "loop bodies only allow accumulator updates "
            "(v = v + e, v = min(v, e), v = max(v, e))",
            st.loc,
        )

    def note_agg(self, name: str, kind: str, loc: Loc) -> None:
        prev = self.agg_updates.get(name)
        if prev is not None and prev != kind:
            self.issue(f"accumulator {name!r} mixes {prev} and {kind} updates", loc)
        self.agg_updates[name] = kind

    def check_append(self, st: Append) -> None:
        ty = self.var_types.get(st.target)
        if ty is None:
            self.issue(f"undeclared identifier {st.target!r}", st.loc)
            return
        if not (isinstance(ty, tuple) and ty[0] == "list"):
            self.issue(f"{st.target!r} is not a list", st.loc)
            return
        declared: Schema = ty[1]
        rec = st.record
        if isinstance(rec, RowRef):
            sch = self.row_schema(rec)
            if sch is not None and sch != declared:
                self.issue(
                    f"appended row schema {sch.names} does not match "
                    f"declared schema {declared.names}",
                    rec.loc,
                )
            return
        # record literal: names, order, and types must match the declaration
        names = tuple(n for n, _ in rec.items)
        if names != declared.names:
            self.issue(
                f"record fields {names} do not match declared schema {declared.names}",
                rec.loc,
            )
            return
        for (name, expr), want in zip(rec.items, declared.types):
            got = self.expr_type(expr)
            if got is not None and got != want:
                self.issue(f"field {name!r} expects {want}, got {got}", rec.loc)

    # --- expression typing ---

    def row_schema(self, rec: RowRef) -> Optional[Schema]:
        relty = self.var_types.get(rec.rel)
        if relty is None:
            self.issue(f"undeclared identifier {rec.rel!r}", rec.loc)
            return None
        if not (isinstance(relty, tuple) and relty[0] == "rel"):
            self.issue(f"{rec.rel!r} is not a relation parameter", rec.loc)
            return None
        if self.loop_rel.get(rec.index) != rec.rel:
            self.issue(
                f"row access {rec.rel}[{rec.index}] must use the index of the "
                f"loop over {rec.rel}",
                rec.loc,
            )
            return None
        return relty[1]

    def expr_type(self, e) -> Optional[str]:
        if isinstance(e, IntLit):
            return "int"
        if isinstance(e, TextLit):
            return "text"
        if isinstance(e, VarRef):
            ty = self.var_types.get(e.name)
            if ty is None:
                self.issue(f"undeclared identifier {e.name!r}", e.loc)
                return None
            if ty == "index":
                return "int"
            if isinstance(ty, tuple):
                self.issue(f"{e.name!r} is not a scalar", e.loc)
                return None
            return ty
        if isinstance(e, FieldAccess):
            sch = self.row_schema(RowRef(e.rel, e.index, e.loc))
            if sch is None:
                return None
            if not sch.has(e.fieldname):
                self.issue(f"no field {e.fieldname!r} in {e.rel!r}", e.loc)
                return None
            return sch.type_of(e.fieldname)
        if isinstance(e, Add):
            lt, rt = self.expr_type(e.left), self.expr_type(e.right)
            for t in (lt, rt):
                if t is not None and t != "int":
                    self.issue("+ expects int operands", e.loc)
                    return None
            return "int"
        if isinstance(e, MinMax):
            lt, rt = self.expr_type(e.left), self.expr_type(e.right)
            for t in (lt, rt):
                if t is not None and t not in ("int", OPTINT):
                    self.issue(f"{e.op} expects int operands", e.loc)
                    return None
            if OPTINT in (lt, rt):
                return OPTINT
            return "int"
        raise AssertionError(f"unhandled expression {e!r}")

    def check_pred(self, p) -> None:
        if isinstance(p, Cmp):
            lt, rt = self.expr_type(p.left), self.expr_type(p.right)
            if lt == OPTINT or rt == OPTINT:
                self.issue("min/max accumulators cannot be compared", p.loc)
                return
            if lt is not None and rt is not None and lt != rt:
                self.issue(f"cannot compare {lt} with {rt}", p.loc)
                return
            if lt == "text" and p.op not in ("==", "!="):
                self.issue("text supports only == and !=", p.loc)
            return
        if isinstance(p, BoolOp):
            self.check_pred(p.left)
            self.check_pred(p.right)
            return
        if isinstance(p, NotOp):
            self.check_pred(p.operand)
            return
        raise AssertionError(f"unhandled predicate {p!r}")


def typecheck(ast: Program) -> TypedProgram:
    """Validate shape and types; raises TypeCheckError listing every
    violation (in traversal order) when the program is ill-formed."""
    return _Checker(ast).check()


# ---------------------------------------------------------------------------
# Pretty-printer: deterministic formatting whose output re-parses to an
# equal AST (round-trip property).
# ---------------------------------------------------------------------------


def pretty(ast: Program) -> str:
    out: list[str] = []
    params = ", ".join(_pp_param(p) for p in ast.params)
    out.append(f"fn {ast.name}({params}) {{")
    for d in ast.decls:
        if isinstance(d, ListDecl):
            out.append(f"  var {d.name}: list({_pp_schema(d.schema)});")
        else:
            out.append(f"  var {d.name}: {d.base} = {_pp_init(d.init)};")
    for st in ast.body:
        _pp_stmt(st, out, 1)
    out.append(f"  return {ast.result};")
    out.append("}")
    return "\n".join(out) + "\n"


def _pp_param(p: Param) -> str:
    if isinstance(p.ty, Schema):
        return f"{p.name}: rel({_pp_schema(p.ty)})"
    return f"{p.name}: {p.ty}"


def _pp_schema(s: Schema) -> str:
    return ", ".join(f"{n}: {t}" for n, t in s.fields)


def _pp_init(init) -> str:
    if init is None:
        return "none"
    if isinstance(init, str):
        return f'"{init}"'
    return str(init)


def _pp_stmt(st, out: list[str], depth: int) -> None:
    pad = "  " * depth
    if isinstance(st, For):
        out.append(f"{pad}for {st.index} in 0..size({st.rel}) {{")
        for s in st.body:
            _pp_stmt(s, out, depth + 1)
        out.append(f"{pad}}}")
    elif isinstance(st, If):
        out.append(f"{pad}if {_pp_pred(st.cond)} {{")
        for s in st.body:
            _pp_stmt(s, out, depth + 1)
        out.append(f"{pad}}}")
    elif isinstance(st, Break):
        out.append(f"{pad}break;")
    elif isinstance(st, Append):
        out.append(f"{pad}{st.target}.append({_pp_record(st.record)});")
    elif isinstance(st, Assign):
        out.append(f"{pad}{st.target} = {_pp_expr(st.expr)};")
    else:
        raise AssertionError(f"unhandled statement {st!r}")


def _pp_record(rec) -> str:
    if isinstance(rec, RowRef):
        return f"{rec.rel}[{rec.index}]"
    items = ", ".join(f"{n}: {_pp_expr(e)}" for n, e in rec.items)
    return f"{{{items}}}"


def _pp_expr(e) -> str:
    if isinstance(e, IntLit):
        return str(e.value)
    if isinstance(e, TextLit):
        return f'"{e.value}"'
    if isinstance(e, VarRef):
        return e.name
    if isinstance(e, FieldAccess):
        return f"{e.rel}[{e.index}].{e.fieldname}"
    if isinstance(e, Add):
        return f"{_pp_expr(e.left)} + {_pp_expr(e.right)}"
    if isinstance(e, MinMax):
        return f"{e.op}({_pp_expr(e.left)}, {_pp_expr(e.right)})"
    raise AssertionError(f"unhandled expression {e!r}")


def _pp_pred(p) -> str:
    if isinstance(p, Cmp):
        return f"{_pp_expr(p.left)} {p.op} {_pp_expr(p.right)}"
    if isinstance(p, BoolOp):
        sym = "&&" if p.op == "and" else "||"
        return f"({_pp_pred(p.left)}) {sym} ({_pp_pred(p.right)})"
    if isinstance(p, NotOp):
        return f"!({_pp_pred(p.operand)})"
    raise AssertionError(f"unhandled predicate {p!r}")
