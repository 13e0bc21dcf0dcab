"""Tokenizer, recursive-descent parser, and static checks for query programs.

Parsing rejects programs that could complete without returning a value,
contain unreachable statements, or reference variables before binding them.
An identifier counts as a type reference (not a variable use) when it is
written with a model prefix (``M!Type``) or is immediately navigated with
``.all``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field


class CqlParseError(Exception):
    def __init__(self, message: str, line: int, column: int):
        self.line = line
        self.column = column
        super().__init__(f"{message} (line {line}, column {column})")


Pos = tuple[int, int]


# --- AST ------------------------------------------------------------------


@dataclass(frozen=True)
class Literal:
    value: object  # float | str | bool
    pos: Pos


@dataclass(frozen=True)
class Name:
    ident: str
    pos: Pos


@dataclass(frozen=True)
class TypeRef:
    type_name: str
    pos: Pos


@dataclass(frozen=True)
class Member:
    receiver: object
    name: str
    pos: Pos


@dataclass(frozen=True)
class IsTypeOf:
    receiver: object
    type_name: str
    pos: Pos


@dataclass(frozen=True)
class SelectCall:
    receiver: object
    method: str  # selectOne | select
    var: str
    predicate: object
    pos: Pos


@dataclass(frozen=True)
class Unary:
    op: str  # "-" | "not"
    operand: object
    pos: Pos


@dataclass(frozen=True)
class Binary:
    op: str  # and or = <> < <= > >= + - * /
    left: object
    right: object
    pos: Pos


@dataclass(frozen=True)
class VarDecl:
    name: str
    expr: object
    pos: Pos


@dataclass(frozen=True)
class Assign:
    name: str
    expr: object
    augmented: bool  # True for +=
    pos: Pos


@dataclass(frozen=True)
class For:
    var: str
    iterable: object
    body: tuple
    pos: Pos


@dataclass(frozen=True)
class If:
    condition: object
    then_body: tuple
    else_body: tuple | None
    pos: Pos


@dataclass(frozen=True)
class Return:
    expr: object
    pos: Pos


@dataclass(frozen=True)
class QueryProgram:
    statements: tuple
    source_text: str


# --- Tokenizer --------------------------------------------------------------

_KEYWORDS = {"var", "for", "if", "else", "return", "in", "and", "or", "not", "true", "false"}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>\d+(?:\.\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>"[^"\n]*")
  | (?P<op>\+=|<>|<=|>=|[=<>+\-*/(){};.,|!])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    type: str  # number ident string keyword op eof
    value: str
    line: int
    column: int


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, col = 1, 1
    i = 0
    while i < len(text):
        m = _TOKEN_RE.match(text, i)
        if m is None:
            if text[i] == '"':
                raise CqlParseError("unterminated string literal", line, col)
            raise CqlParseError(f"unexpected character {text[i]!r}", line, col)
        kind = m.lastgroup
        value = m.group()
        if kind != "ws":
            if kind == "ident" and value in _KEYWORDS:
                kind = "keyword"
            tokens.append(Token(kind, value, line, col))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            col = len(value) - value.rfind("\n")
        else:
            col += len(value)
        i = m.end()
    tokens.append(Token("eof", "", line, col))
    return tokens


# --- Parser -----------------------------------------------------------------


class _Scope:
    def __init__(self, parent: _Scope | None = None):
        self.parent = parent
        self.names: set[str] = set()

    def declare(self, name: str) -> bool:
        if self.is_visible(name):
            return False
        self.names.add(name)
        return True

    def is_visible(self, name: str) -> bool:
        scope: _Scope | None = self
        while scope is not None:
            if name in scope.names:
                return True
            scope = scope.parent
        return False


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.index = 0

    # token helpers

    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.index + offset, len(self.tokens) - 1)]

    def advance(self) -> Token:
        tok = self.tokens[self.index]
        if tok.type != "eof":
            self.index += 1
        return tok

    def expect(self, type_: str, value: str | None = None) -> Token:
        tok = self.peek()
        if tok.type != type_ or (value is not None and tok.value != value):
            expected = value if value is not None else type_
            raise CqlParseError(f"expected {expected!r}, found {tok.value or 'end of input'!r}",
                                tok.line, tok.column)
        return self.advance()

    def error(self, message: str, tok: Token | None = None) -> CqlParseError:
        tok = tok or self.peek()
        return CqlParseError(message, tok.line, tok.column)

    # program

    def parse_program(self) -> QueryProgram:
        scope = _Scope()
        statements = self.parse_statements(scope, top_level=True)
        tok = self.peek()
        if tok.type != "eof":
            raise self.error(f"unexpected {tok.value!r}")
        if not statements:
            raise self.error("empty program")
        if not _definitely_returns(statements):
            raise self.error("program may complete without executing a return")
        return QueryProgram(tuple(statements), self.text)

    def parse_statements(self, scope: _Scope, top_level: bool = False) -> list:
        statements: list = []
        while True:
            tok = self.peek()
            if tok.type == "eof" or (not top_level and tok.type == "op" and tok.value == "}"):
                return statements
            if statements and _stmt_definitely_returns(statements[-1]):
                raise self.error("unreachable statement after return")
            statements.append(self.parse_statement(scope))

    def parse_statement(self, scope: _Scope):
        tok = self.peek()
        if tok.type == "keyword" and tok.value == "var":
            return self.parse_var_decl(scope)
        if tok.type == "keyword" and tok.value == "for":
            return self.parse_for(scope)
        if tok.type == "keyword" and tok.value == "if":
            return self.parse_if(scope)
        if tok.type == "keyword" and tok.value == "return":
            self.advance()
            expr = self.parse_expr(scope)
            self.expect("op", ";")
            return Return(expr, (tok.line, tok.column))
        if tok.type == "ident":
            nxt = self.peek(1)
            if nxt.type == "op" and nxt.value in ("=", "+="):
                self.advance()
                op_tok = self.advance()
                if not scope.is_visible(tok.value):
                    raise self.error(f"assignment to unbound variable {tok.value!r}", tok)
                expr = self.parse_expr(scope)
                self.expect("op", ";")
                return Assign(tok.value, expr, op_tok.value == "+=", (tok.line, tok.column))
        raise self.error(f"expected a statement, found {tok.value or 'end of input'!r}")

    def parse_var_decl(self, scope: _Scope) -> VarDecl:
        var_tok = self.expect("keyword", "var")
        name_tok = self.expect("ident")
        self.expect("op", "=")
        expr = self.parse_expr(scope)
        self.expect("op", ";")
        if not scope.declare(name_tok.value):
            raise self.error(f"variable {name_tok.value!r} already declared", name_tok)
        return VarDecl(name_tok.value, expr, (var_tok.line, var_tok.column))

    def parse_block(self, scope: _Scope) -> tuple:
        self.expect("op", "{")
        inner = _Scope(scope)
        statements = self.parse_statements(inner)
        self.expect("op", "}")
        return tuple(statements)

    def parse_for(self, scope: _Scope) -> For:
        for_tok = self.expect("keyword", "for")
        self.expect("op", "(")
        var_tok = self.expect("ident")
        self.expect("keyword", "in")
        iterable = self.parse_expr(scope)
        self.expect("op", ")")
        body_scope = _Scope(scope)
        if not body_scope.declare(var_tok.value):
            raise self.error(f"loop variable {var_tok.value!r} shadows a declared variable", var_tok)
        self.expect("op", "{")
        body = tuple(self.parse_statements(body_scope))
        self.expect("op", "}")
        return For(var_tok.value, iterable, body, (for_tok.line, for_tok.column))

    def parse_if(self, scope: _Scope) -> If:
        if_tok = self.expect("keyword", "if")
        self.expect("op", "(")
        condition = self.parse_expr(scope)
        self.expect("op", ")")
        then_body = self.parse_block(scope)
        else_body = None
        tok = self.peek()
        if tok.type == "keyword" and tok.value == "else":
            self.advance()
            else_body = self.parse_block(scope)
        return If(condition, then_body, else_body, (if_tok.line, if_tok.column))

    # expressions, lowest to highest precedence

    def parse_expr(self, scope: _Scope):
        return self.parse_or(scope)

    def parse_or(self, scope: _Scope):
        left = self.parse_and(scope)
        while self.peek().type == "keyword" and self.peek().value == "or":
            tok = self.advance()
            right = self.parse_and(scope)
            left = Binary("or", left, right, (tok.line, tok.column))
        return left

    def parse_and(self, scope: _Scope):
        left = self.parse_not(scope)
        while self.peek().type == "keyword" and self.peek().value == "and":
            tok = self.advance()
            right = self.parse_not(scope)
            left = Binary("and", left, right, (tok.line, tok.column))
        return left

    def parse_not(self, scope: _Scope):
        tok = self.peek()
        if tok.type == "keyword" and tok.value == "not":
            self.advance()
            operand = self.parse_not(scope)
            return Unary("not", operand, (tok.line, tok.column))
        return self.parse_comparison(scope)

    def parse_comparison(self, scope: _Scope):
        left = self.parse_additive(scope)
        tok = self.peek()
        if tok.type == "op" and tok.value in ("=", "<>", "<", "<=", ">", ">="):
            self.advance()
            right = self.parse_additive(scope)
            return Binary(tok.value, left, right, (tok.line, tok.column))
        return left

    def parse_additive(self, scope: _Scope):
        left = self.parse_multiplicative(scope)
        while self.peek().type == "op" and self.peek().value in ("+", "-"):
            tok = self.advance()
            right = self.parse_multiplicative(scope)
            left = Binary(tok.value, left, right, (tok.line, tok.column))
        return left

    def parse_multiplicative(self, scope: _Scope):
        left = self.parse_unary(scope)
        while self.peek().type == "op" and self.peek().value in ("*", "/"):
            tok = self.advance()
            right = self.parse_unary(scope)
            left = Binary(tok.value, left, right, (tok.line, tok.column))
        return left

    def parse_unary(self, scope: _Scope):
        tok = self.peek()
        if tok.type == "op" and tok.value == "-":
            self.advance()
            operand = self.parse_unary(scope)
            return Unary("-", operand, (tok.line, tok.column))
        return self.parse_postfix(scope)

    def parse_postfix(self, scope: _Scope):
        expr = self.parse_primary(scope)
        while self.peek().type == "op" and self.peek().value == ".":
            self.advance()
            name_tok = self.peek()
            if name_tok.type not in ("ident", "keyword"):
                raise self.error("expected a member name after '.'", name_tok)
            self.advance()
            expr = self.parse_member(scope, expr, name_tok)
        return expr

    def parse_member(self, scope: _Scope, receiver, name_tok: Token):
        pos = (name_tok.line, name_tok.column)
        name = name_tok.value
        # An unbound identifier is a type reference exactly when navigated with .all
        if isinstance(receiver, Name) and not scope.is_visible(receiver.ident):
            if name == "all":
                receiver = TypeRef(receiver.ident, receiver.pos)
            else:
                raise self.error(f"unbound variable {receiver.ident!r}",
                                 Token("ident", receiver.ident, *receiver.pos))
        tok = self.peek()
        if not (tok.type == "op" and tok.value == "("):
            return Member(receiver, name, pos)
        self.advance()
        tok = self.peek()
        if tok.type == "op" and tok.value == ")":
            self.advance()
            return Member(receiver, name, pos)
        if name in ("selectOne", "select"):
            var_tok = self.expect("ident")
            self.expect("op", "|")
            lam_scope = _Scope(scope)
            if not lam_scope.declare(var_tok.value):
                raise self.error(f"lambda variable {var_tok.value!r} shadows a declared variable",
                                 var_tok)
            predicate = self.parse_expr(lam_scope)
            self.expect("op", ")")
            return SelectCall(receiver, name, var_tok.value, predicate, pos)
        if name == "isTypeOf":
            type_tok = self.expect("ident")
            self.expect("op", ")")
            return IsTypeOf(receiver, type_tok.value, pos)
        raise self.error(f"method {name!r} takes no arguments")

    def parse_primary(self, scope: _Scope):
        tok = self.peek()
        pos = (tok.line, tok.column)
        if tok.type == "number":
            self.advance()
            return Literal(float(tok.value), pos)
        if tok.type == "string":
            self.advance()
            return Literal(tok.value[1:-1], pos)
        if tok.type == "keyword" and tok.value in ("true", "false"):
            self.advance()
            return Literal(tok.value == "true", pos)
        if tok.type == "op" and tok.value == "(":
            self.advance()
            expr = self.parse_expr(scope)
            self.expect("op", ")")
            return expr
        if tok.type == "ident":
            self.advance()
            nxt = self.peek()
            if nxt.type == "op" and nxt.value == "!":
                self.advance()
                type_tok = self.expect("ident")
                return TypeRef(type_tok.value, pos)
            if tok.value == "all" and nxt.type == "op" and nxt.value == "(" \
                    and not scope.is_visible("all"):
                self.advance()
                str_tok = self.expect("string")
                self.expect("op", ")")
                return TypeRef(str_tok.value[1:-1], pos)
            if not scope.is_visible(tok.value):
                # Deferred: parse_member turns this into a TypeRef if '.all' follows.
                nxt2 = self.peek(1)
                if nxt.type == "op" and nxt.value == "." and nxt2.value == "all":
                    return Name(tok.value, pos)
                raise self.error(f"unbound variable {tok.value!r}", tok)
            return Name(tok.value, pos)
        raise self.error(f"expected an expression, found {tok.value or 'end of input'!r}")


def _stmt_definitely_returns(stmt) -> bool:
    if isinstance(stmt, Return):
        return True
    if isinstance(stmt, If) and stmt.else_body is not None:
        return _definitely_returns(stmt.then_body) and _definitely_returns(stmt.else_body)
    return False


def _definitely_returns(statements) -> bool:
    return any(_stmt_definitely_returns(s) for s in statements)


def parse_query(text: str) -> QueryProgram:
    """Parse a query program, enforcing the static validity rules."""
    return _Parser(text).parse_program()
