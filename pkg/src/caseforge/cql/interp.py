"""Evaluator for parsed query programs against an artifact view.

Evaluation is pure and reentrant: the view is never mutated and repeated
evaluations yield identical results. Every anticipated failure (type errors,
navigation misses, empty selectOne, division by zero) surfaces as a
positioned diagnostic rather than an exception.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..artifact_store import ArtifactView, Element
from . import parser as ast
from .parser import QueryProgram


@dataclass(frozen=True)
class Diagnostics:
    ok: bool
    message: str = ""
    position: tuple[int, int] | None = None


class CqlRuntimeError(Exception):
    def __init__(self, message: str, pos: tuple[int, int]):
        self.pos = pos
        super().__init__(f"{message} (line {pos[0]}, column {pos[1]})")


class _Return(Exception):
    def __init__(self, value):
        self.value = value


_REAL_RE = re.compile(r"^[+-]?\d+(\.\d+)?$")


def _type_name(value) -> str:
    if isinstance(value, bool):
        return "Boolean"
    if isinstance(value, float):
        return "Real"
    if isinstance(value, str):
        return "Text"
    if isinstance(value, Element):
        return "Element"
    if isinstance(value, tuple):
        return "ElementList"
    return type(value).__name__


class _Env:
    def __init__(self, parent: _Env | None = None):
        self.parent = parent
        self.bindings: dict[str, object] = {}

    def lookup(self, name: str, pos) -> object:
        env: _Env | None = self
        while env is not None:
            if name in env.bindings:
                return env.bindings[name]
            env = env.parent
        raise CqlRuntimeError(f"unbound variable {name!r}", pos)

    def declare(self, name: str, value) -> None:
        self.bindings[name] = value

    def assign(self, name: str, value, pos) -> None:
        env: _Env | None = self
        while env is not None:
            if name in env.bindings:
                env.bindings[name] = value
                return
            env = env.parent
        raise CqlRuntimeError(f"assignment to unbound variable {name!r}", pos)


class _Interpreter:
    def __init__(self, view: ArtifactView):
        self.view = view

    def run(self, program: QueryProgram):
        env = _Env()
        try:
            self.exec_block(program.statements, env)
        except _Return as ret:
            return ret.value
        # Unreachable for parse-accepted programs: the static check requires
        # every path to return.
        raise CqlRuntimeError("program completed without executing a return", (1, 1))

    def exec_block(self, statements, env: _Env) -> None:
        for stmt in statements:
            self.exec_stmt(stmt, env)

    def exec_stmt(self, stmt, env: _Env) -> None:
        if isinstance(stmt, ast.VarDecl):
            env.declare(stmt.name, self.eval(stmt.expr, env))
        elif isinstance(stmt, ast.Assign):
            value = self.eval(stmt.expr, env)
            if stmt.augmented:
                current = env.lookup(stmt.name, stmt.pos)
                value = self.arith("+", current, value, stmt.pos)
            env.assign(stmt.name, value, stmt.pos)
        elif isinstance(stmt, ast.For):
            iterable = self.eval(stmt.iterable, env)
            if not isinstance(iterable, tuple):
                raise CqlRuntimeError(
                    f"for-loop requires an element collection, got {_type_name(iterable)}", stmt.pos)
            for item in iterable:
                body_env = _Env(env)
                body_env.declare(stmt.var, item)
                self.exec_block(stmt.body, body_env)
        elif isinstance(stmt, ast.If):
            condition = self.eval(stmt.condition, env)
            if not isinstance(condition, bool):
                raise CqlRuntimeError(
                    f"if-condition must be Boolean, got {_type_name(condition)}", stmt.pos)
            if condition:
                self.exec_block(stmt.then_body, _Env(env))
            elif stmt.else_body is not None:
                self.exec_block(stmt.else_body, _Env(env))
        elif isinstance(stmt, ast.Return):
            raise _Return(self.eval(stmt.expr, env))
        else:  # pragma: no cover - parser emits only the five statement kinds
            raise CqlRuntimeError(f"unknown statement {type(stmt).__name__}", stmt.pos)

    # expressions

    def eval(self, expr, env: _Env):
        if isinstance(expr, ast.Literal):
            return expr.value
        if isinstance(expr, ast.Name):
            return env.lookup(expr.ident, expr.pos)
        if isinstance(expr, ast.TypeRef):
            raise CqlRuntimeError(
                f"type reference {expr.type_name!r} is not a value; navigate it with .all",
                expr.pos)
        if isinstance(expr, ast.Member):
            return self.eval_member(expr, env)
        if isinstance(expr, ast.IsTypeOf):
            receiver = self.eval(expr.receiver, env)
            if not isinstance(receiver, Element):
                raise CqlRuntimeError(
                    f"isTypeOf applies to elements, got {_type_name(receiver)}", expr.pos)
            return receiver.type_name == expr.type_name
        if isinstance(expr, ast.SelectCall):
            return self.eval_select(expr, env)
        if isinstance(expr, ast.Unary):
            operand = self.eval(expr.operand, env)
            if expr.op == "-":
                if isinstance(operand, bool) or not isinstance(operand, float):
                    raise CqlRuntimeError(
                        f"unary '-' requires Real, got {_type_name(operand)}", expr.pos)
                return -operand
            if not isinstance(operand, bool):
                raise CqlRuntimeError(
                    f"'not' requires Boolean, got {_type_name(operand)}", expr.pos)
            return not operand
        if isinstance(expr, ast.Binary):
            return self.eval_binary(expr, env)
        raise CqlRuntimeError(f"unknown expression {type(expr).__name__}", getattr(expr, "pos", (1, 1)))

    def eval_member(self, expr: ast.Member, env: _Env):
        name, pos = expr.name, expr.pos
        if isinstance(expr.receiver, ast.TypeRef):
            if name == "all":
                wanted = expr.receiver.type_name
                return tuple(e for e in self.view.elements if e.type_name == wanted)
            raise CqlRuntimeError(f"type references support only .all, not .{name}", pos)
        receiver = self.eval(expr.receiver, env)
        if isinstance(receiver, tuple):
            if name == "first":
                if not receiver:
                    raise CqlRuntimeError("first() on an empty collection", pos)
                return receiver[0]
            if name == "count":
                return float(len(receiver))
            raise CqlRuntimeError(f"collections have no member {name!r}", pos)
        if isinstance(receiver, Element):
            if name in receiver.attributes:
                return receiver.attributes[name]
            if name in receiver.children:
                return receiver.children[name]
            raise CqlRuntimeError(
                f"element of type {receiver.type_name!r} has no attribute or child {name!r}", pos)
        if name == "asReal":
            if isinstance(receiver, str):
                if not _REAL_RE.match(receiver):
                    raise CqlRuntimeError(f"asReal: {receiver!r} is not a decimal literal", pos)
                return float(receiver)
            if isinstance(receiver, float) and not isinstance(receiver, bool):
                return receiver
            raise CqlRuntimeError(f"asReal applies to Text, got {_type_name(receiver)}", pos)
        raise CqlRuntimeError(f"{_type_name(receiver)} has no member {name!r}", pos)

    def eval_select(self, expr: ast.SelectCall, env: _Env):
        receiver = self.eval(expr.receiver, env)
        if not isinstance(receiver, tuple):
            raise CqlRuntimeError(
                f"{expr.method} applies to collections, got {_type_name(receiver)}", expr.pos)
        matches = []
        for item in receiver:
            lam_env = _Env(env)
            lam_env.declare(expr.var, item)
            verdict = self.eval(expr.predicate, lam_env)
            if not isinstance(verdict, bool):
                raise CqlRuntimeError(
                    f"{expr.method} predicate must be Boolean, got {_type_name(verdict)}", expr.pos)
            if verdict:
                if expr.method == "selectOne":
                    return item
                matches.append(item)
        if expr.method == "selectOne":
            raise CqlRuntimeError("selectOne matched no element", expr.pos)
        return tuple(matches)

    def eval_binary(self, expr: ast.Binary, env: _Env):
        op, pos = expr.op, expr.pos
        if op in ("and", "or"):
            left = self.eval(expr.left, env)
            if not isinstance(left, bool):
                raise CqlRuntimeError(f"{op!r} requires Boolean, got {_type_name(left)}", pos)
            if op == "and" and not left:
                return False
            if op == "or" and left:
                return True
            right = self.eval(expr.right, env)
            if not isinstance(right, bool):
                raise CqlRuntimeError(f"{op!r} requires Boolean, got {_type_name(right)}", pos)
            return right
        left = self.eval(expr.left, env)
        right = self.eval(expr.right, env)
        if op in ("=", "<>"):
            for operand in (left, right):
                if isinstance(operand, (Element, tuple)):
                    raise CqlRuntimeError(
                        f"equality applies to Text, Real, and Boolean, got {_type_name(operand)}",
                        pos)
            if _type_name(left) != _type_name(right):
                raise CqlRuntimeError(
                    f"cannot compare {_type_name(left)} with {_type_name(right)}", pos)
            return (left == right) if op == "=" else (left != right)
        if op in ("<", "<=", ">", ">="):
            self._require_reals(op, left, right, pos)
            if op == "<":
                return left < right
            if op == "<=":
                return left <= right
            if op == ">":
                return left > right
            return left >= right
        return self.arith(op, left, right, pos)

    def _require_reals(self, op: str, left, right, pos) -> None:
        for operand in (left, right):
            if isinstance(operand, bool) or not isinstance(operand, float):
                raise CqlRuntimeError(
                    f"{op!r} requires Real operands, got {_type_name(operand)}", pos)

    def arith(self, op: str, left, right, pos):
        self._require_reals(op, left, right, pos)
        if op == "+":
            return left + right
        if op == "-":
            return left - right
        if op == "*":
            return left * right
        if right == 0.0:
            raise CqlRuntimeError("division by zero", pos)
        return left / right


def eval_query(program: QueryProgram, view: ArtifactView) -> tuple[object | None, Diagnostics]:
    """Evaluate a parsed program; returns (value, diagnostics).

    On success the value is one of Boolean, Real, Text, Element, or an
    element collection; on failure the value is None and the diagnostics
    carry the message and position.
    """
    try:
        value = _Interpreter(view).run(program)
    except CqlRuntimeError as exc:
        return None, Diagnostics(ok=False, message=str(exc), position=exc.pos)
    return value, Diagnostics(ok=True)
