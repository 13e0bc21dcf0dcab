"""Constraint Query Language: validation programs over artifact views.

A deliberately small, fully specified query language in the style of object
constraint languages. Programs consist of variable bindings, for-loops,
conditionals, and a return; expressions navigate elements of a loaded
artifact view. The grammar is documented in docs/cql-grammar.md.
"""

from .parser import CqlParseError, QueryProgram, parse_query
from .interp import CqlRuntimeError, Diagnostics, eval_query

__all__ = [
    "CqlParseError",
    "CqlRuntimeError",
    "Diagnostics",
    "QueryProgram",
    "eval_query",
    "parse_query",
]
