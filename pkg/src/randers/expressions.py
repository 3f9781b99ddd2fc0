"""Arithmetic expression mini-language for scenario fields.

Supports +, -, *, /, ^ (constant exponent), unary minus, parentheses, the
functions exp/sin/cos/sqrt, float literals, and a caller-supplied variable
set (x1, x2, r for planar fields; r alone for radial profiles).  Compiled
expressions evaluate on plain floats, numpy arrays, and the dual-number
carriers from :mod:`randers.dual`, so one source string yields values,
gradients, and Hessians alike.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

__all__ = ["Expression", "compile_expression", "FUNCTIONS"]

FUNCTIONS = ("exp", "sin", "cos", "sqrt")

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),]))"
)


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    pos: int


def _tokenize(src):
    toks, i = [], 0
    while i < len(src):
        m = _TOKEN_RE.match(src, i)
        if m is None:
            if src[i:].strip() == "":
                break
            raise ConfigError(f"unexpected character {src[i]!r} in expression", column=i + 1)
        if m.group("num") is not None:
            toks.append(_Tok("num", m.group("num"), m.start("num")))
        elif m.group("name") is not None:
            toks.append(_Tok("name", m.group("name"), m.start("name")))
        else:
            toks.append(_Tok("op", m.group("op"), m.start("op")))
        i = m.end()
    toks.append(_Tok("end", "", len(src)))
    return toks


# AST nodes are tuples: ("num", v) ("var", name) ("neg", a)
# ("+"|"-"|"*"|"/", a, b) ("pow", a, const) ("call", fname, a)


class _Parser:
    def __init__(self, src, variables):
        self.src = src
        self.toks = _tokenize(src)
        self.k = 0
        self.variables = variables

    def peek(self):
        return self.toks[self.k]

    def take(self):
        t = self.toks[self.k]
        self.k += 1
        return t

    def fail(self, msg, tok):
        raise ConfigError(f"{msg} in expression {self.src!r}", column=tok.pos + 1)

    def parse(self):
        node = self.expr()
        t = self.peek()
        if t.kind != "end":
            self.fail(f"unexpected {t.text!r}", t)
        return node

    def expr(self):
        node = self.term()
        while self.peek().text in ("+", "-"):
            op = self.take().text
            node = (op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.peek().text in ("*", "/"):
            op = self.take().text
            node = (op, node, self.factor())
        return node

    def factor(self):
        # unary minus binds looser than ^, so -x1^2 means -(x1^2)
        if self.peek().text == "-":
            self.take()
            return ("neg", self.factor())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek().text == "^":
            tok = self.take()
            exponent = self.factor()
            const = _fold_constant(exponent)
            if const is None:
                self.fail("exponent must be a constant", tok)
            return ("pow", base, const)
        return base

    def atom(self):
        t = self.take()
        if t.kind == "num":
            return ("num", float(t.text))
        if t.kind == "name":
            if self.peek().text == "(":
                if t.text not in FUNCTIONS:
                    self.fail(f"unknown function {t.text!r}", t)
                self.take()
                arg = self.expr()
                closing = self.take()
                if closing.text != ")":
                    self.fail("expected ')'", closing)
                return ("call", t.text, arg)
            if t.text not in self.variables:
                self.fail(f"unknown variable {t.text!r} (allowed: {', '.join(sorted(self.variables))})", t)
            return ("var", t.text)
        if t.text == "(":
            node = self.expr()
            closing = self.take()
            if closing.text != ")":
                self.fail("expected ')'", closing)
            return node
        self.fail(f"unexpected {t.text!r}" if t.text else "unexpected end of expression", t)


def _fold_constant(node):
    tag = node[0]
    if tag == "num":
        return node[1]
    if tag == "neg":
        v = _fold_constant(node[1])
        return None if v is None else -v
    if tag in ("+", "-", "*", "/"):
        a, b = _fold_constant(node[1]), _fold_constant(node[2])
        if a is None or b is None:
            return None
        return {"+": a + b, "-": a - b, "*": a * b, "/": a / b}[tag]
    if tag == "pow":
        a = _fold_constant(node[1])
        return None if a is None else a ** node[2]
    return None


def _apply(fname, v):
    if hasattr(v, fname):
        return getattr(v, fname)()
    return getattr(np, fname)(v)


def _eval(node, env):
    tag = node[0]
    if tag == "num":
        return node[1]
    if tag == "var":
        return env[node[1]]
    if tag == "neg":
        return -_eval(node[1], env)
    if tag == "+":
        return _eval(node[1], env) + _eval(node[2], env)
    if tag == "-":
        return _eval(node[1], env) - _eval(node[2], env)
    if tag == "*":
        return _eval(node[1], env) * _eval(node[2], env)
    if tag == "/":
        return _eval(node[1], env) / _eval(node[2], env)
    if tag == "pow":
        return _eval(node[1], env) ** node[2]
    if tag == "call":
        return _apply(node[1], _eval(node[2], env))
    raise AssertionError(f"bad node {tag}")


def _vars_used(node, acc):
    tag = node[0]
    if tag == "var":
        acc.add(node[1])
    elif tag == "neg":
        _vars_used(node[1], acc)
    elif tag in ("+", "-", "*", "/"):
        _vars_used(node[1], acc)
        _vars_used(node[2], acc)
    elif tag == "pow":
        _vars_used(node[1], acc)
    elif tag == "call":
        _vars_used(node[2], acc)


@dataclass(frozen=True)
class Expression:
    source: str
    node: tuple
    variables: frozenset

    def __call__(self, **env):
        return _eval(self.node, env)

    @property
    def is_constant(self):
        return not self.variables

    def constant_value(self):
        if not self.is_constant:
            raise ValueError(f"expression {self.source!r} is not constant")
        return float(_eval(self.node, {}))


def compile_expression(src, allowed=("x1", "x2", "r")):
    """Parse ``src`` into an :class:`Expression` over the allowed variables."""
    node = _Parser(src, frozenset(allowed)).parse()
    used = set()
    _vars_used(node, used)
    return Expression(src.strip(), node, frozenset(used))
