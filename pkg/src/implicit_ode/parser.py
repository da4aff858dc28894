"""Recursive-descent parser for the ASCII expression grammar.

::

    expr     := term (('+' | '-') term)*
    term     := unary (('*' | '/') unary)*
    unary    := ('-' | '+') unary | power
    power    := primary ('^' exponent)?
    exponent := ['-'] NUMBER | '(' ['-'] NUMBER ['/' ['-'] NUMBER] ')'
    primary  := NUMBER | 'pi' | VAR | FUNC '(' expr ')' | '(' expr ')'

``^`` binds tighter than unary minus, so ``-p^2`` is ``-(p^2)``.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Iterable

from .errors import MalformedExponent, ParseError, UnknownIdentifier
from .expr import CONSTANTS, FUNCTIONS, Add, Const, Div, Expr, Func, Mul, Neg, Num, Pow, Sub, Var

VARIABLES = frozenset("xtpq")

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),])"
    r")"
)


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos or m.lastgroup is None:
            start = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ParseError(f"unexpected character {text[start]!r}", start)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, variables: frozenset[str]):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.variables = variables

    @property
    def tok(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def at(self, value) -> bool:
        return self.tok[0] == "op" and self.tok[1] == value

    def expect(self, value):
        if not self.at(value):
            kind, text, offset = self.tok
            found = "end of input" if kind == "end" else repr(text)
            raise ParseError(f"expected {value!r}, found {found}", offset)
        return self.advance()

    def parse(self) -> Expr:
        e = self.expr()
        kind, text, offset = self.tok
        if kind != "end":
            raise ParseError(f"unexpected {text!r} after expression", offset)
        return e

    def expr(self):
        left = self.term()
        while self.at("+") or self.at("-"):
            op = self.advance()[1]
            right = self.term()
            left = Add(left, right) if op == "+" else Sub(left, right)
        return left

    def term(self):
        left = self.unary()
        while self.at("*") or self.at("/"):
            op = self.advance()[1]
            right = self.unary()
            left = Mul(left, right) if op == "*" else Div(left, right)
        return left

    def unary(self):
        if self.at("-"):
            self.advance()
            return Neg(self.unary())
        if self.at("+"):
            self.advance()
            return self.unary()
        return self.power()

    def power(self):
        base = self.primary()
        if self.at("^"):
            self.advance()
            return Pow(base, self.exponent())
        return base

    def _signed_number(self) -> Fraction:
        sign = 1
        if self.at("-"):
            self.advance()
            sign = -1
        kind, text, offset = self.tok
        if kind != "num":
            raise MalformedExponent("exponent must be a numeric or rational literal", offset)
        self.advance()
        return sign * Fraction(text)

    def exponent(self) -> Fraction:
        if self.at("("):
            self.advance()
            value = self._signed_number()
            if self.at("/"):
                offset = self.advance()[2]
                denominator = self._signed_number()
                if denominator == 0:
                    raise MalformedExponent("zero denominator in exponent", offset)
                value = value / denominator
            if not self.at(")"):
                raise MalformedExponent("exponent must be a numeric or rational literal", self.tok[2])
            self.advance()
            return value
        return self._signed_number()

    def primary(self):
        kind, text, offset = self.tok
        if kind == "num":
            self.advance()
            return Num(Fraction(text))
        if kind == "ident":
            self.advance()
            if text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Func(text, arg)
            if text in CONSTANTS:
                return Const(text)
            if text in self.variables:
                return Var(text)
            raise UnknownIdentifier(f"unknown identifier {text!r}", offset)
        if self.at("("):
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        found = "end of input" if kind == "end" else repr(text)
        raise ParseError(f"expected a number, variable, function or '(', found {found}", offset)


def parse(text: str, variables: Iterable[str] = VARIABLES) -> Expr:
    """Parse ``text`` into an expression tree.

    ``variables`` restricts which identifiers are accepted as variables; pass
    an empty collection to parse pure constant expressions such as ``pi/2``.
    Offsets in raised :class:`ParseError` are byte offsets into ``text``
    (the grammar is ASCII).
    """
    return _Parser(text, frozenset(variables)).parse()


def parse_constant(text: str) -> float:
    """Evaluate a constant expression such as ``pi/2`` or ``-3*sqrt(3)/2``."""
    from .expr import evaluate

    return evaluate(parse(text, variables=()), {})
