"""Recursive-descent parser for the expression text grammar.

Grammar (EBNF)::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := '-' factor | base ('^' integer)?
    base   := number | ident | func '(' expr ')' | '(' expr ')'

Identifiers x, t, z0..z3, y0..y3 are reserved jet variables; any other
identifier must be a declared parameter.  Numbers are integers or decimals
and are read exactly (decimals become rationals).  Unary minus binds looser
than '^', so ``-z0^2`` means ``-(z0^2)``.  Exponents are (possibly negative)
integers.  ``str(parse_expr(s))`` reparses to an equal expression.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Mapping, Optional

from .expr import (FUNCTIONS, ExprError, JetExpr, ParamSymbol, T, UnknownSymbolError,
                   X, Y, Z)


class ExprSyntaxError(ExprError):
    """Malformed expression text; carries the offending position."""

    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} (at position {pos})")
        self.pos = pos


_JET_VARS = {"x": X, "t": T}
for _i in range(4):
    _JET_VARS[f"z{_i}"] = Z[_i]
    _JET_VARS[f"y{_i}"] = Y[_i]


class _Parser:
    def __init__(self, text: str, params: Mapping[str, ParamSymbol]):
        self.text = text
        self.params = params
        self.pos = 0

    def error(self, message: str) -> ExprSyntaxError:
        return ExprSyntaxError(message, self.pos)

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def accept(self, ch: str) -> bool:
        if self.peek() == ch:
            self.pos += 1
            return True
        return False

    def expect(self, ch: str):
        if not self.accept(ch):
            raise self.error(f"expected {ch!r}")

    def parse(self) -> JetExpr:
        e = self.expr()
        self.skip_ws()
        if self.pos != len(self.text):
            raise self.error("unexpected trailing input")
        return e

    def expr(self) -> JetExpr:
        e = self.term()
        while True:
            ch = self.peek()
            if ch == "+":
                self.pos += 1
                e = e + self.term()
            elif ch == "-":
                self.pos += 1
                e = e - self.term()
            else:
                return e

    def term(self) -> JetExpr:
        e = self.factor()
        while True:
            ch = self.peek()
            if ch == "*":
                self.pos += 1
                e = e * self.factor()
            elif ch == "/":
                self.pos += 1
                e = e / self.factor()
            else:
                return e

    def factor(self) -> JetExpr:
        if self.accept("-"):
            return -self.factor()
        e = self.base()
        if self.peek() == "^":
            self.pos += 1
            e = e ** self.integer()
        return e

    def integer(self) -> int:
        self.skip_ws()
        start = self.pos
        if self.peek() == "-":
            self.pos += 1
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        token = self.text[start:self.pos]
        if not token or token == "-":
            raise self.error("expected integer exponent")
        return int(token)

    def base(self) -> JetExpr:
        ch = self.peek()
        if ch == "(":
            self.pos += 1
            e = self.expr()
            self.expect(")")
            return e
        if ch.isdigit() or ch == ".":
            return self.number()
        if ch.isalpha() or ch == "_":
            return self.identifier()
        raise self.error("expected a number, identifier or '('")

    def number(self) -> JetExpr:
        self.skip_ws()
        start = self.pos
        seen_dot = False
        while self.pos < len(self.text):
            c = self.text[self.pos]
            if c.isdigit():
                self.pos += 1
            elif c == "." and not seen_dot:
                seen_dot = True
                self.pos += 1
            else:
                break
        token = self.text[start:self.pos]
        if token in ("", "."):
            raise self.error("malformed number")
        return JetExpr.const(Fraction(token))

    def identifier(self) -> JetExpr:
        self.skip_ws()
        start = self.pos
        while self.pos < len(self.text) and (
                self.text[self.pos].isalnum() or self.text[self.pos] == "_"):
            self.pos += 1
        name = self.text[start:self.pos]
        if name in FUNCTIONS and self.peek() == "(":
            self.pos += 1
            arg = self.expr()
            self.expect(")")
            return JetExpr.func(name, arg)
        if name in _JET_VARS:
            return JetExpr.var(_JET_VARS[name])
        if name in self.params:
            return JetExpr.var(self.params[name])
        raise UnknownSymbolError(
            f"{name!r} is neither a jet variable nor a declared parameter")


def parse_expr(text: str,
               params: Optional[Mapping[str, ParamSymbol]] = None) -> JetExpr:
    """Parse expression text into a normalized JetExpr."""
    return _Parser(text, params or {}).parse()
