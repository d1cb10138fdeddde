"""Text to :class:`OperatorExpr`.

Grammar (juxtaposition multiplies, products keep their written order)::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/")? unary)*
    unary   := "-" unary | "+" unary | power
    power   := atom (("^" | "**") INT)?
    atom    := NUMBER | NAME | "(" expr ")"

Division is only by plain numbers.  ``NAME`` is one of ``x p i alpha beta
c0 V0`` or any identifier with optional trailing primes (``mu``, ``u''``),
or a key of the ``names`` mapping passed to :func:`parse`.
"""

import re
from fractions import Fraction

from .coeff import Coeff
from .operators import OperatorExpr, P

_ALIASES = {"α": "alpha", "β": "beta", "μ": "mu", "ν": "nu", "c₀": "c0", "V₀": "V0"}

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d+)?)|(?P<name>[A-Za-zα-ωΑ-Ω_][A-Za-z0-9_₀α-ωΑ-Ω]*'*)"
    r"|(?P<op>\*\*|[-+*/^()]))"
)


class ParseError(ValueError):
    pass


def _tokenize(text):
    pos = 0
    tokens = []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character at {pos}: {text[pos:pos + 10]!r}")
        pos = m.end()
        kind = m.lastgroup
        tokens.append((kind, m.group(kind)))
    return tokens


class _Parser:
    def __init__(self, tokens, names):
        self.tokens = tokens
        self.pos = 0
        self.names = names

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else (None, None)

    def take(self):
        tok = self.peek()
        self.pos += 1
        return tok

    def expect(self, op):
        kind, val = self.take()
        if kind != "op" or val != op:
            raise ParseError(f"expected {op!r}, got {val!r}")

    def parse(self):
        out = self.expr()
        if self.pos != len(self.tokens):
            raise ParseError(f"trailing input at token {self.peek()[1]!r}")
        return out

    def expr(self):
        out = self.term()
        while True:
            kind, val = self.peek()
            if kind == "op" and val in "+-":
                self.take()
                rhs = self.term()
                out = out + rhs if val == "+" else out - rhs
            else:
                return out

    def _starts_atom(self):
        kind, val = self.peek()
        return kind in ("num", "name") or (kind == "op" and val == "(")

    def term(self):
        out = self.unary()
        while True:
            kind, val = self.peek()
            if kind == "op" and val == "*":
                self.take()
                out = out * self.unary()
            elif kind == "op" and val == "/":
                self.take()
                kind2, num = self.take()
                if kind2 != "num":
                    raise ParseError("division is only by numbers")
                d = Fraction(num)
                if d == 0:
                    raise ParseError("division by zero")
                out = out * OperatorExpr.scalar(Coeff.const(1 / d))
            elif self._starts_atom():
                out = out * self.unary()
            else:
                return out

    def unary(self):
        kind, val = self.peek()
        if kind == "op" and val in "+-":
            self.take()
            operand = self.unary()
            return -operand if val == "-" else operand
        return self.power()

    def power(self):
        base = self.atom()
        kind, val = self.peek()
        if kind == "op" and val in ("^", "**"):
            self.take()
            kind2, num = self.take()
            if kind2 != "num" or not num.isdigit():
                raise ParseError("exponent must be a non-negative integer")
            return base ** int(num)
        return base

    def atom(self):
        kind, val = self.take()
        if kind == "num":
            return OperatorExpr.scalar(Coeff.const(Fraction(val)))
        if kind == "name":
            val = _ALIASES.get(val, val)
            if val in self.names:
                return self.names[val]
            if val == "p":
                return P
            return OperatorExpr.scalar(Coeff.symbol(val))
        if kind == "op" and val == "(":
            out = self.expr()
            self.expect(")")
            return out
        raise ParseError(f"unexpected token {val!r}")


def parse(text, names=None):
    """Parse ``text`` into a normal-ordered :class:`OperatorExpr`."""
    tokens = _tokenize(text)
    if not tokens:
        raise ParseError("empty expression")
    return _Parser(tokens, dict(names or {})).parse()
