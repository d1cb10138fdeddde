"""Normal-ordered operator polynomials in x and p (hbar = 1).

An :class:`OperatorExpr` is stored as ``{n: c_n}`` meaning
``sum_n c_n(x) p**n`` with every coefficient to the left of every p.
Products are reordered with ``p f = f p - i f'``, or in closed form

    p**n f = sum_k binom(n, k) (-i)**k f^(k) p**(n-k).
"""

from math import comb

from .coeff import I, ONE, ZERO, Coeff


def _minus_i_power(k):
    # (-i)**k as a Coeff
    return [ONE, -I, -ONE, I][k % 4]


class OperatorExpr:
    __slots__ = ("_terms",)

    def __init__(self, terms=None):
        clean = {}
        for n, c in (terms or {}).items():
            if n < 0:
                raise ValueError("negative powers of p are not supported")
            c = Coeff.coerce(c)
            if not c.is_zero():
                clean[n] = c
        self._terms = clean

    @classmethod
    def scalar(cls, value):
        return cls({0: Coeff.coerce(value)})

    @property
    def terms(self):
        return dict(self._terms)

    def coefficient(self, n):
        return self._terms.get(n, ZERO)

    def degree(self):
        return max(self._terms, default=-1)

    def is_zero(self):
        return not self._terms

    # arithmetic -------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, OperatorExpr):
            return other
        return OperatorExpr.scalar(other)

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self._terms)
        for n, c in other._terms.items():
            out[n] = out.get(n, ZERO) + c
        return OperatorExpr(out)

    __radd__ = __add__

    def __neg__(self):
        return OperatorExpr({n: -c for n, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        return multiply(self, self._coerce(other))

    def __rmul__(self, other):
        return multiply(self._coerce(other), self)

    def __pow__(self, n):
        out = OperatorExpr.scalar(1)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, OperatorExpr):
            try:
                other = OperatorExpr.scalar(other)
            except TypeError:
                return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    # maps --------------------------------------------------------------
    def substitute(self, mapping):
        return OperatorExpr({n: c.substitute(mapping) for n, c in self._terms.items()})

    def adjoint(self):
        """Formal adjoint: x and p self-adjoint, factor order reversed, i -> -i."""
        out = OperatorExpr()
        for n, c in self._terms.items():
            out = out + _p_power_times(n, c.conjugate())
        return out

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for n in sorted(self._terms, reverse=True):
            c = self._terms[n]
            pfac = "" if n == 0 else ("p" if n == 1 else f"p^{n}")
            if not pfac:
                parts.append(f"({c})")
            elif c == ONE:
                parts.append(pfac)
            else:
                parts.append(f"({c})*{pfac}")
        return " + ".join(parts)

    def __repr__(self):
        return f"OperatorExpr({str(self)!r})"


def _p_power_times(n, f):
    """Normal form of p**n * f for a coefficient f."""
    out = {}
    for k in range(n + 1):
        term = f.diff(k) * _minus_i_power(k) * comb(n, k)
        if not term.is_zero():
            out[n - k] = out.get(n - k, ZERO) + term
    return OperatorExpr(out)


def multiply(a, b):
    """Normal-ordered product a*b."""
    out = {}
    for n, f in a._terms.items():
        for m, g in b._terms.items():
            for k in range(n + 1):
                term = f * g.diff(k) * _minus_i_power(k) * comb(n, k)
                if term.is_zero():
                    continue
                out[n - k + m] = out.get(n - k + m, ZERO) + term
    return OperatorExpr(out)


def commutator(a, b):
    """Normal-ordered [a, b] = ab - ba."""
    return multiply(a, b) - multiply(b, a)


def normal_order(expr):
    """Canonicalise an expression.

    Stored expressions are always normal ordered, so this is a re-build that
    merges like terms; it exists so idempotence can be asserted.
    """
    return OperatorExpr({n: Coeff(c.terms) for n, c in expr.terms.items()})


X = OperatorExpr.scalar(Coeff.symbol("x"))
P = OperatorExpr({1: ONE})


def sym(name):
    return OperatorExpr.scalar(Coeff.symbol(name))
