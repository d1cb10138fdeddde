"""Exact commutative coefficient ring with a d/dx derivation.

A :class:`Coeff` is a finite sum of rational multiples of monomials in
named symbols.  The imaginary unit is the symbol ``i`` with ``i**2 == -1``.
Symbols split into three kinds:

* ``x`` -- the position, ``d/dx x = 1``;
* constants (``alpha``, ``beta``, ``c0``, ``V0``, ``i``) -- ``d/dx`` gives 0;
* everything else is a function of ``x``; its derivative appends a prime,
  so ``mu -> mu' -> mu''``.
"""

from fractions import Fraction
from numbers import Rational

CONSTANT_SYMBOLS = frozenset({"alpha", "beta", "c0", "V0", "i"})
# symbols a structure constant may contain
CNUMBER_SYMBOLS = frozenset({"alpha", "beta", "i"})


def is_function_symbol(name):
    return name != "x" and name not in CONSTANT_SYMBOLS


def base_name(name):
    return name.rstrip("'")


def derivative_order(name):
    return len(name) - len(base_name(name))


def _mono_mul(a, b):
    """Multiply two monomials; returns (sign, monomial)."""
    powers = dict(a)
    for name, k in b:
        powers[name] = powers.get(name, 0) + k
    sign = 1
    ipow = powers.pop("i", 0)
    if ipow >= 2:
        if (ipow // 2) % 2:
            sign = -1
        ipow %= 2
    if ipow:
        powers["i"] = ipow
    return sign, tuple(sorted(powers.items()))


def _term_key(mono):
    return (tuple(n for n, _ in mono), sum(k for _, k in mono), tuple(k for _, k in mono))


class Coeff:
    """Immutable polynomial over Q in commuting symbols."""

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms=None):
        clean = {}
        if terms:
            for mono, c in terms.items():
                c = Fraction(c)
                if c:
                    clean[mono] = clean.get(mono, Fraction(0)) + c
                    if not clean[mono]:
                        del clean[mono]
        self._terms = clean
        self._hash = None

    # construction -----------------------------------------------------
    @classmethod
    def const(cls, value):
        return cls({(): value})

    @classmethod
    def symbol(cls, name, power=1):
        if power == 0:
            return cls.const(1)
        if name == "i":
            sign, mono = _mono_mul((), (("i", power),))
            return cls({mono: sign})
        return cls({((name, power),): 1})

    @classmethod
    def coerce(cls, value):
        if isinstance(value, Coeff):
            return value
        if isinstance(value, (Rational, int)):
            return cls.const(value)
        if isinstance(value, str):
            return cls.symbol(value)
        raise TypeError(f"cannot coerce {value!r} to Coeff")

    # inspection -------------------------------------------------------
    @property
    def terms(self):
        return dict(self._terms)

    def items(self):
        """Terms in canonical order."""
        return sorted(self._terms.items(), key=lambda kv: _term_key(kv[0]))

    def symbols(self):
        return {name for mono in self._terms for name, _ in mono}

    def is_zero(self):
        return not self._terms

    def is_cnumber(self):
        """True if only alpha, beta and i occur."""
        return self.symbols() <= CNUMBER_SYMBOLS

    def constant_value(self):
        """The rational value if this is a pure number, else None."""
        if not self._terms:
            return Fraction(0)
        if set(self._terms) == {()}:
            return self._terms[()]
        return None

    # arithmetic -------------------------------------------------------
    def __add__(self, other):
        other = Coeff.coerce(other)
        out = dict(self._terms)
        for mono, c in other._terms.items():
            out[mono] = out.get(mono, Fraction(0)) + c
        return Coeff(out)

    __radd__ = __add__

    def __neg__(self):
        return Coeff({m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-Coeff.coerce(other))

    def __rsub__(self, other):
        return Coeff.coerce(other) - self

    def __mul__(self, other):
        other = Coeff.coerce(other)
        out = {}
        for ma, ca in self._terms.items():
            for mb, cb in other._terms.items():
                sign, mono = _mono_mul(ma, mb)
                out[mono] = out.get(mono, Fraction(0)) + sign * ca * cb
        return Coeff(out)

    __rmul__ = __mul__

    def __pow__(self, n):
        if not isinstance(n, int) or n < 0:
            raise ValueError("only non-negative integer powers")
        out = Coeff.const(1)
        for _ in range(n):
            out = out * self
        return out

    def __truediv__(self, number):
        if not isinstance(number, (Rational, int)) or number == 0:
            raise ValueError("Coeff can only be divided by a non-zero rational")
        return Coeff({m: c / number for m, c in self._terms.items()})

    def __eq__(self, other):
        try:
            other = Coeff.coerce(other)
        except TypeError:
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    # calculus and maps --------------------------------------------------
    def diff(self, order=1):
        """d/dx applied ``order`` times (linear, Leibniz rule on monomials)."""
        out = self
        for _ in range(order):
            out = out._diff1()
        return out

    def _diff1(self):
        result = {}
        for mono, c in self._terms.items():
            for idx, (name, k) in enumerate(mono):
                if name == "x":
                    d = Coeff.const(1)
                elif is_function_symbol(name):
                    d = Coeff.symbol(name + "'")
                else:
                    continue
                rest = mono[:idx] + ((name, k - 1),) + mono[idx + 1:]
                rest = tuple((n, p) for n, p in rest if p)
                term = Coeff({rest: c * k}) * d
                for m2, c2 in term._terms.items():
                    result[m2] = result.get(m2, Fraction(0)) + c2
        return Coeff(result)

    def conjugate(self):
        """Complex conjugate; every symbol other than i is real."""
        return Coeff({m: (-c if dict(m).get("i") else c) for m, c in self._terms.items()})

    def substitute(self, mapping):
        """Replace symbols by Coeff values.

        A function symbol ``f`` in ``mapping`` also replaces its primes,
        ``f'`` by ``d/dx mapping[f]`` and so on.
        """
        mapping = {k: Coeff.coerce(v) for k, v in mapping.items()}
        cache = {}

        def image(name):
            if name in cache:
                return cache[name]
            if name in mapping:
                val = mapping[name]
            else:
                b = base_name(name)
                if b != name and b in mapping and is_function_symbol(b):
                    val = mapping[b].diff(derivative_order(name))
                else:
                    val = Coeff.symbol(name)
            cache[name] = val
            return val

        out = Coeff()
        for mono, c in self._terms.items():
            term = Coeff.const(c)
            for name, k in mono:
                term = term * image(name) ** k
            out = out + term
        return out

    def split(self, is_basis):
        """Group terms by the product of symbols for which ``is_basis`` holds.

        Returns ``{basis_monomial: Coeff}``, the coefficient carrying the
        remaining symbols.
        """
        groups = {}
        for mono, c in self._terms.items():
            key = tuple((n, k) for n, k in mono if is_basis(n))
            rest = tuple((n, k) for n, k in mono if not is_basis(n))
            groups.setdefault(key, {})
            groups[key][rest] = groups[key].get(rest, Fraction(0)) + c
        return {k: Coeff(v) for k, v in groups.items()}

    # display ---------------------------------------------------------
    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for mono, c in self.items():
            factors = [n if k == 1 else f"{n}^{k}" for n, k in mono]
            mag = abs(c)
            if not factors:
                body = str(mag)
            elif mag == 1:
                body = "*".join(factors)
            else:
                body = f"{mag}*" + "*".join(factors)
            parts.append(("-" if c < 0 else "+", body))
        text = ("-" if parts[0][0] == "-" else "") + parts[0][1]
        for sign, body in parts[1:]:
            text += f" {sign} {body}"
        return text

    def __repr__(self):
        return f"Coeff({str(self)!r})"


ZERO = Coeff()
ONE = Coeff.const(1)
I = Coeff.symbol("i")
