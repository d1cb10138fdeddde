"""The PDEM generator set, its commutator table with H and the LR ODE system.

Generators (mu = 1/(2m), u a function of x)::

    O1 = p      O2 = x      O3 = p mu    O4 = mu p
    O5 = u      O6 = mu     O7 = p mu p          H = p mu p + u

The allowed family substitutes ``mu = -(c0 + alpha x)`` and
``u = V0 + beta x`` so that ``mu' = -alpha`` and ``u' = beta``.
"""

from dataclasses import dataclass, field
from fractions import Fraction

from ..errors import NotCNumber
from .coeff import CNUMBER_SYMBOLS, I, ONE, ZERO, Coeff, _term_key
from .operators import P, X, OperatorExpr, commutator
from .parser import parse

GENERATOR_LABELS = ("O1", "O2", "O3", "O4", "O5", "O6", "O7")
ALGEBRA_LABELS = ("O2", "O3", "O4", "O6", "O7")
SPAN_LABELS = ("O2", "O3", "O4", "O6", "O7", "1")

MU = Coeff.symbol("mu")
U = Coeff.symbol("u")
ALLOWED_MU = -(Coeff.symbol("c0") + Coeff.symbol("alpha") * Coeff.symbol("x"))
ALLOWED_U = Coeff.symbol("V0") + Coeff.symbol("beta") * Coeff.symbol("x")

# Right-hand sides of [H, O_k] as printed, written over the specialised
# generators (mu' = -alpha, u' = beta already applied).
PRINTED_TABLE = {
    "O1": "-i*p*alpha*p + i*beta",
    "O2": "-i*O3 - i*O4",
    "O3": "i*alpha*O7 + i*beta*O6",
    "O4": "-i*alpha*O7 + i*beta*O6",
    "O5": "-i*O3*beta - i*beta*O4",
    "O6": "i*alpha*O4 + i*alpha*O3",
    "O7": "i*beta*O3 + i*beta*O4",
}

_a = Coeff.symbol("alpha")
_b = Coeff.symbol("beta")

# Published coefficient system, dA_k/dt + sum_j c[k][j] A_j = 0.
PUBLISHED_ODES = {
    "O2": {},
    "O3": {"O2": ONE, "O6": -_a, "O7": -_b},
    "O4": {"O2": ONE, "O6": -_a, "O7": -_b},
    "O6": {"O3": -_b, "O4": -_b},
    "O7": {"O3": -_a, "O4": -_a},
}


def generators(mu=MU, u=U):
    """Generators O1..O7 and H for inverse-mass ``mu`` and potential ``u``."""
    mu_op = OperatorExpr.scalar(mu)
    u_op = OperatorExpr.scalar(u)
    ops = {
        "O1": P,
        "O2": X,
        "O3": P * mu_op,
        "O4": mu_op * P,
        "O5": u_op,
        "O6": mu_op,
        "O7": P * mu_op * P,
    }
    ops["H"] = ops["O7"] + u_op
    return ops


@dataclass(frozen=True)
class CommutatorTable:
    """``entries[k] = [H, O_k]`` computed for a given mu and u."""

    mu: Coeff
    u: Coeff
    entries: dict

    @classmethod
    def compute(cls, mu=MU, u=U):
        ops = generators(mu, u)
        entries = {k: commutator(ops["H"], ops[k]) for k in GENERATOR_LABELS}
        return cls(mu, u, entries)

    def specialize(self, mapping):
        mapping = {k: Coeff.coerce(v) for k, v in mapping.items()}
        return CommutatorTable(
            self.mu.substitute(mapping),
            self.u.substitute(mapping),
            {k: v.substitute(mapping) for k, v in self.entries.items()},
        )


def allowed_table():
    """Commutator table after mu -> -(c0 + alpha x), u -> V0 + beta x."""
    return CommutatorTable.compute().specialize({"mu": ALLOWED_MU, "u": ALLOWED_U})


# --- span decomposition ---------------------------------------------------

def _is_noncnumber(name):
    return name not in CNUMBER_SYMBOLS


def _vectorize(expr):
    """``{(p_power, monomial): c-number Coeff}`` for an operator."""
    out = {}
    for n, c in expr.terms.items():
        for mono, cn in c.split(_is_noncnumber).items():
            if not cn.is_zero():
                out[(n, mono)] = cn
    return out


def _vec_axpy(v, factor, w):
    out = dict(v)
    for k, c in w.items():
        out[k] = out.get(k, ZERO) - factor * c
        if out[k].is_zero():
            del out[k]
    return out


def _combo_axpy(v, factor, w):
    out = dict(v)
    for k, c in w.items():
        out[k] = out.get(k, ZERO) - factor * c
    return out


def _pivot_order(key):
    n, mono = key
    return (-n, _term_key(mono))


def _span_basis(mu, u):
    ops = generators(mu, u)
    # O3 - O4 = -i mu' is a c-number multiple of 1, so O3 and O4 enter through
    # their symmetric sum and always receive equal weights.
    sym = (ops["O3"] + ops["O4"]) * OperatorExpr.scalar(Coeff.const(Fraction(1, 2)))
    half = Coeff.const(Fraction(1, 2))
    return [
        ({"O7": ONE}, ops["O7"]),
        ({"O3": half, "O4": half}, sym),
        ({"O6": ONE}, ops["O6"]),
        ({"O2": ONE}, ops["O2"]),
        ({"1": ONE}, OperatorExpr.scalar(1)),
    ]


def decompose(expr, mu, u):
    """Write ``expr`` over span{O2, O3, O4, O6, O7, 1} with c-number weights.

    Gaussian elimination that only pivots on rational entries, so every
    weight stays a polynomial in alpha, beta, i.  Returns ``(nu, remainder)``;
    a non-zero remainder means ``expr`` is outside the span.
    """
    rows = []
    for combo, op in _span_basis(mu, u):
        v = _vectorize(op)
        combo = dict(combo)
        for pk, pv, rv, rc in rows:
            c = v.get(pk)
            if c is not None:
                factor = c / pv
                v = _vec_axpy(v, factor, rv)
                combo = _combo_axpy(combo, factor, rc)
        pivot = None
        for key in sorted(v, key=_pivot_order):
            val = v[key].constant_value()
            if val:
                pivot = (key, val)
                break
        if pivot is None:
            continue
        rows.append((pivot[0], pivot[1], v, combo))

    target = _vectorize(expr)
    nu = {k: ZERO for k in SPAN_LABELS}
    for pk, pv, rv, rc in rows:
        c = target.get(pk)
        if c is None:
            continue
        factor = c / pv
        target = _vec_axpy(target, factor, rv)
        for k, w in rc.items():
            nu[k] = nu[k] + factor * w
    remainder = OperatorExpr()
    for (n, mono), c in target.items():
        remainder = remainder + OperatorExpr({n: Coeff({mono: 1}) * c})
    return nu, remainder


@dataclass(frozen=True)
class StructureConstantTable:
    """``nu[row][basis]`` with row in O2..O7 (algebra rows) and basis in SPAN_LABELS."""

    nu: dict
    cnumber: dict = field(default_factory=dict)

    def as_strings(self):
        return {r: {k: str(v) for k, v in row.items()} for r, row in self.nu.items()}


def structure_constants(table, rows=ALGEBRA_LABELS):
    """Extract the c-number structure constants of the quasi-algebra.

    Raises :class:`NotCNumber` if any row needs a weight depending on x or on
    a function symbol, i.e. the mass or potential is outside the allowed family.
    """
    nu = {}
    flags = {}
    for r in rows:
        weights, remainder = decompose(table.entries[r], table.mu, table.u)
        ok = remainder.is_zero() and all(w.is_cnumber() for w in weights.values())
        if not ok:
            raise NotCNumber(f"[H,{r}] has no c-number expansion; leftover {remainder}")
        nu[r] = weights
        flags[r] = ok
    return StructureConstantTable(nu, flags)


def coefficient_odes(sc):
    """Coefficient system implied by dI/dt + (1/i)[I, H] = 0.

    With I = sum_j A_j O_j and [H, O_j] = sum_k nu[j][k] O_k the O_k
    component reads dA_k/dt + sum_j i nu[j][k] A_j = 0.  Returned as
    ``{k: {j: c_kj}}`` with zero entries dropped.
    """
    out = {}
    for k in ALGEBRA_LABELS:
        row = {}
        for j in ALGEBRA_LABELS:
            c = I * sc.nu[j][k]
            if not c.is_zero():
                row[j] = c
        out[k] = row
    return out


def identity_components(sc):
    """Weights on the identity, which the ansatz cannot absorb."""
    return {j: sc.nu[j]["1"] for j in ALGEBRA_LABELS}


def printed_rhs(label, mu=ALLOWED_MU, u=ALLOWED_U, printed=PRINTED_TABLE):
    ops = generators(mu, u)
    names = {k: ops[k] for k in GENERATOR_LABELS}
    names["H"] = ops["H"]
    return parse(printed[label], names=names)


def odes_equal(a, b):
    if set(a) != set(b):
        return False
    return all(
        {j: c for j, c in a[k].items() if not c.is_zero()}
        == {j: Coeff.coerce(c) for j, c in b[k].items() if not Coeff.coerce(c).is_zero()}
        for k in a
    )


def format_odes(odes):
    lines = []
    for k, row in odes.items():
        text = f"dA{k[1:]}/dt"
        for j, c in row.items():
            text += f" + ({c})*A{j[1:]}"
        lines.append(text + " = 0")
    return lines


@dataclass
class TableRow:
    generator: str
    lhs: str
    computed: str
    generic: str
    in_span: bool
    matches_published: bool
    published: str
    structure_constants: dict


@dataclass
class GeneratorReport:
    rows: list
    odes: dict
    odes_match_published: bool
    printed_sign_odes: dict
    printed_sign_odes_match_published: bool
    o4_alpha_coefficient: str

    def to_dict(self):
        return {
            "rows": [
                {
                    "generator": r.generator,
                    "lhs": r.lhs,
                    "computed": r.computed,
                    "generic": r.generic,
                    "in_span": r.in_span,
                    "matches_published": r.matches_published,
                    "published": r.published,
                    "structure_constants": r.structure_constants,
                }
                for r in self.rows
            ],
            "coefficient_odes": format_odes(self.odes),
            "odes_match_published": self.odes_match_published,
            "printed_sign_coefficient_odes": format_odes(self.printed_sign_odes),
            "printed_sign_odes_match_published": self.printed_sign_odes_match_published,
            "computed_O4_O7_coefficient": self.o4_alpha_coefficient,
        }


def verify_generator_table():
    """Recompute all seven commutators and compare with the printed table.

    Discrepancies are reported in the rows, never raised.
    """
    generic = CommutatorTable.compute()
    table = generic.specialize({"mu": ALLOWED_MU, "u": ALLOWED_U})
    rows = []
    for k in GENERATOR_LABELS:
        expr = table.entries[k]
        weights, remainder = decompose(expr, table.mu, table.u)
        in_span = remainder.is_zero() and all(w.is_cnumber() for w in weights.values())
        printed = printed_rhs(k)
        rows.append(
            TableRow(
                generator=k,
                lhs=f"[H,{k}]",
                computed=str(expr),
                generic=str(generic.entries[k]),
                in_span=in_span,
                matches_published=(expr == printed),
                published=PRINTED_TABLE[k],
                structure_constants={
                    b: str(w) for b, w in weights.items() if not w.is_zero()
                } if in_span else {},
            )
        )

    sc = structure_constants(table)
    odes = coefficient_odes(sc)

    # the same system with [H,O4] taken as printed
    printed_nu = dict(sc.nu)
    w, _ = decompose(printed_rhs("O4"), table.mu, table.u)
    printed_nu["O4"] = w
    printed_odes = coefficient_odes(StructureConstantTable(printed_nu))

    return GeneratorReport(
        rows=rows,
        odes=odes,
        odes_match_published=odes_equal(odes, PUBLISHED_ODES),
        printed_sign_odes=printed_odes,
        printed_sign_odes_match_published=odes_equal(printed_odes, PUBLISHED_ODES),
        o4_alpha_coefficient=str(sc.nu["O4"]["O7"]),
    )
