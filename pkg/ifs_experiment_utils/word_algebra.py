"""
Cuntz word polynomials sum c S_alpha S_beta* in normal form.

Products are rewritten with the prefix rule for S_beta* S_gamma only, which
keeps the S_alpha S_beta* basis unique. The relation sum_j S_j S_j* = 1 is not
a rewrite; `collapse` applies it on request.

Text grammar: complex literals (2, 0.5, 3i, 1e-3j, i), generators S1..Sn,
postfix adjoint `*`, `+`, `-`, products written with `·` or by juxtaposition,
and parentheses, e.g. "S1*·S1", "(S1S2*)·(S2S1*)", "(2+1i)·(S1S2)*".
"""
import json
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import pyparsing as pp

from ifs_experiment_utils.errors import (
    GeneratorOutOfRange,
    IfsExperimentError,
    InsufficientLevel,
    WordSyntaxError,
)
from ifs_experiment_utils.ifs_core import Word, check_word
from ifs_experiment_utils.opspace import (
    DEFAULT_SIZE_BUDGET,
    LeveledVector,
    apply_coisometry,
    apply_isometry,
    refine,
)

PRUNE_TOLERANCE = 1e-14


@dataclass(frozen=True)
class CuntzTerm:
    coeff: complex
    alpha: Word
    beta: Word

    @property
    def sort_key(self):
        return len(self.alpha), self.alpha, len(self.beta), self.beta

    def to_dict(self):
        return {
            "re": self.coeff.real,
            "im": self.coeff.imag,
            "alpha": list(self.alpha),
            "beta": list(self.beta),
        }


def _format_complex(c):
    sign = "-" if c.imag < 0 or (c.imag == 0 and np.signbit(c.imag)) else "+"
    return f"({c.real!r}{sign}{abs(c.imag)!r}i)"


class CuntzPolynomial:
    """Immutable; `terms` is the sorted normal form with no zero coefficients."""

    __slots__ = ("n", "terms")

    def __init__(self, n, coefficients=None):
        if n < 2:
            raise IfsExperimentError(f"Cuntz words need n >= 2 generators, got {n}")
        merged = {}
        for (alpha, beta), coeff in (coefficients or {}).items():
            key = (check_word(n, alpha), check_word(n, beta))
            merged[key] = merged.get(key, 0j) + complex(coeff)
        terms = [
            CuntzTerm(coeff, alpha, beta)
            for (alpha, beta), coeff in merged.items()
            if abs(coeff) >= PRUNE_TOLERANCE
        ]
        terms.sort(key=lambda t: t.sort_key)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "terms", tuple(terms))

    def __setattr__(self, key, value):
        raise AttributeError("CuntzPolynomial is immutable")

    @classmethod
    def zero(cls, n):
        return cls(n)

    @classmethod
    def scalar(cls, n, value):
        return cls(n, {((), ()): value})

    @classmethod
    def unit(cls, n):
        return cls.scalar(n, 1.0)

    @classmethod
    def generator(cls, n, i):
        if not 1 <= i <= n:
            raise GeneratorOutOfRange(f"generator S{i} outside S1..S{n}")
        return cls(n, {((i,), ()): 1.0})

    @classmethod
    def monomial(cls, n, coeff, alpha, beta):
        return cls(n, {(tuple(alpha), tuple(beta)): coeff})

    @classmethod
    def from_terms(cls, n, terms):
        coefficients = {}
        for t in terms:
            key = (tuple(t.alpha), tuple(t.beta))
            coefficients[key] = coefficients.get(key, 0j) + t.coeff
        return cls(n, coefficients)

    def as_dict(self):
        return {(t.alpha, t.beta): t.coeff for t in self.terms}

    @property
    def is_zero(self):
        return not self.terms

    @property
    def degree(self):
        return max((max(len(t.alpha), len(t.beta)) for t in self.terms), default=0)

    @property
    def max_beta_length(self):
        return max((len(t.beta) for t in self.terms), default=0)

    def _check_compatible(self, other):
        if self.n != other.n:
            raise IfsExperimentError(
                f"polynomials over n={self.n} and n={other.n} generators"
            )

    def __add__(self, other):
        if not isinstance(other, CuntzPolynomial):
            other = CuntzPolynomial.scalar(self.n, other)
        self._check_compatible(other)
        return CuntzPolynomial.from_terms(self.n, self.terms + other.terms)

    __radd__ = __add__

    def __neg__(self):
        return self * -1

    def __sub__(self, other):
        if not isinstance(other, CuntzPolynomial):
            other = CuntzPolynomial.scalar(self.n, other)
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, CuntzPolynomial):
            return wa_multiply(self, other)
        return CuntzPolynomial(
            self.n, {(t.alpha, t.beta): t.coeff * other for t in self.terms}
        )

    def __rmul__(self, scalar):
        return self * scalar

    def __eq__(self, other):
        if not isinstance(other, CuntzPolynomial):
            return NotImplemented
        return self.n == other.n and self.terms == other.terms

    def __hash__(self):
        return hash((self.n, self.terms))

    def allclose(self, other, atol=1e-12):
        self._check_compatible(other)
        difference = self - other
        return all(abs(t.coeff) <= atol for t in difference.terms)

    def adjoint(self):
        return wa_adjoint(self)

    def collapse(self):
        """
        Replaces each full family sum_j c S_{alpha j} S_{beta j}* by the single
        term c S_alpha S_beta*.
        """
        coefficients = self.as_dict()
        changed = True
        while changed:
            changed = False
            for alpha, beta in sorted(coefficients, key=lambda k: (-len(k[0]), k)):
                if not alpha or not beta or alpha[-1] != beta[-1]:
                    continue
                parent = (alpha[:-1], beta[:-1])
                family = [
                    (parent[0] + (j,), parent[1] + (j,)) for j in range(1, self.n + 1)
                ]
                if not all(key in coefficients for key in family):
                    continue
                c = coefficients[family[0]]
                if any(abs(coefficients[key] - c) > PRUNE_TOLERANCE for key in family):
                    continue
                for key in family:
                    del coefficients[key]
                coefficients[parent] = coefficients.get(parent, 0j) + c
                changed = True
                break
        return CuntzPolynomial(self.n, coefficients)

    def __str__(self):
        if self.is_zero:
            return "0"
        rendered = []
        for t in self.terms:
            factors = [_format_complex(t.coeff)]
            factors += [f"S{letter}" for letter in t.alpha]
            factors += [f"S{letter}*" for letter in reversed(t.beta)]
            rendered.append("·".join(factors))
        return " + ".join(rendered)

    def __repr__(self):
        return f"CuntzPolynomial(n={self.n}, {self})"

    def to_json(self):
        return json.dumps([t.to_dict() for t in self.terms])

    @classmethod
    def from_json(cls, n, text):
        coefficients = {}
        for entry in json.loads(text):
            key = (tuple(entry["alpha"]), tuple(entry["beta"]))
            coefficients[key] = coefficients.get(key, 0j) + complex(
                entry["re"], entry["im"]
            )
        return cls(n, coefficients)


def _multiply_terms(t: CuntzTerm, u: CuntzTerm):
    """
    S_a S_b* S_c S_d*. S_b* S_c is S_{c minus b} when b is a prefix of c,
    S_{b minus c}* when c is a prefix of b and 0 otherwise.
    """
    b, c = t.beta, u.alpha
    if c[: len(b)] == b:
        return t.alpha + c[len(b) :], u.beta
    if b[: len(c)] == c:
        return t.alpha, u.beta + b[len(c) :]
    return None


def wa_multiply(p: CuntzPolynomial, q: CuntzPolynomial) -> CuntzPolynomial:
    p._check_compatible(q)
    coefficients = {}
    for t in p.terms:
        for u in q.terms:
            key = _multiply_terms(t, u)
            if key is None:
                continue
            coefficients[key] = coefficients.get(key, 0j) + t.coeff * u.coeff
    return CuntzPolynomial(p.n, coefficients)


def wa_adjoint(p: CuntzPolynomial) -> CuntzPolynomial:
    return CuntzPolynomial(
        p.n, {(t.beta, t.alpha): t.coeff.conjugate() for t in p.terms}
    )


def wa_apply(
    p: CuntzPolynomial,
    v: LeveledVector,
    refine_if_needed=True,
    budget=DEFAULT_SIZE_BUDGET,
) -> LeveledVector:
    """
    Evaluates p on v with S_i -> V_i and S_i* -> V_i*. Term outputs of different
    levels are refined to a common level before summing.
    """
    if p.n != v.n:
        raise IfsExperimentError(f"polynomial over n={p.n}, vector over n={v.n}")
    if v.level < p.max_beta_length:
        if not refine_if_needed:
            raise InsufficientLevel(
                f"vector level {v.level} is below the longest adjoint word ({p.max_beta_length})"
            )
        v = refine(v, p.max_beta_length - v.level, budget)
    outputs = []
    for t in p.terms:
        w = v
        for letter in t.beta:
            w = apply_coisometry(letter, w, refine_if_needed=False, budget=budget)
        for letter in reversed(t.alpha):
            w = apply_isometry(letter, w, budget=budget)
        outputs.append(t.coeff * w)
    if not outputs:
        return LeveledVector.zeros(v.n, v.level)
    level = max(w.level for w in outputs)
    coeffs = sum(refine(w, level - w.level, budget).coeffs for w in outputs)
    return LeveledVector(v.n, level, coeffs)


def _to_complex(literal):
    if literal in ("i", "j"):
        return 1j
    if literal[-1] in "ij":
        return complex(0, float(literal[:-1]))
    return complex(float(literal))


def _apply_adjoints(tokens):
    poly = tokens[0]
    for _ in tokens[1:]:
        poly = wa_adjoint(poly)
    return poly


def _multiply_all(tokens):
    poly = tokens[0]
    for factor in tokens[1:]:
        poly = wa_multiply(poly, factor)
    return poly


def _sum_signed(tokens):
    tokens = list(tokens)
    sign = 1
    if isinstance(tokens[0], str):
        sign = -1 if tokens.pop(0) == "-" else 1
    total = tokens[0] * sign
    for op, poly in zip(tokens[1::2], tokens[2::2]):
        total = total + poly if op == "+" else total - poly
    return total


@lru_cache(maxsize=None)
def _grammar(n):
    def make_generator(s, loc, tokens):
        index = int(tokens[0][1:])
        if not 1 <= index <= n:
            raise GeneratorOutOfRange(
                f"generator S{index} at position {loc} outside S1..S{n}"
            )
        return CuntzPolynomial.generator(n, index)

    expr = pp.Forward()
    number = pp.Regex(r"((\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?[ij]?|[ij](?![A-Za-z0-9]))")
    number.set_parse_action(lambda t: CuntzPolynomial.scalar(n, _to_complex(t[0])))
    generator = pp.Regex(r"S\d+")
    generator.set_parse_action(make_generator)
    atom = generator | number | (pp.Suppress("(") + expr + pp.Suppress(")"))
    postfix = atom + pp.ZeroOrMore(pp.Literal("*"))
    postfix.set_parse_action(_apply_adjoints)
    product = postfix + pp.ZeroOrMore(pp.Optional(pp.Suppress("·")) + postfix)
    product.set_parse_action(_multiply_all)
    sign = pp.one_of("+ -")
    expr <<= pp.Optional(sign) + product + pp.ZeroOrMore(sign + product)
    expr.set_parse_action(_sum_signed)
    return expr


def parse(text, n) -> CuntzPolynomial:
    """Parses a word expression over generators S1..Sn into normal form."""
    try:
        return _grammar(n).parse_string(text, parse_all=True)[0]
    except pp.ParseBaseException as e:
        raise WordSyntaxError(f"cannot parse '{text}': {e.msg}", e.loc) from e


def approximant_polynomial(n, words, coeffs) -> CuntzPolynomial:
    """sum_w c_w S_w S_w*."""
    return CuntzPolynomial(
        n, {(tuple(w), tuple(w)): c for w, c in zip(words, coeffs)}
    )
