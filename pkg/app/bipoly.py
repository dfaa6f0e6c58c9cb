"""Sparse bivariate polynomials in the main-error parameter p and the
initialization parameter q.

Terms are stored as {(i, j): coeff} meaning coeff * p**i * q**j.
"""
from numbers import Real

PRUNE = 1e-14


class BiPoly:
    __slots__ = ('_terms',)

    def __init__(self, terms=None):
        pruned = {}
        for (i, j), coeff in (terms or {}).items():
            if i < 0 or j < 0:
                raise ValueError(f"negative exponent ({i}, {j})")
            coeff = float(coeff)
            if abs(coeff) >= PRUNE:
                pruned[(int(i), int(j))] = coeff
        self._terms = pruned

    # --- constructors ---
    @classmethod
    def constant(cls, value):
        return cls({(0, 0): value})

    @classmethod
    def p(cls):
        return cls({(1, 0): 1.0})

    @classmethod
    def q(cls):
        return cls({(0, 1): 1.0})

    @classmethod
    def from_json(cls, items):
        terms = {}
        for item in items:
            key = (item['p_pow'], item['q_pow'])
            terms[key] = terms.get(key, 0.0) + item['coeff']
        return cls(terms)

    # --- inspection ---
    @property
    def terms(self):
        return dict(self._terms)

    def coeff(self, i, j):
        return self._terms.get((i, j), 0.0)

    def is_zero(self):
        return not self._terms

    def degree_p(self):
        return max((i for i, _ in self._terms), default=0)

    def degree_q(self):
        return max((j for _, j in self._terms), default=0)

    def canonical_terms(self):
        # graded by total degree, then higher p power first
        return sorted(self._terms.items(), key=lambda kv: (kv[0][0] + kv[0][1], -kv[0][0]))

    def to_json(self):
        return [{'p_pow': i, 'q_pow': j, 'coeff': coeff} for (i, j), coeff in self.canonical_terms()]

    # --- ring operations ---
    def _coerce(self, other):
        if isinstance(other, BiPoly):
            return other
        if isinstance(other, Real):
            return BiPoly.constant(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms = dict(self._terms)
        for key, coeff in other._terms.items():
            terms[key] = terms.get(key, 0.0) + coeff
        return BiPoly(terms)

    __radd__ = __add__

    def __neg__(self):
        return self.scale(-1.0)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Real):
            return self.scale(other)
        if not isinstance(other, BiPoly):
            return NotImplemented
        terms = {}
        for (i1, j1), c1 in self._terms.items():
            for (i2, j2), c2 in other._terms.items():
                key = (i1 + i2, j1 + j2)
                terms[key] = terms.get(key, 0.0) + c1 * c2
        return BiPoly(terms)

    __rmul__ = __mul__

    def __pow__(self, exponent):
        if not isinstance(exponent, int) or exponent < 0:
            raise ValueError("only non-negative integer powers are supported")
        result, base = BiPoly.constant(1.0), self
        while exponent:
            if exponent & 1:
                result = result * base
            base = base * base
            exponent >>= 1
        return result

    def __truediv__(self, other):
        if not isinstance(other, Real):
            return NotImplemented
        return self.scale(1.0 / other)

    def scale(self, factor):
        return BiPoly({key: coeff * float(factor) for key, coeff in self._terms.items()})

    # --- evaluation ---
    def __call__(self, p, q):
        return self.eval(p, q)

    def eval(self, p, q):
        """Horner in q inside each p-coefficient, then Horner in p."""
        if not self._terms:
            return 0.0
        by_p = {}
        for (i, j), coeff in self._terms.items():
            by_p.setdefault(i, {})[j] = coeff
        result = 0.0
        for i in range(self.degree_p(), -1, -1):
            row = by_p.get(i, {})
            inner = 0.0
            for j in range(max(row, default=0), -1, -1):
                inner = inner * q + row.get(j, 0.0)
            result = result * p + inner
        return result

    def coefficient_in_p(self, k):
        """c_k(q): the q-only polynomial multiplying p**k."""
        if k < 0:
            raise ValueError("k must be non-negative")
        return BiPoly({(0, j): coeff for (i, j), coeff in self._terms.items() if i == k})

    # --- comparison ---
    def __eq__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self._terms == other._terms

    def __hash__(self):
        return hash(tuple(self.canonical_terms()))

    def allclose(self, other, atol=1e-12):
        other = self._coerce(other)
        keys = set(self._terms) | set(other._terms)
        return all(abs(self.coeff(*key) - other.coeff(*key)) <= atol for key in keys)

    def __repr__(self):
        if not self._terms:
            return 'BiPoly(0)'
        parts = []
        for (i, j), coeff in self.canonical_terms():
            factors = [f"{coeff:+.12g}"]
            if i:
                factors.append('p' if i == 1 else f'p^{i}')
            if j:
                factors.append('q' if j == 1 else f'q^{j}')
            parts.append('*'.join(factors))
        return 'BiPoly(' + ' '.join(parts) + ')'


def binomial_weight(success, failure, k, n):
    """success**(n - k) * failure**k for polynomial-valued probabilities."""
    return (success ** (n - k)) * (failure ** k)
