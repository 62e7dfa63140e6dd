"""Z/2 characteristic-class formulas in a finitely presented graded Z/2 algebra.

A presentation lists basis labels per degree and a sparse multiplication
table.  Elements are sets of basis indices (coefficients in Z/2).
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from itertools import combinations_with_replacement, product

from .errors import BadPresentation, DegreeMismatch, PresentationMismatch


class Z2RingPresentation:
    def __init__(self, degrees, mul, name=None):
        labels, degs = [], []
        for d, names in enumerate(degrees):
            for lab in names:
                labels.append(str(lab))
                degs.append(d)
        if not degrees or len(degrees[0]) != 1:
            raise BadPresentation("degree 0 must have exactly one basis element (the unit)")
        if len(set(labels)) != len(labels):
            raise BadPresentation("basis labels must be distinct")
        self.labels = tuple(labels)
        self.degrees = tuple(degs)
        self.top = len(degrees) - 1
        self.name = name
        self.index = {lab: i for i, lab in enumerate(labels)}
        n = len(labels)
        table = {}
        for entry in _flatten(mul):
            i, j, k, bit = (int(v) for v in entry)
            if not all(0 <= t < n for t in (i, j, k)):
                raise BadPresentation(f"index out of range in {entry}")
            if bit % 2 == 0:
                continue
            if degs[k] != degs[i] + degs[j]:
                raise BadPresentation(f"product {labels[i]}*{labels[j]} -> {labels[k]} breaks the grading")
            table.setdefault((i, j), set()).symmetric_difference_update({k})
        for i in range(n):
            table[(0, i)] = {i}
            table[(i, 0)] = {i}
        self._table = {key: frozenset(v) for key, v in table.items()}
        self._check()

    def product_of_basis(self, i, j):
        return self._table.get((i, j), frozenset())

    def _mul_sets(self, a, b):
        out = set()
        for i in a:
            for j in b:
                out.symmetric_difference_update(self.product_of_basis(i, j))
        return frozenset(out)

    def _check(self):
        n = len(self.labels)
        for i in range(n):
            for j in range(n):
                if self.product_of_basis(i, j) != self.product_of_basis(j, i):
                    raise BadPresentation(f"not commutative on {self.labels[i]}, {self.labels[j]}")
        for i, j, k in product(range(n), repeat=3):
            left = self._mul_sets(self.product_of_basis(i, j), {k})
            right = self._mul_sets({i}, self.product_of_basis(j, k))
            if left != right:
                raise BadPresentation(
                    f"not associative on {self.labels[i]}, {self.labels[j]}, {self.labels[k]}")

    def __eq__(self, other):
        return (isinstance(other, Z2RingPresentation) and self.labels == other.labels
                and self.degrees == other.degrees and self._table == other._table)

    def __hash__(self):
        return hash((self.labels, self.degrees))

    # elements
    def element(self, spec):
        """Element from a label sum like ``"a + b^2 + a*b"``, ``"0"`` or ``"1"``."""
        if isinstance(spec, Z2RingElement):
            return spec
        spec = str(spec).strip()
        total = self.zero()
        if spec in ("", "0"):
            return total
        for term in spec.split("+"):
            term = term.strip()
            value = self.one()
            for factor in term.split("*"):
                factor = factor.strip()
                m = re.fullmatch(r"([A-Za-z_0-9]+)(?:\^(\d+))?", factor)
                if not m:
                    raise BadPresentation(f"cannot parse {factor!r}")
                lab, power = m.group(1), int(m.group(2) or 1)
                if lab == "1":
                    base = self.one()
                elif lab in self.index:
                    base = self.basis(lab)
                else:
                    raise BadPresentation(f"unknown basis label {lab!r}")
                for _ in range(power):
                    value = value * base
            total = total + value
        return total

    def zero(self):
        return Z2RingElement(self, frozenset())

    def one(self):
        return Z2RingElement(self, frozenset({0}))

    def basis(self, label):
        return Z2RingElement(self, frozenset({self.index[label]}))

    def basis_of_degree(self, d):
        return [i for i, g in enumerate(self.degrees) if g == d]

    def random_element(self, rng, degree):
        idx = self.basis_of_degree(degree)
        return Z2RingElement(self, frozenset(i for i in idx if rng.random() < 0.5))

    def to_json(self):
        degrees = [[] for _ in range(self.top + 1)]
        for lab, d in zip(self.labels, self.degrees):
            degrees[d].append(lab)
        mul = [[i, j, k, 1] for (i, j), ks in sorted(self._table.items())
               if i and j for k in sorted(ks)]
        return {"degrees": degrees, "mul": mul}

    @classmethod
    def from_json(cls, data):
        if isinstance(data, str):
            data = json.loads(data)
        try:
            return cls(data["degrees"], data.get("mul", []), data.get("name"))
        except KeyError as exc:
            raise BadPresentation(f"missing key {exc}") from None


def _flatten(mul):
    for entry in mul:
        if entry and isinstance(entry[0], (list, tuple)):
            yield from _flatten(entry)
        else:
            if len(entry) != 4:
                raise BadPresentation(f"multiplication entries are [i, j, k, bit], got {entry}")
            yield entry


@dataclass(frozen=True)
class Z2RingElement:
    ring: Z2RingPresentation
    support: frozenset

    def _check(self, other):
        if not isinstance(other, Z2RingElement):
            return NotImplemented
        if other.ring is not self.ring and other.ring != self.ring:
            raise PresentationMismatch("elements live in different presentations")
        return other

    def __add__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        return Z2RingElement(self.ring, self.support ^ other.support)

    __sub__ = __add__

    def __mul__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        return Z2RingElement(self.ring, self.ring._mul_sets(self.support, other.support))

    def __pow__(self, n):
        out = self.ring.one()
        for _ in range(n):
            out = out * self
        return out

    def is_zero(self):
        return not self.support

    @property
    def degrees(self):
        return {self.ring.degrees[i] for i in self.support}

    def is_homogeneous_of(self, d):
        return self.degrees <= {d}

    def __eq__(self, other):
        return (isinstance(other, Z2RingElement) and self.ring == other.ring
                and self.support == other.support)

    def __hash__(self):
        return hash(self.support)

    def __str__(self):
        if not self.support:
            return "0"
        return " + ".join(self.ring.labels[i] for i in sorted(self.support))


def ring_mul(a, b):
    return a * b


def theorem2_classes(w1D, w2D, w1Q, w2Q):
    """Dual classes of Σ₁, Σ₂, Σ₁ ∪ Σ₂ and Σ₁ ∩ Σ₂ in terms of Stiefel-Whitney classes."""
    ring = w1D.ring
    for name, el, deg in (("w1D", w1D, 1), ("w2D", w2D, 2), ("w1Q", w1Q, 1), ("w2Q", w2Q, 2)):
        if el.ring != ring:
            raise PresentationMismatch(f"{name} is in a different presentation")
        if not el.is_homogeneous_of(deg):
            raise DegreeMismatch(f"{name} must be homogeneous of degree {deg}")
    sigma1 = w1D * w1D + w2D + w2Q
    union = w2D + w1Q * w1Q + w1D * w1Q
    sigma2 = sigma1 + union
    intersection = w1D * sigma1
    return {"sigma1": sigma1, "sigma2": sigma2, "union": union, "intersection": intersection}


def sigma2_closed_form(w1D, w2D, w1Q, w2Q):
    return w1D * w1D + w1Q * w1D + w1Q * w1Q + w2Q


@dataclass(frozen=True)
class CharNumbers:
    euler: int
    signature: int


def existence_criterion(c):
    """Whether a closed oriented 4-manifold with these numbers carries an oriented 2-plane field."""
    chi, tau = c.euler, c.signature
    return chi % 2 == 0 and (chi - tau) % 4 == 0


# presentation builders

def monomial_ring(generators, top=4, killed=(), name=None):
    """Z/2[generators] / (killed monomials, everything above degree ``top``).

    ``generators`` maps names to positive degrees; ``killed`` is an iterable of
    exponent dicts.  Monomial quotients are automatically commutative and
    associative."""
    gens = list(generators.items())
    killed = [dict(k) for k in killed]

    def is_killed(exps):
        return any(all(exps.get(g, 0) >= e for g, e in k.items()) for k in killed)

    monos = {d: [] for d in range(top + 1)}
    ranges = [range(top // deg + 1) for _, deg in gens]
    for exps in product(*ranges):
        d = sum(e * deg for e, (_, deg) in zip(exps, gens))
        if d > top:
            continue
        ed = {g: e for e, (g, _) in zip(exps, gens) if e}
        if is_killed(ed):
            continue
        monos[d].append(tuple(exps))
    for d in monos:
        monos[d].sort(reverse=True)

    def label(exps):
        parts = []
        for e, (g, _) in zip(exps, gens):
            if e == 1:
                parts.append(g)
            elif e > 1:
                parts.append(f"{g}{e}")
        return "".join(parts) or "1"

    degrees = [[label(m) for m in monos[d]] for d in range(top + 1)]
    flat = [m for d in range(top + 1) for m in monos[d]]
    idx = {m: i for i, m in enumerate(flat)}
    mul = []
    for i, a in enumerate(flat):
        for j, b in enumerate(flat):
            c = tuple(x + y for x, y in zip(a, b))
            if c in idx:
                mul.append([i, j, idx[c], 1])
    return Z2RingPresentation(degrees, mul, name)


def truncated_polynomial_ring(gen="a", top=4):
    """Z/2[a]/(a^(top+1)) with a in degree 1; labels a, a2, a3, ..."""
    return monomial_ring({gen: 1}, top, name=f"Z2[{gen}]/({gen}^{top + 1})")


def random_presentation(rng, top=4):
    """A small random monomial presentation with generators in degrees 1 and 2."""
    n1 = rng.randint(1, 3)
    n2 = rng.randint(0, 2)
    names = "abcdefgh"
    gens = {names[i]: 1 for i in range(n1)}
    gens.update({names[n1 + i]: 2 for i in range(n2)})
    killed = []
    g = list(gens)
    for a, b in combinations_with_replacement(g, 2):
        if rng.random() < 0.3:
            k = {a: 1}
            k[b] = k.get(b, 0) + 1
            killed.append(k)
    return monomial_ring(gens, top, killed, name="random")


def random_w_classes(ring, rng):
    return (ring.random_element(rng, 1), ring.random_element(rng, 2),
            ring.random_element(rng, 1), ring.random_element(rng, 2))
