"""Exact polynomial calculus on one 4-dimensional coordinate chart.

Scalars are multivariate polynomials over Q in x1..x4, stored as a map from
exponent 4-tuples to :class:`fractions.Fraction` coefficients.  Vector fields
and 1-forms are 4-tuples of such polynomials.  Everything is immutable.
"""
from __future__ import annotations

from fractions import Fraction
from functools import cached_property
from itertools import product
from numbers import Rational

import numpy as np

from .errors import DegenerateComplement, FrameDependent, NotSolvedForm

DIM = 4
_ZERO_EXP = (0, 0, 0, 0)


def _frac(c):
    if isinstance(c, Fraction):
        return c
    if isinstance(c, (int, Rational)):
        return Fraction(c)
    if isinstance(c, str):
        return Fraction(c)
    if isinstance(c, float):
        return Fraction(c)
    raise TypeError(f"cannot use {c!r} as an exact coefficient")


class PolyExpr:
    """Polynomial in x1..x4 with rational coefficients, kept in canonical form."""

    __slots__ = ("_terms", "_hash", "__dict__")

    def __init__(self, terms=None):
        clean = {}
        if terms:
            for exp, c in terms.items():
                exp = tuple(int(e) for e in exp)
                if len(exp) != DIM or min(exp) < 0:
                    raise ValueError(f"bad exponent {exp}")
                c = _frac(c)
                if c:
                    clean[exp] = clean.get(exp, 0) + c
                    if not clean[exp]:
                        del clean[exp]
        self._terms = clean
        self._hash = None

    # construction helpers
    @classmethod
    def const(cls, c):
        return cls({_ZERO_EXP: c})

    @classmethod
    def var(cls, axis):
        """The coordinate function x_axis (axis is 1-based)."""
        exp = [0] * DIM
        exp[axis - 1] = 1
        return cls({tuple(exp): 1})

    @classmethod
    def coerce(cls, other):
        if isinstance(other, PolyExpr):
            return other
        return cls.const(other)

    @property
    def terms(self):
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def is_zero(self):
        return not self._terms

    def is_constant(self):
        return all(e == _ZERO_EXP for e in self._terms)

    def constant_term(self):
        return self._terms.get(_ZERO_EXP, Fraction(0))

    @property
    def degree(self):
        """Total degree; -1 for the zero polynomial."""
        return max((sum(e) for e in self._terms), default=-1)

    def variables(self):
        used = set()
        for e in self._terms:
            used.update(i + 1 for i, k in enumerate(e) if k)
        return used

    # arithmetic
    def __add__(self, other):
        if not isinstance(other, PolyExpr):
            try:
                other = PolyExpr.const(other)
            except TypeError:
                return NotImplemented
        out = dict(self._terms)
        for e, c in other._terms.items():
            out[e] = out.get(e, 0) + c
        return PolyExpr(out)

    __radd__ = __add__

    def __neg__(self):
        return PolyExpr({e: -c for e, c in self._terms.items()})

    def __sub__(self, other):
        if not isinstance(other, PolyExpr):
            try:
                other = PolyExpr.const(other)
            except TypeError:
                return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return PolyExpr.coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, PolyExpr):
            if isinstance(other, (VectorField, OneForm)):
                return NotImplemented
            try:
                c = _frac(other)
            except TypeError:
                return NotImplemented
            return PolyExpr({e: c * v for e, v in self._terms.items()})
        out = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                e = (e1[0] + e2[0], e1[1] + e2[1], e1[2] + e2[2], e1[3] + e2[3])
                out[e] = out.get(e, 0) + c1 * c2
        return PolyExpr(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        # division by nonzero constants only
        if isinstance(other, PolyExpr):
            if not other.is_constant() or other.is_zero():
                raise ZeroDivisionError("can only divide a polynomial by a nonzero constant")
            other = other.constant_term()
        c = _frac(other)
        if c == 0:
            raise ZeroDivisionError("division by zero")
        return self * (1 / c)

    def __pow__(self, n):
        if not isinstance(n, int) or n < 0:
            raise ValueError("exponent must be a non-negative integer")
        result = PolyExpr.const(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, PolyExpr):
            return self._terms == other._terms
        try:
            return self._terms == PolyExpr.const(other)._terms
        except TypeError:
            return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def __bool__(self):
        return bool(self._terms)

    # calculus
    def diff(self, axis):
        i = axis - 1
        out = {}
        for e, c in self._terms.items():
            k = e[i]
            if k:
                ne = list(e)
                ne[i] = k - 1
                out[tuple(ne)] = c * k
        return PolyExpr(out)

    def __call__(self, point):
        return evaluate(self, point)

    def subs(self, values):
        """Substitute polynomials for coordinates: ``values`` maps axis -> PolyExpr."""
        images = [values.get(i + 1, PolyExpr.var(i + 1)) for i in range(DIM)]
        images = [PolyExpr.coerce(v) for v in images]
        out = PolyExpr()
        for e, c in self._terms.items():
            term = PolyExpr.const(c)
            for img, k in zip(images, e):
                if k:
                    term = term * img**k
            out = out + term
        return out

    @cached_property
    def compiled(self):
        return CompiledPoly(self)

    def __repr__(self):
        return f"PolyExpr({self})"

    def __str__(self):
        return format_poly(self)


def _monomial_str(exp):
    parts = []
    for i, k in enumerate(exp):
        if k == 1:
            parts.append(f"x{i + 1}")
        elif k > 1:
            parts.append(f"x{i + 1}^{k}")
    return "*".join(parts)


def _term_order(exp):
    return (sum(exp), tuple(-k for k in exp))


def format_poly(p):
    """Render in the model-DSL expression syntax (re-parsable)."""
    if p.is_zero():
        return "0"
    out = []
    for exp in sorted(p._terms, key=_term_order):
        c = p._terms[exp]
        sign = "-" if c < 0 else "+"
        a = abs(c)
        mono = _monomial_str(exp)
        if not mono:
            body = str(a)
        elif a == 1:
            body = mono
        else:
            body = f"{a}*{mono}"
        out.append((sign, body))
    first_sign, first = out[0]
    text = ("-" if first_sign == "-" else "") + first
    for sign, body in out[1:]:
        text += f" {sign} {body}"
    return text


class CompiledPoly:
    """Float evaluation of a PolyExpr over arrays of points."""

    def __init__(self, p):
        items = sorted(p.items())
        if items:
            self.exps = np.array([e for e, _ in items], dtype=np.int64)
            self.coeffs = np.array([float(c) for _, c in items])
        else:
            self.exps = np.zeros((0, DIM), dtype=np.int64)
            self.coeffs = np.zeros(0)

    def __call__(self, points):
        pts = np.asarray(points, dtype=float)
        flat = pts.reshape(-1, DIM)
        if not len(self.coeffs):
            return np.zeros(flat.shape[0]).reshape(pts.shape[:-1])
        mons = np.prod(flat[:, None, :] ** self.exps[None, :, :], axis=2)
        return (mons @ self.coeffs).reshape(pts.shape[:-1])


def evaluate(e, point):
    """Exact value at a rational point; float arithmetic if the point has floats."""
    pt = tuple(point)
    if len(pt) != DIM:
        raise ValueError("points have 4 coordinates")
    if all(isinstance(v, (int, Fraction)) for v in pt):
        pt = tuple(Fraction(v) for v in pt)
        total = Fraction(0)
    else:
        pt = tuple(float(v) for v in pt)
        total = 0.0
    cache = {}
    for exp, c in e.items():
        term = c if isinstance(total, Fraction) else float(c)
        for i, k in enumerate(exp):
            if k:
                key = (i, k)
                if key not in cache:
                    cache[key] = pt[i] ** k
                term = term * cache[key]
        total = total + term
    return total


def differentiate(e, axis):
    return e.diff(axis)


class _Tuple4:
    """Common behaviour of VectorField and OneForm."""

    __slots__ = ("components",)
    _basis = "e"

    def __init__(self, components):
        comps = tuple(PolyExpr.coerce(c) for c in components)
        if len(comps) != DIM:
            raise ValueError("need exactly 4 components")
        object.__setattr__(self, "components", comps)

    def __setattr__(self, *_):
        raise AttributeError("immutable")

    @classmethod
    def zero(cls):
        return cls([0] * DIM)

    @classmethod
    def basis(cls, axis):
        return cls([1 if i == axis - 1 else 0 for i in range(DIM)])

    def __getitem__(self, i):
        return self.components[i]

    def __iter__(self):
        return iter(self.components)

    def __len__(self):
        return DIM

    def __add__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        return type(self)(a + b for a, b in zip(self, other))

    def __sub__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        return type(self)(a - b for a, b in zip(self, other))

    def __neg__(self):
        return type(self)(-a for a in self)

    def __mul__(self, scalar):
        if isinstance(scalar, _Tuple4):
            return NotImplemented
        s = PolyExpr.coerce(scalar)
        return type(self)(s * a for a in self)

    __rmul__ = __mul__

    def __eq__(self, other):
        return type(other) is type(self) and self.components == other.components

    def __hash__(self):
        return hash((type(self).__name__, self.components))

    def is_zero(self):
        return all(c.is_zero() for c in self)

    @property
    def degree(self):
        return max(c.degree for c in self)

    def at(self, point):
        return tuple(evaluate(c, point) for c in self)

    def at_float(self, points):
        pts = np.asarray(points, dtype=float)
        return np.stack([c.compiled(pts) for c in self], axis=-1)

    def __str__(self):
        parts = []
        for i, c in enumerate(self):
            if c.is_zero():
                continue
            name = f"{self._basis}{i + 1}"
            if c == 1:
                parts.append(("+", name))
            elif c == -1:
                parts.append(("-", name))
            elif len(c.terms) == 1:
                (exp, coef), = c.items()
                sign = "-" if coef < 0 else "+"
                inner = format_poly(-c if coef < 0 else c)
                parts.append((sign, f"{inner}*{name}"))
            else:
                parts.append(("+", f"({c})*{name}"))
        if not parts:
            return "0"
        text = ("-" if parts[0][0] == "-" else "") + parts[0][1]
        for sign, body in parts[1:]:
            text += f" {sign} {body}"
        return text

    def __repr__(self):
        return f"{type(self).__name__}({self})"


class VectorField(_Tuple4):
    """Polynomial vector field sum_i c_i d_i."""

    _basis = "d"

    def apply(self, f):
        """Directional derivative V(f)."""
        out = PolyExpr()
        for i, c in enumerate(self.components):
            if not c.is_zero():
                out = out + c * f.diff(i + 1)
        return out


class OneForm(_Tuple4):
    """Polynomial 1-form sum_i c_i dx_i."""

    _basis = "dx"

    def pair(self, v):
        out = PolyExpr()
        for a, b in zip(self, v):
            out = out + a * b
        return out


def lie_bracket(v, w):
    """[V, W]_i = sum_j (V_j d_j W_i - W_j d_j V_i)."""
    return VectorField(v.apply(wi) - w.apply(vi) for vi, wi in zip(v, w))


def det(rows):
    """Determinant of a small square matrix over any commutative ring."""
    n = len(rows)
    if n == 1:
        return rows[0][0]
    if n == 2:
        return rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0]
    total = None
    for j in range(n):
        a = rows[0][j]
        if isinstance(a, PolyExpr) and a.is_zero():
            continue
        if not isinstance(a, PolyExpr) and a == 0:
            continue
        minor = [r[:j] + r[j + 1:] for r in rows[1:]]
        term = a * det(minor)
        if j % 2:
            term = -term
        total = term if total is None else total + term
    if total is None:
        return PolyExpr() if isinstance(rows[0][0], PolyExpr) else 0 * rows[0][0]
    return total


def det_columns(*vectors):
    """det of the 4x4 matrix whose columns are the given vectors."""
    cols = [tuple(v) for v in vectors]
    rows = [[c[i] for c in cols] for i in range(len(cols))]
    return det(rows)


class Frame2:
    """Ordered pair of vector fields spanning a rank-2 distribution.

    ``orientation`` is +1 when (v1, v2) is the positive ordering of D.
    """

    __slots__ = ("v1", "v2", "orientation")

    def __init__(self, v1, v2, orientation=1):
        if orientation not in (1, -1):
            raise ValueError("orientation must be +1 or -1")
        object.__setattr__(self, "v1", v1)
        object.__setattr__(self, "v2", v2)
        object.__setattr__(self, "orientation", orientation)

    def __setattr__(self, *_):
        raise AttributeError("immutable")

    def __iter__(self):
        return iter((self.v1, self.v2))

    def __getitem__(self, i):
        return (self.v1, self.v2)[i]

    def __eq__(self, other):
        return (isinstance(other, Frame2) and self.v1 == other.v1
                and self.v2 == other.v2 and self.orientation == other.orientation)

    def __hash__(self):
        return hash((self.v1, self.v2, self.orientation))

    def __repr__(self):
        return f"Frame2({self.v1}, {self.v2}, orientation={self.orientation})"

    def reversed(self):
        return Frame2(self.v1, self.v2, -self.orientation)

    def swapped(self):
        return Frame2(self.v2, self.v1, self.orientation)

    def scaled(self, g):
        return Frame2(g * self.v1, g * self.v2, self.orientation)

    def check_independent(self, box, grid=5, tol=1e-9):
        """Raise FrameDependent unless the frame has rank 2 at every grid point of ``box``."""
        axes = [np.linspace(lo, hi, grid) for lo, hi in box]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, DIM)
        m = np.stack([self.v1.at_float(pts), self.v2.at_float(pts)], axis=-1)
        s = np.linalg.svd(m, compute_uv=False)
        scale = np.maximum(s[:, 0], 1.0)
        bad = s[:, 1] <= tol * scale
        if bad.any():
            raise FrameDependent(f"frame is dependent at {pts[np.argmax(bad)].tolist()}")
        return True


class Coframe2:
    """Pair of 1-forms whose common kernel is the distribution."""

    __slots__ = ("w1", "w2", "orientation")

    def __init__(self, w1, w2, orientation=1):
        object.__setattr__(self, "w1", w1)
        object.__setattr__(self, "w2", w2)
        object.__setattr__(self, "orientation", orientation)

    def __setattr__(self, *_):
        raise AttributeError("immutable")

    def __iter__(self):
        return iter((self.w1, self.w2))

    def __eq__(self, other):
        return (isinstance(other, Coframe2) and self.w1 == other.w1
                and self.w2 == other.w2 and self.orientation == other.orientation)

    def __hash__(self):
        return hash((self.w1, self.w2, self.orientation))


def _pivots(c):
    w1, w2 = c.w1, c.w2
    for a1 in range(DIM):
        for a2 in range(DIM):
            if a1 == a2:
                continue
            if w1[a1] == 1 and w1[a2] == 0 and w2[a2] == 1 and w2[a1] == 0:
                return a1, a2
    return None


def coframe_to_frame(c):
    """Kernel frame of a coframe in solved form.

    The two free axes (ascending) give the frame vectors
    d_b - w1[b] d_{a1} - w2[b] d_{a2}.
    """
    piv = _pivots(c)
    if piv is None:
        raise NotSolvedForm("coframe has no unit-pivot pair")
    a1, a2 = piv
    free = [b for b in range(DIM) if b not in piv]
    vecs = []
    for b in free:
        comps = [PolyExpr() for _ in range(DIM)]
        comps[b] = PolyExpr.const(1)
        comps[a1] = -c.w1[b]
        comps[a2] = -c.w2[b]
        vecs.append(VectorField(comps))
    fr = Frame2(vecs[0], vecs[1], c.orientation)
    for w in c:
        for v in fr:
            assert w.pair(v).is_zero()
    return fr


def quotient_components(v, fr, comp):
    """Components of V modulo span(fr) in the basis comp, by Cramer's rule.

    Returns (num1, num2, den) with V = (num1/den) comp1 + (num2/den) comp2 mod D.
    """
    f1, f2 = fr.v1, fr.v2
    c1, c2 = comp.v1, comp.v2
    den = det_columns(f1, f2, c1, c2)
    if den.is_zero():
        raise DegenerateComplement("frame and complement do not span the tangent space")
    num1 = det_columns(f1, f2, v, c2)
    num2 = det_columns(f1, f2, c1, v)
    return num1, num2, den


def coordinate_frame(a, b, orientation=1):
    return Frame2(VectorField.basis(a), VectorField.basis(b), orientation)


def x(axis):
    return PolyExpr.var(axis)


def d(axis):
    return VectorField.basis(axis)


def dx(axis):
    return OneForm.basis(axis)


def random_poly(rng, degree=2, coeff_range=3, density=0.5):
    """Random polynomial with small integer coefficients (tests and diagnostics)."""
    terms = {}
    for exp in product(range(degree + 1), repeat=DIM):
        if sum(exp) <= degree and rng.random() < density:
            terms[exp] = rng.randint(-coeff_range, coeff_range)
    return PolyExpr(terms)
