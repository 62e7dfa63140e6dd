"""Obstruction sections δ₁ of T/D and δ₂ of Hom(D, Λ²(T/D)) ≅ D*.

Both are stored as a numerator pair over a power of the Cramer denominator
``den = det(X1, X2, comp1, comp2)``.  Common factors of the numerators are
never cancelled, so their zero sets are exactly the degeneration loci.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache

import numpy as np

from .errors import NotOnZeroSet, WellDefinednessViolated
from .symcalc import (DIM, PolyExpr, VectorField, det_columns, evaluate, lie_bracket,
                      quotient_components, random_poly)

DELTA1 = "delta1"
DELTA2 = "delta2"


@dataclass(frozen=True, eq=False)
class SectionRep:
    kind: str
    numerators: tuple
    denominator: PolyExpr
    frame: object
    complement: object
    extension: VectorField = None
    den_power: int = 1

    @cached_property
    def compiled(self):
        return CompiledSection(self)

    def at(self, p):
        """Components (num_i / den^k) at p; exact for rational p."""
        den = evaluate(self.denominator, p) ** self.den_power
        return tuple(evaluate(n, p) / den for n in self.numerators)

    def numerators_at(self, p):
        return tuple(evaluate(n, p) for n in self.numerators)

    def jacobian_exact(self, p):
        return [[evaluate(n.diff(j + 1), p) for j in range(DIM)] for n in self.numerators]

    def __repr__(self):
        return (f"SectionRep({self.kind}, num=({self.numerators[0]}, {self.numerators[1]}),"
                f" den={self.denominator}^{self.den_power})")


class CompiledSection:
    """Vectorized float evaluation of numerators, their Jacobian and the denominator."""

    def __init__(self, s):
        self.nums = [n.compiled for n in s.numerators]
        self.grads = [[n.diff(j + 1).compiled for j in range(DIM)] for n in s.numerators]
        self.den = s.denominator.compiled

    def values(self, pts):
        pts = np.asarray(pts, dtype=float)
        return np.stack([f(pts) for f in self.nums], axis=-1)

    def jacobian(self, pts):
        pts = np.asarray(pts, dtype=float)
        return np.stack([np.stack([g(pts) for g in row], axis=-1) for row in self.grads], axis=-2)

    def denominator(self, pts):
        return self.den(np.asarray(pts, dtype=float))


def _delta1_vector(fr):
    v = lie_bracket(fr.v1, fr.v2)
    return v if fr.orientation == 1 else -v


@lru_cache(maxsize=256)
def delta1(fr, comp):
    """δ₁ = [X1, X2] mod D in the complement basis (sign follows the frame orientation)."""
    n1, n2, den = quotient_components(_delta1_vector(fr), fr, comp)
    return SectionRep(DELTA1, (n1, n2), den, fr, comp)


def _delta2_numerators(fr, comp, ext):
    c1, c2, den = quotient_components(ext, fr, comp)
    nums = []
    for xi in fr:
        d1, d2, _ = quotient_components(lie_bracket(xi, ext), fr, comp)
        nums.append(c1 * d2 - c2 * d1)
    return tuple(nums), den


@lru_cache(maxsize=256)
def delta2(fr, comp):
    """δ₂(X_i) = δ₁ ∧ ([X_i, δ̃₁] mod D), with δ̃₁ = [X1, X2] and Λ²(T/D)
    trivialized by comp1 ∧ comp2.  Components are num_i / den²."""
    ext = _delta1_vector(fr)
    nums, den = _delta2_numerators(fr, comp, ext)
    return SectionRep(DELTA2, nums, den, fr, comp, extension=ext, den_power=2)


def companion(s, kind):
    return delta1(s.frame, s.complement) if kind == DELTA1 else delta2(s.frame, s.complement)


def c_equations(fr, comp):
    """Polynomial system cutting out C = Σ₁ ∩ Σ₂: δ₁ numerators and
    det(X1, X2, [X1, δ̃₁], [X2, δ̃₁])."""
    s1 = delta1(fr, comp)
    ext = _delta1_vector(fr)
    e = det_columns(fr.v1, fr.v2, lie_bracket(fr.v1, ext), lie_bracket(fr.v2, ext))
    return (s1.numerators[0], s1.numerators[1], e)


@dataclass
class WellDefinednessReport:
    trials: int
    skipped: int
    max_deviation: object
    ok: bool
    samples: list = field(default_factory=list)

    def to_dict(self):
        return {"trials": self.trials, "skipped": self.skipped,
                "max_deviation": float(self.max_deviation), "ok": self.ok}


def _random_rational(rng, lo, hi, denom=16):
    lo_n = int(np.floor(lo * denom))
    hi_n = int(np.ceil(hi * denom))
    return Fraction(rng.randint(lo_n, hi_n), denom)


def _cramer_at(x1, x2, c1, c2, v):
    den = det_columns(x1, x2, c1, c2)
    return det_columns(x1, x2, v, c2) / den, det_columns(x1, x2, c1, v) / den


def check_welldefined_delta2(fr, comp, trials=50, tol=0, seed=0, box=None, degree=2):
    """Recompute δ₂(q)(v) with perturbed extensions of δ₁ and of v.

    δ̃₁ is replaced by δ̃₁ + g1 X1 + g2 X2 and v by its extension
    (a + h1) X1 + (b + h2) X2 with h_i(q) = 0, for random polynomials.
    """
    rng = random.Random(seed)
    box = box or [(-1, 1)] * DIM
    s2 = delta2(fr, comp)
    ext = s2.extension
    worst = Fraction(0)
    done = skipped = 0
    samples = []
    while done < trials:
        if skipped > 20 * trials:
            break
        q = tuple(_random_rational(rng, lo, hi) for lo, hi in box)
        den = evaluate(s2.denominator, q)
        if den == 0:
            skipped += 1
            continue
        a, b = Fraction(rng.randint(-5, 5)), Fraction(rng.randint(-5, 5))
        g1, g2 = random_poly(rng, degree), random_poly(rng, degree)
        h1, h2 = random_poly(rng, degree), random_poly(rng, degree)
        h1 = h1 - evaluate(h1, q)
        h2 = h2 - evaluate(h2, q)
        ext2 = ext + g1 * fr.v1 + g2 * fr.v2
        vt = (a + h1) * fr.v1 + (b + h2) * fr.v2
        x1, x2 = fr.v1.at(q), fr.v2.at(q)
        c1, c2 = comp.v1.at(q), comp.v2.at(q)
        cc = _cramer_at(x1, x2, c1, c2, ext2.at(q))
        dd = _cramer_at(x1, x2, c1, c2, lie_bracket(vt, ext2).at(q))
        perturbed = cc[0] * dd[1] - cc[1] * dd[0]
        n1, n2 = s2.numerators_at(q)
        reference = (a * n1 + b * n2) / den**2
        dev = abs(perturbed - reference)
        worst = max(worst, dev)
        samples.append((q, reference, perturbed))
        done += 1
    ok = worst <= tol
    report = WellDefinednessReport(done, skipped, worst, ok, samples)
    if not ok:
        raise WellDefinednessViolated(f"δ₂ depends on the extension: deviation {float(worst)}")
    return report


@dataclass
class Transversality:
    rank: int
    jacobian: list
    residual: float
    singular_values: tuple = ()

    def to_dict(self):
        return {"rank": self.rank, "residual": float(self.residual),
                "jacobian": [[_jsonable(v) for v in row] for row in self.jacobian]}


def _jsonable(v):
    if isinstance(v, Fraction):
        return int(v) if v.denominator == 1 else str(v)
    return float(v)


def transversality_at(s, p, tol=1e-8, rank_tol=1e-6):
    """Jacobian of the numerator pair at a zero p; rank 2 iff transverse.

    Exact for rational p; otherwise the rank uses singular values relative to
    the largest (``rank_tol``)."""
    vals = s.numerators_at(p)
    residual = max(abs(float(v)) for v in vals)
    if residual > tol:
        raise NotOnZeroSet(f"numerator residual {residual:.3g} exceeds {tol:.3g}")
    jac = s.jacobian_exact(p)
    if all(isinstance(v, Fraction) for row in jac for v in row):
        from .flags import exact_rank
        rank = exact_rank(jac)
        sv = tuple(np.linalg.svd(np.array(jac, dtype=float), compute_uv=False))
    else:
        sv = tuple(np.linalg.svd(np.array(jac, dtype=float), compute_uv=False))
        rank = 0 if sv[0] == 0 else int(sum(x > rank_tol * sv[0] for x in sv))
    return Transversality(rank, jac, residual, sv)
