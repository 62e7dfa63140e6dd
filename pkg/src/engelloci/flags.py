"""Bracket flag D ⊂ D² ⊂ ... ⊂ T of a rank-2 frame and its pointwise data."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd

import numpy as np

from .errors import DegreeCapExceeded, NotEngelPoint
from .symcalc import DIM, det_columns, lie_bracket

DEFAULT_DEPTH_CAP = 6
DEFAULT_DEGREE_CAP = 64
DEFAULT_RANK_TOL = 1e-9
ENGEL = (2, 3, 4)


@dataclass(frozen=True)
class GrowthVector:
    dims: tuple
    stalled: bool = False

    @property
    def is_engel(self):
        return not self.stalled and self.dims == ENGEL

    def padded(self, n):
        return tuple(self.dims) + (self.dims[-1],) * (n - len(self.dims))

    def __le__(self, other):
        return growth_leq(self, other)

    def to_dict(self):
        return {"dims": list(self.dims), "stalled": self.stalled}

    def __str__(self):
        body = "(" + ",".join(map(str, self.dims)) + ")"
        return body + (" stalled" if self.stalled else "")


def growth_leq(j, i):
    """Componentwise comparison; the shorter vector is padded with its last entry."""
    a = j.dims if isinstance(j, GrowthVector) else tuple(j)
    b = i.dims if isinstance(i, GrowthVector) else tuple(i)
    n = max(len(a), len(b))
    a = tuple(a) + (a[-1],) * (n - len(a))
    b = tuple(b) + (b[-1],) * (n - len(b))
    return all(x <= y for x, y in zip(a, b))


class BracketFlag:
    """Generators of D^j for j = 1..depth.

    Level 1 is the frame, level 2 adds [X1, X2], and level j+1 adds
    [X_i, B] for each generator B that is new at level j.
    """

    def __init__(self, frame, depth, degree_cap=DEFAULT_DEGREE_CAP):
        if depth < 1:
            raise ValueError("depth must be >= 1")
        self.frame = frame
        self.depth = depth
        self.degree_cap = degree_cap
        new = [(frame.v1, frame.v2)]
        if depth >= 2:
            new.append((lie_bracket(frame.v1, frame.v2),))
        for _ in range(3, depth + 1):
            if all(b.is_zero() for b in new[-1]):
                new.append(())
                continue
            level = []
            for b in new[-1]:
                for xi in frame:
                    level.append(lie_bracket(xi, b))
            new.append(tuple(level))
        for j, level in enumerate(new, start=1):
            for b in level:
                if b.degree > degree_cap:
                    raise DegreeCapExceeded(f"bracket at level {j} has degree {b.degree} > {degree_cap}")
        self.new = tuple(new)

    def generators(self, j):
        """All generators of D^j (cumulative)."""
        out = []
        for level in self.new[:j]:
            out.extend(level)
        return out


def build_flag(fr, depth, depth_cap=DEFAULT_DEPTH_CAP, degree_cap=DEFAULT_DEGREE_CAP):
    if depth > depth_cap:
        raise ValueError(f"depth {depth} exceeds the configured cap {depth_cap}")
    return BracketFlag(fr, depth, degree_cap)


def _is_exact_point(p):
    return all(isinstance(v, (int, Fraction)) for v in p)


def exact_rank(columns):
    """Rank of a matrix given as rational column vectors (fraction-free Bareiss)."""
    cols = []
    for c in columns:
        c = [Fraction(v) for v in c]
        if not any(c):
            continue
        lcm = 1
        for v in c:
            lcm = lcm * v.denominator // gcd(lcm, v.denominator)
        cols.append([int(v * lcm) for v in c])
    if not cols:
        return 0
    m = [list(r) for r in zip(*cols)]  # rows x cols
    nrows, ncols = len(m), len(m[0])
    rank, prev = 0, 1
    for col in range(ncols):
        piv = next((r for r in range(rank, nrows) if m[r][col]), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        for r in range(rank + 1, nrows):
            for c in range(col + 1, ncols):
                m[r][c] = (m[r][c] * m[rank][col] - m[rank][c] * m[r][col]) // prev
            m[r][col] = 0
        prev = m[rank][col]
        rank += 1
        if rank == nrows:
            break
    return rank


def numeric_rank(columns, tol=DEFAULT_RANK_TOL):
    a = np.array([[float(v) for v in c] for c in columns], dtype=float)
    if a.size == 0:
        return 0
    s = np.linalg.svd(a, compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.sum(s > tol * s[0]))


def growth_vector_at(flag, p, mode="exact", tol=DEFAULT_RANK_TOL):
    """Pointwise growth vector n_j = dim D^j(p), truncated at the first 4."""
    if mode == "exact":
        if not _is_exact_point(p):
            raise ValueError("exact mode needs a rational point")
        p = tuple(Fraction(v) for v in p)
        rank = exact_rank
    elif mode == "numeric":
        p = tuple(float(v) for v in p)

        def rank(cols):
            return numeric_rank(cols, tol)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    dims = []
    cols = []
    for j in range(1, flag.depth + 1):
        cols.extend(b.at(p) for b in flag.new[j - 1])
        n = rank(cols)
        dims.append(n)
        if n == DIM:
            return GrowthVector(tuple(dims))
    return GrowthVector(tuple(dims), stalled=True)


def growth_vector(fr, p, mode=None, depth=DEFAULT_DEPTH_CAP, tol=DEFAULT_RANK_TOL):
    if mode is None:
        mode = "exact" if _is_exact_point(p) else "numeric"
    return growth_vector_at(build_flag(fr, depth), p, mode, tol)


def is_engel_at(fr, p, mode=None, tol=DEFAULT_RANK_TOL):
    return growth_vector(fr, p, mode, depth=3, tol=tol).is_engel


def _pointwise(fr, p):
    """Frame, δ = [X1,X2] and [X_i, δ] evaluated at p (exact when p is rational)."""
    if _is_exact_point(p):
        p = tuple(Fraction(v) for v in p)
    else:
        p = tuple(float(v) for v in p)
    delta = lie_bracket(fr.v1, fr.v2)
    return (fr.v1.at(p), fr.v2.at(p), delta.at(p),
            lie_bracket(fr.v1, delta).at(p), lie_bracket(fr.v2, delta).at(p))


def _complement_axes(x1, x2):
    """Coordinate pair (a, b) maximizing |det(X1, X2, e_a, e_b)| at a point."""
    best, best_val = None, -1
    for a in range(DIM):
        for b in range(a + 1, DIM):
            ea = [1 if i == a else 0 for i in range(DIM)]
            eb = [1 if i == b else 0 for i in range(DIM)]
            v = abs(det_columns(x1, x2, ea, eb))
            if v > best_val:
                best, best_val = (a, b), v
    return best


def delta2_at(fr, p):
    """Pointwise δ₂ functional (δ₂(X1), δ₂(X2)) in the Λ²(T/D) trivialization
    given by the best-conditioned coordinate complement at p."""
    x1, x2, delta, b1, b2 = _pointwise(fr, p)
    a, b = _complement_axes(x1, x2)
    ea = [1 if i == a else 0 for i in range(DIM)]
    eb = [1 if i == b else 0 for i in range(DIM)]
    den = det_columns(x1, x2, ea, eb)

    def comps(v):
        return det_columns(x1, x2, v, eb) / den, det_columns(x1, x2, ea, v) / den

    c = comps(delta)
    out = []
    for bv in (b1, b2):
        dd = comps(bv)
        out.append(c[0] * dd[1] - c[1] * dd[0])
    return tuple(out)


def _require_engel(fr, p, tol):
    if not is_engel_at(fr, p, tol=tol):
        raise NotEngelPoint(f"not an Engel point: {tuple(map(str, p))}")


def engel_line_at(fr, p, tol=DEFAULT_RANK_TOL):
    """Kernel of v -> δ₂(v) as frame coefficients (a, b), larger |coefficient| = 1."""
    _require_engel(fr, p, tol)
    phi1, phi2 = delta2_at(fr, p)
    a, b = phi2, -phi1
    big = a if abs(a) >= abs(b) else b
    return (a / big, b / big)


def engel_line_vector(fr, p, tol=DEFAULT_RANK_TOL):
    a, b = engel_line_at(fr, p, tol)
    v1, v2 = fr.v1.at(p), fr.v2.at(p)
    return tuple(a * s + b * t for s, t in zip(v1, v2))


@dataclass(frozen=True)
class NilpotentizationData:
    """Graded Lie algebra D ⊕ V₂ ⊕ V₃ at an Engel point.

    Raw constants use e1, e2 = frame, e3 = [e1, e2], e4 = complement of D²;
    normalized ones use e2 along the Engel line and e4 = [e1, e3].
    """

    point: tuple
    alpha: object
    beta: object
    e4: tuple
    normalized_alpha: object
    normalized_beta: object
    normalized_e1: tuple
    normalized_e2: tuple

    def to_dict(self):
        def f(v):
            return str(v) if isinstance(v, Fraction) else float(v)
        return {
            "point": [f(v) for v in self.point],
            "alpha": f(self.alpha), "beta": f(self.beta),
            "e4": [f(v) for v in self.e4],
            "normalized": {"alpha": f(self.normalized_alpha), "beta": f(self.normalized_beta),
                           "e1": [f(v) for v in self.normalized_e1],
                           "e2": [f(v) for v in self.normalized_e2]},
        }


def complement_of_d2(x1, x2, delta, chart_orientation=1):
    """Coordinate vector completing (X1, X2, δ) to a basis with the chart orientation."""
    best, best_val = None, None
    for k in range(DIM):
        ek = [1 if i == k else 0 for i in range(DIM)]
        v = det_columns(x1, x2, delta, ek)
        if best_val is None or abs(v) > abs(best_val):
            best, best_val = k, v
    sign = 1 if best_val * chart_orientation > 0 else -1
    w = tuple(sign if i == best else 0 for i in range(DIM))
    return w, abs(best_val)


def nilpotentization_at(fr, p, chart_orientation=1, tol=DEFAULT_RANK_TOL):
    _require_engel(fr, p, tol)
    x1, x2, delta, b1, b2 = _pointwise(fr, p)
    w, vol = complement_of_d2(x1, x2, delta, chart_orientation)
    sgn = 1 if det_columns(x1, x2, delta, w) > 0 else -1
    alpha = det_columns(x1, x2, delta, b1) / (sgn * vol)
    beta = det_columns(x1, x2, delta, b2) / (sgn * vol)
    # e2' along the kernel of (alpha, beta); e1' any vector off it
    k = (beta, -alpha)
    e1c = (alpha, beta)
    # with e4' := [e1', e3'] the normalized constants are (1, 0)
    lam = e1c[0] * k[1] - k[0] * e1c[1]
    a_n = lam * (e1c[0] * alpha + e1c[1] * beta)
    b_n = lam * (k[0] * alpha + k[1] * beta)
    norm_alpha = a_n / a_n
    norm_beta = b_n / a_n
    return NilpotentizationData(
        point=tuple(p), alpha=alpha, beta=beta, e4=w,
        normalized_alpha=norm_alpha, normalized_beta=norm_beta,
        normalized_e1=e1c, normalized_e2=k,
    )
