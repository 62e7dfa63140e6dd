"""Numerical extraction of Σ₁, Σ₂ and C, co-orientation signs and intersection counts."""
from __future__ import annotations

import csv
import random
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .cycles import round_sphere
from .errors import (CycleMeetsC, CycleMeetsDenominator, NonTransverseIntersection,
                     NotTransverse, PathTouchesC, WrongLinkCount)
from .sections import DELTA1, DELTA2, c_equations, delta1, delta2
from .symcalc import DIM

SIGMA1 = "S1"
SIGMA2 = "S2"
C_LOCUS = "C"


@dataclass
class LociConfig:
    refine_tol: float = 1e-10
    max_iter: int = 50
    damping: float = 0.5
    # relative singular-value threshold below which a Jacobian is rank deficient
    c_threshold: float = 1e-6
    # δ₁ residual below which a Σ sample counts as lying on Σ₁
    tag_tol: float = 1e-6
    seed_factor: float = 1.5
    # reference coordinate axes (1-based) whose projection to the normal plane
    # defines the sign convention on each locus
    reference_axes: dict = field(default_factory=lambda: {SIGMA1: (1, 3), SIGMA2: (1, 4)})
    sign_convention: int = 1
    jitter: float = 1e-3
    jitter_retries: int = 3
    seed: int = 0


DEFAULT_CONFIG = LociConfig()


@dataclass
class LocusSample:
    point: np.ndarray
    locus: str
    residual: float
    coorientation: int = 0
    normal_frame: tuple = None

    def to_row(self):
        return [*(float(v) for v in self.point), self.locus, self.coorientation, self.residual]

    def to_dict(self):
        return {"point": [float(v) for v in self.point], "locus": self.locus,
                "sign": self.coorientation, "residual": self.residual}


@dataclass
class Extraction:
    samples: list
    seeds: int
    diverged: int

    def __iter__(self):
        return iter(self.samples)

    def __len__(self):
        return len(self.samples)

    def __getitem__(self, i):
        return self.samples[i]

    def of(self, locus):
        return [s for s in self.samples if s.locus == locus]


# batched Gauss-Newton

class PolySystem:
    """Float evaluator for a list of PolyExpr equations and their gradients."""

    def __init__(self, polys):
        self.polys = tuple(polys)
        self.f = [p.compiled for p in self.polys]
        self.g = [[p.diff(j + 1).compiled for j in range(DIM)] for p in self.polys]

    def values(self, pts):
        return np.stack([f(pts) for f in self.f], axis=-1)

    def jacobian(self, pts):
        return np.stack([np.stack([g(pts) for g in row], axis=-1) for row in self.g], axis=-2)


def section_system(s):
    return PolySystem(s.numerators)


def gauss_newton(system, x0, tol=1e-10, max_iter=50, damping=0.5, backtracks=12):
    """Minimum-norm Gauss-Newton steps for an underdetermined system, batched over rows of x0.

    A step that increases the residual is shrunk by ``damping`` (repeatedly).
    Returns (x, residual, converged)."""
    x = np.array(x0, dtype=float, copy=True)
    res = np.max(np.abs(system.values(x)), axis=-1)
    for _ in range(max_iter):
        active = res > tol
        if not active.any():
            break
        xa = x[active]
        r = system.values(xa)
        jac = system.jacobian(xa)
        step = -np.einsum("nij,nj->ni", np.linalg.pinv(jac, rcond=1e-13), r)
        ra = res[active]
        scale = np.ones(len(xa))
        xn = xa + step
        rn = np.max(np.abs(system.values(xn)), axis=-1)
        for _ in range(backtracks):
            worse = rn > ra
            if not worse.any():
                break
            scale[worse] *= damping
            xn[worse] = xa[worse] + scale[worse, None] * step[worse]
            rn[worse] = np.max(np.abs(system.values(xn[worse])), axis=-1)
        keep = rn <= ra
        xa[keep] = xn[keep]
        ra[keep] = rn[keep]
        x[active] = xa
        res[active] = ra
        if not keep.any():
            break
    return x, res, res <= tol


def _grid(box, n):
    axes = [np.linspace(lo, hi, n) for lo, hi in box]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, DIM)
    spacing = np.array([(hi - lo) / (n - 1) if n > 1 else 1.0 for lo, hi in box])
    return pts, spacing


def _seed_mask(values, jac, spacing, factor, tol):
    # zero plausibly within the half-cell around the grid point (linearized bound)
    bound = factor * np.einsum("nij,j->ni", np.abs(jac), spacing / 2) + tol
    return np.all(np.abs(values) <= bound, axis=-1)


def _merge_fast(points, radius):
    if len(points) == 0:
        return np.array([], dtype=int)
    order = np.lexsort(points.T[::-1])
    tree = cKDTree(points)
    removed = np.zeros(len(points), dtype=bool)
    kept = []
    for i in order:
        if removed[i]:
            continue
        kept.append(i)
        for j in tree.query_ball_point(points[i], radius):
            removed[j] = True
    return np.array(kept, dtype=int)


def _in_box(points, box, eps=1e-9):
    lo = np.array([b[0] for b in box]) - eps
    hi = np.array([b[1] for b in box]) + eps
    return np.all((points >= lo) & (points <= hi), axis=-1)


def _rank_deficient(jac, threshold):
    s = np.linalg.svd(jac, compute_uv=False)
    return s[..., -1] <= threshold * np.maximum(s[..., 0], 1e-300)


def refine(system, seeds, box, config=DEFAULT_CONFIG):
    x, res, ok = gauss_newton(system, seeds, config.refine_tol, config.max_iter, config.damping)
    good = ok & _in_box(x, box)
    return x[good], res[good], int(np.sum(~ok))


def extract_locus(s, box, grid=9, refine_tol=None, config=DEFAULT_CONFIG):
    """Sample the zero set of a section's numerators on ``box``.

    Grid points whose numerators are within a linearized half-cell bound of
    zero seed a Gauss-Newton refinement; converged points are merged within
    half the grid spacing and tagged S1, S2 or C."""
    if refine_tol is not None:
        config = LociConfig(**{**config.__dict__, "refine_tol": refine_tol})
    cs = s.compiled
    pts, spacing = _grid(box, grid)
    den = cs.denominator(pts)
    scale = max(float(np.max(np.abs(den))), 1e-300)
    pts = pts[np.abs(den) > 1e-12 * scale]
    vals = cs.values(pts)
    jac = cs.jacobian(pts)
    mask = _seed_mask(vals, jac, spacing, config.seed_factor, config.refine_tol)
    seeds = pts[mask]
    if not len(seeds):
        return Extraction([], 0, 0)
    system = section_system(s)
    x, res, diverged = refine(system, seeds, box, config)
    den = cs.denominator(x)
    keep = np.abs(den) > 1e-12 * scale
    x, res = x[keep], res[keep]
    idx = _merge_fast(x, 0.5 * float(np.min(spacing)))
    idx = idx[np.lexsort(x[idx].T[::-1])]
    samples = [_make_sample(s, x[i], float(res[i]), config) for i in idx]
    return Extraction(samples, int(len(seeds)), diverged)


def classify_point(s, p, config=DEFAULT_CONFIG):
    """Locus tag of a zero of ``s``: S1 if δ₁ also vanishes (C if δ₂ is not
    transverse there), otherwise S2."""
    s1 = delta1(s.frame, s.complement)
    r1 = float(np.max(np.abs(s1.compiled.values(p))))
    if r1 > config.tag_tol:
        return SIGMA2
    s2 = delta2(s.frame, s.complement)
    if _rank_deficient(s2.compiled.jacobian(p), config.c_threshold):
        return C_LOCUS
    return SIGMA1


def normal_frame(s, p, locus, config=DEFAULT_CONFIG):
    """Projections of the configured reference axes onto the normal plane of the locus.

    The normal plane is the row space of the Jacobian of the section that
    cuts the locus out transversally (δ₁ for Σ₁, δ₂ for Σ₂).  Returns None
    where the plane is undefined or the reference axes project degenerately."""
    if s.kind == DELTA1 or locus in (SIGMA1, C_LOCUS):
        src = delta1(s.frame, s.complement)
        axes = config.reference_axes.get(SIGMA1)
    else:
        src = delta2(s.frame, s.complement)
        axes = config.reference_axes.get(SIGMA2)
    jac = src.compiled.jacobian(p)
    u, sv, vt = np.linalg.svd(jac)
    if sv[-1] <= config.c_threshold * max(sv[0], 1e-300):
        return None
    q = vt[:2]
    proj = q.T @ q
    n1 = proj[:, axes[0] - 1]
    n2 = proj[:, axes[1] - 1]
    area = np.linalg.det(q @ np.stack([n1, n2], axis=1))
    if abs(area) < 1e-3:
        return None
    return (n1, n2)


def _sign_with_frame(s, p, frame, config):
    jac = s.compiled.jacobian(p)
    sv = np.linalg.svd(jac, compute_uv=False)
    if sv[-1] <= config.c_threshold * max(sv[0], 1e-300):
        return 0
    m = np.stack([jac @ frame[0], jac @ frame[1]], axis=1)
    d = np.linalg.det(m)
    return int(np.sign(d)) * config.sign_convention


def _make_sample(s, p, residual, config):
    if s.kind == DELTA1:
        tag = SIGMA1 if classify_point(s, p, config) != C_LOCUS else C_LOCUS
    else:
        tag = classify_point(s, p, config)
    frame = normal_frame(s, p, tag, config)
    sign = 0 if frame is None else _sign_with_frame(s, p, frame, config)
    return LocusSample(np.asarray(p, dtype=float), tag, residual, sign, frame)


def coorientation_sign(s, sample, config=DEFAULT_CONFIG):
    """Sign of det[Ds(n1), Ds(n2)] for the sample's stored normal frame."""
    if sample.normal_frame is None:
        raise NotTransverse("sample has no normal frame (non-transverse or degenerate reference)")
    sign = _sign_with_frame(s, sample.point, sample.normal_frame, config)
    if sign == 0:
        raise NotTransverse(f"section is not transverse at {sample.point.tolist()}")
    return sign


# reversal along a path on a locus

@dataclass
class ReversalReport:
    section: str
    locus: str
    points: list
    signs: list
    start_sign: int
    end_sign: int
    reversed: bool
    expected_reversal: bool

    @property
    def consistent(self):
        return self.reversed == self.expected_reversal

    def to_dict(self):
        return {"section": self.section, "locus": self.locus,
                "start_sign": self.start_sign, "end_sign": self.end_sign,
                "reversed": self.reversed, "expected_reversal": self.expected_reversal,
                "consistent": self.consistent, "signs": self.signs,
                "points": [[float(v) for v in p] for p in self.points]}


def _resample(path, n):
    path = np.asarray(path, dtype=float)
    if len(path) < 2:
        raise ValueError("a path needs at least two points")
    seg = np.linalg.norm(np.diff(path, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    t = np.linspace(0.0, cum[-1], n)
    return np.stack([np.interp(t, cum, path[:, k]) for k in range(DIM)], axis=1)


def _gram_schmidt(vectors):
    out = []
    for v in vectors:
        w = np.array(v, dtype=float)
        for e in out:
            w = w - (w @ e) * e
        out.append(w / np.linalg.norm(w))
    return out


def reversal_check(s, locus, path, samples=41, config=DEFAULT_CONFIG):
    """Follow a path on Σ₁ or Σ₂, transport a normal frame continuously and
    record the co-orientation sign the section induces along it."""
    locus = {"s1": SIGMA1, "s2": SIGMA2}.get(str(locus).lower(), locus)
    pts = _resample(path, samples)
    cutter = delta1(s.frame, s.complement) if locus == SIGMA1 else delta2(s.frame, s.complement)
    x, res, ok = gauss_newton(section_system(cutter), pts, config.refine_tol,
                              config.max_iter, config.damping)
    frame = None
    signs = []
    axes = config.reference_axes.get(locus, (1, 3))
    for p in x:
        jac = cutter.compiled.jacobian(p)
        _, sv, vt = np.linalg.svd(jac)
        if sv[-1] > config.c_threshold * max(sv[0], 1e-300):
            q = vt[:2]
            proj = q.T @ q
            if frame is None:
                frame = _gram_schmidt([proj[:, axes[0] - 1], proj[:, axes[1] - 1]])
            else:
                frame = _gram_schmidt([proj @ frame[0], proj @ frame[1]])
        signs.append(0 if frame is None else _sign_with_frame(s, p, frame, config))
    interior = [g for g in signs[1:-1] if g]
    if not interior:
        raise PathTouchesC("no transverse samples along the path")
    nonzero = [g for g in signs if g]
    start, end = nonzero[0], nonzero[-1]
    return ReversalReport(s.kind, locus, [p for p in x], signs, start, end,
                          start != end, s.kind == DELTA2)


# intersections with 2-cycles

@dataclass
class Crossing:
    params: tuple
    point: np.ndarray
    sign: int
    locus: str

    def to_dict(self):
        return {"params": [float(v) for v in self.params],
                "point": [float(v) for v in self.point], "sign": self.sign, "locus": self.locus}


def _composite(s, cyc, u, v):
    p = cyc.point(u, v)
    g = s.compiled.values(p)
    jg = s.compiled.jacobian(p) @ cyc.jacobian(u, v)
    return p, g, jg


def _newton2(s, cyc, uv, tol, max_iter, damping):
    uv = np.array(uv, dtype=float, copy=True)
    for _ in range(max_iter):
        _, g, jg = _composite(s, cyc, uv[:, 0], uv[:, 1])
        res = np.max(np.abs(g), axis=-1)
        active = res > tol
        if not active.any():
            break
        step = -np.einsum("nij,nj->ni", np.linalg.pinv(jg[active], rcond=1e-13), g[active])
        base = uv[active]
        scale = np.ones(len(base))
        new = base + step
        _, gn, _ = _composite(s, cyc, new[:, 0], new[:, 1])
        rn = np.max(np.abs(gn), axis=-1)
        ra = res[active]
        for _ in range(12):
            worse = rn > ra
            if not worse.any():
                break
            scale[worse] *= damping
            new[worse] = base[worse] + scale[worse, None] * step[worse]
            _, gw, _ = _composite(s, cyc, new[worse, 0], new[worse, 1])
            rn[worse] = np.max(np.abs(gw), axis=-1)
        uv[active] = np.where((rn <= ra)[:, None], new, base)
    _, g, _ = _composite(s, cyc, uv[:, 0], uv[:, 1])
    return uv, np.max(np.abs(g), axis=-1)


def _find_crossings(s, cyc, grid, config):
    us = np.linspace(*cyc.u_range, grid + 1)
    vs = np.linspace(*cyc.v_range, grid + 1)
    uu, vv = np.meshgrid(us, vs, indexing="ij")
    uu, vv = uu.ravel(), vv.ravel()
    p, g, jg = _composite(s, cyc, uu, vv)
    den = s.compiled.denominator(p)
    dscale = max(float(np.max(np.abs(den))), 1e-300)
    if np.min(np.abs(den)) <= 1e-9 * dscale:
        raise CycleMeetsDenominator("the cycle meets the zero set of the Cramer denominator")
    h = np.array([(cyc.u_range[1] - cyc.u_range[0]) / grid, (cyc.v_range[1] - cyc.v_range[0]) / grid])
    mask = _seed_mask(g, jg, h, config.seed_factor, config.refine_tol)
    seeds = np.stack([uu[mask], vv[mask]], axis=1)
    if not len(seeds):
        return []
    uv, res = _newton2(s, cyc, seeds, config.refine_tol, config.max_iter, config.damping)
    ok = res <= config.refine_tol
    cu, cv, inside = cyc.canonical_params(uv[:, 0], uv[:, 1])
    ok &= inside
    uv = np.stack([cu, cv], axis=1)[ok]
    if not len(uv):
        return []
    pts = cyc.point(uv[:, 0], uv[:, 1])
    idx = _merge_fast(pts, 1e-6 * (1 + float(np.max(np.abs(pts)))))
    out = []
    for i in idx:
        u, v = uv[i]
        pt, g1, j1 = _composite(s, cyc, np.array([u]), np.array([v]))
        det = float(np.linalg.det(j1[0]))
        # scale: product of the row norms of the composite Jacobian
        norm = float(np.prod(np.linalg.norm(j1[0], axis=1)))
        out.append((u, v, pt[0], det, norm))
    return out


def cycle_crossings(s, cyc, grid=48, config=DEFAULT_CONFIG, check_c=True):
    """Transverse intersections of the cycle with the zero set of ``s``, with signs.

    A crossing's sign is that of det d(s∘cycle)/d(u,v).  Non-transverse
    crossings trigger retries on the cycle translated by a small random
    vector (``config.jitter``, seeded) before giving up."""
    rng = random.Random(config.seed)
    current = cyc
    for attempt in range(config.jitter_retries + 1):
        raw = _find_crossings(s, current, grid, config)
        bad = [r for r in raw if abs(r[3]) <= config.c_threshold * max(r[4], 1e-300)]
        if not bad:
            break
        if check_c and s.kind == DELTA2:
            for r in bad:
                if classify_point(s, r[2], config) == C_LOCUS:
                    raise CycleMeetsC(f"the cycle passes through C near {r[2].tolist()}")
        if attempt == config.jitter_retries:
            raise NonTransverseIntersection(
                f"non-transverse crossing at {bad[0][2].tolist()} after {attempt} jitter retries")
        offset = np.array([rng.uniform(-1, 1) for _ in range(DIM)])
        current = cyc.translated(config.jitter * offset / np.linalg.norm(offset))
    crossings = []
    for u, v, pt, det, _ in raw:
        tag = classify_point(s, pt, config)
        if check_c and s.kind == DELTA2 and tag == C_LOCUS:
            raise CycleMeetsC(f"the cycle passes through C near {pt.tolist()}")
        if s.kind == DELTA1 and tag == C_LOCUS:
            tag = SIGMA1
        crossings.append(Crossing((u, v), pt, int(np.sign(det)), tag))
    crossings.sort(key=lambda c: tuple(c.point))
    return crossings


def intersect_cycle(s, cyc, grid=48, config=DEFAULT_CONFIG):
    """Signed count of crossings: the pairing of the locus' dual class with the cycle."""
    return sum(c.sign for c in cycle_crossings(s, cyc, grid, config))


# the curve C and its links

def c_system(fr, comp):
    return PolySystem(c_equations(fr, comp))


def extract_c_curve(fr, comp, box, grid=9, config=DEFAULT_CONFIG):
    """Points of C = {δ₁ = 0, det(X1, X2, [X1,δ̃₁], [X2,δ̃₁]) = 0} on the box."""
    system = c_system(fr, comp)
    pts, spacing = _grid(box, grid)
    vals = system.values(pts)
    jac = system.jacobian(pts)
    mask = _seed_mask(vals, jac, spacing, config.seed_factor, config.refine_tol)
    seeds = pts[mask]
    if not len(seeds):
        return np.zeros((0, DIM))
    x, res, ok = gauss_newton(system, seeds, config.refine_tol, config.max_iter, config.damping)
    x = x[ok & _in_box(x, box)]
    idx = _merge_fast(x, 0.5 * float(np.min(spacing)))
    x = x[idx]
    return x[np.lexsort(x.T[::-1])]


@dataclass
class LinkReport:
    center: np.ndarray
    tangent: np.ndarray
    slice_basis: np.ndarray
    radius: float
    crossings: list

    @property
    def signs(self):
        return [c.sign for c in self.crossings]

    @property
    def total(self):
        return sum(self.signs)

    def to_dict(self):
        return {"center": self.center.tolist(), "tangent": self.tangent.tolist(),
                "slice": self.slice_basis.tolist(), "radius": self.radius,
                "points": [c.to_dict() for c in self.crossings],
                "signs": self.signs, "sum": self.total}


def c_tangent(fr, comp, p, config=DEFAULT_CONFIG):
    """Project p onto C and return (point, unit tangent of C)."""
    system = c_system(fr, comp)
    x, res, ok = gauss_newton(system, np.asarray([p], dtype=float), config.refine_tol,
                              config.max_iter, config.damping)
    jac = system.jacobian(x)[0]
    _, sv, vt = np.linalg.svd(jac)
    t = vt[-1]
    # fixed orientation: largest component positive
    if t[np.argmax(np.abs(t))] < 0:
        t = -t
    return x[0], t, float(res[0])


def transverse_slice(t):
    """Orthonormal basis of the 3-plane orthogonal to t, oriented so (t, b1, b2, b3) is positive."""
    _, _, vt = np.linalg.svd(np.asarray(t, dtype=float)[None, :])
    basis = vt[1:]
    if np.linalg.det(np.vstack([t, basis])) < 0:
        basis[0] = -basis[0]
    return basis


def link_consistency_at(s, c_point, radius, grid=64, config=DEFAULT_CONFIG, expected=4):
    """Intersect a small sphere around a point of C, inside the 3-slice
    transverse to C, with Σ = zero set of ``s``; signs should cancel."""
    center, t, _ = c_tangent(s.frame, s.complement, c_point, config)
    basis = transverse_slice(t)
    sphere = round_sphere(center, radius, basis, name="link")
    crossings = cycle_crossings(s, sphere, grid, config)
    report = LinkReport(center, t, basis, float(radius), crossings)
    if expected is not None and len(crossings) != expected:
        raise WrongLinkCount(f"link has {len(crossings)} points, expected {expected}",
                             found=report)
    return report


# exports

CSV_COLUMNS = ["x1", "x2", "x3", "x4", "locus", "sign", "residual"]


def write_csv(samples, fh):
    w = csv.writer(fh)
    w.writerow(CSV_COLUMNS)
    for smp in samples:
        x1, x2, x3, x4 = (repr(float(v)) for v in smp.point)
        w.writerow([x1, x2, x3, x4, smp.locus, f"{smp.coorientation:+d}" if smp.coorientation else "0",
                    f"{smp.residual:.3e}"])


def read_csv(fh):
    rows = []
    for row in csv.DictReader(fh):
        rows.append({"point": [float(row[k]) for k in CSV_COLUMNS[:4]], "locus": row["locus"],
                     "sign": int(row["sign"]), "residual": float(row["residual"])})
    return rows


def write_obj(samples, fh, axes=(1, 3, 4)):
    """Point cloud of the samples projected to three chart axes."""
    fh.write(f"# engelloci locus samples, axes x{axes[0]} x{axes[1]} x{axes[2]}\n")
    for smp in samples:
        fh.write("v " + " ".join(f"{smp.point[a - 1]:.12g}" for a in axes) + "\n")
