"""Canonically oriented flag L ⊂ D ⊂ D² ⊂ T at Engel points and the
parallelizing frame it induces.

Orientation rule for a triple S ⊂ T, T/S: a basis of S followed by lifts
of a basis of T/S is positive in T.  The chain is

    D (given) and δ₁ ⇒ V₂ ⇒ D² ⇒ (with the chart orientation) V₃
    ⇒ D/L through ad_δ ⇒ L.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMetric, NotEngelPoint
from .flags import DEFAULT_RANK_TOL, _pointwise, complement_of_d2, is_engel_at
from .symcalc import det_columns


@dataclass(frozen=True)
class FlagAtPoint:
    point: tuple
    L_dir: np.ndarray
    L_coeffs: tuple
    D_basis: tuple
    D2_basis: tuple
    V3_rep: np.ndarray
    orientations: dict

    def to_dict(self):
        return {"point": [float(v) for v in self.point], "L": self.L_dir.tolist(),
                "L_coeffs": [float(v) for v in self.L_coeffs],
                "D": [v.tolist() for v in self.D_basis],
                "D2": [v.tolist() for v in self.D2_basis],
                "V3": self.V3_rep.tolist(), "orientations": dict(self.orientations)}


def canonical_flag_at(fr, p, chart_orientation=1, tol=DEFAULT_RANK_TOL):
    """Run the orientation chain at an Engel point.

    ``orientations`` gives each canonical orientation relative to the naive
    one read off the frame as if (X1, X2) were positive: D vs (X1, X2),
    V₂ vs [X1, X2], D² vs (X1, X2, [X1, X2]), V₃ vs the coordinate
    complement w, D/L vs (φ1, φ2) and L vs (φ2, -φ1), where φ_i is the
    V₃-component of [X_i, [X1, X2]] against w.
    """
    if not is_engel_at(fr, p, tol=tol):
        raise NotEngelPoint(f"not an Engel point: {tuple(map(str, p))}")
    x1, x2, br, b1, b2 = _pointwise(fr, p)
    o_d = fr.orientation
    # V₂ is oriented by δ₁ = [X1, X2] taken in the positive order of D
    o_v2 = o_d
    delta = tuple(o_v2 * v for v in br)
    # D²: positive basis of D followed by δ₁
    o_d2 = o_d * o_v2
    # V₃: w completes a positive basis of D² to one of T
    w, _ = complement_of_d2(x1, x2, br, chart_orientation * o_d2)
    o_v3 = o_d2
    vol = det_columns(x1, x2, br, w)
    naive_phi = tuple(det_columns(x1, x2, br, b) / vol for b in (b1, b2))
    # D/L ≅ V₃ through ad_δ(v) = [v, δ₁] mod D²
    o_dl = o_v2 * o_v3
    u = tuple(o_dl * v for v in naive_phi)
    # L: l is positive when (l, u) is a positive basis of D
    naive_l = (naive_phi[1], -naive_phi[0])
    o_l = o_d * o_dl
    l_coeffs = tuple(o_l * v for v in naive_l)

    xv1 = np.array([float(v) for v in x1])
    xv2 = np.array([float(v) for v in x2])
    l_vec = float(l_coeffs[0]) * xv1 + float(l_coeffs[1]) * xv2
    u_vec = float(u[0]) * xv1 + float(u[1]) * xv2
    d_vec = np.array([float(v) for v in delta])
    orientations = {"D": o_d, "V2": o_v2, "D2": o_d2, "V3": o_v3, "D/L": o_dl, "L": o_l}
    return FlagAtPoint(
        point=tuple(p), L_dir=l_vec, L_coeffs=l_coeffs,
        D_basis=(l_vec, u_vec), D2_basis=(l_vec, u_vec, d_vec),
        V3_rep=np.array([float(v) for v in w]), orientations=orientations,
    )


def _gram_schmidt(vectors, metric):
    out = []
    for v in vectors:
        w = np.array(v, dtype=float)
        for _ in range(2):
            for e in out:
                w = w - (e @ metric @ w) * e
        n2 = w @ metric @ w
        if not n2 > 1e-24:
            raise DegenerateMetric("flag vectors are dependent in this metric")
        out.append(w / np.sqrt(n2))
    return out


def parallelization_frame_at(flag, metric=None, chart_orientation=1):
    """Orthonormal E1..E4 adapted to the oriented flag.

    E1 spans L positively, (E1, E2) is a positive basis of D, (E1, E2, E3)
    of D², and (E1..E4) has the chart orientation."""
    g = np.eye(4) if metric is None else np.asarray(metric, dtype=float)
    if g.shape != (4, 4) or not np.allclose(g, g.T):
        raise DegenerateMetric("metric must be a symmetric 4x4 matrix")
    if np.min(np.linalg.eigvalsh(g)) <= 0:
        raise DegenerateMetric("metric must be positive definite")
    l_vec, u_vec, d_vec = flag.D2_basis
    e = _gram_schmidt([l_vec, u_vec, d_vec, flag.V3_rep], g)
    # the oriented bases above already fix all signs except the last
    if np.linalg.det(np.stack(e, axis=1)) * chart_orientation < 0:
        e[3] = -e[3]
    return e


def frames_on_grid(fr, points, metric=None, chart_orientation=1):
    """Parallelization frames at the Engel points among ``points``; others are skipped."""
    out = []
    for p in points:
        try:
            flag = canonical_flag_at(fr, p, chart_orientation)
        except NotEngelPoint:
            continue
        e = parallelization_frame_at(flag, metric, chart_orientation)
        out.append({"point": [float(v) for v in p], "frame": [v.tolist() for v in e]})
    return out
