"""Closed parametrized surfaces (u, v) -> chart point, used to pair loci with 2-cycles."""
from __future__ import annotations

import json
import math

import numpy as np

from .errors import BadCycle
from .expr import diff_node, eval_numeric, parse_expression

PERIODIC = "periodic"
COLLAPSE = "collapse"


class Cycle2:
    """A closed surface given by ``point(u, v)`` and its 4x2 Jacobian.

    ``u_boundary`` / ``v_boundary`` say how the rectangle's sides are
    identified: ``periodic`` (opposite sides glued) or ``collapse`` (each side
    in that direction is a single point, as at the poles of a sphere).
    The orientation is (d/du, d/dv).
    """

    def __init__(self, point, jacobian, u_range, v_range,
                 u_boundary=PERIODIC, v_boundary=PERIODIC, name="cycle"):
        self._point = point
        self._jacobian = jacobian
        self.u_range = tuple(map(float, u_range))
        self.v_range = tuple(map(float, v_range))
        self.u_boundary = u_boundary
        self.v_boundary = v_boundary
        self.name = name

    def point(self, u, v):
        return self._point(np.asarray(u, dtype=float), np.asarray(v, dtype=float))

    def jacobian(self, u, v):
        return self._jacobian(np.asarray(u, dtype=float), np.asarray(v, dtype=float))

    def reversed(self):
        """Same surface with the opposite orientation (u and v exchanged)."""
        def point(u, v):
            return self._point(v, u)

        def jac(u, v):
            return self._jacobian(v, u)[..., ::-1]

        return Cycle2(point, jac, self.v_range, self.u_range, self.v_boundary,
                      self.u_boundary, self.name + "-reversed")

    def translated(self, offset):
        offset = np.asarray(offset, dtype=float)

        def point(u, v):
            return self._point(u, v) + offset

        return Cycle2(point, self._jacobian, self.u_range, self.v_range,
                      self.u_boundary, self.v_boundary, self.name)

    def reparametrized(self, phi, dphi):
        """Compose with a diffeomorphism (s, t) -> (u, v) of the parameter rectangle.

        ``phi(s, t)`` returns (u, v); ``dphi(s, t)`` its 2x2 Jacobian as
        nested arrays [[du/ds, du/dt], [dv/ds, dv/dt]]."""
        def point(s, t):
            u, v = phi(s, t)
            return self._point(u, v)

        def jac(s, t):
            u, v = phi(s, t)
            j = self._jacobian(u, v)
            m = np.asarray(dphi(s, t), dtype=float)
            m = np.broadcast_to(np.moveaxis(m, (0, 1), (-2, -1)), j.shape[:-2] + (2, 2))
            return j @ m

        return Cycle2(point, jac, self.u_range, self.v_range, self.u_boundary,
                      self.v_boundary, self.name)

    def canonical_params(self, u, v):
        """Wrap periodic parameters into range; returns (u, v, inside)."""
        u = np.asarray(u, dtype=float).copy()
        v = np.asarray(v, dtype=float).copy()
        inside = np.ones(u.shape, dtype=bool)
        for arr, (lo, hi), kind in ((u, self.u_range, self.u_boundary),
                                    (v, self.v_range, self.v_boundary)):
            if kind == PERIODIC:
                arr[...] = lo + np.mod(arr - lo, hi - lo)
            else:
                eps = 1e-12 * (hi - lo)
                inside &= (arr >= lo - eps) & (arr <= hi + eps)
        return u, v, inside

    def check_closed(self, samples=17, tol=1e-9):
        us = np.linspace(*self.u_range, samples)
        vs = np.linspace(*self.v_range, samples)
        scale = 1.0 + float(np.max(np.abs(self.point(*np.meshgrid(us, vs)))))
        for kind, lohi, other, along_u in ((self.u_boundary, self.u_range, vs, True),
                                           (self.v_boundary, self.v_range, us, False)):
            lo, hi = lohi
            if along_u:
                a, b = self.point(np.full_like(other, lo), other), self.point(np.full_like(other, hi), other)
            else:
                a, b = self.point(other, np.full_like(other, lo)), self.point(other, np.full_like(other, hi))
            if kind == PERIODIC:
                err = np.max(np.abs(a - b))
            elif kind == COLLAPSE:
                err = max(np.max(np.abs(a - a[0])), np.max(np.abs(b - b[0])))
            else:
                raise BadCycle(f"unknown boundary identification {kind!r}")
            if err > tol * scale:
                raise BadCycle(f"{self.name}: boundary identification fails (error {err:.3g})")
        return True


def _orthonormal_basis3(basis):
    b = np.asarray(basis, dtype=float)
    if b.shape != (3, 4):
        raise BadCycle("a sphere slice needs three 4-vectors")
    q, r = np.linalg.qr(b.T)
    if np.min(np.abs(np.diag(r))) < 1e-12:
        raise BadCycle("sphere slice vectors are dependent")
    # keep the orientation of the given vectors
    q = q * np.sign(np.diag(r))
    return q.T


def round_sphere(center, radius, basis=None, name="sphere"):
    """Round 2-sphere of ``radius`` in the 3-plane through ``center`` spanned by ``basis``.

    Parameters (theta, phi) in [0, pi] x [0, 2 pi]; the point is
    c + r (sin θ cos φ b1 + sin θ sin φ b2 + cos θ b3).  The orientation
    (d/dθ, d/dφ) is the outward orientation of the sphere in the oriented
    3-plane (b1, b2, b3).
    """
    c = np.asarray(center, dtype=float)
    if basis is None:
        raise BadCycle("round_sphere needs the three vectors spanning its 3-plane")
    b = _orthonormal_basis3(basis)
    r = float(radius)

    def point(t, p):
        st, ct, sp, cp = np.sin(t), np.cos(t), np.sin(p), np.cos(p)
        return c + r * ((st * cp)[..., None] * b[0] + (st * sp)[..., None] * b[1] + ct[..., None] * b[2])

    def jac(t, p):
        st, ct, sp, cp = np.sin(t), np.cos(t), np.sin(p), np.cos(p)
        dt = r * ((ct * cp)[..., None] * b[0] + (ct * sp)[..., None] * b[1] - st[..., None] * b[2])
        dp = r * ((-st * sp)[..., None] * b[0] + (st * cp)[..., None] * b[1])
        return np.stack([dt, dp], axis=-1)

    return Cycle2(point, jac, (0.0, math.pi), (0.0, 2 * math.pi), COLLAPSE, PERIODIC, name)


def torus(center, radii, basis, name="torus"):
    """Flat torus (u, v) -> c + r1 (cos u b1 + sin u b2) + r2 (cos v b3 + sin v b4)."""
    c = np.asarray(center, dtype=float)
    b = np.asarray(basis, dtype=float)
    r1, r2 = map(float, radii)

    def point(u, v):
        return c + r1 * (np.cos(u)[..., None] * b[0] + np.sin(u)[..., None] * b[1]) \
                 + r2 * (np.cos(v)[..., None] * b[2] + np.sin(v)[..., None] * b[3])

    def jac(u, v):
        du = r1 * (-np.sin(u)[..., None] * b[0] + np.cos(u)[..., None] * b[1])
        dv = r2 * (-np.sin(v)[..., None] * b[2] + np.cos(v)[..., None] * b[3])
        return np.stack([du, dv], axis=-1)

    tau = 2 * math.pi
    return Cycle2(point, jac, (0.0, tau), (0.0, tau), PERIODIC, PERIODIC, name)


def from_expressions(coords, u_range, v_range, u_boundary=PERIODIC, v_boundary=PERIODIC,
                     name="cycle"):
    """Cycle from four coordinate expressions in ``u`` and ``v``.

    Expressions use + - * / ^, sin, cos, exp, sqrt and the constant pi."""
    if len(coords) != 4:
        raise BadCycle("a cycle needs 4 coordinate expressions")
    nodes = [parse_expression(c) if isinstance(c, str) else c for c in coords]
    du = [diff_node(n, "u") for n in nodes]
    dv = [diff_node(n, "v") for n in nodes]

    def ev(node, u, v):
        return np.broadcast_to(eval_numeric(node, {"u": u, "v": v}), np.broadcast(u, v).shape)

    def point(u, v):
        return np.stack([ev(n, u, v) for n in nodes], axis=-1)

    def jac(u, v):
        a = np.stack([ev(n, u, v) for n in du], axis=-1)
        b = np.stack([ev(n, u, v) for n in dv], axis=-1)
        return np.stack([a, b], axis=-1)

    return Cycle2(point, jac, _range(u_range), _range(v_range), u_boundary, v_boundary, name)


def _range(r):
    out = []
    for v in r:
        if isinstance(v, str):
            v = float(eval_numeric(parse_expression(v), {}))
        out.append(float(v))
    return tuple(out)


def cycle_from_json(data):
    """Build a cycle from the cycle-file JSON schema.

    Either ``{"sphere": {"center": [...], "radius": r, "slice": [[...]x3]}}``,
    ``{"torus": {...}}`` or ``{"coords": [4 exprs], "u": [lo, hi], "v": [lo, hi],
    "u_boundary": ..., "v_boundary": ...}``.
    """
    if isinstance(data, str):
        data = json.loads(data)
    if "sphere" in data:
        s = data["sphere"]
        cyc = round_sphere(s["center"], s["radius"], s["slice"])
    elif "torus" in data:
        t = data["torus"]
        cyc = torus(t["center"], t["radii"], t["basis"])
    elif "coords" in data:
        cyc = from_expressions(data["coords"], data["u"], data["v"],
                               data.get("u_boundary", PERIODIC), data.get("v_boundary", PERIODIC),
                               data.get("name", "cycle"))
    else:
        raise BadCycle("cycle JSON needs 'sphere', 'torus' or 'coords'")
    if data.get("reverse"):
        cyc = cyc.reversed()
    cyc.check_closed()
    return cyc
