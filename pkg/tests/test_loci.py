import io
import math
import random

import numpy as np
import pytest

from engelloci import catalog
from engelloci.cycles import from_expressions, round_sphere, torus
from engelloci.errors import BadCycle, CycleMeetsC, PathTouchesC, WrongLinkCount
from engelloci.loci import (C_LOCUS, SIGMA1, SIGMA2, LociConfig, PolySystem, classify_point,
                            coorientation_sign, cycle_crossings, extract_c_curve, extract_locus,
                            gauss_newton, intersect_cycle, link_consistency_at, read_csv,
                            reversal_check, write_csv, write_obj)
from engelloci.sections import delta1, delta2
from engelloci.symcalc import x

CFORM = catalog.get("C-form")
S1 = delta1(CFORM.frame, CFORM.complement)
S2 = delta2(CFORM.frame, CFORM.complement)
SLICE = [(1, 0, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1)]


def residual(system, p):
    return max(abs(float(q(tuple(float(v) for v in p)))) for q in system)


@pytest.fixture(scope="module")
def sigma1_samples():
    return extract_locus(S1, CFORM.box, grid=9)


@pytest.fixture(scope="module")
def sigma_samples():
    return extract_locus(S2, CFORM.box, grid=9)


def test_gauss_newton_projects_onto_zero_set():
    system = PolySystem([x(1) ** 2 + x(2) ** 2 - 1, x(3), x(4) - x(1)])
    pts = np.array([[2.0, 0.5, 0.3, 0.0], [0.1, -1.2, 0.0, 0.4]])
    out, res, ok = gauss_newton(system, pts)
    assert ok.all() and (res < 1e-10).all()
    assert np.allclose(out[:, 0] ** 2 + out[:, 1] ** 2, 1)


def test_sigma1_extraction(sigma1_samples):
    assert len(sigma1_samples) > 50
    for smp in sigma1_samples:
        assert residual(CFORM.loci["S1"], smp.point) <= 1e-8
        assert all(-1 - 1e-9 <= v <= 1 + 1e-9 for v in smp.point)
    pts = np.array([s.point for s in sigma1_samples])
    assert (np.diff(pts[:, 0]) >= 0).all()  # lexicographically sorted


def test_sigma_extraction_tags(sigma_samples):
    tags = {s.locus for s in sigma_samples}
    assert {SIGMA1, SIGMA2} <= tags
    for smp in sigma_samples:
        if smp.locus == SIGMA1:
            assert residual(CFORM.loci["S1"], smp.point) <= 1e-8
        elif smp.locus == SIGMA2:
            assert residual(CFORM.loci["S2"], smp.point) <= 1e-8
        else:
            assert residual(CFORM.loci["C"], smp.point) <= 1e-6


def test_extraction_is_deterministic():
    a = extract_locus(S1, CFORM.box, grid=7)
    b = extract_locus(S1, CFORM.box, grid=7)
    assert [s.point.tolist() for s in a] == [s.point.tolist() for s in b]


def test_c_curve():
    pts = extract_c_curve(CFORM.frame, CFORM.complement, CFORM.box, grid=9)
    assert len(pts) >= 5
    assert np.max(np.abs(pts[:, [0, 2, 3]])) <= 1e-8
    assert classify_point(S2, pts[0]) == C_LOCUS


def test_coorientation_signs(sigma_samples):
    # with reference axes (1,3) on Σ₁ and (1,4) on Σ₂, δ₂ induces sign(-x4) on Σ₁
    # and sign(-x3) on Σ₂
    checked = 0
    for smp in sigma_samples:
        if smp.locus == SIGMA1 and abs(smp.point[3]) > 1e-3:
            assert smp.coorientation == -np.sign(smp.point[3])
            checked += 1
        if smp.locus == SIGMA2 and abs(smp.point[2]) > 1e-3:
            assert smp.coorientation == -np.sign(smp.point[2])
            checked += 1
        if smp.coorientation:
            assert coorientation_sign(S2, smp) == smp.coorientation
    assert checked > 20


def test_delta1_sign_constant(sigma1_samples):
    signs = {s.coorientation for s in sigma1_samples if s.coorientation}
    assert len(signs) == 1


def test_sign_convention_flips_everything(sigma1_samples):
    cfg = LociConfig(sign_convention=-1)
    flipped = extract_locus(S1, CFORM.box, grid=9, config=cfg)
    assert [s.coorientation for s in flipped] == [-s.coorientation for s in sigma1_samples]


def _s1_path(t=0.5, n=11):
    return [(-v * v, 0.1, 0.0, v) for v in np.linspace(-t, t, n)]


def _s2_path(t=0.5, n=11):
    return [(-(v * v / 2) ** 2, 0.1, v, -v * v / 2) for v in np.linspace(-t, t, n)]


def test_reversal_delta2_both_strata():
    for locus, path in (("s1", _s1_path()), ("s2", _s2_path())):
        rep = reversal_check(S2, locus, path)
        assert rep.reversed and rep.consistent
        assert rep.start_sign == -rep.end_sign


def test_delta1_does_not_reverse():
    rep = reversal_check(S1, "s1", _s1_path())
    assert not rep.reversed and rep.consistent


def test_reversal_path_inside_c():
    path = [(0, v, 0, 0) for v in np.linspace(-0.5, 0.5, 5)]
    with pytest.raises(PathTouchesC):
        reversal_check(S2, "s1", path)


def test_reversal_path_one_side_keeps_sign():
    path = [(-v * v, 0.1, 0.0, v) for v in np.linspace(0.2, 0.8, 9)]
    assert not reversal_check(S2, "s1", path).reversed


@pytest.mark.parametrize("x2", [-0.6, 0.0, 0.45])
@pytest.mark.parametrize("radius", [0.02, 0.08])
def test_link_consistency(x2, radius):
    rep = link_consistency_at(S2, [0.0, x2, 0.0, 0.0], radius)
    assert len(rep.crossings) == 4
    assert sorted(rep.signs) == [-1, -1, 1, 1]
    assert rep.total == 0
    assert sorted(c.locus for c in rep.crossings) == [SIGMA1, SIGMA1, SIGMA2, SIGMA2]
    assert abs(rep.tangent[1]) == pytest.approx(1.0)


def test_link_wrong_count():
    with pytest.raises(WrongLinkCount) as info:
        link_consistency_at(S2, [0.0, 0.0, 0.0, 0.0], 0.05, expected=6)
    assert len(info.value.found.crossings) == 4


def bounding_sphere():
    return round_sphere((-0.25, 0, 0, 0), 0.6, SLICE)


def test_sphere_pairing_delta1():
    cs = cycle_crossings(S1, bounding_sphere())
    assert len(cs) == 2
    assert sorted(c.sign for c in cs) == [-1, 1]
    for c in cs:
        assert abs(abs(c.point[3]) - math.sqrt(0.35)) <= 1e-8
        assert abs(c.point[2]) <= 1e-8
    assert intersect_cycle(S1, bounding_sphere()) == 0


def test_sphere_pairing_delta2():
    cs = cycle_crossings(S2, bounding_sphere())
    assert len(cs) == 4
    assert sum(c.sign for c in cs) == 0
    assert sorted(c.locus for c in cs) == [SIGMA1, SIGMA1, SIGMA2, SIGMA2]


@pytest.mark.parametrize("s", [S1, S2], ids=["delta1", "delta2"])
def test_reversed_cycle_negates_each_sign(s):
    sph = bounding_sphere()
    a = cycle_crossings(s, sph)
    b = cycle_crossings(s, sph.reversed())
    assert [c.point.round(8).tolist() for c in a] == [c.point.round(8).tolist() for c in b]
    assert [c.sign for c in b] == [-c.sign for c in a]


def test_reparametrization_invariance():
    sph = bounding_sphere()

    def phi(s, t):
        return s + 0.1 * np.sin(2 * s), t + 0.2 * np.sin(t)

    def dphi(s, t):
        z = np.zeros_like(np.asarray(s, dtype=float) + np.asarray(t, dtype=float))
        return [[1 + 0.2 * np.cos(2 * s) + z, z], [z, 1 + 0.2 * np.cos(t) + z]]

    def flip(s, t):
        return s, 2 * np.pi - t

    def dflip(s, t):
        z = np.zeros_like(np.asarray(s, dtype=float) + np.asarray(t, dtype=float))
        return [[1 + z, z], [z, -1 + z]]

    base = [c.sign for c in cycle_crossings(S2, sph)]
    assert [c.sign for c in cycle_crossings(S2, sph.reparametrized(phi, dphi))] == base
    assert [c.sign for c in cycle_crossings(S2, sph.reparametrized(flip, dflip))] == [-v for v in base]


def test_random_bounding_spheres_pair_to_zero():
    rng = random.Random(11)
    done = 0
    while done < 8:
        center = [rng.uniform(-0.6, 0.6) for _ in range(4)]
        radius = rng.uniform(0.1, 0.5)
        basis = np.linalg.qr(np.array([[rng.gauss(0, 1) for _ in range(4)] for _ in range(3)]).T)[0].T
        sph = round_sphere(center, radius, basis)
        try:
            total = intersect_cycle(S2, sph)
        except CycleMeetsC:
            continue
        assert total == 0
        assert intersect_cycle(S1, sph) == 0
        done += 1


def test_cycle_through_c():
    sph = round_sphere((0, 0, 0, 0.3), 0.3, SLICE)
    with pytest.raises(CycleMeetsC):
        cycle_crossings(S2, sph)
    # δ₁ is transverse along C, so the same sphere pairs fine with it
    assert intersect_cycle(S1, sph) == 0


def test_expression_cycle_matches_builtin():
    coords = ["-1/4 + 0.6*sin(u)*cos(v)", "0", "0.6*sin(u)*sin(v)", "0.6*cos(u)"]
    cyc = from_expressions(coords, (0, "pi"), (0, "2*pi"), "collapse", "periodic")
    cyc.check_closed()
    a = [(c.sign, c.point.round(8).tolist()) for c in cycle_crossings(S2, cyc)]
    b = [(c.sign, c.point.round(8).tolist()) for c in cycle_crossings(S2, bounding_sphere())]
    assert a == b


def test_torus_pairing():
    # a flat torus around the x2-axis slice pairs to zero as well
    cyc = torus((-0.3, 0.1, 0.05, 0.2), (0.3, 0.2), [(1, 0, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1), (0, 1, 0, 0)])
    cyc.check_closed()
    assert intersect_cycle(S1, cyc) == 0


def test_open_surface_rejected():
    cyc = from_expressions(["u", "v", "0", "0"], (0, 1), (0, 1))
    with pytest.raises(BadCycle):
        cyc.check_closed()


def test_csv_roundtrip(sigma_samples):
    buf = io.StringIO()
    write_csv(sigma_samples.samples, buf)
    buf.seek(0)
    rows = read_csv(buf)
    assert len(rows) == len(sigma_samples)
    for row, smp in zip(rows, sigma_samples):
        assert row["point"] == [float(v) for v in smp.point]
        assert row["locus"] == smp.locus and row["sign"] == smp.coorientation
    assert buf.getvalue().splitlines()[0] == "x1,x2,x3,x4,locus,sign,residual"


def test_obj_export(sigma1_samples):
    buf = io.StringIO()
    write_obj(sigma1_samples.samples, buf)
    lines = [ln for ln in buf.getvalue().splitlines() if ln.startswith("v ")]
    assert len(lines) == len(sigma1_samples)
    assert all(len(ln.split()) == 4 for ln in lines)
