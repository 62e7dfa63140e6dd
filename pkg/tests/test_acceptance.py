"""Acceptance criteria, each at its stated tolerance.

Run with ``pytest tests/test_acceptance.py``; the terminal summary lists
one PASS/FAIL line per criterion.
"""
import math
import random
import time
from fractions import Fraction

import numpy as np
import pytest

from engelloci import catalog
from engelloci.charclasses import (CharNumbers, existence_criterion, random_presentation,
                                   random_w_classes, sigma2_closed_form, theorem2_classes,
                                   truncated_polynomial_ring)
from engelloci.cycles import round_sphere
from engelloci.flags import build_flag, engel_line_vector, growth_vector_at, is_engel_at
from engelloci.framebuilder import canonical_flag_at, parallelization_frame_at
from engelloci.loci import (SIGMA1, SIGMA2, cycle_crossings, extract_c_curve, extract_locus,
                            link_consistency_at, reversal_check)
from engelloci.sections import check_welldefined_delta2, delta1, delta2, transversality_at

TITLES = {
    1: "Engel verification: (2,3,4) at 1000 exact points, Engel line = span(d4), < 5 s",
    2: "delta1 Jacobian at the origin; Sigma1 extraction on grid 17 (>= 200 samples, 1e-8), < 30 s",
    3: "delta2 rank 1 at the origin, rank 2 on Sigma minus C; reversal on Sigma1 and Sigma2 only for delta2",
    4: "link consistency at 10 points of C: 4 points, two plus and two minus",
    5: "bounding sphere pairs to 0 with delta1 (x4 = +-sqrt(0.35)) and delta2 (4 points); reversal negates",
    6: "class formulas in Z2[a]/(a^5) and the Sigma2 identity on random presentations",
    7: "existence criterion (0,0), (2,0), (24,-16)",
    8: "delta2 extension independence at 50 exact points for every catalog entry",
    9: "numeric growth vectors agree with exact ones at 200 points per catalog entry",
    10: "parallelization frames orthonormal, positive, E1 on the Engel line at 100 points of two entries",
}

CFORM = catalog.get("C-form", "x4^2")
S1 = delta1(CFORM.frame, CFORM.complement)
S2 = delta2(CFORM.frame, CFORM.complement)


def rational(rng, denom=64):
    return Fraction(rng.randint(-denom, denom), denom)


def test_criterion_01_engel_verification():
    e = catalog.get("engel-canonical")
    rng = random.Random(2024)
    pts = [tuple(rational(rng, 997) for _ in range(4)) for _ in range(1000)]
    t0 = time.perf_counter()
    flag = build_flag(e.frame, 6)
    failures = sum(not growth_vector_at(flag, p, mode="exact").is_engel for p in pts)
    lines_ok = all(engel_line_vector(e.frame, p) == (0, 0, 0, 1) for p in pts)
    elapsed = time.perf_counter() - t0
    assert failures == 0
    assert lines_ok
    assert elapsed < 5.0, elapsed


def test_criterion_02_sigma1_anchor():
    # d/dx3 delta1 = -2 d1 and d/dx1 delta1 = -d2 at the origin
    assert S1.jacobian_exact((0, 0, 0, 0)) == [[0, 0, -2, 0], [-1, 0, 0, 0]]
    t0 = time.perf_counter()
    ex = extract_locus(S1, [(-1, 1)] * 4, grid=17)
    elapsed = time.perf_counter() - t0
    assert len(ex) >= 200
    for smp in ex:
        x1, _, x3, x4 = smp.point
        assert abs(x3) <= 1e-8
        assert abs(x1 + x4 * x4) <= 1e-8
    assert elapsed < 30.0, elapsed


def test_criterion_03_delta2_anchors():
    assert transversality_at(S2, (0, 0, 0, 0)).rank == 1
    rng = random.Random(3)
    for region in ("S1", "S2") * 25:
        p = CFORM.sample(region, rng)
        assert transversality_at(S2, p, tol=0).rank == 2
    s1_path = [(-t * t, 0.2, 0.0, t) for t in np.linspace(-0.6, 0.6, 13)]
    s2_path = [(-(t * t / 2) ** 2, 0.2, t, -t * t / 2) for t in np.linspace(-0.6, 0.6, 13)]
    r1 = reversal_check(S2, "s1", s1_path)
    r2 = reversal_check(S2, "s2", s2_path)
    assert r1.reversed and r2.reversed
    assert not reversal_check(S1, "s1", s1_path).reversed


def test_criterion_04_link_consistency():
    pts = extract_c_curve(CFORM.frame, CFORM.complement, [(-1, 1)] * 4, grid=9)
    # ten points of C spread along the x2-axis
    targets = np.linspace(-0.9, 0.9, 10)
    for x2 in targets:
        near = pts[np.argmin(np.abs(pts[:, 1] - x2))]
        c_point = near if abs(near[1] - x2) < 1e-9 else np.array([0.0, x2, 0.0, 0.0])
        rep = link_consistency_at(S2, c_point, 0.05)
        assert len(rep.crossings) == 4
        assert sorted(rep.signs) == [-1, -1, 1, 1]
        assert rep.total == 0


def test_criterion_05_cycle_pairing():
    sphere = round_sphere((-0.25, 0, 0, 0), 0.6, [(1, 0, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1)])
    c1 = cycle_crossings(S1, sphere)
    assert len(c1) == 2 and sum(c.sign for c in c1) == 0
    assert sorted(c.point[3] for c in c1) == pytest.approx([-math.sqrt(0.35), math.sqrt(0.35)],
                                                           abs=1e-8)
    assert all(abs(c.point[2]) <= 1e-8 for c in c1)
    c2 = cycle_crossings(S2, sphere)
    assert len(c2) == 4 and sum(c.sign for c in c2) == 0
    assert sorted(c.locus for c in c2) == [SIGMA1, SIGMA1, SIGMA2, SIGMA2]
    for s, base in ((S1, c1), (S2, c2)):
        rev = cycle_crossings(s, sphere.reversed())
        assert [c.sign for c in rev] == [-c.sign for c in base]


def test_criterion_06_class_formulas():
    ring = truncated_polynomial_ring("a", 4)
    a = ring.element("a")
    r = theorem2_classes(a, a * a, a, ring.zero())
    assert (r["sigma1"], r["sigma2"], r["union"], r["intersection"]) == (
        ring.zero(), a * a, a * a, ring.zero())
    rng = random.Random(6)
    for _ in range(3):
        pres = random_presentation(rng)
        for _ in range(100):
            w = random_w_classes(pres, rng)
            r = theorem2_classes(*w)
            assert r["sigma2"] == r["sigma1"] + r["union"] == sigma2_closed_form(*w)


def test_criterion_07_existence():
    assert existence_criterion(CharNumbers(0, 0)) is True
    assert existence_criterion(CharNumbers(2, 0)) is False
    assert existence_criterion(CharNumbers(24, -16)) is True


def test_criterion_08_welldefinedness():
    for name in catalog.names():
        e = catalog.get(name)
        rep = check_welldefined_delta2(e.frame, e.complement, trials=50, tol=0, seed=8)
        assert rep.trials == 50 and rep.max_deviation == 0


def test_criterion_09_oracle_equivalence():
    rng = random.Random(9)
    for name in catalog.names():
        e = catalog.get(name)
        regions = list(e.samplers)
        flag = build_flag(e.frame, 6)
        for i in range(200):
            p = e.sample(regions[i % len(regions)], rng)
            exact = growth_vector_at(flag, p, mode="exact")
            numeric = growth_vector_at(flag, tuple(float(v) for v in p), mode="numeric")
            assert exact == numeric, (name, p)


def test_criterion_10_parallelization():
    rng = random.Random(10)
    for name in ("engel-canonical", "C-form"):
        e = catalog.get(name)
        done = 0
        while done < 100:
            p = tuple(rational(rng) for _ in range(4))
            if not is_engel_at(e.frame, p):
                continue
            frame = parallelization_frame_at(canonical_flag_at(e.frame, p))
            m = np.stack(frame, axis=1)
            assert np.max(np.abs(m.T @ m - np.eye(4))) < 1e-12
            assert np.linalg.det(m) > 0
            line = np.array([float(v) for v in engel_line_vector(e.frame, p)])
            line /= np.linalg.norm(line)
            angle = math.atan2(np.linalg.norm(line - (line @ frame[0]) * frame[0]), abs(line @ frame[0]))
            assert angle < 1e-10
            done += 1

