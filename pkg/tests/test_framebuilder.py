import random
from fractions import Fraction

import numpy as np
import pytest

from engelloci import catalog
from engelloci.errors import DegenerateMetric, NotEngelPoint
from engelloci.flags import engel_line_vector, is_engel_at
from engelloci.framebuilder import canonical_flag_at, frames_on_grid, parallelization_frame_at

ENGEL = catalog.get("engel-canonical")
CFORM = catalog.get("C-form")


def rational_points(n, seed):
    rng = random.Random(seed)
    return [tuple(Fraction(rng.randint(-32, 32), 32) for _ in range(4)) for _ in range(n)]


def test_engel_origin_anchor():
    flag = canonical_flag_at(ENGEL.frame, (0, 0, 0, 0))
    e = parallelization_frame_at(flag)
    expected = [(0, 0, 0, 1), (-1, 0, 0, 0), (0, -1, 0, 0), (0, 0, -1, 0)]
    assert np.allclose(np.array(e), np.array(expected), atol=1e-15)
    assert np.linalg.det(np.stack(e, axis=1)) == pytest.approx(1.0)


def orthonormal(e, g=None):
    m = np.stack(e, axis=1)
    g = np.eye(4) if g is None else g
    return np.max(np.abs(m.T @ g @ m - np.eye(4)))


@pytest.mark.parametrize("entry", [ENGEL, CFORM], ids=["engel", "cform"])
def test_frames_orthonormal_and_aligned(entry):
    for p in rational_points(30, 3):
        if not is_engel_at(entry.frame, p):
            continue
        e = parallelization_frame_at(canonical_flag_at(entry.frame, p))
        assert orthonormal(e) < 1e-12
        assert np.linalg.det(np.stack(e, axis=1)) > 0
        line = np.array([float(v) for v in engel_line_vector(entry.frame, p)])
        cos = abs(e[0] @ line) / np.linalg.norm(line)
        assert np.arccos(min(cos, 1.0)) < 1e-7


def test_l_orientation_is_canonical():
    # the oriented Engel line does not depend on the frame chosen for D
    for p in rational_points(20, 4):
        fr = CFORM.frame
        if not is_engel_at(fr, p):
            continue
        base = canonical_flag_at(fr, p).L_dir
        swapped = canonical_flag_at(fr.swapped(), p).L_dir
        reversed_d = canonical_flag_at(fr.reversed(), p).L_dir
        for other in (swapped, reversed_d):
            cos = base @ other / np.linalg.norm(base) / np.linalg.norm(other)
            assert cos == pytest.approx(1.0)


def test_orientation_chain_under_reversal():
    a = canonical_flag_at(ENGEL.frame, (0, 0, 0, 0)).orientations
    b = canonical_flag_at(ENGEL.frame.reversed(), (0, 0, 0, 0)).orientations
    for key in ("D", "V2", "D/L"):
        assert b[key] == -a[key]
    for key in ("D2", "V3", "L"):
        assert b[key] == a[key]


def test_chart_orientation():
    # reversing T flips V3, hence D/L through ad_δ, hence L
    flag = canonical_flag_at(ENGEL.frame, (0, 0, 0, 0), chart_orientation=-1)
    assert flag.orientations["V3"] == 1 and flag.orientations["L"] == 1
    e = parallelization_frame_at(flag, chart_orientation=-1)
    assert np.linalg.det(np.stack(e, axis=1)) == pytest.approx(-1.0)
    assert np.allclose(e[0], (0, 0, 0, -1))


def test_custom_metric():
    g = np.diag([1.0, 2.0, 3.0, 4.0]) + 0.1 * (np.ones((4, 4)) - np.eye(4))
    flag = canonical_flag_at(ENGEL.frame, (Fraction(1, 2), 0, Fraction(1, 3), 0))
    e = parallelization_frame_at(flag, metric=g)
    assert orthonormal(e, g) < 1e-12
    with pytest.raises(DegenerateMetric):
        parallelization_frame_at(flag, metric=-np.eye(4))
    with pytest.raises(DegenerateMetric):
        parallelization_frame_at(flag, metric=np.ones((3, 3)))


def test_not_engel():
    with pytest.raises(NotEngelPoint):
        canonical_flag_at(CFORM.frame, (0, 0, 0, 0))


def test_frames_on_grid_skips_non_engel():
    pts = [(0, 0, 0, 0), (1, 1, 1, 1), (-1, 0, 0, 1)]
    out = frames_on_grid(CFORM.frame, pts)
    assert [o["point"] for o in out] == [[1.0, 1.0, 1.0, 1.0]]
    assert len(out[0]["frame"]) == 4
