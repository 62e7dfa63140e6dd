import random

import pytest

import oracle
from engelloci import catalog
from engelloci.errors import BadModulus, UnknownEntry
from engelloci.flags import growth_vector
from engelloci.symcalc import evaluate, x


def test_names():
    assert set(catalog.names()) >= {"engel-canonical", "C-form", "Z2A", "Z2B", "integrable"}


def test_lookup_errors():
    with pytest.raises(UnknownEntry):
        catalog.get("L-form")
    with pytest.raises(BadModulus):
        catalog.get("C-form", "1 + x4^2")
    with pytest.raises(BadModulus):
        catalog.get("C-form", "x4 + x1^2")
    with pytest.raises(BadModulus):
        catalog.get("Z2A", "x4^2")


def test_inline_modulus():
    e = catalog.get("C-form(x3*x4 + x4^2)")
    assert e.modulus == x(3) * x(4) + x(4) ** 2
    assert e.name == "C-form(x3*x4 + x4^2)"


@pytest.mark.parametrize("name", catalog.names())
def test_expected_growth(name):
    e = catalog.get(name)
    rng = random.Random(7)
    for region, expected in e.growth.items():
        for _ in range(15):
            p = e.sample(region, rng)
            g = growth_vector(e.frame, p, mode="exact")
            if region == "generic" and not g.is_engel:
                continue  # random points may land on a stratum
            assert g == expected, (region, p)


def test_generic_points_are_mostly_engel():
    e = catalog.get("C-form")
    rng = random.Random(8)
    hits = sum(growth_vector(e.frame, e.sample("generic", rng)).is_engel for _ in range(50))
    assert hits >= 45


def test_samplers_lie_on_loci():
    e = catalog.get("C-form")
    rng = random.Random(9)
    for region in ("S1", "S2", "C"):
        for _ in range(10):
            p = e.sample(region, rng)
            assert all(evaluate(q, p) == 0 for q in e.loci[region])


def test_coframe_and_frame_agree():
    for name in catalog.names():
        e = catalog.get(name)
        if e.coframe is None:
            continue
        for w in e.coframe:
            for v in e.frame:
                assert w.pair(v).is_zero()


def test_printed_coframes_are_integrable():
    # as printed, the kernels are closed under brackets: the bracket is in D everywhere
    for name in ("Z2A", "Z2B", "Z1-as-printed"):
        e = catalog.get(name)
        fr = e.frame
        br = oracle.bracket(oracle.field(fr.v1), oracle.field(fr.v2))
        w = [oracle.field(c) for c in e.coframe]
        assert all(sum(a * b for a, b in zip(form, br)).expand() == 0 for form in w)


def test_nongeneric_modulus_note():
    e = catalog.get("C-form-x3x4")
    assert e.modulus == x(3) * x(4)
    assert e.note
