"""Built-in normal forms and example distributions.

Each entry carries its frame, a complement for the Cramer reductions, the
growth vectors it should show on named regions (with exact samplers for
those regions) and, where known, exact polynomial systems for its loci.

The coframes printed for the Σ₁ normal form and for the C and L forms have
no dx2 term, so their kernels contain ∂2 and the distributions they define
are integrable.  They are kept under ``*-as-printed`` names with that
growth (stalled at rank 2) recorded; the C-form used everywhere else is
the kernel frame X1 = ∂3, X2 = ∂4 - x3² ∂1 - x3 (x1 + f) ∂2.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import BadModulus, UnknownEntry
from .expr import parse_expression
from .flags import GrowthVector
from .symcalc import (Coframe2, Frame2, OneForm, PolyExpr, coframe_to_frame,
                      coordinate_frame, d, dx, x)

BOX = ((-1, 1),) * 4


@dataclass(frozen=True, eq=False)
class CatalogEntry:
    name: str
    description: str
    frame: Frame2
    complement: Frame2
    coframe: Coframe2 = None
    modulus: PolyExpr = None
    growth: dict = field(default_factory=dict)
    loci: dict = field(default_factory=dict)
    samplers: dict = field(default_factory=dict)
    box: tuple = BOX
    note: str = ""

    def sample(self, region, rng):
        return self.samplers[region](rng)


def _rat(rng, lo=-1, hi=1, denom=32):
    return Fraction(rng.randint(lo * denom, hi * denom), denom)


def _generic(rng):
    return tuple(_rat(rng) for _ in range(4))


def parse_poly(text):
    """Polynomial from an expression in x1..x4 (used for the modulus f)."""
    from .dsl import eval_poly_expr
    if isinstance(text, PolyExpr):
        return text
    return eval_poly_expr(parse_expression(str(text)))


def check_modulus(f):
    if evaluate_at_origin(f) != 0:
        raise BadModulus(f"modulus must vanish at 0: f = {f}")
    for j in range(1, 5):
        if evaluate_at_origin(f.diff(j)) != 0:
            raise BadModulus(f"modulus must have df(0) = 0: f = {f}")
    return f


def evaluate_at_origin(p):
    return p.constant_term()


def engel_canonical():
    X = d(1) + x(4) * d(2) + x(2) * d(3)
    W = d(4)
    return CatalogEntry(
        "engel-canonical", "Engel normal form X = d1 + x4 d2 + x2 d3, W = d4",
        Frame2(X, W), coordinate_frame(2, 3),
        growth={"everywhere": GrowthVector((2, 3, 4))},
        samplers={"everywhere": _generic},
    )


def c_form(f="x4^2"):
    """Frame near a point of C with functional modulus f (f(0) = 0, df(0) = 0)."""
    f = check_modulus(parse_poly(f))
    X1 = d(3)
    X2 = d(4) - x(3) ** 2 * d(1) - x(3) * (x(1) + f) * d(2)
    w1 = dx(1) + x(3) ** 2 * dx(4)
    w2 = dx(2) + x(3) * (x(1) + f) * dx(4)
    growth = {"generic": GrowthVector((2, 3, 4))}
    loci = {"S1": (x(3), x(1) + f + x(3) * f.diff(3))}
    samplers = {"generic": _generic}
    name = f"C-form({f})"
    if f == x(4) ** 2:
        growth.update({"S1": GrowthVector((2, 2, 4)), "S2": GrowthVector((2, 3, 3, 4)),
                       "C": GrowthVector((2, 2, 3, 4))})
        loci.update({"S2": (2 * x(4) + x(3) ** 2, x(1) + x(4) ** 2),
                     "C": (x(1), x(3), x(4))})
        samplers.update({"S1": _cform_s1, "S2": _cform_s2, "C": _cform_c})
    return CatalogEntry(
        name, "frame along C: X1 = d3, X2 = d4 - x3^2 d1 - x3 (x1 + f) d2",
        Frame2(X1, X2), coordinate_frame(1, 2), coframe=Coframe2(OneForm(w1), OneForm(w2)),
        modulus=f, growth=growth, loci=loci, samplers=samplers,
        note="" if f.diff(4).degree >= 1 else "d(∂4 f) vanishes: not generic for Σ₂",
    )


def _cform_s1(rng):
    # x3 = 0, x1 = -x4^2, away from C (x4 != 0)
    x4 = _nonzero(rng)
    return (-x4 * x4, _rat(rng), Fraction(0), x4)


def _cform_s2(rng):
    # x4 = -x3^2/2, x1 = -x4^2, away from C (x3 != 0)
    x3 = _nonzero(rng)
    x4 = -x3 * x3 / 2
    return (-x4 * x4, _rat(rng), x3, x4)


def _cform_c(rng):
    return (Fraction(0), _rat(rng), Fraction(0), Fraction(0))


def _nonzero(rng):
    while True:
        v = _rat(rng)
        if v:
            return v


def _printed(name, w1, w2, description):
    cof = Coframe2(OneForm(w1), OneForm(w2))
    fr = coframe_to_frame(cof)
    return CatalogEntry(
        name, description, fr, coordinate_frame(1, 3), coframe=cof,
        growth={"everywhere": GrowthVector((2, 2, 2, 2, 2, 2), stalled=True)},
        samplers={"everywhere": _generic},
        note="as printed the coframe has no dx2 term; the distribution is integrable",
    )


def z2a():
    return _printed("Z2A", dx(1) + x(3) * dx(4),
                    dx(3) + Fraction(1, 3) * (x(3) ** 2 + x(3) * x(4)) * dx(4),
                    "Σ₂ normal form (first region), coframe as printed")


def z2b():
    return _printed("Z2B", dx(1) + x(3) * dx(4), dx(3) + x(3) ** 2 * x(4) * dx(4),
                    "Σ₂ normal form (second region), coframe as printed")


def z1_as_printed():
    return _printed("Z1-as-printed", dx(1) + x(3) ** 2 * dx(4), dx(3) + x(3) * x(4) * dx(4),
                    "Σ₁ normal form as printed (the C and L forms are printed identically)")


def integrable():
    return CatalogEntry(
        "integrable", "coordinate 2-planes d1, d2", coordinate_frame(1, 2), coordinate_frame(3, 4),
        growth={"everywhere": GrowthVector((2, 2, 2, 2, 2, 2), stalled=True)},
        samplers={"everywhere": _generic},
    )


def c_form_nongeneric():
    e = c_form("x3*x4")
    return CatalogEntry(
        "C-form-x3x4", "C-form with f = x3 x4 (Σ₂ degenerates onto Σ₁)", e.frame, e.complement,
        e.coframe, e.modulus, e.growth, e.loci, e.samplers,
        note="non-generic modulus kept as a documented degenerate example",
    )


_BUILDERS = {
    "engel-canonical": engel_canonical,
    "C-form": c_form,
    "Z2A": z2a,
    "Z2B": z2b,
    "Z1-as-printed": z1_as_printed,
    "integrable": integrable,
    "C-form-x3x4": c_form_nongeneric,
}


def names():
    return list(_BUILDERS)


def get(name, f=None):
    """Look up an entry; ``C-form`` takes the modulus f (default x4^2), also
    accepted inline as ``C-form(x4^2)``."""
    name = name.strip()
    if name.startswith("C-form(") and name.endswith(")"):
        f = name[len("C-form("):-1]
        name = "C-form"
    if name not in _BUILDERS:
        raise UnknownEntry(f"unknown catalog entry {name!r}; known: {', '.join(names())}")
    if name == "C-form":
        return c_form(f if f is not None else "x4^2")
    if f is not None:
        raise BadModulus(f"entry {name!r} takes no modulus")
    return _BUILDERS[name]()


def all_entries():
    return [get(n) for n in names()]


def rng(seed=0):
    return random.Random(seed)
