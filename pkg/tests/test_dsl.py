import pytest
from hypothesis import given, settings, strategies as st

from engelloci import catalog
from engelloci.dsl import entry_to_model, parse_ast, parse_model, serialize
from engelloci.errors import FrameDependent, ModelSemanticError, ModelSyntaxError
from engelloci.expr import parse_expression, to_source
from engelloci.symcalc import d, x

CFORM_TEXT = """
# C-form with the default modulus
var x1 x2 x3 x4;
poly f = x4^2;
field X1 = d3;
field X2 = d4 - x3^2*d1 - x3*(x1+f)*d2;
frame D = (X1, X2) oriented;
complement = (d1, d2);
box = [-1,1]^4;
tol rank = 1e-9;
tol refine = 1/10000000000;
coorient S1 = (1, 3);
sign = -1;
"""


def test_parse_cform():
    m = parse_model(CFORM_TEXT)
    assert m.frame == catalog.get("C-form").frame
    assert m.polys["f"] == x(4) ** 2
    assert m.box == ((-1.0, 1.0),) * 4
    assert m.tolerances["refine"] == pytest.approx(1e-10)
    assert m.sign_convention == -1
    assert m.loci_config().sign_convention == -1


def test_parse_engel_field():
    m = parse_model("field X = d1 + x4*d2 + x2*d3; field W = d4; frame D = (X, W) oriented;")
    assert m.frame.v1 == d(1) + x(4) * d(2) + x(2) * d(3)
    assert m.complement.v1 == d(1)


def test_box_product_and_reversed():
    m = parse_model("field A = d1; field B = d2; frame D = (A, B) reversed;"
                    "box = [-1, 1] * [0, 2] * [-1/2, 1/2] * [-3, 3];")
    assert m.frame.orientation == -1
    assert m.box[2] == (-0.5, 0.5)


def test_coframe_model():
    m = parse_model("form w1 = dx1 + x3*dx4; form w2 = dx2 + x3^2*dx4;"
                    "coframe D = (w1, w2) oriented; complement = (d1, d2);")
    assert m.frame.v1 == d(3)


@pytest.mark.parametrize("name", catalog.names())
def test_catalog_roundtrip(name):
    e = catalog.get(name)
    text = entry_to_model(e)
    m = parse_model(text)
    assert m.frame == e.frame
    assert m.complement == e.complement
    assert m.box == tuple((float(a), float(b)) for a, b in e.box)
    ast = parse_ast(text)
    assert parse_ast(serialize(ast)) == ast
    assert serialize(parse_ast(serialize(ast))) == serialize(ast)


def test_syntax_errors_carry_location():
    with pytest.raises(ModelSyntaxError) as info:
        parse_model("var x1 x2 x3 x4;\nfield X = d1 +;\n")
    assert (info.value.line, info.value.col) == (2, 15)
    with pytest.raises(ModelSyntaxError) as info:
        parse_model("field X = d1 $ d2;")
    assert info.value.col == 14
    with pytest.raises(ModelSyntaxError):
        parse_model("frame D = (X1, X2) sideways;")
    with pytest.raises(ModelSyntaxError):
        parse_model("box = [-1,1]^3;")
    with pytest.raises(ModelSyntaxError):
        parse_model("field X = d1^x1;")


@pytest.mark.parametrize("text, fragment", [
    ("field Y = d5;", "unknown name 'd5'"),
    ("poly f = 1 + x4^2; field A = d1; field B = d2; frame D = (A, B) oriented;", "bad modulus"),
    ("poly f = x1; field A = d1; field B = d2; frame D = (A, B) oriented;", "bad modulus"),
    ("field A = d1; field B = d2; frame D = (A, B, A) oriented;", "expected 2 members"),
    ("field A = d1*d2;", "cannot multiply"),
    ("field A = d1 + x1;", "cannot combine"),
    ("poly g = d1;", "is a vector field"),
    ("field A = d1/x1;", "division"),
    ("field A = sin(x1)*d1;", "functions"),
    ("var x y z w;", "exactly the variables"),
    ("field A = d1; field B = d2; frame D = (A, B) oriented; tol speed = 1;", "unknown tolerance"),
    ("field A = d1; field B = d2;", "no frame"),
    ("field A = d1; field A = d2;", "already defined"),
    ("field A = d1; field B = d2; frame D = (A, B) oriented; orientation = 2;", "1 or -1"),
    ("field A = d1; field B = d2; frame D = (A, B) oriented; coorient S3 = (1, 2);", "S1 or S2"),
])
def test_semantic_errors(text, fragment):
    with pytest.raises(ModelSemanticError) as info:
        parse_model(text)
    assert fragment in str(info.value)


def test_unknown_name_location():
    with pytest.raises(ModelSemanticError) as info:
        parse_model("var x1 x2 x3 x4;\nfield Y = d1 + d5;\n")
    assert (info.value.line, info.value.col) == (2, 16)


def test_frame_independence_on_box():
    text = "field A = d1; field B = x1*d1 + x2*d2; frame D = (A, B) oriented;"
    with pytest.raises(FrameDependent):
        parse_model(text)
    parse_model(text.replace("oriented;", "oriented; box = [1, 2]^4;"))


names = st.sampled_from(["x1", "x2", "x3", "x4", "f"])
nums = st.sampled_from(["1", "2", "1/3", "0.5", "7"])
exprs = st.recursive(
    st.one_of(names, nums),
    lambda e: st.one_of(
        st.tuples(e, st.sampled_from(["+", "-", "*", "/"]), e).map(lambda t: f"({t[0]}) {t[1]} ({t[2]})"),
        e.map(lambda s: f"-({s})"),
        st.tuples(e, st.integers(0, 3)).map(lambda t: f"({t[0]})^{t[1]}"),
    ),
    max_leaves=8,
)


@settings(max_examples=100)
@given(exprs)
def test_expression_roundtrip(text):
    node = parse_expression(text)
    again = parse_expression(to_source(node))
    assert again == node
