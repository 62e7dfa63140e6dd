"""Model files: one chart, one distribution.

Example::

    var x1 x2 x3 x4;
    poly f = x4^2;
    field X1 = d3;
    field X2 = d4 - x3^2*d1 - x3*(x1 + f)*d2;
    frame D = (X1, X2) oriented;
    complement = (d1, d2);
    box = [-1, 1]^4;
    tol rank = 1e-9;
    coorient S1 = (1, 3);

Statements end with ``;``.  Expressions use + - * / ^ with rational
literals; ``d1..d4`` are coordinate fields and ``dx1..dx4`` coordinate
1-forms.  A ``coframe D = (w1, w2) oriented;`` may replace the frame.
Other settings: ``orientation = -1;`` (chart orientation) and
``sign = -1;`` (global co-orientation convention).
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction

from .errors import EngelError, ModelSemanticError
from .expr import (BinOp, Call, Name, Neg, Num, Pow, TokenStream, parse_expr, to_source,
                   tokenize)
from .loci import LociConfig, SIGMA1, SIGMA2
from .symcalc import (Coframe2, Frame2, OneForm, PolyExpr, VectorField, coframe_to_frame,
                      coordinate_frame)

VARS = ("x1", "x2", "x3", "x4")
TOLERANCES = {"rank": "rank_tol", "refine": "refine_tol", "c": "c_threshold", "tag": "tag_tol"}
DEFAULT_TOLS = {"rank": 1e-9, "refine": 1e-10, "c": 1e-6, "tag": 1e-6}


# statements

@dataclass(frozen=True)
class VarDecl:
    names: tuple
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Define:
    kind: str  # poly | field | form
    name: str
    expr: object
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class FrameDecl:
    kind: str  # frame | coframe
    name: str
    members: tuple
    orientation: str  # oriented | reversed
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class ComplementDecl:
    members: tuple
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class BoxDecl:
    intervals: tuple  # ((lo_expr, hi_expr), ...)
    power: int  # 4 for [a,b]^4, 1 for a product of four intervals
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class TolDecl:
    name: str
    value: object
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class CoorientDecl:
    locus: str
    axes: tuple
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Setting:
    key: str  # orientation | sign
    value: object
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class ModelAST:
    statements: tuple


def parse_ast(text):
    ts = TokenStream(tokenize(text))
    out = []
    while ts.tok.kind != "eof":
        out.append(_statement(ts))
    return ModelAST(tuple(out))


def _statement(ts):
    t = ts.tok
    if t.kind != "name":
        ts.error(f"expected a statement, found {t.text!r}")
    kw = t.text
    if kw == "var":
        ts.next()
        names = []
        while ts.tok.kind == "name":
            names.append(ts.next().text)
        ts.expect(";")
        return VarDecl(tuple(names), t.line)
    if kw in ("poly", "field", "form"):
        ts.next()
        name = ts.expect_kind("name").text
        ts.expect("=")
        expr = parse_expr(ts)
        ts.expect(";")
        return Define(kw, name, expr, t.line)
    if kw in ("frame", "coframe"):
        ts.next()
        name = ts.expect_kind("name").text
        ts.expect("=")
        members = _name_tuple(ts)
        orient = ts.expect_kind("name")
        if orient.text not in ("oriented", "reversed"):
            raise_at(orient, "expected 'oriented' or 'reversed'")
        ts.expect(";")
        return FrameDecl(kw, name, members, orient.text, t.line)
    if kw == "complement":
        ts.next()
        ts.expect("=")
        members = _name_tuple(ts)
        ts.expect(";")
        return ComplementDecl(members, t.line)
    if kw == "box":
        ts.next()
        ts.expect("=")
        intervals = [_interval(ts)]
        power = 1
        if ts.accept("^"):
            n = ts.expect_kind("number")
            power = int(n.text) if n.text.isdigit() else 0
            if power != 4:
                raise_at(n, "a box power must be 4")
        else:
            while ts.accept("*"):
                intervals.append(_interval(ts))
        ts.expect(";")
        return BoxDecl(tuple(intervals), power, t.line)
    if kw == "tol":
        ts.next()
        name = ts.expect_kind("name").text
        ts.expect("=")
        value = parse_expr(ts)
        ts.expect(";")
        return TolDecl(name, value, t.line)
    if kw == "coorient":
        ts.next()
        locus = ts.expect_kind("name").text
        ts.expect("=")
        ts.expect("(")
        a = ts.expect_kind("number").text
        ts.expect(",")
        b = ts.expect_kind("number").text
        ts.expect(")")
        ts.expect(";")
        return CoorientDecl(locus, (int(a), int(b)), t.line)
    if kw in ("orientation", "sign"):
        ts.next()
        ts.expect("=")
        value = parse_expr(ts)
        ts.expect(";")
        return Setting(kw, value, t.line)
    ts.error(f"unknown statement {kw!r}")


def raise_at(tok, message):
    from .errors import ModelSyntaxError
    raise ModelSyntaxError(message, tok.line, tok.col)


def _name_tuple(ts):
    ts.expect("(")
    names = [ts.expect_kind("name").text]
    while ts.accept(","):
        names.append(ts.expect_kind("name").text)
    ts.expect(")")
    return tuple(names)


def _interval(ts):
    ts.expect("[")
    lo = parse_expr(ts)
    ts.expect(",")
    hi = parse_expr(ts)
    ts.expect("]")
    return (lo, hi)


def serialize(ast):
    """Model text for an AST; parsing it back gives an equal AST."""
    lines = []
    for st in ast.statements:
        if isinstance(st, VarDecl):
            lines.append("var " + " ".join(st.names) + ";")
        elif isinstance(st, Define):
            lines.append(f"{st.kind} {st.name} = {to_source(st.expr)};")
        elif isinstance(st, FrameDecl):
            lines.append(f"{st.kind} {st.name} = ({', '.join(st.members)}) {st.orientation};")
        elif isinstance(st, ComplementDecl):
            lines.append(f"complement = ({', '.join(st.members)});")
        elif isinstance(st, BoxDecl):
            ivs = " * ".join(f"[{to_source(a)}, {to_source(b)}]" for a, b in st.intervals)
            lines.append(f"box = {ivs}^4;" if st.power == 4 else f"box = {ivs};")
        elif isinstance(st, TolDecl):
            lines.append(f"tol {st.name} = {to_source(st.value)};")
        elif isinstance(st, CoorientDecl):
            lines.append(f"coorient {st.locus} = ({st.axes[0]}, {st.axes[1]});")
        elif isinstance(st, Setting):
            lines.append(f"{st.key} = {to_source(st.value)};")
    return "\n".join(lines) + "\n"


# evaluation

def _where(node):
    span = getattr(node, "span", None)
    return (span.line, span.col) if span else (None, None)


def _kind(v):
    if isinstance(v, PolyExpr):
        return "polynomial"
    if isinstance(v, VectorField):
        return "vector field"
    return "1-form"


def eval_node(node, env):
    """Value of an expression: PolyExpr, VectorField or OneForm."""
    if isinstance(node, Num):
        return PolyExpr.const(node.value)
    if isinstance(node, Name):
        if node.id in env:
            return env[node.id]
        raise ModelSemanticError(f"unknown name {node.id!r}", *_where(node))
    if isinstance(node, Neg):
        return -eval_node(node.operand, env)
    if isinstance(node, Pow):
        base = eval_node(node.base, env)
        if not isinstance(base, PolyExpr):
            raise ModelSemanticError(f"cannot raise a {_kind(base)} to a power", *_where(node))
        return base ** node.exponent
    if isinstance(node, Call):
        raise ModelSemanticError(f"functions are not allowed in models ({node.func})", *_where(node))
    if isinstance(node, BinOp):
        a = eval_node(node.left, env)
        b = eval_node(node.right, env)
        if node.op in "+-":
            if type(a) is not type(b):
                raise ModelSemanticError(f"cannot combine a {_kind(a)} and a {_kind(b)}",
                                         *_where(node))
            return a + b if node.op == "+" else a - b
        if node.op == "*":
            if not isinstance(a, PolyExpr) and not isinstance(b, PolyExpr):
                raise ModelSemanticError(f"cannot multiply a {_kind(a)} by a {_kind(b)}",
                                         *_where(node))
            return b * a if isinstance(a, PolyExpr) and not isinstance(b, PolyExpr) else a * b
        if not (isinstance(b, PolyExpr) and b.is_constant()) or b.is_zero():
            raise ModelSemanticError("division only by a nonzero constant", *_where(node))
        return a * PolyExpr.const(1 / b.constant_term())
    raise TypeError(node)


def base_env():
    env = {v: PolyExpr.var(i + 1) for i, v in enumerate(VARS)}
    for i in range(1, 5):
        env[f"d{i}"] = VectorField.basis(i)
        env[f"dx{i}"] = OneForm.basis(i)
    return env


def eval_poly_expr(node, env=None):
    v = eval_node(node, base_env() if env is None else env)
    if not isinstance(v, PolyExpr):
        raise ModelSemanticError(f"expected a polynomial, got a {_kind(v)}", *_where(node))
    return v


def _constant(node, env=None):
    v = eval_poly_expr(node, env or {})
    if not v.is_constant():
        raise ModelSemanticError("expected a constant", *_where(node))
    return v.constant_term()


@dataclass
class ModelFile:
    ast: ModelAST
    polys: dict
    fields: dict
    forms: dict
    frame: Frame2
    coframe: Coframe2
    complement: Frame2
    box: tuple
    tolerances: dict
    coorient: dict
    chart_orientation: int = 1
    sign_convention: int = 1

    def loci_config(self, **overrides):
        cfg = LociConfig(refine_tol=self.tolerances["refine"], c_threshold=self.tolerances["c"],
                         tag_tol=self.tolerances["tag"], reference_axes=dict(self.coorient),
                         sign_convention=self.sign_convention)
        return replace(cfg, **overrides)

    @property
    def rank_tol(self):
        return self.tolerances["rank"]

    def to_text(self):
        return serialize(self.ast)


def parse_model(text, check_box=True):
    """Parse and check a model; errors carry line and column."""
    return build_model(parse_ast(text), check_box)


def build_model(ast, check_box=True):
    env = base_env()
    polys, fields, forms = {}, {}, {}
    frame = coframe = complement = None
    box = ((-1.0, 1.0),) * 4
    tols = dict(DEFAULT_TOLS)
    coorient = {SIGMA1: (1, 3), SIGMA2: (1, 4)}
    settings = {"orientation": 1, "sign": 1}
    for st in ast.statements:
        where = (st.line, None)
        if isinstance(st, VarDecl):
            if tuple(st.names) != VARS:
                raise ModelSemanticError("a chart has exactly the variables x1 x2 x3 x4", *where)
        elif isinstance(st, Define):
            if st.name in env:
                raise ModelSemanticError(f"name {st.name!r} is already defined", *where)
            value = eval_node(st.expr, env)
            want = {"poly": PolyExpr, "field": VectorField, "form": OneForm}[st.kind]
            if not isinstance(value, want):
                raise ModelSemanticError(f"{st.kind} {st.name} is a {_kind(value)}", *where)
            if st.kind == "poly" and st.name == "f":
                _check_modulus(value, where)
            env[st.name] = value
            {"poly": polys, "field": fields, "form": forms}[st.kind][st.name] = value
        elif isinstance(st, FrameDecl):
            if frame is not None:
                raise ModelSemanticError("only one frame or coframe per model", *where)
            members = _members(st.members, env, VectorField if st.kind == "frame" else OneForm, where)
            sign = 1 if st.orientation == "oriented" else -1
            if st.kind == "frame":
                frame = Frame2(*members, sign)
            else:
                coframe = Coframe2(*members, sign)
                try:
                    frame = coframe_to_frame(coframe)
                except EngelError as exc:
                    raise ModelSemanticError(str(exc), *where) from None
        elif isinstance(st, ComplementDecl):
            complement = Frame2(*_members(st.members, env, VectorField, where))
        elif isinstance(st, BoxDecl):
            ivs = [(float(_constant(a)), float(_constant(b))) for a, b in st.intervals]
            if st.power == 4:
                ivs = ivs * 4
            if len(ivs) != 4:
                raise ModelSemanticError(f"box needs 4 intervals, got {len(ivs)}", *where)
            if any(lo >= hi for lo, hi in ivs):
                raise ModelSemanticError("box intervals must have lo < hi", *where)
            box = tuple(ivs)
        elif isinstance(st, TolDecl):
            if st.name not in TOLERANCES:
                raise ModelSemanticError(
                    f"unknown tolerance {st.name!r} (known: {', '.join(TOLERANCES)})", *where)
            value = float(_constant(st.value))
            if value <= 0:
                raise ModelSemanticError("tolerances must be positive", *where)
            tols[st.name] = value
        elif isinstance(st, CoorientDecl):
            if st.locus not in (SIGMA1, SIGMA2):
                raise ModelSemanticError(f"coorient applies to S1 or S2, not {st.locus!r}", *where)
            a, b = st.axes
            if not (1 <= a <= 4 and 1 <= b <= 4 and a != b):
                raise ModelSemanticError("coorient needs two distinct axes in 1..4", *where)
            coorient[st.locus] = (a, b)
        elif isinstance(st, Setting):
            value = _constant(st.value)
            if value not in (1, -1):
                raise ModelSemanticError(f"{st.key} must be 1 or -1", *where)
            settings[st.key] = int(value)
    if frame is None:
        raise ModelSemanticError("model declares no frame or coframe")
    if complement is None:
        complement = coordinate_frame(1, 2)
    if check_box:
        frame.check_independent(box)
    return ModelFile(ast, polys, fields, forms, frame, coframe, complement, box, tols, coorient,
                     settings["orientation"], settings["sign"])


def _members(names, env, kind, where):
    if len(names) != 2:
        raise ModelSemanticError(f"expected 2 members, got {len(names)}", *where)
    out = []
    for n in names:
        if n not in env:
            raise ModelSemanticError(f"unknown name {n!r}", *where)
        v = env[n]
        if not isinstance(v, kind):
            raise ModelSemanticError(f"{n} is a {_kind(v)}", *where)
        out.append(v)
    return out


def _check_modulus(f, where):
    if f.constant_term() != 0 or any(f.diff(j).constant_term() != 0 for j in range(1, 5)):
        raise ModelSemanticError(f"bad modulus: f must satisfy f(0) = 0 and df(0) = 0 (f = {f})",
                                 *where)


# catalog entries as model text

def _fmt_num(v):
    v = Fraction(v)
    if v.denominator == 1:
        return str(v.numerator)
    return f"{v.numerator}/{v.denominator}"


def _fmt_bound(v):
    v = Fraction(v).limit_denominator(10 ** 12)
    return _fmt_num(v) if v >= 0 else f"-{_fmt_num(-v)}"


def entry_to_model(entry):
    """Model text that reproduces a catalog entry's distribution and settings."""
    lines = ["var x1 x2 x3 x4;"]
    if entry.modulus is not None:
        lines.append(f"poly f = {entry.modulus};")
    if entry.coframe is not None:
        lines.append(f"form w1 = {entry.coframe.w1};")
        lines.append(f"form w2 = {entry.coframe.w2};")
        orient = "oriented" if entry.coframe.orientation == 1 else "reversed"
        lines.append(f"coframe D = (w1, w2) {orient};")
    else:
        lines.append(f"field X1 = {entry.frame.v1};")
        lines.append(f"field X2 = {entry.frame.v2};")
        orient = "oriented" if entry.frame.orientation == 1 else "reversed"
        lines.append(f"frame D = (X1, X2) {orient};")
    comp = []
    for k, v in enumerate(entry.complement, start=1):
        if v in [VectorField.basis(i) for i in range(1, 5)]:
            comp.append(str(v))
        else:
            lines.append(f"field C{k} = {v};")
            comp.append(f"C{k}")
    lines.append(f"complement = ({comp[0]}, {comp[1]});")
    if len(set(entry.box)) == 1:
        lo, hi = entry.box[0]
        lines.append(f"box = [{_fmt_bound(lo)}, {_fmt_bound(hi)}]^4;")
    else:
        lines.append("box = " + " * ".join(f"[{_fmt_bound(a)}, {_fmt_bound(b)}]"
                                           for a, b in entry.box) + ";")
    return "\n".join(lines) + "\n"
