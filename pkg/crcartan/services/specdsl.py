"""Parser, validator, pretty-printer and jet evaluator for manifold spec files (.crm)."""
import logging
import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from crcartan.core.errors import DomainError, ParseError
from crcartan.services.jets import Jet, jet_apply

logger = logging.getLogger(__name__)

FUNCTIONS = ("exp", "log", "sin", "cos", "sqrt")
KEYWORDS = frozenset(("manifold", "n", "complex", "coords", "param", "d", "i", "conj") + FUNCTIONS)
# Deepest expression tree the parser accepts; evaluation recurses once per level.
MAX_NESTING = 200

Pos = Optional[Tuple[int, int]]


# ----------------------------------------------------------------------
# syntax tree
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class Number:
    value: float
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class ImagUnit:
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Name:
    ident: str
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Differential:
    arg: "Expr"
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class BinaryOp:
    op: str
    left: "Expr"
    right: "Expr"
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Negate:
    operand: "Expr"
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Power:
    base: "Expr"
    exponent: int
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Conjugate:
    arg: "Expr"
    pos: Pos = field(default=None, compare=False, repr=False)


Expr = Union[Number, ImagUnit, Name, Differential, BinaryOp, Negate, Power, Call, Conjugate]


def to_source(expr: Expr) -> str:
    """Fully parenthesized source text that reparses to an identical tree."""
    if isinstance(expr, Number):
        return repr(float(expr.value))
    if isinstance(expr, ImagUnit):
        return "i"
    if isinstance(expr, Name):
        return expr.ident
    if isinstance(expr, Differential):
        return f"d({to_source(expr.arg)})"
    if isinstance(expr, BinaryOp):
        return f"({to_source(expr.left)} {expr.op} {to_source(expr.right)})"
    if isinstance(expr, Negate):
        return f"-{to_source(expr.operand)}"
    if isinstance(expr, Power):
        base = to_source(expr.base)
        if isinstance(expr.base, Negate):
            base = f"({base})"
        return f"{base}^{expr.exponent}"
    if isinstance(expr, Call):
        return f"{expr.func}({to_source(expr.arg)})"
    if isinstance(expr, Conjugate):
        return f"conj({to_source(expr.arg)})"
    raise TypeError(f"not an expression node: {expr!r}")


# ----------------------------------------------------------------------
# spec
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class ManifoldSpec:
    """A validated manifold spec: chart, parameters and coframe expressions."""

    name: str
    n: int
    coords: Tuple[str, ...]
    complex_pairs: Dict[str, Tuple[str, str]]
    params: Dict[str, float]
    bindings: Dict[str, Expr]

    @property
    def num_vars(self) -> int:
        return 2 * self.n + 1

    @property
    def theta_expr(self) -> Expr:
        return self.bindings["theta"]

    @property
    def thetaA_expr(self) -> List[Expr]:
        return [self.bindings[f"theta{a}"] for a in range(1, self.n + 1)]

    @property
    def density_expr(self) -> Optional[Expr]:
        return self.bindings.get("density")

    def to_source(self) -> str:
        header = [f'manifold "{self.name}" {{', f"n = {self.n}"]
        for name, (re_part, im_part) in self.complex_pairs.items():
            header.append(f"complex {name} = ({re_part}, {im_part})")
        header.append("coords = [" + ", ".join(self.coords) + "]")
        for name, value in self.params.items():
            header.append(f"param {name} = {float(value)!r}")
        lines = [" ".join(header) + " }"]
        for name, expr in self.bindings.items():
            lines.append(f"{name} = {to_source(expr)}")
        return "\n".join(lines) + "\n"


# ----------------------------------------------------------------------
# lexer
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<newline>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<string>"[^"\n]*")
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[={}()\[\],+\-*/^])
    """,
    re.VERBOSE,
)


def tokenize(text: str) -> List[Token]:
    tokens: List[Token] = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if match is None:
            char = text[pos]
            if char == '"':
                raise ParseError("unterminated string", line, col)
            raise ParseError(f"unexpected character {char!r}", line, col)
        kind = match.lastgroup
        if kind == "newline":
            line += 1
            line_start = match.end()
        elif kind not in ("ws", "comment"):
            tokens.append(Token(kind, match.group(), line, col))
        pos = match.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


# ----------------------------------------------------------------------
# parser
# ----------------------------------------------------------------------
class _Parser:
    """Recursive descent over the token list; one positioned ParseError on failure."""

    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.index = 0
        self.depth = 0

    @property
    def current(self) -> Token:
        return self.tokens[self.index]

    def _peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.index + offset, len(self.tokens) - 1)]

    def _error(self, message: str, token: Optional[Token] = None) -> ParseError:
        token = token or self.current
        return ParseError(message, token.line, token.col)

    def _advance(self) -> Token:
        token = self.current
        if token.kind != "eof":
            self.index += 1
        return token

    def _describe(self, token: Token) -> str:
        return "end of input" if token.kind == "eof" else repr(token.text)

    def _nested(self, parse: Callable[[], Expr], token: Token) -> Expr:
        self.depth += 1
        try:
            if self.depth > MAX_NESTING:
                raise self._error(f"expression nested deeper than {MAX_NESTING} levels", token)
            return parse()
        finally:
            self.depth -= 1

    def _expect_op(self, op: str) -> Token:
        if self.current.kind != "op" or self.current.text != op:
            raise self._error(f"expected {op!r}, found {self._describe(self.current)}")
        return self._advance()

    def _expect_keyword(self, word: str) -> Token:
        if self.current.kind != "ident" or self.current.text != word:
            raise self._error(f"expected {word!r}, found {self._describe(self.current)}")
        return self._advance()

    def _expect_ident(self) -> Token:
        token = self.current
        if token.kind != "ident":
            raise self._error(f"expected identifier, found {self._describe(token)}")
        if token.text in KEYWORDS:
            raise self._error(f"{token.text!r} is reserved")
        return self._advance()

    def _expect_int(self) -> int:
        token = self.current
        if token.kind != "number" or not token.text.isdigit():
            raise self._error(f"expected integer, found {self._describe(token)}")
        self._advance()
        return int(token.text)

    def _is_op(self, op: str) -> bool:
        return self.current.kind == "op" and self.current.text == op

    def _is_keyword(self, word: str) -> bool:
        return self.current.kind == "ident" and self.current.text == word

    # header ------------------------------------------------------------
    def parse_spec(self) -> ManifoldSpec:
        self._expect_keyword("manifold")
        name_token = self.current
        if name_token.kind != "string":
            raise self._error(f"expected manifold name string, found {self._describe(name_token)}")
        self._advance()
        self._expect_op("{")
        self._expect_keyword("n")
        self._expect_op("=")
        n_token = self.current
        n = self._expect_int()
        if n < 1:
            raise self._error("n must be at least 1", n_token)

        declared: Dict[str, Token] = {}
        complex_pairs: Dict[str, Tuple[str, str]] = {}
        pending_pairs: List[Tuple[Token, Token, Token]] = []
        while self._is_keyword("complex"):
            self._advance()
            cname = self._expect_ident()
            self._expect_op("=")
            self._expect_op("(")
            re_part = self._expect_ident()
            self._expect_op(",")
            im_part = self._expect_ident()
            self._expect_op(")")
            self._declare(declared, cname)
            complex_pairs[cname.text] = (re_part.text, im_part.text)
            pending_pairs.append((cname, re_part, im_part))

        coords_token = self._expect_keyword("coords")
        self._expect_op("=")
        self._expect_op("[")
        coords = [self._expect_ident()]
        while self._is_op(","):
            self._advance()
            coords.append(self._expect_ident())
        self._expect_op("]")
        for token in coords:
            self._declare(declared, token)
        if len(coords) != 2 * n + 1:
            raise self._error(
                f"arity mismatch: n = {n} needs {2 * n + 1} coordinates, got {len(coords)}",
                coords_token,
            )
        coord_names = {token.text for token in coords}
        for cname, re_part, im_part in pending_pairs:
            for part in (re_part, im_part):
                if part.text not in coord_names:
                    raise self._error(f"complex {cname.text!r} refers to unknown coordinate {part.text!r}", part)

        params: Dict[str, float] = {}
        while self._is_keyword("param"):
            self._advance()
            pname = self._expect_ident()
            self._expect_op("=")
            sign = 1.0
            if self._is_op("-"):
                self._advance()
                sign = -1.0
            value_token = self.current
            if value_token.kind != "number":
                raise self._error(f"expected number, found {self._describe(value_token)}")
            self._advance()
            self._declare(declared, pname)
            params[pname.text] = sign * float(value_token.text)
        self._expect_op("}")

        bindings: Dict[str, Expr] = {}
        binding_tokens: Dict[str, Token] = {}
        reserved = {"theta", "density"} | {f"theta{a}" for a in range(1, n + 1)}
        while self.current.kind != "eof":
            target = self.current
            if target.kind != "ident":
                raise self._error(f"expected binding name, found {self._describe(target)}")
            self._advance()
            if target.text not in reserved:
                raise self._error(
                    f"unknown binding name {target.text!r}; expected one of "
                    + ", ".join(sorted(reserved)),
                    target,
                )
            if target.text in bindings:
                raise self._error(f"duplicate definition of {target.text!r}", target)
            self._expect_op("=")
            bindings[target.text] = self.parse_formexpr()
            binding_tokens[target.text] = target

        end = self.current
        for required in ["theta"] + [f"theta{a}" for a in range(1, n + 1)]:
            if required not in bindings:
                raise self._error(f"{required} undefined", end)

        spec = ManifoldSpec(
            name=name_token.text[1:-1],
            n=n,
            coords=tuple(token.text for token in coords),
            complex_pairs=complex_pairs,
            params=params,
            bindings=bindings,
        )
        known = set(spec.coords) | set(complex_pairs) | set(params)
        for bname, expr in bindings.items():
            _check_identifiers(expr, known)
            expected = 0 if bname == "density" else 1
            degree = form_degree(expr)
            if degree != expected:
                kind = "scalar" if expected == 0 else "1-form"
                raise self._error(f"{bname} must be a {kind}", binding_tokens[bname])
        return spec

    def _declare(self, declared: Dict[str, Token], token: Token) -> None:
        if token.text in declared:
            raise self._error(f"duplicate definition of {token.text!r}", token)
        declared[token.text] = token

    # expressions -------------------------------------------------------
    def parse_formexpr(self) -> Expr:
        node = self.parse_term()
        while self.current.kind == "op" and self.current.text in "+-":
            op = self._advance()
            node = BinaryOp(op.text, node, self.parse_term(), pos=(op.line, op.col))
        _check_depth(node)
        return node

    def parse_term(self) -> Expr:
        node = self.parse_factor()
        while self.current.kind == "op" and self.current.text in "*/":
            op = self._advance()
            node = BinaryOp(op.text, node, self.parse_factor(), pos=(op.line, op.col))
        return node

    def parse_factor(self) -> Expr:
        if self._is_op("-"):
            op = self._advance()
            return Negate(self._nested(self.parse_factor, op), pos=(op.line, op.col))
        node = self.parse_primary()
        while self._is_op("^"):
            caret = self._advance()
            node = Power(node, self._expect_int(), pos=(caret.line, caret.col))
        return node

    def parse_primary(self) -> Expr:
        token = self.current
        pos = (token.line, token.col)
        if token.kind == "number":
            self._advance()
            return Number(float(token.text), pos=pos)
        if self._is_op("("):
            self._advance()
            node = self._nested(self.parse_formexpr, token)
            self._expect_op(")")
            return node
        if token.kind != "ident":
            raise self._error(f"unexpected {self._describe(token)}")
        self._advance()
        if token.text == "i":
            return ImagUnit(pos=pos)
        if token.text in ("d", "conj") or token.text in FUNCTIONS:
            self._expect_op("(")
            arg = self._nested(self.parse_formexpr, token)
            self._expect_op(")")
            if token.text == "d":
                return Differential(arg, pos=pos)
            if token.text == "conj":
                return Conjugate(arg, pos=pos)
            return Call(token.text, arg, pos=pos)
        if token.text in KEYWORDS:
            raise ParseError(f"{token.text!r} is reserved", token.line, token.col)
        return Name(token.text, pos=pos)


def _node_error(message: str, node: Expr) -> ParseError:
    line, col = node.pos or (1, 1)
    return ParseError(message, line, col)


def _children(expr: Expr) -> List[Expr]:
    if isinstance(expr, BinaryOp):
        return [expr.left, expr.right]
    if isinstance(expr, (Differential, Call, Conjugate)):
        return [expr.arg]
    if isinstance(expr, Negate):
        return [expr.operand]
    if isinstance(expr, Power):
        return [expr.base]
    return []


def _check_depth(expr: Expr) -> None:
    """Reject trees deeper than MAX_NESTING, walking them without recursion."""
    stack = [(expr, 1)]
    while stack:
        node, depth = stack.pop()
        if depth > MAX_NESTING:
            raise _node_error(f"expression nested deeper than {MAX_NESTING} levels", node)
        stack.extend((child, depth + 1) for child in _children(node))


def _check_identifiers(expr: Expr, known: set) -> None:
    if isinstance(expr, Name) and expr.ident not in known:
        raise _node_error(f"unknown identifier {expr.ident!r}", expr)
    for child in _children(expr):
        _check_identifiers(child, known)


def form_degree(expr: Expr) -> int:
    """Static form degree (0 scalar, 1 one-form); raises ParseError on ill-typed trees."""
    if isinstance(expr, (Number, ImagUnit, Name)):
        return 0
    if isinstance(expr, Differential):
        if form_degree(expr.arg) != 0:
            raise _node_error("d() of a 1-form is not supported", expr)
        return 1
    if isinstance(expr, (Negate, Conjugate)):
        return form_degree(_children(expr)[0])
    if isinstance(expr, (Power, Call)):
        if form_degree(_children(expr)[0]) != 0:
            what = "power" if isinstance(expr, Power) else expr.func
            raise _node_error(f"{what} of a 1-form", expr)
        return 0
    left, right = form_degree(expr.left), form_degree(expr.right)
    if expr.op in "+-":
        if left != right:
            raise _node_error(f"cannot {'add' if expr.op == '+' else 'subtract'} a scalar and a 1-form", expr)
        return left
    if expr.op == "*":
        if left + right > 1:
            raise _node_error("product of two 1-forms is not a 1-form", expr)
        return left + right
    if right != 0:
        raise _node_error("division by a 1-form", expr)
    return left


def parse_spec(text: str) -> ManifoldSpec:
    """Parse and validate spec text; raises ParseError with line and column."""
    spec = _Parser(text).parse_spec()
    logger.debug("parsed spec %r (n=%d, coords=%s)", spec.name, spec.n, spec.coords)
    return spec


def parse_expression(text: str) -> Expr:
    """Parse a bare expression (no header); used for test-function libraries."""
    parser = _Parser(text)
    expr = parser.parse_formexpr()
    if parser.current.kind != "eof":
        raise parser._error(f"unexpected {parser._describe(parser.current)}")
    return expr


@lru_cache(maxsize=32)
def _load_cached(path: str) -> ManifoldSpec:
    with open(path, encoding="utf-8") as handle:
        return parse_spec(handle.read())


def load_spec(path: str) -> ManifoldSpec:
    return _load_cached(str(path))


# ----------------------------------------------------------------------
# evaluation
# ----------------------------------------------------------------------
class ExpressionEvaluator:
    """
    Evaluates expression trees to jets centered at a chart point.

    Scalars evaluate to jets of shape (), 1-forms to jets of shape (m,)
    holding the coefficients of d(x_0), ..., d(x_{m-1}).
    """

    def __init__(self, coords: Sequence[str], point: Sequence[float],
                 complex_pairs: Optional[Dict[str, Tuple[str, str]]] = None,
                 params: Optional[Dict[str, float]] = None):
        self.coords = tuple(coords)
        self.point = np.asarray(point, dtype=float)
        if self.point.shape != (len(self.coords),):
            raise DomainError(f"point has {self.point.size} coordinates, expected {len(self.coords)}")
        self.complex_pairs = dict(complex_pairs or {})
        self.params = dict(params or {})
        self.num_vars = len(self.coords)
        self._index = {name: k for k, name in enumerate(self.coords)}

    def scalar(self, expr: Expr, order: int) -> Jet:
        return self._eval(expr, order)

    def form(self, expr: Expr, order: int) -> Jet:
        value = self._eval(expr, order)
        if value.shape != (self.num_vars,):
            raise DomainError("expression is not a 1-form", to_source(expr))
        return value

    def _variable(self, name: str, order: int) -> Jet:
        k = self._index[name]
        return Jet.variable(k, self.point[k], self.num_vars, order)

    def _eval(self, expr: Expr, order: int) -> Jet:
        m = self.num_vars
        if isinstance(expr, Number):
            return Jet.constant(expr.value, m, order)
        if isinstance(expr, ImagUnit):
            return Jet.constant(1j, m, order)
        if isinstance(expr, Name):
            if expr.ident in self._index:
                return self._variable(expr.ident, order)
            if expr.ident in self.complex_pairs:
                re_part, im_part = self.complex_pairs[expr.ident]
                return self._variable(re_part, order) + 1j * self._variable(im_part, order)
            if expr.ident in self.params:
                return Jet.constant(self.params[expr.ident], m, order)
            raise DomainError(f"unknown identifier {expr.ident!r}")
        if isinstance(expr, Differential):
            inner = self._eval(expr.arg, order + 1)
            if inner.shape != ():
                raise DomainError("d() of a 1-form is not supported", to_source(expr))
            return inner.gradient()
        if isinstance(expr, Negate):
            return -self._eval(expr.operand, order)
        if isinstance(expr, Conjugate):
            return self._eval(expr.arg, order).conj()
        if isinstance(expr, Power):
            base = self._eval(expr.base, order)
            try:
                return base ** expr.exponent
            except DomainError as exc:
                raise DomainError(str(exc), to_source(expr)) from exc
        if isinstance(expr, Call):
            arg = self._eval(expr.arg, order)
            try:
                return jet_apply(expr.func, arg)
            except DomainError as exc:
                raise DomainError(str(exc), to_source(expr)) from exc
        left = self._eval(expr.left, order)
        right = self._eval(expr.right, order)
        if expr.op == "+":
            return left + right
        if expr.op == "-":
            return left - right
        if expr.op == "*":
            return left * right
        try:
            return left * right.recip()
        except DomainError as exc:
            raise DomainError("division by zero", to_source(expr)) from exc


def spec_evaluator(spec: ManifoldSpec, point: Sequence[float]) -> ExpressionEvaluator:
    return ExpressionEvaluator(spec.coords, point, spec.complex_pairs, spec.params)


def eval_form(spec: ManifoldSpec, which: str, point: Sequence[float], order: int) -> Jet:
    """
    Evaluate one binding of a manifold spec to order-K jets at a point.

    ``which`` is ``theta``, ``theta1`` ... ``thetaN`` (result: coordinate
    coefficients of the 1-form, a jet of shape (2n+1,)) or ``density``
    (result: scalar jet).
    """
    if which not in spec.bindings:
        raise DomainError(f"{which} is not defined in spec {spec.name!r}")
    evaluator = spec_evaluator(spec, point)
    expr = spec.bindings[which]
    if which == "density":
        return evaluator.scalar(expr, order)
    return evaluator.form(expr, order)


def evaluate_expression(text: str, coords: Sequence[str], point: Sequence[float],
                        order: int, params: Optional[Dict[str, float]] = None) -> Jet:
    expr = parse_expression(text)
    known = set(coords) | set(params or {})
    _check_identifiers(expr, known)
    form_degree(expr)
    return ExpressionEvaluator(coords, point, params=params).scalar(expr, order)
