"""
Reaction-term expressions: parsing, printing, exact differentiation and evaluation

Grammar (precedence high to low, ``^`` right-associative)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := ('-' | '+') unary | power
    power   := atom ('^' exponent)?
    exponent:= ('-' | '+') exponent | power
    atom    := number | name | '(' expr ')'

Names are the variables ``u``, ``v``, ``mu`` or declared parameters. Exponents must
reduce to integer or rational constants. Trees are sympy expressions, so
derivatives are exact and evaluation goes through ``sympy.lambdify``.
"""

import math
import re
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import sympy as sp
from sympy.printing.precedence import precedence
from sympy.printing.str import StrPrinter

from utils import UsageError, NumericalError

VARIABLES: Tuple[str, ...] = ('u', 'v', 'mu')

_TOKEN_RE = re.compile(
    r'(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)'
    r'|(?P<name>[A-Za-z_][A-Za-z0-9_]*)'
    r'|(?P<op>[-+*/^()])'
)


class ExpressionSyntaxError(UsageError):
    """Malformed expression text; ``position`` is the 0-based character offset"""

    def __init__(self, message: str, text: str, position: int):
        self.text = text
        self.position = position
        super().__init__(f"{message} at position {position}: {text!r}")


class UndeclaredIdentifierError(UsageError):
    """Identifier that is neither a variable nor a declared parameter"""

    def __init__(self, name: str, text: str, position: int):
        self.name = name
        self.position = position
        super().__init__(f"undeclared identifier '{name}' at position {position}: {text!r}")


class UnboundIdentifierError(UsageError):
    pass


class ExpressionEvaluationError(NumericalError):
    pass


@lru_cache(maxsize=None)
def symbol(name: str) -> sp.Symbol:
    return sp.Symbol(name)


class _Token:
    __slots__ = ('kind', 'value', 'position')

    def __init__(self, kind: str, value: str, position: int):
        self.kind = kind
        self.value = value
        self.position = position


def _tokenize(text: str) -> List[_Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        match = _TOKEN_RE.match(text, pos)
        if not match:
            raise ExpressionSyntaxError(f"unexpected character {text[pos]!r}", text, pos)
        kind = match.lastgroup
        tokens.append(_Token(kind, match.group(kind), pos))
        pos = match.end()
    tokens.append(_Token('end', '', len(text)))
    return tokens


class _Parser:
    """Recursive-descent parser producing sympy trees"""

    def __init__(self, text: str, names: FrozenSet[str]):
        self.text = text
        self.names = names
        self.tokens = _tokenize(text)
        self.index = 0

    @property
    def current(self) -> _Token:
        return self.tokens[self.index]

    def _advance(self) -> _Token:
        token = self.tokens[self.index]
        self.index += 1
        return token

    def _accept(self, op: str) -> bool:
        if self.current.kind == 'op' and self.current.value == op:
            self.index += 1
            return True
        return False

    def parse(self) -> sp.Expr:
        if self.current.kind == 'end':
            raise ExpressionSyntaxError("empty expression", self.text, 0)
        tree = self._expr()
        if self.current.kind != 'end':
            token = self.current
            if token.kind == 'op' and token.value == ')':
                raise ExpressionSyntaxError("unbalanced ')'", self.text, token.position)
            raise ExpressionSyntaxError(f"unexpected token {token.value!r}", self.text, token.position)
        return tree

    def _expr(self) -> sp.Expr:
        tree = self._term()
        while True:
            if self._accept('+'):
                tree = tree + self._term()
            elif self._accept('-'):
                tree = tree - self._term()
            else:
                return tree

    def _term(self) -> sp.Expr:
        tree = self._unary()
        while True:
            if self._accept('*'):
                tree = tree * self._unary()
            elif self._accept('/'):
                tree = tree / self._unary()
            else:
                return tree

    def _unary(self) -> sp.Expr:
        if self._accept('-'):
            return -self._unary()
        if self._accept('+'):
            return self._unary()
        return self._power()

    def _power(self) -> sp.Expr:
        base = self._atom()
        if self.current.kind == 'op' and self.current.value == '^':
            position = self._advance().position
            exponent = self._exponent()
            if not exponent.is_Rational:
                raise ExpressionSyntaxError(
                    "exponent must be an integer or rational constant", self.text, position)
            return sp.Pow(base, exponent)
        return base

    def _exponent(self) -> sp.Expr:
        if self._accept('-'):
            return -self._exponent()
        if self._accept('+'):
            return self._exponent()
        return self._power()

    def _atom(self) -> sp.Expr:
        token = self._advance()
        if token.kind == 'number':
            value = Fraction(token.value)
            return sp.Rational(value.numerator, value.denominator)
        if token.kind == 'name':
            if token.value not in self.names:
                raise UndeclaredIdentifierError(token.value, self.text, token.position)
            return symbol(token.value)
        if token.kind == 'op' and token.value == '(':
            tree = self._expr()
            if not self._accept(')'):
                raise ExpressionSyntaxError("missing ')'", self.text, self.current.position)
            return tree
        if token.kind == 'end':
            raise ExpressionSyntaxError("unexpected end of expression", self.text, token.position)
        raise ExpressionSyntaxError(f"unexpected token {token.value!r}", self.text, token.position)


class _GrammarPrinter(StrPrinter):
    """Prints trees back in the parser's grammar"""

    def _print_Pow(self, expr, rational=False):
        base = self.parenthesize(expr.base, precedence(expr), strict=True)
        exponent = expr.exp
        if exponent.is_Integer and exponent.is_nonnegative:
            return f"{base}^{exponent}"
        return f"{base}^({self._print(exponent)})"

    def _print_Rational(self, expr):
        if expr.q == 1:
            return str(expr.p)
        return f"{expr.p}/{expr.q}"


_PRINTER = _GrammarPrinter()


@lru_cache(maxsize=None)
def _lambdify(tree: sp.Expr, args: Tuple[str, ...], backend: str) -> Callable:
    return sp.lambdify([symbol(name) for name in args], tree, modules=backend)


class Expression:
    """Immutable reaction-term expression over u, v, mu and named parameters"""

    __slots__ = ('_tree', '_params')

    def __init__(self, tree: sp.Expr, params: Iterable[str] = ()):
        self._tree = sp.sympify(tree)
        self._params = frozenset(params)

    @property
    def tree(self) -> sp.Expr:
        return self._tree

    @property
    def params(self) -> FrozenSet[str]:
        return self._params

    def free_names(self) -> FrozenSet[str]:
        return frozenset(s.name for s in self._tree.free_symbols)

    def is_zero(self) -> bool:
        return self._tree == 0

    def diff(self, var: str) -> 'Expression':
        return differentiate(self, var)

    def evaluate(self, bindings: Mapping[str, float]) -> float:
        return evaluate(self, bindings)

    def compile(self, args: Sequence[str]) -> Callable[..., np.ndarray]:
        return compile_vectorized(self, args)

    def __eq__(self, other) -> bool:
        return isinstance(other, Expression) and self._tree == other._tree and self._params == other._params

    def __hash__(self) -> int:
        return hash((self._tree, self._params))

    def __str__(self) -> str:
        return to_text(self)

    def __repr__(self) -> str:
        return f"Expression({to_text(self)!r})"


def parse(text: str, params: Iterable[str] = ()) -> Expression:
    """Parse expression text; identifiers must be u, v, mu or a declared parameter"""
    params = frozenset(params)
    clash = params.intersection(VARIABLES)
    if clash:
        raise UsageError(f"parameter names clash with variables: {sorted(clash)}")
    if not text or not text.strip():
        raise ExpressionSyntaxError("empty expression", text or '', 0)
    tree = _Parser(text, params | frozenset(VARIABLES)).parse()
    return Expression(tree, params)


def to_text(e: Expression) -> str:
    return _PRINTER.doprint(e.tree)


def differentiate(e: Expression, var: str) -> Expression:
    """Exact partial derivative with respect to a variable or parameter"""
    if var not in VARIABLES and var not in e.params:
        raise UsageError(f"cannot differentiate with respect to '{var}'")
    return Expression(_diff(e.tree, var), e.params)


@lru_cache(maxsize=None)
def _diff(tree: sp.Expr, var: str) -> sp.Expr:
    return sp.diff(tree, symbol(var))


def evaluate(e: Expression, bindings: Mapping[str, float]) -> float:
    """Strict scalar evaluation: raises on division by zero, bad powers or non-finite results"""
    names = tuple(sorted(e.free_names()))
    missing = [name for name in names if name not in bindings]
    if missing:
        raise UnboundIdentifierError(f"unbound identifier(s) {missing} in {to_text(e)!r}")
    values = [float(bindings[name]) for name in names]
    try:
        result = _lambdify(e.tree, names, 'math')(*values)
    except ZeroDivisionError:
        raise ExpressionEvaluationError(f"division by zero evaluating {to_text(e)!r} at {dict(zip(names, values))}")
    except (ValueError, OverflowError) as exc:
        raise ExpressionEvaluationError(f"cannot evaluate {to_text(e)!r} at {dict(zip(names, values))}: {exc}")
    if isinstance(result, complex):
        raise ExpressionEvaluationError(f"complex result evaluating {to_text(e)!r} at {dict(zip(names, values))}")
    result = float(result)
    if not math.isfinite(result):
        raise ExpressionEvaluationError(f"non-finite result evaluating {to_text(e)!r} at {dict(zip(names, values))}")
    return result


def compile_vectorized(e: Expression, args: Sequence[str]) -> Callable[..., np.ndarray]:
    """numpy-vectorized evaluator taking positional arguments in ``args`` order"""
    args = tuple(args)
    unknown = e.free_names().difference(args)
    if unknown:
        raise UnboundIdentifierError(f"compile arguments {args} do not cover {sorted(unknown)}")
    func = _lambdify(e.tree, args, 'numpy')

    def evaluator(*values):
        result = np.asarray(func(*values), dtype=float)
        shape = np.broadcast(*[np.asarray(x) for x in values]).shape if values else ()
        if result.shape != shape:
            result = np.broadcast_to(result, shape).copy()
        return result

    return evaluator


def bindings_for(u: float, v: float, mu: float,
                 params: Optional[Mapping[str, float]] = None) -> Dict[str, float]:
    bindings = dict(params or {})
    bindings.update(u=u, v=v, mu=mu)
    return bindings
