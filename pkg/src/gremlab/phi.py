"""Interaction-function expressions over subset variables.

A tiny arithmetic language for writing the interaction function in a model
file instead of a raw table.  Variables are named ``x<digits>`` where the
digits are the (strictly increasing) species of a subset, so ``x1`` is the
coordinate of subset {1} and ``x12`` the coordinate of {1, 2}.

Grammar (``^`` is right-associative, everything else left-associative)::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := base ('^' factor)?
    base   := number | var | func '(' expr ')' | '(' expr ')' | '-' factor
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Mapping, Union

import numpy as np

MAX_SOURCE_BYTES = 64 * 1024
MAX_DEPTH = 64

FUNCTIONS = ("exp", "log", "sqrt", "abs", "tanh")


class PhiSyntaxError(ValueError):
    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} at position {pos}")
        self.pos = pos


class PhiEvalError(ArithmeticError):
    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} (node at position {pos})")
        self.pos = pos


# AST nodes.  ``pos`` is the source offset, excluded from equality so that
# re-parsed pretty-printed trees compare equal.

@dataclass(frozen=True)
class Num:
    value: float
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Var:
    mask: int
    pos: int = field(default=0, compare=False)

    @property
    def name(self) -> str:
        return "x" + "".join(str(j + 1) for j in range(9) if self.mask >> j & 1)


@dataclass(frozen=True)
class Unary:
    op: str  # 'neg' or one of FUNCTIONS
    arg: "PhiExpr"
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Binary:
    op: str  # one of + - * / ^
    left: "PhiExpr"
    right: "PhiExpr"
    pos: int = field(default=0, compare=False)


PhiExpr = Union[Num, Var, Unary, Binary]


_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^()])"
    r")"
)


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            stripped = len(text[pos:]) - len(text[pos:].lstrip())
            raise PhiSyntaxError(f"unexpected character {text[pos + stripped]!r}", pos + stripped)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


def _var_mask(name: str, pos: int) -> int:
    digits = name[1:]
    if not digits.isdigit() or "0" in digits:
        raise PhiSyntaxError(f"malformed variable {name!r}", pos)
    species = [int(c) for c in digits]
    if any(b <= a for a, b in zip(species, species[1:])):
        raise PhiSyntaxError(f"malformed variable {name!r}: species digits must be strictly increasing", pos)
    mask = 0
    for s in species:
        mask |= 1 << (s - 1)
    return mask


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0
        self.depth = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, text, pos = self.take()
        if text != value or kind != "op":
            raise PhiSyntaxError(f"expected {value!r}, found {text or 'end of input'!r}", pos)

    def _enter(self, pos: int):
        self.depth += 1
        if self.depth > MAX_DEPTH:
            raise PhiSyntaxError(f"expression nested deeper than {MAX_DEPTH}", pos)

    def expr(self) -> PhiExpr:
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            _, op, pos = self.take()
            node = Binary(op, node, self.term(), pos)
        return node

    def term(self) -> PhiExpr:
        node = self.factor()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            _, op, pos = self.take()
            node = Binary(op, node, self.factor(), pos)
        return node

    def factor(self) -> PhiExpr:
        node = self.base()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            _, _, pos = self.take()
            self._enter(pos)
            node = Binary("^", node, self.factor(), pos)
            self.depth -= 1
        return node

    def base(self) -> PhiExpr:
        kind, text, pos = self.take()
        if kind == "num":
            return Num(float(text), pos)
        if kind == "name":
            if text in FUNCTIONS:
                self.expect("(")
                self._enter(pos)
                arg = self.expr()
                self.depth -= 1
                self.expect(")")
                return Unary(text, arg, pos)
            if text.startswith("x"):
                return Var(_var_mask(text, pos), pos)
            if self.peek()[1] == "(":
                raise PhiSyntaxError(f"unknown function {text!r}", pos)
            raise PhiSyntaxError(f"unknown identifier {text!r}", pos)
        if kind == "op" and text == "(":
            self._enter(pos)
            node = self.expr()
            self.depth -= 1
            self.expect(")")
            return node
        if kind == "op" and text == "-":
            self._enter(pos)
            node = Unary("neg", self.factor(), pos)
            self.depth -= 1
            return node
        raise PhiSyntaxError(f"unexpected {text or 'end of input'!r}", pos)


def parse(text: str) -> PhiExpr:
    """Parse an interaction-function expression into an AST."""
    if len(text.encode("utf-8")) > MAX_SOURCE_BYTES:
        raise PhiSyntaxError("expression longer than 64 KiB", 0)
    p = _Parser(text)
    node = p.expr()
    kind, tok, pos = p.peek()
    if kind != "end":
        raise PhiSyntaxError(f"unexpected trailing {tok!r}", pos)
    return node


def _fold(node: PhiExpr, leaf, unary, binary):
    """Bottom-up fold with an explicit stack.

    Left-associative chains such as a long sum are as deep as they are
    long, so the walkers avoid Python recursion.
    """
    out = []
    todo = [(node, False)]
    while todo:
        cur, ready = todo.pop()
        if isinstance(cur, (Num, Var)):
            out.append(leaf(cur))
        elif not ready:
            todo.append((cur, True))
            if isinstance(cur, Unary):
                todo.append((cur.arg, False))
            else:
                todo.append((cur.right, False))
                todo.append((cur.left, False))
        elif isinstance(cur, Unary):
            out.append(unary(cur, out.pop()))
        else:
            b = out.pop()
            out.append(binary(cur, out.pop(), b))
    return out[0]


def to_text(node: PhiExpr) -> str:
    """Fully parenthesised source text; ``parse(to_text(e)) == e``."""
    def leaf(n):
        return repr(float(n.value)) if isinstance(n, Num) else n.name

    def unary(n, a):
        return f"(-{a})" if n.op == "neg" else f"{n.op}({a})"

    return _fold(node, leaf, unary, lambda n, a, b: f"({a} {n.op} {b})")


def variables(node: PhiExpr) -> set[int]:
    """Subset masks referenced by the expression."""
    return _fold(node, lambda n: {n.mask} if isinstance(n, Var) else set(),
                 lambda n, a: a, lambda n, a, b: a | b)


def _unary(node: Unary, a):
    if node.op == "neg":
        return -a
    if node.op == "exp":
        return np.exp(a)
    if node.op == "log":
        if np.any(np.asarray(a) <= 0):
            raise PhiEvalError("log of non-positive argument", node.pos)
        return np.log(a)
    if node.op == "sqrt":
        if np.any(np.asarray(a) < 0):
            raise PhiEvalError("sqrt of negative argument", node.pos)
        return np.sqrt(a)
    if node.op == "abs":
        return np.abs(a)
    return np.tanh(a)


def _binary(node: Binary, a, b):
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    if node.op == "/":
        if np.any(np.asarray(b) == 0):
            raise PhiEvalError("division by zero", node.pos)
        return a / b
    with np.errstate(invalid="ignore", over="ignore"):
        out = np.power(np.asarray(a, dtype=float), b)
    if not np.all(np.isfinite(out)):
        raise PhiEvalError("non-finite power", node.pos)
    return out


def _eval(node: PhiExpr, env: Mapping[int, np.ndarray]):
    return _fold(node, lambda n: n.value if isinstance(n, Num) else env[n.mask], _unary, _binary)


def evaluate(node: PhiExpr, assignment: Mapping[int, object]):
    """Evaluate at an assignment ``subset mask -> value``.

    Values may be scalars or equally shaped numpy arrays; the result follows
    numpy broadcasting.  Raises ``PhiEvalError`` on domain errors or a
    non-finite result, and ``KeyError`` if a variable is unassigned.
    """
    missing = variables(node) - set(assignment)
    if missing:
        names = ", ".join(Var(m).name for m in sorted(missing))
        raise KeyError(f"no value for variable(s) {names}")
    env = {k: np.asarray(v, dtype=float) for k, v in assignment.items()}
    with np.errstate(over="ignore", invalid="ignore"):
        out = _eval(node, env)
    out = np.asarray(out, dtype=float)
    if not np.all(np.isfinite(out)):
        raise PhiEvalError("non-finite result", getattr(node, "pos", 0))
    return float(out) if out.ndim == 0 else out


_SCALAR_FUNCS = {"exp": math.exp, "log": math.log, "sqrt": math.sqrt, "abs": abs, "tanh": math.tanh}
_SCALAR_OPS = {"+": lambda a, b: a + b, "-": lambda a, b: a - b, "*": lambda a, b: a * b,
               "/": lambda a, b: a / b, "^": math.pow}


def evaluate_scalar(node: PhiExpr, assignment: Mapping[int, float]) -> float:
    """Pure-Python evaluator over floats; used to cross-check ``evaluate``."""
    return _fold(
        node,
        lambda n: n.value if isinstance(n, Num) else float(assignment[n.mask]),
        lambda n, a: -a if n.op == "neg" else _SCALAR_FUNCS[n.op](a),
        lambda n, a, b: _SCALAR_OPS[n.op](a, b),
    )
