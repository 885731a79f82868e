"""Smooth outer functions F(t_0, ..., t_{N-1}) with exact first and second derivatives.

Expressions are trees over the variables ``t0, t1, ...`` built from numbers,
``+``, ``-``, ``*``, integer powers, ``sin``, ``cos`` and ``exp``.  Evaluation
propagates second-order jets, so gradients and Hessians come out by rule.

Text form is a prefix (S-expression) grammar::

    expr   := number | tJ | "(" op expr+ ")"
    op     := "+" | "-" | "*" | "sin" | "cos" | "exp" | "pow"

``(pow e 3)`` takes a literal nonnegative integer exponent; ``(- e)`` negates.
Example: ``(* 0.5 (sin (+ t0 (* 2 t1))))``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

__all__ = ["Expr", "Var", "Const", "Apply", "parse", "var", "const", "sin", "cos", "exp", "Jet"]


class Jet:
    """Value, gradient (N, *S) and Hessian (N, N, *S) of a scalar field."""

    __slots__ = ("val", "grad", "hess")

    def __init__(self, val, grad, hess):
        self.val = val
        self.grad = grad
        self.hess = hess

    @classmethod
    def constant(cls, c, n, shape):
        val = np.full(shape, float(c))
        return cls(val, np.zeros((n,) + shape), np.zeros((n, n) + shape))

    @classmethod
    def variable(cls, j, t):
        n = t.shape[-1]
        shape = t.shape[:-1]
        grad = np.zeros((n,) + shape)
        grad[j] = 1.0
        return cls(t[..., j].astype(float), grad, np.zeros((n, n) + shape))

    def __add__(self, other):
        return Jet(self.val + other.val, self.grad + other.grad, self.hess + other.hess)

    def __neg__(self):
        return Jet(-self.val, -self.grad, -self.hess)

    def __mul__(self, other):
        ga, gb = self.grad, other.grad
        outer = ga[:, None] * gb[None, :]
        hess = self.hess * other.val + self.val * other.hess + outer + np.swapaxes(outer, 0, 1)
        return Jet(self.val * other.val, ga * other.val + self.val * gb, hess)

    def compose(self, f0, f1, f2):
        """Jet of phi(self) given phi, phi', phi'' evaluated at self.val."""
        g = self.grad
        hess = f2 * (g[:, None] * g[None, :]) + f1 * self.hess
        return Jet(f0, f1 * g, hess)


_UNARY = {
    "sin": lambda v: (np.sin(v), np.cos(v), -np.sin(v)),
    "cos": lambda v: (np.cos(v), -np.sin(v), -np.cos(v)),
    "exp": lambda v: (np.exp(v),) * 3,
}


class Expr:
    """Base class; subclasses implement ``jet`` and ``to_string``."""

    def n_vars(self):
        return 1 + max(self._var_indices(), default=-1)

    def _var_indices(self):
        return set()

    def jet(self, t):
        raise NotImplementedError

    def value(self, t):
        return self.jet(np.asarray(t, dtype=float)).val

    def __str__(self):
        return self.to_string()

    def __add__(self, other):
        return Apply("+", (self, _lift(other)))

    __radd__ = __add__

    def __mul__(self, other):
        return Apply("*", (self, _lift(other)))

    __rmul__ = __mul__

    def __neg__(self):
        return Apply("-", (self,))

    def __sub__(self, other):
        return Apply("-", (self, _lift(other)))

    def __pow__(self, p):
        return Apply("pow", (self, Const(int(p))))


def _lift(x):
    return x if isinstance(x, Expr) else Const(float(x))


@dataclass(frozen=True)
class Var(Expr):
    index: int

    def _var_indices(self):
        return {self.index}

    def jet(self, t):
        if self.index >= t.shape[-1]:
            raise ValueError(f"variable t{self.index} needs at least {self.index + 1} arguments")
        return Jet.variable(self.index, t)

    def to_string(self):
        return f"t{self.index}"


@dataclass(frozen=True)
class Const(Expr):
    value_: float

    def jet(self, t):
        return Jet.constant(self.value_, t.shape[-1], t.shape[:-1])

    def to_string(self):
        v = self.value_
        return repr(int(v)) if float(v).is_integer() else repr(float(v))


@dataclass(frozen=True)
class Apply(Expr):
    op: str
    args: tuple

    def __post_init__(self):
        if self.op in _UNARY and len(self.args) != 1:
            raise ValueError(f"{self.op} takes one argument")
        if self.op == "pow":
            if len(self.args) != 2 or not isinstance(self.args[1], Const):
                raise ValueError("pow takes an expression and a literal exponent")
            p = self.args[1].value_
            if p < 0 or not float(p).is_integer():
                raise ValueError("pow exponent must be a nonnegative integer")
        if self.op == "-" and len(self.args) not in (1, 2):
            raise ValueError("- takes one or two arguments")
        if self.op in ("+", "*") and not self.args:
            raise ValueError(f"{self.op} needs arguments")
        if self.op not in _UNARY and self.op not in ("+", "-", "*", "pow"):
            raise ValueError(f"unknown operator {self.op!r}")

    def _var_indices(self):
        out = set()
        for a in self.args:
            out |= a._var_indices()
        return out

    def jet(self, t):
        js = [a.jet(t) for a in self.args] if self.op != "pow" else [self.args[0].jet(t)]
        if self.op == "+":
            out = js[0]
            for j in js[1:]:
                out = out + j
            return out
        if self.op == "*":
            out = js[0]
            for j in js[1:]:
                out = out * j
            return out
        if self.op == "-":
            return -js[0] if len(js) == 1 else js[0] + (-js[1])
        if self.op == "pow":
            p = int(self.args[1].value_)
            v = js[0].val
            f0 = v**p
            f1 = p * v ** (p - 1) if p >= 1 else np.zeros_like(v)
            f2 = p * (p - 1) * v ** (p - 2) if p >= 2 else np.zeros_like(v)
            return js[0].compose(f0, f1, f2)
        return js[0].compose(*_UNARY[self.op](js[0].val))

    def to_string(self):
        return "(" + " ".join([self.op] + [a.to_string() for a in self.args]) + ")"


def var(j):
    return Var(int(j))


def const(c):
    return Const(float(c))


def sin(e):
    return Apply("sin", (_lift(e),))


def cos(e):
    return Apply("cos", (_lift(e),))


def exp(e):
    return Apply("exp", (_lift(e),))


_TOKEN = re.compile(r"\s*(\(|\)|[^\s()]+)")


def _tokenize(text):
    pos, out = 0, []
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ValueError(f"cannot tokenize {text[pos:]!r}")
        out.append(m.group(1))
        pos = m.end()
    return out


def parse(text):
    """Parse the prefix grammar into an :class:`Expr`."""
    tokens = _tokenize(text)
    if not tokens:
        raise ValueError("empty expression")
    expr, pos = _parse_at(tokens, 0)
    if pos != len(tokens):
        raise ValueError(f"trailing tokens in {text!r}")
    return expr


def _parse_at(tokens, pos):
    tok = tokens[pos]
    if tok == "(":
        if pos + 1 >= len(tokens):
            raise ValueError("unterminated expression")
        op = tokens[pos + 1]
        pos += 2
        args = []
        while pos < len(tokens) and tokens[pos] != ")":
            arg, pos = _parse_at(tokens, pos)
            args.append(arg)
        if pos >= len(tokens):
            raise ValueError("missing ')'")
        return Apply(op, tuple(args)), pos + 1
    if tok == ")":
        raise ValueError("unexpected ')'")
    if re.fullmatch(r"t\d+", tok):
        return Var(int(tok[1:])), pos + 1
    try:
        return Const(float(tok)), pos + 1
    except ValueError:
        raise ValueError(f"unknown token {tok!r}") from None
