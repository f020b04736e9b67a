"""Arithmetic expressions for user-supplied metric coefficients.

Grammar: numbers, the constants ``pi`` and ``e``, the coordinates ``u`` and
``v``, binary ``+ - * / ^`` (``**`` is accepted as a synonym for ``^``),
unary minus, and the functions ``sin cos sinh cosh exp sqrt``.

Expressions are compiled to a postfix program so the numba kernels can
evaluate them without calling back into Python.
"""

from __future__ import annotations

import ast
import math
from dataclasses import dataclass

import numpy as np

OP_CONST = 0
OP_U = 1
OP_V = 2
OP_ADD = 3
OP_SUB = 4
OP_MUL = 5
OP_DIV = 6
OP_POW = 7
OP_NEG = 8
OP_SIN = 9
OP_COS = 10
OP_SINH = 11
OP_COSH = 12
OP_EXP = 13
OP_SQRT = 14

_BINOPS = {ast.Add: OP_ADD, ast.Sub: OP_SUB, ast.Mult: OP_MUL, ast.Div: OP_DIV, ast.Pow: OP_POW}
_FUNCS = {"sin": OP_SIN, "cos": OP_COS, "sinh": OP_SINH, "cosh": OP_COSH, "exp": OP_EXP, "sqrt": OP_SQRT}
_CONSTS = {"pi": math.pi, "e": math.e}


class ExpressionError(ValueError):
    """Raised for expressions outside the supported grammar."""


@dataclass(frozen=True)
class Program:
    source: str
    ops: tuple[int, ...]
    vals: tuple[float, ...]

    def __call__(self, u, v):
        return evaluate(self, u, v)


def compile_expression(source: str) -> Program:
    text = str(source).replace("^", "**")
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {source!r}: {exc.msg}") from None
    ops: list[int] = []
    vals: list[float] = []

    def emit(op, val=0.0):
        ops.append(op)
        vals.append(float(val))

    def walk(node):
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
                and not isinstance(node.value, bool):
            emit(OP_CONST, node.value)
        elif isinstance(node, ast.Name):
            if node.id == "u":
                emit(OP_U)
            elif node.id == "v":
                emit(OP_V)
            elif node.id in _CONSTS:
                emit(OP_CONST, _CONSTS[node.id])
            else:
                raise ExpressionError(f"unknown name {node.id!r} in {source!r}")
        elif isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            walk(node.left)
            walk(node.right)
            emit(_BINOPS[type(node.op)])
        elif isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            walk(node.operand)
            if isinstance(node.op, ast.USub):
                emit(OP_NEG)
        elif isinstance(node, ast.Call) and isinstance(node.func, ast.Name) \
                and node.func.id in _FUNCS and len(node.args) == 1 and not node.keywords:
            walk(node.args[0])
            emit(_FUNCS[node.func.id])
        else:
            raise ExpressionError(f"unsupported construct {ast.dump(node)[:40]!r} in {source!r}")

    walk(tree.body)
    return Program(str(source), tuple(ops), tuple(vals))


def evaluate(prog: Program, u, v):
    """Evaluate a compiled program with numpy semantics (broadcasts over arrays)."""
    stack = []
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    unary = {OP_NEG: np.negative, OP_SIN: np.sin, OP_COS: np.cos, OP_SINH: np.sinh,
             OP_COSH: np.cosh, OP_EXP: np.exp, OP_SQRT: np.sqrt}
    binary = {OP_ADD: np.add, OP_SUB: np.subtract, OP_MUL: np.multiply,
              OP_DIV: np.divide, OP_POW: np.power}
    with np.errstate(all="ignore"):
        for op, val in zip(prog.ops, prog.vals):
            if op == OP_CONST:
                stack.append(np.full(np.broadcast(u, v).shape, val))
            elif op == OP_U:
                stack.append(u + 0.0 * v)
            elif op == OP_V:
                stack.append(v + 0.0 * u)
            elif op in unary:
                stack.append(unary[op](stack.pop()))
            else:
                b = stack.pop()
                a = stack.pop()
                stack.append(binary[op](a, b))
    out = stack.pop()
    return float(out) if out.ndim == 0 else out


def pack(programs) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Concatenate programs into (ops, vals, offsets) arrays for the kernels."""
    ops: list[int] = []
    vals: list[float] = []
    offs = [0]
    for p in programs:
        ops.extend(p.ops)
        vals.extend(p.vals)
        offs.append(len(ops))
    return (np.asarray(ops, dtype=np.int64), np.asarray(vals, dtype=np.float64),
            np.asarray(offs, dtype=np.int64))
