"""Minimal s-expression reader shared by the input parser and the SMT-LIB reply parser."""
from __future__ import annotations

from dataclasses import dataclass, field


class SexpError(ValueError):
    def __init__(self, msg, line=None, col=None):
        self.line, self.col = line, col
        where = f"{line}:{col}: " if line is not None else ""
        super().__init__(where + msg)


@dataclass(frozen=True)
class Sym:
    """Bare symbol; ``line``/``col`` are for error messages only."""
    name: str
    line: int = 0
    col: int = 0

    def __eq__(self, other):
        if isinstance(other, Sym):
            return self.name == other.name
        return NotImplemented

    def __hash__(self):
        return hash(self.name)

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Str:
    value: str
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


class SList(list):
    def __init__(self, items=(), line=0, col=0):
        list.__init__(self, items)
        self.line, self.col = line, col


def tokenize(text: str):
    i, n = 0, len(text)
    line, col = 1, 1

    def advance(k=1):
        nonlocal i, line, col
        for _ in range(k):
            if text[i] == "\n":
                line, col = line + 1, 1
            else:
                col += 1
            i += 1

    while i < n:
        c = text[i]
        if c.isspace():
            advance()
        elif c == ";":
            while i < n and text[i] != "\n":
                advance()
        elif c in "()":
            yield (c, line, col)
            advance()
        elif c == '"':
            sl, sc = line, col
            advance()
            buf = []
            while True:
                if i >= n:
                    raise SexpError("unterminated string literal", sl, sc)
                if text[i] == '"':
                    if i + 1 < n and text[i + 1] == '"':
                        buf.append('"')
                        advance(2)
                        continue
                    advance()
                    break
                buf.append(text[i])
                advance()
            yield (Str("".join(buf), sl, sc), sl, sc)
        elif c == "|":
            sl, sc = line, col
            advance()
            start = i
            while i < n and text[i] != "|":
                advance()
            if i >= n:
                raise SexpError("unterminated quoted symbol", sl, sc)
            name = text[start:i]
            advance()
            yield (Sym(name, sl, sc), sl, sc)
        else:
            sl, sc = line, col
            start = i
            while i < n and not text[i].isspace() and text[i] not in '();"':
                advance()
            yield (Sym(text[start:i], sl, sc), sl, sc)


def parse_all(text: str) -> list:
    """Parse every top-level expression in ``text``."""
    stack = [SList()]
    for tok, line, col in tokenize(text):
        if tok == "(":
            stack.append(SList(line=line, col=col))
        elif tok == ")":
            if len(stack) == 1:
                raise SexpError("unbalanced ')'", line, col)
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(tok)
    if len(stack) != 1:
        open_ = stack[-1]
        raise SexpError("unbalanced '('", open_.line, open_.col)
    return list(stack[0])


def position(x):
    return getattr(x, "line", None), getattr(x, "col", None)
