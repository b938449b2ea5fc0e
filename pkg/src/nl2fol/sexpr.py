"""Minimal s-expression reader shared by the solver runner and the
bundled reference solver.

Expressions are nested lists of strings; `;` starts a comment to end of
line.  Only the subset of SMT-LIB lexical syntax that solvers emit in UF
models is supported (symbols, parens, string literals kept verbatim).
"""

from __future__ import annotations


class SexprError(Exception):
    def __init__(self, message: str, offset: int = -1):
        super().__init__(message if offset < 0 else f"{message} (at offset {offset})")
        self.offset = offset


def tokenize(text: str) -> list[str]:
    tokens: list[str] = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch in "()":
            tokens.append(ch)
            i += 1
        elif ch == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif ch == '"':
            j = i + 1
            while j < n and text[j] != '"':
                j += 1
            if j >= n:
                raise SexprError("unterminated string literal", i)
            tokens.append(text[i : j + 1])
            i = j + 1
        elif ch.isspace():
            i += 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in "();":
                j += 1
            tokens.append(text[i:j])
            i = j
    return tokens


def parse_all(text: str) -> list:
    """Parse every top-level s-expression in `text`."""

    tokens = tokenize(text)
    pos = 0
    out = []

    def read():
        nonlocal pos
        if pos >= len(tokens):
            raise SexprError("unexpected end of input")
        tok = tokens[pos]
        pos += 1
        if tok == "(":
            items = []
            while True:
                if pos >= len(tokens):
                    raise SexprError("unbalanced parentheses: missing ')'")
                if tokens[pos] == ")":
                    pos += 1
                    return items
                items.append(read())
        if tok == ")":
            raise SexprError("unbalanced parentheses: unexpected ')'")
        return tok

    while pos < len(tokens):
        out.append(read())
    return out


def render(expr) -> str:
    if isinstance(expr, str):
        return expr
    return "(" + " ".join(render(e) for e in expr) + ")"
