"""Tokenizer, parser and printer for the textual FOL notation.

Accepted notation (EBNF in docs/grammar.md):

    formula     = implication ;
    implication = disjunction [ ("->" | "=>") implication ] ;
    disjunction = conjunction { "|" conjunction } ;
    conjunction = unary { "&" unary } ;
    unary       = "~" unary | quantified | primary ;
    quantified  = ("forall" | "exists" | "∀" | "∃") IDENT ["."] implication ;
    primary     = "(" formula ")" | IDENT [ "(" args ")" ] ;
    args        = arg { "," arg } ;

Precedence is ~ over & over | over ->, with -> right-associative and & / |
left-associative.  A quantifier's scope extends as far right as possible,
to the end of the enclosing group, so `forall x. P(x) -> Q(x)` binds x in
both atoms; parenthesize the quantifier to narrow its scope.  An argument
is a nested formula when it starts with `~`, `(`, a quantifier keyword, or
an applied predicate; a bare identifier argument is always a term.

Parsing resolves each name in term position to a Variable when bound by an
enclosing quantifier and to a Constant otherwise, then renames binders so
that every binding site is unique (`x`, `x2`, `x3`, ...).
"""

from __future__ import annotations

from dataclasses import dataclass

from .fol import (
    And,
    Atom,
    Constant,
    Exists,
    Forall,
    Formula,
    Implies,
    Not,
    Or,
    Term,
    Variable,
    rename_binders,
)

IDENT = "IDENT"
LPAREN = "LPAREN"
RPAREN = "RPAREN"
COMMA = "COMMA"
AND = "AND"
OR = "OR"
NOT = "NOT"
IMPLIES = "IMPLIES"
FORALL = "FORALL"
EXISTS = "EXISTS"
DOT = "DOT"


class LexError(Exception):
    def __init__(self, offset: int, snippet: str):
        super().__init__(f"unexpected character at byte {offset}: {snippet!r}")
        self.offset = offset
        self.snippet = snippet


class ParseError(Exception):
    def __init__(self, offset: int, expected: str, found: str):
        super().__init__(f"at byte {offset}: expected {expected}, found {found}")
        self.offset = offset
        self.expected = expected
        self.found = found


class UnbalancedParens(ParseError):
    pass


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    offset: int  # byte offset into the UTF-8 source


_PUNCT = {"(": LPAREN, ")": RPAREN, ",": COMMA, ".": DOT, "&": AND, "|": OR, "~": NOT}
_KEYWORDS = {"forall": FORALL, "exists": EXISTS}


def tokenize(source: str) -> list[Token]:
    """Lex the surface notation; raises LexError on any foreign character."""

    tokens: list[Token] = []
    pos = 0  # byte offset
    i = 0
    n = len(source)
    while i < n:
        ch = source[i]
        blen = len(ch.encode("utf-8"))
        if ch.isspace():
            i += 1
            pos += blen
            continue
        if ch in _PUNCT:
            tokens.append(Token(_PUNCT[ch], ch, pos))
            i += 1
            pos += blen
            continue
        if ch == "-" and i + 1 < n and source[i + 1] == ">":
            tokens.append(Token(IMPLIES, "->", pos))
            i += 2
            pos += 2
            continue
        if ch == "=" and i + 1 < n and source[i + 1] == ">":
            tokens.append(Token(IMPLIES, "=>", pos))
            i += 2
            pos += 2
            continue
        if ch == "∀":
            tokens.append(Token(FORALL, ch, pos))
            i += 1
            pos += blen
            continue
        if ch == "∃":
            tokens.append(Token(EXISTS, ch, pos))
            i += 1
            pos += blen
            continue
        if ch.isascii() and ch.isalpha():
            j = i + 1
            while j < n and (source[j].isascii() and (source[j].isalnum() or source[j] == "_")):
                j += 1
            text = source[i:j]
            kind = _KEYWORDS.get(text.lower(), IDENT)
            tokens.append(Token(kind, text, pos))
            pos += j - i
            i = j
            continue
        raise LexError(pos, source[i : i + 8])
    return tokens


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0
        self.end_offset = tokens[-1].offset + len(tokens[-1].text.encode()) if tokens else 0

    def peek(self) -> Token | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def next(self) -> Token | None:
        tok = self.peek()
        if tok is not None:
            self.pos += 1
        return tok

    def error(self, expected: str, cls=ParseError):
        tok = self.peek()
        if tok is None:
            raise cls(self.end_offset, expected, "end of input")
        raise cls(tok.offset, expected, repr(tok.text))

    def expect(self, kind: str, expected: str, cls=ParseError) -> Token:
        tok = self.peek()
        if tok is None or tok.kind != kind:
            self.error(expected, cls)
        return self.next()

    def parse_formula(self, bound: frozenset) -> Formula:
        left = self.parse_or(bound)
        tok = self.peek()
        if tok is not None and tok.kind == IMPLIES:
            self.next()
            right = self.parse_formula(bound)  # right-associative
            return Implies(left, right)
        return left

    def parse_or(self, bound: frozenset) -> Formula:
        node = self.parse_and(bound)
        while (tok := self.peek()) is not None and tok.kind == OR:
            self.next()
            node = Or(node, self.parse_and(bound))
        return node

    def parse_and(self, bound: frozenset) -> Formula:
        node = self.parse_unary(bound)
        while (tok := self.peek()) is not None and tok.kind == AND:
            self.next()
            node = And(node, self.parse_unary(bound))
        return node

    def parse_unary(self, bound: frozenset) -> Formula:
        tok = self.peek()
        if tok is None:
            self.error("a formula")
        if tok.kind == NOT:
            self.next()
            return Not(self.parse_unary(bound))
        if tok.kind in (FORALL, EXISTS):
            self.next()
            var = self.expect(IDENT, "a bound variable name")
            nxt = self.peek()
            if nxt is not None and nxt.kind == DOT:
                self.next()
            body = self.parse_formula(bound | {var.text})
            return (Forall if tok.kind == FORALL else Exists)(var.text, body)
        return self.parse_primary(bound)

    def parse_primary(self, bound: frozenset) -> Formula:
        tok = self.peek()
        if tok is None:
            self.error("a formula")
        if tok.kind == LPAREN:
            self.next()
            inner = self.parse_formula(bound)
            self.expect(RPAREN, "')'", UnbalancedParens)
            return inner
        if tok.kind == IDENT:
            self.next()
            nxt = self.peek()
            if nxt is not None and nxt.kind == LPAREN:
                self.next()
                args = self.parse_args(bound)
                self.expect(RPAREN, "')'", UnbalancedParens)
                return Atom(tok.text, tuple(args))
            return Atom(tok.text, ())
        self.error("a formula")

    def parse_args(self, bound: frozenset) -> list:
        args = [self.parse_arg(bound)]
        while (tok := self.peek()) is not None and tok.kind == COMMA:
            self.next()
            args.append(self.parse_arg(bound))
        return args

    def parse_arg(self, bound: frozenset):
        tok = self.peek()
        if tok is None:
            self.error("an argument")
        if tok.kind == IDENT:
            nxt = self.tokens[self.pos + 1] if self.pos + 1 < len(self.tokens) else None
            if nxt is None or nxt.kind != LPAREN:
                self.next()
                if tok.text in bound:
                    return Variable(tok.text)
                return Constant(tok.text)
            return self.parse_formula(bound)
        if tok.kind in (NOT, LPAREN, FORALL, EXISTS):
            return self.parse_formula(bound)
        self.error("an argument")


def parse(tokens: list[Token]) -> Formula:
    """Parse a token stream into a Formula with unique binder names."""

    parser = _Parser(tokens)
    if parser.peek() is None:
        parser.error("a formula")
    node = parser.parse_formula(frozenset())
    leftover = parser.peek()
    if leftover is not None:
        if leftover.kind == RPAREN:
            raise UnbalancedParens(leftover.offset, "end of input", "')'")
        raise ParseError(leftover.offset, "end of input", repr(leftover.text))
    return rename_binders(node)


def parse_text(source: str) -> Formula:
    return parse(tokenize(source))


_PREC = {Implies: 1, Or: 2, And: 3, Not: 4, Atom: 5}


def pretty_print(f: Formula) -> str:
    """Canonical ASCII rendering; re-parses to a structurally equal formula."""

    return _render(f, 0, True)


def _render(f: Formula, parent_prec: int, rightmost: bool) -> str:
    if isinstance(f, Atom):
        if not f.args:
            return f.predicate
        parts = [a.name if isinstance(a, Term) else _render(a, 0, True) for a in f.args]
        return f"{f.predicate}({','.join(parts)})"
    if isinstance(f, (Forall, Exists)):
        kw = "forall" if isinstance(f, Forall) else "exists"
        if isinstance(f.body, (And, Or, Implies)):
            body = f"({_render(f.body, 0, True)})"
        else:
            body = _render(f.body, 0, True)
        text = f"{kw} {f.var}. {body}"
        return text if rightmost else f"({text})"
    if isinstance(f, Not):
        return "~" + _render(f.body, _PREC[Not], rightmost)
    if isinstance(f, Implies):
        left = _render(f.left, _PREC[Implies] + 1, False)
        right = _render(f.right, _PREC[Implies], rightmost)
        text = f"{left} -> {right}"
    elif isinstance(f, Or):
        left = _render(f.left, _PREC[Or], False)
        right = _render(f.right, _PREC[Or] + 1, rightmost)
        text = f"{left} | {right}"
    elif isinstance(f, And):
        left = _render(f.left, _PREC[And], False)
        right = _render(f.right, _PREC[And] + 1, rightmost)
        text = f"{left} & {right}"
    else:
        raise TypeError(f"not a formula node: {f!r}")
    if _PREC[type(f)] < parent_prec:
        return f"({text})"
    return text
