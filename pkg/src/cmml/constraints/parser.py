"""Recursive-descent parser for the data-requirements language.

Grammar (EBNF):

    doc        := stmt* ;
    stmt       := ("range" ID ":" bound ("," bound)*) | ("rule" ID ":" expr)
                | ("invariant" ID ":" aggcmp) | ("derive" ID ":" expr) ;
    bound      := (">"|">="|"<"|"<="|"=="|"!=") NUMBER ;
    expr       := orterm ("implies" orterm)? ;
    orterm     := andterm ("or" andterm)* ;
    andterm    := unary ("and" unary)* ;
    unary      := "not" unary | "(" expr ")" | cmp | "missing" "(" ID ")" ;
    cmp        := operand (">"|">="|"<"|"<="|"=="|"!=") operand ;
    operand    := ID | NUMBER ;
    aggcmp     := agg (">"|">="|"<"|"<="|"=="|"!=") NUMBER ;
    agg        := ("mean"|"std"|"min"|"max"|"count"|"frac_missing") "(" ID ")"
                | "frac" "(" expr ")" ;

Comments run from ``#`` to end of line. Identifiers are case-sensitive.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .nodes import (
    AGG_FUNCS,
    Agg,
    AggCmp,
    And,
    Bound,
    Cmp,
    COMPARATORS,
    ConstraintDoc,
    DeriveStmt,
    FeatureRef,
    Frac,
    Implies,
    InvariantStmt,
    MissingPred,
    Not,
    Number,
    Or,
    RangeStmt,
    RuleStmt,
)

STATEMENT_KEYWORDS = ("range", "rule", "invariant", "derive")
RESERVED = set(STATEMENT_KEYWORDS) | {"and", "or", "not", "implies", "missing", "frac"} | set(AGG_FUNCS)


class ConstraintSyntaxError(ValueError):
    """Syntax error carrying position and the expected-token set."""

    def __init__(self, line: int, column: int, expected, found: str):
        self.line = line
        self.column = column
        self.expected = tuple(sorted(expected))
        self.found = found
        exp = " or ".join(self.expected)
        super().__init__(f"line {line}, column {column}: expected {exp}, found {found}")


@dataclass(frozen=True)
class Token:
    type: str  # ID NUMBER OP COLON COMMA LPAREN RPAREN EOF
    text: str
    line: int
    column: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>\#[^\n]*)
  | (?P<newline>\n)
  | (?P<number>-?\d+(\.\d+)?([eE][+-]?\d+)?)
  | (?P<id>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>>=|<=|==|!=|>|<)
  | (?P<colon>:)
  | (?P<comma>,)
  | (?P<lparen>\()
  | (?P<rparen>\))
    """,
    re.VERBOSE,
)


def tokenize(text: str) -> list[Token]:
    tokens = []
    line, line_start = 1, 0
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ConstraintSyntaxError(line, pos - line_start + 1, ("a token",), repr(text[pos]))
        kind = m.lastgroup
        column = pos - line_start + 1
        if kind == "newline":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            type_map = {
                "number": "NUMBER", "id": "ID", "op": "OP",
                "colon": "COLON", "comma": "COMMA", "lparen": "LPAREN", "rparen": "RPAREN",
            }
            tokens.append(Token(type_map[kind], m.group(), line, column))
        pos = m.end()
    tokens.append(Token("EOF", "end of input", line, len(text) - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    # -- token plumbing ------------------------------------------------------

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.type != "EOF":
            self.pos += 1
        return tok

    def error(self, expected) -> ConstraintSyntaxError:
        tok = self.peek()
        found = tok.text if tok.type == "EOF" else repr(tok.text)
        return ConstraintSyntaxError(tok.line, tok.column, expected, found)

    def expect(self, type_: str, expected_desc: str) -> Token:
        if self.peek().type != type_:
            raise self.error((expected_desc,))
        return self.advance()

    def expect_keyword(self, word: str) -> Token:
        tok = self.peek()
        if tok.type != "ID" or tok.text != word:
            raise self.error((repr(word),))
        return self.advance()

    def at_keyword(self, *words: str) -> bool:
        tok = self.peek()
        return tok.type == "ID" and tok.text in words

    def identifier(self) -> str:
        tok = self.peek()
        if tok.type != "ID" or tok.text in RESERVED:
            raise self.error(("identifier",))
        return self.advance().text

    def number(self) -> float:
        tok = self.expect("NUMBER", "number")
        return float(tok.text)

    def comparator(self) -> str:
        tok = self.peek()
        if tok.type != "OP":
            raise self.error(tuple(repr(c) for c in COMPARATORS))
        return self.advance().text

    # -- grammar -------------------------------------------------------------

    def document(self, source_text: str) -> ConstraintDoc:
        statements = []
        while self.peek().type != "EOF":
            statements.append(self.statement())
        names = [s.name for s in statements]
        dupes = sorted({n for n in names if names.count(n) > 1})
        if dupes:
            raise ValueError(f"duplicate statement names: {dupes}")
        return ConstraintDoc(tuple(statements), source_text)

    def statement(self):
        if not self.at_keyword(*STATEMENT_KEYWORDS):
            raise self.error(tuple(repr(k) for k in STATEMENT_KEYWORDS))
        keyword = self.advance().text
        name = self.identifier()
        self.expect("COLON", "':'")
        if keyword == "range":
            bounds = [self.bound()]
            while self.peek().type == "COMMA":
                self.advance()
                bounds.append(self.bound())
            return RangeStmt(name, tuple(bounds))
        if keyword == "rule":
            return RuleStmt(name, self.expr())
        if keyword == "derive":
            return DeriveStmt(name, self.expr())
        return InvariantStmt(name, self.aggcmp())

    def bound(self) -> Bound:
        return Bound(self.comparator(), self.number())

    def expr(self):
        left = self.orterm()
        if self.at_keyword("implies"):
            self.advance()
            right = self.orterm()
            return Implies(left, right)
        return left

    def orterm(self):
        operands = [self.andterm()]
        while self.at_keyword("or"):
            self.advance()
            operands.append(self.andterm())
        return operands[0] if len(operands) == 1 else Or(tuple(operands))

    def andterm(self):
        operands = [self.unary()]
        while self.at_keyword("and"):
            self.advance()
            operands.append(self.unary())
        return operands[0] if len(operands) == 1 else And(tuple(operands))

    def unary(self):
        if self.at_keyword("not"):
            self.advance()
            return Not(self.unary())
        if self.at_keyword("missing"):
            self.advance()
            self.expect("LPAREN", "'('")
            feature = self.identifier()
            self.expect("RPAREN", "')'")
            return MissingPred(feature)
        if self.peek().type == "LPAREN":
            self.advance()
            inner = self.expr()
            self.expect("RPAREN", "')'")
            return inner
        return self.cmp()

    def cmp(self) -> Cmp:
        left = self.operand()
        op = self.comparator()
        right = self.operand()
        return Cmp(left, op, right)

    def operand(self):
        tok = self.peek()
        if tok.type == "NUMBER":
            return Number(self.number())
        if tok.type == "ID" and tok.text not in RESERVED:
            return FeatureRef(self.advance().text)
        raise self.error(("identifier", "number"))

    def aggcmp(self) -> AggCmp:
        agg = self.agg()
        op = self.comparator()
        value = self.number()
        return AggCmp(agg, op, value)

    def agg(self):
        tok = self.peek()
        if tok.type != "ID":
            raise self.error(tuple(AGG_FUNCS) + ("frac",))
        if tok.text == "frac":
            self.advance()
            self.expect("LPAREN", "'('")
            inner = self.expr()
            self.expect("RPAREN", "')'")
            return Frac(inner)
        if tok.text in AGG_FUNCS:
            func = self.advance().text
            self.expect("LPAREN", "'('")
            feature = self.identifier()
            self.expect("RPAREN", "')'")
            return Agg(func, feature)
        # an ID followed by '(' here is an aggregate the language does not declare
        raise self.error(tuple(f"{f}(...)" for f in AGG_FUNCS) + ("frac(...)",))


def parse(text: str) -> ConstraintDoc:
    """Parse constraint source text into a ConstraintDoc.

    Raises ConstraintSyntaxError with line/column and the expected-token set
    on malformed input; duplicate statement names raise ValueError.
    """
    return _Parser(tokenize(text)).document(text)
