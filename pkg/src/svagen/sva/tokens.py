"""Lexer for the SVA subset.

Produces a flat token stream with 1-based line/column positions. Comments
and whitespace are skipped; lexical problems surface as `error` tokens so
the parser can report them with positions instead of aborting.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

KEYWORDS = frozenset(
    {
        "property",
        "endproperty",
        "assert",
        "assume",
        "cover",
        "disable",
        "iff",
        "posedge",
        "negedge",
        "and",
        "or",
        "not",
        "else",
    }
)

# Longest operators first so e.g. "|=>" never lexes as "|" "=" ">".
_OPERATORS = (
    "|=>",
    "|->",
    "===",
    "!==",
    "<<<",
    ">>>",
    "##",
    "&&",
    "||",
    "==",
    "!=",
    "<=",
    ">=",
    "<<",
    ">>",
    "~^",
    "^~",
    "->",
    "+",
    "-",
    "*",
    "/",
    "%",
    "<",
    ">",
    "!",
    "~",
    "&",
    "|",
    "^",
    "?",
    ":",
    "=",
)

_PUNCT = "()[]{};,@."

# Verilog integer literal: optional size, base marker, digits; or plain
# decimal, or unbased unsized ('0, '1, 'x, 'z).
_NUMBER_RE = re.compile(
    r"[0-9][0-9_]*\s*'\s*[sS]?[bodhBODH][0-9a-fA-FxzXZ_?]+"
    r"|'[sS]?[bodhBODH][0-9a-fA-FxzXZ_?]+"
    r"|'[01xzXZ]"
    r"|[0-9][0-9_]*(\.[0-9][0-9_]*)?"
)
_IDENT_RE = re.compile(r"\$?[A-Za-z_][A-Za-z0-9_$]*|\$")
_STRING_RE = re.compile(r'"(\\.|[^"\\\n])*"')


@dataclass(frozen=True)
class Token:
    kind: str  # identifier | keyword | number | string | operator | punctuation | error
    lexeme: str
    line: int
    column: int

    def __repr__(self) -> str:  # compact, for diagnostics and test output
        return f"{self.kind}({self.lexeme!r}@{self.line}:{self.column})"


def tokenize(source: str) -> list[Token]:
    """Lex `source` into tokens; never raises.

    Unterminated block comments and strings, and characters outside the
    subset alphabet, become `error` tokens positioned at the offending text.
    """
    tokens: list[Token] = []
    i = 0
    line = 1
    col = 1
    n = len(source)

    def advance(text: str) -> None:
        nonlocal line, col
        newlines = text.count("\n")
        if newlines:
            line += newlines
            col = len(text) - text.rfind("\n")
        else:
            col += len(text)

    while i < n:
        ch = source[i]
        if ch in " \t\r\n":
            j = i
            while j < n and source[j] in " \t\r\n":
                j += 1
            advance(source[i:j])
            i = j
            continue
        if source.startswith("//", i):
            j = source.find("\n", i)
            j = n if j == -1 else j
            advance(source[i:j])
            i = j
            continue
        if source.startswith("/*", i):
            j = source.find("*/", i + 2)
            if j == -1:
                tokens.append(Token("error", "unterminated block comment", line, col))
                break
            advance(source[i : j + 2])
            i = j + 2
            continue
        if ch == '"':
            m = _STRING_RE.match(source, i)
            if not m:
                tokens.append(Token("error", "unterminated string literal", line, col))
                break
            tokens.append(Token("string", m.group(0), line, col))
            advance(m.group(0))
            i = m.end()
            continue
        m = _NUMBER_RE.match(source, i)
        if m:
            tokens.append(Token("number", m.group(0), line, col))
            advance(m.group(0))
            i = m.end()
            continue
        m = _IDENT_RE.match(source, i)
        if m:
            text = m.group(0)
            kind = "keyword" if text in KEYWORDS else "identifier"
            tokens.append(Token(kind, text, line, col))
            advance(text)
            i = m.end()
            continue
        matched = False
        for op in _OPERATORS:
            if source.startswith(op, i):
                tokens.append(Token("operator", op, line, col))
                advance(op)
                i += len(op)
                matched = True
                break
        if matched:
            continue
        if ch in _PUNCT:
            tokens.append(Token("punctuation", ch, line, col))
            advance(ch)
            i += 1
            continue
        tokens.append(Token("error", f"unexpected character {ch!r}", line, col))
        advance(ch)
        i += 1
    return tokens


def token_signature(tokens: list[Token]) -> list[tuple[str, str]]:
    """Position-free view of a token stream, used for round-trip checks."""
    return [(t.kind, t.lexeme) for t in tokens]
