from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import ParseError

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>\#[^\n]*)
  | (?P<nl>\n)
  | (?P<arrow>->)
  | (?P<larrow><-)
  | (?P<word>[A-Za-z0-9_']+)
  | (?P<punct>[\[\]()^:*,;=])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str   # word, punct, arrow, larrow, nl, eof
    text: str
    line: int
    col: int


def tokenize(text: str, keep_newlines: bool = True) -> list:
    out = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        if kind == "nl":
            if keep_newlines:
                out.append(Token("nl", "\n", line, col))
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            out.append(Token(kind, m.group(), line, col))
        pos = m.end()
    out.append(Token("eof", "", line, pos - line_start + 1))
    return out


class Cursor:
    """Token stream with one-token lookahead and positioned errors."""

    def __init__(self, tokens: list):
        self.tokens = tokens
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def next(self) -> Token:
        t = self.tokens[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind not in ("nl", "eof") and t.text == text

    def error(self, message: str, tok: Token | None = None) -> ParseError:
        t = tok or self.tok
        shown = t.text if t.kind not in ("nl", "eof") else ("end of line" if t.kind == "nl" else "end of input")
        return ParseError(f"{message} (found {shown!r})", t.line, t.col)

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise self.error(f"expected {text!r}")
        return self.next()

    def word(self, what: str = "name") -> Token:
        if self.tok.kind != "word":
            raise self.error(f"expected {what}")
        return self.next()

    def integer(self) -> int:
        t = self.tok
        if t.kind != "word" or not t.text.isdigit():
            raise self.error("expected integer")
        self.next()
        return int(t.text)
