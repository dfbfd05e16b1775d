"""Lexical tokenizer for test source code.

Produces four kinds of tokens: reserved words (plus ``self``), identifiers,
masked numeric literals and words taken from string literals. Comments,
whitespace, operators and punctuation are dropped.
"""

from __future__ import annotations

import bisect
import re
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

KEYWORD = "keyword"
NAME = "name"
NUMBER_MASK = "number_mask"
STRING_WORD = "string_word"
TOKEN_KINDS = (KEYWORD, NAME, NUMBER_MASK, STRING_WORD)

NUM_MASK = "#NUM#"


class LexError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} at line {line}, column {column}")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class Token:
    kind: str
    text: str

    def __post_init__(self) -> None:
        if self.kind not in TOKEN_KINDS:
            raise ValueError(f"unknown token kind {self.kind!r}")
        if not self.text:
            raise ValueError("token text must be non-empty")
        if self.kind == NUMBER_MASK and self.text != NUM_MASK:
            raise ValueError(f"number tokens must read {NUM_MASK}")

    def __str__(self) -> str:
        return f"{self.kind}:{self.text}"


@dataclass(frozen=True)
class AuxFeatures:
    keyword_counts: dict[str, int]
    loc: int


def load_keywords(path: str | Path) -> list[str]:
    """Read a keyword list: one keyword per line, blank lines ignored, order kept."""
    text = Path(path).read_text(encoding="utf-8")
    return _parse_keywords(text)


def _parse_keywords(text: str) -> list[str]:
    seen: dict[str, None] = {}
    for line in text.splitlines():
        word = line.strip()
        if word:
            seen.setdefault(word, None)
    return list(seen)


def builtin_keywords(language: str) -> list[str]:
    text = resources.files("flakevocab.data").joinpath(f"{language}.txt").read_text(encoding="utf-8")
    return _parse_keywords(text)


@dataclass(frozen=True)
class LexerProfile:
    """Lexical conventions of one test language."""

    name: str
    keywords: tuple[str, ...]
    line_comments: tuple[str, ...] = ("#",)
    block_comments: tuple[tuple[str, str], ...] = ()
    identifier: str = r"[^\W\d]\w*"
    punctuation: str = "+-*/%@&|^~<>=.,:;()[]{}!"
    string_prefixes: bool = True
    _keyword_set: frozenset = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_keyword_set", frozenset(self.keywords))

    def is_keyword(self, word: str) -> bool:
        return word in self._keyword_set

    def with_keywords(self, keywords: Sequence[str]) -> "LexerProfile":
        return LexerProfile(
            self.name,
            tuple(keywords),
            self.line_comments,
            self.block_comments,
            self.identifier,
            self.punctuation,
            self.string_prefixes,
        )


def python_profile(keywords: Sequence[str] | None = None) -> LexerProfile:
    return LexerProfile("python", tuple(keywords or builtin_keywords("python")))


def java_profile(keywords: Sequence[str] | None = None) -> LexerProfile:
    return LexerProfile(
        "java",
        tuple(keywords or builtin_keywords("java")),
        line_comments=("//",),
        block_comments=(("/*", "*/"),),
        identifier=r"(?:[^\W\d]|\$)[\w$]*",
        punctuation="+-*/%@&|^~<>=.,:;()[]{}!?",
        string_prefixes=False,
    )


PROFILES = {"python": python_profile, "java": java_profile}

_WS = re.compile(r"[ \t\f\r\n]+|\\\r?\n")
_NUMBER = re.compile(
    r"""
    (?:0[xX][0-9a-fA-F_]+
     | 0[oO][0-7_]+
     | 0[bB][01_]+
     | (?:\d[\d_]*(?:\.[\d_]*)?|\.\d[\d_]*)(?:[eE][+-]?\d[\d_]*)?
    )[jJlLfFdD]?
    """,
    re.VERBOSE,
)
_STRING_START = re.compile(r"""([rRbBuUfF]{0,2})('''|\"\"\"|'|")""")
_STRING_START_NOPREFIX = re.compile(r"""()('''|\"\"\"|'|")""")
_ESCAPE = re.compile(r"\\[abfnrtv]")
_WORD = re.compile(r"[^\W_]+")
_DIGITS = frozenset("0123456789")


def string_words(body: str, raw: bool = False) -> list[str]:
    """Split string-literal contents on non-alphanumeric characters, keeping case."""
    if not raw:
        body = _ESCAPE.sub(" ", body)
    return _WORD.findall(body)


class Lexer:
    def __init__(self, profile: LexerProfile | None = None):
        self.profile = profile or python_profile()
        self._ident = re.compile(self.profile.identifier)
        self._string_start = _STRING_START if self.profile.string_prefixes else _STRING_START_NOPREFIX

    def tokenize(self, source: str) -> list[Token]:
        p = self.profile
        tokens: list[Token] = []
        pos, n = 0, len(source)
        line_starts = _line_starts(source)

        def where(offset: int) -> tuple[int, int]:
            return _position(line_starts, offset)

        while pos < n:
            m = _WS.match(source, pos)
            if m:
                pos = m.end()
                continue

            skipped = self._skip_comment(source, pos, where)
            if skipped is not None:
                pos = skipped
                continue

            m = self._string_start.match(source, pos)
            if m:
                prefix, quote = m.group(1), m.group(2)
                body_start = m.end()
                body_end = _string_end(source, body_start, quote)
                if body_end < 0:
                    raise LexError("unterminated string literal", *where(pos))
                raw = "r" in prefix.lower()
                for word in string_words(source[body_start:body_end], raw=raw):
                    tokens.append(Token(STRING_WORD, word))
                pos = body_end + len(quote)
                continue

            ch = source[pos]
            if ch in _DIGITS or (ch == "." and pos + 1 < n and source[pos + 1] in _DIGITS):
                m = _NUMBER.match(source, pos)
                tokens.append(Token(NUMBER_MASK, NUM_MASK))
                pos = m.end()
                continue

            m = self._ident.match(source, pos)
            if m:
                word = m.group()
                tokens.append(Token(KEYWORD if p.is_keyword(word) else NAME, word))
                pos = m.end()
                continue

            if ch in p.punctuation:
                pos += 1
                continue

            raise LexError(f"unexpected character {ch!r}", *where(pos))
        return tokens

    def _skip_comment(self, source: str, pos: int, where) -> int | None:
        for marker in self.profile.line_comments:
            if source.startswith(marker, pos):
                end = source.find("\n", pos)
                return len(source) if end < 0 else end
        for start, stop in self.profile.block_comments:
            if source.startswith(start, pos):
                end = source.find(stop, pos + len(start))
                if end < 0:
                    raise LexError("unterminated comment", *where(pos))
                return end + len(stop)
        return None


def _string_end(source: str, start: int, quote: str) -> int:
    """Offset of the closing quote, or -1 when the literal is unterminated."""
    i, n = start, len(source)
    triple = len(quote) == 3
    while i < n:
        c = source[i]
        if c == "\\":
            i += 2
            continue
        if not triple and c == "\n":
            return -1
        if source.startswith(quote, i):
            return i
        i += 1
    return -1


def _line_starts(source: str) -> list[int]:
    starts = [0]
    starts.extend(m.end() for m in re.finditer("\n", source))
    return starts


def _position(line_starts: list[int], offset: int) -> tuple[int, int]:
    line = bisect.bisect_right(line_starts, offset)
    return line, offset - line_starts[line - 1] + 1


_DEFAULT = None


def tokenize(source: str, profile: LexerProfile | None = None) -> list[Token]:
    """Tokenize ``source`` with ``profile`` (Python conventions by default)."""
    global _DEFAULT
    if profile is None:
        if _DEFAULT is None:
            _DEFAULT = Lexer()
        return _DEFAULT.tokenize(source)
    return Lexer(profile).tokenize(source)


def count_keywords(tokens: Iterable[Token], keywords: Sequence[str] | None = None) -> dict[str, int]:
    """Occurrences of each keyword token.

    Sparse by default; pass ``keywords`` to get a dense map in that order.
    """
    counts = Counter(t.text for t in tokens if t.kind == KEYWORD)
    if keywords is None:
        return dict(counts)
    return {k: counts.get(k, 0) for k in keywords}


def count_loc(source: str) -> int:
    """Lines containing at least one non-whitespace character."""
    return sum(1 for line in source.splitlines() if line.strip())


def aux_features(source: str, tokens: Sequence[Token], keywords: Sequence[str]) -> AuxFeatures:
    return AuxFeatures(count_keywords(tokens, keywords), count_loc(source))


def dump_tokens(tokens: Iterable[Token]) -> str:
    """Debug dump, one ``kind<TAB>text`` line per token."""
    return "".join(f"{t.kind}\t{t.text}\n" for t in tokens)
