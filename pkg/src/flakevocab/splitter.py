"""Identifier splitting by casing style.

Boundaries: any non-alphanumeric character (``_``, ``-``, ``$``), a lower to
upper transition, a letter/digit transition, and inside an uppercase run that
is followed by a lowercase letter, before the run's last capital
(``HTTPServer`` -> ``HTTP``, ``Server``).

Unlike dictionary-driven splitters, same-case concatenations such as
``readfile`` are left whole.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .lexer import NAME, NUM_MASK, NUMBER_MASK, STRING_WORD, Token

_SEP, _UPPER, _LOWER, _DIGIT = range(4)


def _char_class(c: str) -> int:
    if c.isdigit():
        return _DIGIT
    if c.isupper():
        return _UPPER
    if c.isalnum():
        return _LOWER
    return _SEP


@dataclass(frozen=True)
class SplitResult:
    original: str
    fragments: tuple[str, ...]

    @property
    def parts(self) -> tuple[str, ...]:
        """Word fragments; digit runs are reported separately by ``fragments``."""
        return tuple(f for f in self.fragments if not f.isdigit())

    @property
    def is_atomic(self) -> bool:
        return self.fragments == (self.original,)


def split_fragments(name: str) -> tuple[str, ...]:
    classes = [_char_class(c) for c in name]
    out: list[str] = []
    start = None
    for i, cls in enumerate(classes):
        if cls == _SEP:
            if start is not None:
                out.append(name[start:i])
                start = None
            continue
        if start is None:
            start = i
            continue
        prev = classes[i - 1]
        nxt = classes[i + 1] if i + 1 < len(classes) else _SEP
        boundary = (
            (prev == _LOWER and cls == _UPPER)
            or ((prev == _DIGIT) != (cls == _DIGIT))
            or (prev == _UPPER and cls == _UPPER and nxt == _LOWER)
        )
        if boundary:
            out.append(name[start:i])
            start = i
    if start is not None:
        out.append(name[start:])
    return tuple(out)


def split_identifier(name: str) -> SplitResult:
    if not name:
        raise ValueError("cannot split an empty identifier")
    return SplitResult(name, split_fragments(name))


def expand_tokens(tokens: Iterable[Token]) -> list[Token]:
    """Replace identifiers and string words by their fragments plus the original.

    Digit fragments become ``#NUM#`` tokens. Atomic tokens are emitted once;
    keywords and masked numbers pass through.
    """
    out: list[Token] = []
    for tok in tokens:
        if tok.kind not in (NAME, STRING_WORD):
            out.append(tok)
            continue
        fragments = split_fragments(tok.text)
        if fragments == (tok.text,):
            out.append(tok)
            continue
        for frag in fragments:
            if frag.isdigit():
                out.append(Token(NUMBER_MASK, NUM_MASK))
            else:
                out.append(Token(tok.kind, frag))
        out.append(tok)
    return out
