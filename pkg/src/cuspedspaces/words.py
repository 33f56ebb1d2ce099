"""Words over a finite symmetric generating alphabet.

A word is a tuple of nonzero signed integers.  Letter ``+i`` is the i-th
generator (1-based), ``-i`` its inverse.  The empty tuple is the identity.
"""

from __future__ import annotations

from typing import Iterable, Sequence

Word = tuple[int, ...]

EMPTY: Word = ()


def free_reduce(word: Iterable[int]) -> Word:
    """Cancel adjacent inverse pairs until none remain."""
    stack: list[int] = []
    for letter in word:
        if letter == 0:
            raise ValueError("0 is not a letter")
        if stack and stack[-1] == -letter:
            stack.pop()
        else:
            stack.append(letter)
    return tuple(stack)


def invert(word: Sequence[int]) -> Word:
    return tuple(-letter for letter in reversed(word))


def multiply(*words: Sequence[int]) -> Word:
    """Concatenate and freely reduce."""
    out: list[int] = []
    for word in words:
        for letter in word:
            if out and out[-1] == -letter:
                out.pop()
            else:
                out.append(letter)
    return tuple(out)


def cyclic_reduce(word: Sequence[int]) -> Word:
    w = free_reduce(word)
    while len(w) >= 2 and w[0] == -w[-1]:
        w = w[1:-1]
    return w


def cyclic_rotations(word: Sequence[int]) -> list[Word]:
    w = tuple(word)
    return [w[i:] + w[:i] for i in range(len(w))] if w else [()]


def letter_key(letter: int) -> int:
    """Rank letters a < a' < b < b' < ... for shortlex comparisons."""
    return 2 * abs(letter) - (1 if letter > 0 else 0)


def shortlex_key(word: Sequence[int]) -> tuple:
    return (len(word), tuple(letter_key(l) for l in word))


def parse_word(text: str, generators: Sequence[str]) -> Word:
    """Parse juxtaposed generator names, ``'`` suffix marking an inverse.

    ``1`` (alone) and the empty string denote the identity.  Generator
    names are matched greedily, longest first.
    """
    text = text.strip()
    if text in ("", "1"):
        return EMPTY
    by_length = sorted(range(len(generators)), key=lambda i: -len(generators[i]))
    letters: list[int] = []
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        for gi in by_length:
            name = generators[gi]
            if text.startswith(name, pos):
                pos += len(name)
                if pos < len(text) and text[pos] == "'":
                    letters.append(-(gi + 1))
                    pos += 1
                else:
                    letters.append(gi + 1)
                break
        else:
            raise ValueError(f"unknown generator at position {pos} in {text!r}")
    return tuple(letters)


def format_word(word: Sequence[int], generators: Sequence[str]) -> str:
    if not word:
        return "1"
    parts = []
    for letter in word:
        name = generators[abs(letter) - 1]
        parts.append(name if letter > 0 else name + "'")
    return "".join(parts)
