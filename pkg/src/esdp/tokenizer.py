"""Lossless tokenizer for a Java-like source subset.

Comments and string/char literals come back as single atomic tokens, so the
structure recovery pass never has to worry about braces hiding inside them.
Concatenating the token texts in order always reconstructs the input exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

IDENTIFIER = "identifier"
KEYWORD = "keyword"
PUNCTUATION = "punctuation"
STRING_LITERAL = "string-literal"
CHAR_LITERAL = "char-literal"
NUMBER = "number"
COMMENT = "comment"
WHITESPACE = "whitespace"

KEYWORDS = frozenset(
    """abstract assert boolean break byte case catch char class const continue
    default do double else enum extends final finally float for goto if
    implements import instanceof int interface long native new package private
    protected public return short static strictfp super switch synchronized
    this throw throws transient try void volatile while""".split()
)

PRIMITIVE_TYPES = frozenset(
    "boolean byte char double float int long short void".split()
)

MODIFIER_KEYWORDS = frozenset(
    """public private protected static final abstract synchronized native
    strictfp transient volatile default""".split()
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int  # 1-based
    col: int  # 1-based


def _is_ident_start(c: str) -> bool:
    return c.isalpha() or c in "_$"


def _is_ident_part(c: str) -> bool:
    return c.isalnum() or c in "_$"


def tokenize(text: str, warnings: list[str] | None = None) -> list[Token]:
    """Split ``text`` into lossless tokens.

    Unterminated block comments and string/char literals are tolerated: the
    token runs to end of file and a warning is appended to ``warnings``.
    """
    tokens: list[Token] = []
    n = len(text)
    i = 0
    line = 1
    col = 1

    def warn(msg: str) -> None:
        if warnings is not None:
            warnings.append(msg)

    def emit(kind: str, end: int) -> None:
        nonlocal i, line, col
        chunk = text[i:end]
        tokens.append(Token(kind, chunk, line, col))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            col = len(chunk) - chunk.rfind("\n")
        else:
            col += len(chunk)
        i = end

    while i < n:
        c = text[i]
        if c.isspace():
            j = i + 1
            while j < n and text[j].isspace():
                j += 1
            emit(WHITESPACE, j)
        elif c == "/" and i + 1 < n and text[i + 1] == "/":
            j = text.find("\n", i)
            emit(COMMENT, n if j < 0 else j)
        elif c == "/" and i + 1 < n and text[i + 1] == "*":
            j = text.find("*/", i + 2)
            if j < 0:
                warn(f"unterminated block comment at line {line}")
                emit(COMMENT, n)
            else:
                emit(COMMENT, j + 2)
        elif c == '"' or c == "'":
            j = i + 1
            closed = False
            while j < n:
                if text[j] == "\\" and j + 1 < n:
                    j += 2
                    continue
                if text[j] == c:
                    j += 1
                    closed = True
                    break
                j += 1
            if not closed:
                kindname = "string" if c == '"' else "char"
                warn(f"unterminated {kindname} literal at line {line}")
                j = n
            emit(STRING_LITERAL if c == '"' else CHAR_LITERAL, j)
        elif c.isdigit():
            j = i + 1
            while j < n:
                if _is_ident_part(text[j]):
                    j += 1
                elif text[j] == "." and j + 1 < n and text[j + 1].isdigit():
                    j += 1
                else:
                    break
            emit(NUMBER, j)
        elif _is_ident_start(c):
            j = i + 1
            while j < n and _is_ident_part(text[j]):
                j += 1
            word = text[i:j]
            emit(KEYWORD if word in KEYWORDS else IDENTIFIER, j)
        else:
            emit(PUNCTUATION, i + 1)

    return tokens


def significant(tokens: list[Token]) -> list[Token]:
    """Drop whitespace and comment tokens."""
    return [t for t in tokens if t.kind not in (WHITESPACE, COMMENT)]
