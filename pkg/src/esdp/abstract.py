"""Source abstraction: recover block structure and emit typed items.

Every scanned file is reduced to a stream of typed items, one per recognized
code fact (declaration or usage). Items are grouped into one transaction per
class block and one per method block; those transactions feed the miner.

The parser is structural, not semantic: brace matching is literal- and
comment-aware, generics and annotations are stripped, and anything it cannot
classify is skipped rather than failed on. Unbalanced input degrades to a
partial tree and a flag, never an exception.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import TYPE_CHECKING, Iterable

from .errors import RecordFormatError
from .tokenizer import (
    CHAR_LITERAL,
    IDENTIFIER,
    KEYWORD,
    MODIFIER_KEYWORDS,
    NUMBER,
    PRIMITIVE_TYPES,
    PUNCTUATION,
    STRING_LITERAL,
    Token,
    significant,
    tokenize,
)

if TYPE_CHECKING:
    from .corpus import SourceUnit

# The full item-kind catalog. Two-letter codes classify every extracted fact.
ITEM_KINDS: dict[str, str] = {
    "PK": "package declaration",
    "IM": "import",
    "CD": "class declaration",
    "ID": "interface declaration",
    "ED": "enum declaration",
    "XT": "extends clause",
    "IP": "implements clause",
    "FD": "field declaration",
    "MD": "method declaration",
    "CT": "constructor declaration",
    "PM": "parameter declaration",
    "VD": "local variable declaration",
    "MI": "method invocation",
    "CI": "class instantiation",
    "FA": "field access",
    "CS": "cast expression",
    "EH": "exception handling",
}

CLASS_BLOCK_KINDS = frozenset({"PK", "IM", "CD", "ID", "ED", "XT", "IP", "FD", "MD", "CT"})
METHOD_BLOCK_KINDS = frozenset({"PM", "VD", "MI", "CI", "FA", "CS", "EH"})

_TYPE_DECL_KIND = {"class": "CD", "interface": "ID", "enum": "ED"}


@dataclass(frozen=True)
class Item:
    """One abstracted code fact: what kind, what name, where."""

    kind: str
    name: str
    entity: str
    line: int
    col: int = field(default=0, compare=False)


def render_item(item: Item) -> str:
    """Human-readable form; single-digit lines are zero-padded to two."""
    return f"{item.kind}, {item.name}, {item.entity}:{item.line:02d}"


def parse_item_rendering(text: str) -> Item:
    """Inverse of :func:`render_item`."""
    parts = text.split(", ", 2)
    if len(parts) != 3:
        raise ValueError(f"not an item rendering: {text!r}")
    kind, name, rest = parts
    if kind not in ITEM_KINDS:
        raise ValueError(f"unknown item kind {kind!r}")
    entity, sep, line_text = rest.rpartition(":")
    if not sep or not line_text.isdigit():
        raise ValueError(f"missing entity:line in {text!r}")
    return Item(kind=kind, name=name, entity=entity, line=int(line_text))


@dataclass(frozen=True)
class Transaction:
    """The ordered item sequence of one class or method block."""

    id: str
    entity: str
    block_kind: str  # "class" or "method"
    items: tuple[Item, ...]
    unit_path: str
    span: tuple[int, int]


def _transaction_id(unit_path: str, entity: str, span: tuple[int, int]) -> str:
    return f"{unit_path}::{entity}::{span[0]}-{span[1]}"


def _item_sort_key(item: Item) -> tuple[int, int, str, str]:
    return (item.line, item.col, item.kind, item.name)


# ---------------------------------------------------------------------------
# Structure model
# ---------------------------------------------------------------------------

@dataclass
class Fact:
    kind: str  # VD / MI / CI / FA / CS / EH
    raw: str  # type name, access chain, or invoked method name
    line: int
    col: int
    arity: int = -1  # MI only


@dataclass
class ParamDecl:
    raw_type: str
    line: int
    col: int


@dataclass
class FieldDecl:
    raw_type: str
    line: int
    col: int


@dataclass
class MethodDecl:
    name: str
    is_ctor: bool
    params: list[ParamDecl]
    raw_return: str | None  # None for constructors
    line: int
    col: int
    span: tuple[int, int]
    has_body: bool
    facts: list[Fact]


@dataclass
class ImportDecl:
    name: str
    line: int
    col: int
    wildcard: bool


@dataclass
class TypeDecl:
    kind: str  # class / interface / enum
    simple_name: str
    line: int
    col: int
    span: tuple[int, int]
    extends: list[tuple[str, int, int]] = field(default_factory=list)
    implements: list[tuple[str, int, int]] = field(default_factory=list)
    fields: list[FieldDecl] = field(default_factory=list)
    methods: list[MethodDecl] = field(default_factory=list)
    nested: list["TypeDecl"] = field(default_factory=list)
    qualified: str = ""


@dataclass
class BlockTree:
    package: str = ""
    package_line: int = 0
    package_col: int = 0
    imports: list[ImportDecl] = field(default_factory=list)
    import_table: dict[str, str] = field(default_factory=dict)
    types: list[TypeDecl] = field(default_factory=list)
    declared: dict[str, str] = field(default_factory=dict)
    unresolved: set[str] = field(default_factory=set)
    warnings: list[str] = field(default_factory=list)
    degraded: bool = False

    def all_types(self) -> Iterable[TypeDecl]:
        stack = list(reversed(self.types))
        while stack:
            t = stack.pop()
            yield t
            stack.extend(reversed(t.nested))


@lru_cache(maxsize=1)
def default_type_table() -> dict[str, str]:
    """Simple name to qualified name for the common default namespace."""
    table: dict[str, str] = {}
    data = resources.files("esdp.data").joinpath("default_types.txt").read_text("utf-8")
    for line in data.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        simple, _, qualified = line.partition("=")
        table[simple.strip()] = qualified.strip()
    return table


def extract_package(text: str) -> str:
    """Pull the package declaration out of raw source text, if any."""
    toks = significant(tokenize(text))
    for i, t in enumerate(toks):
        if t.kind != KEYWORD:
            continue
        if t.text == "package":
            name, _ = _read_dotted(toks, i + 1, len(toks))
            return name or ""
        if t.text in ("class", "interface", "enum"):
            return ""
    return ""


# ---------------------------------------------------------------------------
# Token-stream helpers
# ---------------------------------------------------------------------------

def _is_punct(t: Token, text: str) -> bool:
    return t.kind == PUNCTUATION and t.text == text


def _read_dotted(toks: list[Token], i: int, end: int) -> tuple[str | None, int]:
    """Read ``ident(.ident)*`` starting at ``i``; returns (name, next index)."""
    if i >= end or toks[i].kind != IDENTIFIER:
        return None, i
    parts = [toks[i].text]
    i += 1
    while i + 1 < end and _is_punct(toks[i], ".") and toks[i + 1].kind == IDENTIFIER:
        parts.append(toks[i + 1].text)
        i += 2
    return ".".join(parts), i


_GENERIC_OK_PUNCT = frozenset({".", ",", "?", "[", "]", "&", "<", ">"})


def _skip_generics(toks: list[Token], i: int, end: int) -> int | None:
    """If ``toks[i]`` opens a type-argument list, return the index past the
    matching ``>``; return None when the content does not look like types
    (so a ``<`` comparison operator is left alone)."""
    depth = 0
    j = i
    while j < end and j - i < 120:
        t = toks[j]
        if t.kind == PUNCTUATION:
            if t.text == "<":
                depth += 1
            elif t.text == ">":
                depth -= 1
                if depth == 0:
                    return j + 1
            elif t.text not in _GENERIC_OK_PUNCT:
                return None
        elif t.kind == KEYWORD:
            if t.text not in ("extends", "super") and t.text not in PRIMITIVE_TYPES:
                return None
        elif t.kind != IDENTIFIER:
            return None
        j += 1
    return None


def _read_type(toks: list[Token], i: int, end: int) -> tuple[str | None, int]:
    """Read a type reference: dotted name, stripped generics, array brackets,
    varargs ellipsis. Returns (type name, next index) or (None, i)."""
    if i >= end:
        return None, i
    t = toks[i]
    if t.kind == KEYWORD and t.text in PRIMITIVE_TYPES:
        name = t.text
        i += 1
    elif t.kind == IDENTIFIER:
        read, i = _read_dotted(toks, i, end)
        if read is None:
            return None, i
        name = read
    else:
        return None, i
    if i < end and _is_punct(toks[i], "<"):
        past = _skip_generics(toks, i, end)
        if past is not None:
            i = past
    while i + 1 < end and _is_punct(toks[i], "[") and _is_punct(toks[i + 1], "]"):
        i += 2
    if (
        i + 2 < end
        and _is_punct(toks[i], ".")
        and _is_punct(toks[i + 1], ".")
        and _is_punct(toks[i + 2], ".")
    ):
        i += 3
    return name, i


# ---------------------------------------------------------------------------
# The structural parser
# ---------------------------------------------------------------------------

class _Parser:
    def __init__(self, toks: list[Token], context: str = "<unit>"):
        self.toks = toks
        self.context = context
        self.tree = BlockTree()

    def _degrade(self, message: str) -> None:
        self.tree.degraded = True
        self.tree.warnings.append(f"{self.context}: {message}")

    def _match(self, open_idx: int, end: int, open_text: str, close_text: str) -> int:
        depth = 0
        for j in range(open_idx, end):
            t = self.toks[j]
            if t.kind == PUNCTUATION:
                if t.text == open_text:
                    depth += 1
                elif t.text == close_text:
                    depth -= 1
                    if depth == 0:
                        return j
        return -1

    def _match_brace(self, open_idx: int, end: int) -> int:
        return self._match(open_idx, end, "{", "}")

    def _match_paren(self, open_idx: int, end: int) -> int:
        return self._match(open_idx, end, "(", ")")

    def _skip_annotation(self, i: int, end: int) -> int:
        i += 1  # '@'
        name, i = _read_dotted(self.toks, i, end)
        if name is not None and i < end and _is_punct(self.toks[i], "("):
            close = self._match_paren(i, end)
            i = close + 1 if close >= 0 else end
        return i

    # -- top level ----------------------------------------------------------

    def parse(self) -> BlockTree:
        toks = self.toks
        n = len(toks)
        i = 0
        while i < n:
            t = toks[i]
            if t.kind == KEYWORD and t.text == "package":
                name, j = _read_dotted(toks, i + 1, n)
                if name:
                    self.tree.package = name
                    self.tree.package_line = t.line
                    self.tree.package_col = t.col
                i = j
            elif t.kind == KEYWORD and t.text == "import":
                i = self._parse_import(i, n)
            elif t.kind == PUNCTUATION and t.text == "@":
                i = self._skip_annotation(i, n)
            elif t.kind == KEYWORD and t.text in MODIFIER_KEYWORDS:
                i += 1
            elif t.kind == KEYWORD and t.text in _TYPE_DECL_KIND:
                i = self._parse_type(i, n, None, member_start=None)
            elif t.kind == PUNCTUATION and t.text == "}":
                self._degrade(f"stray closing brace at line {t.line}")
                i += 1
            else:
                i += 1
        self._qualify()
        return self.tree

    def _parse_import(self, i: int, end: int) -> int:
        toks = self.toks
        kw = toks[i]
        i += 1
        if i < end and toks[i].kind == KEYWORD and toks[i].text == "static":
            i += 1
        name, i = _read_dotted(toks, i, end)
        if name is None:
            return i
        wildcard = False
        if i + 1 < end and _is_punct(toks[i], ".") and _is_punct(toks[i + 1], "*"):
            wildcard = True
            name += ".*"
            i += 2
        self.tree.imports.append(ImportDecl(name, kw.line, kw.col, wildcard))
        if not wildcard:
            simple = name.rsplit(".", 1)[-1]
            self.tree.import_table.setdefault(simple, name)
        return i

    # -- type declarations ---------------------------------------------------

    def _parse_type(
        self, i: int, end: int, outer: TypeDecl | None, member_start: int | None
    ) -> int:
        toks = self.toks
        kind_kw = toks[i]
        start_tok = toks[member_start] if member_start is not None else kind_kw
        i += 1
        if i >= end or toks[i].kind != IDENTIFIER:
            return i
        name_tok = toks[i]
        i += 1
        if i < end and _is_punct(toks[i], "<"):
            past = _skip_generics(toks, i, end)
            i = past if past is not None else i + 1
        extends: list[tuple[str, int, int]] = []
        implements: list[tuple[str, int, int]] = []
        mode = ""
        while i < end and not _is_punct(toks[i], "{"):
            t = toks[i]
            if t.kind == KEYWORD and t.text == "extends":
                mode = "extends"
                i += 1
            elif t.kind == KEYWORD and t.text == "implements":
                mode = "implements"
                i += 1
            elif t.kind == IDENTIFIER and mode:
                ty, i = _read_type(toks, i, end)
                if ty is None:
                    i += 1
                    continue
                target = extends if mode == "extends" else implements
                target.append((ty, t.line, t.col))
            else:
                i += 1
        if i >= end:
            self._degrade(f"type {name_tok.text} has no body")
            decl = TypeDecl(
                kind=kind_kw.text, simple_name=name_tok.text,
                line=name_tok.line, col=name_tok.col,
                span=(start_tok.line, toks[end - 1].line if end else name_tok.line),
                extends=extends, implements=implements,
            )
            self._attach(decl, outer)
            return i
        open_idx = i
        close = self._match_brace(open_idx, end)
        if close < 0:
            self._degrade(f"unbalanced braces in type {name_tok.text}")
            body_end = end
            span_end = toks[end - 1].line
        else:
            body_end = close
            span_end = toks[close].line
        decl = TypeDecl(
            kind=kind_kw.text, simple_name=name_tok.text,
            line=name_tok.line, col=name_tok.col,
            span=(start_tok.line, span_end),
            extends=extends, implements=implements,
        )
        self._attach(decl, outer)
        body_start = open_idx + 1
        if kind_kw.text == "enum":
            body_start = self._skip_enum_constants(body_start, body_end)
        self._parse_class_body(body_start, body_end, decl)
        return (close + 1) if close >= 0 else end

    def _attach(self, decl: TypeDecl, outer: TypeDecl | None) -> None:
        if outer is None:
            self.tree.types.append(decl)
        else:
            outer.nested.append(decl)

    def _skip_enum_constants(self, start: int, end: int) -> int:
        toks = self.toks
        j = start
        depth = 0
        while j < end:
            t = toks[j]
            if t.kind == PUNCTUATION:
                if t.text in "([{":
                    depth += 1
                elif t.text in ")]}":
                    depth -= 1
                elif t.text == ";" and depth == 0:
                    return j + 1
            j += 1
        return end

    # -- class body members ---------------------------------------------------

    def _parse_class_body(self, start: int, end: int, decl: TypeDecl) -> None:
        toks = self.toks
        i = start
        while i < end:
            t = toks[i]
            if t.kind == PUNCTUATION and t.text in (";", ","):
                i += 1
                continue
            member_start = i
            while i < end and (
                _is_punct(toks[i], "@")
                or (toks[i].kind == KEYWORD and toks[i].text in MODIFIER_KEYWORDS)
            ):
                if _is_punct(toks[i], "@"):
                    i = self._skip_annotation(i, end)
                else:
                    i += 1
            if i >= end:
                break
            t = toks[i]
            if t.kind == KEYWORD and t.text in _TYPE_DECL_KIND:
                i = self._parse_type(i, end, decl, member_start)
                continue
            if _is_punct(t, "{"):  # instance or static initializer block
                close = self._match_brace(i, end)
                i = close + 1 if close >= 0 else end
                continue
            if _is_punct(t, "<"):
                past = _skip_generics(toks, i, end)
                i = past if past is not None else i + 1
                if i >= end:
                    break
            stop, stop_idx = self._find_member_stop(i, end)
            if stop is None:
                self._degrade(f"unterminated member near line {t.line}")
                break
            if stop == "(":
                i = self._parse_method(member_start, i, stop_idx, end, decl)
            elif stop in ("=", ";"):
                i = self._parse_field(i, end, decl)
            else:  # unexpected '{'
                close = self._match_brace(stop_idx, end)
                i = close + 1 if close >= 0 else end

    def _find_member_stop(self, i: int, end: int) -> tuple[str | None, int]:
        toks = self.toks
        depth = 0
        for j in range(i, end):
            t = toks[j]
            if t.kind != PUNCTUATION:
                continue
            if t.text == "<":
                depth += 1
            elif t.text == ">":
                depth = max(0, depth - 1)
            elif depth == 0 and t.text in ("(", "=", ";", "{"):
                return t.text, j
        return None, end

    def _parse_method(
        self, member_start: int, type_start: int, paren_idx: int, end: int,
        decl: TypeDecl,
    ) -> int:
        toks = self.toks
        name_tok = toks[paren_idx - 1]
        if name_tok.kind != IDENTIFIER:
            return paren_idx + 1
        is_ctor = paren_idx - 1 == type_start and name_tok.text == decl.simple_name
        raw_return: str | None = None
        if not is_ctor:
            raw_return, _ = _read_type(toks, type_start, paren_idx - 1)
            if raw_return is None:
                raw_return = "?"
        close = self._match_paren(paren_idx, end)
        if close < 0:
            self._degrade(f"unbalanced parentheses near line {name_tok.line}")
            return paren_idx + 1
        params = self._parse_params(paren_idx + 1, close)
        k = close + 1
        # consume throws clause and anything else up to the body or terminator
        while k < end and not (_is_punct(toks[k], "{") or _is_punct(toks[k], ";")):
            k += 1
        method = MethodDecl(
            name=name_tok.text, is_ctor=is_ctor, params=params,
            raw_return=raw_return, line=name_tok.line, col=name_tok.col,
            span=(toks[member_start].line, name_tok.line),
            has_body=False, facts=[],
        )
        if k < end and _is_punct(toks[k], "{"):
            body_close = self._match_brace(k, end)
            if body_close < 0:
                self._degrade(f"unbalanced braces in {name_tok.text} near line {name_tok.line}")
                body_end = end
                span_end = toks[end - 1].line if end else name_tok.line
                next_i = end
            else:
                body_end = body_close
                span_end = toks[body_close].line
                next_i = body_close + 1
            method.has_body = True
            method.span = (toks[member_start].line, span_end)
            method.facts = self._parse_body(k + 1, body_end)
            decl.methods.append(method)
            return next_i
        if k < end:  # ';' — abstract or interface method
            method.span = (toks[member_start].line, toks[k].line)
            decl.methods.append(method)
            return k + 1
        decl.methods.append(method)
        return end

    def _parse_params(self, start: int, end: int) -> list[ParamDecl]:
        toks = self.toks
        params: list[ParamDecl] = []
        j = start
        while j < end:
            t = toks[j]
            if _is_punct(t, "@"):
                j = self._skip_annotation(j, end)
                continue
            if t.kind == KEYWORD and t.text == "final":
                j += 1
                continue
            if t.kind == IDENTIFIER or (t.kind == KEYWORD and t.text in PRIMITIVE_TYPES):
                ty, j2 = _read_type(toks, j, end)
                if ty is not None:
                    params.append(ParamDecl(ty, t.line, t.col))
                    # skip the parameter name and any postfix brackets
                    j = j2
                    while j < end and not _is_punct(toks[j], ","):
                        j += 1
                    continue
            j += 1
        return params

    def _parse_field(self, type_start: int, end: int, decl: TypeDecl) -> int:
        toks = self.toks
        type_tok = toks[type_start]
        raw_type, j = _read_type(toks, type_start, end)
        if raw_type is None:
            return self._skip_statement(type_start, end)
        first = True
        while j < end:
            t = toks[j]
            if t.kind == IDENTIFIER:
                nxt = toks[j + 1] if j + 1 < end else None
                if nxt is not None and not (
                    nxt.kind == PUNCTUATION and nxt.text in (",", ";", "=", "[")
                ):
                    break  # not a declarator; bail out of the statement
                if first:
                    decl.fields.append(FieldDecl(raw_type, type_tok.line, type_tok.col))
                    first = False
                else:
                    decl.fields.append(FieldDecl(raw_type, t.line, t.col))
                j += 1
                while j + 1 < end and _is_punct(toks[j], "[") and _is_punct(toks[j + 1], "]"):
                    j += 2
            elif _is_punct(t, ","):
                j += 1
            elif _is_punct(t, ";"):
                return j + 1
            elif _is_punct(t, "="):
                j = self._skip_initializer(j + 1, end)
            else:
                break
        return self._skip_statement(j, end)

    def _skip_initializer(self, start: int, end: int) -> int:
        """Skip an initializer expression; stop at a top-level ',' or ';'."""
        toks = self.toks
        depth = 0
        j = start
        while j < end:
            t = toks[j]
            if t.kind == PUNCTUATION:
                if t.text in "([{":
                    depth += 1
                elif t.text in ")]}":
                    if depth == 0:
                        return j
                    depth -= 1
                elif depth == 0 and t.text in (",", ";"):
                    return j
            j += 1
        return end

    def _skip_statement(self, start: int, end: int) -> int:
        toks = self.toks
        depth = 0
        j = start
        while j < end:
            t = toks[j]
            if t.kind == PUNCTUATION:
                if t.text in "([{":
                    depth += 1
                elif t.text in ")]}":
                    depth -= 1
                elif t.text == ";" and depth <= 0:
                    return j + 1
            j += 1
        return end

    # -- method bodies ---------------------------------------------------------

    def _parse_body(self, start: int, end: int) -> list[Fact]:
        toks = self.toks
        facts: list[Fact] = []
        i = start
        while i < end:
            t = toks[i]
            if t.kind == KEYWORD:
                if t.text == "catch":
                    i = self._parse_catch(i, end, facts)
                elif t.text == "throw":
                    if i + 1 < end and toks[i + 1].kind == KEYWORD and toks[i + 1].text == "new":
                        ty, _ = _read_type(toks, i + 2, end)
                        if ty is not None:
                            anchor = toks[i + 2]
                            facts.append(Fact("EH", ty, anchor.line, anchor.col))
                    i += 1
                elif t.text == "new":
                    i = self._parse_new(i, end, facts)
                elif t.text in PRIMITIVE_TYPES:
                    ty, j = _read_type(toks, i, end)
                    if ty is not None and j < end and toks[j].kind == IDENTIFIER:
                        facts.append(Fact("VD", ty, t.line, t.col))
                        j2 = j + 1
                        while j2 + 1 < end and _is_punct(toks[j2], "[") and _is_punct(toks[j2 + 1], "]"):
                            j2 += 2
                        self._peek_extra_declarators(ty, j2, end, facts)
                        i = j2
                    else:
                        i = j if j > i else i + 1
                elif t.text == "class":
                    i = self._parse_local_class(i, end, facts)
                else:
                    i += 1
            elif t.kind == IDENTIFIER:
                i = self._parse_chain(i, end, facts)
            elif _is_punct(t, "("):
                i = self._maybe_cast(i, end, facts)
            else:
                i += 1
        return facts

    def _parse_chain(self, i: int, end: int, facts: list[Fact]) -> int:
        toks = self.toks
        start_tok = toks[i]
        parts = [start_tok.text]
        last_tok = start_tok
        i += 1
        while i < end:
            if _is_punct(toks[i], ".") and i + 1 < end and toks[i + 1].kind == IDENTIFIER:
                last_tok = toks[i + 1]
                parts.append(last_tok.text)
                i += 2
            elif _is_punct(toks[i], "<"):
                past = _skip_generics(toks, i, end)
                if past is None:
                    break
                i = past
            else:
                break
        if i < end and _is_punct(toks[i], "("):
            arity = self._count_args(i, end)
            facts.append(Fact("MI", parts[-1], last_tok.line, last_tok.col, arity=arity))
            return i + 1  # keep scanning inside the argument list
        if i < end and toks[i].kind == IDENTIFIER:
            # Type name: local variable declaration
            facts.append(Fact("VD", ".".join(parts), start_tok.line, start_tok.col))
            j = i + 1
            while j + 1 < end and _is_punct(toks[j], "[") and _is_punct(toks[j + 1], "]"):
                j += 2
            self._peek_extra_declarators(".".join(parts), j, end, facts)
            return j
        if len(parts) >= 2:
            facts.append(Fact("FA", ".".join(parts), start_tok.line, start_tok.col))
        return i

    def _peek_extra_declarators(
        self, raw_type: str, start: int, end: int, facts: list[Fact]
    ) -> None:
        """Emit one fact per additional comma-separated declarator."""
        toks = self.toks
        depth = 0
        j = start
        while j < end:
            t = toks[j]
            if t.kind == PUNCTUATION:
                if t.text in "([{":
                    depth += 1
                elif t.text in ")]}":
                    if depth == 0:
                        return
                    depth -= 1
                elif depth == 0 and t.text == ";":
                    return
                elif depth == 0 and t.text == ",":
                    nt = toks[j + 1] if j + 1 < end else None
                    nnt = toks[j + 2] if j + 2 < end else None
                    if (
                        nt is not None
                        and nt.kind == IDENTIFIER
                        and nnt is not None
                        and nnt.kind == PUNCTUATION
                        and nnt.text in (",", ";", "=", "[")
                    ):
                        facts.append(Fact("VD", raw_type, nt.line, nt.col))
                        j += 2
                        continue
                    return
            j += 1

    def _count_args(self, open_idx: int, end: int) -> int:
        toks = self.toks
        close = self._match_paren(open_idx, end)
        if close < 0:
            close = end
        if close == open_idx + 1:
            return 0
        depth = 0
        commas = 0
        for j in range(open_idx, min(close + 1, end)):
            t = toks[j]
            if t.kind == PUNCTUATION:
                if t.text in "([{":
                    depth += 1
                elif t.text in ")]}":
                    depth -= 1
                elif t.text == "," and depth == 1:
                    commas += 1
        return commas + 1

    def _maybe_cast(self, i: int, end: int, facts: list[Fact]) -> int:
        toks = self.toks
        close = self._match_paren(i, end)
        if close < 0:
            return i + 1
        ty, j = _read_type(toks, i + 1, close)
        if ty is not None and j == close and close + 1 < end:
            nxt = toks[close + 1]
            operand = (
                nxt.kind in (IDENTIFIER, NUMBER, STRING_LITERAL, CHAR_LITERAL)
                or (nxt.kind == KEYWORD and (nxt.text in ("new", "this", "super")
                                             or nxt.text in PRIMITIVE_TYPES))
                or _is_punct(nxt, "(")
            )
            if operand:
                anchor = toks[i + 1]
                facts.append(Fact("CS", ty, anchor.line, anchor.col))
                return close + 1
        return i + 1

    def _parse_new(self, i: int, end: int, facts: list[Fact]) -> int:
        toks = self.toks
        ty, j = _read_type(toks, i + 1, end)
        if ty is None:
            return i + 1
        if j < end and _is_punct(toks[j], "("):
            anchor = toks[i + 1]
            facts.append(Fact("CI", ty, anchor.line, anchor.col))
            close = self._match_paren(j, end)
            if close >= 0 and close + 1 < end and _is_punct(toks[close + 1], "{"):
                bclose = self._match_brace(close + 1, end)
                body_end = bclose if bclose >= 0 else end
                self._parse_foldable_members(close + 2, body_end, facts)
                return bclose + 1 if bclose >= 0 else end
            return j + 1  # scan the argument list normally
        return j if j > i + 1 else i + 1

    def _parse_local_class(self, i: int, end: int, facts: list[Fact]) -> int:
        toks = self.toks
        j = i + 1
        while j < end and not _is_punct(toks[j], "{"):
            j += 1
        if j >= end:
            return end
        close = self._match_brace(j, end)
        body_end = close if close >= 0 else end
        self._parse_foldable_members(j + 1, body_end, facts)
        return close + 1 if close >= 0 else end

    def _parse_foldable_members(self, start: int, end: int, facts: list[Fact]) -> None:
        """Scan an anonymous or local class body and fold the facts of its
        method bodies into the enclosing method. Member declarations
        themselves are not items here; they have no block of their own."""
        toks = self.toks
        i = start
        while i < end:
            t = toks[i]
            if t.kind == PUNCTUATION and t.text in (";", ","):
                i += 1
                continue
            if _is_punct(t, "@"):
                i = self._skip_annotation(i, end)
                continue
            if t.kind == KEYWORD and t.text in MODIFIER_KEYWORDS:
                i += 1
                continue
            if t.kind == KEYWORD and t.text in _TYPE_DECL_KIND:
                j = i + 1
                while j < end and not _is_punct(toks[j], "{"):
                    j += 1
                close = self._match_brace(j, end) if j < end else -1
                i = close + 1 if close >= 0 else end
                continue
            if _is_punct(t, "{"):
                close = self._match_brace(i, end)
                i = close + 1 if close >= 0 else end
                continue
            stop, stop_idx = self._find_member_stop(i, end)
            if stop is None:
                return
            if stop == "(":
                close = self._match_paren(stop_idx, end)
                if close < 0:
                    return
                k = close + 1
                while k < end and not (_is_punct(toks[k], "{") or _is_punct(toks[k], ";")):
                    k += 1
                if k < end and _is_punct(toks[k], "{"):
                    bclose = self._match_brace(k, end)
                    body_end = bclose if bclose >= 0 else end
                    facts.extend(self._parse_body(k + 1, body_end))
                    i = bclose + 1 if bclose >= 0 else end
                else:
                    i = k + 1 if k < end else end
            else:
                i = self._skip_statement(stop_idx, end)

    def _parse_catch(self, i: int, end: int, facts: list[Fact]) -> int:
        toks = self.toks
        if i + 1 >= end or not _is_punct(toks[i + 1], "("):
            return i + 1
        close = self._match_paren(i + 1, end)
        if close < 0:
            return i + 1
        j = i + 2
        while j < close:
            t = toks[j]
            if _is_punct(t, "@"):
                j = self._skip_annotation(j, close)
                continue
            if t.kind == KEYWORD and t.text == "final":
                j += 1
                continue
            if t.kind == IDENTIFIER or (t.kind == KEYWORD and t.text in PRIMITIVE_TYPES):
                ty, j2 = _read_type(toks, j, close)
                if ty is None:
                    j += 1
                    continue
                facts.append(Fact("EH", ty, t.line, t.col))
                j = j2
                if j < close and _is_punct(toks[j], "|"):
                    j += 1
                    continue
                break
            j += 1
        return close + 1

    # -- qualification ---------------------------------------------------------

    def _qualify(self) -> None:
        def walk(decl: TypeDecl, prefix: str) -> None:
            decl.qualified = f"{prefix}.{decl.simple_name}" if prefix else decl.simple_name
            self.tree.declared[decl.simple_name] = decl.qualified
            for nested in decl.nested:
                walk(nested, decl.qualified)

        for t in self.tree.types:
            walk(t, self.tree.package)


def parse_structure(tokens: list[Token], unit: "SourceUnit | None" = None) -> BlockTree:
    """Build the block tree over significant tokens; never raises on bad input."""
    context = unit.path if unit is not None else "<unit>"
    parser = _Parser(significant(tokens), context)
    return parser.parse()


# ---------------------------------------------------------------------------
# Name resolution and item extraction
# ---------------------------------------------------------------------------

def resolve_type(
    simple_name: str,
    block_tree: BlockTree,
    default_types: dict[str, str] | None = None,
) -> str:
    """Qualify a type name. Resolution order: already qualified, import
    table, same-file declaration, default-namespace table; otherwise the name
    is returned unchanged and recorded as unresolved."""
    if not simple_name:
        raise ValueError("type name must be non-empty")
    if "." in simple_name:
        return simple_name
    if simple_name in PRIMITIVE_TYPES:
        return simple_name
    if simple_name in block_tree.import_table:
        return block_tree.import_table[simple_name]
    if simple_name in block_tree.declared:
        return block_tree.declared[simple_name]
    table = default_types if default_types is not None else default_type_table()
    if simple_name in table:
        return table[simple_name]
    block_tree.unresolved.add(simple_name)
    return simple_name


def method_signature(
    method: MethodDecl,
    block_tree: BlockTree,
    default_types: dict[str, str] | None = None,
) -> str:
    """Render ``name(paramTypes):returnType`` with resolved type names."""
    params = ",".join(
        resolve_type(p.raw_type, block_tree, default_types) for p in method.params
    )
    if method.is_ctor:
        return f"{method.name}({params})"
    ret = resolve_type(method.raw_return, block_tree, default_types) if method.raw_return else "?"
    return f"{method.name}({params}):{ret}"


DeclarationIndex = dict[tuple[str, int], frozenset[str]]


def build_declaration_index(
    trees: Iterable[BlockTree],
    default_types: dict[str, str] | None = None,
) -> DeclarationIndex:
    """Corpus-wide (method name, arity) to declared signature strings."""
    raw: dict[tuple[str, int], set[str]] = {}
    for tree in trees:
        for decl in tree.all_types():
            for m in decl.methods:
                if m.is_ctor:
                    continue
                sig = method_signature(m, tree, default_types)
                raw.setdefault((m.name, len(m.params)), set()).add(sig)
    return {key: frozenset(sigs) for key, sigs in raw.items()}


def _invocation_name(
    fact: Fact,
    owner: TypeDecl,
    tree: BlockTree,
    decl_index: DeclarationIndex | None,
    default_types: dict[str, str] | None,
) -> str:
    for m in owner.methods:
        if not m.is_ctor and m.name == fact.raw and len(m.params) == fact.arity:
            return method_signature(m, tree, default_types)
    if decl_index is not None:
        sigs = decl_index.get((fact.raw, fact.arity))
        if sigs is not None and len(sigs) == 1:
            return next(iter(sigs))
    return f"{fact.raw}(arity={fact.arity}):?"


def extract_items(
    block_tree: BlockTree,
    unit: "SourceUnit | None" = None,
    decl_index: DeclarationIndex | None = None,
    default_types: dict[str, str] | None = None,
) -> list[Item]:
    """Emit one item per recognized fact, classified by the kind catalog."""
    items: list[Item] = []
    tree = block_tree
    first_top = tree.types[0] if tree.types else None

    def resolve(name: str) -> str:
        return resolve_type(name, tree, default_types)

    def fact_item(fact: Fact, owner: TypeDecl, m_entity: str) -> Item:
        if fact.kind == "MI":
            name = _invocation_name(fact, owner, tree, decl_index, default_types)
        elif fact.kind == "FA":
            head, dot, rest = fact.raw.partition(".")
            name = f"{resolve(head)}.{rest}" if dot else resolve(head)
        else:
            name = resolve(fact.raw)
        return Item(fact.kind, name, m_entity, fact.line, fact.col)

    def emit_type(decl: TypeDecl) -> None:
        entity = decl.qualified
        if decl is first_top:
            if tree.package:
                items.append(Item("PK", tree.package, entity,
                                  tree.package_line, tree.package_col))
            for imp in tree.imports:
                items.append(Item("IM", imp.name, entity, imp.line, imp.col))
        items.append(Item(_TYPE_DECL_KIND[decl.kind], decl.qualified, entity,
                          decl.line, decl.col))
        for raw, line, col in decl.extends:
            items.append(Item("XT", resolve(raw), entity, line, col))
        for raw, line, col in decl.implements:
            items.append(Item("IP", resolve(raw), entity, line, col))
        for f in decl.fields:
            items.append(Item("FD", resolve(f.raw_type), entity, f.line, f.col))
        for m in decl.methods:
            kind = "CT" if m.is_ctor else "MD"
            items.append(Item(kind, method_signature(m, tree, default_types),
                              entity, m.line, m.col))
            if m.has_body:
                m_entity = f"{entity}.{m.name}()"
                for p in m.params:
                    items.append(Item("PM", resolve(p.raw_type), m_entity, p.line, p.col))
                for fact in m.facts:
                    items.append(fact_item(fact, decl, m_entity))
        for nested in decl.nested:
            emit_type(nested)

    for top in tree.types:
        emit_type(top)
    return items


def build_transactions(
    items: list[Item],
    block_tree: BlockTree,
    unit: "SourceUnit | None" = None,
) -> list[Transaction]:
    """Group items into one transaction per class block and per method block.

    Items are ordered by (line, col, kind, name); empty blocks are dropped.
    When package/import items attach to the first class block, that block's
    span is widened to cover them.
    """
    unit_path = unit.path if unit is not None else "<unit>"
    by_entity: dict[str, list[Item]] = {}
    for item in items:
        by_entity.setdefault(item.entity, []).append(item)

    transactions: list[Transaction] = []

    def emit_type(decl: TypeDecl) -> None:
        class_items = [
            it for it in by_entity.get(decl.qualified, ())
            if it.kind in CLASS_BLOCK_KINDS
        ]
        if class_items:
            class_items.sort(key=_item_sort_key)
            start = min(decl.span[0], class_items[0].line)
            span = (start, max(decl.span[1], decl.span[0]))
            transactions.append(
                Transaction(
                    id=_transaction_id(unit_path, decl.qualified, span),
                    entity=decl.qualified,
                    block_kind="class",
                    items=tuple(class_items),
                    unit_path=unit_path,
                    span=span,
                )
            )
        for m in decl.methods:
            if not m.has_body:
                continue
            m_entity = f"{decl.qualified}.{m.name}()"
            span = m.span
            m_items = [
                it for it in by_entity.get(m_entity, ())
                if it.kind in METHOD_BLOCK_KINDS and span[0] <= it.line <= span[1]
            ]
            if not m_items:
                continue
            m_items.sort(key=_item_sort_key)
            transactions.append(
                Transaction(
                    id=_transaction_id(unit_path, m_entity, span),
                    entity=m_entity,
                    block_kind="method",
                    items=tuple(m_items),
                    unit_path=unit_path,
                    span=span,
                )
            )
        for nested in decl.nested:
            emit_type(nested)

    for top in block_tree.types:
        emit_type(top)
    return transactions


def abstract_unit(
    unit: "SourceUnit",
    decl_index: DeclarationIndex | None = None,
    default_types: dict[str, str] | None = None,
) -> tuple[BlockTree, list[Transaction]]:
    """Tokenize, parse, and abstract a single unit into transactions."""
    warnings: list[str] = []
    tokens = tokenize(unit.text, warnings)
    tree = parse_structure(tokens, unit)
    tree.warnings = warnings + tree.warnings
    if warnings:
        tree.degraded = True
    items = extract_items(tree, unit, decl_index, default_types)
    return tree, build_transactions(items, tree, unit)


def abstract_corpus(
    units: "Iterable[SourceUnit]",
    default_types: dict[str, str] | None = None,
) -> tuple[list[Transaction], dict[str, BlockTree]]:
    """Abstract a whole corpus: parse all units, build the corpus-wide
    declaration index in one pass, then extract per-unit transactions."""
    units = list(units)
    trees: dict[str, BlockTree] = {}
    parsed: list[tuple["SourceUnit", BlockTree]] = []
    for unit in units:
        warnings: list[str] = []
        tokens = tokenize(unit.text, warnings)
        tree = parse_structure(tokens, unit)
        tree.warnings = warnings + tree.warnings
        if warnings:
            tree.degraded = True
        trees[unit.path] = tree
        parsed.append((unit, tree))
    index = build_declaration_index(trees.values(), default_types)
    transactions: list[Transaction] = []
    for unit, tree in parsed:
        items = extract_items(tree, unit, index, default_types)
        transactions.extend(build_transactions(items, tree, unit))
    return transactions, trees


# ---------------------------------------------------------------------------
# Pre-abstracted record ingestion
# ---------------------------------------------------------------------------

_RECORD_FIELDS = frozenset({"kind", "name", "entity", "line", "unit", "block", "span"})


def read_transaction_records(lines: Iterable[str] | str | Path) -> list[Transaction]:
    """Import pre-abstracted transactions from line-delimited records.

    Each line is one JSON object with exactly the fields kind, name, entity,
    line, unit, block, span. Records sharing (unit, entity, block, span) form
    one transaction. Unknown fields are rejected.
    """
    if isinstance(lines, (str, Path)):
        lines = Path(lines).read_text(encoding="utf-8").splitlines()
    groups: dict[tuple[str, str, str, tuple[int, int]], list[Item]] = {}
    for lineno, raw in enumerate(lines, 1):
        raw = raw.strip()
        if not raw:
            continue
        try:
            record = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise RecordFormatError(f"record {lineno}: invalid JSON: {exc}") from exc
        if not isinstance(record, dict):
            raise RecordFormatError(f"record {lineno}: expected an object")
        unknown = set(record) - _RECORD_FIELDS
        if unknown:
            raise RecordFormatError(f"record {lineno}: unknown fields {sorted(unknown)}")
        missing = _RECORD_FIELDS - set(record)
        if missing:
            raise RecordFormatError(f"record {lineno}: missing fields {sorted(missing)}")
        kind = record["kind"]
        if kind not in ITEM_KINDS:
            raise RecordFormatError(f"record {lineno}: unknown item kind {kind!r}")
        block = record["block"]
        if block not in ("class", "method"):
            raise RecordFormatError(f"record {lineno}: block must be class or method")
        name, entity = record["name"], record["entity"]
        if not isinstance(name, str) or not name:
            raise RecordFormatError(f"record {lineno}: name must be a non-empty string")
        if not isinstance(entity, str) or not entity:
            raise RecordFormatError(f"record {lineno}: entity must be a non-empty string")
        line = record["line"]
        if not isinstance(line, int) or line < 1:
            raise RecordFormatError(f"record {lineno}: line must be a positive integer")
        span = record["span"]
        if (
            not isinstance(span, list) or len(span) != 2
            or not all(isinstance(v, int) and v >= 1 for v in span)
            or span[0] > span[1]
        ):
            raise RecordFormatError(f"record {lineno}: span must be [start, end]")
        if not span[0] <= line <= span[1]:
            raise RecordFormatError(f"record {lineno}: line {line} outside span {span}")
        unit = record["unit"]
        if not isinstance(unit, str) or not unit:
            raise RecordFormatError(f"record {lineno}: unit must be a non-empty string")
        key = (unit, entity, block, (span[0], span[1]))
        groups.setdefault(key, []).append(Item(kind, name, entity, line))
    transactions = []
    for (unit, entity, block, span), group_items in groups.items():
        group_items.sort(key=_item_sort_key)
        transactions.append(
            Transaction(
                id=_transaction_id(unit, entity, span),
                entity=entity,
                block_kind=block,
                items=tuple(group_items),
                unit_path=unit,
                span=span,
            )
        )
    return transactions
