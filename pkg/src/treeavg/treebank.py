"""Constituency trees over token sequences: reading, writing, spans, baselines.

Trees are immutable.  Spans are 1-based and half-open, so a sentence of
``n`` tokens has root span ``(1, n + 1)`` and single-token spans
``(b, b + 1)``.

Bracketed input comes in two flavours that are not syntactically
distinguishable in general: unlabeled parser output such as
``(w1 (w2 w3))`` and labeled treebank trees such as ``(S (NP a b) (VP c))``.
:func:`parse_bracketed` therefore takes a ``labeled`` switch; ``None``
guesses (see :func:`looks_unlabeled`).
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Iterator, NamedTuple, Optional, Sequence, Union

__all__ = [
    "Token",
    "Span",
    "Node",
    "Tree",
    "SpanSet",
    "TreeFormatError",
    "parse_bracketed",
    "render_bracketed",
    "constituents",
    "labeled_constituents",
    "branching_tree",
    "tree_from_spans",
    "strip_tokens",
    "looks_unlabeled",
]


class TreeFormatError(ValueError):
    """Malformed bracketed text.  ``offset`` is the 0-based character position."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at character {offset})")
        self.offset = offset


@dataclass(frozen=True, slots=True)
class Token:
    surface: str
    index: int


class Span(NamedTuple):
    begin: int
    end: int

    @property
    def width(self) -> int:
        return self.end - self.begin

    def __str__(self) -> str:
        return f"[{self.begin},{self.end})"


SpanSet = frozenset  # frozenset[Span]


@dataclass(frozen=True, slots=True)
class Node:
    span: Span
    label: Optional[str] = None
    children: tuple["Node", ...] = ()
    # POS tag, only ever set on leaves
    tag: Optional[str] = None

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def iter_nodes(self) -> Iterator["Node"]:
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))


@dataclass(frozen=True, slots=True)
class Tree:
    tokens: tuple[Token, ...]
    root: Node

    @property
    def n(self) -> int:
        return len(self.tokens)

    @property
    def words(self) -> tuple[str, ...]:
        return tuple(t.surface for t in self.tokens)

    def nodes(self) -> Iterator[Node]:
        """Pre-order traversal."""
        return self.root.iter_nodes()

    def is_binary(self) -> bool:
        return all(len(node.children) in (0, 2) for node in self.nodes())

    def is_labeled(self) -> bool:
        return any(node.label is not None or node.tag is not None for node in self.nodes())

    def __str__(self) -> str:
        return render_bracketed(self)


# ---------------------------------------------------------------------------
# Reading

_LEXEME = re.compile(r"\(|\)|[^\s()]+")


class _List(list):
    """A parenthesised group; remembers where it opened."""

    __slots__ = ("offset",)


Atom = tuple  # (surface, offset)
SExpr = Union[_List, Atom]


def _read_sexpr(line: str) -> _List:
    stack: list[_List] = []
    top: Optional[_List] = None
    for m in _LEXEME.finditer(line):
        lexeme, pos = m.group(), m.start()
        if top is not None:
            raise TreeFormatError("trailing material after tree", pos)
        if lexeme == "(":
            group = _List()
            group.offset = pos
            stack.append(group)
        elif lexeme == ")":
            if not stack:
                raise TreeFormatError("unbalanced parentheses: unexpected ')'", pos)
            group = stack.pop()
            if not group:
                raise TreeFormatError("empty constituent '()'", group.offset)
            if stack:
                stack[-1].append(group)
            else:
                top = group
        else:
            if not stack:
                raise TreeFormatError("token outside of parentheses", pos)
            stack[-1].append((lexeme, pos))
    if stack:
        raise TreeFormatError("unbalanced parentheses: unclosed '('", stack[-1].offset)
    if top is None:
        raise TreeFormatError("zero tokens: no tree found", 0)
    return top


def looks_unlabeled(line: str) -> bool:
    """Guess the flavour of a bracketed tree.

    Treebank trees put a label first in every multi-element group, so a
    group of two or more elements that opens with another group can only
    come from unlabeled output.  Trees without such a group (for instance
    purely right-branching output) are read as labeled; pass
    ``labeled=False`` explicitly for those.
    """
    return _has_unlabeled_evidence(_read_sexpr(line))


def _has_unlabeled_evidence(group: _List) -> bool:
    stack = [group]
    while stack:
        g = stack.pop()
        if len(g) >= 2 and isinstance(g[0], _List):
            return True
        stack.extend(x for x in g if isinstance(x, _List))
    return False


# Intermediate form before span assignment:
#   leaf:     (surface, tag, label)      -- a 3-tuple of str/None
#   internal: [label, child, child, ...] -- a list
def _raw_from_sexpr(group: _List, labeled: bool):
    label = None
    elems: Sequence[SExpr] = group
    if labeled and len(group) >= 2 and not isinstance(group[0], _List):
        label = group[0][0]
        elems = group[1:]
        if len(elems) == 1 and not isinstance(elems[0], _List):
            return (elems[0][0], label, None)
    children = []
    for e in elems:
        if isinstance(e, _List):
            children.append(_raw_from_sexpr(e, labeled))
        else:
            children.append((e[0], None, None))
    return _collapse(label, children)


def _collapse(label, children):
    if len(children) == 1:
        child = children[0]
        if label is None:
            return child
        if isinstance(child, tuple):
            return (child[0], child[1], label)
        return [label, *child[1:]]
    return [label, *children]


def _assemble(raw) -> Tree:
    tokens: list[Token] = []

    def build(r) -> Node:
        if isinstance(r, tuple):
            surface, tag, label = r
            i = len(tokens) + 1
            tokens.append(Token(surface, i))
            return Node(Span(i, i + 1), label, (), tag)
        start = len(tokens) + 1
        kids = tuple(build(c) for c in r[1:])
        return Node(Span(start, len(tokens) + 1), r[0], kids)

    root = build(raw)
    return Tree(tuple(tokens), root)


def parse_bracketed(line: str, labeled: Optional[bool] = None) -> Tree:
    """Read one bracketed tree.

    With ``labeled`` true the first atom of every group of two or more
    elements is a label, and ``(TAG word)`` is a preterminal whose tag is
    kept on the leaf.  With ``labeled`` false every atom is a token.
    Unary chains are collapsed onto a single node that keeps the outermost
    label.
    """
    group = _read_sexpr(line)
    if labeled is None:
        labeled = not _has_unlabeled_evidence(group)
    return _assemble(_raw_from_sexpr(group, labeled))


# ---------------------------------------------------------------------------
# Writing


def render_bracketed(tree: Tree) -> str:
    """Inverse of :func:`parse_bracketed`.

    Unlabeled trees come out in plain form, ``((w1 w2) w3)``, and read back
    with ``labeled=False``.  Trees carrying any label or tag are written so
    that a labeled read recovers them: bare words that would otherwise be
    mistaken for a label are wrapped as ``(word)``.
    """
    words = tree.words
    if not tree.is_labeled():
        return _render_plain(tree.root, words)
    return _render_labeled(tree.root, words, guard=True)


def _render_plain(node: Node, words) -> str:
    if node.is_leaf:
        return f"({words[node.span.begin - 1]})"
    return "(" + " ".join(_render_plain_child(c, words) for c in node.children) + ")"


def _render_plain_child(node: Node, words) -> str:
    if node.is_leaf:
        return words[node.span.begin - 1]
    return _render_plain(node, words)


def _render_labeled(node: Node, words, guard: bool) -> str:
    # guard: this node sits where a bare word would be read as a label
    if node.is_leaf:
        s = words[node.span.begin - 1]
        if node.tag is not None:
            s = f"({node.tag} {s})"
        if node.label is not None:
            return f"({node.label} {s if node.tag is not None else '(' + s + ')'})"
        return f"({s})" if guard and node.tag is None else s
    if node.label is not None:
        inner = [_render_labeled(c, words, guard=False) for c in node.children]
        return f"({node.label} {' '.join(inner)})"
    inner = [_render_labeled(c, words, guard=(i == 0)) for i, c in enumerate(node.children)]
    return f"({' '.join(inner)})"


# ---------------------------------------------------------------------------
# Spans


def _is_trivial(span: Span, n: int) -> bool:
    return span.width == 1 or (span.begin == 1 and span.end == n + 1)


def constituents(tree: Tree, include_trivial: bool = False) -> frozenset[Span]:
    """All node spans; without ``include_trivial``, single words and the whole
    sentence are dropped."""
    if include_trivial:
        return frozenset(node.span for node in tree.nodes())
    n = tree.n
    return frozenset(node.span for node in tree.nodes() if not _is_trivial(node.span, n))


def labeled_constituents(tree: Tree, include_trivial: bool = False) -> list[tuple[str, Span]]:
    """``(label, span)`` for every phrase-labeled node.  POS tags never count."""
    n = tree.n
    return [
        (node.label, node.span)
        for node in tree.nodes()
        if node.label is not None and (include_trivial or not _is_trivial(node.span, n))
    ]


# ---------------------------------------------------------------------------
# Construction and transformation


def _default_tokens(n: int) -> list[str]:
    return [f"w{i}" for i in range(1, n + 1)]


def branching_tree(n: int, direction: str = "right", words: Optional[Sequence[str]] = None) -> Tree:
    if n < 1:
        raise ValueError("branching_tree needs at least one token")
    if direction not in ("left", "right"):
        raise ValueError(f"direction must be 'left' or 'right', got {direction!r}")
    words = list(words) if words is not None else _default_tokens(n)
    if len(words) != n:
        raise ValueError(f"expected {n} words, got {len(words)}")
    leaves = [(w, None, None) for w in words]
    if direction == "right":
        raw = leaves[-1]
        for leaf in reversed(leaves[:-1]):
            raw = [None, leaf, raw]
    else:
        raw = leaves[0]
        for leaf in leaves[1:]:
            raw = [None, raw, leaf]
    return _assemble(raw)


def tree_from_spans(words: Sequence[str], spans) -> Tree:
    """Build an unlabeled tree from a laminar set of spans over ``words``.

    Spans that cross an earlier-accepted span are rejected with ValueError.
    Width-1 spans and the root are implied.
    """
    n = len(words)
    if n < 1:
        raise ValueError("zero tokens")
    wanted = sorted({Span(*s) for s in spans if Span(*s).width > 1} | {Span(1, n + 1)},
                    key=lambda s: (s.begin, -s.end))

    def build(span: Span, inner: list[Span]):
        kids = []
        pos = span.begin
        i = 0
        while i < len(inner):
            child = inner[i]
            if child.end > span.end or child.begin < pos:
                raise ValueError(f"span {child} crosses {span}")
            while pos < child.begin:
                kids.append((words[pos - 1], None, None))
                pos += 1
            j = i + 1
            while j < len(inner) and inner[j].begin < child.end:
                j += 1
            kids.append(build(child, inner[i + 1:j]))
            pos = child.end
            i = j
        while pos < span.end:
            kids.append((words[pos - 1], None, None))
            pos += 1
        return _collapse(None, kids)

    root, rest = wanted[0], wanted[1:]
    if root != Span(1, n + 1):
        raise ValueError(f"span {root} lies outside the sentence")
    return _assemble(build(root, rest))


def strip_tokens(tree: Tree, drop: Callable[[Token], bool]) -> Tree:
    """Remove the leaves selected by ``drop`` and re-index the survivors.

    Nodes left empty disappear and unary chains that result are collapsed,
    so the output satisfies every tree invariant.
    """

    def prune(node: Node):
        if node.is_leaf:
            tok = tree.tokens[node.span.begin - 1]
            return None if drop(tok) else (tok.surface, node.tag, node.label)
        kids = [k for k in (prune(c) for c in node.children) if k is not None]
        if not kids:
            return None
        return _collapse(node.label, kids)

    raw = prune(tree.root)
    if raw is None:
        raise ValueError("strip_tokens removed every token")
    return _assemble(raw)
