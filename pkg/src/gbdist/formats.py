"""Line-oriented text formats for every artifact the toolkit exchanges.

All formats share the same conventions: input is plain text, '#' starts a
comment that runs to the end of the line, blank lines are ignored, and all
rationals are written exactly as an integer or p/q (never floating point).
Every parser raises FormatError carrying the offending line number; the
tree-term parser also reports a column.  Printers emit a canonical form and
``parse(print(x))`` reproduces ``x`` exactly for trees, metrics, sequences
and string-named LTSs, and up to bisimilarity of the member trees for
certificates and telescopic bundles; printing is idempotent on its own
output in all cases.

Tree terms
    tree := "0" | term ("+" term)* ; term := action ("." atom)? ;
    atom := chain | "(" tree ")".  A bare action abbreviates action.0, so
    ``a.c + b.d`` has two summands with one child each.  The token ``0``
    denotes the empty tree when it stands alone in tree or trailing atom
    position, and the action "0" otherwise; a lone 0-action leaf therefore
    prints as ``0.0``.

Metric tables
    Lines ``a b 3/2`` give the distance between two actions; the symmetric
    closure is applied, unlisted pairs are infinitely far apart and
    self-distances are implicitly 0.  An optional ``actions x y ...`` line
    declares actions that appear in no finite entry.

LTS descriptions
    Lines ``state -action-> state`` plus one ``root state`` line.  Every
    mentioned state is a state of the system; repeated lines add parallel
    transitions (successors form a multiset).

Step sequences
    Header lines ``alpha 1/2`` and ``source <tree term>`` followed by one
    step per line: ``relabel @0.1 old new 1/2``, ``dup @2``, ``drop @2 3``.
    The @path is the dot-separated child path from the root to the summand
    the step touches; its last component is the summand index at the parent
    named by the leading components.  ``drop`` names the kept sibling after
    the path.

Certificates (ccd)
    ``alpha`` and ``metric a b 1`` lines, tree declarations, then numbered
    triple blocks.  Finite trees may be declared inline via
    ``tree NAME <term>``; general ones via ``lts NAME`` followed by LTS
    lines and ``end``.  Each ``triple K LEFT RIGHT BOUND`` block lists
    witness steps until ``end``: the sequence verbs act on first-level
    summands (``relabel @0 a b 1``), and ``co @0 cite K 1`` replaces
    summand 0 by the right side of triple K at the stated cost.

Telescopic bundles
    Same preamble and tree declarations, then ``source NAME`` and
    ``target NAME`` lines and consecutively numbered ``stage N`` blocks of
    step-sequence lines terminated by ``end``.  Stage N starts from the
    depth-N unfolding of the source.
"""
from __future__ import annotations

import re
from fractions import Fraction
from typing import Optional

from .certificates import CcdCertificate, CoStep, DistanceTriple, TelescopicFamily
from .costs import Alpha, Cost, format_cost
from .domains import ACTION_RE, ActionDomain, DomainError
from .steps import Step, StepSequence
from .trees import EMPTY_TREE, FiniteTree, RegularTree, format_tree, tree_equal

__all__ = [
    "FormatError",
    "parse_tree",
    "parse_metric",
    "parse_lts",
    "parse_sequence",
    "parse_ccd",
    "parse_telescopic",
    "format_metric",
    "format_lts",
    "format_sequence",
    "format_ccd",
    "format_telescopic",
]


class FormatError(Exception):
    """Malformed textual input; knows the line (and column) it came from."""

    def __init__(self, message: str, line: Optional[int] = None,
                 column: Optional[int] = None):
        self.message = message
        self.line = line
        self.column = column
        super().__init__(message)

    def __str__(self) -> str:
        place = []
        if self.line is not None:
            place.append(f"line {self.line}")
        if self.column is not None:
            place.append(f"column {self.column}")
        if place:
            return f"{', '.join(place)}: {self.message}"
        return self.message

    def at_line(self, line: int) -> "FormatError":
        """Copy of this error pinned to a file line (keeps the column)."""
        return FormatError(self.message, line=line, column=self.column)


def _format_rat(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def _content_lines(text: str) -> list[tuple[int, str]]:
    out = []
    for no, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if body:
            out.append((no, body))
    return out


# ---------------------------------------------------------------------------
# Tree terms
# ---------------------------------------------------------------------------

_NAME = re.compile(r"[A-Za-z0-9_]+")


def _tokenize_term(text: str) -> list[tuple[str, str, int]]:
    toks = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in "+.()":
            toks.append((ch, ch, i))
            i += 1
            continue
        m = _NAME.match(text, i)
        if m is None:
            raise FormatError(f"unexpected character {ch!r}", column=i + 1)
        toks.append(("name", m.group(), i))
        i = m.end()
    toks.append(("end", "", len(text)))
    return toks


class _TermParser:
    def __init__(self, tokens: list[tuple[str, str, int]]):
        self.tokens = tokens
        self.i = 0

    def peek(self, ahead: int = 0) -> tuple[str, str, int]:
        return self.tokens[min(self.i + ahead, len(self.tokens) - 1)]

    def take(self) -> tuple[str, str, int]:
        tok = self.tokens[self.i]
        if tok[0] != "end":
            self.i += 1
        return tok

    def tree(self) -> FiniteTree:
        kind, value, _ = self.peek()
        if kind == "name" and value == "0" and self.peek(1)[0] in ("end", ")"):
            self.take()
            return EMPTY_TREE
        parts = [self.term()]
        while self.peek()[0] == "+":
            self.take()
            parts.append(self.term())
        return FiniteTree(parts)

    def term(self) -> tuple[str, FiniteTree]:
        kind, value, col = self.take()
        if kind != "name":
            what = repr(value) if value else "end of input"
            raise FormatError(f"expected an action, found {what}", column=col + 1)
        if self.peek()[0] == ".":
            self.take()
            return value, self.atom()
        return value, EMPTY_TREE

    def atom(self) -> FiniteTree:
        kind, value, col = self.peek()
        if kind == "(":
            self.take()
            inner = self.tree()
            closing = self.take()
            if closing[0] != ")":
                what = repr(closing[1]) if closing[1] else "end of input"
                raise FormatError(f"expected ')', found {what}",
                                  column=closing[2] + 1)
            return inner
        if kind != "name":
            what = repr(value) if value else "end of input"
            raise FormatError(f"expected an action or '(', found {what}",
                              column=col + 1)
        self.take()
        if value == "0" and self.peek()[0] != ".":
            return EMPTY_TREE
        if self.peek()[0] == ".":
            self.take()
            return FiniteTree([(value, self.atom())])
        return FiniteTree([(value, EMPTY_TREE)])


def parse_tree(text: str) -> FiniteTree:
    """Parse a tree term; see the module docstring for the grammar."""
    parser = _TermParser(_tokenize_term(text))
    result = parser.tree()
    kind, value, col = parser.peek()
    if kind != "end":
        raise FormatError(f"trailing input starting at {value!r}", column=col + 1)
    return result


def _tree_on_line(text: str, line: int) -> FiniteTree:
    try:
        return parse_tree(text)
    except FormatError as exc:
        raise exc.at_line(line) from None


# ---------------------------------------------------------------------------
# Metric tables
# ---------------------------------------------------------------------------


def _check_action(word: str, line: int) -> str:
    if not ACTION_RE.match(word):
        raise FormatError(f"bad action name {word!r}", line=line)
    return word


def _rat_on_line(text: str, line: int) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise FormatError(f"bad rational literal {text!r}", line=line) from None


def _cost_on_line(text: str, line: int) -> Cost:
    value = _rat_on_line(text, line)
    try:
        return Cost(value)
    except ValueError as exc:
        raise FormatError(str(exc), line=line) from None


class _MetricAcc:
    """Accumulates metric lines; shared by the standalone and embedded forms."""

    def __init__(self) -> None:
        self.actions: set[str] = set()
        self.chosen: dict[tuple[str, str], tuple[Fraction, int]] = {}

    def add_actions(self, words: list[str], line: int) -> None:
        if not words:
            raise FormatError("actions line names no actions", line=line)
        for w in words:
            self.actions.add(_check_action(w, line))

    def add_entry(self, a: str, b: str, cost_text: str, line: int) -> None:
        _check_action(a, line)
        _check_action(b, line)
        value = _rat_on_line(cost_text, line)
        if value < 0:
            raise FormatError("distances cannot be negative", line=line)
        self.actions.update((a, b))
        if a == b:
            if value != 0:
                raise FormatError(f"self-distance of {a!r} must be 0", line=line)
            return
        key = (min(a, b), max(a, b))
        if key in self.chosen and self.chosen[key][0] != value:
            other = self.chosen[key][1]
            raise FormatError(
                f"distance for {key[0]} {key[1]} conflicts with line {other}",
                line=line)
        self.chosen.setdefault(key, (value, line))

    def build(self) -> ActionDomain:
        entries = [(a, b, v) for (a, b), (v, _) in sorted(self.chosen.items())]
        try:
            return ActionDomain.build(sorted(self.actions), entries)
        except DomainError as exc:
            raise FormatError(str(exc)) from exc


def parse_metric(text: str) -> ActionDomain:
    """Parse distance lines 'a b 3/2'; unlisted pairs are infinitely apart."""
    acc = _MetricAcc()
    for no, body in _content_lines(text):
        words = body.split()
        if words[0] == "actions":
            acc.add_actions(words[1:], no)
        elif len(words) == 3:
            acc.add_entry(words[0], words[1], words[2], no)
        else:
            raise FormatError("expected 'a b cost' or 'actions ...'", line=no)
    return acc.build()


def format_metric(dom: ActionDomain) -> str:
    entries = dom.entries()
    mentioned = {a for e in entries for a in e[:2]}
    lines = []
    silent = [a for a in dom.actions if a not in mentioned]
    if silent:
        lines.append("actions " + " ".join(silent))
    for a, b, value in entries:
        lines.append(f"{a} {b} {_format_rat(value)}")
    return "\n".join(lines) + ("\n" if lines else "")


# ---------------------------------------------------------------------------
# LTS descriptions
# ---------------------------------------------------------------------------

_ARROW = re.compile(r"^-([A-Za-z0-9_]+)->$")


def _parse_lts_lines(lines: list[tuple[int, str]], name: str) -> RegularTree:
    root: Optional[str] = None
    root_line = 0
    order: list[str] = []
    succ: dict[str, list[tuple[str, str]]] = {}

    def note(state: str) -> None:
        if state not in succ:
            order.append(state)
            succ[state] = []

    for no, body in lines:
        words = body.split()
        if words[0] == "root":
            if len(words) != 2:
                raise FormatError("root line takes exactly one state", line=no)
            if root is not None:
                raise FormatError(f"root already set on line {root_line}",
                                  line=no)
            root = _check_action(words[1], no)
            root_line = no
            note(root)
            continue
        if len(words) != 3:
            raise FormatError("expected 'state -action-> state' or 'root state'",
                              line=no)
        src, arrow, tgt = words
        m = _ARROW.match(arrow)
        if m is None:
            raise FormatError(f"bad arrow {arrow!r}", line=no)
        _check_action(src, no)
        _check_action(tgt, no)
        note(src)
        note(tgt)
        succ[src].append((m.group(1), tgt))
    if root is None:
        raise FormatError("missing 'root' line"
                          + (f" (by line {lines[-1][0]})" if lines else ""))
    return RegularTree(order, {s: tuple(succ[s]) for s in order}, root, name)


def parse_lts(text: str, name: str = "") -> RegularTree:
    """Parse 'state -action-> state' lines plus a 'root state' line."""
    return _parse_lts_lines(_content_lines(text), name)


def format_lts(tree: RegularTree) -> str:
    names = _state_names(tree)
    lines = [f"root {names[tree.root]}"]
    for state in tree.states:
        for action, target in tree.succ[state]:
            lines.append(f"{names[state]} -{action}-> {names[target]}")
    return "\n".join(lines) + "\n"


def _state_names(tree: RegularTree) -> dict:
    friendly = all(isinstance(s, str) and ACTION_RE.match(s)
                   for s in tree.states)
    if friendly:
        return {s: s for s in tree.states}
    return {s: f"s{i}" for i, s in enumerate(tree.states)}


# ---------------------------------------------------------------------------
# Step sequences
# ---------------------------------------------------------------------------


def _split_at_path(rest: list[str], line: int) -> tuple[str, list[str]]:
    """Split '@0.1 a b' or '@ 0.1 a b' into the path text and the arguments."""
    if not rest or not rest[0].startswith("@"):
        raise FormatError("step needs an @path", line=line)
    if rest[0] == "@":
        if len(rest) < 2:
            raise FormatError("step needs an @path", line=line)
        return rest[1], rest[2:]
    return rest[0][1:], rest[1:]


def _parse_path(text: str, line: int) -> list[int]:
    parts = text.split(".")
    try:
        path = [int(p) for p in parts]
    except ValueError:
        raise FormatError(f"bad @path {text!r}", line=line) from None
    if any(p < 0 for p in path):
        raise FormatError(f"bad @path {text!r}", line=line)
    return path


def _int_on_line(text: str, line: int) -> int:
    try:
        return int(text)
    except ValueError:
        raise FormatError(f"expected an integer, found {text!r}", line=line) from None


def _parse_step_line(words: list[str], no: int) -> Step:
    kind = words[0]
    if kind not in ("relabel", "dup", "drop"):
        raise FormatError(f"unknown step kind {kind!r}", line=no)
    path_text, args = _split_at_path(words[1:], no)
    path = _parse_path(path_text, no)
    position, subject = tuple(path[:-1]), path[-1]
    try:
        if kind == "relabel":
            if len(args) != 3:
                raise FormatError("relabel takes: @path old new cost", line=no)
            old = _check_action(args[0], no)
            new = _check_action(args[1], no)
            return Step("relabel", position, subject, old_action=old,
                        new_action=new, cost=_cost_on_line(args[2], no))
        if kind == "dup":
            if args:
                raise FormatError("dup takes only an @path", line=no)
            return Step("dup", position, subject)
        if len(args) != 1:
            raise FormatError("drop takes: @path partner", line=no)
        return Step("drop", position, subject,
                    partner=_int_on_line(args[0], no))
    except ValueError as exc:
        raise FormatError(str(exc), line=no) from None


def _parse_alpha(text: str, line: int) -> Alpha:
    try:
        return Alpha.parse(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise FormatError(str(exc), line=line) from None


def parse_sequence(text: str, *, alpha: Optional[Alpha] = None,
                   source: Optional[FiniteTree] = None) -> StepSequence:
    """Parse a step-sequence file.

    The file's own 'alpha' and 'source' headers may be replaced by the
    keyword arguments (as the CLI does from its flags); when both are
    present they must agree.
    """
    file_alpha: Optional[Alpha] = None
    file_source: Optional[FiniteTree] = None
    steps: list[Step] = []
    for no, body in _content_lines(text):
        words = body.split()
        if words[0] == "alpha":
            if file_alpha is not None:
                raise FormatError("alpha given twice", line=no)
            if len(words) != 2:
                raise FormatError("alpha line takes one rational", line=no)
            file_alpha = _parse_alpha(words[1], no)
            if alpha is not None and file_alpha.value != alpha.value:
                raise FormatError("alpha in the file disagrees with the one "
                                  "supplied", line=no)
            continue
        if words[0] == "source":
            if file_source is not None:
                raise FormatError("source given twice", line=no)
            file_source = _tree_on_line(body[len("source"):], no)
            if source is not None and file_source != source:
                raise FormatError("source in the file disagrees with the one "
                                  "supplied", line=no)
            continue
        steps.append(_parse_step_line(words, no))
    alpha = file_alpha or alpha
    source = file_source if file_source is not None else source
    if alpha is None:
        raise FormatError("no alpha: add an 'alpha p/q' line")
    if source is None:
        raise FormatError("no source tree: add a 'source <term>' line")
    return StepSequence(alpha, source, tuple(steps))


def _step_line(step: Step) -> str:
    path = ".".join(str(i) for i in step.position + (step.subject,))
    if step.kind == "relabel":
        return (f"relabel @{path} {step.old_action} {step.new_action} "
                f"{format_cost(step.cost)}")
    if step.kind == "dup":
        return f"dup @{path}"
    return f"drop @{path} {step.partner}"


def format_sequence(seq: StepSequence) -> str:
    lines = [f"alpha {seq.alpha}",
             f"source {format_tree(seq.source)}"]
    lines.extend(_step_line(s) for s in seq.steps)
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Certificates and telescopic bundles
# ---------------------------------------------------------------------------


class _Cursor:
    def __init__(self, lines: list[tuple[int, str]]):
        self.lines = lines
        self.i = 0

    def done(self) -> bool:
        return self.i >= len(self.lines)

    def take(self) -> tuple[int, str]:
        pair = self.lines[self.i]
        self.i += 1
        return pair

    def block(self, opened_at: int) -> list[tuple[int, str]]:
        """Collect lines until the matching 'end'."""
        body = []
        while not self.done():
            no, text = self.take()
            if text.split()[0] == "end":
                if text != "end":
                    raise FormatError("'end' stands alone on its line", line=no)
                return body
            body.append((no, text))
        raise FormatError(f"block opened on line {opened_at} is never closed; "
                          "add 'end'")


def _declare_tree(trees: dict[str, RegularTree], order: list[str],
                  name_word: str, tree: RegularTree, no: int) -> None:
    name = _check_action(name_word, no)
    if name in trees:
        raise FormatError(f"tree {name!r} declared twice", line=no)
    trees[name] = tree
    order.append(name)


def _lookup_tree(trees: dict[str, RegularTree], word: str, no: int) -> RegularTree:
    if word not in trees:
        raise FormatError(f"unknown tree {word!r}", line=no)
    return trees[word]


def _parse_costep_line(words: list[str], no: int) -> CoStep:
    kind = words[0]
    if kind not in ("relabel", "dup", "drop", "co"):
        raise FormatError(f"unknown witness step {kind!r}", line=no)
    path_text, args = _split_at_path(words[1:], no)
    path = _parse_path(path_text, no)
    if len(path) != 1:
        raise FormatError("witness steps act on first-level summands, so the "
                          "@path is a single index", line=no)
    subject = path[0]
    try:
        if kind == "relabel":
            if len(args) != 3:
                raise FormatError("relabel takes: @summand old new cost",
                                  line=no)
            return CoStep("relabel", subject, old_action=_check_action(args[0], no),
                          new_action=_check_action(args[1], no),
                          cost=_cost_on_line(args[2], no))
        if kind == "dup":
            if args:
                raise FormatError("dup takes only an @summand", line=no)
            return CoStep("dup", subject)
        if kind == "drop":
            if len(args) != 1:
                raise FormatError("drop takes: @summand partner", line=no)
            return CoStep("drop", subject, partner=_int_on_line(args[0], no))
        if len(args) != 3 or args[0] != "cite":
            raise FormatError("co takes: @summand cite K cost", line=no)
        return CoStep("co", subject, cite=_int_on_line(args[1], no),
                      cost=_cost_on_line(args[2], no))
    except ValueError as exc:
        raise FormatError(str(exc), line=no) from None


def _preamble_directive(words: list[str], no: int, state: dict) -> bool:
    """Handle directives shared by certificate and bundle files."""
    head = words[0]
    if head == "alpha":
        if state["alpha"] is not None:
            raise FormatError("alpha given twice", line=no)
        if len(words) != 2:
            raise FormatError("alpha line takes one rational", line=no)
        state["alpha"] = _parse_alpha(words[1], no)
        return True
    if head == "actions":
        state["metric"].add_actions(words[1:], no)
        return True
    if head == "metric":
        if len(words) != 4:
            raise FormatError("metric line takes: metric a b cost", line=no)
        state["metric"].add_entry(words[1], words[2], words[3], no)
        return True
    return False


def parse_ccd(text: str) -> CcdCertificate:
    """Parse a certificate file; see the module docstring for the layout."""
    cur = _Cursor(_content_lines(text))
    state = {"alpha": None, "metric": _MetricAcc()}
    trees: dict[str, RegularTree] = {}
    order: list[str] = []
    triples: list[DistanceTriple] = []
    witnesses: list[tuple[CoStep, ...]] = []
    while not cur.done():
        no, body = cur.take()
        words = body.split()
        if _preamble_directive(words, no, state):
            continue
        head = words[0]
        if head == "tree":
            if len(words) < 3:
                raise FormatError("tree line takes: tree NAME <term>", line=no)
            term_text = body.split(None, 2)[2]
            finite = _tree_on_line(term_text, no)
            _declare_tree(trees, order, words[1],
                          RegularTree.from_finite(finite, name=words[1]), no)
        elif head == "lts":
            if len(words) != 2:
                raise FormatError("lts line takes: lts NAME", line=no)
            block = cur.block(no)
            _declare_tree(trees, order, words[1],
                          _parse_lts_lines(block, words[1]), no)
        elif head == "triple":
            if len(words) != 5:
                raise FormatError("triple line takes: triple K LEFT RIGHT BOUND",
                                  line=no)
            index = _int_on_line(words[1], no)
            if index != len(triples):
                raise FormatError(f"triples are numbered consecutively; "
                                  f"expected {len(triples)}", line=no)
            left = _lookup_tree(trees, words[2], no)
            right = _lookup_tree(trees, words[3], no)
            try:
                triple = DistanceTriple(left, right, _cost_on_line(words[4], no))
            except ValueError as exc:
                raise FormatError(str(exc), line=no) from None
            block = cur.block(no)
            witnesses.append(tuple(_parse_costep_line(b.split(), n)
                                   for n, b in block))
            triples.append(triple)
        else:
            raise FormatError(f"unknown directive {head!r}", line=no)
    if state["alpha"] is None:
        raise FormatError("no alpha: add an 'alpha p/q' line")
    if not triples:
        raise FormatError("certificate declares no triples")
    try:
        return CcdCertificate(state["alpha"], state["metric"].build(),
                              tuple(triples), tuple(witnesses))
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def _costep_line(cs: CoStep) -> str:
    if cs.kind == "relabel":
        return (f"relabel @{cs.subject} {cs.old_action} {cs.new_action} "
                f"{format_cost(cs.cost)}")
    if cs.kind == "dup":
        return f"dup @{cs.subject}"
    if cs.kind == "drop":
        return f"drop @{cs.subject} {cs.partner}"
    return f"co @{cs.subject} cite {cs.cite} {format_cost(cs.cost)}"


class _TreePool:
    """Names the distinct trees of a certificate for printing."""

    def __init__(self) -> None:
        self.named: list[tuple[RegularTree, str]] = []

    def name_of(self, tree: RegularTree) -> str:
        for t, n in self.named:
            if t is tree or tree_equal(t, tree):
                return n
        name = f"T{len(self.named)}"
        self.named.append((tree, name))
        return name

    def declarations(self) -> list[str]:
        lines = []
        for tree, name in self.named:
            if tree.is_finite():
                lines.append(f"tree {name} {format_tree(tree.to_finite())}")
            else:
                lines.append(f"lts {name}")
                lines.append(format_lts(tree).rstrip("\n"))
                lines.append("end")
        return lines


def format_ccd(cert: CcdCertificate) -> str:
    head = [f"alpha {cert.alpha}"]
    metric = format_metric(cert.domain).rstrip("\n")
    if metric:
        for line in metric.splitlines():
            head.append(line if line.startswith("actions") else f"metric {line}")
    pool = _TreePool()
    body = []
    for i, (triple, steps) in enumerate(zip(cert.triples, cert.witnesses)):
        body.append(f"triple {i} {pool.name_of(triple.left)} "
                    f"{pool.name_of(triple.right)} {format_cost(triple.bound)}")
        body.extend(_costep_line(cs) for cs in steps)
        body.append("end")
    return "\n".join(head + pool.declarations() + body) + "\n"


def parse_telescopic(text: str) -> TelescopicFamily:
    """Parse a telescopic bundle; see the module docstring for the layout."""
    cur = _Cursor(_content_lines(text))
    state = {"alpha": None, "metric": _MetricAcc()}
    trees: dict[str, RegularTree] = {}
    order: list[str] = []
    endpoints: dict[str, RegularTree] = {}
    stages: list[tuple[int, list[Step]]] = []
    while not cur.done():
        no, body = cur.take()
        words = body.split()
        if _preamble_directive(words, no, state):
            continue
        head = words[0]
        if head == "tree":
            if len(words) < 3:
                raise FormatError("tree line takes: tree NAME <term>", line=no)
            term_text = body.split(None, 2)[2]
            finite = _tree_on_line(term_text, no)
            _declare_tree(trees, order, words[1],
                          RegularTree.from_finite(finite, name=words[1]), no)
        elif head == "lts":
            if len(words) != 2:
                raise FormatError("lts line takes: lts NAME", line=no)
            block = cur.block(no)
            _declare_tree(trees, order, words[1],
                          _parse_lts_lines(block, words[1]), no)
        elif head in ("source", "target"):
            if len(words) != 2:
                raise FormatError(f"{head} line takes a declared tree name",
                                  line=no)
            if head in endpoints:
                raise FormatError(f"{head} given twice", line=no)
            endpoints[head] = _lookup_tree(trees, words[1], no)
        elif head == "stage":
            if len(words) != 2:
                raise FormatError("stage line takes: stage N", line=no)
            n = _int_on_line(words[1], no)
            if n != len(stages) + 1:
                raise FormatError(f"stages are numbered consecutively from 1; "
                                  f"expected {len(stages) + 1}", line=no)
            block = cur.block(no)
            stages.append((no, [_parse_step_line(b.split(), bn)
                                for bn, b in block]))
        else:
            raise FormatError(f"unknown directive {head!r}", line=no)
    if state["alpha"] is None:
        raise FormatError("no alpha: add an 'alpha p/q' line")
    for side in ("source", "target"):
        if side not in endpoints:
            raise FormatError(f"no {side}: add a '{side} NAME' line")
    if not stages:
        raise FormatError("bundle declares no stages")
    alpha = state["alpha"]
    sequences = []
    for depth, (no, steps) in enumerate(stages, start=1):
        try:
            sequences.append(StepSequence(
                alpha, endpoints["source"].unfold_to_depth(depth),
                tuple(steps)))
        except ValueError as exc:
            raise FormatError(str(exc), line=no) from None
    try:
        return TelescopicFamily(alpha, state["metric"].build(),
                                tuple(sequences), endpoints["source"],
                                endpoints["target"])
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def format_telescopic(fam: TelescopicFamily) -> str:
    head = [f"alpha {fam.alpha}"]
    metric = format_metric(fam.domain).rstrip("\n")
    if metric:
        for line in metric.splitlines():
            head.append(line if line.startswith("actions") else f"metric {line}")
    pool = _TreePool()
    src = pool.name_of(fam.source)
    tgt = pool.name_of(fam.target)
    body = [f"source {src}", f"target {tgt}"]
    for n in range(1, fam.horizon + 1):
        body.append(f"stage {n}")
        body.extend(_step_line(s) for s in fam.stage(n).steps)
        body.append("end")
    return "\n".join(head + pool.declarations() + body) + "\n"
