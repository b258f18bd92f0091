"""Colored Petri nets for compositional tasks.

A task is a set of primitives, each a serial workflow (entry place, a chain
of transitions, exit place), grouped into pages. Each page closes with a
gate transition that needs the page's control token plus the exit tokens of
every active primitive on the page; firing it hands control to the next page
(or to the ``final`` place after the last page).

Tokens are ``(place, color)`` pairs. Colors are field keys: an active
primitive's entry token carries its key and its transitions only fire on a
token of that color. Passive primitives and control places use uncolored
tokens (color ``None``).

Canonical ids: ``page{p}``, ``gate{p}``, ``final``, ``prim{i}.in``,
``prim{i}.s{j}``, ``prim{i}.out``, ``prim{i}.t{j}``.
"""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from graphlib import CycleError, TopologicalSorter


class StructureError(ValueError):
    """Malformed composition input."""


class ValidityError(ValueError):
    """A net breaks one of the task-net rules."""


class SemanticsError(RuntimeError):
    """Firing a transition that is not enabled."""


FINAL = "final"


@dataclass(frozen=True)
class PrimitiveNet:
    """A serial workflow fragment: ``length`` transitions in a chain."""

    name: str
    active: bool
    field_key: str | None = None
    length: int = 1
    # primitives on the same page with the same share key reuse one entry/exit pair
    share_key: str | None = None

    def __post_init__(self):
        if self.length < 1:
            raise StructureError(f"primitive {self.name!r} needs at least one transition")
        if self.active and not self.field_key:
            raise StructureError(f"active primitive {self.name!r} needs a field key")


@dataclass
class PetriTaskNet:
    places: list
    transitions: list
    # (source, target, color); color is set on transition->place arcs that emit a colored token
    edges: list
    gates: list
    colors: list
    membership: dict  # transition -> primitive index (gates absent)
    active: dict  # primitive index -> bool
    guards: dict  # transition -> required token color
    initial: list  # [(place, color)]
    page_of: dict = field(default_factory=dict)  # primitive index -> page
    field_of: dict = field(default_factory=dict)  # primitive index -> field key
    names: dict = field(default_factory=dict)  # primitive index -> primitive name

    def __post_init__(self):
        self._index()

    def _index(self):
        self.inputs = {t: [] for t in self.transitions}
        self.outputs = {t: [] for t in self.transitions}
        for src, dst, color in self.edges:
            if src in self.inputs:
                self.outputs[src].append((dst, color))
            elif dst in self.inputs:
                self.inputs[dst].append(src)
        self._place_set = set(self.places)

    @property
    def n_pages(self):
        return len(self.gates)

    def initial_marking(self):
        return Marking.of(self.initial)

    def final_marking(self):
        return Marking.of([(FINAL, None)])

    def primitive_transitions(self, i):
        return [t for t in self.transitions if self.membership.get(t) == i]

    def completing_transitions(self):
        """Last transition of every active primitive (the reward-bearing firings)."""
        out = []
        for t in self.transitions:
            i = self.membership.get(t)
            if i is not None and self.active[i] and t.endswith(f".t{self._length(i) - 1}"):
                out.append(t)
        return out

    def _length(self, i):
        return sum(1 for t in self.transitions if self.membership.get(t) == i)

    def has_place(self, place):
        return place in self._place_set

    # -- serialization ---------------------------------------------------------

    def to_dict(self):
        return {
            "places": list(self.places),
            "transitions": list(self.transitions),
            "edges": [[s, d, c] for s, d, c in self.edges],
            "gates": list(self.gates),
            "colors": list(self.colors),
            "membership": {t: self.membership[t] for t in self.transitions if t in self.membership},
            "active": {str(i): self.active[i] for i in sorted(self.active)},
            "guards": {t: self.guards[t] for t in self.transitions if t in self.guards},
            "initial": [[p, c] for p, c in self.initial],
            "page_of": {str(i): self.page_of[i] for i in sorted(self.page_of)},
            "field_of": {str(i): self.field_of[i] for i in sorted(self.field_of)},
            "names": {str(i): self.names[i] for i in sorted(self.names)},
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, d):
        ints = lambda m: {int(k): v for k, v in m.items()}  # noqa: E731
        return cls(
            places=list(d["places"]),
            transitions=list(d["transitions"]),
            edges=[(s, t, c) for s, t, c in d["edges"]],
            gates=list(d["gates"]),
            colors=list(d["colors"]),
            membership=dict(d["membership"]),
            active=ints(d["active"]),
            guards=dict(d["guards"]),
            initial=[(p, c) for p, c in d["initial"]],
            page_of=ints(d.get("page_of", {})),
            field_of=ints(d.get("field_of", {})),
            names=ints(d.get("names", {})),
        )

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


class Marking:
    """Immutable multiset of ``(place, color)`` tokens."""

    __slots__ = ("_tokens", "_key")

    def __init__(self, tokens=None):
        c = Counter()
        if tokens:
            for tok, n in dict(tokens).items():
                if n < 0:
                    raise ValueError("negative token count")
                if n:
                    c[tok] = n
        self._tokens = c
        self._key = tuple(sorted(c.items(), key=lambda kv: (kv[0][0], kv[0][1] or "", kv[1])))

    @classmethod
    def of(cls, tokens):
        return cls(Counter(tokens))

    def count(self, place, color=None, any_color=True):
        if any_color:
            return sum(n for (p, _), n in self._tokens.items() if p == place)
        return self._tokens.get((place, color), 0)

    def tokens(self):
        return dict(self._tokens)

    def places(self):
        return {p for p, _ in self._tokens}

    def total(self):
        return sum(self._tokens.values())

    def __eq__(self, other):
        return isinstance(other, Marking) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __repr__(self):
        return f"Marking({dict(self._key)})"


# -- composition ----------------------------------------------------------------

def compose(primitives, gate_layout):
    """Build a task net from primitives ordered by page.

    ``gate_layout`` lists cumulative page end indices into ``primitives``: page
    ``p`` holds ``primitives[gate_layout[p-1]:gate_layout[p]]``. A page may be
    empty (it then only has its gate). Primitive index ``i`` is the position
    in ``primitives``.
    """
    primitives = list(primitives)
    bounds = list(gate_layout)
    if not bounds:
        raise StructureError("empty page set: at least one page (gate) is required")
    prev = 0
    for b in bounds:
        if not isinstance(b, int) or b < prev or b > len(primitives):
            raise StructureError(f"invalid page boundary {b!r} in {bounds}")
        prev = b
    if bounds[-1] != len(primitives):
        raise ValidityError(f"orphan primitives {list(range(bounds[-1], len(primitives)))} follow the last gate")

    n_pages = len(bounds)
    page_of = {}
    start = 0
    for p, end in enumerate(bounds):
        for i in range(start, end):
            page_of[i] = p
        start = end

    places, transitions, edges = [], [], []
    membership, guards, active, field_of, names = {}, {}, {}, {}, {}
    entry, exit_ = {}, {}
    shared = {}
    for p in range(n_pages):
        places.append(f"page{p}")
    for i, prim in enumerate(primitives):
        active[i] = prim.active
        names[i] = prim.name
        if prim.active:
            field_of[i] = prim.field_key
        key = (page_of[i], prim.share_key) if prim.share_key else None
        if key is not None and key in shared:
            owner = shared[key]
            entry[i], exit_[i] = entry[owner], exit_[owner]
        else:
            entry[i], exit_[i] = f"prim{i}.in", f"prim{i}.out"
            places.append(entry[i])
            places.extend(f"prim{i}.s{j}" for j in range(1, prim.length))
            places.append(exit_[i])
            if key is not None:
                shared[key] = i
        color = prim.field_key if prim.active else None
        chain = [entry[i]] + [f"prim{i}.s{j}" for j in range(1, prim.length)] + [exit_[i]]
        if key is not None and shared[key] != i:
            # a duplicate shares entry and exit but keeps its own inner places
            places.extend(f"prim{i}.s{j}" for j in range(1, prim.length))
        for j in range(prim.length):
            t = f"prim{i}.t{j}"
            transitions.append(t)
            membership[t] = i
            if color is not None:
                guards[t] = color
            edges.append((chain[j], t, None))
            edges.append((t, chain[j + 1], color))
    places.append(FINAL)

    gates = []
    for p in range(n_pages):
        g = f"gate{p}"
        gates.append(g)
        transitions.append(g)
        on_page = [i for i in range(len(primitives)) if page_of[i] == p]
        ins = [f"page{p}"]
        for i in on_page:
            if primitives[i].active and exit_[i] not in ins:
                ins.append(exit_[i])
        for place in ins:
            edges.append((place, g, None))
        if p + 1 < n_pages:
            edges.append((g, f"page{p + 1}", None))
            emitted = set()
            for i in range(len(primitives)):
                if page_of[i] == p + 1 and entry[i] not in emitted:
                    emitted.add(entry[i])
                    edges.append((g, entry[i], primitives[i].field_key if primitives[i].active else None))
        else:
            edges.append((g, FINAL, None))

    initial = [("page0", None)]
    seen = set()
    for i in range(len(primitives)):
        if page_of[i] == 0 and entry[i] not in seen:
            seen.add(entry[i])
            initial.append((entry[i], primitives[i].field_key if primitives[i].active else None))

    colors = sorted({prim.field_key for prim in primitives if prim.active})
    return PetriTaskNet(places, transitions, edges, gates, colors, membership, active, guards,
                        initial, page_of, field_of, names)


# -- firing semantics --------------------------------------------------------------

def _matching_token(net, marking, place, transition):
    guard = net.guards.get(transition)
    toks = sorted((c or "", c) for (p, c), n in marking._tokens.items() if p == place and n > 0)
    for _, c in toks:
        if guard is None or c == guard:
            return (place, c)
    return None


def is_enabled(net, marking, transition):
    return all(_matching_token(net, marking, place, transition) is not None
               for place in net.inputs[transition])


def enabled(net, marking):
    """Set of transitions whose every input place holds a (color-matching) token."""
    return {t for t in net.transitions if net.inputs[t] and is_enabled(net, marking, t)}


def fire(net, marking, transition):
    """Consume one token per input place and emit one per output place."""
    if transition not in net.inputs:
        raise SemanticsError(f"unknown transition {transition!r}")
    if not net.inputs[transition] or not is_enabled(net, marking, transition):
        raise SemanticsError(f"transition {transition!r} is not enabled")
    tokens = Counter(marking._tokens)
    for place in net.inputs[transition]:
        tok = _matching_token(net, Marking(tokens), place, transition)
        tokens[tok] -= 1
        if tokens[tok] == 0:
            del tokens[tok]
    for place, color in net.outputs[transition]:
        if not net.has_place(place):
            raise SemanticsError(f"arc to nonexistent place {place!r}")
        tokens[(place, color)] += 1
    return Marking(tokens)


def is_final(net, marking):
    return marking.count(FINAL) > 0


# -- validation -------------------------------------------------------------------

@dataclass
class ValidationReport:
    errors: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.errors

    def __bool__(self):
        return self.ok


def _graph(net):
    succ = {n: set() for n in list(net.places) + list(net.transitions)}
    for src, dst, _ in net.edges:
        succ.setdefault(src, set()).add(dst)
        succ.setdefault(dst, set())
    return succ


def _reach(succ, starts):
    seen, stack = set(starts), list(starts)
    while stack:
        n = stack.pop()
        for m in succ.get(n, ()):
            if m not in seen:
                seen.add(m)
                stack.append(m)
    return seen


def validate(net):
    """Check the task-net rules; violations go to ``errors``, dangling places to ``warnings``."""
    report = ValidationReport()
    places, transitions = set(net.places), set(net.transitions)
    for src, dst, _ in net.edges:
        if not ((src in places and dst in transitions) or (src in transitions and dst in places)):
            report.errors.append(f"non-bipartite edge {src!r} -> {dst!r}")
    succ = _graph(net)
    try:
        TopologicalSorter(succ).prepare()
    except CycleError as exc:
        report.errors.append(f"cycle through {exc.args[1][0]!r}")
    if not net.gates:
        report.errors.append("no gate")
    initial_places = {p for p, _ in net.initial}
    gate_outputs = {dst for src, dst, _ in net.edges if src in set(net.gates)}
    starts = initial_places | gate_outputs
    for i in sorted(net.active):
        ts = net.primitive_transitions(i)
        if not ts:
            report.errors.append(f"primitive {i} has no transitions")
            continue
        entry = net.inputs[ts[0]][0] if net.inputs[ts[0]] else None
        if entry is None or entry not in starts:
            report.errors.append(f"unreachable from gate: primitive {i}")
        if net.active[i]:
            exit_places = [p for p, _ in net.outputs[ts[-1]]]
            down = _reach(succ, exit_places)
            if not any(g in down for g in net.gates):
                report.errors.append(f"active primitive {i} is not a predecessor of any gate")
    consumed = {src for src, _, _ in net.edges if src in places}
    for p in net.places:
        if p != FINAL and p not in consumed:
            report.warnings.append(f"dangling place {p!r}")
    return report


# -- POMDP view ---------------------------------------------------------------------

class PetriPOMDP:
    """Hidden state = marking; actions = transitions; available actions = enabled ones.

    Completing an active primitive pays its potential ``1/F`` (F = number of
    distinct field keys); duplicates of an already completed field pay nothing.
    Rewards are exact fractions.
    """

    def __init__(self, net, render=None):
        report = validate(net)
        if not report.ok:
            raise ValidityError("refusing an unvalidated net: " + "; ".join(report.errors))
        self.net = net
        self.render = render
        self.actions = list(net.transitions)
        self.n_fields = len(net.colors)
        self._completing = set(net.completing_transitions())
        self.reset()

    def reset(self):
        self.marking = self.net.initial_marking()
        self.done_fields = set()
        return self.observe()

    def observe(self):
        if self.render is not None:
            return self.render(self.net, self.marking)
        return self.marking

    def available_actions(self):
        return sorted(enabled(self.net, self.marking), key=self.actions.index)

    @property
    def is_terminal(self):
        return is_final(self.net, self.marking)

    def potential(self, transition):
        if transition in self._completing:
            key = self.net.guards[transition]
            if key not in self.done_fields:
                return Fraction(1, self.n_fields)
        return Fraction(0)

    def step(self, transition):
        r = self.potential(transition)
        self.marking = fire(self.net, self.marking, transition)
        if transition in self._completing:
            self.done_fields.add(self.net.guards[transition])
        return self.observe(), r, self.is_terminal


def to_pomdp(net, render=None):
    return PetriPOMDP(net, render)
