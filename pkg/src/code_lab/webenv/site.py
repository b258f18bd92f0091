"""Website designs, DOM trees and the renderer that turns one into the other."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

from ..petri import PrimitiveNet, compose
from .catalog import SKIP, VALUES, lookup


# -- designs -----------------------------------------------------------------------

@dataclass(frozen=True)
class Placement:
    primitive: str
    page: int | None = None

    @property
    def is_skip(self):
        return self.primitive == SKIP


@dataclass
class WebsiteDesign:
    """Page count plus an ordered list of placements (SKIP placements allowed)."""

    num_pages: int
    placements: list = field(default_factory=list)

    def __post_init__(self):
        self.placements = [p if isinstance(p, Placement) else Placement(*p) for p in self.placements]

    def check(self, max_pages=None, budget=None):
        """Raise on out-of-range pages, unknown names or an over-long placement list."""
        if self.num_pages < 0 or (max_pages is not None and self.num_pages > max_pages):
            raise ValueError(f"page count {self.num_pages} outside [0, {max_pages}]")
        if budget is not None and len(self.placements) > budget:
            raise ValueError(f"{len(self.placements)} placements exceed budget {budget}")
        for p in self.placements:
            if p.is_skip:
                continue
            lookup(p.primitive)
            if p.page is None or not 0 <= p.page < self.num_pages:
                raise ValueError(f"placement {p.primitive}@{p.page} outside pages [0, {self.num_pages})")

    def real(self):
        return [p for p in self.placements if not p.is_skip]

    def counts(self):
        """(non-SKIP, active, passive) placement counts."""
        real = self.real()
        act = sum(1 for p in real if lookup(p.primitive).active)
        return len(real), act, len(real) - act

    def to_dict(self):
        return {"pages": self.num_pages,
                "placements": [{"primitive": p.primitive, "page": p.page} for p in self.real()]}

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d):
        placements = []
        for p in d.get("placements", []):
            name = p["primitive"]
            placements.append(Placement(name, None if name == SKIP else p.get("page")))
        design = cls(int(d["pages"]), placements)
        design.check()
        return design

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


# -- DOM -----------------------------------------------------------------------------

ACTIONABLE_TAGS = {"input", "select", "button", "a"}


@dataclass
class DomNode:
    tag: str
    attrs: dict = field(default_factory=dict)
    text: str = ""
    children: list = field(default_factory=list)
    ref: int = -1  # element index on its page, assigned in depth-first order

    @property
    def actionable(self):
        return self.tag in ACTIONABLE_TAGS


@dataclass
class DomTree:
    root: DomNode

    def nodes(self):
        """Depth-first (pre-order) list of ``(node, depth)``."""
        out = []
        stack = [(self.root, 0)]
        while stack:
            node, depth = stack.pop()
            out.append((node, depth))
            for child in reversed(node.children):
                stack.append((child, depth + 1))
        return out

    def elements(self):
        return [n for n, _ in self.nodes()]

    def __len__(self):
        return len(self.nodes())

    def to_dict(self):
        def enc(n):
            return {"tag": n.tag, "attrs": dict(sorted(n.attrs.items())), "text": n.text,
                    "children": [enc(c) for c in n.children]}
        return enc(self.root)


@dataclass
class Instruction:
    fields: list  # [(key, value)] in placement order

    @property
    def keys(self):
        return [k for k, _ in self.fields]

    def __len__(self):
        return len(self.fields)

    def index(self, key):
        return self.keys.index(key)


# -- templates ------------------------------------------------------------------------

def _n(tag, text="", children=(), **attrs):
    return DomNode(tag, {k.rstrip("_"): v for k, v in attrs.items()}, text, list(children))


def _template(spec):
    """DOM subtree for one primitive plus the node that takes its field (or None)."""
    t, name, label = spec.template, spec.name, spec.label
    target = None
    if t == "input":
        target = _n("input", type="text", name=spec.field_key, placeholder=label)
        node = _n("div", children=[_n("label", label), target], class_="form-group")
    elif t == "selection":
        target = _n("input", type="checkbox", name=spec.field_key)
        node = _n("div", children=[target, _n("label", label)], class_="checkbox")
    elif t == "multi-selection":
        target = _n("select", name=spec.field_key,
                    children=[_n("option", v) for v in VALUES[spec.field_key][:3]])
        node = _n("div", children=[_n("label", label), target], class_="form-group")
    elif t == "cart":
        target = _n("input", type="text", name=spec.field_key, placeholder=label)
        node = _n("div", children=[_n("span", "Item 1"), _n("span", "Item 2"), target], class_="cart")
    elif t == "button":
        node = _n("button", label, class_=name, type="button")
    elif t == "link":
        node = _n("a", label, class_=name, href="#")
    elif t == "label":
        node = _n("h2", label, class_=name)
    elif t == "navbar":
        node = _n("nav", children=[_n("a", "Home", href="#"), _n("a", "Deals", href="#"),
                                   _n("a", "Account", href="#")], class_=name)
    elif t == "carousel":
        node = _n("div", children=[_n("button", "Prev", class_="prev"), _n("img", alt=label),
                                   _n("button", "Next", class_="next")], class_=name)
    elif t == "deck":
        node = _n("div", children=[_n("div", children=[_n("img", alt="item"), _n("a", "View", href="#")],
                                      class_="card") for _ in range(2)], class_=name)
    elif t == "media":
        node = _n("div", children=[_n("img", alt=label), _n("span", label), _n("a", "Shop now", href="#")],
                  class_=name)
    elif t == "footer":
        node = _n("footer", children=[_n("a", "Contact us", href="#"), _n("a", "About", href="#"),
                                      _n("span", "(c) shop")], class_=name)
    else:  # pragma: no cover - TEMPLATES is closed
        raise ValueError(t)
    node.attrs["data-primitive"] = name
    return node, target


# -- rendering -----------------------------------------------------------------------

@dataclass
class Element:
    """Bookkeeping for an actionable node on a rendered page."""

    ref: int
    kind: str  # "field", "gate" or "passive"
    prim: int | None  # primitive index in the net (None for gates)
    field_key: str | None = None


@dataclass
class Page:
    tree: DomTree
    elements: dict  # ref -> Element
    field_counts: int  # distinct active fields on the page


@dataclass
class RenderedSite:
    pages: list  # [Page]
    instruction: Instruction
    net: object
    design: WebsiteDesign

    @property
    def trees(self):
        return [p.tree for p in self.pages]

    def __iter__(self):
        yield self.trees
        yield self.instruction
        yield self.net


def render(design, rng):
    """Render a design into pages, an instruction and the backing task net.

    SKIPs and empty pages are dropped; every remaining page gets a trailing gate
    button. A design with nothing on it renders as one page holding only the
    gate. A field key that already appeared on an earlier page is rendered again
    but is inert; a repeat on the same page shares the first one's field.
    """
    design.check()
    by_page = {}
    for pl in design.real():
        by_page.setdefault(pl.page, []).append(lookup(pl.primitive))
    page_specs = [by_page[p] for p in sorted(by_page)] or [[]]

    prims, bounds, roles = [], [], []
    seen_keys, fields = set(), []
    for specs in page_specs:
        page_keys = set()
        for spec in specs:
            key = spec.field_key
            if spec.active and (key not in seen_keys or key in page_keys):
                prims.append(PrimitiveNet(spec.name, True, key, share_key=key))
                if key not in page_keys:
                    page_keys.add(key)
                    seen_keys.add(key)
                    fields.append(key)
                roles.append("field")
            else:
                prims.append(PrimitiveNet(spec.name, False))
                roles.append("passive")
        bounds.append(len(prims))
    net = compose(prims, bounds)

    values = [(k, str(rng.choice(VALUES[k]))) for k in fields]
    instruction = Instruction(values)

    pages, start = [], 0
    for p, specs in enumerate(page_specs):
        root = _n("form", id_=f"page{p}")
        elements = {}
        pending = []
        n_fields = len({net.field_of[i] for i in range(start, bounds[p]) if roles[i] == "field"})
        for off, spec in enumerate(specs):
            i = start + off
            node, target = _template(spec)
            root.children.append(node)
            pending.append((node, target, i))
        gate = _n("button", "Submit" if p == len(page_specs) - 1 else "Next", class_="page-gate",
                  type="submit")
        root.children.append(gate)
        tree = DomTree(root)
        for ref, (node, _) in enumerate(tree.nodes()):
            node.ref = ref
            node.attrs["ref"] = str(ref)
        for node, target, i in pending:
            if roles[i] == "field":
                elements[target.ref] = Element(target.ref, "field", i, net.field_of[i])
            else:
                for sub, _ in DomTree(node).nodes():
                    if sub.actionable:
                        elements[sub.ref] = Element(sub.ref, "passive", i)
        elements[gate.ref] = Element(gate.ref, "gate", None)
        pages.append(Page(tree, dict(sorted(elements.items())), n_fields))
        start = bounds[p]
    return RenderedSite(pages, instruction, net, design)


def observation_key(site):
    """Canonical serialization of a rendered site (used for determinism checks)."""
    return json.dumps({"pages": [p.tree.to_dict() for p in site.pages],
                       "instruction": site.instruction.fields,
                       "net": site.net.to_dict()}, sort_keys=True)
