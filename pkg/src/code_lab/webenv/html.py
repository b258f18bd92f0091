"""Static HTML export of rendered pages (for inspection only)."""
from __future__ import annotations

from html import escape

_VOID = {"input", "img"}


def _node_html(node, depth, out):
    pad = "  " * depth
    attrs = "".join(f' {k}="{escape(str(v))}"' for k, v in sorted(node.attrs.items()))
    if node.tag in _VOID:
        out.append(f"{pad}<{node.tag}{attrs}>")
        return
    if not node.children:
        out.append(f"{pad}<{node.tag}{attrs}>{escape(node.text)}</{node.tag}>")
        return
    out.append(f"{pad}<{node.tag}{attrs}>{escape(node.text)}")
    for child in node.children:
        _node_html(child, depth + 1, out)
    out.append(f"{pad}</{node.tag}>")


def export_html(pages, title="site"):
    """One HTML document holding every page as a section, in page order."""
    out = ["<!DOCTYPE html>", "<html>", "<head>", f"<title>{escape(title)}</title>", "</head>", "<body>"]
    for i, page in enumerate(pages):
        tree = getattr(page, "tree", page)
        out.append(f'<section class="page" data-page="{i}">')
        _node_html(tree.root, 1, out)
        out.append("</section>")
    out += ["</body>", "</html>"]
    return "\n".join(out) + "\n"
