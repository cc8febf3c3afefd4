#!/usr/bin/env python3
"""Regenerates tests/fixtures/html/*.tree.txt from html5lib, an HTML5
conformant parser, for every fixture whose construction rules agree with
HTML5. Fixtures listed in DEVIATIONS exercise rules where our tree
construction intentionally differs; their goldens are written by hand
(see docs/tree-construction.md) and are left untouched here.

Two normalizations are applied to the reference tree, both documented
deviations of the rule table:
  * an empty <head> that html5lib synthesizes is dropped (we only create
    head when the input has head content or an explicit <head>);
  * whitespace-only text directly under <html> is dropped.

Usage: python3 tests/fixtures/make_reference_trees.py
"""
import pathlib
import re

import html5lib

DEVIATIONS = {"misnested_formatting"}
HERE = pathlib.Path(__file__).parent / "html"


def quote(s):
    out = []
    for ch in s:
        out.append({"\n": "\\n", "\t": "\\t", "\r": "\\r", '"': '\\"', "\\": "\\\\"}.get(ch, ch))
    return '"' + "".join(out) + '"'


def dump(node, depth, lines, has_head_tag):
    pad = "  " * depth
    kind = node.nodeType
    if kind == node.DOCUMENT_NODE:
        lines.append(pad + "#document")
    elif kind == node.ELEMENT_NODE:
        name = node.tagName
        if name == "head" and not has_head_tag and not node.childNodes and not node.attributes.length:
            return
        attrs = "".join(f" {k}={quote(v)}" for k, v in node.attributes.items())
        lines.append(f"{pad}<{name}{attrs}>")
    elif kind == node.TEXT_NODE:
        parent = node.parentNode
        if parent is not None and getattr(parent, "tagName", None) == "html" and not node.data.strip(" \t\n\r\f"):
            return
        lines.append(pad + quote(node.data))
    elif kind == node.COMMENT_NODE:
        lines.append(f"{pad}<!-- {quote(node.data)} -->")
    else:
        return  # doctype
    for child in node.childNodes:
        dump(child, depth + 1, lines, has_head_tag)


def main():
    for src in sorted(HERE.glob("*.html")):
        if src.stem in DEVIATIONS:
            continue
        raw = src.read_bytes()
        if re.search(rb"<meta[^>]*charset", raw[:1024], re.I):
            doc = html5lib.parse(raw, treebuilder="dom")
        else:
            doc = html5lib.parse(raw.decode("utf-8", errors="replace"), treebuilder="dom")
        doc.normalize()  # merge adjacent text nodes
        lines = []
        dump(doc, 0, lines, re.search(rb"<head[\s>]", raw, re.I) is not None)
        src.with_suffix(".tree.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
        print("wrote", src.with_suffix(".tree.txt").name)


if __name__ == "__main__":
    main()
