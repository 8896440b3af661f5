"""Instruction templates for object and free-space reference queries.

Each (relation, kind) key carries at least three paraphrases with {color}
slots for the marker rectangles (first reference red, second green). The
table can be overridden from a JSON file for experimentation.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import TemplateError
from .relations import RelationType

OBJECT_REF = "object_ref"
SPACE_REF = "space_ref"

TEMPLATE_SCHEMA_VERSION = 1

_GENERIC_PHRASES = {
    RelationType.Left: "to the left of",
    RelationType.Right: "on the right side of",
    RelationType.InFront: "in front of",
    RelationType.Behind: "behind",
    RelationType.Above: "above",
    RelationType.Below: "beneath",
    RelationType.NextTo: "next to",
}

_PART_PHRASES = {
    RelationType.OnLeftPart: "on the left part of",
    RelationType.OnRightPart: "on the right part of",
    RelationType.OnFrontPart: "on the front part of",
    RelationType.OnBackPart: "on the back part of",
}


def default_template_table() -> dict[tuple[str, str], list[str]]:
    table: dict[tuple[str, str], list[str]] = {}

    for rel, phrase in _GENERIC_PHRASES.items():
        table[(rel.name, OBJECT_REF)] = [
            "In the image, an object is framed by a {color} rectangle. Locate a few points "
            f"on an object that is situated {phrase} the framed object.",
            "The image features an object outlined by a {color} rectangle. Locate several "
            f"points on an item that is situated {phrase} the marked item.",
            "There is an object surrounded by a {color} rectangle in the image. Find a few "
            f"points on the object {phrase} the marked object.",
        ]
        table[(rel.name, SPACE_REF)] = [
            "The image features an item encased in a {color} rectangular border. Locate "
            f"several spots within the vacant space situated {phrase} the bordered item.",
            "There is an object surrounded by a {color} rectangle in the image. Find some "
            f"places in the free area {phrase} the marked object.",
            "In the image, an object is framed by a {color} rectangle. Identify a few spots "
            f"in the vacant space {phrase} the framed object.",
        ]

    table[(RelationType.On.name, OBJECT_REF)] = [
        "In the image, an item is framed by a {color} rectangle. Locate a few points on an "
        "object that is resting on top of the framed item.",
        "The image features an item outlined by a {color} rectangle. Locate several points "
        "on an object sitting on the marked item.",
        "There is an item surrounded by a {color} rectangle in the image. Find a few points "
        "on an object placed on the marked item.",
    ]
    table[(RelationType.On.name, SPACE_REF)] = [
        "The image features an item encased in a {color} rectangular border. Locate several "
        "spots within the vacant space on top of the bordered item.",
        "There is an item surrounded by a {color} rectangle in the image. Find some places "
        "in the free area on the marked item.",
        "In the image, an item is framed by a {color} rectangle. Identify a few spots in "
        "the vacant space on top of the framed item.",
    ]

    table[(RelationType.Inside.name, OBJECT_REF)] = [
        "In the image, a container is framed by a {color} rectangle. Locate a few points on "
        "an object that is situated inside the framed container.",
        "The image features a container outlined by a {color} rectangle. Locate several "
        "points on an item that is inside the marked container.",
        "There is a container surrounded by a {color} rectangle in the image. Find a few "
        "points on the object inside the marked container.",
    ]
    table[(RelationType.Inside.name, SPACE_REF)] = [
        "The image depicts a container delineated by a {color} rectangular border. Pinpoint "
        "several spots within the vacant area enclosed by the outlined container.",
        "There is a container surrounded by a {color} rectangle in the image. Find some "
        "places in the free area inside the marked container.",
        "In the image, a container is framed by a {color} rectangle. Identify a few spots "
        "in the vacant space inside the framed container.",
    ]

    table[(RelationType.Between.name, OBJECT_REF)] = [
        "In the image, there is an item framed by a {color} rectangle and another item "
        "encased within a {color2} rectangle. Locate several points upon the item situated "
        "between the two highlighted items.",
        "Two objects are marked in the image, one with a {color} rectangle and one with a "
        "{color2} rectangle. Locate a few points on the object between the two marked items.",
        "The image shows one item outlined in {color} and another outlined in {color2}. "
        "Find several points on the item situated between the marked items.",
    ]
    table[(RelationType.Between.name, SPACE_REF)] = [
        "In the image, there is an item framed by a {color} rectangle and another item "
        "encased within a {color2} rectangle. Find some spots within the vacant space "
        "situated between the marked items.",
        "Two objects are marked in the image, one with a {color} rectangle and one with a "
        "{color2} rectangle. Identify a few places in the free area between the two marked "
        "items.",
        "The image shows one item outlined in {color} and another outlined in {color2}. "
        "Locate several spots in the vacant region between the marked items.",
    ]

    for rel, phrase in _PART_PHRASES.items():
        table[(rel.name, OBJECT_REF)] = [
            "The image showcases an area demarcated by a {color} rectangle. Locate a few "
            f"points on an object resting {phrase} the marked surface.",
            "A surface region is outlined with a {color} rectangle in the image. Find "
            f"several points on an item sitting {phrase} the marked surface.",
            "In the image, a surface is framed by a {color} rectangle. Locate a few points "
            f"on an object {phrase} the outlined surface.",
        ]
        table[(rel.name, SPACE_REF)] = [
            "The image showcases an area demarcated by a {color} rectangle. Locate a few "
            f"points within a vacant area {phrase} the marked surface.",
            "A surface region is outlined with a {color} rectangle in the image. Find some "
            f"spots in the free area {phrase} the marked surface.",
            "In the image, a surface is framed by a {color} rectangle. Identify several "
            f"places within the vacant area {phrase} the outlined surface.",
        ]

    return table


def validate_template_table(table: dict[tuple[str, str], list[str]], min_paraphrases: int = 3) -> None:
    for rel in RelationType:
        for kind in (OBJECT_REF, SPACE_REF):
            entries = table.get((rel.name, kind))
            if not entries or len(entries) < min_paraphrases:
                raise TemplateError(
                    f"template table needs >= {min_paraphrases} paraphrases for ({rel.name}, {kind})"
                )


def load_template_table(path: str | Path) -> dict[tuple[str, str], list[str]]:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("version") != TEMPLATE_SCHEMA_VERSION:
        raise TemplateError("unsupported template table version")
    table = {}
    for key, entries in doc["templates"].items():
        rel_name, kind = key.split("/", 1)
        table[(rel_name, kind)] = list(entries)
    validate_template_table(table)
    return table


def save_template_table(table: dict[tuple[str, str], list[str]], path: str | Path) -> None:
    doc = {
        "version": TEMPLATE_SCHEMA_VERSION,
        "templates": {f"{rel}/{kind}": entries for (rel, kind), entries in sorted(table.items())},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)


def instantiate_template(
    tup,
    kind: str,
    rng: np.random.Generator,
    table: dict[tuple[str, str], list[str]] | None = None,
) -> str:
    """Pick a paraphrase for the tuple's relation and fill the marker slots."""
    table = table if table is not None else default_template_table()
    key = (tup.relation.name, kind)
    entries = table.get(key)
    if not entries:
        raise TemplateError(f"no template registered for ({tup.relation.name}, {kind})")
    text = entries[int(rng.integers(len(entries)))]
    return text.format(color="red", color2="green")
