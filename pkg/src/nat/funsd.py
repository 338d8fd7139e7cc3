"""FUNSD ingestion: scanned-form annotations to the canonical corpus.

Reads the public dataset layout (an ``annotations/`` directory of per-form
JSON files, with an optional sibling ``images/`` directory used only for page
dimensions). Words are normalized to [0, 1] coordinates, serialized in
reading order, and each form block's label is projected onto the contiguous
runs its words occupy after serialization.
"""

from __future__ import annotations

import json
from pathlib import Path

from .corpus import Corpus, PROVENANCE_HUMAN
from .docmodel import BBox, Document, EntitySchema, EntitySpan, Token, reading_order

FUNSD_SCHEMA = EntitySchema("funsd_form", ("header", "question", "answer", "other"))

_IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".tif", ".tiff")


class FunsdError(ValueError):
    pass


def _page_size(ann_path: Path, blocks: list[dict]) -> tuple[float, float]:
    """Image dimensions when an image sibling exists, else the box extent."""
    images_dir = ann_path.parent.parent / "images"
    for suffix in _IMAGE_SUFFIXES:
        img = images_dir / (ann_path.stem + suffix)
        if img.exists():
            try:
                from PIL import Image

                with Image.open(img) as im:
                    return float(im.size[0]), float(im.size[1])
            except Exception:
                break
    max_x = max((w["box"][2] for b in blocks for w in b.get("words", [])), default=1.0)
    max_y = max((w["box"][3] for b in blocks for w in b.get("words", [])), default=1.0)
    return float(max_x), float(max_y)


def _load_form(ann_path: Path) -> Document:
    try:
        payload = json.loads(ann_path.read_text(encoding="utf-8"))
        blocks = payload["form"]
    except (json.JSONDecodeError, KeyError, OSError) as exc:
        raise FunsdError(f"corrupt annotation file {ann_path}: {exc}") from exc

    width, height = _page_size(ann_path, blocks)
    tokens: list[Token] = []
    owners: list[tuple[int, str]] = []  # (block index, label) per token
    for block_idx, block in enumerate(blocks):
        label = str(block.get("label", "other")).lower()
        if label not in FUNSD_SCHEMA.entity_types:
            raise FunsdError(f"{ann_path}: unknown label {label!r}")
        for word in block.get("words", []):
            text = str(word["text"]).strip()
            if not text:
                continue
            x0, y0, x1, y1 = word["box"]
            bbox = BBox(
                min(max(x0 / width, 0.0), 1.0),
                min(max(y0 / height, 0.0), 1.0),
                min(max(x1 / width, 0.0), 1.0),
                min(max(y1 / height, 0.0), 1.0),
            )
            tokens.append(Token(text, bbox))
            owners.append((block_idx, label))

    order = reading_order(tokens)
    tokens = [tokens[i] for i in order]
    owners = [owners[i] for i in order]

    spans: list[EntitySpan] = []
    run_start = 0
    for i in range(1, len(tokens) + 1):
        if i == len(tokens) or owners[i] != owners[run_start]:
            spans.append(
                EntitySpan.from_range(owners[run_start][1], run_start, i)
            )
            run_start = i
    return Document(
        id=ann_path.stem,
        page_width=width,
        page_height=height,
        tokens=tuple(tokens),
        gold_spans=tuple(spans),
    )


def load_funsd(path: str | Path) -> Corpus:
    """Load a FUNSD partition directory (containing ``annotations/``)."""
    root = Path(path)
    ann_dir = root / "annotations" if (root / "annotations").is_dir() else root
    ann_files = sorted(ann_dir.glob("*.json"))
    if not ann_files:
        raise FunsdError(f"no annotation files found under {root}")
    documents = tuple(_load_form(p) for p in ann_files)
    return Corpus(FUNSD_SCHEMA, documents, PROVENANCE_HUMAN)
