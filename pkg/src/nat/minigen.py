"""Synthetic mini-invoice corpus with exact gold labels.

A controllable generator for layout-tagger experiments: a handful of layout
templates, large value vocabularies so small samples never cover the word
space, label phrases drawn from synonym sets, dates and amounts rendered in
mixed surface formats, and distractor fields (subtotal, tax, due date,
invoice number, addresses) that are confusable with the real entities.
Deterministic given (config, seed); every document validates.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date, timedelta

import numpy as np

from .corpus import Corpus, PROVENANCE_HUMAN
from .docmodel import BBox, Document, EntitySchema, EntitySpan, Token
from .formats import AMOUNT_PATTERNS, DATE_PATTERNS, render_amount, render_date
from .rng import substream

ENTITY_TYPES = (
    "vendor_name",
    "purchase_date",
    "total_billed_amount",
    "item_description",
    "item_price",
)

INVOICE_SCHEMA = EntitySchema("mini_invoice", ENTITY_TYPES)

# Label-phrase synonym groups. The generator samples from these, and the
# default augmentation rule-set substitutes within the same groups.
LABEL_SYNONYMS: dict[str, tuple[str, ...]] = {
    "date": ("Date:", "Dated:", "Issued:", "Purchase Date:"),
    "total": ("Total:", "Tot.", "Amount Due:", "Total Amount:", "Balance Due:"),
    "invoice_no": ("Invoice #", "Inv. No.", "Ref #"),
    "due": ("Due:", "Payable By:", "Due Date:"),
    "subtotal": ("Subtotal:", "Sub-Total:", "Net:"),
    "tax": ("Tax:", "VAT:", "Sales Tax:"),
}

_VENDOR_FIRST = (
    "Acme", "Global", "Summit", "Pioneer", "Vertex", "Cascade", "Orion",
    "Atlas", "Beacon", "Crescent", "Dynamo", "Everest", "Falcon", "Granite",
    "Horizon", "Ironwood", "Juniper", "Keystone", "Lakeside", "Meridian",
    "Northstar", "Oakmont", "Pinnacle", "Quantum", "Redwood", "Sterling",
    "Tidewater", "Union", "Vanguard", "Westfield", "Yellowstone", "Zenith",
)
_VENDOR_SECOND = (
    "Logistics", "Supplies", "Industries", "Trading", "Hardware", "Freight",
    "Materials", "Services", "Wholesale", "Equipment", "Packaging", "Energy",
    "Plastics", "Textiles", "Foods", "Chemicals", "Printing", "Tooling",
    "Builders", "Electric", "Machining", "Paper", "Glassworks", "Timber",
)
_VENDOR_SUFFIX = ("Inc.", "LLC", "Ltd.", "Co.", "Corp.", "GmbH")

_ITEM_ADJ = (
    "steel", "brass", "copper", "rubber", "nylon", "oak", "pine", "matte",
    "gloss", "heavy", "light", "coated", "sealed", "industrial", "premium",
    "standard", "compact", "modular", "thermal", "insulated", "ribbed",
    "galvanized", "anodized", "tempered", "woven", "printed", "recycled",
    "reinforced",
)
_ITEM_NOUN = (
    "bracket", "flange", "gasket", "bearing", "valve", "washer", "panel",
    "cable", "hinge", "coupling", "fastener", "sprocket", "conduit", "rivet",
    "spacer", "bushing", "clamp", "gear", "sleeve", "fitting", "sensor",
    "switch", "filter", "nozzle", "rotor", "shim", "stud", "tube", "pallet",
    "crate", "drum", "spool",
)

_STREET_WORDS = ("Main", "Oak", "Elm", "Park", "Mill", "River", "Hill", "Lake")
_STREET_KIND = ("St.", "Ave.", "Rd.", "Blvd.")
_CITY_WORDS = ("Springfield", "Riverton", "Lakewood", "Fairview", "Georgetown",
               "Clinton", "Salem", "Madison")
_FOOTERS = (
    "Thank you for your business",
    "Payment due within 30 days",
    "All sales are final",
    "Make checks payable to vendor",
    "Questions? Call our billing office",
)

_CHAR_W = 0.0068  # normalized width per character at scale 1


@dataclass(frozen=True)
class MiniInvoiceConfig:
    n_documents: int = 100
    vendor_templates: int = 5
    entity_types: tuple[str, ...] = ENTITY_TYPES
    page_width: float = 612.0
    page_height: float = 792.0
    min_items: int = 1
    max_items: int = 4
    distractor_prob: float = 0.7

    def __post_init__(self):
        if self.n_documents < 0:
            raise ValueError("n_documents must be >= 0")
        if self.vendor_templates < 1:
            raise ValueError("vendor_templates must be >= 1")
        unknown = set(self.entity_types) - set(ENTITY_TYPES)
        if unknown:
            raise ValueError(f"unknown entity types: {sorted(unknown)}")


@dataclass(frozen=True)
class _Template:
    label_x: float
    value_x: float
    item_x: float
    qty_x: float
    price_x: float
    totals_label_x: float
    totals_value_x: float
    scale: float
    date_before_invoice_no: bool
    row_pitch: float


def _template(index: int) -> _Template:
    presets = (
        _Template(0.06, 0.24, 0.08, 0.52, 0.68, 0.55, 0.78, 1.00, False, 0.040),
        _Template(0.10, 0.32, 0.10, 0.58, 0.74, 0.50, 0.74, 0.92, True, 0.036),
        _Template(0.05, 0.20, 0.06, 0.46, 0.62, 0.60, 0.82, 1.08, False, 0.044),
        _Template(0.08, 0.30, 0.12, 0.55, 0.72, 0.45, 0.70, 0.96, True, 0.038),
        _Template(0.12, 0.34, 0.07, 0.50, 0.66, 0.58, 0.80, 1.04, False, 0.042),
    )
    return presets[index % len(presets)]


class _DocBuilder:
    def __init__(self, scale: float):
        self.tokens: list[Token] = []
        self.spans: list[EntitySpan] = []
        self.scale = scale

    def row(self, y: float, cells: list[tuple[float, str, str | None]]) -> None:
        """Lay out (x_start, text, entity_type) cells on one baseline."""
        h = 0.016 * self.scale
        for x, text, etype in sorted(cells, key=lambda c: c[0]):
            words = text.split()
            start = len(self.tokens)
            cx = x
            for w in words:
                width = max(len(w), 1) * _CHAR_W * self.scale
                x1 = min(cx + width, 1.0)
                self.tokens.append(
                    Token(w, BBox(min(cx, x1), y, x1, min(y + h, 1.0)))
                )
                cx = x1 + _CHAR_W * self.scale
            if etype is not None and len(self.tokens) > start:
                self.spans.append(
                    EntitySpan.from_range(etype, start, len(self.tokens))
                )


def _pick(rng: np.random.Generator, options) -> str:
    return options[int(rng.integers(len(options)))]


def _random_date(rng: np.random.Generator) -> date:
    base = date(1988, 1, 1)
    return base + timedelta(days=int(rng.integers(0, 365 * 36)))


def _amount_text(rng: np.random.Generator, value: float) -> str:
    return render_amount(value, _pick(rng, AMOUNT_PATTERNS))


def _build_document(doc_id: str, config: MiniInvoiceConfig, template: _Template,
                    rng: np.random.Generator) -> Document:
    want = set(config.entity_types)
    b = _DocBuilder(template.scale)
    y = 0.05 + float(rng.uniform(0, 0.01))
    pitch = template.row_pitch

    def advance(mult: float = 1.0) -> float:
        nonlocal y
        y += pitch * mult * float(rng.uniform(0.9, 1.1))
        return y

    # vendor header
    n_words = int(rng.integers(1, 3))
    vendor = " ".join(
        [_pick(rng, _VENDOR_FIRST)]
        + ([_pick(rng, _VENDOR_SECOND)] if n_words > 1 else [])
        + [_pick(rng, _VENDOR_SUFFIX)]
    )
    b.row(y, [(template.label_x, vendor,
               "vendor_name" if "vendor_name" in want else None)])

    if rng.random() < config.distractor_prob:
        advance()
        street = f"{int(rng.integers(10, 9900))} {_pick(rng, _STREET_WORDS)} {_pick(rng, _STREET_KIND)}"
        b.row(y, [(template.label_x, street, None)])
        advance()
        b.row(y, [(template.label_x,
                   f"{_pick(rng, _CITY_WORDS)} {int(rng.integers(10000, 99999))}", None)])

    # info block: invoice number (unlabeled) and purchase date
    date_label = _pick(rng, LABEL_SYNONYMS["date"])
    date_text = render_date(_random_date(rng), _pick(rng, DATE_PATTERNS))
    date_cells = [(template.label_x, date_label, None),
                  (template.value_x, date_text,
                   "purchase_date" if "purchase_date" in want else None)]
    inv_no = f"{_pick(rng, LABEL_SYNONYMS['invoice_no'])} {int(rng.integers(10000, 99999))}"
    inv_cells = [(template.label_x, inv_no, None)]
    info_rows = [inv_cells, date_cells]
    if template.date_before_invoice_no:
        info_rows.reverse()
    for cells in info_rows:
        advance()
        b.row(y, cells)
    if rng.random() < 0.5:
        advance()
        due = render_date(_random_date(rng), _pick(rng, DATE_PATTERNS))
        b.row(y, [(template.label_x, _pick(rng, LABEL_SYNONYMS["due"]), None),
                  (template.value_x, due, None)])

    # line items
    advance(1.4)
    if rng.random() < 0.8:
        b.row(y, [(template.item_x, "Item", None), (template.qty_x, "Qty", None),
                  (template.price_x, "Price", None)])
        advance()
    n_items = int(rng.integers(config.min_items, config.max_items + 1))
    subtotal = 0.0
    for _ in range(n_items):
        desc = f"{_pick(rng, _ITEM_ADJ)} {_pick(rng, _ITEM_NOUN)}"
        if rng.random() < 0.4:
            desc = f"{_pick(rng, _ITEM_ADJ)} {desc}"
        price = float(np.round(rng.uniform(2.0, 900.0), 2))
        subtotal += price
        cells = [
            (template.item_x, desc,
             "item_description" if "item_description" in want else None),
            (template.qty_x, f"x{int(rng.integers(1, 9))}", None),
            (template.price_x, _amount_text(rng, price),
             "item_price" if "item_price" in want else None),
        ]
        b.row(y, cells)
        advance()

    # totals block
    advance(0.4)
    tax = round(subtotal * float(rng.uniform(0.05, 0.09)), 2)
    if rng.random() < config.distractor_prob:
        b.row(y, [(template.totals_label_x, _pick(rng, LABEL_SYNONYMS["subtotal"]), None),
                  (template.totals_value_x, _amount_text(rng, subtotal), None)])
        advance()
    if rng.random() < config.distractor_prob:
        b.row(y, [(template.totals_label_x, _pick(rng, LABEL_SYNONYMS["tax"]), None),
                  (template.totals_value_x, _amount_text(rng, tax), None)])
        advance()
    b.row(y, [(template.totals_label_x, _pick(rng, LABEL_SYNONYMS["total"]), None),
              (template.totals_value_x, _amount_text(rng, round(subtotal + tax, 2)),
               "total_billed_amount" if "total_billed_amount" in want else None)])

    if rng.random() < 0.8:
        advance(1.5)
        b.row(y, [(template.label_x, _pick(rng, _FOOTERS), None)])

    return Document(
        id=doc_id,
        page_width=config.page_width,
        page_height=config.page_height,
        tokens=tuple(b.tokens),
        gold_spans=tuple(sorted(b.spans, key=lambda s: s.start)),
    )


def generate_mini_invoices(config: MiniInvoiceConfig, seed: int) -> Corpus:
    """Generate ``config.n_documents`` labeled invoices, deterministic in seed."""
    docs = []
    for i in range(config.n_documents):
        rng = substream(seed, "minigen", i)
        template = _template(int(rng.integers(config.vendor_templates)))
        docs.append(_build_document(f"inv{i:05d}", config, template, rng))
    schema = EntitySchema(INVOICE_SCHEMA.doc_type, tuple(config.entity_types))
    return Corpus(schema, tuple(docs), PROVENANCE_HUMAN)
