"""Documents, span annotations, measurement groups, and MeasEval-format TSV i/o.

File format
-----------
Annotations travel in a tab-separated file with the header row

    docId	annotSet	annotType	startOffset	endOffset	annotId	text	other

``other`` holds a JSON object of extra fields: span attributes for span
classes (e.g. ``{"unit": "°C", "mods": ["IsRange"]}`` on a Quantity) and
``{"source_id": ..., "target_id": ...}`` endpoints for relation rows.
Relation rows leave the offset and text columns empty.

Offsets are Unicode scalar-value indices into the document text, start
inclusive, end exclusive. Document texts are supplied separately, either
as one UTF-8 ``.txt`` file per doc_id, as a two-column ``docId	text``
TSV (tab/newline escaped as ``\\t``/``\\n``), or as JSONL records
``{"doc_id": ..., "text": ...}``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Mapping

from .errors import GroupError, TsvFormatError, ValidationError

SPAN_CLASSES = (
    "Quantity",
    "Unit",
    "Modifier",
    "MeasuredEntity",
    "MeasuredProperty",
    "Qualifier",
)
RELATION_CLASSES = ("HasQuantity", "HasProperty", "Qualifies")
ANNOTATION_CLASSES = SPAN_CLASSES + RELATION_CLASSES

#: Modifier values documented by the benchmark guidelines. The vocabulary is
#: open: unknown values are preserved verbatim.
KNOWN_MODIFIERS = (
    "IsRange",
    "IsApproximate",
    "IsCount",
    "IsList",
    "IsMean",
    "IsMedian",
    "HasTolerance",
)

TSV_HEADER = (
    "docId",
    "annotSet",
    "annotType",
    "startOffset",
    "endOffset",
    "annotId",
    "text",
    "other",
)


@dataclass(frozen=True)
class Span:
    start: int
    end: int

    def __post_init__(self):
        if not (0 <= self.start < self.end):
            raise ValidationError(f"invalid span [{self.start}, {self.end})")

    def overlaps(self, other: "Span") -> bool:
        return self.start < other.end and other.start < self.end


@dataclass(frozen=True)
class Document:
    doc_id: str
    text: str

    def __post_init__(self):
        if not self.text:
            raise ValidationError(f"document {self.doc_id!r} has empty text")


@dataclass(frozen=True)
class Annotation:
    """One row of the annotation file.

    Span classes carry ``span`` and ``surface``; relation classes carry
    ``source_id``/``target_id`` instead.
    """

    doc_id: str
    annot_set: int
    annot_class: str
    annot_id: str
    span: Span | None = None
    surface: str = ""
    attributes: Mapping[str, object] = field(default_factory=dict)
    source_id: str | None = None
    target_id: str | None = None

    def __post_init__(self):
        if self.annot_class not in ANNOTATION_CLASSES:
            raise ValidationError(
                f"unknown annotation class {self.annot_class!r}", [self.annot_id]
            )
        if self.is_relation:
            if self.span is not None:
                raise ValidationError(
                    "relation annotations carry no span", [self.annot_id]
                )
            if not self.source_id or not self.target_id:
                raise ValidationError(
                    "relation annotations need source_id and target_id",
                    [self.annot_id],
                )
        else:
            if self.source_id or self.target_id:
                raise ValidationError(
                    "span annotations carry no endpoints", [self.annot_id]
                )

    @property
    def is_relation(self) -> bool:
        return self.annot_class in RELATION_CLASSES

    @property
    def unit(self) -> str | None:
        u = self.attributes.get("unit")
        return str(u) if u is not None else None

    @property
    def modifiers(self) -> tuple[str, ...]:
        mods = self.attributes.get("mods") or ()
        if isinstance(mods, str):
            mods = [m for m in (p.strip() for p in mods.split(",")) if m]
        return tuple(str(m) for m in mods)


@dataclass(frozen=True)
class MeasurementGroup:
    """All annotations sharing one annot_set, anchored on its single Quantity."""

    annot_set: int
    quantity: Annotation
    measured_entity: Annotation | None = None
    measured_property: Annotation | None = None
    qualifiers: tuple[Annotation, ...] = ()
    relations: tuple[Annotation, ...] = ()

    @property
    def doc_id(self) -> str:
        return self.quantity.doc_id


@dataclass
class Corpus:
    """Documents plus their annotations, keyed by doc_id.

    Documents are optional: a TSV loaded without texts yields an
    annotation-only corpus, and offset checks are skipped until texts
    are attached.
    """

    documents: dict[str, Document] = field(default_factory=dict)
    annotations: dict[str, list[Annotation]] = field(default_factory=dict)

    @property
    def doc_ids(self) -> list[str]:
        return sorted(set(self.documents) | set(self.annotations))

    def annotations_for(self, doc_id: str) -> list[Annotation]:
        return self.annotations.get(doc_id, [])

    def add(self, annotation: Annotation) -> None:
        self.annotations.setdefault(annotation.doc_id, []).append(annotation)

    def validate(self) -> None:
        """Check offsets, surfaces, and relation endpoints; raise on the first failure."""
        for doc_id, annots in self.annotations.items():
            ids = {a.annot_id for a in annots}
            if len(ids) != len(annots):
                seen: set[str] = set()
                dupes = []
                for a in annots:
                    if a.annot_id in seen:
                        dupes.append(a.annot_id)
                    seen.add(a.annot_id)
                raise ValidationError("duplicate annot_id in document " + doc_id, dupes)
            doc = self.documents.get(doc_id)
            for a in annots:
                if a.is_relation:
                    missing = [e for e in (a.source_id, a.target_id) if e not in ids]
                    if missing:
                        raise ValidationError(
                            f"relation {a.annot_id} in {doc_id} has dangling endpoint(s) "
                            + ", ".join(missing),
                            [a.annot_id],
                        )
                    continue
                if a.span is None:
                    continue
                if doc is not None:
                    if a.span.end > len(doc.text):
                        raise ValidationError(
                            f"span [{a.span.start}, {a.span.end}) outside document "
                            f"{doc_id!r} (length {len(doc.text)})",
                            [a.annot_id],
                        )
                    actual = doc.text[a.span.start : a.span.end]
                    if actual != a.surface:
                        raise ValidationError(
                            f"surface mismatch in {doc_id}: annotation says "
                            f"{a.surface!r}, document says {actual!r}",
                            [a.annot_id],
                        )


def _parse_other(raw: str, line_no: int) -> dict:
    if not raw.strip():
        return {}
    try:
        obj = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise TsvFormatError(f"unparseable other field: {exc.msg}", line_no, "other")
    if not isinstance(obj, dict):
        raise TsvFormatError("other field must be a JSON object", line_no, "other")
    return obj


def _parse_offset(raw: str, line_no: int, column: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise TsvFormatError(f"offset is not an integer: {raw!r}", line_no, column)


def load_measeval_tsv(
    stream: IO[str] | str, documents: Mapping[str, str] | None = None
) -> Corpus:
    """Read an annotation TSV into a Corpus.

    ``documents`` maps doc_id to text; when given, offsets and surfaces are
    checked against it and violations raise ValidationError naming the
    annot_id. Malformed rows raise TsvFormatError naming line and column.
    """
    if isinstance(stream, str):
        lines = stream.splitlines()
    else:
        lines = stream.read().splitlines()
    corpus = Corpus()
    if documents:
        corpus.documents = {d: Document(d, t) for d, t in documents.items()}
    if not lines:
        raise TsvFormatError("missing header row", 1)
    header = tuple(lines[0].rstrip("\n").split("\t"))
    if header != TSV_HEADER:
        raise TsvFormatError(
            f"unexpected header {header!r}, expected {TSV_HEADER!r}", 1
        )
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cols = line.split("\t")
        if len(cols) != len(TSV_HEADER):
            raise TsvFormatError(
                f"expected {len(TSV_HEADER)} columns, got {len(cols)}", line_no
            )
        doc_id, annot_set_raw, annot_class, start_raw, end_raw, annot_id, text, other_raw = cols
        if annot_class not in ANNOTATION_CLASSES:
            raise TsvFormatError(
                f"unknown annotation class {annot_class!r}", line_no, "annotType"
            )
        try:
            annot_set = int(annot_set_raw)
        except ValueError:
            raise TsvFormatError(
                f"annotSet is not an integer: {annot_set_raw!r}", line_no, "annotSet"
            )
        other = _parse_other(other_raw, line_no)
        if annot_class in RELATION_CLASSES:
            source_id = other.pop("source_id", None)
            target_id = other.pop("target_id", None)
            if not source_id or not target_id:
                raise TsvFormatError(
                    "relation row lacks source_id/target_id in other", line_no, "other"
                )
            annotation = Annotation(
                doc_id=doc_id,
                annot_set=annot_set,
                annot_class=annot_class,
                annot_id=annot_id,
                attributes=other,
                source_id=str(source_id),
                target_id=str(target_id),
            )
        else:
            span = Span(
                _parse_offset(start_raw, line_no, "startOffset"),
                _parse_offset(end_raw, line_no, "endOffset"),
            )
            annotation = Annotation(
                doc_id=doc_id,
                annot_set=annot_set,
                annot_class=annot_class,
                annot_id=annot_id,
                span=span,
                surface=text,
                attributes=other,
            )
        corpus.add(annotation)
    corpus.validate()
    return corpus


def _serialize_other(annotation: Annotation) -> str:
    extra = dict(annotation.attributes)
    if annotation.is_relation:
        extra["source_id"] = annotation.source_id
        extra["target_id"] = annotation.target_id
    if not extra:
        return ""
    return json.dumps(extra, ensure_ascii=False, sort_keys=True, separators=(",", ":"))


def write_measeval_tsv(corpus: Corpus) -> str:
    """Serialize a corpus deterministically (sorted by doc_id, annot_set, annot_id).

    The corpus is validated first; an annotation violating its invariants
    refuses to serialize, reporting the annot_id.
    """
    corpus.validate()
    rows = ["\t".join(TSV_HEADER)]
    everything = [a for annots in corpus.annotations.values() for a in annots]
    for a in sorted(everything, key=lambda a: (a.doc_id, a.annot_set, a.annot_id)):
        if "\t" in a.surface or "\n" in a.surface:
            raise ValidationError(
                "surface contains tab or newline, not representable in TSV",
                [a.annot_id],
            )
        if a.is_relation:
            start = end = text = ""
        else:
            start, end = str(a.span.start), str(a.span.end)
            text = a.surface
        rows.append(
            "\t".join(
                (
                    a.doc_id,
                    str(a.annot_set),
                    a.annot_class,
                    start,
                    end,
                    a.annot_id,
                    text,
                    _serialize_other(a),
                )
            )
        )
    return "\n".join(rows) + "\n"


def assemble_groups(
    annotations: Iterable[Annotation],
) -> tuple[list[MeasurementGroup], list[Annotation]]:
    """Partition one document's annotations into measurement groups.

    Returns (groups sorted by annot_set, orphans). Orphans are annotations
    whose annot_set contains no Quantity; they are reported, never dropped
    silently. Two Quantity annotations in one set raise GroupError.
    """
    by_set: dict[int, list[Annotation]] = {}
    for a in annotations:
        by_set.setdefault(a.annot_set, []).append(a)
    groups: list[MeasurementGroup] = []
    orphans: list[Annotation] = []
    for annot_set in sorted(by_set):
        members = by_set[annot_set]
        quantities = [a for a in members if a.annot_class == "Quantity"]
        if len(quantities) > 1:
            raise GroupError(
                f"annot_set {annot_set} holds {len(quantities)} Quantity annotations",
                [q.annot_id for q in quantities],
            )
        if not quantities:
            orphans.extend(members)
            continue
        entity = next((a for a in members if a.annot_class == "MeasuredEntity"), None)
        prop = next((a for a in members if a.annot_class == "MeasuredProperty"), None)
        groups.append(
            MeasurementGroup(
                annot_set=annot_set,
                quantity=quantities[0],
                measured_entity=entity,
                measured_property=prop,
                qualifiers=tuple(a for a in members if a.annot_class == "Qualifier"),
                relations=tuple(a for a in members if a.is_relation),
            )
        )
    return groups, orphans


def _unescape_tsv_text(raw: str) -> str:
    return raw.replace("\\t", "\t").replace("\\n", "\n")


def _escape_tsv_text(raw: str) -> str:
    return raw.replace("\t", "\\t").replace("\n", "\\n")


def load_documents(path: str | Path) -> dict[str, str]:
    """Load document texts from a directory of .txt files, a two-column TSV,
    or a JSONL file of {"doc_id", "text"} records."""
    path = Path(path)
    docs: dict[str, str] = {}
    if path.is_dir():
        for child in sorted(path.glob("*.txt")):
            docs[child.stem] = child.read_text(encoding="utf-8")
        return docs
    payload = path.read_text(encoding="utf-8")
    if path.suffix == ".jsonl":
        for line_no, line in enumerate(payload.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise TsvFormatError(f"bad JSONL record: {exc.msg}", line_no)
            docs[str(record["doc_id"])] = str(record["text"])
        return docs
    for line_no, line in enumerate(payload.splitlines(), start=1):
        if not line.strip():
            continue
        cols = line.split("\t")
        if len(cols) != 2:
            raise TsvFormatError("document TSV needs exactly 2 columns", line_no)
        docs[cols[0]] = _unescape_tsv_text(cols[1])
    return docs


def write_documents_tsv(documents: Mapping[str, str]) -> str:
    return (
        "\n".join(
            f"{doc_id}\t{_escape_tsv_text(text)}" for doc_id, text in sorted(documents.items())
        )
        + "\n"
    )


def with_documents(corpus: Corpus, documents: Mapping[str, str]) -> Corpus:
    """Return a copy of the corpus with document texts attached and re-validated."""
    out = Corpus(
        documents={d: Document(d, t) for d, t in documents.items()},
        annotations={d: list(a) for d, a in corpus.annotations.items()},
    )
    out.validate()
    return out
