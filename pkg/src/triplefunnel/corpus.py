"""Corpus ingestion: normalize raw article files into Document records.

Accepts directory trees of ``.xml`` (JATS-style article markup) and ``.txt``
files; ``.tar.gz`` archives are expanded transparently.  Parsing failures
never abort a run: each input file ends up either yielded as a Document or
reported to the skip callback with a reason, and the two counts always add up
to the number of files encountered.
"""

from __future__ import annotations

import enum
import json
import re
import tarfile
import xml.etree.ElementTree as ET
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Iterator

from .errors import MalformedInput


class LicenseTag(enum.Enum):
    CC0 = "CC0"
    CC_BY = "CC_BY"
    CC_BY_NC = "CC_BY_NC"
    OTHER = "OTHER"
    UNKNOWN = "UNKNOWN"


class DocumentFormat(enum.Enum):
    ARTICLE_XML = "ArticleXML"
    PLAIN_TEXT = "PlainText"


@dataclass(frozen=True)
class Document:
    """One normalized corpus article.

    ``body`` is markup-free text: paragraphs joined by single newlines, all
    other whitespace runs collapsed to one space.  Immutable, safe to share
    across threads.
    """

    id: str
    title: str
    body: str
    license: LicenseTag
    source_path: str

    @property
    def text(self) -> str:
        """Title and body together, the unit scored for relevance."""
        return f"{self.title}\n{self.body}" if self.title else self.body


# Containers whose text is dropped entirely during XML parsing: captions,
# tables, reference lists, citation markers, and formula markup all produced
# noise triplets in pilot runs; extraction targets article prose only.
_DROP_TAGS = {
    "fig",
    "fig-group",
    "graphic",
    "inline-graphic",
    "media",
    "table",
    "table-wrap",
    "table-wrap-foot",
    "table-wrap-group",
    "array",
    "supplementary-material",
    "ref-list",
    "xref",
    "disp-formula",
    "inline-formula",
    "tex-math",
    "math",
}

_ID_TYPES = ("pmc", "pmcid", "pmc-uid", "accession")

_WS_RUN = re.compile(r"\s+")


def _local(tag: object) -> str:
    """Element tag without any namespace prefix."""
    if not isinstance(tag, str):
        return ""
    return tag.rsplit("}", 1)[-1]


def _collapse(text: str) -> str:
    return _WS_RUN.sub(" ", text).strip()


def _fallback_id(source_path: str) -> str:
    # "!" separates an archive path from the member path.
    return Path(source_path.rsplit("!", 1)[-1]).stem


def _prune(element: ET.Element) -> None:
    """Remove dropped containers in place, reattaching their tail text."""
    idx = 0
    while idx < len(element):
        child = element[idx]
        if _local(child.tag) in _DROP_TAGS:
            tail = child.tail or ""
            if tail:
                if idx > 0:
                    prev = element[idx - 1]
                    prev.tail = (prev.tail or "") + tail
                else:
                    element.text = (element.text or "") + tail
            element.remove(child)
        else:
            _prune(child)
            idx += 1


def _element_text(element: ET.Element) -> str:
    return _collapse("".join(element.itertext()))


def classify_license_evidence(evidence: str) -> LicenseTag:
    """Map license URIs / statements to a tag.

    UNKNOWN is never returned here: this function runs only when some
    evidence exists, and unrecognized evidence maps to OTHER.
    """
    hay = evidence.lower()
    if "publicdomain/zero" in hay or re.search(r"\bcc0\b", hay):
        return LicenseTag.CC0
    if "by-nc" in hay or re.search(r"\bcc[ -]by[ -]nc\b", hay):
        return LicenseTag.CC_BY_NC
    if "licenses/by/" in hay or re.search(r"\bcc[ -]by\b", hay):
        return LicenseTag.CC_BY
    return LicenseTag.OTHER


def _xml_license(root: ET.Element) -> LicenseTag:
    evidence: list[str] = []
    for elem in root.iter():
        if _local(elem.tag) not in ("license", "license_ref"):
            continue
        for key, value in elem.attrib.items():
            if _local(key) == "href":
                evidence.append(value)
        evidence.append("".join(elem.itertext()))
    joined = " ".join(part for part in evidence if part).strip()
    if not joined:
        return LicenseTag.UNKNOWN
    return classify_license_evidence(joined)


def _text_license(text: str) -> LicenseTag:
    # Plain-text articles rarely carry structured license data; recognize
    # explicit creativecommons URLs or a CC0 token, else leave UNKNOWN.
    match = re.search(r"creativecommons\.org/\S+", text, re.IGNORECASE)
    if match:
        return classify_license_evidence(match.group(0))
    if re.search(r"\bCC0\b", text):
        return LicenseTag.CC0
    return LicenseTag.UNKNOWN


def _xml_article_id(root: ET.Element) -> str:
    for elem in root.iter():
        if _local(elem.tag) != "article-id":
            continue
        if elem.get("pub-id-type", "").lower() in _ID_TYPES:
            text = (elem.text or "").strip()
            if text:
                return text
    return ""


def _parse_article_xml(raw: bytes, source_path: str, sections: str) -> Document:
    try:
        root = ET.fromstring(raw)
    except ET.ParseError as exc:
        raise MalformedInput(f"unparseable XML: {exc}") from exc

    article_id = _xml_article_id(root)
    license_tag = _xml_license(root)

    title = ""
    for elem in root.iter():
        if _local(elem.tag) == "article-title":
            title = _element_text(elem)
            break

    paragraphs: list[str] = []

    def collect_paragraphs(container: ET.Element) -> None:
        _prune(container)
        for elem in container.iter():
            if _local(elem.tag) == "p":
                text = _element_text(elem)
                if text:
                    paragraphs.append(text)

    bodies = [e for e in root.iter() if _local(e.tag) == "body"]
    abstracts = [e for e in root.iter() if _local(e.tag) == "abstract"]
    if sections == "abstract":
        containers = abstracts
    else:
        # Full prose by default; abstract is the fallback for body-less
        # records such as abstract-only deposits.
        containers = bodies if bodies else abstracts
    for container in containers:
        collect_paragraphs(container)
    if not title and not paragraphs:
        raise MalformedInput("no recognizable title or body content")

    return Document(
        id=article_id or _fallback_id(source_path),
        title=title,
        body="\n".join(paragraphs),
        license=license_tag,
        source_path=source_path,
    )


def _parse_plain_text(raw: bytes, source_path: str) -> Document:
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise MalformedInput(f"undecodable bytes: {exc}") from exc
    paragraphs = [
        _collapse(block) for block in re.split(r"\n\s*\n", text) if _collapse(block)
    ]
    return Document(
        id=_fallback_id(source_path),
        title="",
        body="\n".join(paragraphs),
        license=_text_license(text),
        source_path=source_path,
    )


def parse_document(
    raw: bytes,
    format_hint: DocumentFormat,
    source_path: str = "",
    sections: str = "body",
) -> Document:
    """Normalize one raw article into a Document.

    ``source_path`` is provenance only, except that its stem becomes the
    document id when the article carries no accession element.  ``sections``
    is "body" (full prose, the default) or "abstract" (abstracts only).
    Raises MalformedInput for undecodable bytes or unparseable/contentless
    XML; callers are expected to downgrade that to skip-with-log.
    """
    if sections not in ("body", "abstract"):
        raise ValueError(f"sections must be 'body' or 'abstract', got {sections!r}")
    if format_hint is DocumentFormat.ARTICLE_XML:
        return _parse_article_xml(raw, source_path, sections)
    if format_hint is DocumentFormat.PLAIN_TEXT:
        return _parse_plain_text(raw, source_path)
    raise ValueError(f"unsupported format hint: {format_hint!r}")


_FORMAT_BY_SUFFIX = {
    ".xml": DocumentFormat.ARTICLE_XML,
    ".txt": DocumentFormat.PLAIN_TEXT,
}

SkipCallback = Callable[[str, str], None]


class SkipLog:
    """Collects skip records and optionally mirrors them to a JSONL file."""

    def __init__(self, path: str | Path | None = None) -> None:
        self.records: list[dict[str, str]] = []
        self._path = Path(path) if path is not None else None
        if self._path is not None:
            self._path.write_text("", encoding="utf-8")

    def __call__(self, path: str, reason: str) -> None:
        record = {"path": path, "reason": reason}
        self.records.append(record)
        if self._path is not None:
            with open(self._path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, sort_keys=True) + "\n")

    def __len__(self) -> int:
        return len(self.records)


def _iter_work_units(root: Path) -> list[Path]:
    return sorted(p for p in root.rglob("*") if p.is_file())


def _parse_unit(
    path: Path, root: Path, sections: str
) -> list[tuple[str, Document | None, str]]:
    """Parse one file into (virtual path, document-or-None, skip reason) rows.

    Archives contribute one row per member, in sorted member order, so the
    flattened stream stays deterministic regardless of worker count.
    """
    rel = str(path.relative_to(root))
    name = path.name.lower()
    if name.endswith((".tar.gz", ".tgz")):
        rows: list[tuple[str, Document | None, str]] = []
        try:
            with tarfile.open(path, "r:gz") as archive:
                members = sorted(
                    (m for m in archive.getmembers() if m.isfile()),
                    key=lambda m: m.name,
                )
                for member in members:
                    virtual = f"{rel}!{member.name}"
                    fmt = _FORMAT_BY_SUFFIX.get(Path(member.name).suffix.lower())
                    if fmt is None:
                        rows.append((virtual, None, "unsupported-extension"))
                        continue
                    fh = archive.extractfile(member)
                    raw = fh.read() if fh is not None else b""
                    try:
                        rows.append(
                            (virtual, parse_document(raw, fmt, virtual, sections), "")
                        )
                    except MalformedInput as exc:
                        rows.append((virtual, None, str(exc)))
        except (tarfile.TarError, EOFError, OSError) as exc:
            return [(rel, None, f"unreadable archive: {exc}")]
        return rows
    fmt = _FORMAT_BY_SUFFIX.get(path.suffix.lower())
    if fmt is None:
        return [(rel, None, "unsupported-extension")]
    try:
        raw = path.read_bytes()
    except OSError as exc:
        return [(rel, None, f"unreadable file: {exc}")]
    try:
        return [(rel, parse_document(raw, fmt, rel, sections), "")]
    except MalformedInput as exc:
        return [(rel, None, str(exc))]


def load_corpus(
    root: str | Path,
    *,
    sections: str = "body",
    on_skip: SkipCallback | None = None,
    workers: int = 1,
) -> Iterator[Document]:
    """Stream Documents from a directory tree in lexicographic path order.

    Files parse independently (in parallel when ``workers`` > 1) but the
    yielded order is always the sorted-path order, so two runs over the same
    tree produce identical streams.  Per-file failures and duplicate ids are
    skipped via ``on_skip``; an unreadable root raises OSError.
    """
    root = Path(root)
    if not root.exists():
        raise FileNotFoundError(f"corpus root does not exist: {root}")
    if not root.is_dir():
        raise NotADirectoryError(f"corpus root is not a directory: {root}")
    units = _iter_work_units(root)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_unit = list(pool.map(lambda p: _parse_unit(p, root, sections), units))
    else:
        per_unit = [_parse_unit(p, root, sections) for p in units]

    seen_ids: set[str] = set()
    for rows in per_unit:
        for virtual, doc, reason in rows:
            if doc is None:
                if on_skip is not None:
                    on_skip(virtual, reason)
                continue
            if doc.id in seen_ids:
                if on_skip is not None:
                    on_skip(virtual, f"duplicate id: {doc.id}")
                continue
            seen_ids.add(doc.id)
            yield doc


def write_documents_jsonl(docs: Iterable[Document], path: str | Path) -> int:
    """Persist normalized documents, one JSON object per line; returns count."""
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(
                json.dumps(
                    {
                        "id": doc.id,
                        "title": doc.title,
                        "body": doc.body,
                        "license": doc.license.value,
                        "source_path": doc.source_path,
                    },
                    sort_keys=True,
                    ensure_ascii=False,
                )
                + "\n"
            )
            count += 1
    return count


def read_documents_jsonl(path: str | Path) -> list[Document]:
    docs = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            docs.append(
                Document(
                    id=obj["id"],
                    title=obj["title"],
                    body=obj["body"],
                    license=LicenseTag(obj["license"]),
                    source_path=obj["source_path"],
                )
            )
    return docs
