"""Document parsing and corpus streaming."""

import hashlib
import json
import tarfile

import pytest

from fixture_corpus import build_fixture
from triplefunnel.corpus import (
    Document,
    DocumentFormat,
    LicenseTag,
    SkipLog,
    load_corpus,
    parse_document,
    read_documents_jsonl,
    write_documents_jsonl,
)
from triplefunnel.errors import MalformedInput

XML = DocumentFormat.ARTICLE_XML
TXT = DocumentFormat.PLAIN_TEXT


def _article(
    title="A",
    paragraphs=("B.",),
    permissions="",
    article_id=None,
    extra_body="",
):
    id_elem = (
        f'<article-id pub-id-type="pmc">{article_id}</article-id>' if article_id else ""
    )
    body = "".join(f"<p>{p}</p>" for p in paragraphs)
    return f"""<article xmlns:xlink="http://www.w3.org/1999/xlink">
      <front><article-meta>
        {id_elem}
        <title-group><article-title>{title}</article-title></title-group>
        {permissions}
        <abstract><p>Abstract text here.</p></abstract>
      </article-meta></front>
      <body><sec><title>S</title>{body}{extra_body}</sec></body>
    </article>""".encode()


# ---------------------------------------------------------------------------
# parse_document


def test_minimal_xml():
    doc = parse_document(_article(), XML, "x.xml")
    assert doc.title == "A"
    assert doc.body == "B."
    assert doc.license is LicenseTag.UNKNOWN


def test_plain_text_passthrough():
    doc = parse_document(b"lung cancer study", TXT, "note.txt")
    assert doc.body == "lung cancer study"
    assert doc.title == ""
    assert doc.id == "note"


def test_markup_stripped_and_whitespace_collapsed():
    raw = _article(
        title="Multi <italic>word</italic>   title",
        paragraphs=("Some  <bold>bold</bold>\n text.", "Second    para."),
    )
    doc = parse_document(raw, XML, "x.xml")
    assert doc.title == "Multi word title"
    assert doc.body == "Some bold text.\nSecond para."
    assert "<" not in doc.body


def test_figures_tables_references_dropped():
    raw = _article(
        paragraphs=("Kept prose.",),
        extra_body=(
            "<fig><caption><p>FIGNOISE</p></caption></fig>"
            "<table-wrap><table><tr><td>TABLENOISE</td></tr></table></table-wrap>"
        ),
    ) .replace(
        b"</body>",
        b"</body><back><ref-list><ref><mixed-citation>REFNOISE"
        b"</mixed-citation></ref></ref-list></back>",
    )
    doc = parse_document(raw, XML, "x.xml")
    for noise in ("FIGNOISE", "TABLENOISE", "REFNOISE"):
        assert noise not in doc.body


def test_inline_citation_markers_dropped():
    raw = _article(paragraphs=("Gefitinib works <xref rid='r1'>[1]</xref> well.",))
    doc = parse_document(raw, XML, "x.xml")
    assert doc.body == "Gefitinib works well."


def test_id_precedence_accession_over_stem():
    doc = parse_document(_article(article_id="PMC424242"), XML, "file_stem.xml")
    assert doc.id == "PMC424242"
    doc2 = parse_document(_article(), XML, "file_stem.xml")
    assert doc2.id == "file_stem"


LICENSE_FIXTURES = [
    (
        '<permissions><license xlink:href='
        '"https://creativecommons.org/publicdomain/zero/1.0/"/></permissions>',
        LicenseTag.CC0,
    ),
    (
        "<permissions><license><license-p>Released under CC0."
        "</license-p></license></permissions>",
        LicenseTag.CC0,
    ),
    (
        '<permissions><license xlink:href='
        '"https://creativecommons.org/licenses/by/4.0/"/></permissions>',
        LicenseTag.CC_BY,
    ),
    (
        '<permissions><license xlink:href='
        '"https://creativecommons.org/licenses/by-nc/2.0/"/></permissions>',
        LicenseTag.CC_BY_NC,
    ),
    (
        "<permissions><license><license-p>All rights reserved."
        "</license-p></license></permissions>",
        LicenseTag.OTHER,
    ),
]


@pytest.mark.parametrize("permissions,expected", LICENSE_FIXTURES)
def test_license_extraction_fixture_set(permissions, expected):
    doc = parse_document(_article(permissions=permissions), XML, "x.xml")
    assert doc.license is expected


def test_license_missing_is_unknown():
    assert parse_document(_article(), XML, "x.xml").license is LicenseTag.UNKNOWN


def test_plain_text_license_markers():
    doc = parse_document(
        b"Shared under https://creativecommons.org/publicdomain/zero/1.0/ terms.\n\nBody.",
        TXT,
        "t.txt",
    )
    assert doc.license is LicenseTag.CC0


def test_malformed_inputs_raise():
    with pytest.raises(MalformedInput):
        parse_document(b"<article><unclosed>", XML, "x.xml")
    with pytest.raises(MalformedInput):
        parse_document(b"\xff\xfe\xff invalid", TXT, "x.txt")
    with pytest.raises(MalformedInput):
        parse_document(b"<not-an-article/>", XML, "x.xml")


def test_abstract_restriction_flag():
    raw = _article(paragraphs=("Body prose.",))
    full = parse_document(raw, XML, "x.xml", sections="body")
    abstract_only = parse_document(raw, XML, "x.xml", sections="abstract")
    assert full.body == "Body prose."
    assert abstract_only.body == "Abstract text here."
    with pytest.raises(ValueError):
        parse_document(raw, XML, "x.xml", sections="everything")


# ---------------------------------------------------------------------------
# load_corpus


def test_empty_directory_empty_stream(tmp_path):
    assert list(load_corpus(tmp_path)) == []


def test_three_files_sorted_order(tmp_path):
    for name in ("c.txt", "a.txt", "b.txt"):
        (tmp_path / name).write_text(f"text of {name}", encoding="utf-8")
    docs = list(load_corpus(tmp_path))
    assert [d.id for d in docs] == ["a", "b", "c"]


def test_missing_root_raises():
    with pytest.raises(OSError):
        list(load_corpus("/nonexistent/corpus/root"))


def test_fixture_corpus_with_malformed_files(tmp_path):
    truth = build_fixture(tmp_path / "corpus", n_filler=170, n_malformed=10)
    skip_log = SkipLog(tmp_path / "skips.jsonl")
    docs = list(load_corpus(tmp_path / "corpus", on_skip=skip_log))
    assert truth.files_total == 200
    assert len(docs) == 190
    assert len(skip_log) == 10
    assert len(docs) + len(skip_log) == truth.files_total
    lines = (tmp_path / "skips.jsonl").read_text(encoding="utf-8").splitlines()
    assert len(lines) == 10
    record = json.loads(lines[0])
    assert set(record) == {"path", "reason"}


def test_determinism_two_runs_identical(tmp_path):
    build_fixture(tmp_path / "corpus", n_filler=30)

    def run_hash():
        h = hashlib.sha256()
        for doc in load_corpus(tmp_path / "corpus"):
            h.update(f"{doc.id}|{doc.title}|{doc.body}|{doc.license.value}".encode())
        return h.hexdigest()

    assert run_hash() == run_hash()


def test_parallel_workers_match_sequential(tmp_path):
    build_fixture(tmp_path / "corpus", n_filler=30)
    sequential = [d.id for d in load_corpus(tmp_path / "corpus", workers=1)]
    parallel = [d.id for d in load_corpus(tmp_path / "corpus", workers=4)]
    assert sequential == parallel


def test_duplicate_ids_skipped(tmp_path):
    (tmp_path / "one.xml").write_bytes(_article(article_id="PMC1"))
    (tmp_path / "two.xml").write_bytes(_article(article_id="PMC1"))
    skips = []
    docs = list(load_corpus(tmp_path, on_skip=lambda p, r: skips.append((p, r))))
    assert len(docs) == 1
    assert len(skips) == 1 and "duplicate" in skips[0][1]


def test_unsupported_extension_skipped(tmp_path):
    (tmp_path / "a.txt").write_text("fine", encoding="utf-8")
    (tmp_path / "b.pdf").write_bytes(b"%PDF-1.4 pretend")
    skips = []
    docs = list(load_corpus(tmp_path, on_skip=lambda p, r: skips.append(r)))
    assert len(docs) == 1
    assert skips == ["unsupported-extension"]


def test_targz_expanded_transparently(tmp_path):
    inner = tmp_path / "staging"
    inner.mkdir()
    (inner / "m1.xml").write_bytes(_article(title="Inside", article_id="PMC9001"))
    (inner / "m2.txt").write_text("plain member", encoding="utf-8")
    archive_path = tmp_path / "corpus" / "bundle.tar.gz"
    archive_path.parent.mkdir()
    with tarfile.open(archive_path, "w:gz") as tar:
        tar.add(inner / "m2.txt", arcname="m2.txt")
        tar.add(inner / "m1.xml", arcname="m1.xml")
    docs = list(load_corpus(tmp_path / "corpus"))
    # members iterate in sorted member-name order regardless of insertion
    assert [d.id for d in docs] == ["PMC9001", "m2"]
    assert docs[0].source_path == "bundle.tar.gz!m1.xml"


def test_documents_jsonl_round_trip(tmp_path):
    docs = [
        Document("PMC1", "T", "line one\nline two", LicenseTag.CC0, "a.xml"),
        Document("note", "", "plain", LicenseTag.UNKNOWN, "note.txt"),
    ]
    path = tmp_path / "docs.jsonl"
    assert write_documents_jsonl(docs, path) == 2
    assert read_documents_jsonl(path) == docs
