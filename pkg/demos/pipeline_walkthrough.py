#!/usr/bin/env python3
"""End-to-end walkthrough on a tiny in-memory corpus.

Builds six articles (three about lung cancer, two off-topic, one licensed
restrictively), then walks every pipeline stage by hand: parse, rank,
license-filter, extract, score, threshold, dedup, split.  Run it to watch
the funnel shrink:

    python demos/pipeline_walkthrough.py
"""

import tempfile
from pathlib import Path

from triplefunnel.corpus import DocumentFormat, parse_document
from triplefunnel.dataset import SplitSpec, shuffle_and_split, write_split_csv
from triplefunnel.extraction import NaiveBackend, dedup_triplets, extract_triplets
from triplefunnel.funnel import FunnelCounter
from triplefunnel.licensing import StaticResolver, filter_by_license
from triplefunnel.corpus import LicenseTag
from triplefunnel.nerfilter import filter_scored, score_triplets
from triplefunnel.offline import StubScorer
from triplefunnel.relevance import TermQuery, build_vocabulary, knn_filter

ARTICLE = """<article xmlns:xlink="http://www.w3.org/1999/xlink">
  <front><article-meta>
    <article-id pub-id-type="pmc">{pmc}</article-id>
    <title-group><article-title>{title}</article-title></title-group>
    {license}
  </article-meta></front>
  <body><sec>{paragraphs}</sec></body>
</article>"""

CC0 = ('<permissions><license xlink:href='
       '"https://creativecommons.org/publicdomain/zero/1.0/"/></permissions>')
RESTRICTED = ('<permissions><license><license-p>All rights reserved.'
              '</license-p></license></permissions>')


def make_corpus():
    articles = [
        ("PMC1", "Lung cancer kinase study", CC0,
         ["Gefitinib inhibits EGFR in lung cancer cells.",
          "Cisplatin causes nephrotoxicity."]),
        ("PMC2", "Pulmonary neoplasms overview", CC0,
         ["Osimertinib targets resistant clones, and erlotinib reduces growth."]),
        ("PMC3", "Lung cancer immunotherapy notes", RESTRICTED,
         ["Pembrolizumab blocks PD-1 receptors."]),
        ("PMC4", "Bridge engineering digest", CC0,
         ["Suspension spans need steady anchors."]),
        ("PMC5", "Glacier meltwater report", "",
         ["Mountain ice stores seasonal water."]),
        ("PMC6", "Lung cancer trial summary", CC0,
         ["Carboplatin damages dividing cells."]),
    ]
    docs = []
    for pmc, title, license_block, paragraphs in articles:
        raw = ARTICLE.format(
            pmc=pmc, title=title, license=license_block,
            paragraphs="".join(f"<p>{p}</p>" for p in paragraphs),
        ).encode()
        docs.append(parse_document(raw, DocumentFormat.ARTICLE_XML, f"{pmc}.xml"))
    return docs


def main():
    docs = make_corpus()
    print(f"ingested {len(docs)} documents")

    query = TermQuery(terms=("lung cancer", "pulmonary neoplasms"))
    vocab = build_vocabulary(iter(docs), min_df=1)
    ranked = knn_filter(docs, query, vocab, k=4)
    print("\nrelevance ranking (top 4):")
    for doc_id, score in ranked:
        print(f"  {doc_id}  {score:.4f}")
    by_id = {d.id: d for d in docs}
    relevant = [by_id[doc_id] for doc_id, _ in ranked]

    counter = FunnelCounter()
    licensed = list(
        filter_by_license(relevant, {LicenseTag.CC0}, StaticResolver({}), counter)
    )
    print(f"\nlicense filter kept {counter.kept} of {counter.seen}")

    triplets = []
    for doc in licensed:
        triplets.extend(extract_triplets(doc, NaiveBackend()))
    print(f"\nextracted {len(triplets)} triplets:")
    for t in triplets:
        print(f"  ({t.subject} | {t.relation} | {t.object})   [{t.doc_id} s{t.sentence_index}]")

    scored = score_triplets(triplets, StubScorer())
    kept_counter = FunnelCounter()
    # The stub's hash probabilities are uniform over phrases; a low demo
    # threshold keeps the walkthrough populated.
    kept = list(filter_scored(scored, threshold=0.05, counter=kept_counter))
    print(f"\nentity filter (threshold 0.05) kept {kept_counter.kept} of {kept_counter.seen}")

    unique = dedup_triplets(kept)
    print(f"dedup: {len(kept)} -> {len(unique)}")

    splits = shuffle_and_split(
        unique,
        SplitSpec(train=max(len(unique) - 2, 0), test=1, validation=1, seed=7),
    )
    out_dir = Path(tempfile.mkdtemp(prefix="triplefunnel_demo_"))
    for name, rows in splits.items():
        write_split_csv(rows, out_dir / f"{name}.csv")
    print(f"\nsplits {{train: {len(splits['train'])}, test: {len(splits['test'])}, "
          f"validation: {len(splits['validation'])}}} written to {out_dir}")


if __name__ == "__main__":
    main()
