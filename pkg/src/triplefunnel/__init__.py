"""triplefunnel: staged (subject, relation, object) knowledge-base construction
from a document corpus, plus a ROUGE / BERTScore / significance-test
evaluation harness for models trained on the result.

Stages (each also a CLI subcommand): ingest -> relevance -> license ->
extract -> ner-filter -> dedup -> split.  Evaluation: eval (ROUGE +
BERTScore), mspt (actual vs. randomized-gold significance), plot.
"""

__version__ = "0.1.0"

from .corpus import Document, LicenseTag, load_corpus, parse_document
from .dataset import SplitSpec, TripleRow, randomize_gold, shuffle_and_split
from .extraction import Triplet, extract_triplets, naive_extract, split_sentences
from .metrics import ScorePair, TokenEmbeddings, bertscore, rouge_l, rouge_n
from .mspt import MsptReport, histogram, kde_curve, run_mspt, welch_t_test
from .nerfilter import ScoredTriplet, filter_scored, score_triplets
from .relevance import TermQuery, cosine_similarity, knn_filter

__all__ = [
    "Document",
    "LicenseTag",
    "MsptReport",
    "ScorePair",
    "ScoredTriplet",
    "SplitSpec",
    "TermQuery",
    "TokenEmbeddings",
    "TripleRow",
    "Triplet",
    "bertscore",
    "cosine_similarity",
    "extract_triplets",
    "filter_scored",
    "histogram",
    "kde_curve",
    "knn_filter",
    "load_corpus",
    "naive_extract",
    "parse_document",
    "randomize_gold",
    "rouge_l",
    "rouge_n",
    "run_mspt",
    "score_triplets",
    "shuffle_and_split",
    "split_sentences",
    "welch_t_test",
]
