"""FAQ retrieval via intent-keyword translation.

Pipeline: ingest an annotated FAQ collection, extract per-group intent
keywords by thresholded TF-IDF, train a seq2seq model to translate questions
into their group's keyword sequence, index the translated collection, and
rank entries against translated queries by averaged word mover's / edit
distance, optionally gated through a learned candidate classifier.
"""

__version__ = "0.1.0"
