"""Corpus-based term set expansion.

Pipeline: ingest a corpus, extract candidate noun-phrase terms, collapse
surface variants into term groups, train per-context-type embeddings over
(group, context) pairs, then expand a small seed set into a ranked,
certainty-scored semantic class.  The iterative select / expand / validate /
re-expand / save workflow is exposed through a CLI, an HTTP service, and a
web UI.
"""

__version__ = "0.1.0"
