"""examforge: data curation pipelines for exam-question SFT corpora.

Subpackages cover the whole path from raw documents to a training-ready
corpus and a held-out benchmark:

- ``corpus``     canonical sample types, validation, JSONL serialization
- ``ingest``     article/image-context/triplet extraction from HTML and markdown
- ``distill``    teacher-model solution campaigns with rejection filtering
- ``syntax``     tagged training-text composition and parsing (Q/M/T/S/A)
- ``mixing``     dataset mixes, holdout splits, masked-completion prep
- ``evalbench``  multiple-choice evaluation harness and leaderboards
- ``review``     human review queue service (journal-backed)
- ``cli``        one subcommand per pipeline stage
"""

__version__ = "0.1.0"
