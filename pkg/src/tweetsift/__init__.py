"""Crisis tweet acquisition and relevance-sifting pipeline.

Subpackages cover the stages end to end: stream ingestion with rate limiting
(:mod:`tweetsift.ingest`), deterministic text normalization
(:mod:`tweetsift.preprocess`), subword skipgram embeddings
(:mod:`tweetsift.embedding`), the uncertainty-sampling labeling loop
(:mod:`tweetsift.active_learning`), the split/curve evaluation harness
(:mod:`tweetsift.eval_harness`), the t-SNE hashtag map
(:mod:`tweetsift.tsne` / :mod:`tweetsift.layout`), and the HTTP facade
(:mod:`tweetsift.service`).
"""

__version__ = "0.1.0"
