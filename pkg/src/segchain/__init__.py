"""Segment blockchain: segmented storage, occupation-based membership,
hash-ranked storage assignment and Merkle proof-of-storage, with an analysis
toolkit for capture probabilities and storage requirements."""

__version__ = "0.1.0"
