"""Monolingual re-estimation of phrase-table features.

Phrase and lexical translation scores are computed from monolingual
embeddings and linear maps between the two vector spaces, instead of
from counts over a parallel corpus.
"""

__version__ = "0.1.0"

from .errors import FormatError, MonoScoreError, OOVError  # noqa: E402,F401
from .vecspace import VectorSpace, cosine, load_vectors, save_vectors  # noqa: E402,F401
