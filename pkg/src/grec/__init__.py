"""grec: content-based fashion recommendation toolkit.

Core pieces: an item catalog with pluggable embeddings, frequency-weighted
multi-label losses with soft F1/IOU scaling, exact cosine top-k retrieval,
rating-weighted cart personalization, background-compositing augmentation,
and a weighted human-score evaluation framework. An HTTP service and CLI
tie the pipeline together.
"""

from .errors import DataError

__version__ = "0.1.0"

__all__ = ["DataError", "__version__"]
