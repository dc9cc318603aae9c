"""Bridge from pretrained masked language models to the coldstart-al core.

Computes per-token negative log-likelihoods (unmasked single-pass scoring,
or one-mask-per-position scoring) and [CLS] sentence embeddings, writing
the core's JSONL interchange formats so real transformer signal can drive
the selection engine in place of the built-in n-gram provider.
"""

__version__ = "0.1.0"

from .export import ExportJob, export_embeddings, export_nll, run_export
from .words import split_words
