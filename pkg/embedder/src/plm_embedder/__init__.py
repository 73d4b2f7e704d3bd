"""Frozen pretrained-language-model embedding export.

Encodes each comment-reply pair as one sequence, runs the frozen model in
inference mode, and writes the first-position hidden state per example into
the shared embedding-table text format (``dim=<d> count=<n>`` header, then
``id<TAB>f1,f2,...`` rows with float32-exact decimals).
"""

from .export import EmbedJob, ExportError, export_embeddings, read_pairs

__version__ = "0.1.0"
