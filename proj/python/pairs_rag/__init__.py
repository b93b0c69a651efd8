"""Retrieval pipeline engine with a parametric-verification gate.

Everything lives in the compiled extension; this package just re-exports it.
Provider interfaces (Embedder, Generator, Reranker) can be subclassed in
Python and passed to run_query/run_batch.
"""

from pairs_rag._core import *  # noqa: F401,F403
from pairs_rag._core import __doc__ as _core_doc

__doc__ = _core_doc
