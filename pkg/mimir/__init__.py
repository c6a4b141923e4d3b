"""Workflow reconstruction for node-based generative design tools.

Raw session logs go in; de-noised design moves, a provenance DAG,
behavioral tokens, sequence statistics and agent-ready digests come out.
"""

import fs

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "open_fs",
]


def open_fs(path, create=True):
    """Opens an artifact directory (or any PyFilesystem URL) for writing."""
    return fs.open_fs(str(path), writeable=True, create=create)
