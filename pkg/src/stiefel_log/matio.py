"""Matrix files: whitespace-delimited text and MatrixMarket ``array`` format.

The format is picked from the extension (``.mtx`` means MatrixMarket) unless
given explicitly.  Values are written with 17 significant digits so that a
write/read cycle is lossless.
"""

import io
from pathlib import Path

import numpy as np
import scipy.io

__all__ = ["read_matrix", "write_matrix"]


def _fmt_of(path, fmt):
    if fmt is not None:
        if fmt not in ("text", "mtx"):
            raise ValueError(f"unknown matrix format {fmt!r}")
        return fmt
    return "mtx" if Path(path).suffix.lower() == ".mtx" else "text"


def read_matrix(path, fmt=None):
    path = Path(path)
    if _fmt_of(path, fmt) == "mtx":
        A = scipy.io.mmread(str(path))
        if hasattr(A, "toarray"):
            A = A.toarray()
        A = np.asarray(A, dtype=float)
    else:
        A = np.loadtxt(path, dtype=float, ndmin=2)
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{path}: matrix contains non-finite entries")
    return A


def write_matrix(path, A, fmt=None):
    A = np.asarray(A, dtype=float)
    path = Path(path)
    if _fmt_of(path, fmt) == "mtx":
        buf = io.BytesIO()
        scipy.io.mmwrite(buf, A, field="real", precision=17)
        path.write_bytes(buf.getvalue())
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            np.savetxt(fh, A, fmt="%.17g")
