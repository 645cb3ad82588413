"""Plain-text complex matrices: one row per line, whitespace-separated ``re+imj`` entries.

Entries are written with 17 significant digits so a write/read cycle is exact.
Blank lines and lines starting with ``#`` are ignored on reading.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np


def format_complex(z: complex) -> str:
    z = complex(z)
    return f"{z.real:.17g}{z.imag:+.17g}j"


def parse_complex(token: str) -> complex:
    try:
        return complex(token)
    except ValueError:
        raise ValueError(f"not a complex number: {token!r}") from None


def format_matrix(m) -> str:
    m = np.atleast_2d(np.asarray(m, dtype=complex))
    return "".join(" ".join(format_complex(z) for z in row) + "\n" for row in m)


def parse_matrix(text: str, source: str = "<string>") -> np.ndarray:
    rows = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            rows.append([parse_complex(tok) for tok in line.split()])
        except ValueError as exc:
            raise ValueError(f"{source}:{lineno}: {exc}") from None
    if not rows:
        raise ValueError(f"{source}: empty matrix")
    width = len(rows[0])
    for k, row in enumerate(rows):
        if len(row) != width:
            raise ValueError(f"{source}: row {k + 1} has {len(row)} entries, expected {width}")
    return np.array(rows, dtype=complex)


def read_matrix(path) -> np.ndarray:
    path = Path(path)
    return parse_matrix(path.read_text(), str(path))


def write_matrix(path, m) -> None:
    Path(path).write_text(format_matrix(m))
