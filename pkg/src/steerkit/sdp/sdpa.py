"""SDPA sparse text format (``.dat-s``).

Layout::

    * comment lines (start with '*' or '"')
    mDIM
    nBLOCK
    bLOCKsTRUCT
    c_1 ... c_mDIM
    matno blkno i j value      (1-based, upper triangle, matno 0 is F_0)

Entries are written in (matno, blkno, i, j) order with ``repr`` floats so
the text is bit-exact and deterministic.  Comment lines record the origin
label and a one-line description of each block.
"""

from __future__ import annotations

import re

import numpy as np

from ..errors import ParseError
from .problem import Block, SdpProblem

_SPLIT = re.compile(r"[\s,{}()]+")


def export_sdpa(problem: SdpProblem) -> str:
    lines = [
        "* SDPA sparse format; primal: min c.x s.t. sum_i F_i x_i - F_0 PSD",
        "* dual: max F_0.Y s.t. F_i.Y = c_i, Y PSD",
    ]
    if problem.origin:
        lines.append(f"* origin: {problem.origin}")
    for k, b in enumerate(problem.blocks, start=1):
        lines.append(f"* block {k}: size {b.size}" + (f" -- {b.label}" if b.label else ""))
    lines.append(str(problem.n_vars))
    lines.append(str(len(problem.blocks)))
    lines.append(" ".join(str(b.size) for b in problem.blocks))
    lines.append(" ".join(repr(float(v)) for v in problem.c))

    entries: list[tuple[int, int, int, int, float]] = []
    for k, b in enumerate(problem.blocks, start=1):
        iu, ju = np.triu_indices(b.size)
        for i, j in zip(iu, ju):
            if b.f0[i, j] != 0.0:
                entries.append((0, k, i + 1, j + 1, float(b.f0[i, j])))
        for pos, var in enumerate(b.var_idx):
            mat = b.mats[pos]
            for i, j in zip(iu, ju):
                if mat[i, j] != 0.0:
                    entries.append((int(var) + 1, k, i + 1, j + 1, float(mat[i, j])))
    entries.sort(key=lambda e: e[:4])
    lines.extend(f"{a} {b} {i} {j} {v!r}" for a, b, i, j, v in entries)
    return "\n".join(lines) + "\n"


def import_sdpa(text: str) -> SdpProblem:
    origin = ""
    labels: dict[int, str] = {}
    tokens: list[str] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line[0] in "*\"":
            body = line[1:].strip()
            if body.startswith("origin:"):
                origin = body[len("origin:"):].strip()
            m = re.match(r"block (\d+): size \d+ -- (.*)", body)
            if m:
                labels[int(m.group(1))] = m.group(2)
            continue
        tokens.extend(t for t in _SPLIT.split(line) if t)
    try:
        pos = 0
        m = int(tokens[pos]); pos += 1
        nblock = int(tokens[pos]); pos += 1
        sizes = [int(tokens[pos + k]) for k in range(nblock)]
        pos += nblock
        c = np.array([float(tokens[pos + k]) for k in range(m)])
        pos += m
        rest = tokens[pos:]
    except (IndexError, ValueError) as exc:
        raise ParseError(f"malformed SDPA header: {exc}") from exc
    if any(s <= 0 for s in sizes):
        raise ParseError("diagonal (negative-size) blocks are not supported")
    if len(rest) % 5:
        raise ParseError("entry section is not a multiple of 5 fields")

    f0 = [np.zeros((s, s)) for s in sizes]
    terms: list[dict[int, np.ndarray]] = [{} for _ in sizes]
    for e in range(0, len(rest), 5):
        try:
            mat, blk, i, j = (int(t) for t in rest[e:e + 4])
            val = float(rest[e + 4])
        except ValueError as exc:
            raise ParseError(f"bad entry at field {pos + e}: {exc}") from exc
        if not (0 <= mat <= m and 1 <= blk <= nblock):
            raise ParseError(f"entry references matrix {mat}, block {blk}")
        size = sizes[blk - 1]
        if not (1 <= i <= size and 1 <= j <= size):
            raise ParseError(f"entry index ({i}, {j}) outside block {blk}")
        target = f0[blk - 1] if mat == 0 else terms[blk - 1].setdefault(mat - 1, np.zeros((size, size)))
        target[i - 1, j - 1] = val
        target[j - 1, i - 1] = val
    blocks = []
    for k, s in enumerate(sizes):
        idx = np.array(sorted(terms[k]), dtype=int)
        mats = np.array([terms[k][v] for v in idx]).reshape(idx.size, s, s)
        blocks.append(Block(s, f0[k], idx, mats, labels.get(k + 1, "")))
    prob = SdpProblem(c, blocks, origin)
    prob.validate()
    return prob
