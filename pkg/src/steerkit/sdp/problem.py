"""Block-structured semidefinite programs in SDPA standard form.

Primal::

    minimise    c . x
    subject to  X = sum_i F_i x_i - F_0  is PSD   (x free)

Dual::

    maximise    F_0 . Y
    subject to  F_i . Y = c_i,  Y PSD

All ``F_i`` are real symmetric and block diagonal.  Each block stores only
the matrices of the variables that touch it, which keeps the Schur
complement assembly proportional to the actual coupling.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class Block:
    size: int
    f0: np.ndarray  # (size, size)
    var_idx: np.ndarray  # (p,) int, sorted
    mats: np.ndarray  # (p, size, size)
    label: str = ""


@dataclass
class SdpProblem:
    c: np.ndarray
    blocks: list[Block]
    origin: str = ""
    var_labels: list[str] = field(default_factory=list)

    @property
    def n_vars(self) -> int:
        return int(self.c.size)

    @property
    def block_sizes(self) -> list[int]:
        return [b.size for b in self.blocks]

    @property
    def total_size(self) -> int:
        return sum(self.block_sizes)

    def affine(self, x: np.ndarray) -> list[np.ndarray]:
        """``sum_i F_i x_i`` per block (without ``F_0``)."""
        return [np.tensordot(x[b.var_idx], b.mats, axes=1) for b in self.blocks]

    def adjoint(self, ys: list[np.ndarray]) -> np.ndarray:
        """``(F_i . Y)_i``."""
        out = np.zeros(self.n_vars)
        for b, y in zip(self.blocks, ys):
            np.add.at(out, b.var_idx, np.einsum("pij,ij->p", b.mats, y))
        return out

    def dense_matrix(self, i: int) -> list[np.ndarray]:
        """Blocks of ``F_i`` (``i = 0`` gives ``F_0``)."""
        out = []
        for b in self.blocks:
            if i == 0:
                out.append(b.f0.copy())
                continue
            pos = np.searchsorted(b.var_idx, i - 1)
            if pos < b.var_idx.size and b.var_idx[pos] == i - 1:
                out.append(b.mats[pos].copy())
            else:
                out.append(np.zeros((b.size, b.size)))
        return out

    def validate(self) -> None:
        if self.c.ndim != 1:
            raise ValueError("objective must be a vector")
        for b in self.blocks:
            if b.size < 1:
                raise ValueError("block dimensions must be positive")
            if b.f0.shape != (b.size, b.size) or b.mats.shape != (b.var_idx.size, b.size, b.size):
                raise ValueError(f"block '{b.label}' has inconsistent shapes")
            if not (np.allclose(b.f0, b.f0.T) and np.allclose(b.mats, np.swapaxes(b.mats, 1, 2))):
                raise ValueError(f"block '{b.label}' is not symmetric")
            if b.var_idx.size and (b.var_idx.min() < 0 or b.var_idx.max() >= self.n_vars):
                raise ValueError(f"block '{b.label}' references unknown variables")


class ProblemBuilder:
    """Accumulates ``F_i`` contributions block by block."""

    def __init__(self, n_vars: int, origin: str = ""):
        self.c = np.zeros(n_vars)
        self.origin = origin
        self.var_labels: list[str] = [""] * n_vars
        self._blocks: list[tuple[int, str, np.ndarray, dict[int, np.ndarray]]] = []

    def add_block(self, size: int, label: str = "") -> int:
        self._blocks.append((size, label, np.zeros((size, size)), {}))
        return len(self._blocks) - 1

    def set_constant(self, block: int, f0: np.ndarray) -> None:
        self._blocks[block][2][...] = f0

    def add_term(self, block: int, var: int, mat: np.ndarray) -> None:
        terms = self._blocks[block][3]
        if var in terms:
            terms[var] = terms[var] + mat
        else:
            terms[var] = np.array(mat, dtype=float)

    def build(self) -> SdpProblem:
        blocks = []
        for size, label, f0, terms in self._blocks:
            idx = np.array(sorted(terms), dtype=int)
            mats = np.array([terms[i] for i in idx]).reshape(idx.size, size, size)
            blocks.append(Block(size, f0, idx, mats, label))
        prob = SdpProblem(self.c.copy(), blocks, self.origin, list(self.var_labels))
        prob.validate()
        return prob
