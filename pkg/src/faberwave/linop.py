"""Matrix-free linear operator with a matrix-vector-operation counter."""

from __future__ import annotations

from typing import Callable

import numpy as np


class DiscreteOperator:
    """Callable wrapper around ``v -> H v``.

    ``apply`` may receive a vector of length ``n`` or an ``(n, k)`` block;
    each call counts as one matrix-vector operation (MVO) per column.
    """

    def __init__(self, n: int, matvec: Callable[[np.ndarray], np.ndarray],
                 dtype=float, meta: dict | None = None):
        self.n = int(n)
        self._matvec = matvec
        self.dtype = np.dtype(dtype)
        self.meta = dict(meta or {})
        self.mvo = 0

    @classmethod
    def from_matrix(cls, matrix, meta: dict | None = None) -> "DiscreteOperator":
        mat = matrix
        if mat.shape[0] != mat.shape[1]:
            raise ValueError("operator matrix must be square")
        return cls(mat.shape[0], lambda v: mat @ v, dtype=mat.dtype, meta=meta)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n, self.n)

    def apply(self, v: np.ndarray) -> np.ndarray:
        if v.shape[0] != self.n:
            raise ValueError(f"dimension mismatch: operator size {self.n}, "
                             f"vector size {v.shape[0]}")
        self.mvo += 1 if v.ndim == 1 else v.shape[1]
        return self._matvec(v)

    __call__ = apply

    def reset_counter(self) -> int:
        count, self.mvo = self.mvo, 0
        return count

    def to_dense(self, max_size: int = 6000) -> np.ndarray:
        """Assemble the matrix column by column (does not touch the counter)."""
        if self.n > max_size:
            raise ValueError(f"operator too large to densify ({self.n} > {max_size})")
        eye = np.zeros(self.n, dtype=self.dtype)
        cols = []
        for k in range(self.n):
            eye[k] = 1.0
            cols.append(np.asarray(self._matvec(eye)).copy())
            eye[k] = 0.0
        return np.column_stack(cols)
