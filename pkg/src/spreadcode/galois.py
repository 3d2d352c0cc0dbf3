"""Finite-field arithmetic over GF(2^w) and Cauchy-matrix linear algebra.

Field elements are plain ints whose bits are the coefficients of a
polynomial over GF(2).  Addition (= subtraction) is XOR; multiplication
and inversion go through log/antilog tables built once per field width.
Everything here is pure and immutable after construction, so instances
can be shared freely across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

# Primitive polynomials (with the 2^w bit set) for which alpha = 2
# generates the full multiplicative group.  Verified at table build time.
_PRIMITIVE_POLY = {
    8: 0x11D,     # x^8 + x^4 + x^3 + x^2 + 1
    16: 0x1100B,  # x^16 + x^12 + x^3 + x + 1
}


class FieldConfigError(ValueError):
    """A field or matrix cannot be built with the requested parameters."""


class SingularMatrixError(ValueError):
    """A linear system turned out singular.

    For Cauchy submatrices with distinct row/column generators this never
    happens; seeing it means the caller selected overlapping indices or a
    construction invariant was broken upstream.
    """


class GF:
    """GF(2^w) with table-based multiply and invert.

    Use :func:`field` to obtain a cached instance instead of constructing
    one per call site; table construction walks all 2^w - 1 nonzero
    elements.
    """

    def __init__(self, width: int = 16):
        if width not in _PRIMITIVE_POLY:
            raise FieldConfigError(
                f"unsupported field width {width}; supported: {sorted(_PRIMITIVE_POLY)}"
            )
        self.width = width
        self.order = 1 << width
        self.poly = _PRIMITIVE_POLY[width]
        exp = [0] * (2 * self.order)
        log = [0] * self.order
        x = 1
        for i in range(self.order - 1):
            exp[i] = x
            log[x] = i
            x <<= 1
            if x & self.order:
                x ^= self.poly
        if x != 1:
            # alpha = 2 failed to have full order: the polynomial is not primitive
            raise FieldConfigError(f"{self.poly:#x} is not primitive for width {width}")
        # duplicate the cycle so mul() can skip the modulo
        for i in range(self.order - 1, 2 * self.order - 2):
            exp[i] = exp[i - (self.order - 1)]
        self._exp = exp
        self._log = log

    def add(self, a: int, b: int) -> int:
        return a ^ b

    def sub(self, a: int, b: int) -> int:
        return a ^ b

    def mul(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        return self._exp[self._log[a] + self._log[b]]

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("zero has no multiplicative inverse")
        return self._exp[(self.order - 1) - self._log[a]]

    def div(self, a: int, b: int) -> int:
        return self.mul(a, self.inv(b))

    def __repr__(self) -> str:
        return f"GF(2^{self.width})"


@lru_cache(maxsize=None)
def field(width: int = 16) -> GF:
    """Cached GF(2^w) instance for the given width."""
    return GF(width)


@dataclass(frozen=True)
class Matrix:
    """Dense row-major matrix of field elements."""

    rows: int
    cols: int
    entries: tuple[int, ...]

    def __post_init__(self):
        if len(self.entries) != self.rows * self.cols:
            raise FieldConfigError(
                f"entry count {len(self.entries)} != {self.rows}x{self.cols}"
            )

    def entry(self, i: int, j: int) -> int:
        return self.entries[i * self.cols + j]

    def row(self, i: int) -> tuple[int, ...]:
        return self.entries[i * self.cols : (i + 1) * self.cols]

    def submatrix(self, row_idx: Sequence[int], col_idx: Sequence[int]) -> "Matrix":
        ents = tuple(self.entry(i, j) for i in row_idx for j in col_idx)
        return Matrix(len(row_idx), len(col_idx), ents)


def cauchy_matrix(gf: GF, rows: int, cols: int) -> Matrix:
    """Deterministic rows x cols Cauchy matrix over gf.

    Row generators are x_i = i and column generators y_j = rows + j, so all
    generators are pairwise distinct as long as rows + cols <= 2^w.  Entry
    (i, j) is 1 / (x_i + y_j); every square submatrix with distinct row and
    column selections is invertible.
    """
    if rows < 0 or cols < 0:
        raise FieldConfigError("matrix dimensions must be non-negative")
    if rows + cols > gf.order:
        raise FieldConfigError(
            f"need {rows + cols} distinct generators but {gf!r} has only {gf.order} elements"
        )
    ents = tuple(gf.inv(i ^ (rows + j)) for i in range(rows) for j in range(cols))
    return Matrix(rows, cols, ents)


def vec_mat(gf: GF, x: Sequence[int], a: Matrix) -> list[int]:
    """Row-vector product x . A (length = a.cols)."""
    if len(x) != a.rows:
        raise FieldConfigError(f"vector length {len(x)} != rows {a.rows}")
    out = [0] * a.cols
    for r, xv in enumerate(x):
        if xv == 0:
            continue
        base = r * a.cols
        ents = a.entries
        for c in range(a.cols):
            e = ents[base + c]
            if e:
                out[c] ^= gf.mul(xv, e)
    return out


def solve_linear(gf: GF, a: Matrix, b: Sequence[int]) -> list[int]:
    """Solve x . A = b for a square matrix A (row-vector convention).

    Gauss-Jordan elimination on the transposed system.  Raises
    :class:`SingularMatrixError` when no unique solution exists.
    """
    if a.rows != a.cols:
        raise FieldConfigError(f"matrix is {a.rows}x{a.cols}, expected square")
    n = a.rows
    if len(b) != n:
        raise FieldConfigError(f"rhs length {len(b)} != {n}")
    if n == 0:
        return []
    # mat[r] is column r of A, i.e. row r of A^T; solve A^T x^T = b^T
    mat = [[a.entry(i, r) for i in range(n)] for r in range(n)]
    vec = list(b)
    for col in range(n):
        piv = next((r for r in range(col, n) if mat[r][col]), None)
        if piv is None:
            raise SingularMatrixError(f"no pivot in column {col}")
        mat[col], mat[piv] = mat[piv], mat[col]
        vec[col], vec[piv] = vec[piv], vec[col]
        scale = gf.inv(mat[col][col])
        mat[col] = [gf.mul(e, scale) for e in mat[col]]
        vec[col] = gf.mul(vec[col], scale)
        for r in range(n):
            if r != col and mat[r][col]:
                fct = mat[r][col]
                prow = mat[col]
                mat[r] = [e ^ gf.mul(fct, prow[c]) for c, e in enumerate(mat[r])]
                vec[r] ^= gf.mul(fct, vec[col])
    return vec
