"""Dense GF(2) matrices with column-operation traces.

Matrices are immutable and stored column-major as Python integer bitmasks
(bit r of column j is the entry in row r).  That keeps the elimination
kernels branch-light for the small per-slot matrices the decoders chew
through, while `to_rows` / `from_rows` give an entrywise view that the rest
of the package and the tests work against.

Payloads ride along as `bytes`; every column operation performed on a
matrix can be replayed verbatim on a list of payloads so that reducing a
linear system and reducing its right-hand side stay in lockstep.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence


def xor_bytes(a: bytes, b: bytes) -> bytes:
    """XOR two equal-length byte strings."""
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} vs {len(b)}")
    return (int.from_bytes(a, "big") ^ int.from_bytes(b, "big")).to_bytes(len(a), "big")


class BitMatrix:
    """An immutable rows x cols matrix over GF(2).

    The empty matrix (``cols == 0``) is a valid value; it is what a slot
    whose transmissions cannot be decoded contributes.
    """

    __slots__ = ("rows", "cols", "_cols")

    def __init__(self, rows: int, cols: int, column_masks: Sequence[int] | None = None):
        if rows < 0 or cols < 0:
            raise ValueError("negative dimension")
        masks = list(column_masks) if column_masks is not None else [0] * cols
        if len(masks) != cols:
            raise ValueError("column mask count does not match cols")
        limit = 1 << rows
        for m in masks:
            if not 0 <= m < limit:
                raise ValueError("column mask has bits outside the row range")
        self.rows = rows
        self.cols = cols
        self._cols = tuple(masks)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]], cols: int | None = None) -> "BitMatrix":
        """Build from a row-major list of 0/1 entries.

        `cols` is only needed to disambiguate a matrix with zero rows.
        """
        nrows = len(rows)
        if nrows == 0:
            return cls(0, cols or 0)
        ncols = len(rows[0])
        masks = [0] * ncols
        for r, row in enumerate(rows):
            if len(row) != ncols:
                raise ValueError("ragged rows")
            for j, v in enumerate(row):
                if v not in (0, 1):
                    raise ValueError("entries must be 0 or 1")
                if v:
                    masks[j] |= 1 << r
        return cls(nrows, ncols, masks)

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        return cls(n, n, [1 << i for i in range(n)])

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "BitMatrix":
        return cls(rows, cols)

    def get(self, r: int, c: int) -> int:
        if not (0 <= r < self.rows and 0 <= c < self.cols):
            raise IndexError("entry out of range")
        return (self._cols[c] >> r) & 1

    def column_mask(self, c: int) -> int:
        return self._cols[c]

    def column_masks(self) -> tuple[int, ...]:
        return self._cols

    def to_rows(self) -> list[list[int]]:
        return [[(m >> r) & 1 for m in self._cols] for r in range(self.rows)]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitMatrix):
            return NotImplemented
        return (self.rows, self.cols, self._cols) == (other.rows, other.cols, other._cols)

    def __hash__(self) -> int:
        return hash((self.rows, self.cols, self._cols))

    def __repr__(self) -> str:
        if self.cols == 0:
            return f"BitMatrix({self.rows}x0)"
        body = "; ".join("".join(str((m >> r) & 1) for m in self._cols) for r in range(self.rows))
        return f"BitMatrix([{body}])"


@dataclass(frozen=True)
class ColumnOpTrace:
    """Ordered elementary column operations recorded during an elimination.

    Ops are ``("swap", c1, c2)`` and ``("add", src, dst)`` where *add* means
    column ``dst`` ^= column ``src``.  A trace recorded while reducing a
    matrix with `ncols` columns can be replayed on any list of `ncols`
    payloads (or on another matrix with that many columns), and replaying it
    on the right-hand side of a linear system keeps the system equivalent.
    """

    ncols: int
    ops: tuple[tuple, ...] = field(default_factory=tuple)

    def apply_to_payloads(self, payloads: Sequence[bytes]) -> list[bytes]:
        if len(payloads) != self.ncols:
            raise ValueError(f"trace was recorded against {self.ncols} columns, got {len(payloads)} payloads")
        out = list(payloads)
        for op in self.ops:
            if op[0] == "swap":
                _, a, b = op
                out[a], out[b] = out[b], out[a]
            else:
                _, src, dst = op
                out[dst] = xor_bytes(out[dst], out[src])
        return out

    def apply_to_matrix(self, matrix: BitMatrix) -> BitMatrix:
        if matrix.cols != self.ncols:
            raise ValueError("column count mismatch")
        masks = list(matrix.column_masks())
        for op in self.ops:
            if op[0] == "swap":
                _, a, b = op
                masks[a], masks[b] = masks[b], masks[a]
            else:
                _, src, dst = op
                masks[dst] ^= masks[src]
        return BitMatrix(matrix.rows, matrix.cols, masks)


def _reduce_against(basis: dict[int, int], mask: int) -> int:
    """Reduce a column against a lowest-set-bit keyed basis; 0 means in-span."""
    while mask:
        low = mask & -mask
        if low not in basis:
            return mask
        mask ^= basis[low]
    return 0


def rank(matrix: BitMatrix) -> int:
    """GF(2) rank (equals row rank by duality)."""
    basis: dict[int, int] = {}
    for m in matrix.column_masks():
        m = _reduce_against(basis, m)
        if m:
            basis[m & -m] = m
    return len(basis)


def rcef(matrix: BitMatrix) -> tuple[BitMatrix, ColumnOpTrace]:
    """Reduced column echelon form, with the trace that produced it.

    Pivots are chosen deterministically: scanning pivot rows top-down, the
    leftmost not-yet-pivot column with a 1 in that row becomes the pivot and
    the row is cleared from every other column.  The result is the unique
    RCEF: each nonzero column leads with a 1 in a distinct pivot row, pivot
    rows strictly increase left to right, no pivot row has a second nonzero
    entry, and zero columns sit at the right end.

    Returns:
        (reduced matrix, trace).  Replaying the trace on the original
        matrix reproduces the reduced matrix exactly.
    """
    masks = list(matrix.column_masks())
    ops: list[tuple] = []
    p = 0
    for r in range(matrix.rows):
        if p == matrix.cols:
            break
        bit = 1 << r
        pivot = next((j for j in range(p, matrix.cols) if masks[j] & bit), None)
        if pivot is None:
            continue
        if pivot != p:
            masks[p], masks[pivot] = masks[pivot], masks[p]
            ops.append(("swap", pivot, p))
        for j in range(matrix.cols):
            if j != p and masks[j] & bit:
                masks[j] ^= masks[p]
                ops.append(("add", p, j))
        p += 1
    reduced = BitMatrix(matrix.rows, matrix.cols, masks)
    return reduced, ColumnOpTrace(matrix.cols, tuple(ops))


def in_colspan(matrix: BitMatrix, vector: Sequence[int] | int) -> bool:
    """Whether a column vector lies in the span of the matrix columns.

    Args:
        matrix: the candidate spanning set.
        vector: sequence of 0/1 entries of length ``matrix.rows`` (or an
            already-packed bitmask).
    """
    if isinstance(vector, int):
        mask = vector
        if not 0 <= mask < (1 << matrix.rows):
            raise ValueError("vector mask outside row range")
    else:
        if len(vector) != matrix.rows:
            raise ValueError("vector length does not match row count")
        mask = 0
        for r, v in enumerate(vector):
            if v not in (0, 1):
                raise ValueError("entries must be 0 or 1")
            if v:
                mask |= 1 << r
    basis: dict[int, int] = {}
    for m in matrix.column_masks():
        m = _reduce_against(basis, m)
        if m:
            basis[m & -m] = m
    return _reduce_against(basis, mask) == 0


def select_rows(matrix: BitMatrix, rows: Iterable[int]) -> BitMatrix:
    """Submatrix keeping the given rows, in the order listed."""
    keep = list(rows)
    for r in keep:
        if not 0 <= r < matrix.rows:
            raise IndexError(f"row {r} out of range")
    masks = []
    for m in matrix.column_masks():
        sub = 0
        for k, r in enumerate(keep):
            if (m >> r) & 1:
                sub |= 1 << k
        masks.append(sub)
    return BitMatrix(len(keep), matrix.cols, masks)


def apply_trace(payloads: Sequence[bytes], trace: ColumnOpTrace) -> list[bytes]:
    """Replay a recorded column-op trace on a payload list."""
    return trace.apply_to_payloads(payloads)


def combine(payloads: Sequence[bytes], matrix: BitMatrix) -> list[bytes]:
    """Multiply a payload row-vector by a matrix: out[j] = XOR of payloads in column j.

    This is how slot outputs are formed from user packets. Requires one
    payload per matrix row; all payloads must share a length.
    """
    if len(payloads) != matrix.rows:
        raise ValueError("payload count does not match row count")
    length = len(payloads[0]) if payloads else 0
    zero = bytes(length)
    out = []
    for m in matrix.column_masks():
        acc = zero
        r = 0
        while m:
            if m & 1:
                acc = xor_bytes(acc, payloads[r])
            m >>= 1
            r += 1
        out.append(acc)
    return out
