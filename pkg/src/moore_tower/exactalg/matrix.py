"""Coefficient rings and immutable exact matrices."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence


@dataclass(frozen=True)
class RingSpec:
    """Z when modulus is 0, otherwise Z/modulus."""

    modulus: int = 0

    def __post_init__(self):
        if self.modulus < 0 or self.modulus == 1:
            raise ValueError(f"bad modulus {self.modulus}")

    @classmethod
    def integers(cls) -> "RingSpec":
        return cls(0)

    @classmethod
    def mod(cls, m: int) -> "RingSpec":
        if m < 2:
            raise ValueError("modulus must be >= 2")
        return cls(m)

    @classmethod
    def parse(cls, text: str) -> "RingSpec":
        text = text.strip()
        if text == "Z":
            return cls(0)
        if text.startswith("Zmod:"):
            try:
                m = int(text[5:])
            except ValueError:
                raise ValueError(f"bad ring {text!r}") from None
            return cls.mod(m)
        raise ValueError(f"bad ring {text!r}; expected Z or Zmod:<m>")

    @property
    def is_integers(self) -> bool:
        return self.modulus == 0

    def reduce(self, x: int) -> int:
        return x % self.modulus if self.modulus else x

    def __str__(self):
        return "Z" if self.modulus == 0 else f"Zmod:{self.modulus}"


ZZ = RingSpec(0)


class ExactMatrix:
    """Dense immutable matrix over a RingSpec.

    Rows are stored as tuples of Python ints; a sparse row view is built on
    demand for products and elimination.
    """

    __slots__ = ("ring", "rows", "cols", "_data", "_sparse", "_hash")

    def __init__(self, ring: RingSpec, rows: int, cols: int, data: Sequence[Sequence[int]]):
        if len(data) != rows or any(len(r) != cols for r in data):
            raise ValueError("matrix shape mismatch")
        m = ring.modulus
        if m:
            self._data = tuple(tuple([x % m for x in r]) for r in data)
        else:
            self._data = tuple(map(tuple, data))
        self.ring = ring
        self.rows = rows
        self.cols = cols
        self._sparse = None
        self._hash = None

    @classmethod
    def _wrap(cls, ring: RingSpec, rows: int, cols: int, data: tuple) -> "ExactMatrix":
        """Trusted constructor: data is already a tuple of reduced int tuples."""
        obj = cls.__new__(cls)
        obj._data = data
        obj.ring = ring
        obj.rows = rows
        obj.cols = cols
        obj._sparse = None
        obj._hash = None
        return obj

    # construction -------------------------------------------------------

    @classmethod
    def from_rows(cls, ring: RingSpec, data: Sequence[Sequence[int]], cols: int | None = None):
        data = [list(r) for r in data]
        if cols is None:
            cols = len(data[0]) if data else 0
        return cls(ring, len(data), cols, data)

    @classmethod
    def from_columns(cls, ring: RingSpec, columns: Sequence[Sequence[int]], rows: int):
        columns = list(columns)
        data = [[c[i] for c in columns] for i in range(rows)]
        return cls(ring, rows, len(columns), data)

    @classmethod
    def from_flat(cls, ring: RingSpec, rows: int, cols: int, entries: Sequence[int]):
        if len(entries) != rows * cols:
            raise ValueError(f"expected {rows * cols} entries, got {len(entries)}")
        data = [entries[i * cols:(i + 1) * cols] for i in range(rows)]
        return cls(ring, rows, cols, data)

    @classmethod
    def zero(cls, ring: RingSpec, rows: int, cols: int):
        return cls(ring, rows, cols, [[0] * cols for _ in range(rows)])

    @classmethod
    def identity(cls, ring: RingSpec, n: int):
        return cls(ring, n, n, [[1 if i == j else 0 for j in range(n)] for i in range(n)])

    @classmethod
    def diag(cls, ring: RingSpec, values: Sequence[int], rows: int | None = None, cols: int | None = None):
        rows = len(values) if rows is None else rows
        cols = len(values) if cols is None else cols
        data = [[0] * cols for _ in range(rows)]
        for i, v in enumerate(values):
            data[i][i] = v
        return cls(ring, rows, cols, data)

    @classmethod
    def from_sparse(cls, ring: RingSpec, rows: int, cols: int, entries: Iterable[tuple[int, int, int]]):
        data = [[0] * cols for _ in range(rows)]
        for i, j, v in entries:
            data[i][j] += v
        return cls(ring, rows, cols, data)

    # access --------------------------------------------------------------

    @property
    def data(self) -> tuple[tuple[int, ...], ...]:
        return self._data

    def entry(self, i: int, j: int) -> int:
        return self._data[i][j]

    def row(self, i: int) -> tuple[int, ...]:
        return self._data[i]

    def column(self, j: int) -> tuple[int, ...]:
        return tuple(r[j] for r in self._data)

    def columns(self) -> list[tuple[int, ...]]:
        return [tuple(r[j] for r in self._data) for j in range(self.cols)]

    def sparse_rows(self) -> list[list[tuple[int, int]]]:
        if self._sparse is None:
            self._sparse = [[(j, v) for j, v in enumerate(r) if v] for r in self._data]
        return self._sparse

    def flat(self) -> list[int]:
        return [x for r in self._data for x in r]

    def is_zero(self) -> bool:
        return all(not v for r in self._data for v in r)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    # algebra -------------------------------------------------------------

    def _check_ring(self, other: "ExactMatrix"):
        if self.ring != other.ring:
            raise ValueError(f"ring mismatch: {self.ring} vs {other.ring}")

    def __matmul__(self, other: "ExactMatrix") -> "ExactMatrix":
        self._check_ring(other)
        if self.cols != other.rows:
            raise ValueError(f"cannot multiply {self.shape} by {other.shape}")
        n = other.cols
        m = self.ring.modulus
        right = other.sparse_rows()
        out = []
        for row in self.sparse_rows():
            acc = [0] * n
            for k, a in row:
                for j, b in right[k]:
                    acc[j] += a * b
            out.append(tuple(x % m for x in acc) if m else tuple(acc))
        return ExactMatrix._wrap(self.ring, self.rows, n, tuple(out))

    def apply(self, vec: Sequence[int]) -> tuple[int, ...]:
        if len(vec) != self.cols:
            raise ValueError("vector length mismatch")
        m = self.ring.modulus
        out = []
        for row in self.sparse_rows():
            s = 0
            for k, a in row:
                s += a * vec[k]
            out.append(s % m if m else s)
        return tuple(out)

    def __add__(self, other: "ExactMatrix") -> "ExactMatrix":
        self._check_ring(other)
        if self.shape != other.shape:
            raise ValueError("shape mismatch in addition")
        return ExactMatrix(self.ring, self.rows, self.cols,
                           [[a + b for a, b in zip(r, s)] for r, s in zip(self._data, other._data)])

    def __neg__(self) -> "ExactMatrix":
        return ExactMatrix(self.ring, self.rows, self.cols, [[-a for a in r] for r in self._data])

    def __sub__(self, other: "ExactMatrix") -> "ExactMatrix":
        return self + (-other)

    def scale(self, c: int) -> "ExactMatrix":
        return ExactMatrix(self.ring, self.rows, self.cols, [[c * a for a in r] for r in self._data])

    @property
    def T(self) -> "ExactMatrix":
        return ExactMatrix(self.ring, self.cols, self.rows,
                           [list(col) for col in zip(*self._data)] if self.rows else [[] for _ in range(self.cols)])

    def lift(self) -> "ExactMatrix":
        """Same entries viewed over Z (representatives in [0, m))."""
        if self.ring.is_integers:
            return self
        return ExactMatrix(ZZ, self.rows, self.cols, self._data)

    def over(self, ring: RingSpec) -> "ExactMatrix":
        if ring == self.ring:
            return self
        return ExactMatrix(ring, self.rows, self.cols, self._data)

    def submatrix(self, rows: Sequence[int], cols: Sequence[int]) -> "ExactMatrix":
        return ExactMatrix(self.ring, len(rows), len(cols), [[self._data[i][j] for j in cols] for i in rows])

    def hstack(self, *others: "ExactMatrix") -> "ExactMatrix":
        return hstack([self, *others])

    def vstack(self, *others: "ExactMatrix") -> "ExactMatrix":
        return vstack([self, *others])

    # comparison / display ------------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, ExactMatrix):
            return NotImplemented
        return self.ring == other.ring and self.shape == other.shape and self._data == other._data

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.ring, self.rows, self.cols, self._data))
        return self._hash

    def __repr__(self):
        return f"ExactMatrix({self.ring}, {self.rows}x{self.cols}, {[list(r) for r in self._data]})"

    def to_json(self) -> dict:
        return {"rows": self.rows, "cols": self.cols, "entries": [str(x) for x in self.flat()]}

    @classmethod
    def from_json(cls, ring: RingSpec, obj: dict) -> "ExactMatrix":
        rows, cols = int(obj["rows"]), int(obj["cols"])
        entries = [int(str(x)) for x in obj["entries"]]
        return cls.from_flat(ring, rows, cols, entries)


def hstack(mats: Sequence[ExactMatrix], rows: int | None = None, ring: RingSpec | None = None) -> ExactMatrix:
    mats = list(mats)
    if not mats:
        return ExactMatrix.zero(ring or ZZ, rows or 0, 0)
    r = mats[0].rows
    if any(m.rows != r for m in mats):
        raise ValueError("hstack row mismatch")
    data = [sum((list(m.row(i)) for m in mats), []) for i in range(r)]
    return ExactMatrix(mats[0].ring, r, sum(m.cols for m in mats), data)


def vstack(mats: Sequence[ExactMatrix], cols: int | None = None, ring: RingSpec | None = None) -> ExactMatrix:
    mats = list(mats)
    if not mats:
        return ExactMatrix.zero(ring or ZZ, 0, cols or 0)
    c = mats[0].cols
    if any(m.cols != c for m in mats):
        raise ValueError("vstack column mismatch")
    data = [list(r) for m in mats for r in m.data]
    return ExactMatrix(mats[0].ring, len(data), c, data)


def block_matrix(ring: RingSpec, row_sizes: Sequence[int], col_sizes: Sequence[int],
                 blocks: dict[tuple[int, int], ExactMatrix]) -> ExactMatrix:
    """Assemble a matrix from a sparse dict of blocks keyed by (block_row, block_col)."""
    roff = [0]
    for s in row_sizes:
        roff.append(roff[-1] + s)
    coff = [0]
    for s in col_sizes:
        coff.append(coff[-1] + s)
    data = [[0] * coff[-1] for _ in range(roff[-1])]
    for (bi, bj), b in blocks.items():
        if b.shape != (row_sizes[bi], col_sizes[bj]):
            raise ValueError(f"block {(bi, bj)} has shape {b.shape}")
        r0, c0 = roff[bi], coff[bj]
        for i, row in enumerate(b.sparse_rows()):
            target = data[r0 + i]
            for j, v in row:
                target[c0 + j] += v
    return ExactMatrix(ring, roff[-1], coff[-1], data)


def block_diag(mats: Sequence[ExactMatrix], ring: RingSpec | None = None) -> ExactMatrix:
    mats = list(mats)
    ring = mats[0].ring if mats else (ring or ZZ)
    return block_matrix(ring, [m.rows for m in mats], [m.cols for m in mats],
                        {(i, i): m for i, m in enumerate(mats)})
