"""Sparse integer elimination: Smith normal form, kernels and linear solving.

All three share one elimination engine working on rows stored as dicts.
The pivot is always the entry of smallest absolute value, ties broken by the
lowest (row, col), so every output is a deterministic function of the input.
"""
from __future__ import annotations

import bisect
from math import gcd
from typing import Sequence

from .matrix import ExactMatrix, RingSpec, ZZ


def ext_gcd(a: int, b: int) -> tuple[int, int, int]:
    """Return (g, s, t) with s*a + t*b = g = gcd(a, b) >= 0."""
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    if old_r < 0:
        old_r, old_s, old_t = -old_r, -old_s, -old_t
    return old_r, old_s, old_t


def _axpy(dst: dict, src: dict, c: int) -> None:
    for k, v in src.items():
        nv = dst.get(k, 0) + c * v
        if nv:
            dst[k] = nv
        else:
            dst.pop(k, None)


class _Eliminator:
    def __init__(self, data: Sequence[Sequence[int]], nrows: int, ncols: int,
                 track_left: bool, track_right: bool):
        self.nrows = nrows
        self.ncols = ncols
        self.rows = [{j: v for j, v in enumerate(r) if v} for r in data]
        self.colidx: list[set] = [set() for _ in range(ncols)]
        for i, r in enumerate(self.rows):
            for j in r:
                self.colidx[j].add(i)
        self.track_left = track_left
        self.track_right = track_right
        # left: rows of U; left_inv: columns of U^-1; right: columns of V
        self.left = [{i: 1} for i in range(nrows)] if track_left else None
        self.left_inv = [{i: 1} for i in range(nrows)] if track_left else None
        self.right = [{j: 1} for j in range(ncols)] if track_right else None
        self.pivots: list[tuple[int, int]] = []

    def row_add(self, i: int, j: int, c: int) -> None:
        """row_i += c * row_j"""
        ri = self.rows[i]
        colidx = self.colidx
        for col, v in self.rows[j].items():
            nv = ri.get(col, 0) + c * v
            if nv:
                if col not in ri:
                    colidx[col].add(i)
                ri[col] = nv
            elif col in ri:
                del ri[col]
                colidx[col].discard(i)
        if self.track_left:
            _axpy(self.left[i], self.left[j], c)
            _axpy(self.left_inv[j], self.left_inv[i], -c)

    def col_add(self, i: int, j: int, c: int) -> None:
        """col_i += c * col_j"""
        colidx = self.colidx
        for r in list(colidx[j]):
            row = self.rows[r]
            nv = row.get(i, 0) + c * row[j]
            if nv:
                if i not in row:
                    colidx[i].add(r)
                row[i] = nv
            elif i in row:
                del row[i]
                colidx[i].discard(r)
        if self.track_right:
            _axpy(self.right[i], self.right[j], c)

    def negate_row(self, i: int) -> None:
        row = self.rows[i]
        for k in row:
            row[k] = -row[k]
        if self.track_left:
            for d in (self.left[i], self.left_inv[i]):
                for k in d:
                    d[k] = -d[k]

    def _find_pivot(self, active: list[int]):
        best = None
        for i in active:
            row = self.rows[i]
            if not row:
                continue
            for j, v in row.items():
                key = (abs(v), i, j)
                if best is None or key < best:
                    best = key
            if best[0] == 1 and best[1] == i:
                break
        return best

    def run(self) -> None:
        active = [i for i in range(self.nrows) if self.rows[i]]
        while True:
            best = self._find_pivot(active)
            if best is None:
                break
            _, i, j = best
            while True:
                p = self.rows[i][j]
                for k in sorted(self.colidx[j] - {i}):
                    q = self.rows[k][j] // p
                    if q:
                        self.row_add(k, i, -q)
                for k in sorted(set(self.rows[i]) - {j}):
                    q = self.rows[i][k] // p
                    if q:
                        self.col_add(k, j, -q)
                cand = [(abs(self.rows[k][j]), k, j) for k in self.colidx[j] if k != i]
                cand += [(abs(v), i, k) for k, v in self.rows[i].items() if k != j]
                if not cand:
                    break
                _, i, j = min(cand)
            self.pivots.append((i, j))
            pos = bisect.bisect_left(active, i)
            del active[pos]

    def fix_divisibility(self, diag: list[int]) -> None:
        r = len(diag)
        for a in range(r):
            for b in range(a + 1, r):
                da, db = diag[a], diag[b]
                if db % da == 0:
                    continue
                g, s, t = ext_gcd(da, db)
                ag, bg = da // g, db // g
                p, q = self.pivots[a][0], self.pivots[b][0]
                ca, cb = self.pivots[a][1], self.pivots[b][1]
                if self.track_left:
                    up, uq = self.left[p], self.left[q]
                    new_p = {}
                    _axpy(new_p, up, s)
                    _axpy(new_p, uq, t)
                    new_q = {}
                    _axpy(new_q, up, -bg)
                    _axpy(new_q, uq, ag)
                    self.left[p], self.left[q] = new_p, new_q
                    ip, iq = self.left_inv[p], self.left_inv[q]
                    new_ip = {}
                    _axpy(new_ip, ip, ag)
                    _axpy(new_ip, iq, bg)
                    new_iq = {}
                    _axpy(new_iq, ip, -t)
                    _axpy(new_iq, iq, s)
                    self.left_inv[p], self.left_inv[q] = new_ip, new_iq
                if self.track_right:
                    va, vb = self.right[ca], self.right[cb]
                    new_a = {}
                    _axpy(new_a, va, 1)
                    _axpy(new_a, vb, 1)
                    new_b = {}
                    _axpy(new_b, va, -t * bg)
                    _axpy(new_b, vb, s * ag)
                    self.right[ca], self.right[cb] = new_a, new_b
                diag[a], diag[b] = g, da * bg

    def orders(self) -> tuple[list[int], list[int]]:
        prow = [i for i, _ in self.pivots]
        pcol = [j for _, j in self.pivots]
        ps, cs = set(prow), set(pcol)
        rowperm = prow + [i for i in range(self.nrows) if i not in ps]
        colperm = pcol + [j for j in range(self.ncols) if j not in cs]
        return rowperm, colperm


class SNFData:
    """Raw Smith form data: diag (nonzero invariant factors), and U, U^-1, V
    as lists of sparse dicts (rows of U, columns of U^-1, columns of V)."""

    __slots__ = ("nrows", "ncols", "diag", "u_rows", "uinv_cols", "v_cols")

    def __init__(self, nrows, ncols, diag, u_rows, uinv_cols, v_cols):
        self.nrows = nrows
        self.ncols = ncols
        self.diag = diag
        self.u_rows = u_rows
        self.uinv_cols = uinv_cols
        self.v_cols = v_cols

    @property
    def rank(self) -> int:
        return len(self.diag)


def snf_data(data: Sequence[Sequence[int]], nrows: int, ncols: int, *, left: bool = True,
             right: bool = True, chain: bool = True) -> SNFData:
    """Eliminate an integer matrix. With chain=False the diagonal is not
    forced into a divisibility chain (enough for solving and kernels)."""
    el = _Eliminator(data, nrows, ncols, left, right)
    el.run()
    for i, j in el.pivots:
        if el.rows[i][j] < 0:
            el.negate_row(i)
    diag = [el.rows[i][j] for i, j in el.pivots]
    if chain:
        el.fix_divisibility(diag)
    rowperm, colperm = el.orders()
    u_rows = [el.left[i] for i in rowperm] if left else None
    uinv_cols = [el.left_inv[i] for i in rowperm] if left else None
    v_cols = [el.right[j] for j in colperm] if right else None
    return SNFData(nrows, ncols, diag, u_rows, uinv_cols, v_cols)


def _dense_from_rows(dicts: list[dict], n: int) -> list[list[int]]:
    out = []
    for d in dicts:
        row = [0] * n
        for k, v in d.items():
            row[k] = v
        out.append(row)
    return out


def _dense_from_cols(dicts: list[dict], n: int) -> list[list[int]]:
    out = [[0] * len(dicts) for _ in range(n)]
    for j, d in enumerate(dicts):
        for k, v in d.items():
            out[k][j] = v
    return out


def _unit_adjust(d: int, m: int) -> int:
    """A unit w mod m with w*d = gcd(d, m) mod m."""
    g = gcd(d, m)
    if g == m:
        return 1
    mg = m // g
    w = pow((d // g) % mg, -1, mg) if mg > 1 else 1
    for k in range(m):
        cand = w + k * mg
        if gcd(cand, m) == 1:
            return cand % m
    raise ArithmeticError("no unit found")  # unreachable


def smith_normal_form(mat: ExactMatrix) -> tuple[ExactMatrix, ExactMatrix, ExactMatrix]:
    """Return (u, d, v) with d = u * mat * v, u and v invertible, d diagonal
    with a divisibility chain. Over Z/m the integer lift is reduced and each
    diagonal entry normalised to gcd(d_i, m)."""
    ring = mat.ring
    m, n = mat.rows, mat.cols
    data = snf_data(mat.lift().data, m, n)
    u = _dense_from_rows(data.u_rows, m)
    v = _dense_from_cols(data.v_cols, n)
    diag = list(data.diag)
    if ring.modulus:
        mod = ring.modulus
        for i, dval in enumerate(diag):
            w = _unit_adjust(dval % mod, mod)
            if w != 1:
                u[i] = [w * x for x in u[i]]
            diag[i] = gcd(dval, mod) % mod
    d = ExactMatrix.diag(ring, diag, m, n)
    return ExactMatrix(ring, m, m, u), d, ExactMatrix(ring, n, n, v)


def integer_kernel(data: Sequence[Sequence[int]], nrows: int, ncols: int) -> list[tuple[int, ...]]:
    """A Z-basis of {x in Z^ncols : A x = 0}, as tuples."""
    if nrows == 0:
        return [tuple(1 if i == j else 0 for i in range(ncols)) for j in range(ncols)]
    snf = snf_data(data, nrows, ncols, left=False, right=True, chain=False)
    out = []
    for col in snf.v_cols[snf.rank:]:
        vec = [0] * ncols
        for k, v in col.items():
            vec[k] = v
        out.append(tuple(vec))
    return out


class IntegerSolver:
    """Solve A x = b over Z for many right-hand sides, A fixed."""

    def __init__(self, data: Sequence[Sequence[int]], nrows: int, ncols: int):
        self.nrows = nrows
        self.ncols = ncols
        self.snf = snf_data(data, nrows, ncols, left=True, right=True, chain=False)

    def solve(self, b: Sequence[int]) -> list[int] | None:
        snf = self.snf
        r = snf.rank
        y = []
        for row in snf.u_rows:
            s = 0
            for k, v in row.items():
                s += v * b[k]
            y.append(s)
        if any(y[k] for k in range(r, self.nrows)):
            return None
        x = [0] * self.ncols
        for k in range(r):
            q, rem = divmod(y[k], snf.diag[k])
            if rem:
                return None
            if q:
                for idx, v in snf.v_cols[k].items():
                    x[idx] += q * v
        return x


def solve_integer(data, nrows, ncols, b) -> list[int] | None:
    return IntegerSolver(data, nrows, ncols).solve(b)


def matrix_kernel(mat: ExactMatrix) -> list[tuple[int, ...]]:
    """Kernel generators of a matrix over its ring (Z-basis over Z, generating
    set over Z/m)."""
    if mat.ring.is_integers:
        return integer_kernel(mat.data, mat.rows, mat.cols)
    mod = mat.ring.modulus
    aug = [list(r) + [mod if i == k else 0 for k in range(mat.rows)] for i, r in enumerate(mat.data)]
    basis = integer_kernel(aug, mat.rows, mat.cols + mat.rows)
    out = []
    for vec in basis:
        v = tuple(x % mod for x in vec[:mat.cols])
        if any(v):
            out.append(v)
    return out


__all__ = ["ext_gcd", "snf_data", "SNFData", "smith_normal_form", "integer_kernel",
           "IntegerSolver", "solve_integer", "matrix_kernel", "RingSpec", "ZZ"]
