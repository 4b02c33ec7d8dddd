"""Hom, Ext^1 and Tor_1 of finitely generated modules."""
from __future__ import annotations

from dataclasses import dataclass
from math import gcd
from typing import Sequence

from .matrix import ExactMatrix
from .modules import FgModule, ModuleMap, Subquotient, direct_sum
from .snf import matrix_kernel


def _check_rings(a: FgModule, b: FgModule) -> None:
    if a.ring != b.ring:
        raise ValueError(f"ring mismatch: {a.ring} vs {b.ring}")


@dataclass
class HomModule:
    """Hom(a, b) with explicit conversion between elements and maps.

    Generators are the cyclic homs e_j -> value * e_i between canonical
    summands, one per nonzero Hom(Z/a_j, Z/b_i).
    """

    source: FgModule
    target: FgModule
    module: FgModule
    slots: list[tuple[int, int, int, int]]  # (i, j, order, value)

    def to_map(self, x: Sequence[int]) -> ModuleMap:
        """Map for the element with generator coordinates x of self.module."""
        a, b = self.source, self.target
        ka, kb = a.rank, b.rank
        canon = [[0] * ka for _ in range(kb)]
        for c, (i, j, _, v) in zip(x, self.slots):
            canon[i][j] += c * v
        ca, cb = a.canon, b.canon
        cols = []
        for j in range(a.ngens):
            # x_j in canonical coordinates of a, then through canon, then to b
            src = [row.get(j, 0) for row in ca.to_rows]
            img = [sum(canon[i][k] * src[k] for k in range(ka)) for i in range(kb)]
            vec = [0] * b.ngens
            for i, c in enumerate(img):
                if c:
                    for k, v in enumerate(cb.from_cols[i]):
                        vec[k] += c * v
            cols.append(vec)
        return ModuleMap.from_columns(a, b, cols, check=False)

    def from_map(self, f: ModuleMap) -> tuple[int, ...]:
        """Generator coordinates of f in self.module."""
        fm = f.canonical_matrix()
        out = []
        for i, j, order, v in self.slots:
            e = fm[i][j]
            if e % v:
                raise ValueError("map is not well defined on canonical summands")
            c = e // v
            out.append(c % order if order else c)
        return tuple(out)

    def coords(self, f: ModuleMap) -> tuple[int, ...]:
        return self.module.coords(self.from_map(f))

    def map_from_coords(self, coords: Sequence[int]) -> ModuleMap:
        return self.to_map(self.module.element(coords))


def hom_module(a: FgModule, b: FgModule) -> HomModule:
    _check_rings(a, b)
    ring = a.ring
    slots = []
    for j, aj in enumerate(a.invariants):
        for i, bi in enumerate(b.invariants):
            if bi == 0:
                if aj == 0:
                    slots.append((i, j, 0, 1))
                continue
            g = gcd(aj, bi)
            if g == 1:
                continue
            slots.append((i, j, g, bi // g))
    mod = FgModule.from_invariants(ring, [s[2] for s in slots])
    return HomModule(a, b, mod, slots)


def _power(b: FgModule, n: int) -> FgModule:
    return direct_sum([b] * n, b.ring)


def _kron_with_identity(coeffs: list[list[int]], rows: int, cols: int, size: int, ring) -> ExactMatrix:
    """Block matrix whose (r, c) block is coeffs[r][c] * I_size."""
    data = [[0] * (cols * size) for _ in range(rows * size)]
    for r in range(rows):
        for c in range(cols):
            v = coeffs[r][c]
            if v:
                for t in range(size):
                    data[r * size + t][c * size + t] = v
    return ExactMatrix(ring, rows * size, cols * size, data)


def _presentation_maps(a: FgModule) -> tuple[int, int, int, list[list[int]], list[list[int]]]:
    """Free resolution start P2 -> P1 -> P0 of a: ranks and integer matrices."""
    rel = a.relations
    p0, p1 = a.ngens, rel.cols
    r1 = [list(r) for r in rel.data]
    k = matrix_kernel(rel) if p1 else []
    p2 = len(k)
    r2 = [[k[c][r] for c in range(p2)] for r in range(p1)]
    return p0, p1, p2, r1, r2


def hom_and_ext(a: FgModule, b: FgModule) -> tuple[FgModule, FgModule]:
    """Hom(a, b) and Ext^1(a, b) from a free presentation of a.

    Dualising P2 -> P1 -> P0 gives Hom(P0,b) -> Hom(P1,b) -> Hom(P2,b);
    hom is the first kernel and ext1 the homology in the middle.
    """
    _check_rings(a, b)
    ring = a.ring
    p0, p1, p2, r1, r2 = _presentation_maps(a)
    g = b.ngens
    h0, h1, h2 = _power(b, p0), _power(b, p1), _power(b, p2)
    # (phi o R)_c = sum_k R[k][c] phi_k, so the block (c, k) is R[k][c]
    d1 = ModuleMap(h0, h1, _kron_with_identity([[r1[k][c] for k in range(p0)] for c in range(p1)],
                                               p1, p0, g, ring), check=False)
    d2 = ModuleMap(h1, h2, _kron_with_identity([[r2[k][c] for k in range(p1)] for c in range(p2)],
                                               p2, p1, g, ring), check=False)
    hom = d1.kernel()[0]
    ext = Subquotient(d1, d2, h1).module
    return hom, ext


def tor1(a: FgModule, b: FgModule) -> FgModule:
    """Tor_1(a, b): homology of P2 (x) b -> P1 (x) b -> P0 (x) b in the middle."""
    _check_rings(a, b)
    ring = a.ring
    p0, p1, p2, r1, r2 = _presentation_maps(a)
    g = b.ngens
    t0, t1, t2 = _power(b, p0), _power(b, p1), _power(b, p2)
    d1 = ModuleMap(t1, t0, _kron_with_identity(r1, p0, p1, g, ring), check=False)
    d2 = ModuleMap(t2, t1, _kron_with_identity(r2, p1, p2, g, ring), check=False)
    return Subquotient(d2, d1, t1).module


def tensor(a: FgModule, b: FgModule) -> FgModule:
    """a (x) b via the presentation of a."""
    _check_rings(a, b)
    ring = a.ring
    p0, p1, _, r1, _ = _presentation_maps(a)
    g = b.ngens
    t0, t1 = _power(b, p0), _power(b, p1)
    d1 = ModuleMap(t1, t0, _kron_with_identity(r1, p0, p1, g, ring), check=False)
    return d1.cokernel()[0]
