"""Short exact sequences 0 -> sub -> total -> quotient -> 0 and a brute-force
enumerator of their equivalence classes (used as an oracle)."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

from .matrix import ExactMatrix
from .modules import FgModule, IllDefinedMap, ModuleMap, Subquotient


class UnsupportedOracleInput(ValueError):
    pass


@dataclass
class ExtensionClass:
    sub: FgModule
    quotient: FgModule
    total: FgModule
    inclusion: ModuleMap
    projection: ModuleMap

    def validate(self) -> None:
        if self.inclusion.source is not self.sub and self.inclusion.source.ngens != self.sub.ngens:
            raise ValueError("inclusion does not start at sub")
        if not self.inclusion.is_injective():
            raise ValueError("inclusion is not injective")
        if not self.projection.is_surjective():
            raise ValueError("projection is not surjective")
        if not (self.projection @ self.inclusion).is_zero():
            raise ValueError("projection after inclusion is nonzero")
        middle = Subquotient(self.inclusion, self.projection, self.total).module
        if not middle.is_zero():
            raise ValueError("sequence is not exact at the total module")

    def is_split(self) -> bool:
        """True when the projection has a section (finite case)."""
        return next(_sections(self), None) is not None

    def describe(self) -> str:
        return f"0 -> {self.sub.describe()} -> {self.total.describe()} -> {self.quotient.describe()} -> 0"


def _sections(ext: ExtensionClass):
    """Yield sections of the projection (finite case, brute force)."""
    q = ext.quotient
    base = []
    for j in range(q.ngens):
        e = tuple(1 if k == j else 0 for k in range(q.ngens))
        x = ext.projection.preimage(e)
        base.append(x)
    subs = [ext.sub.element(c) for c in ext.sub.elements()]
    for choice in itertools.product(range(len(subs)), repeat=q.ngens):
        cols = []
        for j, c in enumerate(choice):
            shift = ext.inclusion.apply(subs[c])
            cols.append(tuple(a + b for a, b in zip(base[j], shift)))
        try:
            yield ModuleMap.from_columns(q, ext.total, cols, check=True)
        except IllDefinedMap:
            continue


def extensions_equivalent(e1: ExtensionClass, e2: ExtensionClass) -> bool:
    """Search for phi: total1 -> total2 with phi o i1 = i2 and p2 o phi = p1.

    sub and quotient must be the same presentations on both sides.
    """
    if e1.sub.ngens != e2.sub.ngens or e1.quotient.ngens != e2.quotient.ngens:
        raise ValueError("extensions have different end modules")
    if not e1.sub.is_finite():
        raise UnsupportedOracleInput("equivalence search needs a finite sub module")
    t1 = e1.total
    # phi on each generator g of total1 must lie over p1(g): a fixed preimage plus i2(sub)
    base = []
    for j in range(t1.ngens):
        y = e1.projection.apply(tuple(1 if k == j else 0 for k in range(t1.ngens)))
        x = e2.projection.preimage(y)
        if x is None:
            return False
        base.append(x)
    subs = [e2.inclusion.apply(e2.sub.element(c)) for c in e2.sub.elements()]
    for choice in itertools.product(range(len(subs)), repeat=t1.ngens):
        cols = [tuple(a + b for a, b in zip(base[j], subs[c])) for j, c in enumerate(choice)]
        try:
            phi = ModuleMap.from_columns(t1, e2.total, cols, check=True)
        except IllDefinedMap:
            continue
        if (phi @ e1.inclusion).equals(e2.inclusion):
            return True
    return False


def _extension_from_data(quotient: FgModule, sub: FgModule, alphas) -> ExtensionClass | None:
    """Total module on generators (sub canonical, quotient canonical) with
    relations d_j * e_j = alpha_j for the quotient's canonical orders d_j."""
    ring = sub.ring
    s_inv, q_inv = sub.invariants, quotient.invariants
    ks, kq = len(s_inv), len(q_inv)
    n = ks + kq
    cols = []
    for i, d in enumerate(s_inv):
        if d:
            cols.append([d if k == i else 0 for k in range(n)])
    for j, d in enumerate(q_inv):
        if d:
            col = [0] * n
            for i, a in enumerate(alphas[j]):
                col[i] = -a
            col[ks + j] += d
            cols.append(col)
    total = FgModule(ring, n, ExactMatrix.from_columns(ring, cols, n))
    sc = sub.canonical_module()
    qc = quotient.canonical_module()
    incl = ModuleMap.from_columns(sc, total, [[1 if k == i else 0 for k in range(n)] for i in range(ks)],
                                  check=True)
    proj_rows = [[1 if k == ks + j else 0 for k in range(n)] for j in range(kq)]
    proj = ModuleMap(total, qc, ExactMatrix(ring, kq, n, proj_rows), check=True)
    order = total.order()
    if order is None or order != sub.order() * quotient.order():
        return None
    # re-express on the given presentations of sub and quotient
    s_to = ModuleMap(sub, sc, _to(sub), check=False)
    q_from = ModuleMap(qc, quotient, _from(quotient), check=False)
    ext = ExtensionClass(sub, quotient, total, incl @ s_to, q_from @ proj)
    return ext


def _to(m: FgModule) -> ExactMatrix:
    rows = []
    for row in m.canon.to_rows:
        r = [0] * m.ngens
        for k, v in row.items():
            r[k] = v
        rows.append(r)
    return ExactMatrix(m.ring, len(rows), m.ngens, rows)


def _from(m: FgModule) -> ExactMatrix:
    return ExactMatrix.from_columns(m.ring, m.canon.from_cols, m.ngens)


def enumerate_extensions(quotient: FgModule, sub: FgModule) -> list[ExtensionClass]:
    """One representative per equivalence class of 0 -> sub -> J -> quotient -> 0."""
    if quotient.ring != sub.ring:
        raise ValueError("ring mismatch")
    if not (quotient.is_finite() and sub.is_finite()):
        raise UnsupportedOracleInput("enumerate_extensions needs finite modules")
    elems = list(sub.elements())
    kq = quotient.rank
    reps: list[ExtensionClass] = []
    for alphas in itertools.product(elems, repeat=kq):
        ext = _extension_from_data(quotient, sub, alphas)
        if ext is None:
            continue
        if any(extensions_equivalent(ext, r) for r in reps):
            continue
        reps.append(ext)
    return reps
