"""Bounded chain complexes of presented modules.

Homology, Postnikov sections, k-invariants, the internal Hom complex and
homotopy classes, mapping cones, base change and homotopy-equivalence search.
Terms may be non-free; whenever maps out of a complex must be computed up to
homotopy, a non-free source is replaced by a truncated free resolution.
"""
from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass, field
from typing import Sequence

from .exactalg import (ExactMatrix, FgModule, HomModule, IllDefinedMap, ModuleMap, RingSpec,
                       Subquotient, ZZ, canonical_presentation, direct_sum, hom_module,
                       smith_normal_form, snf_data)
from .exactalg.snf import integer_kernel


class ComplexError(ValueError):
    pass


class ChainComplex:
    """terms[n] for n = 0..top_degree; diffs[k] is d_{k+1}: terms[k+1] -> terms[k]."""

    def __init__(self, ring: RingSpec, terms: Sequence[FgModule], diffs: Sequence[ModuleMap],
                 check: bool = True):
        terms = list(terms) or [FgModule.zero(ring)]
        diffs = list(diffs)
        if len(diffs) != len(terms) - 1:
            raise ComplexError(f"{len(terms)} terms need {len(terms) - 1} differentials, got {len(diffs)}")
        self.ring = ring
        self.terms = tuple(terms)
        self.diffs = tuple(diffs)
        self._zero = FgModule.zero(ring)
        self._hdata: dict[int, Subquotient] = {}
        self._lock = threading.Lock()
        if check:
            self.validate()

    # construction ------------------------------------------------------------

    @classmethod
    def free(cls, ring: RingSpec, ranks: Sequence[int], mats: Sequence[Sequence[Sequence[int]] | ExactMatrix],
             check: bool = True) -> "ChainComplex":
        """Free complex with given ranks; mats[k] is the matrix of d_{k+1}."""
        terms = [FgModule.free(ring, r) for r in ranks]
        diffs = []
        for k, m in enumerate(mats):
            if not isinstance(m, ExactMatrix):
                m = ExactMatrix(ring, ranks[k], ranks[k + 1], m) if ranks[k] else \
                    ExactMatrix.zero(ring, 0, ranks[k + 1])
            diffs.append(ModuleMap(terms[k + 1], terms[k], m, check=False))
        return cls(ring, terms, diffs, check=check)

    @classmethod
    def zero(cls, ring: RingSpec) -> "ChainComplex":
        return cls(ring, [FgModule.zero(ring)], [])

    @classmethod
    def sphere(cls, ring: RingSpec, k: int, module: FgModule | None = None) -> "ChainComplex":
        """module (default the ring) concentrated in degree k."""
        module = module if module is not None else FgModule.free(ring, 1)
        zero = FgModule.zero(ring)
        terms = [zero] * k + [module]
        diffs = [ModuleMap.zero(terms[i + 1], terms[i]) for i in range(k)]
        return cls(ring, terms, diffs, check=False)

    @classmethod
    def from_terms(cls, ring: RingSpec, terms: dict[int, FgModule], diffs: dict[int, ModuleMap],
                   check: bool = True) -> "ChainComplex":
        """Build from sparse dicts keyed by degree (diffs keyed by source degree)."""
        top = max([0, *terms.keys()])
        ts = [terms.get(n, FgModule.zero(ring)) for n in range(top + 1)]
        ds = []
        for n in range(1, top + 1):
            f = diffs.get(n)
            ds.append(f if f is not None else ModuleMap.zero(ts[n], ts[n - 1]))
        return cls(ring, ts, ds, check=check)

    # access --------------------------------------------------------------

    @property
    def top_degree(self) -> int:
        return len(self.terms) - 1

    def term(self, n: int) -> FgModule:
        if 0 <= n < len(self.terms):
            return self.terms[n]
        return self._zero

    def d(self, n: int) -> ModuleMap:
        if 1 <= n <= self.top_degree:
            return self.diffs[n - 1]
        return ModuleMap.zero(self.term(n), self.term(n - 1))

    def ranks(self) -> list[int]:
        return [t.ngens for t in self.terms]

    def validate(self) -> None:
        for n in range(1, self.top_degree + 1):
            f = self.diffs[n - 1]
            if f.source.ngens != self.terms[n].ngens or f.target.ngens != self.terms[n - 1].ngens:
                raise ComplexError(f"d_{n} has the wrong shape")
            try:
                f.check()
            except IllDefinedMap as e:
                raise ComplexError(f"d_{n} is not well defined: {e}") from None
        for n in range(2, self.top_degree + 1):
            if not (self.diffs[n - 2] @ self.diffs[n - 1]).is_zero():
                raise ComplexError(f"d_{n - 1} o d_{n} != 0 (degrees {n} -> {n - 2})")

    def is_free(self) -> bool:
        return all(t.is_free() for t in self.terms)

    def is_finite(self) -> bool:
        return all(t.is_finite() for t in self.terms)

    # homology --------------------------------------------------------------

    def homology_data(self, n: int) -> Subquotient:
        h = self._hdata.get(n)
        if h is None:
            with self._lock:
                h = self._hdata.get(n)
                if h is None:
                    d_in = self.d(n + 1)
                    d_out = self.d(n) if n >= 1 else None
                    h = Subquotient(d_in if d_in.source.ngens else None, d_out, self.term(n))
                    self._hdata[n] = h
        return h

    def homology(self, n: int) -> FgModule:
        if n < 0 or n > self.top_degree:
            return FgModule.zero(self.ring)
        return self.homology_data(n).module

    def cycles(self, n: int) -> tuple[FgModule, ModuleMap]:
        h = self.homology_data(n)
        return h.cycles, h.cycles_inclusion

    def homology_forms(self) -> list[tuple[int, tuple[int, ...]]]:
        return [self.homology(n).canonical_form() for n in range(self.top_degree + 1)]

    # reshaping ---------------------------------------------------------------

    def with_top(self, top: int) -> "ChainComplex":
        """Pad with zero terms, or drop trailing zero terms down to `top`."""
        if top >= self.top_degree:
            extra = top - self.top_degree
            zero = FgModule.zero(self.ring)
            terms = list(self.terms) + [zero] * extra
            diffs = list(self.diffs) + [ModuleMap.zero(terms[i + 1], terms[i])
                                        for i in range(self.top_degree, top)]
            return ChainComplex(self.ring, terms, diffs, check=False)
        if any(t.ngens for t in self.terms[top + 1:]):
            raise ComplexError("cannot drop nonzero terms")
        return ChainComplex(self.ring, self.terms[:top + 1], self.diffs[:top], check=False)

    def trimmed(self) -> "ChainComplex":
        top = self.top_degree
        while top > 0 and self.terms[top].ngens == 0:
            top -= 1
        return self.with_top(top)

    def shift(self, k: int) -> "ChainComplex":
        """Suspension by k >= 0 with differential (-1)^k d."""
        if k < 0:
            raise ValueError("shift must be non-negative")
        zero = FgModule.zero(self.ring)
        terms = [zero] * k + list(self.terms)
        sign = -1 if k % 2 else 1
        diffs = [ModuleMap.zero(terms[i + 1], terms[i]) for i in range(k)]
        diffs += [d.scale(sign) for d in self.diffs]
        return ChainComplex(self.ring, terms, diffs, check=False)

    def __repr__(self):
        return f"ChainComplex({self.ring}, [{', '.join(t.describe() for t in self.terms)}])"

    # serialization -------------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "ring": str(self.ring),
            "top_degree": self.top_degree,
            "terms": [t.to_json() for t in self.terms],
            "differentials": [d.matrix.to_json() for d in self.diffs],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ChainComplex":
        ring = RingSpec.parse(obj["ring"])
        top = int(obj["top_degree"])
        terms = [FgModule.from_json(ring, t) for t in obj["terms"]]
        if len(terms) != top + 1:
            raise ComplexError(f"top_degree {top} needs {top + 1} terms, got {len(terms)}")
        mats = obj["differentials"]
        if len(mats) != top:
            raise ComplexError(f"top_degree {top} needs {top} differentials, got {len(mats)}")
        diffs = []
        for k, m in enumerate(mats):
            mat = ExactMatrix.from_json(ring, m)
            if mat.shape != (terms[k].ngens, terms[k + 1].ngens):
                raise ComplexError(f"d_{k + 1} has shape {mat.shape}, expected "
                                   f"{(terms[k].ngens, terms[k + 1].ngens)}")
            diffs.append(ModuleMap(terms[k + 1], terms[k], mat, check=False))
        return cls(ring, terms, diffs, check=True)


class ChainMap:
    """components[n]: source_n -> target_n for n = 0..source.top_degree."""

    def __init__(self, source: ChainComplex, target: ChainComplex, components: Sequence[ModuleMap],
                 check: bool = True):
        comps = list(components)
        if len(comps) < source.top_degree + 1:
            comps += [ModuleMap.zero(source.term(n), target.term(n))
                      for n in range(len(comps), source.top_degree + 1)]
        self.source = source
        self.target = target
        self.components = tuple(comps[:source.top_degree + 1])
        for n, f in enumerate(self.components):
            if f.source.ngens != source.term(n).ngens or f.target.ngens != target.term(n).ngens:
                raise ComplexError(f"component {n} has the wrong shape")
        if check:
            self.validate()

    def component(self, n: int) -> ModuleMap:
        if 0 <= n < len(self.components):
            return self.components[n]
        return ModuleMap.zero(self.source.term(n), self.target.term(n))

    def validate(self) -> None:
        for n, f in enumerate(self.components):
            try:
                f.check()
            except IllDefinedMap as e:
                raise ComplexError(f"component {n} is not well defined: {e}") from None
        top = max(self.source.top_degree, self.target.top_degree)
        for n in range(1, top + 1):
            lhs = self.target.d(n) @ self.component(n)
            rhs = self.component(n - 1) @ self.source.d(n)
            if not (lhs - rhs).is_zero():
                raise ComplexError(f"chain map does not commute with d_{n}")

    @classmethod
    def identity(cls, c: ChainComplex) -> "ChainMap":
        return cls(c, c, [ModuleMap.identity(t) for t in c.terms], check=False)

    @classmethod
    def zero(cls, source: ChainComplex, target: ChainComplex) -> "ChainMap":
        return cls(source, target, [], check=False)

    def __matmul__(self, other: "ChainMap") -> "ChainMap":
        comps = [self.component(n) @ other.component(n) for n in range(other.source.top_degree + 1)]
        return ChainMap(other.source, self.target, comps, check=False)

    def __add__(self, other: "ChainMap") -> "ChainMap":
        return ChainMap(self.source, self.target,
                        [a + b for a, b in zip(self.components, other.components)], check=False)

    def __sub__(self, other: "ChainMap") -> "ChainMap":
        return ChainMap(self.source, self.target,
                        [a - b for a, b in zip(self.components, other.components)], check=False)

    def __neg__(self) -> "ChainMap":
        return ChainMap(self.source, self.target, [-a for a in self.components], check=False)

    def is_zero(self) -> bool:
        return all(f.is_zero() for f in self.components)

    def equals(self, other: "ChainMap") -> bool:
        return (self - other).is_zero()

    def induced(self, n: int) -> ModuleMap:
        """Induced map H_n(source) -> H_n(target)."""
        from .exactalg import induced_map
        if n > self.source.top_degree or n > self.target.top_degree:
            return ModuleMap.zero(self.source.homology(n), self.target.homology(n))
        return induced_map(self.source.homology_data(n), self.target.homology_data(n),
                           self.component(n).matrix)

    def is_quasi_iso(self, upto: int | None = None) -> bool:
        top = max(self.source.top_degree, self.target.top_degree)
        top = top if upto is None else min(top, upto)
        return all(self.induced(n).is_iso() for n in range(top + 1))


class ChainHomotopy:
    """components[n]: source_n -> target_{n+1} with f - g = dH + Hd."""

    def __init__(self, f: ChainMap, g: ChainMap, components: Sequence[ModuleMap], check: bool = True):
        self.f = f
        self.g = g
        src, tgt = f.source, f.target
        comps = list(components)
        comps += [ModuleMap.zero(src.term(n), tgt.term(n + 1)) for n in range(len(comps), src.top_degree + 1)]
        self.components = tuple(comps[:src.top_degree + 1])
        if check:
            self.validate()

    def component(self, n: int) -> ModuleMap:
        src, tgt = self.f.source, self.f.target
        if 0 <= n < len(self.components):
            return self.components[n]
        return ModuleMap.zero(src.term(n), tgt.term(n + 1))

    def validate(self) -> None:
        src, tgt = self.f.source, self.f.target
        for n in range(src.top_degree + 1):
            lhs = self.f.component(n) - self.g.component(n)
            rhs = tgt.d(n + 1) @ self.component(n)
            if n >= 1:
                rhs = rhs + self.component(n - 1) @ src.d(n)
            if not (lhs - rhs).is_zero():
                raise ComplexError(f"homotopy identity fails in degree {n}")


# ----------------------------------------------------------------------------
# Hom complex and homotopy classes


class HomComplex:
    """Degrees -1, 0, 1 of Hom(c, d): Hom_k = prod_n Hom(c_n, d_{n+k}),
    D(phi) = d phi - (-1)^k phi d."""

    def __init__(self, c: ChainComplex, d: ChainComplex):
        if c.ring != d.ring:
            raise ValueError("ring mismatch")
        self.c = c
        self.d = d
        self.ring = c.ring
        self._hom: dict[tuple[int, int], HomModule] = {}
        self.blocks: dict[int, list[tuple[int, HomModule, int]]] = {}
        self.modules: dict[int, FgModule] = {}
        for k in (-1, 0, 1, 2):
            blocks = []
            off = 0
            for n in range(c.top_degree + 1):
                m = n + k
                if 0 <= m <= d.top_degree:
                    h = self.hom(n, m)
                    if h.module.ngens:
                        blocks.append((n, h, off))
                        off += h.module.ngens
            self.blocks[k] = blocks
            self.modules[k] = direct_sum([h.module for _, h, _ in blocks], self.ring)
        self.D = {k: self._differential(k) for k in (0, 1, 2)}

    def hom(self, n: int, m: int) -> HomModule:
        key = (n, m)
        h = self._hom.get(key)
        if h is None:
            h = hom_module(self.c.term(n), self.d.term(m))
            self._hom[key] = h
        return h

    def _offset(self, k: int, n: int) -> int | None:
        for bn, _, off in self.blocks[k]:
            if bn == n:
                return off
        return None

    def _differential(self, k: int) -> ModuleMap:
        src, tgt = self.modules[k], self.modules[k - 1]
        cols = []
        sign = -1 if k % 2 else 1
        for n, h, off in self.blocks[k]:
            for j in range(h.module.ngens):
                unit = tuple(1 if i == j else 0 for i in range(h.module.ngens))
                phi = h.to_map(unit)
                vec = [0] * tgt.ngens
                # d o phi_n lands in Hom(c_n, d_{n+k-1})
                o = self._offset(k - 1, n)
                if o is not None:
                    img = self.d.d(n + k) @ phi
                    for i, v in enumerate(self.hom(n, n + k - 1).from_map(img)):
                        vec[o + i] += v
                # -(-1)^k phi_n o d_{n+1} lands in Hom(c_{n+1}, d_{n+k})
                o = self._offset(k - 1, n + 1)
                if o is not None:
                    img = phi @ self.c.d(n + 1)
                    for i, v in enumerate(self.hom(n + 1, n + k).from_map(img)):
                        vec[o + i] -= sign * v
                cols.append(vec)
        return ModuleMap.from_columns(src, tgt, cols, check=False)

    def element_to_maps(self, k: int, vec: Sequence[int]) -> dict[int, ModuleMap]:
        out = {}
        for n, h, off in self.blocks[k]:
            out[n] = h.to_map(vec[off:off + h.module.ngens])
        return out

    def maps_to_element(self, k: int, maps: dict[int, ModuleMap]) -> tuple[int, ...]:
        vec = [0] * self.modules[k].ngens
        for n, h, off in self.blocks[k]:
            f = maps.get(n)
            if f is not None:
                for i, v in enumerate(h.from_map(f)):
                    vec[off + i] = v
        return tuple(vec)

    def chain_map(self, vec: Sequence[int]) -> ChainMap:
        maps = self.element_to_maps(0, vec)
        comps = [maps.get(n, ModuleMap.zero(self.c.term(n), self.d.term(n)))
                 for n in range(self.c.top_degree + 1)]
        return ChainMap(self.c, self.d, comps, check=False)

    def homotopy_components(self, vec: Sequence[int]) -> list[ModuleMap]:
        maps = self.element_to_maps(1, vec)
        return [maps.get(n, ModuleMap.zero(self.c.term(n), self.d.term(n + 1)))
                for n in range(self.c.top_degree + 1)]

    def element_of(self, f: ChainMap) -> tuple[int, ...]:
        return self.maps_to_element(0, {n: f.component(n) for n in range(self.c.top_degree + 1)})


def solve_nullhomotopy(f: ChainMap, hom: HomComplex | None = None) -> list[ModuleMap] | None:
    """Components H_n with f = dH + Hd, or None. Exact over any ring."""
    hom = hom or HomComplex(f.source, f.target)
    vec = hom.element_of(f)
    pre = hom.D[1].preimage(vec)
    if pre is None:
        return None
    return hom.homotopy_components(pre)


def is_nullhomotopic(f: ChainMap) -> bool:
    return solve_nullhomotopy(f) is not None


def homotopy_between(f: ChainMap, g: ChainMap, hom: HomComplex | None = None) -> ChainHomotopy | None:
    comps = solve_nullhomotopy(f - g, hom)
    if comps is None:
        return None
    return ChainHomotopy(f, g, comps, check=True)


@dataclass
class HomotopyClasses:
    """[source, target] as a module, with conversion to and from chain maps.

    When the original source was not degreewise free, `source` is a free
    resolution and `replacement` is the quasi-isomorphism source -> original.
    """

    group: FgModule
    hom: HomComplex
    homology: Subquotient
    replacement: ChainMap | None = None

    @property
    def source(self) -> ChainComplex:
        return self.hom.c

    @property
    def target(self) -> ChainComplex:
        return self.hom.d

    def to_map(self, coords: Sequence[int]) -> ChainMap:
        vec = self.homology.representative(coords)
        return self.hom.chain_map(vec)

    def classify(self, f: ChainMap) -> tuple[int, ...]:
        """Coordinates of the class of f: source -> target."""
        vec = self.hom.element_of(f)
        cls = self.homology.project(vec)
        if cls is None:
            raise ComplexError("not a chain map")
        return self.group.coords(cls)

    def classify_original(self, f: ChainMap) -> tuple[int, ...]:
        """Class of a map out of the original (unreplaced) source."""
        if self.replacement is None:
            return self.classify(f)
        return self.classify(f @ self.replacement)

    def elements(self):
        return self.group.elements()

    def zero(self) -> tuple[int, ...]:
        return (0,) * self.group.rank


def homotopy_classes(c: ChainComplex, d: ChainComplex, derived: bool = True,
                     resolution_top: int | None = None) -> HomotopyClasses:
    """[c, d]. With derived=True a non-free c is first replaced by a free
    resolution truncated just above the top degree of d (or at resolution_top)."""
    replacement = None
    if derived and not c.is_free():
        top = max(c.top_degree, d.top_degree) + 1
        if resolution_top is not None:
            top = max(top, resolution_top)
        q, replacement = free_resolution(c, top)
        c = q
    hom = HomComplex(c, d)
    sq = Subquotient(hom.D[1], hom.D[0], hom.modules[0])
    return HomotopyClasses(sq.module, hom, sq, replacement)


# ----------------------------------------------------------------------------
# Constructions


def _stack_rows(blocks: list[list[ExactMatrix | None]], row_sizes, col_sizes, ring) -> ExactMatrix:
    from .exactalg import block_matrix
    d = {}
    for i, row in enumerate(blocks):
        for j, b in enumerate(row):
            if b is not None:
                d[(i, j)] = b
    return block_matrix(ring, row_sizes, col_sizes, d)


def direct_sum_complex(cs: Sequence[ChainComplex]) -> ChainComplex:
    ring = cs[0].ring
    top = max(c.top_degree for c in cs)
    terms = [direct_sum([c.term(n) for c in cs], ring) for n in range(top + 1)]
    from .exactalg import block_diag
    diffs = []
    for n in range(1, top + 1):
        mat = block_diag([c.d(n).matrix for c in cs], ring)
        diffs.append(ModuleMap(terms[n], terms[n - 1], mat, check=False))
    return ChainComplex(ring, terms, diffs, check=False)


def mapping_cone(f: ChainMap) -> tuple[ChainComplex, ChainMap, ChainMap]:
    """cone_n = target_n + source_{n-1}, d(t, s) = (dt + f s, -ds).

    Returns the cone, the inclusion of the target and the projection onto
    the suspension source.shift(1)."""
    s, t = f.source, f.target
    ring = s.ring
    top = max(t.top_degree, s.top_degree + 1)
    terms = [direct_sum([t.term(n), s.term(n - 1)], ring) for n in range(top + 1)]
    diffs = []
    for n in range(1, top + 1):
        rs = [t.term(n - 1).ngens, s.term(n - 2).ngens]
        cs_ = [t.term(n).ngens, s.term(n - 1).ngens]
        mat = _stack_rows([[t.d(n).matrix, f.component(n - 1).matrix],
                           [None, (-s.d(n - 1)).matrix]], rs, cs_, ring)
        diffs.append(ModuleMap(terms[n], terms[n - 1], mat, check=False))
    cone = ChainComplex(ring, terms, diffs, check=False)
    incl = []
    for n in range(t.top_degree + 1):
        a, b = t.term(n).ngens, s.term(n - 1).ngens
        rows = [[1 if i == j else 0 for j in range(a)] for i in range(a)] + [[0] * a for _ in range(b)]
        incl.append(ModuleMap(t.term(n), terms[n], ExactMatrix(ring, a + b, a, rows), check=False))
    inclusion = ChainMap(t, cone, incl, check=False)
    susp = s.shift(1)
    proj = []
    for n in range(top + 1):
        a, b = t.term(n).ngens, s.term(n - 1).ngens
        rows = [[0] * a + [1 if i == j else 0 for j in range(b)] for i in range(b)]
        proj.append(ModuleMap(terms[n], susp.term(n), ExactMatrix(ring, b, a + b, rows), check=False))
    projection = ChainMap(cone, susp.with_top(max(top, susp.top_degree)), proj, check=False)
    return cone, inclusion, projection


def base_change(c: ChainComplex, target_ring: RingSpec) -> ChainComplex:
    """Degreewise tensor with the target ring (identity when the rings agree)."""
    if target_ring == c.ring:
        return c
    if not c.ring.is_integers:
        raise ValueError("base change starts from a complex over Z")
    terms = [FgModule(target_ring, t.ngens, t.relations.over(target_ring)) for t in c.terms]
    diffs = [ModuleMap(terms[k + 1], terms[k], d.matrix.over(target_ring), check=False)
             for k, d in enumerate(c.diffs)]
    return ChainComplex(target_ring, terms, diffs, check=False)


def base_change_map(f: ChainMap, target_ring: RingSpec, source: ChainComplex | None = None,
                    target: ChainComplex | None = None) -> ChainMap:
    src = source or base_change(f.source, target_ring)
    tgt = target or base_change(f.target, target_ring)
    comps = [ModuleMap(src.term(n), tgt.term(n), f.component(n).matrix.over(target_ring), check=False)
             for n in range(f.source.top_degree + 1)]
    return ChainMap(src, tgt, comps, check=False)


def restrict_to_integers(c: ChainComplex) -> ChainComplex:
    """A Z/m complex viewed as a complex of Z-modules."""
    if c.ring.is_integers:
        return c
    m = c.ring.modulus
    terms = []
    for t in c.terms:
        cols = [col for col in t.relations.lift().columns()]
        cols += [tuple(m if k == i else 0 for k in range(t.ngens)) for i in range(t.ngens)]
        terms.append(FgModule(ZZ, t.ngens, ExactMatrix.from_columns(ZZ, cols, t.ngens)))
    diffs = [ModuleMap(terms[k + 1], terms[k], d.matrix.lift(), check=False) for k, d in enumerate(c.diffs)]
    return ChainComplex(ZZ, terms, diffs, check=False)


def postnikov_section(c: ChainComplex, n: int) -> tuple[ChainComplex, ChainMap]:
    """p_i = c_i for i <= n+1, p_{n+2} = Z_{n+1}(c) included into c_{n+1}."""
    ring = c.ring
    if n + 1 > c.top_degree:
        p = c
        return p, ChainMap.identity(c)
    z, incl = c.cycles(n + 1)
    terms = list(c.terms[:n + 2]) + [z]
    diffs = list(c.diffs[:n + 1]) + [incl]
    p = ChainComplex(ring, terms, diffs, check=False).trimmed()
    comps = [ModuleMap.identity(c.term(i)) for i in range(n + 2)]
    if c.top_degree >= n + 2:
        comps.append(c.d(n + 2).lift_through(incl))
    comps = comps[:p.top_degree + 1]
    r = ChainMap(c, p, comps, check=False)
    return p, r


def k_invariant(c: ChainComplex, n: int) -> tuple[ChainComplex, ChainMap]:
    """e = (B_{n+1} -> Z_{n+1}) in degrees n+3, n+2 and k: P_n c -> e,
    the identity Z_{n+1} -> Z_{n+1} in degree n+2."""
    ring = c.ring
    p, r = postnikov_section(c, n)
    zero = FgModule.zero(ring)
    if p.top_degree < n + 2:
        z = zero
        b, b_incl = zero, ModuleMap.zero(zero, zero)
    else:
        z = p.term(n + 2)
        if c.top_degree >= n + 2:
            boundary = r.component(n + 2)
            b, b_incl, _ = boundary.image()
        else:
            b, b_incl = zero, ModuleMap.zero(zero, z)
    terms = {n + 2: z, n + 3: b}
    diffs = {n + 3: b_incl}
    e = ChainComplex.from_terms(ring, terms, diffs, check=False)
    comps = [ModuleMap.zero(p.term(i), e.term(i)) for i in range(p.top_degree + 1)]
    if p.top_degree >= n + 2:
        comps[n + 2] = ModuleMap.identity(z)
    k = ChainMap(p, e, comps, check=False)
    return e, k


def free_resolution(c: ChainComplex, top: int) -> tuple[ChainComplex, ChainMap]:
    """Free complex q with a degreewise surjection q -> c that is a
    quasi-isomorphism below degree `top` (q is cut off at `top`).

    q_n is free on generators of {(x, y) in q_{n-1} + c_n : dx = 0, x = dy in c}.
    """
    ring = c.ring
    qterms: list[FgModule] = []
    qdiffs: list[ModuleMap] = []
    qmaps: list[ModuleMap] = []
    for n in range(top + 1):
        cn = c.term(n)
        if n == 0:
            gens = [(None, v) for v in cn.generator_vectors()]
        else:
            qprev = qterms[n - 1]
            qpp = qterms[n - 2] if n >= 2 else FgModule.zero(ring)
            src = direct_sum([qprev, cn], ring)
            tgt = direct_sum([qpp, c.term(n - 1)], ring)
            a, b = qprev.ngens, cn.ngens
            dq = qdiffs[n - 2].matrix if n >= 2 else ExactMatrix.zero(ring, 0, a)
            qm = qmaps[n - 1].matrix
            dc = c.d(n).matrix
            mat = _stack_rows([[dq, None], [qm, -dc]], [qpp.ngens, c.term(n - 1).ngens], [a, b], ring)
            f = ModuleMap(src, tgt, mat, check=False)
            kmod, kincl = f.kernel()
            gens = []
            for j in range(kmod.ngens):
                v = kincl.matrix.column(j)
                gens.append((v[:a], v[a:]))
        q = FgModule.free(ring, len(gens))
        qterms.append(q)
        qmaps.append(ModuleMap.from_columns(q, cn, [y for _, y in gens], check=False))
        if n >= 1:
            qdiffs.append(ModuleMap.from_columns(q, qterms[n - 1], [x for x, _ in gens], check=False))
    qc = ChainComplex(ring, qterms, qdiffs, check=False)
    return qc, ChainMap(qc, c, qmaps, check=False)


# ----------------------------------------------------------------------------
# Homotopy equivalences


@dataclass
class HomotopyEquivalence:
    f: ChainMap
    g: ChainMap
    H: ChainHomotopy   # g f ~ id_c
    K: ChainHomotopy   # f g ~ id_d


def canonicalize(c: ChainComplex) -> tuple[ChainComplex, ChainMap, ChainMap]:
    """Complex with canonical term presentations and inverse chain isos."""
    ring = c.ring
    pres = [canonical_presentation(t) for t in c.terms]
    terms = [p[0] for p in pres]
    diffs = [pres[n - 1][1] @ c.d(n) @ pres[n][2] for n in range(1, c.top_degree + 1)]
    cc = ChainComplex(ring, terms, diffs, check=False)
    to = ChainMap(c, cc, [p[1] for p in pres], check=False)
    frm = ChainMap(cc, c, [p[2] for p in pres], check=False)
    return cc, to, frm


def _inverse_int(mat: list[list[int]]) -> list[list[int]]:
    n = len(mat)
    snf = snf_data(mat, n, n, left=True, right=True, chain=False)
    if snf.rank != n or any(d != 1 for d in snf.diag):
        raise ArithmeticError("matrix is not unimodular")
    # A = U^-1 D V^-1 with D = I, so A^-1 = V U
    u = [[row.get(k, 0) for k in range(n)] for row in snf.u_rows]
    v = [[0] * n for _ in range(n)]
    for j, col in enumerate(snf.v_cols):
        for k, x in col.items():
            v[k][j] = x
    return [[sum(v[i][k] * u[k][j] for k in range(n)) for j in range(n)] for i in range(n)]


def _matmul(a, b):
    if not a:
        return []
    inner = len(b)
    cols = len(b[0]) if b else 0
    return [[sum(a[i][k] * b[k][j] for k in range(inner)) for j in range(cols)] for i in range(len(a))]


@dataclass
class MinimalModel:
    """A free Z-complex split as S^-1 d S = elementary blocks, and its minimal model."""

    complex: ChainComplex          # canonical free complex
    basis: list[list[list[int]]]   # S_n, columns are the adapted basis
    pieces: list[tuple[int, int, int, int]]  # (degree, kind, index_hi, index_lo)
    model: ChainComplex
    to_model: ChainMap
    from_model: ChainMap
    homotopy: ChainHomotopy        # from_model o to_model ~ id


def _adapted_bases(c: ChainComplex):
    """Bases S_n of Z^{c_n} with S_{n-1}^-1 d_n S_n elementary."""
    top = c.top_degree
    ranks = c.ranks()
    mats = [[list(r) for r in c.d(n).matrix.data] for n in range(top + 1)]
    # S_n with the first z_n columns spanning the cycles
    bases, zdims = [], []
    for n in range(top + 1):
        r = ranks[n]
        if n == 0 or r == 0:
            ker = [tuple(1 if i == j else 0 for i in range(r)) for j in range(r)] if n == 0 else []
            if n > 0 and r == 0:
                ker = []
        else:
            ker = integer_kernel(mats[n], ranks[n - 1], r)
        z = len(ker)
        if r == 0:
            bases.append([])
            zdims.append(0)
            continue
        if z == 0:
            s = [[1 if i == j else 0 for j in range(r)] for i in range(r)]
        else:
            kmat = [[ker[j][i] for j in range(z)] for i in range(r)]
            snf = snf_data(kmat, r, z, left=True, right=True, chain=False)
            uinv = [[0] * r for _ in range(r)]
            for j, col in enumerate(snf.uinv_cols):
                for k, v in col.items():
                    uinv[k][j] = v
            # first z columns of U^-1 span K V (the cycles), the rest a complement
            s = uinv
        bases.append(s)
        zdims.append(z)
    # make each d_n: W_n -> Z_{n-1} diagonal
    diag = {}
    for n in range(1, top + 1):
        r, z = ranks[n], zdims[n]
        w = r - z
        zp = zdims[n - 1]
        if w == 0 or ranks[n - 1] == 0:
            continue
        inv_prev = _inverse_int(bases[n - 1])
        full = _matmul(inv_prev, _matmul(mats[n], [row[z:] for row in bases[n]]))
        block = full[:zp]
        snf = snf_data(block, zp, w, left=True, right=True, chain=True)
        # new W_n basis: S_n[:, z:] V ; new Z_{n-1} basis: S_{n-1}[:, :zp] U^-1
        v = [[0] * w for _ in range(w)]
        for j, col in enumerate(snf.v_cols):
            for k, x in col.items():
                v[k][j] = x
        uinv = [[0] * zp for _ in range(zp)]
        for j, col in enumerate(snf.uinv_cols):
            for k, x in col.items():
                uinv[k][j] = x
        wnew = _matmul([row[z:] for row in bases[n]], v)
        for i, row in enumerate(bases[n]):
            row[z:] = wnew[i]
        znew = _matmul([row[:zp] for row in bases[n - 1]], uinv)
        for i, row in enumerate(bases[n - 1]):
            row[:zp] = znew[i]
        diag[n] = list(snf.diag)
    return bases, zdims, diag


def minimal_model(c: ChainComplex) -> MinimalModel:
    """Split a free Z-complex into Z[k] and (Z -a-> Z)[k+1, k] pieces and drop
    the contractible ones (a = 1)."""
    if not c.ring.is_integers:
        raise ValueError("minimal models are computed over Z")
    if not c.is_free():
        raise ValueError("minimal models need degreewise free complexes")
    cc, to_c, from_c = canonicalize(c)
    top = cc.top_degree
    bases, zdims, diag = _adapted_bases(cc)
    ranks = cc.ranks()
    # pieces in degree n: torsion pairs (n+1 -> n) with a > 1, then free cycles
    kept = {n: [] for n in range(top + 1)}    # basis vector indices kept in degree n
    model_ranks = [0] * (top + 1)
    model_diag = {}
    pieces = []
    contract = {}  # degree n cycle index -> degree n+1 index, for a = 1
    for n in range(top + 1):
        z = zdims[n]
        hit = diag.get(n + 1, [])
        for i in range(z):
            if i < len(hit):
                a = hit[i]
                hi = zdims[n + 1] + i
                if a == 1:
                    contract[(n, i)] = hi
                else:
                    pieces.append((n, a, hi, i))
            else:
                pieces.append((n, 0, -1, i))
    # order: per degree, torsion pieces by a then free
    pieces.sort(key=lambda p: (p[0], 0 if p[1] else 1, p[1], p[3]))
    index = {}
    for n, a, hi, lo in pieces:
        index[(n, lo)] = model_ranks[n]
        model_ranks[n] += 1
        if a:
            index[(n + 1, hi)] = model_ranks[n + 1]
            model_ranks[n + 1] += 1
    # a torsion pair contributes a degree n+1 generator; recount in a stable order
    model_ranks = [0] * (top + 2)
    index = {}
    for n in range(top + 2):
        for p in pieces:
            if p[0] == n:
                index[(n, p[3])] = model_ranks[n]
                model_ranks[n] += 1
        for p in pieces:
            if p[0] == n - 1 and p[1]:
                index[(n, p[2])] = model_ranks[n]
                model_ranks[n] += 1
    while len(model_ranks) > 1 and model_ranks[-1] == 0:
        model_ranks.pop()
    mtop = len(model_ranks) - 1
    mats = []
    for n in range(1, mtop + 1):
        m = [[0] * model_ranks[n] for _ in range(model_ranks[n - 1])]
        for p in pieces:
            if p[0] == n - 1 and p[1]:
                m[index[(n - 1, p[3])]][index[(n, p[2])]] = p[1]
        mats.append(m)
    model = ChainComplex.free(ZZ, model_ranks, mats, check=True)
    # maps between cc and the model via the adapted bases
    to_comps, from_comps, h_comps = [], [], []
    invs = [_inverse_int(b) if b else [] for b in bases]
    for n in range(top + 1):
        r = ranks[n]
        mr = model.term(n).ngens
        # projection: coordinates in the adapted basis, keep indexed vectors
        proj = [[0] * r for _ in range(mr)]
        incl = [[0] * mr for _ in range(r)]
        for (deg, idx), pos in index.items():
            if deg != n:
                continue
            proj[pos] = list(invs[n][idx])
            for i in range(r):
                incl[i][pos] = bases[n][i][idx]
        to_comps.append(ModuleMap(cc.term(n), model.term(n), ExactMatrix(ZZ, mr, r, proj), check=False))
        from_comps.append(ModuleMap(model.term(n), cc.term(n), ExactMatrix(ZZ, r, mr, incl), check=False))
        # homotopy: contractible cycle z_i (degree n) -> matching w (degree n+1)
        rn1 = ranks[n + 1] if n + 1 <= top else 0
        h = [[0] * r for _ in range(rn1)]
        for (deg, i), hi in contract.items():
            if deg != n:
                continue
            # h = S_{n+1} e_hi e_i^T S_n^-1
            for a_ in range(rn1):
                sa = bases[n + 1][a_][hi]
                if sa:
                    for b_ in range(r):
                        h[a_][b_] += sa * invs[n][i][b_]
        h_comps.append(ModuleMap(cc.term(n), cc.term(n + 1), ExactMatrix(ZZ, rn1, r, h), check=False))
    to_model = ChainMap(cc, model, to_comps, check=True)
    from_model = ChainMap(model, cc, from_comps, check=True)
    ident = ChainMap.identity(cc)
    homotopy = ChainHomotopy(ident, from_model @ to_model, h_comps, check=True)
    # transport back to the original presentation
    to_orig = to_model @ to_c
    from_orig = from_c @ from_model
    h_orig = [from_c.component(n + 1) @ h_comps[n] @ to_c.component(n) for n in range(top + 1)]
    hom = ChainHomotopy(ChainMap.identity(c), from_orig @ to_orig, h_orig, check=True)
    return MinimalModel(cc, bases, pieces, model, to_orig, from_orig, hom)


def _model_key(mm: MinimalModel):
    return (tuple(mm.model.ranks()), tuple(tuple(map(tuple, d.matrix.data)) for d in mm.model.diffs))


def _homotopy_reverse(h: ChainHomotopy) -> ChainHomotopy:
    """From id ~ gf to gf ~ id."""
    return ChainHomotopy(h.g, h.f, [-x for x in h.components], check=False)


def find_homotopy_equivalence(c: ChainComplex, d: ChainComplex) -> HomotopyEquivalence | None:
    """f: c -> d, g: d -> c with homotopies g f ~ id and f g ~ id, or None.

    Over Z both complexes must be degreewise free; the answer comes from
    their minimal models. Over Z/m the (finite) space of homotopy classes
    c -> d is searched exhaustively; for each candidate f with H_*(f) iso the
    inverse is found by solving the linear conditions g f ~ id and f g ~ id.
    """
    if c.ring != d.ring:
        raise ValueError("ring mismatch")
    if c.ring.is_integers:
        if not (c.is_free() and d.is_free()):
            raise ValueError("over Z both complexes must be degreewise free")
        if [h for h in _trim_forms(c)] != [h for h in _trim_forms(d)]:
            return None
        mc, md = minimal_model(c), minimal_model(d)
        if _model_key(mc) != _model_key(md):
            return None
        mdl_c, mdl_d = mc.model, md.model
        top = max(c.top_degree, d.top_degree)
        ident = ChainMap(mdl_c, mdl_d, [ModuleMap.identity(t) for t in mdl_c.terms], check=False)
        ident_back = ChainMap(mdl_d, mdl_c, [ModuleMap.identity(t) for t in mdl_d.terms], check=False)
        f = _retarget(md.from_model @ ident @ mc.to_model, c, d)
        g = _retarget(mc.from_model @ ident_back @ md.to_model, d, c)
        # g f = from_c to_c ~ id ; f g = from_d to_d ~ id
        H = ChainHomotopy(g @ f, ChainMap.identity(c), [-x for x in mc.homotopy.components], check=True)
        K = ChainHomotopy(f @ g, ChainMap.identity(d), [-x for x in md.homotopy.components], check=True)
        return HomotopyEquivalence(f, g, H, K)
    return _search_equivalence(c, d)


def _retarget(f: ChainMap, source: ChainComplex, target: ChainComplex) -> ChainMap:
    comps = []
    for n in range(source.top_degree + 1):
        m = f.component(n).matrix if n <= f.source.top_degree else None
        if m is None or m.shape != (target.term(n).ngens, source.term(n).ngens):
            m = ExactMatrix.zero(source.ring, target.term(n).ngens, source.term(n).ngens)
        comps.append(ModuleMap(source.term(n), target.term(n), m, check=False))
    return ChainMap(source, target, comps, check=True)


def _trim_forms(c: ChainComplex):
    forms = c.homology_forms()
    while len(forms) > 1 and forms[-1] == (0, ()):
        forms.pop()
    return forms


def _induced_on_classes(src: HomotopyClasses, dst: HomotopyClasses, op) -> ModuleMap:
    cols = []
    for j in range(src.group.rank):
        unit = tuple(1 if i == j else 0 for i in range(src.group.rank))
        cols.append(dst.group.element(dst.classify(op(src.to_map(unit)))))
    gsrc = src.group.canonical_module()
    return ModuleMap.from_columns(gsrc, dst.group, cols, check=True)


def _search_equivalence(c: ChainComplex, d: ChainComplex) -> HomotopyEquivalence | None:
    if not (c.is_finite() and d.is_finite()):
        raise ValueError("search needs finite terms")
    if _trim_forms(c) != _trim_forms(d):
        return None
    cd = homotopy_classes(c, d, derived=False)
    dc = homotopy_classes(d, c, derived=False)
    cc = homotopy_classes(c, c, derived=False)
    dd = homotopy_classes(d, d, derived=False)
    id_c = cc.group.element(cc.classify(ChainMap.identity(c)))
    id_d = dd.group.element(dd.classify(ChainMap.identity(d)))
    top = max(c.top_degree, d.top_degree)
    for coords in cd.elements():
        f = cd.to_map(coords)
        if not all(f.induced(n).is_iso() for n in range(top + 1)):
            continue
        # g -> g f and g -> f g are homomorphisms [d, c] -> [c, c], [d, d]
        pre = _induced_on_classes(dc, cc, lambda g: g @ f)
        post = _induced_on_classes(dc, dd, lambda g: f @ g)
        g0 = pre.preimage(id_c)
        if g0 is None:
            continue
        kmod, kincl = pre.kernel()
        rest = post @ kincl
        target = tuple(a - b for a, b in zip(id_d, post.apply(g0)))
        k = rest.preimage(target)
        if k is None:
            continue
        gvec = tuple(a + b for a, b in zip(g0, kincl.apply(k)))
        g = dc.to_map(dc.group.coords(gvec))
        H = homotopy_between(g @ f, ChainMap.identity(c), cc.hom)
        K = homotopy_between(f @ g, ChainMap.identity(d), dd.hom)
        if H is None or K is None:
            raise ComplexError("class arithmetic and homotopy solver disagree")
        return HomotopyEquivalence(f, g, H, K)
    return None


def lift_through_resolution(h: ChainMap, q: ChainMap) -> ChainMap:
    """g: X -> Q with q g = h, for X degreewise free and q: Q -> C the
    surjective quasi-isomorphism built by free_resolution.

    In each degree g(x) is a preimage of (g(dx), h(x)) under (d, q)."""
    x, res, c = h.source, q.source, q.target
    ring = x.ring
    if not x.is_free():
        raise ValueError("the source must be degreewise free")
    if res.top_degree < x.top_degree:
        raise ValueError("resolution is truncated below the source")
    comps = []
    for n in range(x.top_degree + 1):
        prev = res.term(n - 1)
        pair = direct_sum([prev, c.term(n)], ring)
        rows = [prev.ngens, c.term(n).ngens]
        mat = _stack_rows([[res.d(n).matrix], [q.component(n).matrix]], rows, [res.term(n).ngens], ring)
        dq = ModuleMap(res.term(n), pair, mat, check=False)
        cols = []
        dx = x.d(n).matrix.lift()
        hm = h.component(n).matrix.lift()
        for j in range(x.term(n).ngens):
            lower = comps[n - 1].apply(dx.column(j)) if n >= 1 else ()
            y = tuple(lower) + hm.column(j)
            pre = dq.preimage(y)
            if pre is None:
                raise ComplexError(f"no lift in degree {n}")
            cols.append(pre)
        comps.append(ModuleMap.from_columns(x.term(n), res.term(n), cols, check=False))
    return ChainMap(x, res, comps, check=True)
