"""Eilenberg-Mac Lane objects, cohomology as homotopy classes into them, and
the correspondence between module extensions and degree-raising classes.

An EM object E(M, n) is a complex with homology M in degree n and nothing
else. Over Z it is the two-term canonical presentation F1 -> F0 placed in
degrees n+1, n. Over Z/m a non-free M has no two-term free realization, so
the realization is M[n] itself and maps out of it go through the free
resolution replacement of `chain.homotopy_classes`.

Every EM object carries a `cover`: a surjection from its degree-n term onto
M whose kernel is the image of the differential. Covers are what make the
extension <-> class construction explicit.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Sequence

from .chain import (ChainComplex, ChainMap, HomotopyClasses, direct_sum_complex, homotopy_classes,
                    is_nullhomotopic, lift_through_resolution, mapping_cone)
from .exactalg import ExtensionClass, FgModule, ModuleMap, canonical_presentation


@dataclass
class EMObject:
    module: FgModule
    dimension: int
    realization: ChainComplex
    cover: ModuleMap          # realization_n -> module, surjective, kernel = image of d

    @property
    def ring(self):
        return self.module.ring

    def fundamental(self) -> ModuleMap:
        """The isomorphism module -> H_n(realization)."""
        n = self.dimension
        sq = self.realization.homology_data(n)
        cols = []
        for v in self.module.generator_vectors():
            t = self.cover.preimage(v)
            cols.append(sq.project(t))
        return ModuleMap.from_columns(self.module, sq.module, cols)

    def to_json(self) -> dict:
        return {"module": self.module.to_json(), "dimension": self.dimension,
                "ring": str(self.ring)}


def em_object(m: FgModule, n: int) -> EMObject:
    if n < 0:
        raise ValueError("dimension must be non-negative")
    ring = m.ring
    if ring.is_integers:
        mc, _, frm = canonical_presentation(m)
        inv = mc.invariants
        f0 = FgModule.free(ring, len(inv))
        torsion = [i for i, d in enumerate(inv) if d != 0]
        f1 = FgModule.free(ring, len(torsion))
        cols = [[inv[i] if k == i else 0 for k in range(len(inv))] for i in torsion]
        d = ModuleMap.from_columns(f1, f0, cols, check=False)
        terms = {n: f0}
        diffs = {}
        if torsion:
            terms[n + 1] = f1
            diffs[n + 1] = d
        real = ChainComplex.from_terms(ring, terms, diffs)
        cover = ModuleMap(f0, m, frm.matrix, check=False)
    else:
        real = ChainComplex.sphere(ring, n, m)
        cover = ModuleMap.identity(m)
    return EMObject(m, n, real, cover)


def em_map(f: ModuleMap, a: EMObject, b: EMObject) -> ChainMap:
    """Chain map E(a) -> E(b) inducing f: a.module -> b.module on H_n."""
    if a.dimension != b.dimension:
        raise ValueError("EM objects of different dimensions")
    n = a.dimension
    ra, rb = a.realization, b.realization
    bottom = (f @ a.cover).lift_through(b.cover)
    comps = []
    for k in range(ra.top_degree + 1):
        if k == n:
            comps.append(bottom)
        elif k == n + 1 and rb.top_degree >= n + 1:
            comps.append((bottom @ ra.d(n + 1)).lift_through(rb.d(n + 1)))
        else:
            comps.append(ModuleMap.zero(ra.term(k), rb.term(k)))
    return ChainMap(ra, rb, comps)


def classifying_object(lam: FgModule) -> ChainComplex:
    """B(Lambda): the constant object on lam, i.e. lam in degree 0."""
    return ChainComplex.sphere(lam.ring, 0, lam)


def extended_em_object(m: FgModule, n: int, lam: FgModule) -> ChainComplex:
    """E(M, n) over B(lam), represented as the direct sum."""
    return direct_sum_complex([em_object(m, n).realization, classifying_object(lam)])


def cohomology_classes(x: ChainComplex, em: EMObject, resolution_top: int | None = None) -> HomotopyClasses:
    return homotopy_classes(x, em.realization, resolution_top=resolution_top)


def cohomology_group(x: ChainComplex, m: FgModule, n: int) -> FgModule:
    return cohomology_classes(x, em_object(m, n)).group


# ----------------------------------------------------------------------------
# classes


@dataclass
class CohomologyClass:
    classes: HomotopyClasses
    target: EMObject
    coords: tuple[int, ...]
    original_source: ChainComplex | None = None
    source_em: EMObject | None = None     # set when the source is itself an EM object

    @property
    def source(self) -> ChainComplex:
        return self.original_source if self.original_source is not None else self.classes.source

    def representative(self) -> ChainMap:
        """A chain map out of the (free) replacement of the source."""
        return self.classes.to_map(self.coords)

    def is_zero(self) -> bool:
        return self.classes.group.is_zero_element(self.classes.group.element(self.coords))

    def __add__(self, other: "CohomologyClass") -> "CohomologyClass":
        g = self.classes.group
        s = g.coords(tuple(a + b for a, b in zip(g.element(self.coords), g.element(other.coords))))
        return CohomologyClass(self.classes, self.target, s, self.original_source, self.source_em)

    def to_json(self) -> dict:
        blob = json.dumps(self.source.to_json(), sort_keys=True).encode()
        return {"source_sha256": hashlib.sha256(blob).hexdigest(),
                "target": self.target.to_json(),
                "group": list(self.classes.group.invariants),
                "coords": list(self.coords)}


def classes_of(x: ChainComplex, em: EMObject) -> list[CohomologyClass]:
    hc = cohomology_classes(x, em)
    return [CohomologyClass(hc, em, tuple(c), x) for c in hc.elements()]


def em_classes(source: EMObject, target: EMObject) -> list[CohomologyClass]:
    """All classes in [E(source), E(target)], tagged with their source EM object."""
    hc = cohomology_classes(source.realization, target)
    return [CohomologyClass(hc, target, tuple(c), source.realization, source) for c in hc.elements()]


def class_of_map(f: ChainMap, em: EMObject, classes: HomotopyClasses | None = None) -> CohomologyClass:
    """Class of f: x -> em.realization (x the original or replaced source)."""
    hc = classes or cohomology_classes(f.source, em)
    coords = hc.classify(f) if f.source is hc.source else hc.classify_original(f)
    return CohomologyClass(hc, em, coords, f.source)


def _source_cover(hc: HomotopyClasses, em: EMObject) -> ModuleMap:
    """source_n -> M for the (possibly replaced) source of hc."""
    n = em.dimension
    if hc.replacement is None:
        return em.cover
    return em.cover @ hc.replacement.component(n)


def extension_to_class(ext: ExtensionClass, n: int, source_em: EMObject | None = None,
                       target_em: EMObject | None = None,
                       resolution_top: int | None = None) -> CohomologyClass:
    """Class in [E(quotient, n), E(sub, n+1)] of 0 -> sub -> total -> quotient -> 0.

    The cover S_n -> quotient is lifted to the total module, precomposed with
    d: S_{n+1} -> S_n and factored through the sub module; the result is a
    cycle of degree n+1 which lifts through the target cover."""
    src = source_em or em_object(ext.quotient, n)
    tgt = target_em or em_object(ext.sub, n + 1)
    hc = cohomology_classes(src.realization, tgt, resolution_top)
    s = hc.source
    eps = _source_cover(hc, src)
    phi = eps.lift_through(ext.projection)
    psi = (phi @ s.d(n + 1)).lift_through(ext.inclusion)
    top = psi.lift_through(tgt.cover)
    t = tgt.realization
    comps = [top if k == n + 1 else ModuleMap.zero(s.term(k), t.term(k))
             for k in range(s.top_degree + 1)]
    f = ChainMap(s, t, comps)
    return CohomologyClass(hc, tgt, hc.classify(f), src.realization, src)


def class_to_extension(psi: CohomologyClass, source_em: EMObject | None = None) -> ExtensionClass:
    """0 -> J' -> H_{n+1}(cone f) -> J'' -> 0 for a representative f of psi.

    The cone in degree n+1 is the cocone in degree n, so this is the homology
    of the fiber of f."""
    tgt = psi.target
    n = tgt.dimension - 1
    hc = psi.classes
    source_em = source_em or psi.source_em
    if source_em is None:
        raise ValueError("the class does not record its source EM object")
    f = psi.representative()
    s, t = f.source, f.target
    cone, _, _ = mapping_cone(f)
    sq = cone.homology_data(n + 1)
    j = sq.module
    a = t.term(n + 1).ngens
    eps = _source_cover(hc, source_em)
    # J -> J'': S_n component of a representative, then the cover
    proj_cols = []
    for rep in sq.representatives():
        proj_cols.append(eps.apply(rep[a:]))
    projection = ModuleMap.from_columns(j, source_em.module, proj_cols)
    # J' -> J: lift through the target cover, include as (t, 0)
    incl_cols = []
    for v in tgt.module.generator_vectors():
        tv = tgt.cover.preimage(v)
        incl_cols.append(sq.project(tuple(tv) + (0,) * s.term(n).ngens))
    inclusion = ModuleMap.from_columns(tgt.module, j, incl_cols)
    ext = ExtensionClass(tgt.module, source_em.module, j, inclusion, projection)
    ext.validate()
    return ext


def is_allowable(ext: ExtensionClass, khat: CohomologyClass, n: int | None = None) -> bool:
    """True when psi o khat is nullhomotopic, psi the class of ext one
    dimension above khat's target."""
    em = khat.target
    d = em.dimension
    if n is not None and d != n + 2:
        raise ValueError(f"dimension mismatch: khat has dimension {d}, expected {n + 2}")
    if not em.module.isomorphic(ext.quotient):
        raise ValueError("dimension mismatch: khat coefficients differ from the extension quotient")
    if em.module.ngens != ext.quotient.ngens or em.module.relations != ext.quotient.relations:
        raise ValueError("khat coefficients must use the presentation of the extension quotient")
    em = EMObject(ext.quotient, d, em.realization, ModuleMap(em.realization.term(d), ext.quotient,
                                                                em.cover.matrix, check=False))
    if khat.is_zero():
        return True
    psi = extension_to_class(ext, d, source_em=em, resolution_top=khat.classes.source.top_degree + 1)
    if psi.is_zero():
        return True
    k = khat.representative()
    p = psi.representative()
    if psi.classes.replacement is not None:
        k = lift_through_resolution(k, psi.classes.replacement)
    return is_nullhomotopic(p @ k)


def class_coordinates(classes: Sequence[CohomologyClass]) -> list[tuple[int, ...]]:
    return [c.coords for c in classes]
