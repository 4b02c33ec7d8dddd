"""Exact-sequence machinery.

* `ExactSequenceReport`: a finite sequence of modules and maps with a
  recomputable exactness verdict at every joint.
* `comparison_les`: Gamma_n -> H_n x -> H_n Tx -> Gamma_{n-1} for base change
  T, with Gamma the homology of the mapping cocone of the unit x -> Tx.
* `mod_p_homotopy`: homotopy classes out of a mod-p Moore complex, with the
  short exact sequence tensor -> mod-p group -> Tor checked explicitly.
* `spiral_sequence`: the spiral long exact sequence of a bisimplicial
  module, built from the external Moore chains C_n, cycles Z_n and the maps
  j: Z_n -> C_n and d_0: C_{n+1} -> Z_n on internal homotopy.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Sequence

from .chain import ChainComplex, ChainMap, base_change, homotopy_classes, mapping_cone, restrict_to_integers
from .exactalg import (ExactMatrix, FgModule, ModuleMap, RingSpec, Subquotient, ZZ)
from .simplicial import (BisimplicialModule, DoubleComplex, SimplicialMap, SimplicialModule, TruncationError,
                         _joint_kernel, conjugate_bisimplicial, gamma2, moore_complex, normalized_map,
                         random_free_complex, random_unimodular)


# ----------------------------------------------------------------------------
# exact sequences


@dataclass
class JointVerdict:
    index: int
    label: str
    exact: bool
    composite_zero: bool
    kernel_form: tuple
    image_form: tuple

    def to_json(self) -> dict:
        return {"index": self.index, "label": self.label, "exact": self.exact,
                "composite_zero": self.composite_zero,
                "kernel": _form_json(self.kernel_form), "image": _form_json(self.image_form)}


def _form_json(form) -> dict:
    return {"free": form[0], "torsion": list(form[1])}


def _form_str(form) -> str:
    free, tors = form
    parts = ["Z"] * free + [f"Z/{d}" for d in tors]
    return " + ".join(parts) if parts else "0"


def exact_at(f: ModuleMap | None, g: ModuleMap | None, middle: FgModule) -> tuple[bool, bool, tuple, tuple]:
    """(exact, composite_zero, kernel form, image form) at the middle of
    A -f-> B -g-> C; a missing map stands for a zero map."""
    if g is None:
        kmod, kincl = middle, ModuleMap.identity(middle)
    else:
        kmod, kincl = g.kernel()
    if f is None or f.source.ngens == 0:
        image_form = (0, ())
        contained = True
        zero = True
    else:
        im, _, _ = f.image()
        image_form = im.canonical_form()
        zero = g is None or (g @ f).is_zero()
        contained = True
    covered = True
    for v in kmod.generator_vectors():
        y = kincl.apply(v)
        if middle.is_zero_element(y):
            continue
        if f is None or f.preimage(y) is None:
            covered = False
            break
    return zero and contained and covered, zero, kmod.canonical_form(), image_form


@dataclass
class ExactSequenceReport:
    terms: list[FgModule]
    maps: list[ModuleMap]                 # maps[k]: terms[k] -> terms[k+1]
    labels: list[str]
    verdicts: list[JointVerdict]
    metadata: dict = field(default_factory=dict)

    @classmethod
    def build(cls, terms: Sequence[FgModule], maps: Sequence[ModuleMap], labels: Sequence[str],
              zero_left: bool = False, zero_right: bool = False, metadata: dict | None = None
              ) -> "ExactSequenceReport":
        terms, maps = list(terms), list(maps)
        if len(maps) != len(terms) - 1:
            raise ValueError("a sequence of k terms needs k - 1 maps")
        for k, f in enumerate(maps):
            if f.source.ngens != terms[k].ngens or f.target.ngens != terms[k + 1].ngens:
                raise ValueError(f"map {k} does not connect terms {k} and {k + 1}")
        verdicts = []
        for k, m in enumerate(terms):
            has_in = k >= 1 or zero_left
            has_out = k <= len(terms) - 2 or zero_right
            if not (has_in and has_out):
                continue
            f = maps[k - 1] if k >= 1 else None
            g = maps[k] if k <= len(terms) - 2 else None
            exact, zero, kf, imf = exact_at(f, g, m)
            verdicts.append(JointVerdict(k, labels[k], exact, zero, kf, imf))
        return cls(terms, maps, list(labels), verdicts, dict(metadata or {}))

    @property
    def exact(self) -> bool:
        return all(v.exact for v in self.verdicts)

    def recompute(self) -> "ExactSequenceReport":
        zl = bool(self.verdicts) and self.verdicts[0].index == 0
        zr = bool(self.verdicts) and self.verdicts[-1].index == len(self.terms) - 1
        return ExactSequenceReport.build(self.terms, self.maps, self.labels, zl, zr, self.metadata)

    def to_json(self) -> dict:
        return {"terms": [{"label": l, "form": _form_json(t.canonical_form())}
                          for l, t in zip(self.labels, self.terms)],
                "verdicts": [v.to_json() for v in self.verdicts],
                "exact": self.exact, "metadata": self.metadata}

    def table(self) -> list[str]:
        """One row per term: label, canonical form, verdict at that joint."""
        by_index = {v.index: v for v in self.verdicts}
        rows = []
        for k, (l, t) in enumerate(zip(self.labels, self.terms)):
            v = by_index.get(k)
            verdict = "-" if v is None else ("exact" if v.exact else "NOT EXACT")
            rows.append(f"{l:<24} {_form_str(t.canonical_form()):<24} {verdict}")
        return rows


def _descend(f: ModuleMap, q: ModuleMap) -> ModuleMap:
    """The map h on q.target with h o q = f, for q surjective."""
    cols = []
    for v in q.target.generator_vectors():
        pre = q.preimage(v)
        cols.append(f.apply(pre))
    return ModuleMap.from_columns(q.target, f.target, cols)


def _homology_map(sq_a: Subquotient, sq_b: Subquotient, linear) -> ModuleMap:
    """Map between subquotients induced by a linear map of representatives."""
    cols = []
    for rep in sq_a.representatives():
        cls = sq_b.project(linear(rep))
        if cls is None:
            raise ValueError("induced map does not preserve cycles")
        cols.append(cls)
    return ModuleMap.from_columns(sq_a.module, sq_b.module, cols)


# ----------------------------------------------------------------------------
# comparison sequence for base change


@dataclass(frozen=True)
class BaseChange:
    """Z -> Z/modulus on chain complexes; modulus 0 is the identity functor."""
    modulus: int = 0

    def __call__(self, x: ChainComplex) -> ChainComplex:
        """T x viewed as a complex of Z-modules."""
        if self.modulus == 0:
            return x
        return restrict_to_integers(base_change(x, RingSpec.mod(self.modulus)))

    def unit(self, x: ChainComplex) -> ChainMap:
        tx = self(x)
        comps = [ModuleMap(x.term(n), tx.term(n), ExactMatrix.identity(ZZ, x.term(n).ngens), check=False)
                 for n in range(x.top_degree + 1)]
        return ChainMap(x, tx, comps, check=False)


@dataclass
class GammaGroups:
    groups: dict

    def __getitem__(self, n: int) -> FgModule:
        g = self.groups.get(n)
        return g if g is not None else FgModule.zero(ZZ)

    def forms(self) -> dict:
        return {n: g.canonical_form() for n, g in sorted(self.groups.items())}


@dataclass
class ComparisonData:
    gamma: GammaGroups
    report: ExactSequenceReport
    s: dict          # Gamma_n -> H_n x
    h: dict          # H_n x -> H_n T x
    boundary: dict   # H_n T x -> Gamma_{n-1}


def comparison_les(x: ChainComplex, t: BaseChange, degree_range: tuple[int, int] | None = None
                   ) -> ComparisonData:
    """Gamma_n = H_{n+1}(cone of the unit x -> Tx), the homology of the cocone."""
    if not x.ring.is_integers:
        raise ValueError("comparison_les expects a complex over Z")
    eta = t.unit(x)
    tx = eta.target
    cone, incl, proj = mapping_cone(eta)
    lo, hi = degree_range if degree_range is not None else (0, x.top_degree)
    gamma, s_maps, h_maps, b_maps = {}, {}, {}, {}
    for n in range(lo - 1, hi + 1):
        gamma[n] = cone.homology_data(n + 1).module
    a_of = lambda n: tx.term(n).ngens
    for n in range(lo, hi + 1):
        split = a_of(n + 1)
        s_maps[n] = _homology_map(cone.homology_data(n + 1), x.homology_data(n), lambda r, k=split: r[k:])
        h_maps[n] = eta.induced(n)
        b_maps[n] = incl.induced(n)
    terms, maps, labels = [], [], []
    for n in range(hi, lo - 1, -1):
        if terms:
            maps.append(b_maps[n + 1])
        terms += [gamma[n], h_maps[n].source, h_maps[n].target]
        labels += [f"Gamma_{n}", f"H_{n}(x)", f"H_{n}(Tx)"]
        maps += [s_maps[n], h_maps[n]]
    maps.append(b_maps[lo])
    terms.append(gamma[lo - 1])
    labels.append(f"Gamma_{lo - 1}")
    report = ExactSequenceReport.build(terms, maps, labels, zero_left=(hi >= x.top_degree),
                                       zero_right=(lo == 0),
                                       metadata={"construction": "comparison", "modulus": t.modulus})
    return ComparisonData(GammaGroups(gamma), report, s_maps, h_maps, b_maps)


def comparison_ladder(f: ChainMap, t: BaseChange) -> list[bool]:
    """Commutativity of the squares between the comparison sequences of
    f.source and f.target, in the order (s, h, boundary) per degree."""
    x, y = f.source, f.target
    ex, ey = t.unit(x), t.unit(y)
    tf = ChainMap(ex.target, ey.target,
                  [ModuleMap(ex.target.term(n), ey.target.term(n), f.component(n).matrix, check=False)
                   for n in range(x.top_degree + 1)], check=False)
    cx, ix, _ = mapping_cone(ex)
    cy, iy, _ = mapping_cone(ey)
    cone_map = []
    for n in range(cx.top_degree + 1):
        a, b = ex.target.term(n).ngens, x.term(n - 1).ngens
        a2, b2 = ey.target.term(n).ngens, y.term(n - 1).ngens
        from .exactalg import block_diag
        mat = block_diag([tf.component(n).matrix, f.component(n - 1).matrix], ZZ)
        cone_map.append(ModuleMap(cx.term(n), cy.term(n), mat, check=False))
    cf = ChainMap(cx, cy, cone_map, check=False)
    lx, ly = comparison_les(x, t), comparison_les(y, t)
    out = []
    for n in range(x.top_degree + 1):
        g = _homology_map(cx.homology_data(n + 1), cy.homology_data(n + 1), cf.component(n + 1).apply)
        hx = _homology_map(x.homology_data(n), y.homology_data(n), f.component(n).apply)
        htx = _homology_map(ex.target.homology_data(n), ey.target.homology_data(n), tf.component(n).apply)
        out.append((ly.s[n] @ g).equals(hx @ lx.s[n]))
        out.append((ly.h[n] @ hx).equals(htx @ lx.h[n]))
        gb = _homology_map(cx.homology_data(n), cy.homology_data(n), cf.component(n).apply)
        out.append((ly.boundary[n] @ htx).equals(gb @ lx.boundary[n]))
    return out


# ----------------------------------------------------------------------------
# mod-p homotopy


def moore_object(p: int, k: int) -> ChainComplex:
    """Z -p-> Z in degrees k+1, k."""
    ranks = [0] * k + [1, 1]
    mats = [ExactMatrix.zero(ZZ, ranks[i], ranks[i + 1]) for i in range(k)] + [[[p]]]
    return ChainComplex.free(ZZ, ranks, mats)


@dataclass
class ModPResult:
    group: FgModule
    tensor: FgModule
    tor: FgModule
    report: ExactSequenceReport


def _integer_normalization(x: SimplicialModule) -> ChainComplex:
    n = moore_complex(x).normalized
    return n if x.ring.is_integers else restrict_to_integers(n)


def mod_p_homotopy(x: SimplicialModule, p: int, k: int) -> ModPResult:
    """[M, Sigma N(x)] with M the mod-p Moore complex in degrees k+1, k."""
    if k + 1 > x.level:
        raise TruncationError(f"mod-p homotopy in degree {k} needs truncation level >= {k + 1}, have {x.level}")
    y = _integer_normalization(x).shift(1)
    m = moore_object(p, k)
    hc = homotopy_classes(m, y)
    group = hc.group
    top = y.homology_data(k + 1)            # pi_k x
    h = top.module
    rel = [list(c) for c in h.relations.lift().columns()] + \
          [[p if i == j else 0 for i in range(h.ngens)] for j in range(h.ngens)]
    tensor = FgModule(ZZ, h.ngens, ExactMatrix.from_columns(ZZ, rel, h.ngens))
    cols = []
    for v in tensor.generator_vectors():
        c = top.representative(h.coords(v))
        comps = [ModuleMap.zero(m.term(n), y.term(n)) for n in range(k + 1)]
        comps.append(ModuleMap.from_columns(m.term(k + 1), y.term(k + 1), [c], check=False))
        f = ChainMap(m, y, comps, check=True)
        cols.append(group.element(hc.classify(f)))
    alpha = ModuleMap.from_columns(tensor, group, cols)
    low = y.homology_data(k)               # pi_{k-1} x
    hl = low.module
    times_p = ModuleMap(hl, hl, ExactMatrix.identity(ZZ, hl.ngens).scale(p), check=False)
    tor, tor_incl = times_p.kernel()
    cols = []
    for v in group.generator_vectors():
        f = hc.to_map(group.coords(v))
        cls = low.project(f.component(k).matrix.column(0))
        cols.append(tor_incl.preimage(cls))
    beta = ModuleMap.from_columns(group, tor, cols)
    report = ExactSequenceReport.build([tensor, group, tor], [alpha, beta],
                                       [f"pi_{k}(x) (x) Z/{p}", f"pi_{k}(x; Z/{p})", f"Tor(pi_{k - 1}(x), Z/{p})"],
                                       zero_left=True, zero_right=True,
                                       metadata={"construction": "mod-p", "p": p, "k": k})
    return ModPResult(group, tensor, tor, report)


# ----------------------------------------------------------------------------
# spiral sequence


class NotFibrantError(ValueError):
    pass


def _restrict(x: SimplicialModule, incls: Sequence[ModuleMap]) -> SimplicialModule:
    """The simplicial submodule with levels incls[q].source."""
    levels = [i.source for i in incls]
    faces = [[]] + [[(f @ incls[q]).lift_through(incls[q - 1]) for f in x.faces[q]]
                    for q in range(1, x.level + 1)]
    degens = [[(s @ incls[q]).lift_through(incls[q + 1]) for s in x.degens[q]] for q in range(x.level)]
    return SimplicialModule(x.ring, levels, faces, degens, check=False)


@dataclass
class _Stage:
    chains: SimplicialModule          # C_n
    cycles: SimplicialModule          # Z_n
    chain_incl: list                  # C_n(q) -> X_{n,q}
    cycle_incl: list                  # Z_n(q) -> C_n(q)


@dataclass
class SpiralReport:
    sections: dict                    # internal degree i -> ExactSequenceReport
    h0_iso: dict                      # i -> bool
    loop_iso: dict                    # (n, i) -> bool | None (None: lift unavailable)
    fibrant: bool
    natural: dict = field(default_factory=dict)     # (n, i) -> pi-natural module

    @property
    def exact(self) -> bool:
        return all(r.exact for r in self.sections.values())

    @property
    def ok(self) -> bool:
        checked = [v for v in self.loop_iso.values() if v is not None]
        return self.exact and all(self.h0_iso.values()) and all(checked)

    def to_json(self) -> dict:
        return {"fibrant": self.fibrant, "exact": self.exact,
                "h0_iso": {str(i): v for i, v in sorted(self.h0_iso.items())},
                "loop_iso": {f"{n},{i}": v for (n, i), v in sorted(self.loop_iso.items())},
                "sections": {str(i): r.to_json() for i, r in sorted(self.sections.items())}}


def _stages(x: BisimplicialModule, top: int) -> list[_Stage]:
    out = []
    L = x.internal_level
    for n in range(top + 1):
        row = x.rows[n]
        if n == 0:
            ci = [ModuleMap.identity(m) for m in row.levels[:L + 1]]
            zi = [ModuleMap.identity(m) for m in row.levels[:L + 1]]
        else:
            ci, zi = [], []
            for q in range(L + 1):
                c, inc = _joint_kernel([f.components[q] for f in x.ext_faces[n][1:]], row.levels[q])
                z, zinc = (x.ext_faces[n][0].components[q] @ inc).kernel()
                ci.append(inc)
                zi.append(zinc)
        chains = _restrict(_cut_level(row, L), ci)
        cycles = _restrict(chains, zi)
        out.append(_Stage(chains, cycles, ci, zi))
    return out


def _cut_level(x: SimplicialModule, level: int) -> SimplicialModule:
    if x.level == level:
        return x
    return SimplicialModule(x.ring, x.levels[:level + 1], x.faces[:level + 1], x.degens[:level], check=False)


def spiral_sequence(x: BisimplicialModule, degree_range: tuple[int, int] | None = None,
                    strict: bool = False) -> SpiralReport:
    """pi-natural_n = Coker(pi_* C_{n+1} -> pi_* Z_n), pi_n pi_* = external
    homology of pi_* C, and the loop term Omega pi-natural_{n-1} taken as
    Ker(pi_* Z_n -> pi_* C_n), which the connecting map of Z_n -> C_n -> Z_{n-1}
    identifies with Omega Coker(pi_* C_n -> pi_* Z_{n-1}).

    With strict=True a d_0 that is not surjective on internal normalized
    degrees >= 1 raises NotFibrantError; otherwise the report records it."""
    P, L = x.external_level, x.internal_level
    if P < 2 or L < 1:
        raise TruncationError(f"spiral sequence needs external level >= 2 and internal level >= 1, "
                              f"have {P}, {L}")
    N = P - 1
    lo_i, hi_i = degree_range if degree_range is not None else (0, L - 1)
    if hi_i > L - 1:
        raise TruncationError(f"internal degree {hi_i} needs internal level >= {hi_i + 1}, have {L}")
    st = _stages(x, P)
    j_maps, d_maps = [], [None]
    for n in range(P + 1):
        j_maps.append(normalized_map(SimplicialMap(st[n].cycles, st[n].chains, st[n].cycle_incl, check=False)))
    for n in range(1, P + 1):
        comps = []
        for q in range(L + 1):
            f = x.ext_faces[n][0].components[q] @ st[n].chain_incl[q]
            g = st[n - 1].chain_incl[q] @ st[n - 1].cycle_incl[q]
            comps.append(f.lift_through(g))
        d_maps.append(normalized_map(SimplicialMap(st[n].chains, st[n - 1].cycles, comps, check=False)))
    fibrant = all(d_maps[n].component(q).is_surjective() for n in range(1, P + 1) for q in range(1, L + 1))
    if strict and not fibrant:
        raise NotFibrantError("d_0: C_n -> Z_{n-1} is not surjective on internal normalized degrees >= 1")

    sections, h0, loop, natural = {}, {}, {}, {}
    for i in range(lo_i, hi_i + 1):
        jh = {n: j_maps[n].induced(i) for n in range(P + 1)}            # pi_i Z_n -> pi_i C_n
        dh = {n: d_maps[n].induced(i) for n in range(1, P + 1)}         # pi_i C_n -> pi_i Z_{n-1}
        kern = {n: jh[n].kernel() for n in range(N + 1)}
        nat = {n: dh[n + 1].cokernel() for n in range(N + 1)}
        hom = {}
        for n in range(N + 1):
            into = jh[n] @ dh[n + 1]
            out = jh[n - 1] @ dh[n] if n >= 1 else None
            hom[n] = Subquotient(into, out, jh[n].target)
        terms, maps, labels = [], [], []
        zero = FgModule.zero(x.ring)
        for n in range(N, -1, -1):
            kmod, kinc = kern[n]
            nmod, nproj = nat[n]
            if not terms:
                terms.append(kmod)
                labels.append(f"Omega pi#_{n - 1}")
            maps.append(nproj @ kinc)
            terms.append(nmod)
            labels.append(f"pi#_{n}")
            sq = hom[n]
            lift_h = ModuleMap.from_columns(jh[n].source, sq.module,
                                            [sq.project(jh[n].apply(v)) for v in jh[n].source.generator_vectors()])
            h_n = _descend(lift_h, nproj)
            maps.append(h_n)
            terms.append(sq.module)
            labels.append(f"pi_{n} pi_*")
            if n >= 1:
                kmod2, kinc2 = kern[n - 1]
                cols = [kinc2.preimage(dh[n].apply(rep)) for rep in sq.representatives()]
                maps.append(ModuleMap.from_columns(sq.module, kmod2, cols))
                terms.append(kmod2)
            else:
                maps.append(ModuleMap.zero(sq.module, zero))
                terms.append(zero)
            labels.append(f"Omega pi#_{n - 2}")
            natural[(n, i)] = nmod
            if n == 0:
                h0[i] = h_n.is_iso()
        # the trailing zero term closes the sequence after pi_0 pi_*
        sections[i] = ExactSequenceReport.build(terms, maps, labels, zero_right=True,
                                                metadata={"construction": "spiral", "internal_degree": i})
        for n in range(1, N + 1):
            if i + 1 <= L - 1:
                loop[(n, i)] = _loop_iso(st, j_maps, d_maps, n, i, kern[n])
    return SpiralReport(sections, h0, loop, fibrant, natural)


def _loop_iso(st, j_maps, d_maps, n, i, kern_n) -> bool | None:
    """Connecting map pi_{i+1} Z_{n-1} -> pi_i Z_n: an isomorphism from
    Coker(pi_{i+1} C_n -> pi_{i+1} Z_{n-1}) onto Ker(pi_i Z_n -> pi_i C_n)?"""
    nz_prev = d_maps[n].target           # N Z_{n-1}
    nc = d_maps[n].source                # N C_n
    nz = j_maps[n].source                # N Z_n
    src = nz_prev.homology_data(i + 1)
    tgt = nz.homology_data(i)
    dn, jn = d_maps[n].component(i + 1), j_maps[n].component(i)
    cols = []
    for rep in src.representatives():
        c = dn.preimage(rep)
        if c is None:
            return None
        b = nc.d(i + 1).apply(c)
        z = jn.preimage(b)
        if z is None:
            return False
        cols.append(tgt.project(z))
    conn = ModuleMap.from_columns(src.module, tgt.module, cols)
    kmod, kinc = kern_n
    # image of the connecting map = Ker j
    image_ok = exact_at(conn, j_maps[n].induced(i), tgt.module)[0]
    # kernel of the connecting map = image of d_0
    kernel_ok = exact_at(d_maps[n].induced(i + 1), conn, src.module)[0]
    return image_ok and kernel_ok


# ----------------------------------------------------------------------------
# random inputs


def random_double_complex(rng: random.Random, ring: RingSpec, ext_top: int, int_top: int,
                          max_rank: int = 3) -> DoubleComplex:
    """Internal degree 0 is a random free complex; internal degrees >= 1 are
    exact sums of elementary pieces Z -1-> Z, joined to the degree below by
    random chain maps at odd internal degrees."""
    terms, dh, dv = {}, {}, {}
    base = random_free_complex(rng, ring, ext_top, max_rank=max_rank)
    for p in range(ext_top + 1):
        terms[(p, 0)] = base.term(p)
        if p >= 1:
            dh[(p, 0)] = base.d(p)
    pieces = {}
    for q in range(1, int_top + 1):
        # piece a spans external degrees ks[a] + 1 (top) and ks[a] (bottom)
        ks, load = [], [0] * (ext_top + 1)
        for k in range(ext_top):
            for _ in range(rng.randint(0, 2)):
                if load[k] < max_rank and load[k + 1] < max_rank:
                    ks.append(k)
                    load[k] += 1
                    load[k + 1] += 1
        basis = {p: [(a, "top") for a, k in enumerate(ks) if k + 1 == p] +
                    [(a, "bot") for a, k in enumerate(ks) if k == p] for p in range(ext_top + 1)}
        pieces[q] = basis
        for p in range(ext_top + 1):
            terms[(p, q)] = FgModule.free(ring, len(basis[p]))
        for p in range(1, ext_top + 1):
            cols = []
            for a, role in basis[p]:
                col = [0] * len(basis[p - 1])
                if role == "top":
                    col[basis[p - 1].index((a, "bot"))] = 1
                cols.append(col)
            dh[(p, q)] = ModuleMap.from_columns(terms[(p, q)], terms[(p - 1, q)], cols, check=False)

    def horizontal(p, q, vec):
        if p == 0:
            return []
        return list(dh[(p, q)].apply(vec))

    for q in range(1, int_top + 1, 2):
        basis = pieces[q]
        # a chain map from the row at q to the row at q - 1 is fixed by the
        # image r of each piece top; the bottom goes to dh(r)
        images = {}
        for p in range(ext_top + 1):
            for a, role in basis[p]:
                if role == "top":
                    images[a] = [rng.randint(-1, 1) for _ in range(terms[(p, q - 1)].ngens)]
        for p in range(ext_top + 1):
            cols = []
            for a, role in basis[p]:
                cols.append(images[a] if role == "top" else horizontal(p + 1, q - 1, images[a]))
            dv[(p, q)] = ModuleMap.from_columns(terms[(p, q)], terms[(p, q - 1)], cols, check=False)
    dc = DoubleComplex(ring, ext_top, int_top, terms, dh, dv)
    dc.validate()
    return dc


def random_bisimplicial(rng: random.Random, ring: RingSpec, ext_level: int, int_level: int,
                        max_rank: int = 3, ext_top: int | None = None, int_top: int | None = None
                        ) -> BisimplicialModule:
    """Gamma in both directions of `random_double_complex`, conjugated by
    random automorphisms; fibrant in the external direction by construction."""
    ext_top = min(ext_level, 2) if ext_top is None else ext_top
    int_top = min(int_level, 2) if int_top is None else int_top
    dc = random_double_complex(rng, ring, ext_top, int_top, max_rank)
    x = gamma2(dc, ext_level, int_level, check=False)
    autos = {}
    for p in range(ext_level + 1):
        for q in range(int_level + 1):
            m = x.module(p, q)
            a, inv = random_unimodular(rng, m.ngens, steps=min(2 * m.ngens, 12))
            am = ExactMatrix(ring, m.ngens, m.ngens, a) if m.ngens else ExactMatrix.zero(ring, 0, 0)
            im = ExactMatrix(ring, m.ngens, m.ngens, inv) if m.ngens else ExactMatrix.zero(ring, 0, 0)
            autos[(p, q)] = (ModuleMap(m, m, am, check=False), ModuleMap(m, m, im, check=False))
    return conjugate_bisimplicial(x, autos)


def externally_constant(y: SimplicialModule, ext_level: int) -> BisimplicialModule:
    """Every external level is y and every external operator the identity."""
    ident = SimplicialMap.identity(y)
    faces = [[]] + [[ident] * (p + 1) for p in range(1, ext_level + 1)]
    degens = [[ident] * (p + 1) for p in range(ext_level)]
    return BisimplicialModule([y] * (ext_level + 1), faces, degens, check=True)
