"""Finitely generated modules as cokernels of relation matrices, and maps.

Every module over Z/m is treated internally as a Z-module whose relations
are the lifted relation columns plus m times each generator. The Smith form
of that integer matrix gives canonical coordinates, and everything else
(membership, kernels, images, cokernels) is computed in those coordinates.
"""
from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass
from math import prod
from typing import Iterator, Sequence

from .matrix import ExactMatrix, RingSpec, ZZ, block_diag
from .snf import IntegerSolver, integer_kernel, snf_data


class IllDefinedMap(ValueError):
    pass


class NotLiftable(ValueError):
    pass


@dataclass(frozen=True)
class _Canonical:
    invariants: tuple[int, ...]        # 0 = free summand of Z; over Z/m free summands carry m
    to_rows: tuple[dict, ...]          # canonical coordinate i = sum to_rows[i][k] x_k
    from_cols: tuple[tuple[int, ...], ...]  # canonical generator i in original coordinates


class FgModule:
    """Module over `ring` with `ngens` generators and relation columns."""

    __slots__ = ("ring", "ngens", "relations", "has_relations", "_canon", "_lock", "__weakref__")

    def __init__(self, ring: RingSpec, ngens: int, relations: ExactMatrix | None = None):
        if relations is None:
            relations = ExactMatrix.zero(ring, ngens, 0)
        if relations.rows != ngens:
            raise ValueError(f"relations have {relations.rows} rows for {ngens} generators")
        if relations.ring != ring:
            relations = relations.over(ring)
        self.ring = ring
        self.ngens = ngens
        self.relations = relations
        self.has_relations = not relations.is_zero()
        self._canon = None
        self._lock = threading.Lock()

    # constructors --------------------------------------------------------

    @classmethod
    def free(cls, ring: RingSpec, n: int) -> "FgModule":
        return cls(ring, n)

    @classmethod
    def zero(cls, ring: RingSpec) -> "FgModule":
        return cls(ring, 0)

    @classmethod
    def cyclic(cls, ring: RingSpec, order: int) -> "FgModule":
        """Z/order (order 0 means the free rank-one module)."""
        if order == 0 or (ring.modulus and order % ring.modulus == 0):
            return cls(ring, 1)
        return cls(ring, 1, ExactMatrix.from_rows(ring, [[order]]))

    @classmethod
    def from_invariants(cls, ring: RingSpec, invariants: Sequence[int]) -> "FgModule":
        """Direct sum of cyclic modules with the given orders (0 = free)."""
        invariants = list(invariants)
        cols = []
        for i, d in enumerate(invariants):
            if d != 0 and not (ring.modulus and d % ring.modulus == 0):
                col = [0] * len(invariants)
                col[i] = d
                cols.append(col)
        rel = ExactMatrix.from_columns(ring, cols, len(invariants))
        return cls(ring, len(invariants), rel)

    # canonical data --------------------------------------------------------

    def zrel_columns(self) -> list[tuple[int, ...]]:
        cols = [c for c in self.relations.lift().columns() if any(c)]
        m = self.ring.modulus
        if m:
            for i in range(self.ngens):
                cols.append(tuple(m if k == i else 0 for k in range(self.ngens)))
        return cols

    @property
    def canon(self) -> _Canonical:
        c = self._canon
        if c is None:
            with self._lock:
                if self._canon is None:
                    self._canon = self._compute_canonical()
                c = self._canon
        return c

    def _compute_canonical(self) -> _Canonical:
        g = self.ngens
        m = self.ring.modulus
        lifted = [c for c in self.relations.lift().columns() if any(c)]
        if not lifted:
            inv = (m,) * g if m else (0,) * g
            ident_rows = tuple({i: 1} for i in range(g))
            zero = [0] * g
            ident_cols = []
            for i in range(g):
                zero[i] = 1
                ident_cols.append(tuple(zero))
                zero[i] = 0
            ident_cols = tuple(ident_cols)
            return _Canonical(inv, ident_rows, ident_cols)
        cols = self.zrel_columns()
        data = [[c[i] for c in cols] for i in range(g)]
        snf = snf_data(data, g, len(cols), left=True, right=False, chain=True)
        diag = list(snf.diag) + [0] * (g - snf.rank)
        keep = [i for i, d in enumerate(diag) if d != 1]
        inv = tuple(diag[i] for i in keep)
        to_rows = tuple(dict(snf.u_rows[i]) for i in keep)
        from_cols = []
        for i in keep:
            vec = [0] * g
            for k, v in snf.uinv_cols[i].items():
                vec[k] = v
            if m:
                vec = [x % m for x in vec]
            from_cols.append(tuple(vec))
        return _Canonical(inv, to_rows, tuple(from_cols))

    @property
    def invariants(self) -> tuple[int, ...]:
        return self.canon.invariants

    @property
    def rank(self) -> int:
        """Number of canonical cyclic summands."""
        return len(self.canon.invariants)

    def canonical_form(self) -> tuple[int, tuple[int, ...]]:
        """(free rank, torsion factors as a divisibility chain)."""
        inv = self.invariants
        full = self.ring.modulus
        free = sum(1 for d in inv if d == full)
        factors = tuple(d for d in inv if d != full)
        return free, factors

    def is_zero(self) -> bool:
        return not self.invariants

    def is_free(self) -> bool:
        return self.canonical_form()[1] == ()

    def is_finite(self) -> bool:
        return self.ring.modulus != 0 or all(d != 0 for d in self.invariants)

    def order(self) -> int | None:
        if not self.is_finite():
            return None
        return prod(self.invariants)

    def isomorphic(self, other: "FgModule") -> bool:
        return self.ring == other.ring and self.canonical_form() == other.canonical_form()

    def describe(self) -> str:
        free, factors = self.canonical_form()
        base = "Z" if self.ring.is_integers else f"Z/{self.ring.modulus}"
        parts = [f"Z/{d}" for d in factors]
        if free:
            parts.append(base if free == 1 else f"{base}^{free}")
        return " + ".join(parts) if parts else "0"

    def __repr__(self):
        return f"FgModule({self.ring}, {self.describe()})"

    # elements --------------------------------------------------------------

    def coords(self, x: Sequence[int]) -> tuple[int, ...]:
        """Canonical coordinates of the element with generator coordinates x."""
        if not self.has_relations:
            m = self.ring.modulus
            return tuple([v % m for v in x]) if m else tuple(x)
        c = self.canon
        out = []
        for d, row in zip(c.invariants, c.to_rows):
            s = 0
            for k, v in row.items():
                s += v * x[k]
            out.append(s % d if d else s)
        return tuple(out)

    def is_zero_element(self, x: Sequence[int]) -> bool:
        return not any(self.coords(x))

    def element(self, coords: Sequence[int]) -> tuple[int, ...]:
        """Generator coordinates of the element with given canonical coordinates."""
        if not self.has_relations:
            return self._reduce(coords)
        vec = [0] * self.ngens
        for c, col in zip(coords, self.canon.from_cols):
            if c:
                for k, v in enumerate(col):
                    vec[k] += c * v
        return self._reduce(vec)

    def _reduce(self, vec) -> tuple[int, ...]:
        m = self.ring.modulus
        return tuple(x % m for x in vec) if m else tuple(vec)

    def elements(self) -> Iterator[tuple[int, ...]]:
        """All elements as canonical coordinate tuples (finite modules only)."""
        if not self.is_finite():
            raise ValueError("module is infinite")
        return itertools.product(*[range(d) for d in self.invariants])

    def generator_vectors(self) -> list[tuple[int, ...]]:
        return [tuple(1 if k == i else 0 for k in range(self.ngens)) for i in range(self.ngens)]

    # derived modules ----------------------------------------------------------

    def canonical_module(self) -> "FgModule":
        return FgModule.from_invariants(self.ring, self.invariants)

    def to_json(self) -> dict:
        return {"generators": self.ngens, "relations": self.relations.to_json()}

    @classmethod
    def from_json(cls, ring: RingSpec, obj: dict) -> "FgModule":
        g = int(obj["generators"])
        rel = obj.get("relations")
        if rel is None:
            return cls(ring, g)
        mat = ExactMatrix.from_json(ring, rel)
        if mat.rows != g:
            raise ValueError(f"relations have {mat.rows} rows but module has {g} generators")
        return cls(ring, g, mat)


def module_from_presentation(rel: ExactMatrix) -> FgModule:
    return FgModule(rel.ring, rel.rows, rel)


def direct_sum(mods: Sequence[FgModule], ring: RingSpec | None = None) -> FgModule:
    mods = list(mods)
    if not mods:
        return FgModule.zero(ring or ZZ)
    ring = mods[0].ring
    rel = block_diag([m.relations for m in mods], ring)
    return FgModule(ring, sum(m.ngens for m in mods), rel)


def _lift_mat(mat: ExactMatrix) -> list[tuple[int, ...]]:
    return list(mat.lift().data)


class ModuleMap:
    """Homomorphism given by a matrix on generators (target.ngens x source.ngens)."""

    __slots__ = ("source", "target", "matrix", "_solver")

    def __init__(self, source: FgModule, target: FgModule, matrix: ExactMatrix, check: bool = True):
        if source.ring != target.ring:
            raise ValueError("ring mismatch")
        if matrix.shape != (target.ngens, source.ngens):
            raise ValueError(f"matrix shape {matrix.shape} does not match "
                             f"{target.ngens}x{source.ngens}")
        if matrix.ring != source.ring:
            matrix = matrix.over(source.ring)
        self.source = source
        self.target = target
        self.matrix = matrix
        self._solver = None
        if check:
            self.check()

    def check(self) -> None:
        lifted = [c for c in self.source.relations.lift().columns() if any(c)]
        if not lifted:
            return
        a = self.matrix.lift()
        for col in lifted:
            img = a.apply(col)
            if not self.target.is_zero_element(img):
                raise IllDefinedMap(f"relation {list(col)} maps to nonzero element {list(img)}")

    # constructors -------------------------------------------------------------

    @classmethod
    def identity(cls, m: FgModule) -> "ModuleMap":
        return cls(m, m, ExactMatrix.identity(m.ring, m.ngens), check=False)

    @classmethod
    def zero(cls, source: FgModule, target: FgModule) -> "ModuleMap":
        return cls(source, target, ExactMatrix.zero(source.ring, target.ngens, source.ngens), check=False)

    @classmethod
    def from_columns(cls, source: FgModule, target: FgModule, columns: Sequence[Sequence[int]],
                     check: bool = True) -> "ModuleMap":
        mat = ExactMatrix.from_columns(source.ring, columns, target.ngens)
        return cls(source, target, mat, check=check)

    # algebra ------------------------------------------------------------------

    def __matmul__(self, other: "ModuleMap") -> "ModuleMap":
        """Composition self after other."""
        if other.target.ngens != self.source.ngens:
            raise ValueError("maps are not composable")
        return ModuleMap(other.source, self.target, self.matrix @ other.matrix, check=False)

    def __add__(self, other: "ModuleMap") -> "ModuleMap":
        return ModuleMap(self.source, self.target, self.matrix + other.matrix, check=False)

    def __sub__(self, other: "ModuleMap") -> "ModuleMap":
        return ModuleMap(self.source, self.target, self.matrix - other.matrix, check=False)

    def __neg__(self) -> "ModuleMap":
        return ModuleMap(self.source, self.target, -self.matrix, check=False)

    def scale(self, c: int) -> "ModuleMap":
        return ModuleMap(self.source, self.target, self.matrix.scale(c), check=False)

    def apply(self, x: Sequence[int]) -> tuple[int, ...]:
        return self.matrix.apply(x)

    def is_zero(self) -> bool:
        if not self.target.has_relations:
            return self.matrix.is_zero()
        a = self.matrix.lift()
        return all(self.target.is_zero_element(a.column(j)) for j in range(a.cols))

    def equals(self, other: "ModuleMap") -> bool:
        if not self.target.has_relations:
            return self.matrix.data == other.matrix.data
        return (self - other).is_zero()

    def canonical_matrix(self) -> list[list[int]]:
        """Matrix in canonical coordinates of source and target."""
        if not self.source.has_relations and not self.target.has_relations:
            return [list(r) for r in self.matrix.data]
        s, t = self.source.canon, self.target.canon
        a = self.matrix.lift()
        cols = []
        for col in s.from_cols:
            cols.append(self.target.coords(a.apply(col)))
        return [[cols[j][i] for j in range(len(cols))] for i in range(len(t.invariants))]

    # subquotients ---------------------------------------------------------

    def kernel(self) -> tuple[FgModule, "ModuleMap"]:
        s_inv = self.source.invariants
        vecs = _kernel_vectors(self)
        kmod = _submodule_of_canonical(self.source.ring, s_inv, vecs)
        from_s = self.source.canon.from_cols
        cols = []
        for v in vecs:
            cols.append(_combine(from_s, v, self.source.ngens))
        raw_incl = ModuleMap.from_columns(kmod, self.source, cols, check=False)
        kc, _, frm = canonical_presentation(kmod)
        return kc, raw_incl @ frm

    def image(self) -> tuple[FgModule, "ModuleMap", "ModuleMap"]:
        """(image, inclusion into target, corestriction from source)."""
        ring = self.source.ring
        vecs = _kernel_vectors(self)
        s_inv = self.source.invariants
        ks = len(s_inv)
        vecs = vecs + [tuple(d if k == j else 0 for k in range(ks)) for j, d in enumerate(s_inv) if d]
        rel = ExactMatrix.from_columns(ring, vecs, ks)
        imod = FgModule(ring, ks, rel)
        a = self.matrix.lift()
        cols = [a.apply(c) for c in self.source.canon.from_cols]
        raw_incl = ModuleMap.from_columns(imod, self.target, cols, check=False)
        to_s = _to_matrix(self.source)
        raw_core = ModuleMap(self.source, imod, to_s, check=False)
        ic, to, frm = canonical_presentation(imod)
        return ic, raw_incl @ frm, to @ raw_core

    def cokernel(self) -> tuple[FgModule, "ModuleMap"]:
        ring = self.source.ring
        t_inv = self.target.invariants
        f = self.canonical_matrix()
        kt = len(t_inv)
        cols = [tuple(f[i][j] for i in range(kt)) for j in range(len(self.source.invariants))]
        for i, b in enumerate(t_inv):
            if b:
                cols.append(tuple(b if k == i else 0 for k in range(kt)))
        cmod = FgModule(ring, kt, ExactMatrix.from_columns(ring, cols, kt))
        raw_proj = ModuleMap(self.target, cmod, _to_matrix(self.target), check=False)
        cc, to, _ = canonical_presentation(cmod)
        return cc, to @ raw_proj

    def is_injective(self) -> bool:
        return not _kernel_vectors(self) or self.kernel()[0].is_zero()

    def is_surjective(self) -> bool:
        return self.cokernel()[0].is_zero()

    def is_iso(self) -> bool:
        return self.is_injective() and self.is_surjective()

    # lifting ----------------------------------------------------------------

    def _get_solver(self):
        if self._solver is None:
            t = self.target
            t_inv = t.invariants
            f = self.canonical_matrix()
            kt = len(t_inv)
            ks = len(self.source.invariants)
            data = [list(f[i]) + [t_inv[i] if k == i else 0 for k in range(kt)] for i in range(kt)]
            self._solver = (IntegerSolver(data, kt, ks + kt), ks)
        return self._solver

    def preimage(self, y: Sequence[int]) -> tuple[int, ...] | None:
        """Some x in generator coordinates with self(x) = y, or None."""
        solver, ks = self._get_solver()
        rhs = self.target.coords(y)
        sol = solver.solve(rhs)
        if sol is None:
            return None
        return self.source.element(sol[:ks])

    def lift_through(self, f: "ModuleMap") -> "ModuleMap":
        """h with f @ h == self, for self: P -> N and f: M -> N."""
        if f.target.ngens != self.target.ngens:
            raise ValueError("lift_through needs a common target")
        cols = []
        a = self.matrix.lift()
        for j in range(self.source.ngens):
            x = f.preimage(a.column(j))
            if x is None:
                raise NotLiftable(f"generator {j} has no preimage")
            cols.append(x)
        return ModuleMap.from_columns(self.source, f.source, cols, check=True)

    def inverse(self) -> "ModuleMap":
        if not self.is_iso():
            raise ValueError("map is not an isomorphism")
        return ModuleMap.identity(self.target).lift_through(self)

    def __repr__(self):
        return f"ModuleMap({self.source.describe()} -> {self.target.describe()}, {self.matrix.shape})"


def _to_matrix(m: FgModule) -> ExactMatrix:
    c = m.canon
    rows = []
    for row in c.to_rows:
        r = [0] * m.ngens
        for k, v in row.items():
            r[k] = v
        rows.append(r)
    return ExactMatrix(m.ring, len(rows), m.ngens, rows)


def _from_matrix(m: FgModule) -> ExactMatrix:
    c = m.canon
    return ExactMatrix.from_columns(m.ring, c.from_cols, m.ngens)


def _combine(cols: Sequence[Sequence[int]], coeffs: Sequence[int], n: int) -> tuple[int, ...]:
    out = [0] * n
    for c, col in zip(coeffs, cols):
        if c:
            for k, v in enumerate(col):
                if v:
                    out[k] += c * v
    return tuple(out)


def _kernel_vectors(f: ModuleMap) -> list[tuple[int, ...]]:
    """Vectors y in canonical source coordinates with f(y) = 0."""
    t_inv = f.target.invariants
    ks = len(f.source.invariants)
    kt = len(t_inv)
    if ks == 0:
        return []
    fm = f.canonical_matrix()
    mods = [(i, b) for i, b in enumerate(t_inv) if b]
    data = [list(fm[i]) + [b if i == k else 0 for k, b in mods] for i in range(kt)]
    basis = integer_kernel(data, kt, ks + len(mods))
    s_inv = f.source.invariants
    out = []
    for v in basis:
        w = tuple((x % d) if d else x for x, d in zip(v[:ks], s_inv))
        if any(w):
            out.append(w)
    # the torsion relations of the source are kernel elements already
    return out


def _submodule_of_canonical(ring: RingSpec, inv: Sequence[int], vecs: list[tuple[int, ...]]) -> FgModule:
    """Module generated by vecs inside the canonical module with invariants inv."""
    r = len(vecs)
    k = len(inv)
    if r == 0:
        return FgModule.zero(ring)
    mods = [(i, d) for i, d in enumerate(inv) if d]
    data = [[vecs[c][i] for c in range(r)] + [d if i == j else 0 for j, d in mods] for i in range(k)]
    rels = [v[:r] for v in integer_kernel(data, k, r + len(mods))]
    rels = [v for v in rels if any(v)]
    return FgModule(ring, r, ExactMatrix.from_columns(ring, rels, r))


def canonical_presentation(m: FgModule) -> tuple[FgModule, ModuleMap, ModuleMap]:
    """(mc, to, frm): mc = direct sum of cyclics, to: m -> mc and frm: mc -> m inverse isos."""
    mc = m.canonical_module()
    to = ModuleMap(m, mc, _to_matrix(m), check=False)
    frm = ModuleMap(mc, m, _from_matrix(m), check=False)
    return mc, to, frm


class Subquotient:
    """ker(g) / im(f) for A -f-> B -g-> C, with the data needed to move
    between B and the quotient."""

    def __init__(self, f: ModuleMap | None, g: ModuleMap | None, middle: FgModule):
        self.middle = middle
        if g is None:
            zc, _, incl = canonical_presentation(middle)
        else:
            zc, incl = g.kernel()
        self.cycles = zc
        self.cycles_inclusion = incl
        if f is None or f.source.ngens == 0:
            into = ModuleMap.zero(FgModule.zero(middle.ring), zc)
        else:
            into = f.lift_through(incl)
        self.module, self.projection = into.cokernel()

    def project(self, y: Sequence[int]) -> tuple[int, ...] | None:
        """Class of a cycle y of the middle module, or None if y is not a cycle."""
        z = self.cycles_inclusion.preimage(y)
        if z is None:
            return None
        return self.projection.apply(z)

    def representative(self, coords: Sequence[int]) -> tuple[int, ...]:
        """A cycle in the middle module representing the class with given coordinates."""
        z = self.projection.preimage(self.module.element(coords))
        return self.cycles_inclusion.apply(z)

    def representatives(self) -> list[tuple[int, ...]]:
        return [self.representative(tuple(1 if i == j else 0 for i in range(self.module.ngens)))
                for j in range(self.module.ngens)]


def map_subquotients(f: ModuleMap):
    """(kernel, inclusion), (image, inclusion), (cokernel, projection)."""
    k = f.kernel()
    im, incl, _ = f.image()
    c = f.cokernel()
    return k, (im, incl), c


def induced_map(sq_a: Subquotient, sq_b: Subquotient, mat: ExactMatrix) -> ModuleMap:
    """Map on subquotients induced by a matrix from sq_a.middle to sq_b.middle."""
    cols = []
    for rep in sq_a.representatives():
        img = mat.apply(rep)
        cls = sq_b.project(img)
        if cls is None:
            raise IllDefinedMap("matrix does not send cycles to cycles")
        cols.append(cls)
    return ModuleMap.from_columns(sq_a.module, sq_b.module, cols, check=True)


def stack_maps(maps: Sequence[ModuleMap], target: FgModule) -> ModuleMap:
    """(f_1, ..., f_k): direct sum of sources -> common target."""
    source = direct_sum([f.source for f in maps], target.ring)
    cols = []
    for f in maps:
        cols.extend(f.matrix.columns())
    return ModuleMap.from_columns(source, target, cols, check=False)


def product_map(maps: Sequence[ModuleMap], source: FgModule) -> ModuleMap:
    """(f_1, ..., f_k): common source -> direct sum of targets."""
    target = direct_sum([f.target for f in maps], source.ring)
    rows = []
    for f in maps:
        rows.extend(f.matrix.data)
    mat = ExactMatrix(source.ring, target.ngens, source.ngens, rows)
    return ModuleMap(source, target, mat, check=False)
