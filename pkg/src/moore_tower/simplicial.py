"""Simplicial and bisimplicial modules, stored up to an explicit truncation level.

Faces and degeneracies are ModuleMaps between presented modules. The Dold-Kan
functor builds levels as sums over surjections [n] -> [k]; a simplicial
operator acts on a summand through the epi-mono factorization of the composite.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

from .chain import ChainComplex, ChainMap
from .exactalg import (ExactMatrix, FgModule, ModuleMap, RingSpec, ZZ, block_matrix,
                       direct_sum, product_map)


class SimplicialError(ValueError):
    pass


class TruncationError(SimplicialError):
    pass


# ----------------------------------------------------------------------------
# monotone maps as tuples


def coface(n: int, i: int) -> tuple[int, ...]:
    """delta^i: [n-1] -> [n], skipping i."""
    return tuple(j if j < i else j + 1 for j in range(n))


def codegeneracy(n: int, j: int) -> tuple[int, ...]:
    """sigma^j: [n+1] -> [n], hitting j twice."""
    return tuple(k if k <= j else k - 1 for k in range(n + 2))


def compose(f: Sequence[int], g: Sequence[int]) -> tuple[int, ...]:
    """f o g."""
    return tuple(f[x] for x in g)


def epi_mono(f: Sequence[int]) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """f = mono o epi; returns (epi, mono) with mono the sorted image."""
    image = sorted(set(f))
    pos = {v: i for i, v in enumerate(image)}
    return tuple(pos[v] for v in f), tuple(image)


def surjections(n: int, k: int) -> list[tuple[int, ...]]:
    """Monotone surjections [n] -> [k], lexicographic."""
    out = []
    for jumps in combinations(range(1, n + 1), k):
        s = set(jumps)
        v, f = 0, [0]
        for t in range(1, n + 1):
            if t in s:
                v += 1
            f.append(v)
        out.append(tuple(f))
    return sorted(out)


# ----------------------------------------------------------------------------


class SimplicialModule:
    """levels[n] for n <= level; faces[n][i]: X_n -> X_{n-1} (n >= 1);
    degens[n][j]: X_n -> X_{n+1} (n < level)."""

    def __init__(self, ring: RingSpec, levels: Sequence[FgModule], faces: Sequence[Sequence[ModuleMap]],
                 degens: Sequence[Sequence[ModuleMap]], check: bool = True):
        self.ring = ring
        self.levels = tuple(levels)
        self.faces = tuple(tuple(f) for f in faces)
        self.degens = tuple(tuple(s) for s in degens)
        if len(self.faces) != len(self.levels) or (self.faces and self.faces[0]):
            raise SimplicialError("faces must be listed per level with none at level 0")
        if len(self.degens) != len(self.levels) - 1:
            raise SimplicialError("degeneracies must be listed for levels 0..N-1")
        self._moore = None
        if check:
            self.validate()

    @property
    def level(self) -> int:
        return len(self.levels) - 1

    def face(self, n: int, i: int) -> ModuleMap:
        return self.faces[n][i]

    def degen(self, n: int, j: int) -> ModuleMap:
        return self.degens[n][j]

    def _need(self, n: int) -> None:
        if n > self.level:
            raise TruncationError(f"degree {n} is above the truncation level {self.level}")

    def validate(self) -> None:
        N = self.level
        for n in range(1, N + 1):
            if len(self.faces[n]) != n + 1:
                raise SimplicialError(f"level {n} needs {n + 1} faces")
            for i, f in enumerate(self.faces[n]):
                if f.source.ngens != self.levels[n].ngens or f.target.ngens != self.levels[n - 1].ngens:
                    raise SimplicialError(f"face (level {n}, {i}) has the wrong shape")
        for n in range(N):
            if len(self.degens[n]) != n + 1:
                raise SimplicialError(f"level {n} needs {n + 1} degeneracies")
            for j, s in enumerate(self.degens[n]):
                if s.source.ngens != self.levels[n].ngens or s.target.ngens != self.levels[n + 1].ngens:
                    raise SimplicialError(f"degeneracy (level {n}, {j}) has the wrong shape")
        for n in range(N + 1):
            for op in (*self.faces[n], *(self.degens[n] if n < N else ())):
                op.check()
        # d_i d_j = d_{j-1} d_i for i < j
        for n in range(2, N + 1):
            for j in range(n + 1):
                for i in range(j):
                    lhs = self.faces[n - 1][i] @ self.faces[n][j]
                    rhs = self.faces[n - 1][j - 1] @ self.faces[n][i]
                    if not lhs.equals(rhs):
                        raise SimplicialError(f"face identity fails at (level {n}, i={i}, j={j})")
        # s_i s_j = s_{j+1} s_i for i <= j
        for n in range(N - 1):
            for j in range(n + 1):
                for i in range(j + 1):
                    lhs = self.degens[n + 1][i] @ self.degens[n][j]
                    rhs = self.degens[n + 1][j + 1] @ self.degens[n][i]
                    if not lhs.equals(rhs):
                        raise SimplicialError(f"degeneracy identity fails at (level {n}, i={i}, j={j})")
        # mixed identities on s_j: X_n -> X_{n+1}
        for n in range(N):
            for j in range(n + 1):
                s = self.degens[n][j]
                for i in range(n + 2):
                    lhs = self.faces[n + 1][i] @ s
                    if i < j:
                        rhs = self.degens[n - 1][j - 1] @ self.faces[n][i]
                    elif i in (j, j + 1):
                        rhs = ModuleMap.identity(self.levels[n])
                    else:
                        rhs = self.degens[n - 1][j] @ self.faces[n][i - 1]
                    if not lhs.equals(rhs):
                        raise SimplicialError(f"mixed identity d_{i} s_{j} fails at (level {n}, i={i}, j={j})")

    def operator(self, theta: Sequence[int], n: int) -> ModuleMap:
        """theta^*: X_n -> X_m for monotone theta: [m] -> [n]."""
        m = len(theta) - 1
        self._need(max(n, m))
        theta = tuple(theta)
        for t in range(m):
            if theta[t] == theta[t + 1]:
                # theta = theta' o sigma^t
                rest = theta[:t + 1] + theta[t + 2:]
                return self.degens[m - 1][t] @ self.operator(rest, n)
        missing = [v for v in range(n + 1) if v not in set(theta)]
        if not missing:
            return ModuleMap.identity(self.levels[n])
        # theta = delta^v o theta''
        v = missing[0]
        rest = tuple(x if x < v else x - 1 for x in theta)
        return self.operator(rest, n - 1) @ self.faces[n][v]

    def __repr__(self):
        return f"SimplicialModule({self.ring}, level {self.level}, [{', '.join(m.describe() for m in self.levels)}])"

    # serialization -------------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "ring": str(self.ring),
            "level": self.level,
            "modules": [m.to_json() for m in self.levels],
            "faces": [[f.matrix.to_json() for f in fs] for fs in self.faces],
            "degeneracies": [[s.matrix.to_json() for s in ss] for ss in self.degens],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SimplicialModule":
        ring = RingSpec.parse(obj["ring"])
        level = int(obj["level"])
        mods = [FgModule.from_json(ring, m) for m in obj["modules"]]
        if len(mods) != level + 1:
            raise SimplicialError(f"level {level} needs {level + 1} modules, got {len(mods)}")
        faces = obj["faces"]
        degs = obj["degeneracies"]
        if len(faces) != level + 1 or len(degs) != level:
            raise SimplicialError("faces/degeneracies lists do not match the level")
        fs = [[]]
        for n in range(1, level + 1):
            row = []
            for i, m in enumerate(faces[n]):
                mat = ExactMatrix.from_json(ring, m)
                if mat.shape != (mods[n - 1].ngens, mods[n].ngens):
                    raise SimplicialError(f"face (level {n}, {i}) has shape {mat.shape}")
                row.append(ModuleMap(mods[n], mods[n - 1], mat, check=False))
            fs.append(row)
        ss = []
        for n in range(level):
            row = []
            for j, m in enumerate(degs[n]):
                mat = ExactMatrix.from_json(ring, m)
                if mat.shape != (mods[n + 1].ngens, mods[n].ngens):
                    raise SimplicialError(f"degeneracy (level {n}, {j}) has shape {mat.shape}")
                row.append(ModuleMap(mods[n], mods[n + 1], mat, check=False))
            ss.append(row)
        return cls(ring, mods, fs, ss, check=True)


class SimplicialMap:
    def __init__(self, source: SimplicialModule, target: SimplicialModule, components: Sequence[ModuleMap],
                 check: bool = True):
        self.source = source
        self.target = target
        self.components = tuple(components)
        if check:
            self.validate()

    def validate(self) -> None:
        N = min(self.source.level, self.target.level, len(self.components) - 1)
        for n in range(1, N + 1):
            for i in range(n + 1):
                lhs = self.target.faces[n][i] @ self.components[n]
                rhs = self.components[n - 1] @ self.source.faces[n][i]
                if not lhs.equals(rhs):
                    raise SimplicialError(f"map does not commute with face (level {n}, {i})")
        for n in range(N):
            for j in range(n + 1):
                lhs = self.target.degens[n][j] @ self.components[n]
                rhs = self.components[n + 1] @ self.source.degens[n][j]
                if not lhs.equals(rhs):
                    raise SimplicialError(f"map does not commute with degeneracy (level {n}, {j})")

    def __matmul__(self, other: "SimplicialMap") -> "SimplicialMap":
        return SimplicialMap(other.source, self.target,
                             [a @ b for a, b in zip(self.components, other.components)], check=False)

    @classmethod
    def identity(cls, x: SimplicialModule) -> "SimplicialMap":
        return cls(x, x, [ModuleMap.identity(m) for m in x.levels], check=False)


# ----------------------------------------------------------------------------
# constructions


def constant(module: FgModule, level: int) -> SimplicialModule:
    """c(A): every level A, every operator the identity."""
    ident = ModuleMap.identity(module)
    faces = [[]] + [[ident] * (n + 1) for n in range(1, level + 1)]
    degens = [[ident] * (n + 1) for n in range(level)]
    return SimplicialModule(module.ring, [module] * (level + 1), faces, degens, check=False)


def _gamma_summands(c: ChainComplex, n: int) -> list[tuple[tuple[int, ...], int]]:
    out = []
    for k in range(min(n, c.top_degree) + 1):
        for s in surjections(n, k):
            out.append((s, k))
    return out


def _gamma_block(c: ChainComplex, sigma: tuple[int, ...], k: int, theta: tuple[int, ...]):
    """Where summand (sigma: [n] -> [k]) goes under theta^*: returns (epi, matrix) or None."""
    tau = compose(sigma, theta)
    epi, mono = epi_mono(tau)
    j = len(mono) - 1
    if j == k:
        return epi, ExactMatrix.identity(c.ring, c.term(k).ngens)
    if j == k - 1 and mono == tuple(range(1, k + 1)):
        return epi, c.d(k).matrix
    return None


def _gamma_operator(c: ChainComplex, src: list, tgt: list, theta: tuple[int, ...],
                    src_mod: FgModule, tgt_mod: FgModule) -> ModuleMap:
    index = {s: i for i, (s, _) in enumerate(tgt)}
    blocks = {}
    for bj, (sigma, k) in enumerate(src):
        hit = _gamma_block(c, sigma, k, theta)
        if hit is None:
            continue
        epi, mat = hit
        blocks[(index[epi], bj)] = mat
    rows = [c.term(k).ngens for _, k in tgt]
    cols = [c.term(k).ngens for _, k in src]
    return ModuleMap(src_mod, tgt_mod, block_matrix(c.ring, rows, cols, blocks), check=False)


def dold_kan(c: ChainComplex, level: int, check: bool = True) -> SimplicialModule:
    """Gamma(c) through the given level: X_n = sum over surjections [n] -> [k] of c_k."""
    summ = [_gamma_summands(c, n) for n in range(level + 1)]
    mods = [direct_sum([c.term(k) for _, k in summ[n]], c.ring) for n in range(level + 1)]
    faces = [[]]
    for n in range(1, level + 1):
        faces.append([_gamma_operator(c, summ[n], summ[n - 1], coface(n, i), mods[n], mods[n - 1])
                      for i in range(n + 1)])
    degens = []
    for n in range(level):
        degens.append([_gamma_operator(c, summ[n], summ[n + 1], codegeneracy(n, j), mods[n], mods[n + 1])
                       for j in range(n + 1)])
    return SimplicialModule(c.ring, mods, faces, degens, check=check)


def dold_kan_inclusion(c: ChainComplex, x: SimplicialModule, n: int) -> ModuleMap:
    """c_n -> Gamma(c)_n onto the summand of the identity surjection."""
    summ = _gamma_summands(c, n)
    rows = [c.term(k).ngens for _, k in summ]
    ident = tuple(range(n + 1))
    blocks = {}
    for i, (s, k) in enumerate(summ):
        if s == ident:
            blocks[(i, 0)] = ExactMatrix.identity(c.ring, c.term(n).ngens)
    mat = block_matrix(c.ring, rows, [c.term(n).ngens], blocks)
    return ModuleMap(c.term(n), x.levels[n], mat, check=False)


def dold_kan_comparison(c: ChainComplex, x: SimplicialModule) -> ChainMap:
    """c -> N(Gamma c) through the identity summands; an isomorphism of
    complexes up to the truncation level."""
    md = moore_complex(x)
    top = min(c.top_degree, x.level)
    comps = [dold_kan_inclusion(c, x, n).lift_through(md.chains[n][1]) for n in range(top + 1)]
    src = c if c.top_degree <= top else _cut(c, top)
    return ChainMap(src, md.normalized, comps, check=True)


@dataclass
class MooreData:
    chains: list[tuple[FgModule, ModuleMap]]   # C_n with inclusion into X_n
    cycles: list[tuple[FgModule, ModuleMap]]   # Z_n with inclusion into X_n
    normalized: ChainComplex


def _joint_kernel(maps: Sequence[ModuleMap], source: FgModule) -> tuple[FgModule, ModuleMap]:
    if not maps:
        return source, ModuleMap.identity(source)
    return product_map(list(maps), source).kernel()


def moore_complex(x: SimplicialModule) -> MooreData:
    """C_n = intersection of ker d_i for i >= 1, Z_n = all faces; differential d_0.

    The normalized complex has top degree x.level; its top homology is only
    meaningful one level below the truncation."""
    if x._moore is not None:
        return x._moore
    chains, cycles = [], []
    for n in range(x.level + 1):
        if n == 0:
            chains.append((x.levels[0], ModuleMap.identity(x.levels[0])))
            cycles.append((x.levels[0], ModuleMap.identity(x.levels[0])))
            continue
        cn, ci = _joint_kernel(x.faces[n][1:], x.levels[n])
        chains.append((cn, ci))
        # Z_n = ker(d_0 restricted to C_n)
        zn, zi = (x.faces[n][0] @ ci).kernel()
        cycles.append((zn, ci @ zi))
    diffs = []
    for n in range(1, x.level + 1):
        d0 = x.faces[n][0] @ chains[n][1]
        diffs.append(d0.lift_through(chains[n - 1][1]))
    norm = ChainComplex(x.ring, [c for c, _ in chains], diffs, check=False)
    x._moore = MooreData(chains, cycles, norm)
    return x._moore


def homotopy_groups(x: SimplicialModule, n: int) -> FgModule:
    """pi_n x = H_n of the normalized complex; needs level n + 1."""
    if n + 1 > x.level:
        raise TruncationError(f"pi_{n} needs truncation level >= {n + 1}, have {x.level}")
    return moore_complex(x).normalized.homology(n)


def normalized_map(f: SimplicialMap) -> ChainMap:
    a, b = moore_complex(f.source), moore_complex(f.target)
    top = min(f.source.level, f.target.level)
    comps = []
    for n in range(top + 1):
        comps.append((f.components[n] @ a.chains[n][1]).lift_through(b.chains[n][1]))
    src = a.normalized.with_top(top) if a.normalized.top_degree <= top else _cut(a.normalized, top)
    tgt = b.normalized if b.normalized.top_degree >= top else b.normalized.with_top(top)
    return ChainMap(src, tgt, comps, check=False)


def _cut(c: ChainComplex, top: int) -> ChainComplex:
    return ChainComplex(c.ring, c.terms[:top + 1], c.diffs[:top], check=False)


def matching_object(x: SimplicialModule, n: int) -> tuple[FgModule, ModuleMap, ModuleMap]:
    """M_n x = {(y_0..y_n) in X_{n-1}^{n+1} : d_i y_j = d_{j-1} y_i, i < j}.

    Returns (m, delta: X_n -> m, inclusion m -> X_{n-1}^{n+1})."""
    x._need(n)
    ring = x.ring
    if n == 0:
        zero = FgModule.zero(ring)
        return zero, ModuleMap.zero(x.levels[0], zero), ModuleMap.zero(zero, zero)
    return _matching(x.ring, x.levels, x.faces, n, x.faces[n] if n <= x.level else None)


def _matching(ring, levels, faces, n, top_faces):
    prev = levels[n - 1]
    power = direct_sum([prev] * (n + 1), ring)
    g = prev.ngens
    if n >= 2:
        pairs = [(i, j) for j in range(n + 1) for i in range(j)]
        pp = levels[n - 2]
        tgt = direct_sum([pp] * len(pairs), ring)
        blocks = {}
        for r, (i, j) in enumerate(pairs):
            a = faces[n - 1][i].matrix
            b = faces[n - 1][j - 1].matrix
            blocks[(r, j)] = a
            blocks[(r, i)] = -b
        cond = ModuleMap(power, tgt, block_matrix(ring, [pp.ngens] * len(pairs), [g] * (n + 1), blocks),
                         check=False)
        m, incl = cond.kernel()
    else:
        m, incl = power, ModuleMap.identity(power)
    delta = None
    if top_faces is not None:
        delta = product_map(list(top_faces), levels[n])
        delta = ModuleMap(levels[n], power, delta.matrix, check=False).lift_through(incl)
    return m, delta, incl


def latching_object(x: SimplicialModule, n: int) -> tuple[FgModule, ModuleMap]:
    """Copies 0..n-1 of X_{n-1} glued by copy(j+1)(s_i y) = copy(i)(s_j y), i <= j <= n-2;
    sigma sends copy i to s_i."""
    x._need(n)
    ring = x.ring
    if n == 0:
        zero = FgModule.zero(ring)
        return zero, ModuleMap.zero(zero, x.levels[0])
    prev = x.levels[n - 1]
    g = prev.ngens
    total = n * g
    cols = []
    for c in range(n):
        for col in prev.relations.lift().columns():
            v = [0] * total
            v[c * g:(c + 1) * g] = col
            cols.append(v)
    if n >= 2:
        pp = x.levels[n - 2]
        for j in range(n - 1):
            for i in range(j + 1):
                si = x.degens[n - 2][i].matrix.lift()
                sj = x.degens[n - 2][j].matrix.lift()
                for t in range(pp.ngens):
                    v = [0] * total
                    a, b = si.column(t), sj.column(t)
                    for k in range(g):
                        v[(j + 1) * g + k] += a[k]
                        v[i * g + k] -= b[k]
                    if any(v):
                        cols.append(v)
    lmod = FgModule(ring, total, ExactMatrix.from_columns(ring, cols, total))
    sig_cols = []
    for c in range(n):
        sig_cols.extend(x.degens[n - 1][c].matrix.columns())
    sigma = ModuleMap.from_columns(lmod, x.levels[n], sig_cols, check=True)
    return lmod, sigma


def postnikov_section_simplicial(x: SimplicialModule, n: int, level: int | None = None
                                 ) -> tuple[SimplicialModule, SimplicialMap]:
    """Keep levels <= n+1 and fill above by matching objects (coskeleton)."""
    level = x.level if level is None else level
    if x.level < min(n + 1, level):
        raise TruncationError(f"section P_{n} needs the input through level {n + 1}")
    ring = x.ring
    keep = min(n + 1, level)
    levels = list(x.levels[:keep + 1])
    faces = [list(f) for f in x.faces[:keep + 1]]
    degens = [list(s) for s in x.degens[:keep]]
    comps = [ModuleMap.identity(m) for m in levels]
    for k in range(keep + 1, level + 1):
        m, _, incl = _matching(ring, levels, faces, k, None)
        prev = levels[k - 1]
        g = prev.ngens
        # faces of M_k are the coordinate projections
        fk = []
        for i in range(k + 1):
            rows = [[1 if c == i * g + r else 0 for c in range((k + 1) * g)] for r in range(g)]
            proj = ExactMatrix(ring, g, (k + 1) * g, rows)
            fk.append(ModuleMap(incl.target, prev, proj, check=False) @ incl)
        # s_j y = (d_0 s_j y, ..., d_k s_j y) via the simplicial identities
        sk = []
        for j in range(k):
            parts = []
            for i in range(k + 1):
                if i < j:
                    parts.append(degens[k - 2][j - 1] @ faces[k - 1][i])
                elif i in (j, j + 1):
                    parts.append(ModuleMap.identity(prev))
                else:
                    parts.append(degens[k - 2][j] @ faces[k - 1][i - 1])
            stacked = product_map(parts, prev)
            stacked = ModuleMap(prev, incl.target, stacked.matrix, check=False)
            sk.append(stacked.lift_through(incl))
        # r_k = (r_{k-1} d_0, ..., r_{k-1} d_k)
        if k <= x.level:
            parts = [comps[k - 1] @ x.faces[k][i] for i in range(k + 1)]
            stacked = ModuleMap(x.levels[k], incl.target, product_map(parts, x.levels[k]).matrix, check=False)
            comps.append(stacked.lift_through(incl))
        levels.append(m)
        faces.append(fk)
        degens.append(sk)
    p = SimplicialModule(ring, levels, faces, degens, check=True)
    r = SimplicialMap(x, p, comps, check=True)
    return p, r


def conjugate(x: SimplicialModule, autos: Sequence[tuple[ModuleMap, ModuleMap]]) -> SimplicialModule:
    """Transport x along levelwise isomorphisms (phi_n, phi_n^-1)."""
    faces = [[]]
    for n in range(1, x.level + 1):
        faces.append([autos[n - 1][0] @ f @ autos[n][1] for f in x.faces[n]])
    degens = [[autos[n + 1][0] @ s @ autos[n][1] for s in x.degens[n]] for n in range(x.level)]
    levels = [a[0].target for a in autos]
    return SimplicialModule(x.ring, levels, faces, degens, check=True)


# ----------------------------------------------------------------------------
# random objects


def random_unimodular(rng: random.Random, n: int, steps: int | None = None, bound: int = 2
                      ) -> tuple[list[list[int]], list[list[int]]]:
    """Product of random elementary row operations, with its inverse."""
    a = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
    inv = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
    if n < 2:
        return a, inv
    steps = steps if steps is not None else 2 * n
    for _ in range(steps):
        i, j = rng.sample(range(n), 2)
        c = rng.randint(-bound, bound)
        if not c:
            continue
        # a <- E a with E = I + c e_ij ; inv <- inv E^-1
        a[i] = [x + c * y for x, y in zip(a[i], a[j])]
        for row in inv:
            row[j] -= c * row[i]
    return a, inv


def random_free_complex(rng: random.Random, ring: RingSpec, top: int, max_rank: int = 4,
                        max_entry: int = 3) -> ChainComplex:
    """Random free complex with d^2 = 0: each d_{n+1} has columns in ker d_n,
    built from small combinations of a kernel basis."""
    from .exactalg import matrix_kernel
    ranks = [rng.randint(0, max_rank) for _ in range(top + 1)]
    mats = []
    for n in range(1, top + 1):
        r_src, r_tgt = ranks[n], ranks[n - 1]
        if n == 1:
            basis = [tuple(1 if i == j else 0 for i in range(r_tgt)) for j in range(r_tgt)]
        else:
            prev = ExactMatrix(ring, ranks[n - 2], r_tgt, mats[-1]) if ranks[n - 2] else None
            basis = matrix_kernel(prev) if prev is not None else \
                [tuple(1 if i == j else 0 for i in range(r_tgt)) for j in range(r_tgt)]
        cols = []
        for _ in range(r_src):
            v = [0] * r_tgt
            for b in basis:
                c = rng.randint(-1, 1)
                if c:
                    v = [x + c * y for x, y in zip(v, b)]
            if max(map(abs, v), default=0) > max_entry:
                v = [0] * r_tgt
            if rng.random() < 0.5 and basis:
                scale = rng.choice([1, 2, 3])
                if all(abs(scale * x) <= max_entry for x in v):
                    v = [scale * x for x in v]
            cols.append(v)
        mat = [[cols[j][i] for j in range(r_src)] for i in range(r_tgt)]
        mats.append(mat)
    return ChainComplex.free(ring, ranks, mats, check=True)


def random_simplicial(rng: random.Random, ring: RingSpec, level: int, max_rank: int = 3,
                      top: int | None = None) -> SimplicialModule:
    """Gamma of a random free complex, conjugated by random levelwise automorphisms."""
    top = min(level, 3) if top is None else top
    c = random_free_complex(rng, ring, top, max_rank=max_rank)
    x = dold_kan(c, level, check=False)
    autos = []
    for m in x.levels:
        a, inv = random_unimodular(rng, m.ngens)
        am = ExactMatrix(ring, m.ngens, m.ngens, a) if m.ngens else ExactMatrix.zero(ring, 0, 0)
        im = ExactMatrix(ring, m.ngens, m.ngens, inv) if m.ngens else ExactMatrix.zero(ring, 0, 0)
        autos.append((ModuleMap(m, m, am, check=False), ModuleMap(m, m, im, check=False)))
    return conjugate(x, autos)


# ----------------------------------------------------------------------------
# bisimplicial modules


class BisimplicialModule:
    """rows[p] is the internal simplicial module at external level p;
    ext_faces[p][i]: rows[p] -> rows[p-1], ext_degens[p][j]: rows[p] -> rows[p+1]."""

    def __init__(self, rows: Sequence[SimplicialModule], ext_faces: Sequence[Sequence[SimplicialMap]],
                 ext_degens: Sequence[Sequence[SimplicialMap]], check: bool = True):
        self.rows = tuple(rows)
        self.ext_faces = tuple(tuple(f) for f in ext_faces)
        self.ext_degens = tuple(tuple(s) for s in ext_degens)
        self.ring = self.rows[0].ring
        if check:
            self.validate()

    @property
    def external_level(self) -> int:
        return len(self.rows) - 1

    @property
    def internal_level(self) -> int:
        return min(r.level for r in self.rows)

    def module(self, p: int, q: int) -> FgModule:
        return self.rows[p].levels[q]

    def external_column(self, q: int) -> SimplicialModule:
        """The simplicial module p -> X_{p,q} for a fixed internal level q."""
        P = self.external_level
        levels = [self.module(p, q) for p in range(P + 1)]
        faces = [[]] + [[f.components[q] for f in self.ext_faces[p]] for p in range(1, P + 1)]
        degens = [[s.components[q] for s in self.ext_degens[p]] for p in range(P)]
        return SimplicialModule(self.ring, levels, faces, degens, check=False)

    def validate(self) -> None:
        for p, r in enumerate(self.rows):
            r.validate()
        for p in range(1, self.external_level + 1):
            for f in self.ext_faces[p]:
                f.validate()
        for p in range(self.external_level):
            for s in self.ext_degens[p]:
                s.validate()
        for q in range(self.internal_level + 1):
            try:
                self.external_column(q).validate()
            except SimplicialError as e:
                raise SimplicialError(f"external identities fail at internal level {q}: {e}") from None


@dataclass
class DoubleComplex:
    """terms[(p, q)] with horizontal dh[(p, q)]: (p,q) -> (p-1,q) and vertical
    dv[(p, q)]: (p,q) -> (p,q-1); the two differentials commute."""

    ring: RingSpec
    ext_top: int
    int_top: int
    terms: dict
    dh: dict
    dv: dict

    def term(self, p: int, q: int) -> FgModule:
        t = self.terms.get((p, q))
        return t if t is not None else FgModule.zero(self.ring)

    def h(self, p: int, q: int) -> ModuleMap:
        f = self.dh.get((p, q))
        return f if f is not None else ModuleMap.zero(self.term(p, q), self.term(p - 1, q))

    def v(self, p: int, q: int) -> ModuleMap:
        f = self.dv.get((p, q))
        return f if f is not None else ModuleMap.zero(self.term(p, q), self.term(p, q - 1))

    def row(self, p: int) -> ChainComplex:
        return ChainComplex(self.ring, [self.term(p, q) for q in range(self.int_top + 1)],
                            [self.v(p, q) for q in range(1, self.int_top + 1)], check=False)

    def validate(self) -> None:
        for p in range(self.ext_top + 1):
            for q in range(self.int_top + 1):
                if p >= 2 and not (self.h(p - 1, q) @ self.h(p, q)).is_zero():
                    raise SimplicialError(f"dh^2 != 0 at ({p}, {q})")
                if q >= 2 and not (self.v(p, q - 1) @ self.v(p, q)).is_zero():
                    raise SimplicialError(f"dv^2 != 0 at ({p}, {q})")
                if p >= 1 and q >= 1:
                    if not (self.h(p, q - 1) @ self.v(p, q)).equals(self.v(p - 1, q) @ self.h(p, q)):
                        raise SimplicialError(f"dh and dv do not commute at ({p}, {q})")


def _gamma2_summands(dc: DoubleComplex, p: int, q: int):
    out = []
    for a in range(min(p, dc.ext_top) + 1):
        for s in surjections(p, a):
            for b in range(min(q, dc.int_top) + 1):
                for t in surjections(q, b):
                    out.append((s, a, t, b))
    return out


def _gamma2_operator(dc: DoubleComplex, src, tgt, theta, external: bool, src_mod, tgt_mod) -> ModuleMap:
    index = {(s, t): i for i, (s, _, t, _) in enumerate(tgt)}
    blocks = {}
    for bj, (s, a, t, b) in enumerate(src):
        sigma, k = (s, a) if external else (t, b)
        tau = compose(sigma, theta)
        epi, mono = epi_mono(tau)
        j = len(mono) - 1
        if j == k:
            mat = ExactMatrix.identity(dc.ring, dc.term(a, b).ngens)
        elif j == k - 1 and mono == tuple(range(1, k + 1)):
            mat = dc.h(a, b).matrix if external else dc.v(a, b).matrix
        else:
            continue
        key = (epi, t) if external else (s, epi)
        blocks[(index[key], bj)] = mat
    rows = [dc.term(a, b).ngens for _, a, _, b in tgt]
    cols = [dc.term(a, b).ngens for _, a, _, b in src]
    return ModuleMap(src_mod, tgt_mod, block_matrix(dc.ring, rows, cols, blocks), check=False)


def gamma2(dc: DoubleComplex, ext_level: int, int_level: int, check: bool = True) -> BisimplicialModule:
    """Dold-Kan applied in both directions."""
    summ = {(p, q): _gamma2_summands(dc, p, q) for p in range(ext_level + 1) for q in range(int_level + 1)}
    mods = {k: direct_sum([dc.term(a, b) for _, a, _, b in v], dc.ring) for k, v in summ.items()}

    def op(p, q, p2, q2, theta, external):
        return _gamma2_operator(dc, summ[(p, q)], summ[(p2, q2)], theta, external, mods[(p, q)], mods[(p2, q2)])

    rows = []
    for p in range(ext_level + 1):
        faces = [[]] + [[op(p, q, p, q - 1, coface(q, i), False) for i in range(q + 1)]
                        for q in range(1, int_level + 1)]
        degens = [[op(p, q, p, q + 1, codegeneracy(q, j), False) for j in range(q + 1)]
                  for q in range(int_level)]
        rows.append(SimplicialModule(dc.ring, [mods[(p, q)] for q in range(int_level + 1)], faces, degens,
                                     check=check))
    ext_faces = [[]]
    for p in range(1, ext_level + 1):
        ext_faces.append([SimplicialMap(rows[p], rows[p - 1],
                                        [op(p, q, p - 1, q, coface(p, i), True) for q in range(int_level + 1)],
                                        check=False) for i in range(p + 1)])
    ext_degens = []
    for p in range(ext_level):
        ext_degens.append([SimplicialMap(rows[p], rows[p + 1],
                                         [op(p, q, p + 1, q, codegeneracy(p, j), True)
                                          for q in range(int_level + 1)], check=False)
                           for j in range(p + 1)])
    return BisimplicialModule(rows, ext_faces, ext_degens, check=check)


def conjugate_bisimplicial(x: BisimplicialModule, autos: dict) -> BisimplicialModule:
    """Transport along levelwise isomorphisms autos[(p, q)] = (phi, phi^-1)."""
    P, Q = x.external_level, x.internal_level
    rows = []
    for p in range(P + 1):
        rows.append(conjugate(x.rows[p], [autos[(p, q)] for q in range(Q + 1)]))
    ext_faces = [[]]
    for p in range(1, P + 1):
        ext_faces.append([SimplicialMap(rows[p], rows[p - 1],
                                        [autos[(p - 1, q)][0] @ f.components[q] @ autos[(p, q)][1]
                                         for q in range(Q + 1)], check=False) for f in x.ext_faces[p]])
    ext_degens = []
    for p in range(P):
        ext_degens.append([SimplicialMap(rows[p], rows[p + 1],
                                         [autos[(p + 1, q)][0] @ s.components[q] @ autos[(p, q)][1]
                                          for q in range(Q + 1)], check=False) for s in x.ext_degens[p]])
    return BisimplicialModule(rows, ext_faces, ext_degens, check=True)


def double_normalization(x: BisimplicialModule, internal_first: bool = True) -> dict:
    """Canonical forms of the doubly normalized modules, computed by cutting
    out one direction's kernels first and then the other's."""
    out = {}
    for p in range(x.external_level + 1):
        for q in range(x.internal_level + 1):
            m = x.module(p, q)
            inner = list(x.rows[p].faces[q][1:]) if q else []
            outer = [f.components[q] for f in x.ext_faces[p][1:]] if p else []
            first, second = (inner, outer) if internal_first else (outer, inner)
            k1, i1 = _joint_kernel(first, m)
            k2, _ = _joint_kernel([f @ i1 for f in second], k1)
            out[(p, q)] = k2.canonical_form()
    return out
