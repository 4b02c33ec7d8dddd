"""Independent reference computations used only by the tests.

Nothing here calls the package's elimination engine: invariant factors come
from gcds of minors, finite groups are enumerated element by element.
"""
from __future__ import annotations

import itertools
from fractions import Fraction
from math import comb, gcd


def det(mat: list[list[int]]) -> int:
    n = len(mat)
    if n == 0:
        return 1
    a = [[Fraction(x) for x in row] for row in mat]
    sign = 1
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        if piv is None:
            return 0
        if piv != col:
            a[col], a[piv] = a[piv], a[col]
            sign = -sign
        for r in range(col + 1, n):
            f = a[r][col] / a[col][col]
            if f:
                for c in range(col, n):
                    a[r][c] -= f * a[col][c]
    out = Fraction(sign)
    for i in range(n):
        out *= a[i][i]
    return int(out)


def rank_q(mat: list[list[int]]) -> int:
    if not mat or not mat[0]:
        return 0
    a = [[Fraction(x) for x in row] for row in mat]
    rows, cols = len(a), len(a[0])
    r = 0
    for c in range(cols):
        piv = next((i for i in range(r, rows) if a[i][c] != 0), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        for i in range(rows):
            if i != r and a[i][c]:
                f = a[i][c] / a[r][c]
                for k in range(c, cols):
                    a[i][k] -= f * a[r][k]
        r += 1
    return r


def determinantal_divisors(mat: list[list[int]]) -> list[int]:
    """d_k = gcd of all k x k minors, for k = 1..rank."""
    rows = len(mat)
    cols = len(mat[0]) if rows else 0
    out = []
    for k in range(1, min(rows, cols) + 1):
        g = 0
        for rs in itertools.combinations(range(rows), k):
            for cs in itertools.combinations(range(cols), k):
                g = gcd(g, det([[mat[r][c] for c in cs] for r in rs]))
        if g == 0:
            break
        out.append(g)
    return out


def invariant_factors(mat: list[list[int]]) -> list[int]:
    """Nonzero Smith invariants via ratios of determinantal divisors."""
    dd = determinantal_divisors(mat)
    out, prev = [], 1
    for d in dd:
        out.append(d // prev)
        prev = d
    return out


def module_form(ngens: int, relations: list[list[int]]) -> tuple[int, tuple[int, ...]]:
    """(free rank, invariant factors > 1) of Z^ngens / column span of relations."""
    inv = invariant_factors(relations) if relations and relations[0] else []
    free = ngens - len(inv)
    return free, tuple(d for d in inv if d != 1)


def free_complex_homology(ranks: list[int], mats: list[list[list[int]]], n: int) -> tuple[int, tuple[int, ...]]:
    """H_n of a free Z-complex: kernel dimension minus boundary rank, torsion from d_{n+1}."""
    top = len(ranks) - 1
    if n > top:
        return 0, ()
    r_out = rank_q(mats[n - 1]) if n >= 1 and ranks[n - 1] and ranks[n] else 0
    ker = ranks[n] - r_out
    if n + 1 <= top and ranks[n] and ranks[n + 1]:
        inv = invariant_factors(mats[n])
    else:
        inv = []
    return ker - len(inv), tuple(d for d in inv if d != 1)


def finite_module_elements(ngens: int, relations_cols: list[list[int]], m: int) -> int:
    """Order of (Z/m)^ngens / span(relations) by closing the span under addition."""
    span = {tuple([0] * ngens)}
    frontier = list(span)
    gens = [tuple(x % m for x in c) for c in relations_cols]
    while frontier:
        new = []
        for v in frontier:
            for g in gens:
                w = tuple((a + b) % m for a, b in zip(v, g))
                if w not in span:
                    span.add(w)
                    new.append(w)
        frontier = new
    return m ** ngens // len(span)


def matvec_mod(mat, vec, m):
    return tuple(sum(a * b for a, b in zip(row, vec)) % m for row in mat)


def finite_homology_order(ranks: list[int], mats: list[list[list[int]]], n: int, m: int) -> int:
    """|H_n| of a free Z/m-complex by enumerating all vectors."""
    top = len(ranks) - 1
    if n > top:
        return 1
    vecs = list(itertools.product(range(m), repeat=ranks[n]))
    if n >= 1 and ranks[n - 1]:
        cycles = [v for v in vecs if not any(matvec_mod(mats[n - 1], v, m))]
    else:
        cycles = vecs
    if n + 1 <= top and ranks[n + 1]:
        bounds = {matvec_mod(mats[n], w, m) for w in itertools.product(range(m), repeat=ranks[n + 1])}
    else:
        bounds = {tuple([0] * ranks[n])}
    return len(cycles) // len(bounds)


def surjection_count(n: int, k: int) -> int:
    """Monotone surjections [n] -> [k]."""
    return comb(n, k)


def tensor_tor_forms(form: tuple[int, tuple[int, ...]], p: int):
    """(A (x) Z/p, Tor(A, Z/p)) for A = Z^free + sum Z/d, p prime, as forms."""
    free, tors = form
    t = [gcd(d, p) for d in tors if gcd(d, p) > 1]
    return (0, tuple([p] * free + t)), (0, tuple(t))


def form_order(form: tuple[int, tuple[int, ...]]) -> int | None:
    free, tors = form
    if free:
        return None
    out = 1
    for d in tors:
        out *= d
    return out
