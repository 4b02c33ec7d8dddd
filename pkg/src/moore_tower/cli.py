"""Command-line entry point.

    python -m moore_tower <command> [input.json] [flags]

Every command reads one JSON object (or builds a random one from --seed),
validates it completely before computing, and writes a report with three
sections: the request echo, the results, and provenance. Wall-clock timing
is kept outside the results so that the results are byte-reproducible.

Exit codes: 0 success, 1 error, 2 verified negative (no lift, no witness,
or a sequence that fails exactness).
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import random
import re
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .chain import (ChainComplex, base_change, is_nullhomotopic, k_invariant, postnikov_section)
from .compare import BaseChange, comparison_les, mod_p_homotopy, random_bisimplicial, spiral_sequence
from .emext import class_to_extension, em_classes, em_object, extension_to_class
from .exactalg import (ExactMatrix, FgModule, ModuleMap, RingSpec, ZZ, enumerate_extensions, extensions_equivalent,
                       hom_and_ext, smith_normal_form)
from .lift import Bounds, LiftProblem, brute_force_realize, enumerate_lifts
from .simplicial import (BisimplicialModule, SimplicialMap, SimplicialModule, dold_kan,
                         dold_kan_comparison, latching_object, matching_object, moore_complex,
                         postnikov_section_simplicial, random_free_complex, random_simplicial)

COMMANDS = ("snf", "module", "homology", "postnikov", "kinv", "dold-kan", "moore", "matching",
            "latching", "bockstein", "compare-les", "spiral", "ext-classify", "lift", "oracle")

EXIT_OK, EXIT_ERROR, EXIT_NEGATIVE = 0, 1, 2


class InputError(ValueError):
    """Malformed input or flags; the message names the offending field."""


def thread_cap() -> int:
    """Upper bound on worker threads or processes, from MOORE_TOWER_THREADS."""
    raw = os.environ.get("MOORE_TOWER_THREADS")
    if raw is None or raw == "":
        return os.cpu_count() or 1
    if not raw.isdigit() or int(raw) < 1:
        raise InputError(f"MOORE_TOWER_THREADS must be a positive integer, got {raw!r}")
    return int(raw)


# ----------------------------------------------------------------------------
# flags


def parse_range(text: str) -> tuple[int, int]:
    m = re.fullmatch(r"(-?\d+)\.\.(-?\d+)", text.strip())
    if not m:
        raise InputError(f"--range expects <a>..<b>, got {text!r}")
    a, b = int(m.group(1)), int(m.group(2))
    if a > b:
        raise InputError(f"--range {text!r} is empty")
    return a, b


def parse_bounds(text: str) -> Bounds:
    keys = {"rank": "max_rank", "entry": "max_entry", "deg": "max_degree"}
    values = {}
    for part in text.split(","):
        key, sep, val = part.partition("=")
        key = key.strip()
        if not sep or key not in keys:
            raise InputError(f"--bounds expects rank=<r>,entry=<e>,deg=<d>, got {part!r}")
        if keys[key] in values:
            raise InputError(f"--bounds repeats {key!r}")
        if not val.strip().isdigit():
            raise InputError(f"--bounds {key} must be a non-negative integer, got {val!r}")
        values[keys[key]] = int(val)
    return Bounds(**values)


def parse_ring(text: str) -> RingSpec:
    try:
        return RingSpec.parse(text)
    except ValueError as e:
        raise InputError(f"--ring: {e}") from None


@dataclass
class CommandRequest:
    command: str
    ring: RingSpec | None = None
    input_path: str | None = None
    output_path: str | None = None
    degree: int | None = None
    degree_range: tuple[int, int] | None = None
    bounds: Bounds | None = None
    seed: int | None = None
    format: str = "json"
    timing: bool = True

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise InputError(f"unknown command {self.command!r}")
        if self.format not in ("json", "text"):
            raise InputError(f"--format must be json or text, got {self.format!r}")
        if self.input_path is None and self.seed is None:
            raise InputError(f"{self.command} needs an input file or --seed")
        if self.input_path is not None and not Path(self.input_path).is_file():
            raise InputError(f"input file {self.input_path} does not exist")
        if self.degree is not None and self.degree < 0:
            raise InputError(f"--degree must be non-negative, got {self.degree}")
        if self.degree_range is not None and self.degree_range[0] < 0:
            raise InputError("--range must start at a non-negative degree")
        if self.bounds is not None and self.command not in ("lift", "oracle"):
            raise InputError(f"--bounds does not apply to {self.command}")

    def echo(self, digest: str | None) -> dict:
        return {"command": self.command,
                "ring": None if self.ring is None else str(self.ring),
                "input": self.input_path,
                "input_sha256": digest,
                "degree": self.degree,
                "range": None if self.degree_range is None else list(self.degree_range),
                "bounds": None if self.bounds is None else self.bounds.to_json(),
                "seed": self.seed}


@dataclass
class Report:
    request: dict
    results: dict
    provenance: dict
    exit_code: int = EXIT_OK
    timing: dict | None = None

    def to_json(self) -> dict:
        out = {"request": self.request, "results": self.results, "provenance": self.provenance}
        if self.timing is not None:
            out["timing"] = self.timing
        return out


# ----------------------------------------------------------------------------
# input validation


def _fields(obj, where: str, required: set[str], optional: set[str] = frozenset()) -> dict:
    if not isinstance(obj, dict):
        raise InputError(f"{where}: expected an object, got {type(obj).__name__}")
    missing = sorted(required - obj.keys())
    if missing:
        raise InputError(f"{where}: missing field {missing[0]!r}")
    unknown = sorted(obj.keys() - required - optional)
    if unknown:
        raise InputError(f"{where}: unknown field {unknown[0]!r}")
    return obj


def _count(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < 0:
        raise InputError(f"{where}: expected a non-negative integer, got {value!r}")
    return value


def _list(value, where: str, length: int | None = None) -> list:
    if not isinstance(value, list):
        raise InputError(f"{where}: expected a list, got {type(value).__name__}")
    if length is not None and len(value) != length:
        raise InputError(f"{where}: expected {length} entries, got {len(value)}")
    return value


def _check_matrix(obj, where: str) -> None:
    _fields(obj, where, {"rows", "cols", "entries"})
    rows, cols = _count(obj["rows"], f"{where}.rows"), _count(obj["cols"], f"{where}.cols")
    entries = _list(obj["entries"], f"{where}.entries", rows * cols)
    for i, e in enumerate(entries):
        if not isinstance(e, str) or not re.fullmatch(r"-?\d+", e):
            raise InputError(f"{where}.entries[{i}]: expected a decimal string, got {e!r}")


def _check_module(obj, where: str) -> None:
    _fields(obj, where, {"generators"}, {"relations"})
    g = _count(obj["generators"], f"{where}.generators")
    if "relations" in obj:
        _check_matrix(obj["relations"], f"{where}.relations")
        if obj["relations"]["rows"] != g:
            raise InputError(f"{where}.relations: {obj['relations']['rows']} rows for {g} generators")


def _check_ring(obj, where: str) -> RingSpec:
    if not isinstance(obj, str):
        raise InputError(f"{where}: expected a ring name, got {obj!r}")
    try:
        return RingSpec.parse(obj)
    except ValueError as e:
        raise InputError(f"{where}: {e}") from None


def _check_complex(obj, where: str) -> None:
    _fields(obj, where, {"ring", "top_degree", "terms", "differentials"})
    _check_ring(obj["ring"], f"{where}.ring")
    top = _count(obj["top_degree"], f"{where}.top_degree")
    terms = _list(obj["terms"], f"{where}.terms", top + 1)
    for n, t in enumerate(terms):
        _check_module(t, f"{where}.terms[{n}]")
    for k, d in enumerate(_list(obj["differentials"], f"{where}.differentials", top)):
        _check_matrix(d, f"{where}.differentials[{k}]")


def _check_simplicial(obj, where: str) -> None:
    _fields(obj, where, {"ring", "level", "modules", "faces", "degeneracies"})
    _check_ring(obj["ring"], f"{where}.ring")
    level = _count(obj["level"], f"{where}.level")
    for n, m in enumerate(_list(obj["modules"], f"{where}.modules", level + 1)):
        _check_module(m, f"{where}.modules[{n}]")
    faces = _list(obj["faces"], f"{where}.faces", level + 1)
    for n, fs in enumerate(faces):
        for i, f in enumerate(_list(fs, f"{where}.faces[{n}]", n + 1 if n else 0)):
            _check_matrix(f, f"{where}.faces[{n}][{i}]")
    for n, ss in enumerate(_list(obj["degeneracies"], f"{where}.degeneracies", level)):
        for j, s in enumerate(_list(ss, f"{where}.degeneracies[{n}]", n + 1)):
            _check_matrix(s, f"{where}.degeneracies[{n}][{j}]")


def _check_bisimplicial(obj, where: str) -> None:
    _fields(obj, where, {"ring", "rows", "external_faces", "external_degeneracies"})
    _check_ring(obj["ring"], f"{where}.ring")
    rows = _list(obj["rows"], f"{where}.rows")
    if not rows:
        raise InputError(f"{where}.rows: needs at least one row")
    for p, r in enumerate(rows):
        _check_simplicial(r, f"{where}.rows[{p}]")
    top = len(rows) - 1
    for key, count, length in (("external_faces", top + 1, lambda p: p + 1 if p else 0),
                               ("external_degeneracies", top, lambda p: p + 1)):
        for p, ops in enumerate(_list(obj[key], f"{where}.{key}", count)):
            for i, comps in enumerate(_list(ops, f"{where}.{key}[{p}]", length(p))):
                for q, m in enumerate(_list(comps, f"{where}.{key}[{p}][{i}]")):
                    _check_matrix(m, f"{where}.{key}[{p}][{i}][{q}]")


def _load_complex(obj, where: str) -> ChainComplex:
    _check_complex(obj, where)
    return _located(where, ChainComplex.from_json, obj)


def _load_simplicial(obj, where: str) -> SimplicialModule:
    _check_simplicial(obj, where)
    return _located(where, SimplicialModule.from_json, obj)


def _load_bisimplicial(obj, where: str) -> BisimplicialModule:
    _check_bisimplicial(obj, where)
    ring = RingSpec.parse(obj["ring"])
    rows = [_load_simplicial(r, f"{where}.rows[{p}]") for p, r in enumerate(obj["rows"])]
    if any(r.ring != ring for r in rows):
        raise InputError(f"{where}: every row must be over {ring}")

    def maps(key, shift):
        out = []
        for p, ops in enumerate(obj[key]):
            row = []
            for i, comps in enumerate(ops):
                src, tgt = rows[p], rows[p + shift]
                level = min(src.level, tgt.level)
                if len(comps) != level + 1:
                    raise InputError(f"{where}.{key}[{p}][{i}]: expected {level + 1} components, "
                                     f"got {len(comps)}")
                mods = []
                for q, m in enumerate(comps):
                    mat = ExactMatrix.from_json(ring, m)
                    if mat.shape != (tgt.levels[q].ngens, src.levels[q].ngens):
                        raise InputError(f"{where}.{key}[{p}][{i}][{q}]: shape {mat.shape}, expected "
                                         f"{(tgt.levels[q].ngens, src.levels[q].ngens)}")
                    mods.append(ModuleMap(src.levels[q], tgt.levels[q], mat, check=False))
                row.append(_located(f"{where}.{key}[{p}][{i}]", SimplicialMap, src, tgt, mods))
            out.append(row)
        return out

    faces = maps("external_faces", -1)
    degens = maps("external_degeneracies", 1)
    return _located(where, BisimplicialModule, rows, faces, degens)


def bisimplicial_to_json(x: BisimplicialModule) -> dict:
    return {"ring": str(x.ring),
            "rows": [r.to_json() for r in x.rows],
            "external_faces": [[[c.matrix.to_json() for c in f.components] for f in fs]
                               for fs in x.ext_faces],
            "external_degeneracies": [[[c.matrix.to_json() for c in s.components] for s in ss]
                                      for ss in x.ext_degens]}


def _located(where: str, fn, *args):
    """Run a constructor, prefixing structural errors with the field path."""
    try:
        return fn(*args)
    except InputError:
        raise
    except (ValueError, KeyError) as e:
        raise InputError(f"{where}: {e}") from None


def _load_module(obj, where: str, ring: RingSpec) -> FgModule:
    _check_module(obj, where)
    return _located(where, FgModule.from_json, ring, obj)


def parse_input(path: str | Path, kind: str):
    """Load and fully validate one input file of the given kind: matrix,
    module, complex, simplicial, bisimplicial, lift or extension."""
    text = Path(path).read_text()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from None
    return load_object(obj, kind)


def load_object(obj, kind: str):
    if kind == "matrix":
        _fields(obj, "$", {"ring", "rows", "cols", "entries"})
        ring = _check_ring(obj["ring"], "$.ring")
        _check_matrix({k: obj[k] for k in ("rows", "cols", "entries")}, "$")
        return ExactMatrix.from_json(ring, obj)
    if kind == "module":
        _fields(obj, "$", {"ring", "generators"}, {"relations"})
        ring = _check_ring(obj["ring"], "$.ring")
        return _load_module({k: v for k, v in obj.items() if k != "ring"}, "$", ring)
    if kind == "complex":
        return _load_complex(obj, "$")
    if kind == "simplicial":
        return _load_simplicial(obj, "$")
    if kind == "bisimplicial":
        return _load_bisimplicial(obj, "$")
    if kind == "lift":
        if isinstance(obj, dict) and "target" in obj:
            _fields(obj, "$", {"target"}, {"bounds"})
            target = _load_complex(obj["target"], "$.target")
            bounds = None
            if "bounds" in obj:
                b = _fields(obj["bounds"], "$.bounds", set(), {"deg", "rank", "entry"})
                names = {"deg": "max_degree", "rank": "max_rank", "entry": "max_entry"}
                bounds = Bounds(**{names[k]: _count(v, f"$.bounds.{k}") for k, v in b.items()})
            return target, bounds
        return _load_complex(obj, "$"), None
    if kind == "extension":
        _fields(obj, "$", {"ring", "quotient", "sub"})
        ring = _check_ring(obj["ring"], "$.ring")
        return _load_module(obj["quotient"], "$.quotient", ring), _load_module(obj["sub"], "$.sub", ring)
    raise InputError(f"unknown input kind {kind!r}")


# ----------------------------------------------------------------------------
# random inputs for --seed


def _random_matrix(rng: random.Random, ring: RingSpec) -> ExactMatrix:
    rows, cols = rng.randint(1, 4), rng.randint(1, 4)
    return ExactMatrix(ring, rows, cols, [[rng.randint(-9, 9) for _ in range(cols)] for _ in range(rows)])


_SMALL = {"Z/2": [2], "Z/3": [3], "Z/4": [4], "Z/2+Z/2": [2, 2]}


def random_input(kind: str, seed: int, ring: RingSpec | None):
    rng = random.Random(seed)
    if kind == "matrix":
        return _random_matrix(rng, ring or ZZ)
    if kind == "module":
        rel = _random_matrix(rng, ring or ZZ)
        return FgModule(rel.ring, rel.rows, rel)
    if kind == "complex":
        return random_free_complex(rng, ring or ZZ, rng.randint(1, 3), max_rank=3, max_entry=3)
    if kind == "simplicial":
        return random_simplicial(rng, ring or ZZ, 4, max_rank=2, top=rng.randint(1, 3))
    if kind == "bisimplicial":
        return random_bisimplicial(rng, ring or ZZ, 3, 3, max_rank=2)
    if kind == "lift":
        target_ring = ring or RingSpec.mod(4)
        x = random_free_complex(rng, ZZ, rng.randint(1, 2), max_rank=2, max_entry=3)
        return base_change(x, target_ring), None
    if kind == "extension":
        names = sorted(_SMALL)
        q, s = rng.choice(names), rng.choice(names)
        return FgModule.from_invariants(ZZ, _SMALL[q]), FgModule.from_invariants(ZZ, _SMALL[s])
    raise InputError(f"unknown input kind {kind!r}")


# ----------------------------------------------------------------------------
# result helpers


def form(m: FgModule) -> dict:
    free, torsion = m.canonical_form()
    return {"free": free, "torsion": list(torsion), "text": m.describe()}


def _homology_table(c: ChainComplex, degrees) -> list[dict]:
    return [{"degree": k, "homology": form(c.homology(k))} for k in degrees]


def _over(c: ChainComplex, ring: RingSpec | None) -> ChainComplex:
    """Base change a complex over Z when --ring names a quotient."""
    if ring is None or ring == c.ring:
        return c
    if c.ring.is_integers:
        return base_change(c, ring)
    raise InputError(f"input is over {c.ring}, cannot use --ring {ring}")


def _same_ring(x, ring: RingSpec | None) -> None:
    if ring is not None and ring != x.ring:
        raise InputError(f"input is over {x.ring}, but --ring is {ring}")


def _degrees(req: CommandRequest, lo: int, hi: int) -> range:
    if req.degree_range is not None:
        return range(req.degree_range[0], req.degree_range[1] + 1)
    if req.degree is not None:
        return range(req.degree, req.degree + 1)
    return range(lo, hi + 1)


def _prime(req: CommandRequest, default: int = 2) -> int:
    if req.ring is None:
        return default
    if req.ring.is_integers:
        raise InputError(f"{req.command} needs --ring Zmod:<p>")
    return req.ring.modulus


# ----------------------------------------------------------------------------
# commands: each takes (request, input object) and returns (results, exit code)


def cmd_snf(req, a: ExactMatrix):
    u, d, v = smith_normal_form(a)
    diag = [d.entry(i, i) for i in range(min(d.rows, d.cols))]
    return {"shape": [a.rows, a.cols], "diagonal": diag,
            "rank": sum(1 for x in diag if x != 0),
            "certified": (u @ a @ v) == d}, EXIT_OK


def cmd_module(req, m: FgModule):
    return {"module": form(m), "invariants": list(m.invariants), "order": m.order(),
            "generators": m.ngens}, EXIT_OK


def cmd_homology(req, c: ChainComplex):
    c = _over(c, req.ring)
    return {"ring": str(c.ring), "ranks": [t.ngens for t in c.terms],
            "homology": _homology_table(c, _degrees(req, 0, c.top_degree))}, EXIT_OK


def cmd_postnikov(req, x):
    n = 0 if req.degree is None else req.degree
    if isinstance(x, SimplicialModule):
        _same_ring(x, req.ring)
        p, r = postnikov_section_simplicial(x, n)
        norm = moore_complex(p).normalized
        src = moore_complex(x).normalized
        top = p.level - 1
        return {"object": "simplicial", "degree": n, "level": p.level,
                "homotopy": [{"degree": k, "input": form(src.homology(k)), "section": form(norm.homology(k))}
                             for k in range(top + 1)]}, EXIT_OK
    c = _over(x, req.ring)
    p, r = postnikov_section(c, n)
    top = max(c.top_degree, p.top_degree)
    return {"object": "complex", "degree": n,
            "homology": [{"degree": k, "input": form(c.homology(k)), "section": form(p.homology(k)),
                          "iso": r.induced(k).is_iso() if k <= n else None}
                         for k in range(top + 1)]}, EXIT_OK


def cmd_kinv(req, c: ChainComplex):
    c = _over(c, req.ring)
    n = 0 if req.degree is None else req.degree
    e, k = k_invariant(c, n)
    null = is_nullhomotopic(k)
    return {"degree": n, "ring": str(c.ring),
            "target_homology": _homology_table(e, range(e.top_degree + 1)),
            "nullhomotopic": null,
            "verdict": "nullhomotopic" if null else "non-nullhomotopic"}, EXIT_OK


def cmd_dold_kan(req, c: ChainComplex):
    c = _over(c, req.ring)
    level = c.top_degree + 1 if req.degree is None else req.degree
    x = dold_kan(c, level)
    comparison = dold_kan_comparison(c, x)
    norm = moore_complex(x).normalized
    top = min(c.top_degree, level - 1)
    return {"level": level, "ranks": [m.ngens for m in x.levels],
            "normalization_iso": all(comparison.component(k).is_iso() for k in range(min(c.top_degree, level) + 1)),
            "homotopy": [{"degree": k, "homotopy": form(norm.homology(k)), "homology": form(c.homology(k))}
                         for k in range(top + 1)],
            "simplicial": x.to_json()}, EXIT_OK


def cmd_moore(req, x: SimplicialModule):
    _same_ring(x, req.ring)
    norm = moore_complex(x).normalized
    return {"level": x.level, "ranks": [t.ngens for t in norm.terms],
            "homotopy": _homology_table(norm, _degrees(req, 0, x.level - 1)),
            "normalized": norm.to_json()}, EXIT_OK


def cmd_matching(req, x: SimplicialModule):
    _same_ring(x, req.ring)
    rows = []
    for n in _degrees(req, 0, x.level):
        m, delta, _ = matching_object(x, n)
        kernel, _ = delta.kernel()
        rows.append({"degree": n, "matching": form(m), "delta_surjective": delta.is_surjective(),
                     "delta_kernel": form(kernel)})
    return {"level": x.level, "matching": rows}, EXIT_OK


def cmd_latching(req, x: SimplicialModule):
    _same_ring(x, req.ring)
    rows = []
    for n in _degrees(req, 0, x.level):
        lmod, sigma = latching_object(x, n)
        image, _, _ = sigma.image()
        rows.append({"degree": n, "latching": form(lmod), "sigma_injective": sigma.is_injective(),
                     "sigma_image": form(image)})
    return {"level": x.level, "latching": rows}, EXIT_OK


def cmd_bockstein(req, x: SimplicialModule):
    p = _prime(req)
    out = []
    exact = True
    for k in _degrees(req, 0, x.level - 1):
        r = mod_p_homotopy(x, p, k)
        exact &= r.report.exact
        out.append({"degree": k, "group": form(r.group), "tensor": form(r.tensor), "tor": form(r.tor),
                    "sequence": r.report.to_json()})
    return {"prime": p, "exact": exact, "degrees": out}, EXIT_OK if exact else EXIT_NEGATIVE


def cmd_compare_les(req, c: ChainComplex):
    if not c.ring.is_integers:
        raise InputError(f"compare-les needs a complex over Z, input is over {c.ring}")
    p = _prime(req)
    rng = req.degree_range or ((req.degree, req.degree) if req.degree is not None else None)
    data = comparison_les(c, BaseChange(p), rng)
    return {"modulus": p,
            "gamma": [{"degree": n, "gamma": form(g)} for n, g in sorted(data.gamma.groups.items())],
            "exact": data.report.exact, "sequence": data.report.to_json()}, \
        EXIT_OK if data.report.exact else EXIT_NEGATIVE


def cmd_spiral(req, x: BisimplicialModule):
    _same_ring(x, req.ring)
    rng = req.degree_range or ((req.degree, req.degree) if req.degree is not None else None)
    rep = spiral_sequence(x, rng)
    body = rep.to_json()
    body["ok"] = rep.ok
    return body, EXIT_OK if rep.ok else EXIT_NEGATIVE


def cmd_ext_classify(req, pair):
    quotient, sub = pair
    if not quotient.ring.is_integers:
        raise InputError("ext-classify works over Z")
    n = 2 if req.degree is None else req.degree
    reps = enumerate_extensions(quotient, sub)
    classes = em_classes(em_object(quotient, n), em_object(sub, n + 1))
    ext_group = hom_and_ext(quotient, sub)[1]
    rows = []
    images = []
    for r in reps:
        c = extension_to_class(r, n)
        back = class_to_extension(c)
        images.append(c.coords)
        rows.append({"total": form(r.total), "split": r.is_split(), "class": list(c.coords),
                     "roundtrip": extensions_equivalent(back, r)})
    bijective = sorted(images) == sorted(c.coords for c in classes) and len(set(images)) == len(images)
    ok = bijective and all(r["roundtrip"] for r in rows)
    return {"degree": n, "quotient": form(quotient), "sub": form(sub), "ext": form(ext_group),
            "extensions": len(reps), "cohomology_classes": len(classes), "bijective": bijective,
            "classes": rows}, EXIT_OK if ok else EXIT_NEGATIVE


def _problem(req, pair) -> LiftProblem:
    target, bounds = pair
    _same_ring(target, req.ring)
    return LiftProblem(target, req.bounds or bounds or Bounds())


def cmd_lift(req, pair):
    problem = _problem(req, pair)
    res = enumerate_lifts(problem)
    body = res.to_json()
    body["bounds"] = problem.bounds.to_json()
    body["realizable"] = bool(res.lifts)
    return body, EXIT_OK if res.lifts else EXIT_NEGATIVE


def cmd_oracle(req, pair):
    problem = _problem(req, pair)
    w = brute_force_realize(problem)
    body = {"bounds": problem.bounds.to_json(), "found": w is not None,
            "witness": None if w is None else w.to_json(),
            "homology": None if w is None else _homology_table(w, range(w.top_degree + 1))}
    return body, EXIT_OK if w is not None else EXIT_NEGATIVE


HANDLERS = {
    "snf": ("matrix", cmd_snf), "module": ("module", cmd_module), "homology": ("complex", cmd_homology),
    "postnikov": ("complex|simplicial", cmd_postnikov), "kinv": ("complex", cmd_kinv),
    "dold-kan": ("complex", cmd_dold_kan), "moore": ("simplicial", cmd_moore),
    "matching": ("simplicial", cmd_matching), "latching": ("simplicial", cmd_latching),
    "bockstein": ("simplicial", cmd_bockstein), "compare-les": ("complex", cmd_compare_les),
    "spiral": ("bisimplicial", cmd_spiral), "ext-classify": ("extension", cmd_ext_classify),
    "lift": ("lift", cmd_lift), "oracle": ("lift", cmd_oracle),
}


def _read(req: CommandRequest):
    kind, _ = HANDLERS[req.command]
    if req.input_path is None:
        if kind == "complex|simplicial":
            kind = "complex"
        # for these two commands --ring names the reduction, not the input ring
        ring = None if req.command in ("bockstein", "compare-les") else req.ring
        return random_input(kind, req.seed, ring), None
    raw = Path(req.input_path).read_bytes()
    digest = hashlib.sha256(raw).hexdigest()
    if kind == "complex|simplicial":
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as e:
            raise InputError(f"{req.input_path}:{e.lineno}:{e.colno}: {e.msg}") from None
        kind = "simplicial" if isinstance(obj, dict) and "level" in obj else "complex"
        return load_object(obj, kind), digest
    return parse_input(req.input_path, kind), digest


def execute(req: CommandRequest) -> Report:
    req.validate()
    start = time.perf_counter()
    obj, digest = _read(req)
    _, handler = HANDLERS[req.command]
    results, code = handler(req, obj)
    elapsed = time.perf_counter() - start
    return Report(request=req.echo(digest), results=results,
                  provenance={"tool": "moore_tower", "version": __version__, "seed": req.seed},
                  exit_code=code, timing={"seconds": round(elapsed, 3)} if req.timing else None)


# ----------------------------------------------------------------------------
# output


def _is_sequence(obj) -> bool:
    return isinstance(obj, dict) and {"terms", "verdicts", "exact"} <= obj.keys()


def sequence_table(seq: dict) -> list[str]:
    """One row per term with the verdict at that joint; '-' where the
    sequence has no joint."""
    by_index = {v["index"]: v for v in seq["verdicts"]}
    width = max([4] + [len(t["label"]) for t in seq["terms"]]) + 2
    lines = [f"{'term':<{width}}{'module':<24}verdict"]
    for k, t in enumerate(seq["terms"]):
        v = by_index.get(k)
        verdict = "-" if v is None else ("exact" if v["exact"] else "NOT EXACT")
        lines.append(f"{t['label']:<{width}}{_form_text(t['form']):<24}{verdict}")
    return lines


def _form_text(f: dict) -> str:
    parts = [f"Z/{d}" for d in f["torsion"]] + ["Z"] * f["free"]
    return " + ".join(parts) if parts else "0"


def _scalar(v) -> str:
    return json.dumps(v, sort_keys=True)


def _text_lines(obj, indent: int) -> list[str]:
    pad = "  " * indent
    lines = []
    for key in sorted(obj):
        v = obj[key]
        if _is_sequence(v):
            lines.append(f"{pad}{key}: {'exact' if v['exact'] else 'NOT EXACT'}")
            lines += [pad + "  " + row for row in sequence_table(v)]
        elif isinstance(v, dict) and "free" in v and "torsion" in v and "text" in v:
            lines.append(f"{pad}{key}: {v['text']}")
        elif isinstance(v, dict):
            lines.append(f"{pad}{key}:")
            lines += _text_lines(v, indent + 1)
        elif isinstance(v, list) and v and all(isinstance(e, dict) for e in v):
            lines.append(f"{pad}{key}:")
            for e in v:
                sub = _text_lines(e, indent + 2)
                lines.append(pad + "  - " + sub[0].lstrip())
                lines += sub[1:]
        else:
            lines.append(f"{pad}{key}: {_scalar(v)}")
    return lines


def emit_report(report: Report, fmt: str = "json") -> bytes:
    if fmt == "json":
        return (json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n").encode()
    if fmt != "text":
        raise InputError(f"unknown format {fmt!r}")
    body = report.to_json()
    lines = ["request:"] + _text_lines(body["request"], 1)
    lines += ["results:"] + _text_lines(body["results"], 1)
    lines += ["provenance:"] + _text_lines(body["provenance"], 1)
    if "timing" in body:
        lines += ["timing:"] + _text_lines(body["timing"], 1)
    return ("\n".join(lines) + "\n").encode()


# ----------------------------------------------------------------------------
# entry point


def _flag(parse):
    def wrapped(text):
        try:
            return parse(text)
        except InputError as e:
            raise argparse.ArgumentTypeError(str(e)) from None
    wrapped.__name__ = parse.__name__
    return wrapped


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="moore_tower", description="Postnikov towers, k-invariants and "
                                 "lifting along base change for chain complexes and simplicial modules.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("input", nargs="?", help="input JSON file; omit to use a random input from --seed")
    ap.add_argument("--ring", type=_flag(parse_ring))
    ap.add_argument("--degree", type=int)
    ap.add_argument("--range", dest="degree_range", type=_flag(parse_range))
    ap.add_argument("--bounds", type=_flag(parse_bounds))
    ap.add_argument("--seed", type=int)
    ap.add_argument("--format", default="json", choices=("json", "text"))
    ap.add_argument("--out")
    ap.add_argument("--no-timing", action="store_true", help="omit the timing section")
    return ap


def request_from_args(argv=None) -> CommandRequest:
    ns = build_parser().parse_args(argv)
    return CommandRequest(command=ns.command, ring=ns.ring, input_path=ns.input, output_path=ns.out,
                          degree=ns.degree, degree_range=ns.degree_range, bounds=ns.bounds, seed=ns.seed,
                          format=ns.format, timing=not ns.no_timing)


def main(argv=None) -> int:
    try:
        req = request_from_args(argv)
    except SystemExit as e:
        return EXIT_ERROR if e.code else EXIT_OK
    try:
        thread_cap()
        report = execute(req)
    except Exception as e:         # surfaced verbatim, with the exception type
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_ERROR
    data = emit_report(report, req.format)
    if req.output_path:
        Path(req.output_path).write_bytes(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    return report.exit_code
