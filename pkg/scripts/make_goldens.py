"""Write the CLI golden corpus under tests/golden.

Inputs are generated here and committed with the outputs; every command is
run in-process from inside tests/golden so the echoed input paths are
relative. Re-run after an intentional change to the report format:

    python3 scripts/make_goldens.py
"""
import json
import os
import sys
from pathlib import Path

from moore_tower.chain import ChainComplex
from moore_tower.cli import main
from moore_tower.exactalg import FgModule, RingSpec, ZZ
from moore_tower.lift import _interval_sum
from moore_tower.simplicial import dold_kan

GOLDEN = Path(__file__).resolve().parent.parent / "tests" / "golden"
Z4 = RingSpec.mod(4)


def inputs() -> dict:
    periodic = ChainComplex.free(Z4, [1, 1, 1], [[[2]], [[2]]])
    moore2 = ChainComplex.free(ZZ, [1, 1], [[[2]]])
    return {
        "matrix.json": {"ring": "Z", **ChainComplex.free(ZZ, [2, 3], [[[2, 4, 4], [-6, 6, 12]]]).d(1).matrix.to_json()},
        "module.json": {"ring": "Z", **FgModule.from_invariants(ZZ, [2, 6, 0]).to_json()},
        "periodic_z4.json": periodic.to_json(),
        "moore_z2.json": moore2.to_json(),
        "gamma_moore_z2.json": dold_kan(moore2, 3).to_json(),
        "unrealizable.json": {"target": _interval_sum(Z4, [(0, 2)]).to_json(),
                              "bounds": {"deg": 3, "rank": 2, "entry": 3}},
        "z2_by_z2.json": {"ring": "Z", "quotient": FgModule.cyclic(ZZ, 2).to_json(),
                          "sub": FgModule.cyclic(ZZ, 2).to_json()},
    }


# (golden name, argv); text-format entries exercise the table renderer
CORPUS = [
    ("snf", ["snf", "matrix.json"]),
    ("module", ["module", "module.json"]),
    ("homology", ["homology", "periodic_z4.json", "--format", "text"]),
    ("postnikov", ["postnikov", "moore_z2.json", "--degree", "0"]),
    ("kinv_periodic", ["kinv", "periodic_z4.json", "--degree", "1"]),
    ("kinv_seed", ["kinv", "--seed", "7", "--degree", "0"]),
    ("dold_kan", ["dold-kan", "moore_z2.json", "--degree", "3"]),
    ("moore", ["moore", "gamma_moore_z2.json"]),
    ("matching", ["matching", "gamma_moore_z2.json", "--format", "text"]),
    ("latching", ["latching", "gamma_moore_z2.json"]),
    ("bockstein", ["bockstein", "gamma_moore_z2.json", "--ring", "Zmod:2", "--range", "0..1", "--format", "text"]),
    ("compare_les", ["compare-les", "moore_z2.json", "--ring", "Zmod:2", "--format", "text"]),
    ("compare_les_seed", ["compare-les", "--seed", "11", "--ring", "Zmod:3"]),
    ("spiral_seed", ["spiral", "--seed", "5", "--format", "text"]),
    ("ext_classify", ["ext-classify", "z2_by_z2.json", "--degree", "2"]),
    ("lift_unrealizable", ["lift", "unrealizable.json"]),
    ("lift_seed", ["lift", "--seed", "2", "--bounds", "rank=2,entry=3,deg=3"]),
    ("oracle_unrealizable", ["oracle", "unrealizable.json", "--format", "text"]),
    ("oracle_seed", ["oracle", "--seed", "2"]),
]


def golden_name(name: str, argv: list) -> str:
    return f"{name}.{'txt' if 'text' in argv else 'json'}"


def run(argv: list, out: Path) -> int:
    """Run one corpus entry from inside the golden directory."""
    here = os.getcwd()
    os.chdir(GOLDEN)
    try:
        return main([*argv, "--no-timing", "--out", str(out)])
    finally:
        os.chdir(here)


def write_inputs() -> None:
    (GOLDEN / "inputs").mkdir(parents=True, exist_ok=True)
    for name, obj in inputs().items():
        (GOLDEN / "inputs" / name).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def corpus_argv(argv: list) -> list:
    return [f"inputs/{a}" if a.endswith(".json") else a for a in argv]


def main_() -> int:
    write_inputs()
    codes = {}
    for name, argv in CORPUS:
        out = GOLDEN / golden_name(name, argv)
        codes[name] = run(corpus_argv(argv), out)
        print(f"{name:<22} exit {codes[name]}")
    (GOLDEN / "exit_codes.json").write_text(json.dumps(codes, indent=2, sort_keys=True) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main_())
