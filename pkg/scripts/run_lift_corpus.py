"""Run the tower search and the brute-force oracle on the lifting corpus
and print a verdict table; MOORE_TOWER_THREADS caps the worker processes.

    python3 scripts/run_lift_corpus.py [--seed 0] [--modulus 4] [--out verdicts.json]
"""
import argparse
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from functools import partial

from moore_tower.chain import base_change, find_homotopy_equivalence
from moore_tower.cli import thread_cap
from moore_tower.exactalg import RingSpec
from moore_tower.lift import LiftProblem, brute_force_realize, enumerate_lifts, lift_corpus


@dataclass
class CorpusConfig:
    seed: int = 0
    modulus: int = 4


@dataclass
class Verdict:
    name: str
    tower: bool
    oracle: bool
    lifts_verified: bool
    tower_seconds: float
    oracle_seconds: float


def judge(cfg: CorpusConfig, index: int) -> Verdict:
    # complexes hold locks and do not pickle, so each worker rebuilds the corpus
    name, target = lift_corpus(seed=cfg.seed, modulus=cfg.modulus)[index]
    problem = LiftProblem(target)
    t0 = time.perf_counter()
    res = enumerate_lifts(problem)
    t1 = time.perf_counter()
    witness = brute_force_realize(problem)
    t2 = time.perf_counter()
    ring = RingSpec.mod(problem.modulus)
    verified = all(find_homotopy_equivalence(base_change(y, ring), target) is not None for y, _ in res)
    return Verdict(name, len(res) > 0, witness is not None, verified, round(t1 - t0, 2), round(t2 - t1, 2))


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--modulus", type=int, default=4)
    ap.add_argument("--out")
    args = ap.parse_args()
    cfg = CorpusConfig(args.seed, args.modulus)
    corpus = lift_corpus(seed=cfg.seed, modulus=cfg.modulus)
    with ProcessPoolExecutor(max_workers=min(thread_cap(), len(corpus))) as pool:
        verdicts = list(pool.map(partial(judge, cfg), range(len(corpus))))
    agree = all(v.tower == v.oracle and v.lifts_verified for v in verdicts)
    for v in verdicts:
        mark = "ok " if v.tower == v.oracle and v.lifts_verified else "BAD"
        print(f"{mark} {v.name:<28} tower={v.tower!s:<5} oracle={v.oracle!s:<5} "
              f"{v.tower_seconds:>6.2f}s {v.oracle_seconds:>6.2f}s")
    print(f"{len(verdicts)} targets, {sum(not v.oracle for v in verdicts)} unrealizable, "
          f"{'all agree' if agree else 'DISAGREEMENT'}")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump({"config": asdict(cfg), "verdicts": [asdict(v) for v in verdicts]}, fh, indent=2)
    return 0 if agree else 1


if __name__ == "__main__":
    sys.exit(main())
