"""Audit back-mapped strategies against the grid adversary on seeded random games."""

import argparse
import sys
from dataclasses import dataclass
from fractions import Fraction

from rptg.fixtures import random_game
from rptg.pipeline import solve_game
from rptg.semantics import lipschitz_bound
from rptg.strategy import audit


@dataclass(frozen=True)
class Config:
    seeds: int = 100
    grid_k: int = 64
    epsilon: Fraction = Fraction(1, 10)
    samples: int = 20


def run(cfg: Config) -> bool:
    all_ok = True
    print("seed,checked,worst_gap,allowance,intervals_per_unit,ok")
    for seed in range(cfg.seeds):
        g, _ = random_game(seed)
        sol = solve_game(g, cfg.epsilon)
        grid = {Fraction(i, cfg.grid_k) for i in range(int(g.clock_max * cfg.grid_k) + 1)}
        grid |= {x for f in sol.optcost.values() for x in f.xs}
        tol = lipschitz_bound(g) / cfg.grid_k
        rep = audit(sol.strategy, g, sol.optcost, 2 * cfg.epsilon, cfg.samples, tol, sorted(grid), seed)
        worst = "" if rep.worst_gap is None else f"{float(rep.worst_gap):.6g}"
        print(f"{seed},{rep.checked},{worst},{float(2 * cfg.epsilon + tol):.6g},{rep.n_intervals},{rep.ok}")
        all_ok &= rep.ok
    return all_ok


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--seeds", type=int, default=Config.seeds)
    p.add_argument("--grid-k", type=int, default=Config.grid_k)
    p.add_argument("--epsilon", type=Fraction, default=Config.epsilon)
    p.add_argument("--samples", type=int, default=Config.samples)
    sys.exit(0 if run(Config(**vars(p.parse_args()))) else 1)
