"""Compare solver values against the grid oracle on seeded random games; writes CSV."""

import argparse
import csv
import math
import sys
import time
from dataclasses import dataclass
from fractions import Fraction

from rptg.fixtures import FixtureConfig, random_game
from rptg.pipeline import solve_game
from rptg.semantics import lipschitz_bound, oracle_optcost


@dataclass(frozen=True)
class Config:
    seeds: int = 100
    grid_k: int = 64
    epsilon: Fraction = Fraction(1, 10)
    locations: int = 5


def run(cfg: Config, out) -> bool:
    w = csv.writer(out)
    w.writerow(["seed", "locations", "delta", "solve_s", "oracle_s", "max_gap", "bound", "ok"])
    all_ok = True
    for seed in range(cfg.seeds):
        g, _ = random_game(seed, FixtureConfig(locations=cfg.locations))
        t = time.perf_counter()
        sol = solve_game(g, cfg.epsilon)
        ts = time.perf_counter() - t
        t = time.perf_counter()
        oracle = oracle_optcost(g, cfg.grid_k)
        to = time.perf_counter() - t
        bound = float(lipschitz_bound(g)) / cfg.grid_k
        gap = 0.0
        for loc in g.locations:
            for i in range(int(g.clock_bound * cfg.grid_k) + 1):
                a, b = float(sol.optcost[loc.id](Fraction(i, cfg.grid_k))), oracle[loc.id][i]
                gap = max(gap, (0.0 if a == b else math.inf) if math.isinf(a) or math.isinf(b) else abs(a - b))
        ok = gap <= bound
        all_ok &= ok
        w.writerow([seed, len(g.locations), g.delta, f"{ts:.3f}", f"{to:.3f}", f"{gap:.6g}", f"{bound:.6g}", ok])
    return all_ok


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--seeds", type=int, default=Config.seeds)
    p.add_argument("--grid-k", type=int, default=Config.grid_k)
    p.add_argument("--epsilon", type=Fraction, default=Config.epsilon)
    p.add_argument("--locations", type=int, default=Config.locations)
    sys.exit(0 if run(Config(**vars(p.parse_args())), sys.stdout) else 1)
