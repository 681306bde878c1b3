"""Measure how many random drafts the class validator accepts per price range, by rejection kind."""

import argparse
import json
import random
from collections import Counter
from dataclasses import dataclass

from rptg.fixtures import REJECT_KINDS, FixtureConfig, random_doc
from rptg.model import parse_game, validate_game


@dataclass(frozen=True)
class Config:
    drafts: int = 1000
    locations: int = 5
    guard_max: int = 2
    seed: int = 0


def tally(cfg: Config, lo: int, hi: int) -> Counter:
    fc = FixtureConfig(locations=cfg.locations, price_lo=lo, price_hi=hi, guard_max=cfg.guard_max)
    rng = random.Random(cfg.seed)
    out = Counter()
    for _ in range(cfg.drafts):
        kinds = {d.kind for d in validate_game(parse_game(json.dumps(random_doc(rng, fc))))} & REJECT_KINDS
        out["accepted" if not kinds else "rejected"] += 1
        out.update(kinds)
    return out


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--drafts", type=int, default=Config.drafts)
    p.add_argument("--locations", type=int, default=Config.locations)
    p.add_argument("--guard-max", type=int, default=Config.guard_max)
    p.add_argument("--seed", type=int, default=Config.seed)
    cfg = Config(**vars(p.parse_args()))
    kinds = sorted(REJECT_KINDS)
    print(",".join(["price_lo", "price_hi", "drafts", "accepted", "rate", *kinds]))
    for lo, hi in ((0, 3), (-3, 3)):
        c = tally(cfg, lo, hi)
        print(",".join(map(str, [lo, hi, cfg.drafts, c["accepted"], f"{c['accepted'] / cfg.drafts:.3f}", *(c[k] for k in kinds)])))
