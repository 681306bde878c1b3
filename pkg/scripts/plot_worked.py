"""Solve the worked examples and write value plots (SVG) and value tables (CSV)."""

import argparse
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from rptg.cli import svg_plot
from rptg.fixtures import WORKED
from rptg.pipeline import RejectedGame, solve_game


@dataclass(frozen=True)
class Config:
    out: Path = Path("out/worked")
    epsilon: Fraction = Fraction(1, 10)


def run(cfg: Config) -> None:
    cfg.out.mkdir(parents=True, exist_ok=True)
    for name, build in sorted(WORKED.items()):
        g = build()
        try:
            sol = solve_game(g, cfg.epsilon)
        except RejectedGame as exc:
            print(f"{name}: rejected ({exc.diagnostic.message})")
            continue
        inner = {k: v for k, v in sol.optcost.items() if not g.loc(k).is_target}
        (cfg.out / f"{name}.svg").write_text(svg_plot(inner))
        for lid, f in inner.items():
            (cfg.out / f"{name}.{lid}.csv").write_text(f.to_csv())
        print(f"{name}: " + ", ".join(f"{lid}(0)={f(0)}" for lid, f in sorted(inner.items())))


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--out", type=Path, default=Config.out)
    p.add_argument("--epsilon", type=Fraction, default=Config.epsilon)
    run(Config(**vars(p.parse_args())))
