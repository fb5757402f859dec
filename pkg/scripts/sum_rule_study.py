"""Sum-rule deviation |I(0) - V| / V against order and meeting breakpoint.

    python scripts/sum_rule_study.py --orders 0 1 2
"""

import argparse
from dataclasses import dataclass

from polycf import approximate_cf
from polycf.geometry.fitting import build_cld_spec
from polycf.geometry.polyhedron import build_platonic
from polycf.scattering import sum_rule_integral


@dataclass
class Config:
    orders: tuple = (0, 1, 2)
    solids: tuple = ("cube", "tetrahedron", "octahedron")


def main(cfg: Config):
    for name in cfg.solids:
        p = build_platonic(name)
        spec = build_cld_spec(p, depth=max(cfg.orders) + 1)
        M = len(spec.intervals)
        for K in cfg.orders:
            row = []
            for meet in range(1, M):
                cf = approximate_cf(spec, K, meet_index=meet)
                row.append(f"meet {meet}: {abs(sum_rule_integral(cf) - p.volume) / p.volume:.2e}")
            print(f"{name:12s} K={K}  " + "  ".join(row))


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--orders", type=int, nargs="+", default=list(Config.orders))
    ap.add_argument("--solids", nargs="+", default=list(Config.solids))
    a = ap.parse_args()
    main(Config(tuple(a.orders), tuple(a.solids)))
