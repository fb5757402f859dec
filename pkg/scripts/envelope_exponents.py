"""Decay exponent of |I_exact - I_K| on the manufactured two-interval fixture.

Prints the measured exponent per order and window next to -(K/2 + 4).

    python scripts/envelope_exponents.py --orders 0 1 2 3
"""

import argparse
from dataclasses import dataclass

import numpy as np

from polycf import approximate_cf
from polycf.fixtures import manufactured_two_interval
from polycf.scattering import asymptotic_order, intensity_difference


@dataclass
class Config:
    orders: tuple = (0, 1, 2, 3)
    windows: tuple = ((20.0, 200.0), (100.0, 1000.0))
    qpoints: int = 3000


def main(cfg: Config):
    m = manufactured_two_interval()
    qmin = min(w[0] for w in cfg.windows)
    qmax = max(w[1] for w in cfg.windows)
    q = np.geomspace(qmin, qmax, cfg.qpoints)
    for K in cfg.orders:
        cf = approximate_cf(m.spec, orders=(0, K))
        d = intensity_difference(m.exact, cf, q)
        for w in cfg.windows:
            est = asymptotic_order(d, q_window=w)
            print(f"K={K} q in [{w[0]:g}, {w[1]:g}]: exponent {est.exponent:.3f} +- {est.stderr:.3f}  "
                  f"(-(K/2+4) = {-(K / 2 + 4):.1f}, -(K+9/2) = {-(K + 4.5):.1f})")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--orders", type=int, nargs="+", default=list(Config.orders))
    ap.add_argument("--qpoints", type=int, default=Config.qpoints)
    a = ap.parse_args()
    main(Config(tuple(a.orders), Config.windows, a.qpoints))
