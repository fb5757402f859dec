"""Fit chord-length specs for the Platonic test solids from the geometry oracle.

    python scripts/build_specs.py --out specs --depth 3
"""

import argparse
import time
from dataclasses import dataclass
from pathlib import Path

from polycf.geometry.features import enumerate_breakpoints
from polycf.geometry.fitting import build_cld_spec
from polycf.geometry.polyhedron import build_platonic
from polycf.io import save_cld_spec


@dataclass
class Config:
    out: Path = Path("specs")
    depth: int = 3
    edge: float = 1.0
    solids: tuple = ("cube", "tetrahedron", "octahedron")


def main(cfg: Config):
    cfg.out.mkdir(parents=True, exist_ok=True)
    for name in cfg.solids:
        t0 = time.perf_counter()
        p = build_platonic(name, cfg.edge)
        bps = enumerate_breakpoints(p)
        spec = build_cld_spec(p, cfg.depth, bps)
        save_cld_spec(spec, cfg.out / f"{name}.json")
        D = ", ".join(f"{float(d):.6f}" for d in spec.breakpoints[1:])
        print(f"{name:12s} M={len(spec.intervals)}  D=[{D}]  A={float(spec.angularity):.6f}  "
              f"S={float(spec.sharpness):.6f}  {time.perf_counter() - t0:.1f} s")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Config.out)
    ap.add_argument("--depth", type=int, default=Config.depth)
    ap.add_argument("--edge", type=float, default=Config.edge)
    ap.add_argument("--solids", nargs="+", default=list(Config.solids))
    a = ap.parse_args()
    main(Config(a.out, a.depth, a.edge, tuple(a.solids)))
