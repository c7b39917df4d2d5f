"""Local uniqueness probe: pairs of guesses with different heights at several eps."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from common import out_dir, parse

from critpeak import radial


@dataclass
class Config:
    """Probe whether distinct starting heights reach the same solution."""

    N: int = 5
    s: float = 2.0
    M: int = 1600
    eps: tuple = (1e-2, 1e-3, 1e-4)
    height_factors: tuple = (0.5, 2.0, 3.5)
    out: str = "results/uniqueness"


def main(cfg: Config) -> None:
    d = out_dir(cfg)
    p = radial.RadialProblem.standard(cfg.N, cfg.s, cfg.M)
    out = []
    for eps in cfg.eps:
        lam0 = radial.predicted_bubble_lambda(p, eps)
        for f in cfg.height_factors:
            lam1 = lam0 * f ** (2.0 / (cfg.N - 2))
            res = radial.uniqueness_probe(p, eps, lam0, lam1)
            scale = max(float(np.max(s.values)) for s in res.solutions)
            row = {"eps": eps, "height_factor": f, "same": res.same,
                   "relative_sup_distance": res.sup_distance / scale}
            out.append(row)
            print(row)
    (d / "probe.json").write_text(json.dumps(out, indent=2) + "\n")


if __name__ == "__main__":
    main(parse(Config))
