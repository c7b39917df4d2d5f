"""Residuals of the local identities on one solution under repeated grid doubling."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from common import out_dir, parse

from critpeak import pohozaev as P
from critpeak import radial
from critpeak.weights import WeightSpec


@dataclass
class Config:
    """Pohozaev refinement study at fixed eps."""

    N: int = 4
    s: float = 2.0
    eps: float = 1e-2
    M0: int = 400
    levels: int = 4
    d: float = 0.3
    offset: float = 0.1
    out: str = "results/pohozaev_refinement"


def main(cfg: Config) -> None:
    d = out_dir(cfg)
    Q = WeightSpec.standard(cfg.N)
    x_off = np.zeros(cfg.N)
    x_off[0] = cfg.offset
    rows = []
    for k in range(cfg.levels):
        M = cfg.M0 * 2 ** k
        p = radial.RadialProblem.standard(cfg.N, cfg.s, M)
        sol = radial.initial_solution(p, cfg.eps, radial.predicted_bubble_lambda(p, cfg.eps))
        u = P.RadialField.from_solution(sol)
        dil = P.eval_dilation_identity(u, Q, cfg.eps, cfg.s, np.zeros(cfg.N), cfg.d)
        off = P.eval_translation_identity(u, Q, cfg.eps, cfg.s, x_off, cfg.d, 0)
        rows.append({"M": M, "lambda": sol.extracted_lambda,
                     "dilation_rel": dil.relative_residual,
                     "translation_off_rel": off.relative_residual,
                     "translation_off_term_rel": off.term_relative_residual})
    for a, b in zip(rows, rows[1:]):
        b["dilation_order"] = math.log2(a["dilation_rel"] / b["dilation_rel"])
    keys = list(rows[-1])
    with open(d / "refinement.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, keys, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: f"{r[k]:.16e}" if k in r and isinstance(r[k], float) else r.get(k, "") for k in keys})
    for r in rows:
        print(r)


if __name__ == "__main__":
    main(parse(Config))
