"""Continue radial branches over several (N, s) and fit the scaling law of each."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass

from common import out_dir, parse

from critpeak import pohozaev, radial
from critpeak.errors import NumericalError


@dataclass
class Config:
    """Branch scan: one continuation per case, CSV plus fit summary per case."""

    cases: tuple = ("5:2:1e-1:1e-4", "4:2:1e-1:1e-3", "4:1:1:1e-3", "6:1.5:1e-1:1e-4")
    M: int = 1600
    steps_per_decade: int = 8
    fit_decades: float = 1.0
    out: str = "results/branch_scan"


def run_case(cfg: Config, case: str) -> dict:
    N, s, hi, lo = case.split(":")
    p = radial.RadialProblem.standard(int(N), float(s), cfg.M)
    t = time.monotonic()
    br = radial.continue_branch(p, float(hi), float(lo), cfg.steps_per_decade, pohozaev=pohozaev.branch_residual(0.5))
    row = {"N": p.N, "s": p.s, "points": len(br.points), "stop_reason": br.stop_reason,
           "stop_eps": br.stop_eps, "seconds": time.monotonic() - t}
    try:
        f = br.fit(cfg.fit_decades)
        row.update(kind=f.kind, slope=f.slope, ci=(f.ci_low, f.ci_high), drift_per_decade=f.drift_per_decade)
    except NumericalError as ex:
        row["fit_error"] = str(ex)
    end = br.points[-1]
    row["predicted_over_extracted"] = radial.predicted_peak_lambda(p, end.eps) / end.lam
    return row, radial.branch_to_csv(br)


def main(cfg: Config) -> None:
    d = out_dir(cfg)
    summary = []
    for case in cfg.cases:
        row, csv = run_case(cfg, case)
        (d / f"branch_N{row['N']}_s{row['s']:g}.csv").write_text(csv)
        summary.append(row)
        print(json.dumps(row))
    (d / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")


if __name__ == "__main__":
    main(parse(Config))
