"""Command-line front end.

    critpeak constants   --N 4 --s 1
    critpeak lemma-check --N 5 --s 2
    critpeak reduced     --N 5 --s 1 --eps 1e-3 --Q paraboloid
    critpeak branch      --N 5 --s 2 --eps-range 1e-1:1e-4 --M 1600
    critpeak pohozaev    --N 4 --s 2 --eps 1e-2 --d 0.5
    critpeak uniqueness  --N 5 --s 2 --eps 1e-3

Flags override keys of a JSON file given by ``--config``. Floats are written in
full-precision scientific notation. Exit status: 0 success, 2 invalid input,
3 numerical failure (the error class name goes to standard error).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field, fields

import numpy as np

from . import asymptotics, pohozaev, radial, reduced
from .errors import DivergentIntegral, NumericalError, ValidationError
from .radial import fmt
from .weights import WeightSpec

COMMANDS = ("constants", "lemma-check", "reduced", "branch", "pohozaev", "uniqueness")


# ---------------------------------------------------------------------------
# serialization

def dumps(obj, indent: int = 2) -> str:
    """JSON with every float in ``.16e`` notation; NaN and infinities become null."""

    def enc(o, level):
        pad = " " * (indent * (level + 1))
        end = " " * (indent * level)
        if isinstance(o, dict):
            if not o:
                return "{}"
            items = [f"{pad}{json.dumps(str(k))}: {enc(v, level + 1)}" for k, v in o.items()]
            return "{\n" + ",\n".join(items) + "\n" + end + "}"
        if isinstance(o, (list, tuple, np.ndarray)):
            seq = list(o)
            if not seq:
                return "[]"
            return "[\n" + ",\n".join(pad + enc(v, level + 1) for v in seq) + "\n" + end + "]"
        if isinstance(o, (bool, np.bool_)):
            return "true" if o else "false"
        if o is None:
            return "null"
        if isinstance(o, (int, np.integer)):
            return str(int(o))
        if isinstance(o, (float, np.floating)):
            x = float(o)
            return "null" if not math.isfinite(x) else fmt(x)
        if isinstance(o, str):
            return json.dumps(o)
        raise TypeError(f"cannot serialize {type(o).__name__}")

    return enc(obj, 0) + "\n"


def csv_text(header: list[str], rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(r[k]) if isinstance(r[k], (float, int, np.floating, np.integer)) else str(r[k]) for k in header])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# configuration

@dataclass
class RunConfig:
    command: str
    N: int | None = None
    s: float | None = None
    eps: list = field(default_factory=list)
    eps_range: tuple | None = None
    Q: dict = field(default_factory=lambda: {"family": "paraboloid"})
    R: float = 1.0
    M: int = 1600
    d: float | None = None
    out: str | None = None
    seed: int = 0
    center: list | None = None

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ValidationError(f"unknown command {self.command!r}")
        if self.N is None or self.s is None:
            raise ValidationError("--N and --s are required")
        if self.M < 16:
            raise ValidationError("--M must be at least 16")
        if not self.R > 0:
            raise ValidationError("--R must be positive")
        if self.command in ("reduced", "pohozaev", "uniqueness") and not self.eps:
            raise ValidationError(f"{self.command} needs --eps")
        if self.command == "branch" and self.eps_range is None:
            raise ValidationError("branch needs --eps-range hi:lo")
        for e in self.eps:
            if not e > 0:
                raise ValidationError("eps must be positive")

    def weight(self) -> WeightSpec:
        return parse_weight(self.Q, self.N)


def parse_weight(spec, N: int) -> WeightSpec:
    """'paraboloid[:Q0[:curvature]]', 'constant[:Q0]', or a dict with family, Q0, curvature or hessian."""
    if isinstance(spec, str):
        parts = spec.split(":")
        d = {"family": parts[0]}
        try:
            if len(parts) > 1:
                d["Q0"] = float(parts[1])
            if len(parts) > 2:
                d["curvature"] = float(parts[2])
        except ValueError:
            raise ValidationError(f"bad weight spec {spec!r}") from None
        spec = d
    fam = spec.get("family", "paraboloid")
    q0 = float(spec.get("Q0", 1.0))
    if fam == "constant":
        return WeightSpec.constant(N, q0)
    if fam == "paraboloid":
        if "hessian" in spec:
            H = np.asarray(spec["hessian"], dtype=float)
        else:
            H = float(spec.get("curvature", -2.0)) * np.eye(N)
        if H.shape != (N, N):
            raise ValidationError("hessian must be N x N")
        return WeightSpec.paraboloid(q0, H)
    raise ValidationError(f"unknown weight family {fam!r}")


def parse_range(text: str) -> tuple[float, float]:
    try:
        a, b = (float(x) for x in text.split(":"))
    except ValueError:
        raise ValidationError(f"bad range {text!r}; expected hi:lo") from None
    if not (a > 0 and b > 0) or a == b:
        raise ValidationError("range endpoints must be distinct and positive")
    return a, b


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="critpeak", description=__doc__.split("\n")[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--N", type=int)
    ap.add_argument("--s", type=float)
    ap.add_argument("--eps", type=float, action="append", help="repeatable")
    ap.add_argument("--eps-range", dest="eps_range", help="hi:lo")
    ap.add_argument("--Q", help="paraboloid[:Q0[:curvature]] or constant[:Q0]")
    ap.add_argument("--R", type=float)
    ap.add_argument("--M", type=int)
    ap.add_argument("--d", type=float)
    ap.add_argument("--center", help="comma-separated ball center for pohozaev")
    ap.add_argument("--out")
    ap.add_argument("--config")
    ap.add_argument("--seed", type=int)
    return ap


def make_config(argv: list[str] | None = None) -> RunConfig:
    args = build_parser().parse_args(argv)
    data: dict = {}
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as ex:
            raise ValidationError(f"cannot read config: {ex}") from None
        if not isinstance(data, dict):
            raise ValidationError("config must be a JSON object")
        data = {k.replace("-", "_"): v for k, v in data.items()}
        unknown = set(data) - {f.name for f in fields(RunConfig)}
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
    for k in ("N", "s", "R", "M", "d", "out", "seed"):
        v = getattr(args, k)
        if v is not None:
            data[k] = v
    if args.eps is not None:
        data["eps"] = args.eps
    if args.eps_range is not None:
        data["eps_range"] = args.eps_range
    if args.Q is not None:
        data["Q"] = args.Q
    if args.center is not None:
        data["center"] = [float(x) for x in args.center.split(",")]
    data["command"] = args.command
    eps = data.get("eps", [])
    data["eps"] = sorted(float(e) for e in (eps if isinstance(eps, list) else [eps]))
    if isinstance(data.get("eps_range"), str):
        data["eps_range"] = parse_range(data["eps_range"])
    elif data.get("eps_range") is not None:
        data["eps_range"] = tuple(float(x) for x in data["eps_range"])
    cfg = RunConfig(**data)
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# commands

def cmd_constants(cfg: RunConfig) -> str:
    try:
        return dumps(asymptotics.compute_constants(cfg.N, cfg.s).as_dict())
    except DivergentIntegral as ex:
        # N + s = 5: B is infinite and the log(lam)/lam^2 law with omega_4 takes its place
        asymptotics.check_exponent(cfg.N, cfg.s)
        return dumps({
            "N": cfg.N,
            "s": float(cfg.s),
            "A": asymptotics.quadrature_A(cfg.N),
            "B": None,
            "B_note": str(ex),
            "omega_N": asymptotics.sphere_area(cfg.N),
            "S": asymptotics.sobolev_quotient(cfg.N, 1.0),
        })


LADDER_HEADER = ["lemma", "N", "s", "lambda", "value", "leading", "measure", "agreement", "error"]


def cmd_lemma_check(cfg: RunConfig) -> str:
    d = 0.5 if cfg.d is None else cfg.d
    rows = [r for L in asymptotics.lemma_ladders(cfg.N, cfg.s, d) for r in L.rows()]
    return csv_text(LADDER_HEADER, rows)


def _reduced_json(problem: reduced.ReducedProblem, sol: reduced.ReducedSolution) -> dict:
    out = {
        "N": problem.N,
        "s": problem.s,
        "eps": problem.eps,
        "verdict": sol.regime.value,
        "normalization": sol.normalization.value,
        "centers": [list(map(float, c)) for c in sol.centers],
        "log_heights": [float(x) for x in sol.log_heights],
        "prefactors": [float(x) for x in sol.prefactors],
        "residual": sol.residual,
        "miranda_depth": sol.miranda_depth,
        "certificate": sol.certificate,
    }
    if sol.regime is not reduced.Regime.NoSolution:
        out["peak_lambdas"] = [float(x) for x in sol.peak_lambdas(problem.peaks)]
    return out


def cmd_reduced(cfg: RunConfig) -> str:
    Q = cfg.weight()
    if not Q.peaks:
        raise ValidationError("the weight has no nondegenerate peak")
    peaks = tuple(reduced.PeakData.from_weight(Q, a) for a in Q.peaks)
    results = []
    for eps in cfg.eps:
        problem = reduced.ReducedProblem(cfg.N, cfg.s, eps, peaks)
        results.append(_reduced_json(problem, reduced.solve_reduced(problem)))
    return dumps(results[0] if len(results) == 1 else results)


def _radial_problem(cfg: RunConfig) -> radial.RadialProblem:
    return radial.RadialProblem.standard(cfg.N, cfg.s, cfg.M, cfg.R, cfg.weight())


def run_branch(cfg: RunConfig) -> tuple[radial.Branch, dict]:
    p = _radial_problem(cfg)
    hi, lo = cfg.eps_range
    d = 0.5 if cfg.d is None else cfg.d
    br = radial.continue_branch(p, hi, lo, pohozaev=pohozaev.branch_residual(d))
    summary = {"N": cfg.N, "s": cfg.s, "M": cfg.M, "stop_reason": br.stop_reason, "stop_eps": br.stop_eps,
               "points": len(br.points)}
    try:
        f = br.fit(1.0)
        summary.update({"fit_kind": f.kind, "slope": f.slope, "ci_low": f.ci_low, "ci_high": f.ci_high,
                        "fit_points": f.npoints, "drift_per_decade": f.drift_per_decade})
    except NumericalError as ex:
        summary["fit_error"] = str(ex)
    return br, summary


def cmd_branch(cfg: RunConfig) -> tuple[str, str]:
    br, summary = run_branch(cfg)
    return radial.branch_to_csv(br), dumps(summary)


def _solution(cfg: RunConfig, p: radial.RadialProblem, eps: float) -> radial.RadialSolution:
    return radial.initial_solution(p, eps, radial.predicted_bubble_lambda(p, eps))


def cmd_pohozaev(cfg: RunConfig) -> str:
    p = _radial_problem(cfg)
    Q = cfg.weight()
    d = 0.5 * cfg.R if cfg.d is None else cfg.d
    x0 = np.zeros(cfg.N) if cfg.center is None else np.asarray(cfg.center, dtype=float)
    if x0.size != cfg.N:
        raise ValidationError("--center needs N coordinates")
    out = []
    for eps in cfg.eps:
        u = pohozaev.RadialField.from_solution(_solution(cfg, p, eps))
        reports = [pohozaev.eval_translation_identity(u, Q, eps, cfg.s, x0, d, i) for i in range(cfg.N)]
        reports.append(pohozaev.eval_dilation_identity(u, Q, eps, cfg.s, x0, d))
        out.append({"eps": eps, "center": list(map(float, x0)), "d": d, "reports": [r.as_dict() for r in reports]})
    return dumps(out[0] if len(out) == 1 else out)


def cmd_uniqueness(cfg: RunConfig) -> str:
    p = _radial_problem(cfg)
    out = []
    for eps in cfg.eps:
        lam0 = radial.predicted_bubble_lambda(p, eps)
        # bubble heights scale like lam^((N-2)/2): the second guess is twice as tall
        lam1 = lam0 * 2.0 ** (2.0 / (cfg.N - 2))
        res = radial.uniqueness_probe(p, eps, lam0, lam1)
        scale = max(float(np.max(np.abs(s.values))) for s in res.solutions)
        item = {
            "eps": eps,
            "same": res.same,
            "sup_distance": res.sup_distance,
            "relative_sup_distance": res.sup_distance / scale,
            "comparable": res.comparable,
            "heights": [s.peak_height for s in res.solutions],
            "lambdas": [s.extracted_lambda for s in res.solutions],
        }
        if res.quotient is not None:
            item["quotient_normalizer"] = res.quotient.normalizer
            item["quotient_residual"] = res.quotient.residual_rel
        out.append(item)
    return dumps(out[0] if len(out) == 1 else out)


def run(cfg: RunConfig) -> int:
    """Execute one command and write its artifact to ``cfg.out`` or standard output."""
    side = None
    if cfg.command == "constants":
        text = cmd_constants(cfg)
    elif cfg.command == "lemma-check":
        text = cmd_lemma_check(cfg)
    elif cfg.command == "reduced":
        text = cmd_reduced(cfg)
    elif cfg.command == "branch":
        text, side = cmd_branch(cfg)
    elif cfg.command == "pohozaev":
        text = cmd_pohozaev(cfg)
    else:
        text = cmd_uniqueness(cfg)
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
        if side is not None:
            with open(cfg.out + ".fit.json", "w") as fh:
                fh.write(side)
    else:
        sys.stdout.write(text)
        if side is not None:
            sys.stderr.write(side)
    return 0


def main(argv: list[str] | None = None) -> int:
    try:
        return run(make_config(argv))
    except ValidationError as ex:
        print(f"{type(ex).__name__}: {ex}", file=sys.stderr)
        return 2
    except NumericalError as ex:
        print(f"{type(ex).__name__}: {ex}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
