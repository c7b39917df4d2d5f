"""Acceptance criteria 1-9. Each check logs one PASS/FAIL line, shown in the terminal summary."""

import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import OUTCOMES, SESSION_START, rel
from critpeak import asymptotics, pohozaev, radial, reduced
from critpeak.errors import DivergentIntegral, ValidationError
from critpeak.weights import WeightSpec


def report(log, k, ok, detail):
    log.append(f"CRITERION {k}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


# 1 ------------------------------------------------------------------------------------------

def test_criterion_1_constants(acceptance_log):
    t = time.monotonic()
    worst, checked, divergent = 0.0, 0, []
    for N in range(3, 9):
        worst = max(worst, rel(asymptotics.quadrature_A(N), asymptotics.closed_form_A(N)))
        for s in (1.0, 1.5, 2.0):
            if s >= (N + 2) / (N - 2):
                continue
            try:
                exact = asymptotics.closed_form_B(N, s)
            except DivergentIntegral:
                divergent.append((N, s))
                with pytest.raises(DivergentIntegral):
                    asymptotics.quadrature_B(N, s)
                continue
            worst = max(worst, rel(asymptotics.quadrature_B(N, s), exact))
            checked += 1
    dt = time.monotonic() - t
    ok = worst <= 1e-8 and dt < 1.0
    report(acceptance_log, 1, ok, f"max rel err {worst:.2e} over A(N=3..8) and {checked} B cases "
                                  f"(B undefined at {divergent}); {dt:.2f} s")


# 2 ------------------------------------------------------------------------------------------

LADDER_CASES = [(4, 1.0), (4, 1.5), (4, 2.0), (5, 1.0), (5, 1.5), (5, 2.0), (6, 1.0), (6, 1.5)]


def test_criterion_2_lemma_ladders(acceptance_log):
    t = time.monotonic()
    bad, top, count = [], 0.0, 0
    for N, s in LADDER_CASES:
        for L in asymptotics.lemma_ladders(N, s):
            count += 1
            top = max(top, float(L.errors[-1]))
            if not (L.decreasing() and L.errors[-1] <= 0.1):
                bad.append((N, s, L.name))
    dt = time.monotonic() - t
    ok = not bad and dt < 30
    report(acceptance_log, 2, ok, f"{count} ladders (log case N=4, s=1 included), worst top error {top:.1e}, "
                                  f"non-conforming {bad}; {dt:.1f} s")


# 3 ------------------------------------------------------------------------------------------

def test_criterion_3_truth_table(acceptance_log):
    none_at, out_of_range, wrong = set(), set(), []
    for N in (4, 5, 6):
        for s in (1.0, 1.5, 2.0):
            for eps in (1e-3, 1e-4):
                peak = reduced.PeakData.paraboloid(N, -2.0 * N)
                try:
                    prob = reduced.ReducedProblem(N, s, eps, (peak,))
                except ValidationError:
                    out_of_range.add((N, s))
                    continue
                sol = reduced.solve_reduced(prob)
                if sol.regime is reduced.Regime.NoSolution:
                    none_at.add((N, s))
                elif sol.residual > 1e-10:
                    wrong.append((N, s, eps, sol.residual))
    expected = {(5, 1.0), (6, 1.0)}
    ok = none_at == expected and not wrong and out_of_range == {(6, 2.0)}
    report(acceptance_log, 3, ok, f"NoSolution at {sorted(none_at)}; (6, 2) is s = 2*-1, outside the admissible "
                                  f"range, reported as {sorted(out_of_range)}; unconverged {wrong}")


# 4 ------------------------------------------------------------------------------------------

def test_criterion_4_power_law(branch_5_2, acceptance_log):
    p, br, seconds = branch_5_2
    fit = br.fit(1.0)
    end = br.points[-1]
    pred = radial.predicted_peak_lambda(p, end.eps)
    slope_err = abs(fit.slope / (-2 / 3) - 1)
    pred_err = rel(pred, end.lam)
    ok = fit.kind == "power" and slope_err <= 0.1 and pred_err <= 0.25 and seconds < 300
    report(acceptance_log, 4, ok, f"slope {fit.slope:.5f} (off {slope_err:.2%}), reduced prediction off {pred_err:.2%} "
                                  f"at eps={end.eps:.1e}; {len(br.points)} points in {seconds:.1f} s")


# 5 ------------------------------------------------------------------------------------------

def test_criterion_5_exp_law(branch_4_1, acceptance_log):
    _, br, seconds = branch_4_1
    fit = br.fit(1.0)
    ok = fit.kind == "exp" and fit.drift_per_decade <= 0.2 and seconds < 300
    report(acceptance_log, 5, ok, f"eps*log(lam) drifts {fit.drift_per_decade:.0%} per decade over the resolved tail "
                                  f"(budget 20%); rate {fit.slope:.3f}; branch stops with {br.stop_reason} at "
                                  f"eps={br.stop_eps:.4f}; {seconds:.1f} s")


# 6 ------------------------------------------------------------------------------------------

def _monotone_from(w):
    """First index after which w strictly decreases to the end."""
    k = len(w) - 1
    while k > 0 and w[k] < w[k - 1]:
        k -= 1
    return k


def test_criterion_6_structure(branch_5_2, branch_4_2, branch_4_1, acceptance_log):
    parts, ok = [], True
    for _, br, _ in (branch_5_2, branch_4_2, branch_4_1):
        w = np.array([pt.w_rel for pt in br.points])
        k = _monotone_from(w)
        mass = br.points[-1].mass_ratio
        # eventual: the decreasing tail covers at least half the branch
        good = k <= len(w) // 2 and mass > 0.99
        ok &= good
        parts.append(f"N={br.N} s={br.s:g}: w decreasing from point {k}/{len(w)}, mass {mass:.6f}")
    report(acceptance_log, 6, ok, "; ".join(parts))


# 7 ------------------------------------------------------------------------------------------

def test_criterion_7_pohozaev(branch_5_2, branch_4_2, branch_4_1, refined_lambdas, acceptance_log):
    worst_parity, min_gain, npts = 0.0, math.inf, 0
    res = pohozaev.branch_residual(0.5)
    for p, br, _ in (branch_5_2, branch_4_2, branch_4_1):
        Q = WeightSpec.standard(p.N)
        pf = p.refined(2)
        for pt, (coarse, fine) in zip(br.points, refined_lambdas[(p.N, p.s)]):
            u = pohozaev.RadialField.from_solution(pt.solution)
            for i in (0, p.N - 1):
                r = pohozaev.eval_translation_identity(u, Q, pt.eps, p.s, np.zeros(p.N), 0.5, i)
                # both sides are zero by parity; measure against the largest term
                worst_parity = max(worst_parity, abs(r.lhs), abs(r.rhs), r.term_relative_residual)
            min_gain = min(min_gain, res(p, coarse) / res(pf, fine))
            npts += 1
    # term-by-term assembly on a non-radial smooth field and an off-center ball
    N = 5
    a = np.linspace(0.3, 0.9, N)
    u = pohozaev.AnalyticField(
        N,
        lambda x: np.exp(-np.sum(x * x, axis=-1)) * (1.5 + np.sin(x @ a)),
        lambda x: np.exp(-np.sum(x * x, axis=-1))[..., None]
        * (-2 * x * (1.5 + np.sin(x @ a))[..., None] + np.cos(x @ a)[..., None] * a),
    )
    Q = WeightSpec.paraboloid(1.3, -np.diag(np.arange(1.0, N + 1)), np.linspace(0.1, -0.1, N))
    x0, d, eps, s = np.full(N, 0.05), 0.8, 0.37, 1.5
    worst_asm = 0.0
    for i in range(N):
        rep = pohozaev.eval_translation_identity(u, Q, eps, s, x0, d, i)
        lhs, rhs = pohozaev.assemble_translation(u, Q, eps, s, x0, d, i)
        worst_asm = max(worst_asm, abs(lhs - rep.lhs) / rep.term_scale, abs(rhs - rep.rhs) / rep.term_scale)
    rep = pohozaev.eval_dilation_identity(u, Q, eps, s, x0, d)
    lhs, rhs = pohozaev.assemble_dilation(u, Q, eps, s, x0, d)
    worst_asm = max(worst_asm, abs(lhs - rep.lhs) / rep.term_scale, abs(rhs - rep.rhs) / rep.term_scale)
    ok = worst_parity <= 1e-10 and min_gain >= 2 and worst_asm <= 1e-12
    report(acceptance_log, 7, ok, f"{npts} branch points: parity residual {worst_parity:.1e}, dilation residual "
                                  f"shrinks at least {min_gain:.2f}x under doubling; assembly gap {worst_asm:.1e}")


# 8 ------------------------------------------------------------------------------------------

def test_criterion_8_uniqueness(acceptance_log):
    p = radial.RadialProblem.standard(5, 2.0, 1600)
    lam0 = radial.predicted_bubble_lambda(p, 1e-3)
    # a factor 2 in height is a factor 2^(2/(N-2)) in lambda
    res = radial.uniqueness_probe(p, 1e-3, lam0, lam0 * 2 ** (2 / 3))
    h = [s.peak_height for s in res.solutions]
    scale = max(float(np.max(np.abs(s.values))) for s in res.solutions)
    relative = res.sup_distance / scale
    ok = res.same and relative <= 1e-8
    report(acceptance_log, 8, ok, f"guess heights differ by 2x; converged heights {h[0]:.6e}, {h[1]:.6e}; "
                                  f"sup distance {relative:.1e} of the sup norm")


# 9 ------------------------------------------------------------------------------------------

def _property_outcomes():
    """Outcomes of the module suites from this session, or from a fresh run when they were not collected."""
    if OUTCOMES:
        return dict(OUTCOMES), time.monotonic() - SESSION_START
    here = Path(__file__).parent
    files = sorted(str(f) for f in here.glob("test_*.py") if f.name != "test_acceptance.py")
    t = time.monotonic()
    proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-rA", "-p", "no:cacheprovider", *files],
                          capture_output=True, text=True, cwd=here.parent, check=False)
    out = {}
    for line in proc.stdout.splitlines():
        head, _, rest = line.partition(" ")
        if head in ("PASSED", "FAILED", "ERROR", "XFAIL", "XPASS", "SKIPPED"):
            out[rest.split(" - ")[0]] = {"XFAIL": "xfailed"}.get(head, head.lower())
    return out, time.monotonic() - t


def test_criterion_9_property_suites(acceptance_log):
    outcomes, seconds = _property_outcomes()
    bad = sorted(k for k, v in outcomes.items() if v not in ("passed", "xfailed"))
    ok = bool(outcomes) and not bad and seconds < 900
    report(acceptance_log, 9, ok, f"{len(outcomes)} property/unit tests, non-passing {bad}; "
                                  f"suite time {seconds:.0f} s (budget 900 s)")
