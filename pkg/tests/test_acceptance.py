"""End-to-end acceptance checks.

Each test prints one `ACCEPTANCE nn <name>: PASS|FAIL (<measured detail>)`
line and then asserts the stated claim at its stated tolerance.  Expensive
noise-only runs are computed once and shared across criteria.
"""

import json
import math
import time

import numpy as np
import pytest

from lss_sense import (
    ChannelModel,
    DetectorKind,
    ExperimentConfig,
    NoiseModel,
    ObservationMatrix,
    RandomStream,
    ScmSummary,
    compute_scm_summary,
    hermitian_eigenvalues,
    inverse_scm_bias_check,
    ks_critical_value,
    ks_statistic,
    lss_contour,
    mean_correction_numeric,
    mp_moment,
    mp_moment_numeric,
    np_threshold,
    null_distribution,
    run_monte_carlo,
    sample_h0,
    sensitivity_partials,
    t_hdl,
    t_hdq,
    t_hds,
    wilson_interval,
)
from lss_sense.cli import main as cli_main

SEED = 2
HD = (DetectorKind.HDL, DetectorKind.HDS, DetectorKind.HDQ)
WORKERS = 4

_H0_CACHE: dict = {}
_TIMING: dict = {}


def _h0_run(m, l, trials=100_000):
    key = (m, l, trials)
    if key not in _H0_CACHE:
        cfg = ExperimentConfig(m=m, l=l, trials=trials, seed=SEED)
        t0 = time.perf_counter()
        _H0_CACHE[key] = run_monte_carlo(cfg, hypotheses=("h0",), workers=WORKERS).h0
        _TIMING[key] = time.perf_counter() - t0
    return _H0_CACHE[key]


def _pd(m, l, snr_db, pfa, trials, rho=None):
    ch = ChannelModel.exponential(rho) if rho is not None else ChannelModel.uncorrelated()
    cfg = ExperimentConfig(m=m, l=l, snr_db=snr_db, channel=ch, trials=trials, seed=SEED)
    res = run_monte_carlo(cfg, hypotheses=("h1",), workers=WORKERS)
    return {
        kind: float(np.mean(res.h1[kind] > np_threshold(kind, m, l, pfa))) for kind in HD
    }


def _report(num, name, ok, detail):
    print(f"ACCEPTANCE {num:02d} {name}: {'PASS' if ok else 'FAIL'} ({detail})")


def test_criterion_01_null_distribution_reproduction():
    stats = _h0_run(90, 30)
    runtime = _TIMING[(90, 30, 100_000)]
    mean_tol = {DetectorKind.HDL: 3 * math.sqrt(3 / 1e5), DetectorKind.HDS: 0.15, DetectorKind.HDQ: 0.12}
    ks_crit = ks_critical_value(0.01, 100_000)
    clauses, parts = [], []
    for kind in HD:
        nd = null_distribution(kind, 90, 30)
        x = stats[kind]
        dm = abs(float(x.mean()) - nd.mean)
        dv = abs(float(x.var(ddof=1)) / nd.variance - 1.0)
        ks = ks_statistic(x, nd.mean, nd.variance)
        ok = dm <= mean_tol[kind] and dv <= 0.10 and ks < ks_crit
        clauses.append(ok)
        parts.append(f"{kind.value}: dmean {dm:.4f}/{mean_tol[kind]:.4f}, dvar {dv:.2%}/10%, KS {ks:.6f}/{ks_crit:.6f}")
    clauses.append(runtime < 120.0)
    parts.append(f"runtime {runtime:.1f}s/120s")
    ok = all(clauses)
    _report(1, "null-distribution-reproduction", ok, "; ".join(parts))
    assert ok, parts


def test_criterion_02_headline_detection_and_ordering():
    pd70 = _pd(70, 30, -10.0, 0.01, 10_000)
    headline_ok = all(pd70[kind] >= 0.97 for kind in HD)
    grid = (-20.0, -15.0, -10.0, -5.0, 0.0)
    order_ok = True
    for snr in grid:
        hi = _pd(70, 30, snr, 0.01, 4000)
        lo = _pd(15, 30, snr, 0.01, 4000)
        order_ok &= all(hi[kind] >= lo[kind] for kind in HD)
    ok = headline_ok and order_ok
    detail = (
        "pd@-10dB " + ", ".join(f"{k.value} {pd70[k]:.4f}" for k in HD)
        + " (need >=0.97)" + f"; M70>=M15 pointwise {'ok' if order_ok else 'violated'}"
    )
    _report(2, "headline-pd-and-array-ordering", ok, detail)
    assert ok, detail


def test_criterion_03_small_array_detection():
    pd = _pd(30, 50, -10.0, 0.01, 10_000)
    ok = all(pd[kind] >= 0.88 for kind in HD)
    detail = ", ".join(f"{k.value} {pd[k]:.4f}" for k in HD) + " (need >=0.88)"
    _report(3, "small-array-detection", ok, detail)
    assert ok, detail


def test_criterion_04_diminishing_returns_in_samples():
    pds = {ll: _pd(30, ll, -15.0, 0.1, 10_000, rho=0.5) for ll in (30, 60, 90, 120)}
    mono_ok, gain_ok = True, True
    gains = {}
    for kind in HD:
        seq = [pds[ll][kind] for ll in (30, 60, 90, 120)]
        mono_ok &= all(b >= a for a, b in zip(seq, seq[1:]))
        gains[kind.value] = seq[3] - seq[2]
        gain_ok &= gains[kind.value] < 0.05
    ok = mono_ok and gain_ok
    detail = f"monotone {'ok' if mono_ok else 'violated'}; 90->120 gains " + ", ".join(
        f"{k} {g:.3f}" for k, g in gains.items()
    ) + " (need <0.05)"
    _report(4, "diminishing-returns-in-samples", ok, detail)
    assert ok, detail


def test_criterion_05_contour_oracle_equivalence():
    rng = np.random.default_rng(20240501)
    kernels = {"linear": t_hdl, "square": t_hds, "quadratic": t_hdq}
    worst = {name: 0.0 for name in kernels}
    worst_doubling = 0.0
    for _ in range(100):
        m = int(rng.integers(1, 13))
        l = int(rng.integers(1, 13))
        lam = rng.uniform(0.2, 3.0, size=min(m, l))
        s = ScmSummary(m=m, l=l, trace_r=float(lam.sum()), trace_r2=float((lam**2).sum()))
        for name, closed in kernels.items():
            want = closed(s)
            got = lss_contour(name, lam, m, l, nodes=1024).value
            rel = abs(got - want) / max(abs(want), 1e-300)
            worst[name] = max(worst[name], rel)
            got2 = lss_contour(name, lam, m, l, nodes=2048).value
            worst_doubling = max(worst_doubling, abs(got - got2))
    closed_ok = all(v <= 1e-6 for v in worst.values())
    doubling_ok = worst_doubling < 1e-7
    ok = closed_ok and doubling_ok
    detail = (
        "worst rel dev " + ", ".join(f"{k} {v:.3g}" for k, v in worst.items())
        + f" (need <=1e-6); node-doubling {worst_doubling:.3g} (need <1e-7)"
    )
    _report(5, "contour-matches-closed-forms", ok, detail)
    assert ok, detail


def test_criterion_06_quadrature_identities():
    cs = (0.1, 0.5, 1.0, 2.0, 3.0)
    worst_f = 0.0
    for c in cs:
        worst_f = max(
            worst_f,
            abs(mean_correction_numeric(lambda x: x, c) - 1.0),
            abs(mean_correction_numeric(lambda x: x * x, c) - (1.0 + c)),
            abs(mean_correction_numeric(lambda x: (x - 1.0) ** 2, c) - c),
        )
    worst_m = max(
        abs(mp_moment_numeric(k, c) - mp_moment(k, c)) for c in cs for k in range(1, 6)
    )
    ok = worst_f <= 1e-8 and worst_m <= 1e-8
    detail = f"identity dev {worst_f:.3g}, moment dev {worst_m:.3g} (need <=1e-8)"
    _report(6, "mp-quadrature-identities", ok, detail)
    assert ok, detail


def test_criterion_07_spectrum_edge_law():
    noise = NoiseModel.calibrated()
    mx, mn = [], []
    for t in range(50):
        y = sample_h0(50, 200, noise, RandomStream(SEED, t)).y
        lam = hermitian_eigenvalues(y @ y.conj().T / 200)
        mx.append(lam[-1])
        mn.append(lam[0])
    avg_max, avg_min = float(np.mean(mx)), float(np.mean(mn))
    max_ok = abs(avg_max - 2.25) <= 0.05 * 2.25
    min_ok = abs(avg_min - 0.25) <= 0.10 * 0.25
    ok = max_ok and min_ok
    detail = (
        f"lam_max avg {avg_max:.4f} vs 2.25 +-5% [{'ok' if max_ok else 'out'}]; "
        f"lam_min avg {avg_min:.4f} vs 0.25 +-10% [{'ok' if min_ok else 'out'}]"
    )
    _report(7, "mp-edge-law", ok, detail)
    assert ok, detail


def test_criterion_08_inverse_scm_bias():
    alpha = inverse_scm_bias_check(4, 10, 10_000, seed=SEED)
    ok = abs(alpha - 2.5) <= 0.05 * 2.5
    detail = f"alpha_hat {alpha:.4f} vs 2.5 +-5%"
    _report(8, "inverse-scm-bias", ok, detail)
    assert ok, detail


def test_criterion_09_empirical_false_alarm():
    failures = []
    for m, l in ((90, 30), (30, 30), (45, 50)):
        stats = _h0_run(m, l)
        for kind in HD:
            for pfa in (0.1, 0.01):
                tau = np_threshold(kind, m, l, pfa)
                x = stats[kind]
                k = int(np.count_nonzero(x > tau))
                center, hw = wilson_interval(k, x.size)
                if not (center - hw <= pfa <= center + hw):
                    failures.append(f"{kind.value}@({m},{l}),pfa={pfa}: rate {k / x.size:.4f}")
    ok = not failures
    detail = "all 18 cells inside Wilson" if ok else f"{len(failures)}/18 outside: " + "; ".join(failures[:6])
    _report(9, "empirical-false-alarm-calibration", ok, detail)
    assert ok, detail


def test_criterion_10_algebraic_identity():
    rng = np.random.default_rng(77)
    exact = True
    for _ in range(10_000):
        m = int(rng.integers(1, 40))
        l = int(rng.integers(1, 40))
        tr = float(rng.uniform(0.1, 5.0)) * m
        lo, hi = tr * tr / m, tr * tr
        tr2 = float(rng.uniform(lo, min(hi, lo * 4.0 + 1.0)))
        s = ScmSummary(m=m, l=l, trace_r=tr, trace_r2=tr2)
        if t_hdq(s) != t_hds(s) - 2.0 * t_hdl(s):
            exact = False
            break
    worst_eig = 0.0
    for i in range(30):
        m = int(rng.integers(1, 13))
        l = int(rng.integers(1, 13))
        y = (rng.standard_normal((m, l)) + 1j * rng.standard_normal((m, l))) / math.sqrt(2)
        gram = (y.conj().T @ y if l <= m else y @ y.conj().T) / l
        lam = hermitian_eigenvalues(gram)
        s = ScmSummary(m=m, l=l, trace_r=float(lam.sum()), trace_r2=float((lam**2).sum()))
        direct = compute_scm_summary(ObservationMatrix(y))
        worst_eig = max(
            worst_eig,
            abs(direct.trace_r - s.trace_r),
            abs(direct.trace_r2 - s.trace_r2),
            abs(t_hdq(direct) - t_hdq(s)),
        )
    eig_ok = worst_eig <= 1e-9
    ok = exact and eig_ok
    detail = f"combination identity exact on 1e4 summaries: {exact}; trace-vs-eigen dev {worst_eig:.3g} (need <=1e-9)"
    _report(10, "quadratic-statistic-identity", ok, detail)
    assert ok, detail


def test_criterion_11_sensitivity_partials_match_fd():
    step = 1e-5
    worst = 0.0
    for c in (0.5, 1.0, 3.0):
        ell = 40.0
        m = c * ell
        for kind in HD:
            got = sensitivity_partials(kind, m, ell)

            def sigma_of_c(cc):
                return null_distribution(kind, cc * ell, ell).std

            fd = (
                (sigma_of_c(c + step) - sigma_of_c(c - step)) / (2 * step),
                (null_distribution(kind, m, ell + step).mean - null_distribution(kind, m, ell - step).mean) / (2 * step),
                (null_distribution(kind, m + step, ell).mean - null_distribution(kind, m - step, ell).mean) / (2 * step),
            )
            for g, w in zip(got, fd):
                denom = max(abs(w), 1e-9)
                worst = max(worst, abs(g - w) / denom)
    ok = worst <= 1e-6
    detail = f"worst relative deviation {worst:.3g} (need <=1e-6) across c in {{0.5,1,3}}"
    _report(11, "variance-partials-match-finite-differences", ok, detail)
    assert ok, detail


def test_criterion_12_byte_identical_reruns(tmp_path, monkeypatch):
    specs = [
        ("null-dist", ["--M", "12", "--L", "9", "--trials", "400", "--seed", str(SEED)],
         ["nulldist_hdl.csv", "nulldist_hds.csv", "nulldist_hdq.csv", "nulldist_summary.csv"]),
        ("roc", ["--M", "10", "--L", "14", "--snr-db", "-8", "--trials", "400",
                 "--seed", str(SEED), "--pfa-grid", "0.05,0.2"], ["roc.csv"]),
        ("pd-vs-snr", ["--M", "8", "--L", "10", "--snr-db=-12,-6", "--pfa", "0.1",
                       "--trials", "300", "--seed", str(SEED)], ["pd_vs_snr.csv"]),
    ]
    identical = True
    checked = 0
    for i, (cmd, args, files) in enumerate(specs):
        out_a, out_b = tmp_path / f"{i}a", tmp_path / f"{i}b"
        monkeypatch.setenv("LSS_SENSE_WORKERS", "1")
        assert cli_main([cmd, *args, "--out", str(out_a), "--no-figures"]) == 0
        monkeypatch.setenv("LSS_SENSE_WORKERS", "4")
        assert cli_main([cmd, *args, "--out", str(out_b), "--no-figures"]) == 0
        for name in files:
            checked += 1
            if (out_a / name).read_bytes() != (out_b / name).read_bytes():
                identical = False
    ok = identical
    detail = f"{checked} CSVs byte-compared across worker counts 1 vs 4"
    _report(12, "deterministic-csv-reruns", ok, detail)
    assert ok, detail
