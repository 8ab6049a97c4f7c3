"""Command-line front end: configured Monte Carlo runs to CSV (and figures),
closed-form thresholds, and a one-shot numerical verification suite.

Exit codes: 0 success, 1 usage error, 2 I/O error, 3 verification failure.
"""

from __future__ import annotations

import argparse
import datetime
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .detectors import ScmSummary, t_hdl, t_hdq, t_hds
from .oracle import hermitian_eigenvalues, lss_contour, mean_correction_numeric, mp_moment_numeric
from .report import (
    RunManifest,
    config_digest,
    render_null_histograms,
    render_pd_vs_snr,
    render_roc,
    write_csv,
    write_manifest,
)
from .rmt import (
    DetectorKind,
    mp_moment,
    np_threshold,
    null_distribution,
    q_function,
    q_inverse,
)
from .simulate import (
    ChannelModel,
    ExperimentConfig,
    NoiseModel,
    SimulationError,
    default_pfa_grid,
    estimate_roc,
    inverse_scm_bias_check,
    ks_statistic,
    pd_vs_snr_sweep,
    run_monte_carlo,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_VERIFY = 3

_HD = (DetectorKind.HDL, DetectorKind.HDS, DetectorKind.HDQ)


class UsageError(ValueError):
    pass


def _parse_channel(text: str) -> ChannelModel:
    if text == "uncorrelated":
        return ChannelModel.uncorrelated()
    if text.startswith("exp:"):
        try:
            return ChannelModel.exponential(float(text[4:]))
        except ValueError as exc:
            raise UsageError(f"bad channel spec {text!r}: {exc}") from None
    raise UsageError(f"channel must be 'uncorrelated' or 'exp:<rho>', got {text!r}")


def _parse_noise(text: str) -> NoiseModel:
    parts = text.split(":")
    try:
        if parts[0] == "calibrated" and len(parts) <= 2:
            return NoiseModel.calibrated(float(parts[1]) if len(parts) == 2 else 1.0)
        if parts[0] == "uncalibrated" and len(parts) in (1, 3):
            if len(parts) == 1:
                return NoiseModel.uncalibrated()
            return NoiseModel.uncalibrated(float(parts[1]), float(parts[2]))
    except ValueError as exc:
        raise UsageError(f"bad noise spec {text!r}: {exc}") from None
    raise UsageError(
        f"noise must be 'calibrated[:<var>]' or 'uncalibrated[:<lo>:<hi>]', got {text!r}"
    )


def _parse_detectors(text: str) -> tuple[DetectorKind, ...]:
    kinds = []
    for name in text.split(","):
        name = name.strip().lower()
        try:
            kinds.append(DetectorKind(name))
        except ValueError:
            raise UsageError(f"unknown detector {name!r}") from None
    if not kinds:
        raise UsageError("detector list is empty")
    return tuple(kinds)


def _parse_float_list(text: str, flag: str) -> tuple[float, ...]:
    items = [p for p in (s.strip() for s in text.split(",")) if p]
    if not items:
        raise UsageError(f"{flag} needs at least one value")
    try:
        return tuple(float(p) for p in items)
    except ValueError as exc:
        raise UsageError(f"bad {flag} value: {exc}") from None


_COMMON_FLAGS = (
    ("--M", dict(type=int, dest="M", help="number of antennas")),
    ("--L", dict(type=int, dest="L", help="number of samples")),
    ("--snr-db", dict(type=str, dest="snr_db",
                      help="average SNR in dB; pd-vs-snr takes a comma list, written --snr-db=-15,-10")),
    ("--pfa", dict(type=float, dest="pfa", help="target false-alarm probability")),
    ("--trials", dict(type=int, dest="trials", help="Monte Carlo trials")),
    ("--seed", dict(type=int, dest="seed", help="master RNG seed")),
    ("--channel", dict(type=str, dest="channel", help="uncorrelated | exp:<rho>")),
    ("--noise", dict(type=str, dest="noise", help="calibrated[:<var>] | uncalibrated[:<lo>:<hi>]")),
    ("--detectors", dict(type=str, dest="detectors", help="comma list: hdl,hds,hdq,glr,fn,rao")),
    ("--pfa-grid", dict(type=str, dest="pfa_grid", help="comma list of pfa targets")),
    ("--out", dict(type=str, dest="out", help="output directory (default '.')")),
    ("--config", dict(type=str, dest="config", help="JSON config file; flags override it")),
    ("--no-figures", dict(action="store_true", dest="no_figures", help="skip PNG rendering")),
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lss-sense",
        description="Trace-based spectrum sensing: simulation, thresholds, verification.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("null-dist", "sample the noise-only statistic distributions"),
        ("roc", "estimate ROC operating points"),
        ("pd-vs-snr", "detection probability across an SNR sweep"),
        ("threshold", "print closed-form Neyman-Pearson thresholds"),
        ("verify", "run the numerical verification suite"),
    ):
        p = sub.add_parser(name, help=help_text)
        if name == "verify":
            p.add_argument("--nodes", type=int, default=1024, help="contour quadrature nodes")
            p.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
        else:
            for flag, kw in _COMMON_FLAGS:
                p.add_argument(flag, **kw)
    return parser


def _resolve(ns: argparse.Namespace, key: str, default=None):
    """Flag value if given, else config-file value, else default."""
    val = getattr(ns, key, None)
    if val is not None and val is not False:
        return val
    cfg = getattr(ns, "_config_data", {})
    return cfg.get(key, default)


def _load_config(ns: argparse.Namespace) -> None:
    data = {}
    if getattr(ns, "config", None):
        path = Path(ns.config)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise UsageError(f"config file {path} is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise UsageError(f"config file {path} must hold a JSON object")
    ns._config_data = data


def _experiment_from_args(ns: argparse.Namespace, *, need_snr: bool) -> tuple[ExperimentConfig, dict]:
    m = _resolve(ns, "M")
    l = _resolve(ns, "L")
    if m is None or l is None:
        raise UsageError("--M and --L are required")
    snr_text = _resolve(ns, "snr_db")
    if need_snr and snr_text is None:
        raise UsageError("--snr-db is required for this command")
    snr = float(snr_text) if snr_text is not None else -math.inf
    channel = _parse_channel(str(_resolve(ns, "channel", "uncorrelated")))
    noise = _parse_noise(str(_resolve(ns, "noise", "calibrated")))
    detectors = _parse_detectors(str(_resolve(ns, "detectors", "hdl,hds,hdq")))
    raw_grid = _resolve(ns, "pfa_grid")
    pfa = _resolve(ns, "pfa")
    if raw_grid is not None:
        grid = _parse_float_list(str(raw_grid), "--pfa-grid")
    elif pfa is not None:
        grid = (float(pfa),)
    else:
        grid = default_pfa_grid()
    try:
        cfg = ExperimentConfig(
            m=int(m),
            l=int(l),
            snr_db=snr,
            channel=channel,
            noise=noise,
            trials=int(_resolve(ns, "trials", 10_000)),
            seed=int(_resolve(ns, "seed", 0)),
            detectors=detectors,
            pfa_grid=grid,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    resolved = {
        "command": ns.command,
        "M": cfg.m,
        "L": cfg.l,
        "snr_db": repr(cfg.snr_db),
        "channel": f"exp:{channel.rho}" if channel.kind == "exp" else "uncorrelated",
        "noise": (
            f"calibrated:{noise.variance}"
            if noise.is_calibrated
            else f"uncalibrated:{noise.lo}:{noise.hi}"
        ),
        "trials": cfg.trials,
        "seed": cfg.seed,
        "detectors": [k.value for k in cfg.detectors],
        "pfa_grid": ["%.12g" % p for p in cfg.pfa_grid],
    }
    return cfg, resolved


def _closed_form_null(cfg: ExperimentConfig, kind: DetectorKind):
    """Gaussian null for thresholding, valid only under unit calibrated noise."""
    if kind.has_gaussian_null and cfg.noise.is_calibrated and cfg.noise.variance == 1.0:
        return null_distribution(kind, cfg.m, cfg.l)
    return None


def _utcnow() -> str:
    return datetime.datetime.now(datetime.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _finish(out_dir: Path, ns, resolved: dict, started: str, outputs: list[Path]) -> None:
    manifest = RunManifest(
        command=resolved["command"],
        version=__version__,
        seed=int(resolved.get("seed", 0)),
        config_digest=config_digest(resolved),
        started_utc=started,
        finished_utc=_utcnow(),
        outputs=tuple(str(p) for p in outputs),
        resolved_config=resolved,
    )
    write_manifest(out_dir / "run_manifest.json", manifest)


def _out_dir(ns) -> Path:
    out = Path(str(_resolve(ns, "out", ".")))
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_null_dist(ns: argparse.Namespace) -> int:
    started = _utcnow()
    cfg, resolved = _experiment_from_args(ns, need_snr=False)
    out = _out_dir(ns)
    res = run_monte_carlo(cfg, hypotheses=("h0",))
    outputs = []
    summary_rows = []
    nulls = {}
    for kind in cfg.detectors:
        x = res.h0[kind]
        path = out / f"nulldist_{kind.value}.csv"
        write_csv(path, ["trial", "statistic"], list(enumerate(x.tolist())))
        outputs.append(path)
        if kind.has_gaussian_null:
            nd = null_distribution(kind, cfg.m, cfg.l)
            nulls[kind] = nd
            ks = ks_statistic(x, nd.mean, nd.variance)
            summary_rows.append(
                (kind, cfg.m, cfg.l, nd.mean, nd.variance,
                 float(x.mean()), float(x.var(ddof=1)), ks, x.size)
            )
    spath = out / "nulldist_summary.csv"
    write_csv(
        spath,
        ["detector", "M", "L", "theory_mean", "theory_var", "sample_mean", "sample_var", "ks_stat", "n"],
        summary_rows,
    )
    outputs.append(spath)
    if not _resolve(ns, "no_figures", False) and nulls:
        fpath = out / "nulldist.png"
        render_null_histograms({k: res.h0[k] for k in nulls}, nulls, fpath)
        outputs.append(fpath)
    _finish(out, ns, resolved, started, outputs)
    return EXIT_OK


def cmd_roc(ns: argparse.Namespace) -> int:
    started = _utcnow()
    cfg, resolved = _experiment_from_args(ns, need_snr=True)
    out = _out_dir(ns)
    res = run_monte_carlo(cfg)
    digest = config_digest(resolved)
    rows = []
    curves = []
    for kind in cfg.detectors:
        curve = estimate_roc(
            res.h0[kind],
            res.h1[kind],
            cfg.pfa_grid,
            _closed_form_null(cfg, kind),
            detector=kind,
            trials=cfg.trials,
            seed=cfg.seed,
            config_digest=digest,
        )
        curves.append(curve)
        for p in curve.points:
            rows.append(
                (kind, p.pfa_target, p.threshold, p.pd_hat, p.pfa_hat,
                 p.ci_halfwidth, cfg.trials, cfg.seed)
            )
    path = out / "roc.csv"
    write_csv(
        path,
        ["detector", "pfa_target", "threshold", "pd_hat", "pfa_hat", "ci_halfwidth", "trials", "seed"],
        rows,
    )
    outputs = [path]
    if not _resolve(ns, "no_figures", False):
        fpath = out / "roc.png"
        render_roc(curves, fpath)
        outputs.append(fpath)
    _finish(out, ns, resolved, started, outputs)
    return EXIT_OK


def cmd_pd_vs_snr(ns: argparse.Namespace) -> int:
    started = _utcnow()
    snr_text = _resolve(ns, "snr_db")
    if snr_text is None:
        raise UsageError("--snr-db takes a comma-separated SNR list for this command")
    snr_list = _parse_float_list(str(snr_text), "--snr-db")
    pfa = _resolve(ns, "pfa")
    if pfa is None:
        raise UsageError("--pfa is required for this command")
    ns.snr_db = str(snr_list[0])
    ns.pfa_grid = None
    ns.pfa = float(pfa)
    cfg, resolved = _experiment_from_args(ns, need_snr=True)
    resolved["snr_db"] = [repr(s) for s in snr_list]
    out = _out_dir(ns)
    rows = pd_vs_snr_sweep(cfg, snr_list)
    path = out / "pd_vs_snr.csv"
    write_csv(
        path,
        ["detector", "snr_db", "pd_hat", "ci_halfwidth"],
        [(r["detector"], r["snr_db"], r["pd_hat"], r["ci_halfwidth"]) for r in rows],
    )
    outputs = [path]
    if not _resolve(ns, "no_figures", False):
        fpath = out / "pd_vs_snr.png"
        render_pd_vs_snr(rows, fpath)
        outputs.append(fpath)
    _finish(out, ns, resolved, started, outputs)
    return EXIT_OK


def cmd_threshold(ns: argparse.Namespace) -> int:
    m = _resolve(ns, "M")
    l = _resolve(ns, "L")
    pfa = _resolve(ns, "pfa")
    if m is None or l is None or pfa is None:
        raise UsageError("--M, --L and --pfa are required")
    kinds = _parse_detectors(str(_resolve(ns, "detectors", "hdl,hds,hdq")))
    for kind in kinds:
        if not kind.has_gaussian_null:
            raise UsageError(f"{kind.value} has no closed-form null; thresholds are empirical")
    lines = []
    for kind in kinds:
        try:
            nd = null_distribution(kind, int(m), int(l))
            tau = np_threshold(kind, int(m), int(l), float(pfa))
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        lines.append(
            ",".join(
                [kind.value, str(int(m)), str(int(l)), "%.12g" % float(pfa),
                 "%.12g" % nd.mean, "%.12g" % nd.variance, "%.12g" % tau]
            )
        )
    print("detector,M,L,pfa,mean,variance,threshold")
    for line in lines:
        print(line)
    return EXIT_OK


def _verify_rows(nodes: int, inject_fault: bool) -> list[tuple[str, float, float, float]]:
    """(name, measured deviation, tolerance, reference magnitude) rows."""
    rows = []
    rng = np.random.default_rng(12345)

    kernels = {"linear": t_hdl, "square": t_hds, "quadratic": t_hdq}
    offsets = {"linear": 0.0, "square": 0.0, "quadratic": 1.0}
    for m, l in ((6, 4), (4, 8), (9, 9), (12, 5)):
        lam = rng.uniform(0.2, 3.0, size=min(m, l))
        summary = ScmSummary(
            m=m, l=l,
            trace_r=float(lam.sum()),
            trace_r2=float((lam**2).sum()),
        )
        for name, closed in kernels.items():
            want = closed(summary) + min(1.0, l / m) * offsets[name]
            got = lss_contour(name, lam, m, l, nodes=nodes).value
            rows.append((f"contour-{name}-{m}x{l}", abs(got - want) / max(abs(want), 1e-12), 1e-6, want))
        got1 = lss_contour("quadratic", lam, m, l, nodes=nodes).value
        got2 = lss_contour("quadratic", lam, m, l, nodes=2 * nodes).value
        rows.append((f"contour-node-doubling-{m}x{l}", abs(got1 - got2), 1e-7, got2))

    z_kernels = {
        "fc(z)": (lambda x: x, lambda c: 1.0),
        "fc(z^2)": (lambda x: x * x, lambda c: 1.0 + c),
        "fc((z-1)^2)": (lambda x: (x - 1.0) ** 2, lambda c: c),
    }
    for c in (0.1, 0.5, 1.0, 2.0, 3.0):
        for name, (g, want_f) in z_kernels.items():
            got = mean_correction_numeric(g, c)
            rows.append((f"mp-{name}-c{c}", abs(got - want_f(c)), 1e-8, want_f(c)))
        for k in range(1, 6):
            got = mp_moment_numeric(k, c)
            rows.append((f"mp-moment-k{k}-c{c}", abs(got - mp_moment(k, c)), 1e-8, mp_moment(k, c)))

    a = rng.standard_normal((16, 16)) + 1j * rng.standard_normal((16, 16))
    a = (a + a.conj().T) / 2
    lam_j = hermitian_eigenvalues(a)
    lam_ref = np.linalg.eigvalsh(a)
    rows.append(("eigensolver-vs-lapack", float(np.max(np.abs(lam_j - lam_ref))), 1e-10, float(np.max(np.abs(lam_ref)))))
    rows.append(("eigensolver-trace", abs(lam_j.sum() - np.trace(a).real), 1e-10, float(np.trace(a).real)))
    rows.append(
        ("eigensolver-frobenius", abs((lam_j**2).sum() - np.vdot(a, a).real), 1e-9, float(np.vdot(a, a).real))
    )

    alpha = inverse_scm_bias_check(4, 10, 4000, seed=11)
    want = 10.0 / (10.0 - 4.0)  # exact mean-inverse scale for complex data
    rows.append(("inverse-scm-bias-4x10", abs(alpha - want) / want, 0.05, want))

    for p in (0.3, 0.1, 0.01, 1e-4):
        rows.append((f"q-roundtrip-p{p}", abs(q_function(q_inverse(p)) - p) / p, 1e-10, p))
    tau = np_threshold(DetectorKind.HDL, 70, 30, 0.01)
    rows.append(("np-threshold-hdl-70x30", abs(tau - 73.55355507519725), 1e-9, tau))

    hds_var = null_distribution(DetectorKind.HDS, 90, 30).variance
    want_var = 211.0 if inject_fault else 210.0
    rows.append(("null-variance-hds-90x30", abs(hds_var - want_var), 1e-9, want_var))
    return rows


def cmd_verify(ns: argparse.Namespace) -> int:
    nodes = int(getattr(ns, "nodes", 1024))
    if nodes < 256:
        raise UsageError("--nodes must be at least 256")
    rows = _verify_rows(nodes, bool(getattr(ns, "inject_fault", False)))
    failures = []
    width = max(len(r[0]) for r in rows)
    print(f"{'check'.ljust(width)}  {'deviation':>12}  {'tolerance':>10}  status")
    for name, dev, tol, _ref in rows:
        ok = dev <= tol
        if not ok:
            failures.append(name)
        print(f"{name.ljust(width)}  {dev:12.3e}  {tol:10.1e}  {'PASS' if ok else 'FAIL'}")
    if failures:
        print(f"verification failed: {', '.join(failures)}", file=sys.stderr)
        return EXIT_VERIFY
    print(f"all {len(rows)} checks passed")
    return EXIT_OK


_DISPATCH = {
    "null-dist": cmd_null_dist,
    "roc": cmd_roc,
    "pd-vs-snr": cmd_pd_vs_snr,
    "threshold": cmd_threshold,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        _load_config(ns)
        return _DISPATCH[ns.command](ns)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, SimulationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
