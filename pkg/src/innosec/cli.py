"""Command-line entry point.

Subcommands: ``analyze``, ``design``, ``simulate``, ``microgrid`` and
``reproduce-fig2``. With ``--out DIR`` results go to files (plus a PNG
figure); otherwise the main table or report is printed to stdout.

Exit codes: 0 success, 2 configuration error, 3 numeric overflow.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analytics import (
    classify_secrecy,
    eaves_divergence_check,
    legit_expected_cov,
    outcome_probs_eaves,
    outcome_probs_legit,
    smart_expected_cov,
)
from .design import SecrecyBudget, design_mu_d, evaluate_gap, feasibility_lower_bound
from .errors import ConfigError, MomentOverflow
from .harness import (
    MicrogridScenario,
    ScenarioConfig,
    run_microgrid,
    run_monte_carlo,
    vi_b_model,
    write_run_csv,
)

EXIT_OK, EXIT_CONFIG, EXIT_OVERFLOW = 0, 2, 3
FIG2_MU_E = (0.85, 0.9, 0.95, 0.99)
FIG2_MU = 0.9


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _dumps(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True, default=_jsonable) + "\n"


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(["" if v is None else (repr(float(v)) if isinstance(v, (float, np.floating)) else v)
                         for v in row])
    return buf.getvalue()


def _flatten(d: dict, prefix: str = "") -> list:
    rows = []
    for key in sorted(d):
        val = d[key]
        name = f"{prefix}{key}"
        if isinstance(val, dict):
            rows.extend(_flatten(val, name + "."))
        elif isinstance(val, (list, tuple)):
            rows.append((name, json.dumps(val, default=_jsonable)))
        else:
            rows.append((name, val))
    return rows


class Output:
    """Writes the primary artifact either to ``--out`` or to stdout."""

    def __init__(self, out, fmt: str):
        self.dir = Path(out) if out else None
        self.fmt = fmt
        if self.dir:
            self.dir.mkdir(parents=True, exist_ok=True)

    def report(self, name: str, data: dict) -> None:
        if self.fmt == "json":
            text, ext = _dumps(data), "json"
        else:
            text, ext = _csv_text(["key", "value"], _flatten(data)), "csv"
        self.emit(f"{name}.{ext}", text)

    def table(self, name: str, header, rows, meta: dict) -> None:
        if self.fmt == "csv":
            self.emit(f"{name}.csv", _csv_text(header, rows))
            if self.dir:
                self.emit(f"{name}_summary.json", _dumps(meta))
        else:
            records = [dict(zip(header, r)) for r in rows]
            self.emit(f"{name}.json", _dumps({"summary": meta, "rows": records}))

    def figure(self, name: str, fn, *args) -> None:
        if self.dir:
            fn(*args, self.dir / f"{name}.png")

    def emit(self, filename: str, text: str) -> None:
        if self.dir:
            (self.dir / filename).write_text(text)
        else:
            sys.stdout.write(text)


def _load(args) -> ScenarioConfig:
    cfg = ScenarioConfig.load(args.config) if args.config else None
    if cfg is None:
        raise ConfigError("--config is required for this subcommand")
    return cfg.with_overrides(trials=args.trials, horizon=args.horizon, seed=args.seed)


def cmd_analyze(args) -> int:
    cfg = _load(args)
    model = cfg.model
    legit = legit_expected_cov(model, cfg.mu, cfg.mu_d)
    smart = smart_expected_cov(model, cfg.mu_e, cfg.mu_d)
    verdict = classify_secrecy(model, cfg.mu, cfg.mu_e, cfg.mu_d)
    eaves = []
    for pol in cfg.policies:
        probs = outcome_probs_eaves(cfg.mu_e, cfg.mu_d, pol)
        eaves.append({
            "policy": pol.to_dict(),
            "probabilities": list(probs.as_tuple()),
            "diverging": eaves_divergence_check(model, probs),
        })
    report = {
        "config_hash": cfg.config_hash(),
        "rho": model.rho,
        "feasibility_lower_bound": feasibility_lower_bound(model, cfg.mu) if cfg.mu > 0 else None,
        "legit_probabilities": list(outcome_probs_legit(cfg.mu, cfg.mu_d).as_tuple()),
        "legit_trace": legit.trace(),
        "legit_bounded": legit.bounded,
        "smart_trace": smart.trace(),
        "smart_bounded": smart.bounded,
        "eavesdroppers": eaves,
        **verdict.to_dict(),
    }
    Output(args.out, args.format).report("analyze", report)
    return EXIT_OK


def cmd_design(args) -> int:
    cfg = _load(args)
    mu_e = cfg.mu_e if args.mu_e is None else args.mu_e
    budget = SecrecyBudget(cfg.omega) if cfg.omega else None
    rep = design_mu_d(cfg.model, cfg.mu, mu_e, budget)
    data = rep.to_dict()
    data["config_hash"] = cfg.config_hash()
    out = Output(args.out, args.format)
    out.report("design", data)
    if out.dir and rep.feasible:
        from .plotting import plot_gap_curves

        rows = _gap_rows(cfg.model, cfg.mu, mu_e, np.linspace(rep.mu_d_min, rep.mu_d_max, 400))
        out.figure("design_gap", plot_gap_curves, {mu_e: rows})
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _load(args)
    res = run_monte_carlo(cfg)
    out = Output(args.out, args.format)
    if args.format == "csv":
        if out.dir:
            write_run_csv(res, out.dir / "run.csv")
            out.emit("run_summary.json", _dumps(res.summary))
        else:
            out.emit("run.csv", _csv_text(
                ["k", "trace_P_legit_mean", "trace_P_eaves_mean", "analytic_legit",
                 "analytic_eaves", "mse_legit", "mse_eaves"], res.csv_rows()))
    else:
        series = {
            "k": res.k,
            "trace_P_legit_mean": res.trace_p_legit,
            "trace_P_eaves_mean": res.trace_p_eaves[0],
            "analytic_legit": res.analytic_legit,
            "analytic_eaves": res.analytic_eaves[0],
            "mse_legit": res.mse_legit,
            "mse_eaves": res.mse_eaves[0],
        }
        out.emit("run.json", _dumps({"summary": res.summary, "series": series}))
    from .plotting import plot_run

    out.figure("run", plot_run, res)
    return EXIT_OK if res.summary["cross_validation_pass"] or not args.strict else 1


def cmd_microgrid(args) -> int:
    scen = MicrogridScenario.default()
    if args.config:
        base = ScenarioConfig.load(args.config)
        scen = MicrogridScenario(base)
    scen = MicrogridScenario(
        scen.base.with_overrides(trials=args.trials, horizon=args.horizon, seed=args.seed),
        scen.b, scen.b_d, scen.profile, scen.mu_d_grid,
    )
    res = run_microgrid(scen)
    header = list(res.rows[0])
    rows = [[r[h] for h in header] for r in res.rows]
    out = Output(args.out, args.format)
    out.table("microgrid", header, rows, res.summary)
    if out.dir:
        prof = res.profile
        prows = [[int(k), prof["solar"][i], prof["load"][i], prof["net"][i],
                  prof["disturbance_soc"][i, 0], prof["disturbance_soc"][i, 1]]
                 for i, k in enumerate(prof["k"])]
        out.emit("profile.csv", _csv_text(["k", "solar_kw", "load_kw", "net_kw", "d_soc1", "d_soc2"], prows))
        from .plotting import plot_microgrid

        out.figure("microgrid", plot_microgrid, res.rows)
    return EXIT_OK


def _gap_rows(model, mu, mu_e, grid) -> list:
    rows = []
    for x in grid:
        g = evaluate_gap(model, mu, mu_e, float(x))
        ratio = None if g.j_r is None else g.j_r / g.j
        rows.append({"mu_e": mu_e, "mu_d": float(x), "J": g.j, "J_e": g.j_e, "J_r": g.j_r,
                     "J_r_over_J": ratio})
    return rows


def cmd_fig2(args) -> int:
    if args.config:
        cfg = _load(args)
        model, mu = cfg.model, cfg.mu
    else:
        model, mu = vi_b_model(), FIG2_MU
    lo = feasibility_lower_bound(model, mu)
    grid = np.round(np.arange(np.floor(lo * 1e3) / 1e3 + 1e-3, 1.0, args.step), 6)
    curves = {mu_e: _gap_rows(model, mu, mu_e, grid) for mu_e in FIG2_MU_E}
    header = ["mu_e", "mu_d", "J", "J_e", "J_r", "J_r_over_J"]
    rows = [[r[h] for h in header] for mu_e in FIG2_MU_E for r in curves[mu_e]]
    meta = {"mu": mu, "mu_e_values": list(FIG2_MU_E), "feasibility_lower_bound": lo, "rho": model.rho}
    out = Output(args.out, args.format)
    out.table("fig2", header, rows, meta)
    from .plotting import plot_gap_curves

    out.figure("fig2", plot_gap_curves, curves)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, help="scenario JSON file")
    common.add_argument("--out", type=str, help="output directory (stdout if omitted)")
    common.add_argument("--format", choices=("csv", "json"), default="json")
    common.add_argument("--trials", type=int)
    common.add_argument("--horizon", type=int)
    common.add_argument("--seed", type=int)

    parser = argparse.ArgumentParser(prog="innosec", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("analyze", parents=[common], help="closed forms and secrecy verdict").set_defaults(fn=cmd_analyze)
    p = sub.add_parser("design", parents=[common], help="optimize the scheduling probability")
    p.add_argument("--mu-e", type=float, dest="mu_e", help="override the eavesdropper channel quality")
    p.set_defaults(fn=cmd_design)
    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo run with analytic cross-checks")
    p.add_argument("--strict", action="store_true", help="exit 1 when a cross-check fails")
    p.set_defaults(fn=cmd_simulate)
    sub.add_parser("microgrid", parents=[common], help="storage microgrid case study").set_defaults(fn=cmd_microgrid)
    p = sub.add_parser("reproduce-fig2", parents=[common], help="gap curves for four eavesdropper channels")
    p.add_argument("--step", type=float, default=1e-3)
    p.set_defaults(fn=cmd_fig2)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except MomentOverflow as exc:
        print(f"numeric overflow: {exc}", file=sys.stderr)
        return EXIT_OVERFLOW
    except ValueError as exc:
        # ConfigError and out-of-range parameters alike
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
