"""Command-line interface.

Subcommands:
  fit       run one search method on a CSV dataset
  eval      score a result JSON against ground-truth labels
  sim       execute a scenario grid and write the aggregate results CSV
  stattest  compute one of the test statistics on a one-column CSV
  analyze   Group Lasso / EBIC effects analysis of a results CSV
  report    long-format box-plot-ready tables from a results CSV
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
from .effects import (
    absorb_into_supersets,
    build_design,
    effect_report,
    recover_redundant,
    select_and_refit,
)
from .gmm import Dataset
from .harness import (
    expand_grid,
    manifest_json,
    records_csv,
    results_csv,
    run_grid,
    timing_report,
)
from .metrics import ari, cari
from .search import METHODS, best_of_runs, default_config
from .stattests import AD_CRITICAL, ad_statistic, dip_test, ks_critical_value, ks_statistic, normal_cdf


def _read_dataset(path: str) -> Dataset:
    return Dataset.from_csv(Path(path).read_text())


def _cmd_fit(args) -> int:
    data = _read_dataset(args.data)
    if args.config:
        overrides = json.loads(Path(args.config).read_text())
    else:
        overrides = {}
    overrides["seed"] = args.seed
    config = default_config(args.method, **overrides)
    result = best_of_runs(data, args.method, args.runs, config)
    payload = result.to_json_dict()
    text = json.dumps(payload, indent=2)
    if args.out:
        Path(args.out).write_text(text)
    else:
        print(text)
    return 0


def _cmd_eval(args) -> int:
    truth = _read_dataset(args.truth)
    labels_true = truth.true_labels
    if labels_true is None:
        # single-column CSV of labels
        labels_true = truth.samples[:, -1].astype(int)
    pred = json.loads(Path(args.pred).read_text())
    labels_pred = np.asarray(pred["labels"], dtype=int)
    out = {
        "ari": ari(labels_true, labels_pred),
        "cari": cari(labels_true, labels_pred),
        "khat": int(pred.get("khat", len(np.unique(labels_pred)))),
    }
    print(json.dumps(out, indent=2))
    return 0


def _cmd_sim(args) -> int:
    grid = json.loads(Path(args.grid).read_text())
    scenarios = expand_grid(grid, master_seed=args.seed)
    records, aggregates = run_grid(scenarios, workers=args.workers, progress=args.progress)
    Path(args.out).write_text(results_csv(aggregates))
    if args.manifest:
        Path(args.manifest).write_text(manifest_json(scenarios, args.seed))
    if args.records:
        Path(args.records).write_text(records_csv(records))
    if args.timing:
        Path(args.timing).write_text(timing_report(records))
    return 0


def _cmd_stattest(args) -> int:
    values = np.loadtxt(args.data, delimiter=",", ndmin=1)
    if values.ndim > 1:
        values = values[:, 0]
    if args.kind == "ad":
        stat = float(ad_statistic(values))
        out = {"statistic": stat, "critical": AD_CRITICAL, "reject": bool(stat > AD_CRITICAL)}
    elif args.kind == "dip":
        res = dip_test(values, b=args.bootstrap, seed=args.seed)
        out = {
            "statistic": res.dip,
            "p_value": res.p_value,
            "reject": bool(res.p_value <= args.alpha),
        }
    else:  # ks against the standard normal
        stat = float(ks_statistic(np.sort(values), normal_cdf))
        crit = float(ks_critical_value(args.alpha, len(values)))
        out = {"statistic": stat, "critical": crit, "reject": bool(stat > crit)}
    print(json.dumps(out, indent=2))
    return 0


def _read_results(path: str) -> list[dict]:
    rows = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            rows.append(
                {
                    "scenario_id": row["scenario_id"],
                    "n": int(row["n"]),
                    "p": int(row["p"]),
                    "omega_bar": float(row["omega_bar"]),
                    "k_star": int(row["k_star"]),
                    "cov_type": row["cov_type"],
                    "method": row["method"],
                    "mean_cari": float(row["mean_cari"]),
                    "mean_khat": float(row["mean_khat"]),
                    "k_deviation": float(row["k_deviation"]),
                }
            )
    return rows


def _cmd_analyze(args) -> int:
    rows = _read_results(args.results)
    design, y = build_design(rows, interaction_order=args.interactions)
    selection = select_and_refit(design, y)
    if args.absorb:
        effects = absorb_into_supersets(selection, design)
    else:
        effects = recover_redundant(selection, design)
    report = effect_report(effects, design)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)

    path_buf = io.StringIO()
    writer = csv.writer(path_buf, lineterminator="\n")
    writer.writerow(["lambda", "rss", "nonzeros", "ebic", "active_groups"])
    for i, lam in enumerate(selection.path.lambdas):
        writer.writerow(
            [
                repr(float(lam)),
                repr(float(selection.path.rss[i])),
                str(int(selection.path.nonzeros[i])),
                repr(float(selection.path.ebic[i])),
                ";".join("*".join(design.groups[j]) for j in selection.path.active[i]),
            ]
        )
    (outdir / "path.csv").write_text(path_buf.getvalue())

    (outdir / "selected.json").write_text(
        json.dumps(
            {
                "lambda": selection.chosen_lambda,
                "selected_groups": ["*".join(design.groups[j]) for j in selection.selected_groups],
                "rss": selection.rss,
                "bic_selected": selection.bic_selected,
                "bic_full": selection.bic_full,
            },
            indent=2,
        )
    )

    for group, rows_ in report.items():
        name = "effects_" + "_".join(group) + ".csv"
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        header = list(group) + ["effect", "stderr", "ci_low", "ci_high", "significant"]
        writer.writerow(header)
        for row in rows_:
            writer.writerow([str(row[c]) for c in group] + [
                repr(row["effect"]),
                repr(row["stderr"]),
                repr(row["ci_low"]),
                repr(row["ci_high"]),
                "1" if row["significant"] else "0",
            ])
        (outdir / name).write_text(buf.getvalue())
    print(f"selected {len(selection.selected_groups)} of {len(design.groups)} groups "
          f"-> {outdir}", file=sys.stderr)
    return 0


def _cmd_report(args) -> int:
    rows = _read_results(args.results)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    groupings = [("p", "n"), ("p", "k_star"), ("p", "cov_type")]
    for extra in groupings:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["method", *extra, "mean_cari", "probit_cari", "k_deviation"])
        from .metrics import response_transform

        for row in sorted(rows, key=lambda r: (r["method"], r[extra[0]], str(r[extra[1]]))):
            writer.writerow(
                [
                    row["method"],
                    str(row[extra[0]]),
                    str(row[extra[1]]),
                    repr(row["mean_cari"]),
                    repr(response_transform(row["mean_cari"]))
                    if 0 < row["mean_cari"] < 1
                    else "nan",
                    repr(row["k_deviation"]),
                ]
            )
        (outdir / f"by_method_{extra[0]}_{extra[1]}.csv").write_text(buf.getvalue())
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="kseek", description=__doc__)
    parser.add_argument("--version", action="version", version=f"kseek {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="run one search method on a CSV dataset")
    p_fit.add_argument("--method", required=True, choices=METHODS)
    p_fit.add_argument("--data", required=True)
    p_fit.add_argument("--config", help="JSON file of SearchConfig overrides")
    p_fit.add_argument("--seed", type=int, default=0)
    p_fit.add_argument("--runs", type=int, default=1, help="best-of-R runs")
    p_fit.add_argument("--out", help="result JSON path (stdout when omitted)")
    p_fit.set_defaults(func=_cmd_fit)

    p_eval = sub.add_parser("eval", help="score a result JSON against truth labels")
    p_eval.add_argument("--truth", required=True, help="CSV with a label column")
    p_eval.add_argument("--pred", required=True, help="result JSON from 'fit'")
    p_eval.set_defaults(func=_cmd_eval)

    p_sim = sub.add_parser("sim", help="run a scenario grid")
    p_sim.add_argument("--grid", required=True, help="grid JSON (factor level lists)")
    p_sim.add_argument("--out", required=True, help="aggregate results CSV")
    p_sim.add_argument("--manifest", help="manifest JSON path")
    p_sim.add_argument("--records", help="per-dataset records CSV path")
    p_sim.add_argument("--timing", help="timing report CSV path")
    p_sim.add_argument("--workers", type=int, default=1)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--progress", action="store_true")
    p_sim.set_defaults(func=_cmd_sim)

    p_st = sub.add_parser("stattest", help="test statistics on a one-column CSV")
    p_st.add_argument("kind", choices=["ad", "dip", "ks"])
    p_st.add_argument("--data", required=True)
    p_st.add_argument("--alpha", type=float, default=0.05)
    p_st.add_argument("--bootstrap", type=int, default=1000)
    p_st.add_argument("--seed", type=int, default=0)
    p_st.set_defaults(func=_cmd_stattest)

    p_an = sub.add_parser("analyze", help="effects analysis of a results CSV")
    p_an.add_argument("--results", required=True)
    p_an.add_argument("--interactions", type=int, default=4)
    p_an.add_argument(
        "--absorb",
        action="store_true",
        help="fold selected groups into their smallest selected superset "
        "interaction for reporting",
    )
    p_an.add_argument("--out", required=True, help="output directory")
    p_an.set_defaults(func=_cmd_analyze)

    p_rep = sub.add_parser("report", help="plot-ready long-format tables")
    p_rep.add_argument("--results", required=True)
    p_rep.add_argument("--out", required=True, help="output directory")
    p_rep.set_defaults(func=_cmd_report)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
