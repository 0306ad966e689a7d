"""Replicated simulation harness over a factorial scenario grid.

One scenario is a cell of the design (n, p, omega_bar, K*, covariance
type).  Per dataset replicate the harness generates a calibrated dataset,
runs each method best-of-R, and scores the selected run with cARI against
the ground truth.  Seeds derive from the master seed through stable keys
(scenario id, dataset index, method), so results are reproducible at any
worker count and adding scenarios never perturbs existing ones.
"""

from __future__ import annotations

import concurrent.futures
import csv
import io
import json
import sys
from dataclasses import dataclass, field

import numpy as np

from .datagen import OverlapSpec, canonical_cov_type, generate_scenario_dataset
from .errors import KseekError
from .metrics import cari, k_deviation
from .rng import stable_key
from .search import METHODS, best_of_runs, default_config

__all__ = [
    "Scenario",
    "RunRecord",
    "AggregateRecord",
    "RESULT_COLUMNS",
    "run_scenario",
    "run_grid",
    "timing_report",
    "expand_grid",
]

RESULT_COLUMNS = (
    "scenario_id",
    "n",
    "p",
    "omega_bar",
    "k_star",
    "cov_type",
    "method",
    "mean_cari",
    "mean_khat",
    "k_deviation",
    "failures",
    "mean_elapsed_s",
)

# Monte-Carlo draws per directed pair during desk-scale grid calibration.
_DESK_MC_SAMPLES = 30_000


@dataclass(frozen=True)
class Scenario:
    """One cell of the factorial design plus its replication counts."""

    n: int
    p: int
    omega_bar: float
    k_star: int
    cov_type: str
    datasets: int = 10
    runs: int = 3
    methods: tuple[str, ...] = METHODS
    master_seed: int = 0
    mc_samples: int = _DESK_MC_SAMPLES

    def __post_init__(self):
        object.__setattr__(self, "cov_type", canonical_cov_type(self.cov_type))
        object.__setattr__(self, "methods", tuple(self.methods))
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        for m in self.methods:
            if m not in METHODS:
                raise ValueError(f"unknown method {m!r}")

    @property
    def scenario_id(self) -> str:
        return (
            f"n{self.n}_p{self.p}_om{self.omega_bar:g}"
            f"_K{self.k_star}_{self.cov_type}"
        )


@dataclass
class RunRecord:
    """Best-of-R outcome for one (scenario, method, dataset)."""

    scenario_id: str
    method: str
    dataset_index: int
    khat: int = 0
    cari: float = float("nan")
    criterion: float = float("nan")
    elapsed_s: float = float("nan")
    failed: bool = False
    reason: str = ""


@dataclass
class AggregateRecord:
    """Per (scenario, method) averages over the non-failed datasets."""

    scenario_id: str
    n: int
    p: int
    omega_bar: float
    k_star: int
    cov_type: str
    method: str
    mean_cari: float
    mean_khat: float
    k_deviation: float
    failures: int
    mean_elapsed_s: float

    def row(self) -> list[str]:
        return [
            self.scenario_id,
            str(self.n),
            str(self.p),
            repr(float(self.omega_bar)),
            str(self.k_star),
            self.cov_type,
            self.method,
            repr(float(self.mean_cari)),
            repr(float(self.mean_khat)),
            repr(float(self.k_deviation)),
            str(self.failures),
            repr(float(self.mean_elapsed_s)),
        ]


def _unit_seed(master_seed: int, *path: int) -> int:
    ss = np.random.SeedSequence(master_seed, spawn_key=tuple(int(x) for x in path))
    return int(ss.generate_state(1)[0])


def run_dataset_unit(scenario: Scenario, dataset_index: int) -> list[RunRecord]:
    """Generate one dataset replicate and run every configured method."""
    sid = stable_key(scenario.scenario_id)
    spec = OverlapSpec(
        k_star=scenario.k_star,
        p=scenario.p,
        omega_bar=scenario.omega_bar,
        cov_type=scenario.cov_type,
        mc_samples=scenario.mc_samples,
        seed=_unit_seed(scenario.master_seed, sid, dataset_index, 0),
    )
    records = []
    try:
        _, data = generate_scenario_dataset(
            spec, scenario.n, _unit_seed(scenario.master_seed, sid, dataset_index, 1)
        )
    except KseekError as exc:
        return [
            RunRecord(
                scenario.scenario_id,
                m,
                dataset_index,
                failed=True,
                reason=f"generation: {exc}",
            )
            for m in scenario.methods
        ]
    for method in scenario.methods:
        config = default_config(
            method,
            seed=_unit_seed(
                scenario.master_seed, sid, dataset_index, 2, stable_key(method)
            ),
        )
        try:
            result = best_of_runs(data, method, scenario.runs, config)
        except KseekError as exc:
            records.append(
                RunRecord(
                    scenario.scenario_id,
                    method,
                    dataset_index,
                    failed=True,
                    reason=str(exc),
                )
            )
            continue
        records.append(
            RunRecord(
                scenario.scenario_id,
                method,
                dataset_index,
                khat=result.khat,
                cari=cari(data.true_labels, result.partition.labels),
                criterion=result.criterion,
                elapsed_s=result.elapsed,
            )
        )
    return records


def aggregate(scenario: Scenario, records: list[RunRecord]) -> list[AggregateRecord]:
    """Collapse RunRecords to per-method averages (non-failed only)."""
    out = []
    for method in scenario.methods:
        mine = [r for r in records if r.method == method]
        ok = [r for r in mine if not r.failed]
        failures = len(mine) - len(ok)
        if ok:
            mean_cari = float(np.mean([r.cari for r in ok]))
            mean_khat = float(np.mean([r.khat for r in ok]))
            kdev = k_deviation(mean_khat, scenario.k_star)
            mean_elapsed = float(np.mean([r.elapsed_s for r in ok]))
        else:
            mean_cari = mean_khat = kdev = mean_elapsed = float("nan")
        out.append(
            AggregateRecord(
                scenario_id=scenario.scenario_id,
                n=scenario.n,
                p=scenario.p,
                omega_bar=scenario.omega_bar,
                k_star=scenario.k_star,
                cov_type=scenario.cov_type,
                method=method,
                mean_cari=mean_cari,
                mean_khat=mean_khat,
                k_deviation=kdev,
                failures=failures,
                mean_elapsed_s=mean_elapsed,
            )
        )
    return out


def run_scenario(scenario: Scenario) -> tuple[list[RunRecord], list[AggregateRecord]]:
    records: list[RunRecord] = []
    for d in range(scenario.datasets):
        records.extend(run_dataset_unit(scenario, d))
    return records, aggregate(scenario, records)


def _unit_task(args: tuple[Scenario, int]) -> tuple[str, int, list[RunRecord]]:
    scenario, d = args
    return scenario.scenario_id, d, run_dataset_unit(scenario, d)


def run_grid(
    scenarios: list[Scenario],
    workers: int = 1,
    progress: bool = False,
) -> tuple[list[RunRecord], list[AggregateRecord]]:
    """Run every (scenario, dataset) unit, optionally in parallel.

    Results are collected and ordered canonically, so the output does not
    depend on the worker count or scheduling.
    """
    by_id = {s.scenario_id: s for s in scenarios}
    if len(by_id) != len(scenarios):
        raise ValueError("scenario ids collide; factor levels must be distinct")
    units = [(s, d) for s in scenarios for d in range(s.datasets)]
    unit_records: dict[tuple[str, int], list[RunRecord]] = {}
    if workers <= 1:
        for i, unit in enumerate(units):
            sid, d, recs = _unit_task(unit)
            unit_records[(sid, d)] = recs
            if progress:
                print(f"[{i + 1}/{len(units)}] {sid} dataset {d}", file=sys.stderr)
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(_unit_task, unit): unit for unit in units}
            done = 0
            for fut in concurrent.futures.as_completed(futures):
                sid, d, recs = fut.result()
                unit_records[(sid, d)] = recs
                done += 1
                if progress:
                    print(f"[{done}/{len(units)}] {sid} dataset {d}", file=sys.stderr)
    records: list[RunRecord] = []
    aggregates: list[AggregateRecord] = []
    for sid in sorted(by_id):
        scenario = by_id[sid]
        recs = [
            r
            for d in range(scenario.datasets)
            for r in unit_records[(sid, d)]
        ]
        records.extend(recs)
        aggregates.extend(aggregate(scenario, recs))
    return records, aggregates


def results_csv(aggregates: list[AggregateRecord]) -> str:
    rows = sorted(aggregates, key=lambda a: (a.scenario_id, a.method))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RESULT_COLUMNS)
    for a in rows:
        writer.writerow(a.row())
    return buf.getvalue()


def manifest_json(scenarios: list[Scenario], master_seed: int | None = None) -> str:
    import scipy

    from . import __version__

    return json.dumps(
        {
            "master_seed": master_seed,
            "scenarios": [
                {
                    "scenario_id": s.scenario_id,
                    "n": s.n,
                    "p": s.p,
                    "omega_bar": s.omega_bar,
                    "k_star": s.k_star,
                    "cov_type": s.cov_type,
                    "datasets": s.datasets,
                    "runs": s.runs,
                    "methods": list(s.methods),
                    "master_seed": s.master_seed,
                    "mc_samples": s.mc_samples,
                }
                for s in scenarios
            ],
            "versions": {
                "kseek": __version__,
                "python": sys.version.split()[0],
                "numpy": np.__version__,
                "scipy": scipy.__version__,
            },
        },
        indent=2,
        sort_keys=True,
    )


def records_csv(records: list[RunRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        [
            "scenario_id",
            "method",
            "dataset_index",
            "khat",
            "cari",
            "criterion",
            "elapsed_s",
            "failed",
            "reason",
        ]
    )
    for r in sorted(records, key=lambda r: (r.scenario_id, r.method, r.dataset_index)):
        writer.writerow(
            [
                r.scenario_id,
                r.method,
                str(r.dataset_index),
                str(r.khat),
                repr(float(r.cari)),
                repr(float(r.criterion)),
                repr(float(r.elapsed_s)),
                "1" if r.failed else "0",
                r.reason,
            ]
        )
    return buf.getvalue()


def timing_report(records: list[RunRecord]) -> str:
    """Per (scenario, method) median and IQR of elapsed seconds, as CSV."""
    if not records:
        raise ValueError("no records to report on")
    keys = sorted({(r.scenario_id, r.method) for r in records})
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["scenario_id", "method", "median_s", "q1_s", "q3_s", "count"])
    for sid, method in keys:
        vals = [
            r.elapsed_s
            for r in records
            if r.scenario_id == sid and r.method == method and not r.failed
        ]
        if vals:
            q1, med, q3 = np.percentile(vals, [25, 50, 75])
        else:
            q1 = med = q3 = float("nan")
        writer.writerow(
            [sid, method, repr(float(med)), repr(float(q1)), repr(float(q3)), str(len(vals))]
        )
    return buf.getvalue()


def expand_grid(grid: dict, master_seed: int = 0) -> list[Scenario]:
    """Cross the level lists of a grid description into Scenario cells.

    Expected keys: n, p, omega_bar, k_star, cov_type (lists of levels) and
    optionally methods, datasets, runs, mc_samples.
    """
    methods = tuple(grid.get("methods", METHODS))
    datasets = int(grid.get("datasets", 10))
    runs = int(grid.get("runs", 3))
    mc_samples = int(grid.get("mc_samples", _DESK_MC_SAMPLES))
    scenarios = []
    for n in grid["n"]:
        for p in grid["p"]:
            for om in grid["omega_bar"]:
                for k in grid["k_star"]:
                    for cov in grid["cov_type"]:
                        scenarios.append(
                            Scenario(
                                n=int(n),
                                p=int(p),
                                omega_bar=float(om),
                                k_star=int(k),
                                cov_type=cov,
                                datasets=datasets,
                                runs=runs,
                                methods=methods,
                                master_seed=master_seed,
                                mc_samples=mc_samples,
                            )
                        )
    return scenarios
