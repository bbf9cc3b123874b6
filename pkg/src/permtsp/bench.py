"""Batch runs, reports and the statistics behind the benchmark tables and plots.

Reports are JSON documents (``"schema": 1``) with one record per instance and
aggregate statistics, plus a CSV of the per-instance records. All outputs are
data only; plotting is left to the reader.
"""

from __future__ import annotations

import csv
import hashlib
import itertools
import json
import subprocess
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .baselines import (
    beam_search,
    christofides_approx,
    farthest_insertion,
    nearest_neighbor,
    nn_all_starts,
)
from .exact import HELD_KARP_MAX_N, optimality_gap, solve_exact
from .instances import TspInstance, read_instances
from .permutation import coprime_shifts
from .solver import SolverConfig, shift_budget_lengths, solve_single, solve_with_shift_budget

SCHEMA = 1
PERCENTILES = (5, 25, 75, 95)


class BenchError(RuntimeError):
    """A benchmark input is inconsistent (mixed sizes, unpaired reports, ...)."""


@dataclass(frozen=True)
class Method:
    """A parsed method name such as ``solver:k3``, ``ensemble:m4`` or ``beam:w1280``."""

    name: str
    param: int | None = None

    @classmethod
    def parse(cls, text: str) -> "Method":
        head, _, tail = text.partition(":")
        prefixes = {"solver": "k", "ensemble": "m", "beam": "w"}
        if head in ("nn", "nn_all", "farthest", "christofides", "exact", "ensemble") and not tail:
            return cls(head)
        if head in prefixes and tail.startswith(prefixes[head]) and tail[1:].isdigit():
            return cls(head, int(tail[1:]))
        raise ValueError(
            f"unknown method {text!r}; expected solver:kK, ensemble, ensemble:mM, nn, "
            "nn_all, farthest, beam:wW, christofides or exact"
        )

    def __str__(self):
        if self.param is None:
            return self.name
        return f"{self.name}:{dict(solver='k', ensemble='m', beam='w')[self.name]}{self.param}"

    @property
    def uses_solver(self) -> bool:
        return self.name in ("solver", "ensemble")


def version_string() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            capture_output=True, text=True, timeout=5, cwd=Path(__file__).parent,
        )
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def summarize(values: Sequence[float]) -> dict:
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        return {"count": 0}
    out = {
        "count": int(v.size),
        "mean": float(v.mean()),
        "std": float(v.std(ddof=1)) if v.size > 1 else 0.0,
        "median": float(np.median(v)),
        "min": float(v.min()),
        "max": float(v.max()),
    }
    for p in PERCENTILES:
        out[f"p{p}"] = float(np.percentile(v, p))
    return out


def run_method(inst: TspInstance, method: Method, cfg: SolverConfig) -> dict:
    """Solve one instance; returns the fields of a report record (without id or gap)."""
    extra: dict = {}
    start = time.perf_counter()
    if method.name == "solver":
        res = solve_single(inst, method.param, cfg)
        tour = res.tour
        extra = {"k_star": res.k, "restart_index": res.restart_index}
    elif method.name == "ensemble":
        res = solve_with_shift_budget(inst, cfg, method.param)
        tour = res.tour
        extra = {
            "k_star": res.k,
            "restart_index": res.restart_index,
            "member_lengths": {str(k): v for k, v in sorted(res.member_lengths.items())},
        }
    elif method.name == "nn":
        tour = nearest_neighbor(inst, 0)
    elif method.name == "nn_all":
        tour = nn_all_starts(inst)
    elif method.name == "farthest":
        tour = farthest_insertion(inst)
    elif method.name == "beam":
        tour = beam_search(inst, method.param)
    elif method.name == "christofides":
        tour = christofides_approx(inst)
        extra = {"approximate_matching": tour.approximate_matching}
    else:
        res = solve_exact(inst)
        tour = res.tour
        extra = {"exact_method": res.method}
    wall = time.perf_counter() - start
    return {"n": inst.n, "length": tour.length, "order": list(tour.order), "wall_time": wall, **extra}


def reference_length(inst: TspInstance) -> tuple[float, str]:
    """Optimal length when the exact oracle is tractable, else the best of two
    cheap heuristics (a relative reference, never called optimal)."""
    if inst.n <= HELD_KARP_MAX_N:
        return solve_exact(inst).length, "optimal"
    return min(farthest_insertion(inst).length, nn_all_starts(inst).length), "best_known"


def _job(args):
    coords, method, cfg, with_gap = args
    inst = TspInstance(coords)
    rec = run_method(inst, method, cfg)
    if with_gap:
        ref, kind = reference_length(inst)
        ref = min(ref, rec["length"]) if kind == "best_known" else ref
        rec["reference_length"] = ref
        rec["gap_reference"] = kind
        rec["gap"] = optimality_gap(rec["length"], ref)
    return rec


def _map(fn, jobs: list, workers: int) -> list:
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def run_batch(
    instances: Sequence[TspInstance],
    method: Method | str,
    cfg: SolverConfig = SolverConfig(),
    workers: int = 1,
    with_gap: bool = True,
) -> list[dict]:
    if isinstance(method, str):
        method = Method.parse(method)
    jobs = [(inst.coords, method, cfg, with_gap) for inst in instances]
    records = _map(_job, jobs, workers)
    for i, rec in enumerate(records):
        rec["id"] = i
    return records


def build_report(
    method: Method | str,
    records: list[dict],
    cfg: SolverConfig | None,
    instances_path=None,
    seed: int | None = None,
) -> dict:
    method = Method.parse(method) if isinstance(method, str) else method
    lengths = [r["length"] for r in records]
    gaps = [r["gap"] for r in records if "gap" in r]
    kinds = sorted({r["gap_reference"] for r in records if "gap_reference" in r})
    report = {
        "schema": SCHEMA,
        "method": str(method),
        "version": version_string(),
        "seed": seed if seed is not None else (cfg.seed if cfg else None),
        "config": cfg.to_dict() if (cfg is not None and method.uses_solver) else {},
        "instances": {
            "path": str(instances_path) if instances_path else None,
            "sha256": file_digest(instances_path) if instances_path else None,
            "count": len(records),
        },
        "gap_reference": kinds[0] if len(kinds) == 1 else ("mixed" if kinds else None),
        "aggregate": {"length": summarize(lengths), "gap": summarize(gaps) if gaps else None},
        "records": records,
    }
    return report


def write_report(report: dict, path) -> None:
    path = Path(path)
    path.write_text(json.dumps(report, indent=1, sort_keys=True) + "\n")
    write_records_csv(report["records"], path.with_suffix(".csv"))


def read_report(path) -> dict:
    report = json.loads(Path(path).read_text())
    if report.get("schema") != SCHEMA:
        raise BenchError(f"{path}: unsupported report schema {report.get('schema')!r}")
    return report


CSV_FIELDS = ("id", "n", "length", "gap", "reference_length", "gap_reference", "wall_time", "k_star", "restart_index")


def write_records_csv(records: list[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS, extrasaction="ignore")
        writer.writeheader()
        for rec in records:
            writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in rec.items()})


def read_records_csv(path) -> list[dict]:
    ints = {"id", "n", "k_star", "restart_index"}
    floats = {"length", "gap", "reference_length", "wall_time"}
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            rec = {}
            for key, value in row.items():
                if value == "":
                    continue
                rec[key] = int(value) if key in ints else float(value) if key in floats else value
            out.append(rec)
    return out


def table_row(report: dict) -> str:
    """One row of a method comparison table: mean length and mean gap."""
    agg = report["aggregate"]
    gap = agg.get("gap")
    gap_text = "-" if not gap else f"{gap['mean']:.2f}%"
    if report.get("gap_reference") == "best_known":
        gap_text += " (relative)"
    return f"{report['method']:<16} | n={_sizes(report)} | len {agg['length']['mean']:.4f} | gap {gap_text}"


def _sizes(report: dict) -> str:
    sizes = sorted({r["n"] for r in report["records"]})
    return ",".join(map(str, sizes))


# -- hyper-parameter sweep ---------------------------------------------------------


def parse_grid(text: str) -> dict[str, list[float]]:
    """``key = v1, v2, ...`` lines; keys are solver config fields (usually tau, gamma)."""
    grid: dict[str, list[float]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, values = (p.strip() for p in line.partition("="))
        if not sep or key not in SolverConfig.__dataclass_fields__:
            raise BenchError(f"grid line {lineno}: expected '<config key> = v1, v2, ...'")
        grid[key] = [float(v) for v in values.replace(",", " ").split()]
    if not grid or any(not v for v in grid.values()):
        raise BenchError("empty grid")
    return grid


def sweep(
    instances: Sequence[TspInstance],
    grid: dict[str, list[float]],
    base: SolverConfig = SolverConfig(),
    method: Method | str = "solver:k1",
    workers: int = 1,
) -> dict:
    """Evaluate every grid cell; the best cell has the lowest mean decoded length."""
    method = Method.parse(method) if isinstance(method, str) else method
    keys = list(grid)
    rows = []
    for values in itertools.product(*(grid[k] for k in keys)):
        changes = {k: (int(v) if isinstance(getattr(base, k), int) else v) for k, v in zip(keys, values)}
        cfg = base.replace(**changes)
        records = run_batch(instances, method, cfg, workers, with_gap=False)
        rows.append({**changes, "mean_length": summarize([r["length"] for r in records])["mean"]})
    best = min(range(len(rows)), key=lambda i: (rows[i]["mean_length"], i))
    best_cfg = base.replace(**{k: rows[best][k] for k in keys})
    return {
        "schema": SCHEMA,
        "method": str(method),
        "version": version_string(),
        "grid": rows,
        "best": rows[best],
        "best_config": best_cfg.to_dict(),
    }


# -- coprime shift curve -----------------------------------------------------------


def shift_curve(instances: Sequence[TspInstance], cfg: SolverConfig = SolverConfig(), workers: int = 1) -> list[dict]:
    """Mean decoded length for shift budgets ``m = 1..phi(n)``."""
    sizes = {inst.n for inst in instances}
    if len(sizes) != 1:
        raise BenchError(f"shift curve needs instances of one size, got {sorted(sizes)}")
    n = sizes.pop()
    shifts = coprime_shifts(n)
    records = run_batch(instances, Method("ensemble"), cfg, workers, with_gap=False)
    curves = np.array([
        shift_budget_lengths({int(k): v for k, v in rec["member_lengths"].items()}) for rec in records
    ])
    means = curves.mean(axis=0)
    rows = [{"m": m + 1, "k": shifts[m], "mean_length": float(means[m])} for m in range(len(shifts))]
    for prev, cur in zip(rows, rows[1:]):
        if cur["mean_length"] > prev["mean_length"]:
            raise BenchError("shift curve is not non-increasing")
    return rows


def write_rows_csv(rows: list[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        for row in rows:
            writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})


def read_rows_csv(path) -> list[dict]:
    def conv(v: str):
        try:
            return int(v)
        except ValueError:
            try:
                return float(v)
            except ValueError:
                return v

    with open(path, newline="") as fh:
        return [{k: conv(v) for k, v in row.items()} for row in csv.DictReader(fh)]


# -- length distributions ----------------------------------------------------------


def distributions(reports: Sequence[dict], bins: int = 30) -> dict[str, list[dict]]:
    """Histogram, box-plot summary and empirical CDF per report, on shared bins."""
    if not reports:
        raise BenchError("need at least one report")
    ref = reports[0]
    ref_ids = [r["id"] for r in ref["records"]]
    for rep in reports[1:]:
        same_file = rep["instances"].get("sha256") == ref["instances"].get("sha256")
        if not same_file or [r["id"] for r in rep["records"]] != ref_ids:
            raise BenchError(f"report for {rep['method']} is not paired with {ref['method']}")
    all_lengths = np.concatenate([[r["length"] for r in rep["records"]] for rep in reports])
    edges = np.linspace(all_lengths.min(), all_lengths.max(), bins + 1)
    hist, box, cdf = [], [], []
    for rep in reports:
        name = rep["method"]
        lengths = np.sort([r["length"] for r in rep["records"]])
        counts, _ = np.histogram(lengths, bins=edges)
        hist += [
            {"method": name, "bin_lo": float(lo), "bin_hi": float(hi), "count": int(c)}
            for lo, hi, c in zip(edges[:-1], edges[1:], counts)
        ]
        q = np.percentile(lengths, [0, 25, 50, 75, 100])
        box.append({
            "method": name, "min": float(q[0]), "q1": float(q[1]), "median": float(q[2]),
            "q3": float(q[3]), "max": float(q[4]), "mean": float(lengths.mean()),
        })
        cdf += [
            {"method": name, "length": float(x), "cdf": (i + 1) / len(lengths)}
            for i, x in enumerate(lengths)
        ]
    return {"hist": hist, "box": box, "cdf": cdf}


def load_instances(path) -> list[TspInstance]:
    instances = read_instances(path)
    if not instances:
        raise BenchError(f"{path}: no instances")
    return instances

