"""Monte-Carlo convergence experiments: simulate, estimate on every sub-level, aggregate.

For every Hurst index H and realization the engine samples a K-component fBm on the fine grid,
builds the trajectory (exact solution when the problem has one, Heun-3 otherwise) and, for each
sub-level n, records three normalized errors:

* ``hurst``:         (H - H_n) / (H * delta_n**H), summarized as log2|.| with a sign flag
* ``theta_known``:   |theta - theta_n| / delta_n**H, summarized as log2
* ``theta_unknown``: |theta - theta-bar_n| / (n * delta_n**H), summarized as log2
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from os import PathLike
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .estimators import estimate_hurst, estimate_theta_known_H, estimate_theta_unknown_H, rate_delta
from .exceptions import ConfigError, FracvarError
from .fbm import FbmSampleRequest, sample_fbm
from .problems import ExampleProblem, get_example
from .rde import solve_heun3_many

__all__ = [
    "CSV_COLUMNS",
    "METRICS",
    "BoxPlotStats",
    "ExperimentConfig",
    "ExperimentReport",
    "MetricSamples",
    "box_stats",
    "emit_report",
    "parse_report_json",
    "realization_seed",
    "run_experiment",
]

log = logging.getLogger(__name__)

METRICS = ("hurst", "theta_known", "theta_unknown")
CSV_COLUMNS = ("example", "H", "n", "metric", "q25", "median", "q75", "whisker_low", "whisker_high", "count")
RAW_COLUMNS = ("example", "H", "n", "metric", "realization", "log2_abs", "sign", "raw_error")
EXAMPLE_IDS = ("nonlinear1d", "linear2d", "nonlinear2d", "custom")
_BATCH = 16


@dataclass(frozen=True)
class ExperimentConfig:
    example: str = "linear2d"
    hursts: Tuple[float, ...] = (0.5,)
    fine_level: int = 16
    sub_levels: Tuple[int, ...] = tuple(range(2, 15))
    realizations: int = 100
    master_seed: int = 1
    horizon: float = 1.0
    n_jobs: int = 1
    problem: Optional[ExampleProblem] = field(default=None, compare=False, repr=False)

    def validate(self) -> None:
        if self.example not in EXAMPLE_IDS:
            raise ConfigError(f"unknown example {self.example!r}; choose from {EXAMPLE_IDS}")
        if self.example == "custom" and self.problem is None:
            raise ConfigError("example 'custom' requires a problem definition")
        if not self.hursts:
            raise ConfigError("at least one Hurst index is required")
        for h in self.hursts:
            if not 0.0 < h < 1.0:
                raise ConfigError(f"Hurst index {h} outside (0, 1)")
        if self.fine_level < 2:
            raise ConfigError(f"fine level must be >= 2, got {self.fine_level}")
        if any(n < 1 for n in self.sub_levels):
            raise ConfigError(f"sub-levels must be >= 1, got {list(self.sub_levels)}")
        if self.sub_levels and max(self.sub_levels) + 1 > self.fine_level:
            raise ConfigError(
                f"max sub-level {max(self.sub_levels)} + 1 exceeds fine level {self.fine_level}"
            )
        if self.realizations < 1:
            raise ConfigError(f"realizations must be positive, got {self.realizations}")
        if not self.horizon > 0:
            raise ConfigError(f"horizon must be positive, got {self.horizon}")
        if self.n_jobs < 1:
            raise ConfigError(f"n_jobs must be positive, got {self.n_jobs}")

    def resolve_problem(self) -> ExampleProblem:
        return self.problem if self.example == "custom" else get_example(self.example)


@dataclass(frozen=True)
class BoxPlotStats:
    q25: float
    median: float
    q75: float
    whisker_low: float
    whisker_high: float
    count: int


def box_stats(samples) -> BoxPlotStats:
    """Type-7 quartiles; whiskers span the extremes."""
    x = np.asarray(samples, dtype=float)
    x = x[np.isfinite(x)]
    if x.size == 0:
        return BoxPlotStats(math.nan, math.nan, math.nan, math.nan, math.nan, 0)
    q25, med, q75 = np.percentile(x, [25, 50, 75], method="linear")
    return BoxPlotStats(float(q25), float(med), float(q75), float(x.min()), float(x.max()), int(x.size))


@dataclass
class MetricSamples:
    """Per-realization errors of one metric in one (H, n) cell."""

    realization: List[int] = field(default_factory=list)
    raw_error: List[float] = field(default_factory=list)
    normalized: List[float] = field(default_factory=list)

    def add(self, r: int, raw: float, normalized: float) -> None:
        self.realization.append(r)
        self.raw_error.append(raw)
        self.normalized.append(normalized)

    @property
    def log2_abs(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log2(np.abs(np.asarray(self.normalized, dtype=float)))

    @property
    def sign(self) -> np.ndarray:
        return np.sign(np.asarray(self.normalized, dtype=float)).astype(int)

    @property
    def stats(self) -> BoxPlotStats:
        return box_stats(self.log2_abs)

    def raw_median(self) -> float:
        return float(np.median(self.raw_error)) if self.raw_error else math.nan


@dataclass(frozen=True)
class Failure:
    H: float
    n: int
    realization: int
    metric: str
    message: str


@dataclass
class ExperimentReport:
    example: str
    hursts: Tuple[float, ...]
    sub_levels: Tuple[int, ...]
    cells: Dict[Tuple[float, int], Dict[str, MetricSamples]]
    failures: List[Failure] = field(default_factory=list)

    def samples(self, H: float, n: int, metric: str) -> MetricSamples:
        return self.cells[(H, n)][metric]

    def rows(self) -> List[dict]:
        out = []
        for H in self.hursts:
            for n in self.sub_levels:
                for metric in METRICS:
                    st = self.samples(H, n, metric).stats
                    out.append(
                        {
                            "example": self.example,
                            "H": H,
                            "n": n,
                            "metric": metric,
                            "q25": st.q25,
                            "median": st.median,
                            "q75": st.q75,
                            "whisker_low": st.whisker_low,
                            "whisker_high": st.whisker_high,
                            "count": st.count,
                        }
                    )
        return out

    def raw_rows(self) -> List[dict]:
        out = []
        for H in self.hursts:
            for n in self.sub_levels:
                for metric in METRICS:
                    s = self.samples(H, n, metric)
                    for r, la, sg, raw in zip(s.realization, s.log2_abs, s.sign, s.raw_error):
                        out.append(
                            {
                                "example": self.example,
                                "H": H,
                                "n": n,
                                "metric": metric,
                                "realization": r,
                                "log2_abs": float(la),
                                "sign": int(sg),
                                "raw_error": float(raw),
                            }
                        )
        return out


def realization_seed(master_seed: int, hurst: float, realization: int) -> int:
    """64-bit seed for one realization, independent of run order and thread count."""
    key = (int(round(hurst * 10**6)), int(realization))
    ss = np.random.SeedSequence(int(master_seed) & ((1 << 64) - 1), spawn_key=key)
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _trajectories(cfg: ExperimentConfig, problem: ExampleProblem, H: float, indices: Sequence[int]):
    drivers = [
        sample_fbm(
            FbmSampleRequest(
                hurst=H,
                num_components=problem.num_noises,
                fine_level=cfg.fine_level,
                horizon=cfg.horizon,
                seed=realization_seed(cfg.master_seed, H, r),
            )
        )
        for r in indices
    ]
    if problem.exact is not None:
        return [problem.exact(d) for d in drivers]
    return solve_heun3_many(problem.fields, drivers, problem.y0)


def _estimate_batch(cfg, problem, H, indices):
    """Returns (records, failures) for a chunk of realizations; records are (r, n, metric, raw, normalized)."""
    records, failures = [], []
    try:
        paths = _trajectories(cfg, problem, H, indices)
    except FracvarError as exc:
        # a divergent batch is retried one realization at a time so that only the culprit is lost
        if len(indices) == 1:
            for n in cfg.sub_levels:
                for metric in METRICS:
                    failures.append(Failure(H, n, indices[0], metric, f"trajectory: {exc}"))
            return records, failures
        for r in indices:
            rec, fail = _estimate_batch(cfg, problem, H, [r])
            records.extend(rec)
            failures.extend(fail)
        return records, failures

    theta = problem.theta
    for r, y in zip(indices, paths):
        for n in cfg.sub_levels:
            scale = rate_delta(H, n) ** H
            try:
                h_n = estimate_hurst(y, n, warn=False).h_hat
                records.append((r, n, "hurst", abs(H - h_n), (H - h_n) / (H * scale)))
            except FracvarError as exc:
                failures.append(Failure(H, n, r, "hurst", str(exc)))
            try:
                est = estimate_theta_known_H(y, problem.fields, problem.tests, H, level=n)
                err = float(np.linalg.norm(theta - est.theta))
                records.append((r, n, "theta_known", err, err / scale))
            except FracvarError as exc:
                failures.append(Failure(H, n, r, "theta_known", str(exc)))
            try:
                est = estimate_theta_unknown_H(y, problem.fields, problem.tests, level=n)
                err = float(np.linalg.norm(theta - est.theta))
                records.append((r, n, "theta_unknown", err, err / (n * scale)))
            except FracvarError as exc:
                failures.append(Failure(H, n, r, "theta_unknown", str(exc)))
    return records, failures


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Run every (H, realization) of ``cfg`` and collect per-(H, n) error samples.

    Raises ConfigError before any computation when ``cfg`` is invalid. Estimator failures are
    recorded in ``report.failures`` and do not abort the run.
    """
    cfg.validate()
    problem = cfg.resolve_problem()
    hursts = tuple(float(h) for h in cfg.hursts)
    levels = tuple(int(n) for n in cfg.sub_levels)
    cells = {(H, n): {m: MetricSamples() for m in METRICS} for H in hursts for n in levels}
    report = ExperimentReport(cfg.example, hursts, levels, cells)
    if not levels:
        return report

    chunks = [
        (H, list(range(lo, min(lo + _BATCH, cfg.realizations))))
        for H in hursts
        for lo in range(0, cfg.realizations, _BATCH)
    ]

    def work(chunk):
        H, idx = chunk
        log.debug("H=%s realizations %d..%d", H, idx[0], idx[-1])
        return H, _estimate_batch(cfg, problem, H, idx)

    if cfg.n_jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.n_jobs) as pool:
            results = list(pool.map(work, chunks))
    else:
        results = [work(c) for c in chunks]

    # results arrive in chunk order, so samples are appended in realization order
    for H, (records, failures) in results:
        for r, n, metric, raw, normalized in records:
            cells[(H, n)][metric].add(r, raw, normalized)
        report.failures.extend(failures)
    if report.failures:
        log.warning("%d estimator failures recorded", len(report.failures))
    return report


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _csv_text(rows: Sequence[dict], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in columns])
    return buf.getvalue()


def _json_safe(row: dict) -> dict:
    return {k: (None if isinstance(v, float) and not math.isfinite(v) else v) for k, v in row.items()}


def report_to_json(report: ExperimentReport, raw: bool = False) -> str:
    doc = {
        "example": report.example,
        "columns": list(CSV_COLUMNS),
        "rows": [_json_safe(r) for r in report.rows()],
    }
    if raw:
        doc["raw"] = [_json_safe(r) for r in report.raw_rows()]
    return json.dumps(doc, indent=2, allow_nan=False)


def parse_report_json(text: str) -> List[dict]:
    """Rows of a JSON report, with ``null`` statistics mapped back to NaN."""
    doc = json.loads(text)
    rows = []
    for row in doc["rows"]:
        rows.append({k: (math.nan if v is None else v) for k, v in row.items()})
    return rows


def emit_report(report: ExperimentReport, dest: Union[str, PathLike], fmt: str = "csv", raw: bool = False) -> List[Path]:
    """Write ``report`` to ``dest``; with ``raw`` per-realization samples are written too.

    CSV raw samples go to a sibling ``<stem>.raw.csv``; JSON embeds them under ``"raw"``.
    Returns the paths written.
    """
    dest = Path(dest)
    if fmt not in ("csv", "json"):
        raise ConfigError(f"unknown report format {fmt!r}")
    written = []
    try:
        if fmt == "csv":
            dest.write_text(_csv_text(report.rows(), CSV_COLUMNS))
            written.append(dest)
            if raw:
                raw_dest = dest.with_name(dest.stem + ".raw.csv")
                raw_dest.write_text(_csv_text(report.raw_rows(), RAW_COLUMNS))
                written.append(raw_dest)
        else:
            dest.write_text(report_to_json(report, raw))
            written.append(dest)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write report: {exc.strerror}", str(dest)) from exc
    return written
