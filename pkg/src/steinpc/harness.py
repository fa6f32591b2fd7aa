"""Monte Carlo sweeps over the dimension p.

Each trial draws one data set from the spiked model, runs the James-Stein
estimator and compares realised losses with their p -> infinity limits.
Limits are evaluated with the trial's *realised* distortion chi_n, since the
limit statements hold almost surely conditional on the score draw.

A trial's model seed depends on (master_seed, trial_index) only, so for a
fixed trial the beta sequence, the scores and the noise streams are shared
across the p grid; moving along the grid changes nothing but the dimension.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import platform
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import __version__, metrics, model, shrink
from .errors import SteinPCError
from .rng import ALGORITHM, derive_seed

log = logging.getLogger(__name__)

WORKERS_ENV = "STEINPC_WORKERS"

# Deviation sequences tracked along the grid. None = monotone-only check.
DEFAULT_CHECKS = {
    "raw_mse": {"final_tol": 0.15},
    "raw_sph": {"final_tol": 0.05},
    "mse_ratio": {"final_tol": 0.10},
    "mse_ratio_bound": {"final_tol": 1.05, "monotone": False},
    "sph_ratio": {"final_tol": 0.10},
    "mse_vs_beta": {"final_tol": 0.15},
    "eigvals": {"final_tol": 0.15},
    "dual_vector": {"final_tol": None},
    "coef_c": {"final_tol": 0.10},
    "coef_oracle_mse": {"final_tol": 0.10},
    "coef_oracle_sph": {"final_tol": 0.10},
}

TOLERANCE_NOTE = (
    "The limits are almost-sure statements without rates; every final-p tolerance "
    "and the one-inversion monotonicity allowance are engineering choices."
)


@dataclass
class ExperimentConfig:
    n: int = 8
    mu: float = 1.0
    sigma: float = 1.0
    delta: float = 1.0
    score_dist: str = "gaussian"
    p_grid: tuple = (256, 1024, 4096, 16384)
    trials: int = 20
    q: int = 1
    master_seed: int = 20211
    compare_against: str = "both"
    output_path: str | None = None
    workers: int = 1
    inversion_tol: float = 0.10
    checks: dict = field(default_factory=lambda: {k: dict(v) for k, v in DEFAULT_CHECKS.items()})

    def __post_init__(self):
        self.p_grid = tuple(int(p) for p in self.p_grid)
        if not self.p_grid:
            raise ValueError("p_grid must be nonempty")
        if any(b <= a for a, b in zip(self.p_grid, self.p_grid[1:])):
            raise ValueError("p_grid must be strictly ascending")
        if int(self.trials) != self.trials or self.trials < 1:
            raise ValueError("trials must be an integer >= 1")
        if self.q < 1:
            raise ValueError("q must be >= 1")
        if self.compare_against not in ("theta", "beta", "both"):
            raise ValueError("compare_against must be one of theta, beta, both")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        unknown = set(self.checks) - set(DEVIATIONS)
        if unknown:
            raise ValueError(f"unknown checks: {sorted(unknown)}")
        # validates n, mu, sigma, delta, score_dist
        self.model_spec(max(self.p_grid[0], 2), 0)
        if any(p <= self.n for p in self.p_grid):
            warnings.warn("p_grid contains p <= n; the limits concern p >> n", stacklevel=2)

    def model_spec(self, p: int, seed: int) -> model.SpikedModelSpec:
        return model.SpikedModelSpec(
            p=p, n=self.n, mu=self.mu, sigma=self.sigma, delta=self.delta,
            score_dist=self.score_dist, seed=seed,
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["p_grid"] = list(self.p_grid)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(json.loads(text))


@dataclass
class TrialRecord:
    p: int
    trial_index: int
    chi_n: float = math.nan
    snr: float = math.nan
    r_inf: float = math.nan
    mse_raw: float = math.nan
    mse_js: float = math.nan
    sph_raw: float = math.nan
    sph_js: float = math.nan
    ratio_mse: float = math.nan
    ratio_sph: float = math.nan
    c_used: float = math.nan
    c_raw: float = math.nan
    c_oracle_mse: float = math.nan
    c_oracle_sph: float = math.nan
    c_inf: float = math.nan
    d_inf: float = math.nan
    eigvals_over_p: tuple = ()
    dual_vector_deviation: float = math.nan
    seed_material: str = ""
    # comparisons against beta itself (compare_against = beta | both)
    mse_raw_beta: float = math.nan
    mse_beta_pred: float = math.nan
    sph_raw_beta: float = math.nan
    nu_hat_sq: float = math.nan
    status: str = "ok"
    error: str = ""

    @property
    def ok(self):
        return self.status == "ok"


TRIAL_FIELDS = [f.name for f in fields(TrialRecord)]


# ---------------------------------------------------------------------------
# single trial
# ---------------------------------------------------------------------------

def trial_seed(master_seed: int, trial_index: int) -> int:
    return derive_seed(master_seed, "trial", trial_index)


def _loss_ratio(js, raw):
    # a perfect raw estimate counts as "no change" when the shrunk one is perfect too
    if raw > 0:
        return js / raw
    return 1.0 if js == 0 else math.inf


def run_trial(config: ExperimentConfig, p: int, trial_index: int, return_state: bool = False):
    """One realisation at dimension ``p``; typed failures become a failed record.

    With ``return_state`` the generated data, ground truth and estimate are
    returned as well, for independent recomputation.
    """
    seed = trial_seed(config.master_seed, trial_index)
    rec = TrialRecord(p=p, trial_index=trial_index,
                      seed_material=f"{ALGORITHM}:{config.master_seed}:trial:{trial_index}:{seed}")
    state = None
    try:
        spec = config.model_spec(p, seed)
        data, truth = model.generate(spec)
        est = shrink.js_estimate(data, config.q)
        state = (data, truth, est)
        theory = metrics.snr_and_incoherence(config.mu, config.sigma, config.delta, config.n, truth.chi_n)
        rec.chi_n = truth.chi_n
        rec.snr = theory.snr
        rec.r_inf = theory.r_inf
        rec.c_inf = metrics.limit_c_inf(theory.snr)
        rec.d_inf = metrics.limit_d_inf(theory.snr, theory.r_inf)

        theta = truth.theta
        rec.mse_raw = metrics.mse(est.eta, theta)
        rec.mse_js = metrics.mse(est.eta_js, theta)
        rec.sph_raw = metrics.sph(est.eta, theta)
        rec.sph_js = metrics.sph(est.eta_js, theta)
        rec.ratio_mse = _loss_ratio(rec.mse_js, rec.mse_raw)
        rec.ratio_sph = _loss_ratio(rec.sph_js, rec.sph_raw)
        rec.c_used = est.c
        rec.c_raw = est.c_raw
        rec.nu_hat_sq = est.nu_hat_sq
        rec.c_oracle_mse = shrink.oracle_c_mse(est.eta, theta)
        try:
            rec.c_oracle_sph = shrink.oracle_c_sph(est.eta, theta)
        except SteinPCError:
            rec.c_oracle_sph = math.nan

        k = min(config.n, p)
        ev = np.full(config.n, math.nan)
        ev[:k] = est.spectrum.dual_eigenvalues[:k] / config.n   # s_i^2 / p = l_i^2 / n
        rec.eigvals_over_p = tuple(float(x) for x in ev)

        x_p = est.spectrum.dual_vectors[:, 0]
        if metrics.dot(x_p, truth.x_inf) < 0:
            x_p = -x_p
        rec.dual_vector_deviation = metrics.norm(x_p - truth.x_inf)

        if config.compare_against in ("beta", "both"):
            rec.mse_raw_beta = metrics.mse(est.eta, truth.beta)
            rec.mse_beta_pred = metrics.predicted_raw_mse_vs_beta(
                config.delta, config.n, theory.snr, theory.r_inf, truth.chi_n)
            rec.sph_raw_beta = metrics.sph(est.eta, truth.beta)
    except (SteinPCError, ValueError, ArithmeticError) as exc:
        rec.status = "failed"
        rec.error = f"{type(exc).__name__}: {exc}"
        log.warning("trial p=%d index=%d failed: %s", p, trial_index, rec.error)
    if return_state:
        return rec, state
    return rec


# ---------------------------------------------------------------------------
# deviations and aggregation
# ---------------------------------------------------------------------------

def _eig_deviation(rec, cfg):
    ev = np.asarray(rec.eigvals_over_p, dtype=float)
    bulk = cfg.delta**2 / cfg.n
    limits = np.full(ev.shape, bulk)
    limits[0] += rec.chi_n**2 * (cfg.sigma**2 + cfg.mu**2)
    ok = np.isfinite(ev)
    return float(np.max(np.abs(ev[ok] - limits[ok]) / limits[ok]))


DEVIATIONS = {
    "raw_mse": lambda r, c: abs(r.mse_raw * c.n / c.delta**2 - 1.0),
    "raw_sph": lambda r, c: abs(r.sph_raw - metrics.predicted_raw_sph(r.snr, r.r_inf)),
    "mse_ratio": lambda r, c: abs(r.ratio_mse - r.c_inf),
    "mse_ratio_bound": lambda r, c: r.ratio_mse,
    "sph_ratio": lambda r, c: abs(r.ratio_sph - r.d_inf),
    "mse_vs_beta": lambda r, c: abs(r.mse_raw_beta / r.mse_beta_pred - 1.0),
    "eigvals": _eig_deviation,
    "dual_vector": lambda r, c: r.dual_vector_deviation,
    "coef_c": lambda r, c: abs(r.c_used - r.c_inf),
    "coef_oracle_mse": lambda r, c: abs(r.c_oracle_mse - r.c_inf),
    "coef_oracle_sph": lambda r, c: abs(r.c_oracle_sph - r.c_inf),
}

# per-trial bounds: aggregated by the maximum rather than the median
MAX_CHECKS = {"mse_ratio_bound"}

SCALAR_METRICS = [
    name for name in TRIAL_FIELDS
    if name not in ("p", "trial_index", "eigvals_over_p", "seed_material", "status", "error")
]


def deviation(name, rec, config) -> float:
    try:
        return float(DEVIATIONS[name](rec, config))
    except (ZeroDivisionError, ValueError):
        return math.nan


def median_mad(values):
    """Median and (unscaled) median absolute deviation of the finite values."""
    x = np.asarray([v for v in values if v is not None and math.isfinite(v)], dtype=float)
    if x.size == 0:
        return math.nan, math.nan
    med = float(np.median(x))
    return med, float(np.median(np.abs(x - med)))


def aggregate(records, config: ExperimentConfig | None = None):
    """Per-p median / MAD of every scalar metric (and every deviation, given a config)."""
    records = sorted(records, key=lambda r: (r.p, r.trial_index))
    if not records:
        raise ValueError("no records to aggregate")
    rows = []
    for p in sorted({r.p for r in records}):
        cell = [r for r in records if r.p == p]
        good = [r for r in cell if r.ok]
        row = {"p": p, "trials": len(cell), "failed": len(cell) - len(good)}
        for name in SCALAR_METRICS:
            med, mad = median_mad([getattr(r, name) for r in good])
            row[name] = {"median": med, "mad": mad}
        if config is not None:
            for name in DEVIATIONS:
                vals = [deviation(name, r, config) for r in good]
                med, mad = median_mad(vals)
                finite = [v for v in vals if math.isfinite(v)]
                row["dev_" + name] = {"median": med, "mad": mad,
                                      "max": max(finite) if finite else math.nan}
        rows.append(row)
    return rows


def nonincreasing_with_allowance(seq, inversion_tol=0.10):
    """True if ``seq`` never increases, except for at most one rise of <= inversion_tol (relative)."""
    rises = 0
    for a, b in zip(seq, seq[1:]):
        if not (math.isfinite(a) and math.isfinite(b)):
            return False
        if b > a:
            rises += 1
            if rises > 1 or (b - a) > inversion_tol * abs(a):
                return False
    return True


def verdicts(rows, config: ExperimentConfig):
    """Convergence verdicts; empty when the grid has fewer than two usable points."""
    out = []
    usable = [r for r in rows if r["trials"] > r["failed"]]
    if len(usable) < 2:
        return out
    for name, chk in config.checks.items():
        key = "dev_" + name
        stat = "max" if name in MAX_CHECKS else "median"
        seq = [r[key][stat] for r in usable]
        tol = chk.get("final_tol")
        monotone = chk.get("monotone", True)
        mono_ok = nonincreasing_with_allowance(seq, config.inversion_tol) if monotone else True
        final_ok = True if tol is None else (math.isfinite(seq[-1]) and seq[-1] <= tol)
        out.append({
            "check": name,
            "statistic": stat,
            "sequence": seq,
            "final": seq[-1],
            "final_tol": tol,
            "margin": (tol - seq[-1]) if tol is not None else None,
            "monotone_required": monotone,
            "monotone_ok": mono_ok,
            "final_ok": final_ok,
            "passed": bool(mono_ok and final_ok),
        })
    return out


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

@dataclass
class SweepReport:
    config: ExperimentConfig
    records: list
    rows: list
    verdicts: list
    metadata: dict

    @property
    def passed(self) -> bool:
        return all(v["passed"] for v in self.verdicts)

    def verdict(self, name):
        for v in self.verdicts:
            if v["check"] == name:
                return v
        raise KeyError(name)

    def records_at(self, p):
        return [r for r in self.records if r.p == p]

    def to_dict(self, include_runtime: bool = True) -> dict:
        meta = dict(self.metadata)
        if not include_runtime:
            meta.pop("runtime", None)
        return {"config": self.config.to_dict(), "aggregates": self.rows,
                "verdicts": self.verdicts, "passed": self.passed, "metadata": meta}

    def to_json(self, include_runtime: bool = True) -> str:
        return json.dumps(_jsonable(self.to_dict(include_runtime)), indent=2, allow_nan=True)

    def trials_csv(self) -> str:
        return records_to_csv(self.records)

    def write(self, out_dir):
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "trials.csv"), "w", encoding="utf-8", newline="") as fh:
            fh.write(self.trials_csv())
        with open(os.path.join(out_dir, "report.json"), "w", encoding="utf-8") as fh:
            fh.write(self.to_json())
            fh.write("\n")


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if isinstance(x, np.generic):
        return _jsonable(x.item())
    return x


def _fmt(v):
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    if isinstance(v, tuple):
        return ";".join(_fmt(x) for x in v)
    return str(v)


def records_to_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRIAL_FIELDS)
    for r in sorted(records, key=lambda r: (r.p, r.trial_index)):
        w.writerow([_fmt(getattr(r, name)) for name in TRIAL_FIELDS])
    return buf.getvalue()


def resolve_workers(config: ExperimentConfig) -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ValueError(f"{WORKERS_ENV} must be an integer, got {env!r}") from None
        if n < 1:
            raise ValueError(f"{WORKERS_ENV} must be >= 1")
        return n
    return config.workers


def _run_cell(args):
    config, p, t = args
    return run_trial(config, p, t)


def run_sweep(config: ExperimentConfig, workers: int | None = None) -> SweepReport:
    """Evaluate every (p, trial) cell, aggregate and judge convergence.

    Results do not depend on ``workers``: each cell is a pure function of
    (config, p, trial_index) and aggregation runs over sorted records.
    """
    workers = resolve_workers(config) if workers is None else workers
    tasks = [(config, p, t) for p in config.p_grid for t in range(config.trials)]
    start = time.perf_counter()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_cell, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        records = [_run_cell(t) for t in tasks]
    records.sort(key=lambda r: (r.p, r.trial_index))
    rows = aggregate(records, config)
    report = SweepReport(
        config=config,
        records=records,
        rows=rows,
        verdicts=verdicts(rows, config),
        metadata={
            "package_version": __version__,
            "prng": ALGORITHM,
            "tolerance_note": TOLERANCE_NOTE,
            "runtime": {
                "seconds": time.perf_counter() - start,
                "workers": workers,
                "python": platform.python_version(),
                "numpy": np.__version__,
            },
        },
    )
    if config.output_path:
        report.write(config.output_path)
    return report
