"""Experiment configuration, dispatch to the analysis modules, and reporting."""
from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path as FsPath

import numpy as np

from . import __version__, _accel
from . import gaussian_analysis as ga
from . import lattice_paths as lp
from . import point_process as pp
from . import stats_tests as st
from .energy_engine import covariance_matrix
from .environment import DistributionSpec
from .errors import BudgetExceededError, ConfigError, DpremError

MODES = ("pointprocess", "zet", "combinatorics", "cf-bounds", "decorrelation")

EXIT_OK = 0
EXIT_STAT_FAIL = 2
EXIT_CONFIG = 3


@dataclass
class ExperimentConfig:
    mode: str = "pointprocess"
    dim: int = 1
    n: int = 16
    n_ladder: list[int] | None = None
    dist: str = "gaussian"
    c: float = 0.0
    alpha: float = 0.0
    b: list[float] = field(default_factory=lambda: [0.5, 1.0, 2.0])
    samples: int = 1000
    seed: int = 2024
    gmax: float = 50.0
    workers: int = 1
    out: str | None = None
    k_keep: int = 5
    # verdict thresholds
    gof_alpha: float = 0.01
    ks_coeff: float = st.KS_CRIT_5PCT
    ks_factor: float = 1.0
    mean_factor: float = 1.0
    check_mean: bool = True
    # decorrelation
    eps: float = 0.5
    b_decor: float = 2.0
    decor_limit: float = 0.02
    # tuple sums
    l: int = 2
    zet_b: list[float] | None = None
    eta_class: float = ga.DEFAULT_ETA_CLASS
    zet_tolerance: float = 0.2
    inside_share_min: float = 0.95
    # combinatorics
    capacity_eta: float = 0.3
    capacity_max: float = 0.10
    # characteristic-function bounds
    cf_tuples: int = 20
    cf_eps: float = 1.0
    cf_delta: float = 1.0
    c_ratio_max: float = 3.0
    gaussian_cf_tol: float = 1e-12
    # budgets
    path_cap: int = lp.DEFAULT_PATH_CAP
    pair_cap: int = lp.DEFAULT_PAIR_CAP
    tuple_cap: int = ga.DEFAULT_TUPLE_CAP
    i_know: bool = False

    @classmethod
    def from_dict(cls, obj: dict) -> ExperimentConfig:
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(obj) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**obj)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @property
    def level(self) -> ga.LevelSpec:
        return ga.LevelSpec(self.c, self.alpha)

    def caps(self) -> tuple[int | None, int | None, int | None]:
        if self.i_know:
            return None, None, None
        return self.path_cap, self.pair_cap, self.tuple_cap

    def ladder(self) -> list[int]:
        return list(self.n_ladder) if self.n_ladder is not None else [self.n]

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        try:
            DistributionSpec(self.dist)
            self.level
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.dim < 1:
            raise ConfigError("dim must be >= 1")
        ladder = self.ladder()
        if not ladder:
            raise ConfigError("empty N ladder")
        if any(n < 1 for n in ladder):
            raise ConfigError("N must be >= 1")
        if self.samples < 1 or self.workers < 1:
            raise ConfigError("samples and workers must be >= 1")
        if self.b and max(self.b) > self.gmax:
            raise ConfigError("windows must not exceed gmax")
        if self.mode == "zet" and self.dist != "gaussian":
            raise ConfigError("zet mode uses exact gaussian box probabilities; dist must be gaussian")
        path_cap, pair_cap, tuple_cap = self.caps()
        q = 2 * self.dim
        for n in ladder:
            if self.mode in ("pointprocess", "decorrelation"):
                lp.check_budget(f"paths (d={self.dim}, N={n})", q**n, path_cap)
            elif self.mode == "zet":
                lp.check_budget(f"tuples (d={self.dim}, N={n}, l={self.l})", q ** (n * self.l), tuple_cap)
            elif self.mode == "combinatorics":
                lp.check_budget(f"pairs (d={self.dim}, N={n})", q ** (2 * n), pair_cap)
            elif self.mode == "cf-bounds":
                lp.check_budget(f"paths (d={self.dim}, N={n})", q**n, path_cap)
            if self.mode in ("pointprocess", "decorrelation", "zet"):
                try:
                    ga.delta_n(self.dim, n, self.level)
                except OverflowError as exc:
                    raise ConfigError(str(exc)) from exc


@dataclass
class ExperimentReport:
    config: dict
    regime: str
    verdicts: list[st.TestVerdict]
    results: dict
    wall_clock: float
    provenance: dict
    records_path: str | None = None

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    @property
    def exit_code(self) -> int:
        return EXIT_OK if self.passed else EXIT_STAT_FAIL

    def to_dict(self) -> dict:
        return {"config": self.config, "regime": self.regime, "passed": self.passed,
                "verdicts": [v.to_dict() for v in self.verdicts], "results": self.results,
                "records_path": self.records_path, "wall_clock_s": self.wall_clock,
                "provenance": self.provenance}

    def to_json(self) -> str:
        return json.dumps(_jsonable(self.to_dict()), indent=2)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def regime_flag(cfg: ExperimentConfig) -> str:
    return cfg.level.regime(cfg.dim, DistributionSpec(cfg.dist).kind)


def _provenance(cfg: ExperimentConfig) -> dict:
    return {"version": __version__, "backend": _accel.BACKEND, "master_seed": cfg.seed,
            "rng": "counter-based splitmix64 hash of (seed, sample, n, x)"}


# --------------------------------------------------------------------------
# per-mode runners; each returns (verdicts, results, records)


def _run_pointprocess(cfg: ExperimentConfig, N: int, with_decor: bool = False):
    dist = DistributionSpec(cfg.dist)
    e = cfg.level.e_level(N)
    dn = ga.delta_n(cfg.dim, N, cfg.level)
    path_cap = cfg.caps()[0]
    lp.check_budget(f"paths (d={cfg.dim}, N={N})", (2 * cfg.dim) ** N, path_cap)
    recs = pp.run_samples(cfg.dim, N, dist, e, dn, cfg.b, cfg.samples, cfg.seed, g_max=cfg.gmax,
                          k_keep=cfg.k_keep, eps=cfg.eps if with_decor else None, b_decor=cfg.b_decor,
                          workers=cfg.workers)
    verdicts: list[st.TestVerdict] = []
    results: dict = {"n": N, "e_level": e, "delta_n": dn}
    if with_decor:
        viol = sum(1 for r in recs if r["violations"] > 0)
        v = st.frequency_check("decorrelation_frequency", viol, len(recs), cfg.decor_limit)
        v.details |= {"eps": cfg.eps, "b": cfg.b_decor,
                      "mean_qualifying": float(np.mean([r["qualifying"] for r in recs])),
                      "violating_pairs": int(sum(r["violations"] for r in recs)),
                      "max_cov": float(max(r["max_cov"] for r in recs))}
        verdicts.append(v)
        return verdicts, results | {"violation_frequency": v.statistic}, recs
    os_ = pp.order_stats(recs, cfg.b, cfg.k_keep, cfg.gmax)
    for b in cfg.b:
        counts = os_.counts_for(b)
        if cfg.check_mean:
            verdicts.append(_named(st.mean_count_check(counts, b, cfg.mean_factor), f"mean_count_b{b}"))
        verdicts.append(_named(st.poisson_gof(counts, b, cfg.gof_alpha), f"poisson_gof_b{b}"))
    for k in (1, 2):
        if k <= cfg.k_keep:
            verdicts.append(st.gamma_order_stat_test(os_.kth(k), k, cfg.ks_coeff, cfg.ks_factor))
    results["statistics"] = {v.name: v.statistic for v in verdicts}
    return verdicts, results, recs


def _named(v: st.TestVerdict, name: str) -> st.TestVerdict:
    v.name = name
    return v


def _run_zet(cfg: ExperimentConfig, N: int):
    b = cfg.zet_b if cfg.zet_b is not None else [1.0] * cfg.l
    w = ga.WindowSpec.for_level(b, cfg.dim, N, cfg.level)
    res = ga.zet_sum(cfg.dim, N, cfg.l, w, cfg.level, cfg.eta_class, cap=cfg.caps()[2])
    err = abs(res.sum - res.target)
    verdicts = [
        st.TestVerdict("zet_sum_error", err, cfg.zet_tolerance, err < cfg.zet_tolerance, res.tuples,
                       {"sum": res.sum, "target": res.target}),
        st.TestVerdict("zet_inside_share", res.inside_share, cfg.inside_share_min,
                       res.inside_share >= cfg.inside_share_min, res.tuples, {"eta_class": cfg.eta_class}),
    ]
    return verdicts, res.to_dict() | {"abs_error": err}, None


def _run_combinatorics(cfg: ExperimentConfig, N: int):
    pair_cap = cfg.caps()[1]
    pairs = lp.pair_coincidence_histogram(cfg.dim, N, cap=pair_cap)
    walks = lp.return_count_histogram(cfg.dim, 2 * N, cap=None if pair_cap is None else max(pair_cap, 1))
    same = pairs == walks
    ladder = list(range(1, N + 1))
    fracs = [lp.pair_tail_fraction(cfg.dim, m, m ** (0.5 + cfg.capacity_eta), cap=pair_cap) for m in ladder]
    verdicts = [
        st.TestVerdict("return_identity", 0.0 if same else 1.0, 0.0, same, sum(pairs.values()),
                       {"pairs": pairs, "walks": walks}),
        st.nonincreasing_trend("capacity_decay_trend", ladder, fracs),
        st.TestVerdict("capacity_fraction", fracs[-1] if fracs else 0.0, cfg.capacity_max,
                       (fracs[-1] if fracs else 0.0) < cfg.capacity_max, len(fracs)),
    ]
    return verdicts, {"n": N, "pair_histogram": pairs, "return_histogram": walks,
                      "capacity_fractions": dict(zip(ladder, fracs))}, None


def cf_tuples(d: int, N: int, count: int, eta_class: float, seed: int, l: int = 2) -> list[lp.PathTuple]:
    """Seeded random l-tuples of distinct paths inside the decorrelated class."""
    rng = np.random.default_rng([seed, d, N, l])
    total = (2 * d) ** N
    out: list[lp.PathTuple] = []
    tries = 0
    while len(out) < count and tries < 1000 * count:
        tries += 1
        ids = rng.choice(total, size=l, replace=False)
        t = lp.PathTuple.from_ids(d, N, ids.tolist())
        if ga.classify(covariance_matrix(t), d, eta_class).inside:
            out.append(t)
    return out


def cf_bounds_ladder(cfg: ExperimentConfig, ladder: list[int]):
    dist = DistributionSpec(cfg.dist)
    gauss = DistributionSpec("gaussian")
    per_n = {}
    gauss_gap = 0.0
    for N in ladder:
        tuples = cf_tuples(cfg.dim, N, cfg.cf_tuples, cfg.eta_class, cfg.seed, cfg.l)
        reps = [ga.berry_esseen_check(t, dist, eps=cfg.cf_eps, delta=cfg.cf_delta) for t in tuples]
        gauss_gap = max([gauss_gap] + [ga.berry_esseen_check(t, gauss).gaussian_gap for t in tuples])
        per_n[N] = {"c_hat": max(r.c_hat for r in reps), "zeta_min": min(r.zeta_hat for r in reps),
                    "max_abs_mid": max(r.max_abs_mid for r in reps), "tuples": len(tuples), "reports": reps,
                    "tuple_ids": [[p.path_id for p in t.paths] for t in tuples]}
    c_vals = [per_n[N]["c_hat"] for N in ladder]
    ratio = max(c_vals) / min(c_vals) if min(c_vals) > 0 else math.inf
    # one decay rate for the whole ladder, fitted with a safety factor on the coarse grid
    zeta = 0.5 * min(per_n[N]["zeta_min"] for N in ladder)
    worst = -math.inf
    for N in ladder:
        for t in cf_tuples(cfg.dim, N, cfg.cf_tuples, cfg.eta_class, cfg.seed, cfg.l):
            dirs = ga.direction_grid(t.l, count=256, seed=cfg.seed + N)
            rs = np.linspace(0.0, cfg.cf_delta * math.sqrt(N), 203)[1:-1]
            tg = (rs[:, None, None] * dirs[None, :, :]).reshape(-1, t.l)
            f = np.abs(ga.joint_char_fn(ga.pattern_matrix(t), dist, tg))
            r = np.linalg.norm(tg, axis=1)
            worst = max(worst, float(np.max(f / np.exp(-zeta * r**2))))
    verdicts = [
        st.TestVerdict("cf_c_hat_ratio", ratio, cfg.c_ratio_max, ratio < cfg.c_ratio_max, len(ladder),
                       {"c_hat": dict(zip(ladder, c_vals))}),
        st.TestVerdict("cf_decay_bound", worst, 1.0, zeta > 0 and worst < 1.0, len(ladder),
                       {"zeta_hat": zeta, "max_ratio_to_bound": worst}),
        st.TestVerdict("cf_gaussian_exact", gauss_gap, cfg.gaussian_cf_tol, gauss_gap <= cfg.gaussian_cf_tol,
                       len(ladder)),
    ]
    results = {"ladder": ladder, "zeta_hat": zeta,
               "per_n": {N: {k: v for k, v in per_n[N].items() if k != "reports"} for N in ladder}}
    return verdicts, results


# --------------------------------------------------------------------------


def run(cfg: ExperimentConfig) -> ExperimentReport:
    """Run one experiment at ``cfg.n`` (cf-bounds uses the whole ladder)."""
    cfg.validate()
    t0 = time.perf_counter()
    records = None
    if cfg.mode == "pointprocess":
        verdicts, results, records = _run_pointprocess(cfg, cfg.n)
    elif cfg.mode == "decorrelation":
        verdicts, results, records = _run_pointprocess(cfg, cfg.n, with_decor=True)
    elif cfg.mode == "zet":
        verdicts, results, _ = _run_zet(cfg, cfg.n)
    elif cfg.mode == "combinatorics":
        verdicts, results, _ = _run_combinatorics(cfg, cfg.n)
    else:
        verdicts, results = cf_bounds_ladder(cfg, cfg.ladder())
    report = ExperimentReport(config=cfg.to_dict(), regime=regime_flag(cfg), verdicts=verdicts,
                              results=results, wall_clock=time.perf_counter() - t0,
                              provenance=_provenance(cfg))
    _write_outputs(cfg, report, records)
    return report


TREND_KEYS = {
    "pointprocess": ["gamma_order_stat_k1"],
    "zet": ["abs_error"],
}


def sweep(cfg: ExperimentConfig) -> ExperimentReport:
    """Run every N of the ladder and add non-increasing trend verdicts."""
    if cfg.n_ladder is not None and len(cfg.n_ladder) == 0:
        raise ConfigError("empty N ladder")
    cfg.validate()
    t0 = time.perf_counter()
    ladder = cfg.ladder()
    rows, verdicts = [], []
    all_records = []
    if cfg.mode == "cf-bounds":
        verdicts, results = cf_bounds_ladder(cfg, ladder)
        rows = [{"n": N, **{k: v for k, v in results["per_n"][N].items() if k != "tuple_ids"}} for N in ladder]
    else:
        for N in ladder:
            sub = dataclasses.replace(cfg, n=N, n_ladder=None)
            if cfg.mode == "pointprocess":
                v, res, recs = _run_pointprocess(sub, N)
            elif cfg.mode == "decorrelation":
                v, res, recs = _run_pointprocess(sub, N, with_decor=True)
            elif cfg.mode == "zet":
                v, res, recs = _run_zet(sub, N)
            else:
                v, res, recs = _run_combinatorics(sub, N)
            for x in v:
                x.details["n"] = N
            verdicts += v
            row = {"n": N}
            row |= {x.name: x.statistic for x in v}
            if cfg.mode == "zet":
                row |= {"sum": res["sum"], "abs_error": res["abs_error"], "inside_share": res["inside_share"]}
            rows.append(row)
            if recs is not None:
                all_records += [dict(r, n=N) for r in recs]
        for key in TREND_KEYS.get(cfg.mode, []):
            verdicts.append(st.nonincreasing_trend(f"trend_{key}", ladder, [r[key] for r in rows]))
        results = {"ladder": ladder, "table": rows}
    report = ExperimentReport(config=cfg.to_dict(), regime=regime_flag(cfg), verdicts=verdicts,
                              results=results, wall_clock=time.perf_counter() - t0,
                              provenance=_provenance(cfg))
    _write_outputs(cfg, report, all_records or None, table=rows)
    return report


def table_to_csv(rows: list[dict]) -> str:
    keys: list[str] = []
    for r in rows:
        keys += [k for k in r if k not in keys]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _jsonable(v) for k, v in r.items()})
    return buf.getvalue()


def _write_outputs(cfg: ExperimentConfig, report: ExperimentReport, records, table=None) -> None:
    if cfg.out is None:
        return
    out = FsPath(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    if records is not None:
        path = out / "records.jsonl"
        path.write_text(pp.records_to_jsonl(records))
        report.records_path = str(path)
    if table is not None:
        (out / "trend.csv").write_text(table_to_csv(table))
    (out / "report.json").write_text(report.to_json())


def run_selftest(meta_trials: int = 200, seed: int = 12345, out: str | None = None) -> ExperimentReport:
    t0 = time.perf_counter()
    verdicts = st.selftest(meta_trials=meta_trials, seed=seed)
    cfg = {"mode": "selftest", "meta_trials": meta_trials, "seed": seed}
    report = ExperimentReport(config=cfg, regime="n/a", verdicts=verdicts, results={},
                              wall_clock=time.perf_counter() - t0,
                              provenance={"version": __version__, "backend": _accel.BACKEND, "master_seed": seed})
    if out is not None:
        FsPath(out).mkdir(parents=True, exist_ok=True)
        (FsPath(out) / "report.json").write_text(report.to_json())
    return report


__all__ = ["BudgetExceededError", "ConfigError", "DpremError", "EXIT_CONFIG", "EXIT_OK", "EXIT_STAT_FAIL",
           "ExperimentConfig", "ExperimentReport", "MODES", "run", "run_selftest", "sweep", "table_to_csv"]
