"""Monte-Carlo study of the screening methods on survival data.

Generates correlated Gaussian covariates in blocks, log-linear failure
times with logistic or normal errors, and exponential censoring calibrated
to a target censoring fraction. Each replication draws from counter-based
random streams keyed by the base seed, the replication index, and a
per-purpose stream id, so results are reproducible and independent of how
replications are scheduled across processes.

The experiment runner applies a set of screening methods to every
replication and summarizes minimum model sizes and false-positive curves;
optionally it also boosts the retained columns and scores the fits on an
independently generated test set.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .boost import eeboost, gcv_tune, ieescreen
from .data import CovariateMatrix, SurvivalSample, TrueModel
from .equations import ETA_CAP, ModelSpec, linear_predictor, screening_stats, zhu_omega_stats
from .errors import DataValidationError, NonBracketingError, ReplicationError
from .metrics import c_statistic, ipcw_auc, mse
from .screening import (
    default_model_size,
    fp_fn_curve,
    marginal_screen_tyear,
    minimum_model_size,
    retain_top_d,
)

STRUCTURES = ("partial_orthogonal", "compound_symmetric")
ERROR_DISTS = ("logistic", "normal")

#: Stream ids for the counter-based generators; pilot streams ignore the rep.
STREAM_COVARIATES = 1
STREAM_ERRORS = 2
STREAM_CENSORING = 3
STREAM_TEST_COVARIATES = 17
STREAM_TEST_ERRORS = 18
STREAM_TEST_CENSORING = 19
STREAM_PILOT = 33

#: Fraction of pilot failure times below the default horizon.
HORIZON_QUANTILE = 0.2

#: Calibration tolerance on the achieved censoring fraction.
CENSORING_TOL = 0.01

_MASK64 = (1 << 64) - 1

METHOD_KEYS = (
    "eescreen:aft",
    "eescreen:tyear",
    "eescreen:linear",
    "marginal_tyear",
    "zhu_omega",
    "modelfree",
    "ieescreen:aft",
    "ieescreen:tyear",
)

#: Methods whose retained set can be refit by the booster, with the model
#: used for the refit and the tuning criterion.
_BOOSTABLE = {
    "eescreen:aft": ("aft_gehan", "gehan_gcv"),
    "eescreen:tyear": ("t_year", "brier_gcv"),
}


@dataclass(frozen=True)
class ScenarioConfig:
    """Data-generating design for one simulation scenario."""

    n: int = 100
    p: int = 20000
    structure: str = "partial_orthogonal"
    rho: float = 0.9
    error_dist: str = "logistic"
    censoring_rate: float = 0.5
    base_seed: int = 20260825
    reps: int = 50
    boost_epsilon: float = 0.01
    boost_t_max: int = 1000
    pilot_size: int = 5000

    def __post_init__(self):
        if self.structure not in STRUCTURES:
            raise DataValidationError(f"structure must be one of {STRUCTURES}")
        if self.error_dist not in ERROR_DISTS:
            raise DataValidationError(f"error_dist must be one of {ERROR_DISTS}")
        if not 0.0 <= self.rho < 1.0:
            raise DataValidationError("rho must lie in [0, 1)")
        if not 0.0 <= self.censoring_rate < 1.0:
            raise DataValidationError("censoring_rate must lie in [0, 1)")
        if self.n < 2 or self.p < 1 or self.reps < 1 or self.pilot_size < 10:
            raise DataValidationError("scenario dimensions out of range")

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ScenarioConfig":
        payload = json.loads(text)
        if not isinstance(payload, dict):
            raise DataValidationError("scenario JSON must be an object")
        known = {f.name for f in cls.__dataclass_fields__.values()}
        extra = set(payload) - known
        if extra:
            raise DataValidationError(f"unknown scenario fields: {sorted(extra)}")
        return cls(**payload)


def default_true_model() -> TrueModel:
    """Twenty active coefficients: ten at +1.5 followed by ten at -0.8."""
    beta = {j: 1.5 for j in range(10)}
    beta.update({j: -0.8 for j in range(10, 20)})
    return TrueModel(beta)


def block_layout(p: int, structure: str) -> list:
    """Sizes of the independent equicorrelated covariate blocks.

    Compound-symmetric designs use one block. Block designs place the
    active coefficients in two small leading blocks; when p is a large
    multiple of 20 the remaining mass is split into near-equal blocks of
    p / 20 columns, otherwise everything else forms one block.
    """
    if structure == "compound_symmetric":
        return [p]
    if p % 20 == 0 and p >= 1800:
        b = p // 20
        return [10] * 9 + [b - 90] + [b] * 19
    if p < 21:
        raise DataValidationError("block designs need p > 20")
    return [10, 10, p - 20]


def _stream(base_seed: int, rep: int | None, stream_id: int) -> np.random.Generator:
    key0 = (base_seed ^ rep if rep is not None else base_seed) & _MASK64
    bits = np.random.Philox(key=np.array([key0, stream_id], dtype=np.uint64))
    return np.random.Generator(bits)


def _draw_blocks(rng: np.random.Generator, n: int, sizes, rho: float) -> np.ndarray:
    x = np.empty((n, int(np.sum(sizes))), order="F")
    at = 0
    for size in sizes:
        shared = rng.standard_normal(n)
        idio = rng.standard_normal((n, size))
        x[:, at : at + size] = np.sqrt(rho) * shared[:, None] + np.sqrt(1.0 - rho) * idio
        at += size
    return x


def gen_covariates(config: ScenarioConfig, rep: int, test: bool = False) -> CovariateMatrix:
    """Raw covariate draw for one replication (unstandardized)."""
    stream = STREAM_TEST_COVARIATES if test else STREAM_COVARIATES
    rng = _stream(config.base_seed, rep, stream)
    sizes = block_layout(config.p, config.structure)
    values = _draw_blocks(rng, config.n, sizes, config.rho)
    return CovariateMatrix.from_raw(values)


def _draw_errors(rng: np.random.Generator, dist: str, size: int) -> np.ndarray:
    if dist == "logistic":
        return rng.logistic(loc=-0.5, scale=1.0, size=size)
    return rng.standard_normal(size)


def gen_outcomes(
    config: ScenarioConfig,
    x: CovariateMatrix,
    truth: TrueModel,
    rep: int,
    censoring_scale: float,
    test: bool = False,
) -> SurvivalSample:
    """Failure and censoring draw given raw covariates and a censoring rate.

    Failure times are exp of the linear predictor plus noise; censoring is
    exponential with the precalibrated rate (0 disables censoring).
    """
    err_stream = STREAM_TEST_ERRORS if test else STREAM_ERRORS
    cen_stream = STREAM_TEST_CENSORING if test else STREAM_CENSORING
    eta = np.zeros(x.n)
    for j, b in truth.beta0.items():
        eta += b * x.values[:, j]
    noise = _draw_errors(_stream(config.base_seed, rep, err_stream), config.error_dist, x.n)
    t_true = np.exp(eta + noise)
    if censoring_scale <= 0.0:
        return SurvivalSample(t_true, np.ones(x.n), t_true=t_true)
    c = _stream(config.base_seed, rep, cen_stream).exponential(
        scale=1.0 / censoring_scale, size=x.n
    )
    y = np.minimum(t_true, c)
    delta = (t_true <= c).astype(np.int64)
    return SurvivalSample(y, delta, t_true=t_true)


def _pilot_failure_times(config: ScenarioConfig, truth: TrueModel) -> np.ndarray:
    """Failure times drawn from the replication-independent pilot streams.

    Only the blocks containing active coefficients are materialized; the
    inactive columns never influence failure times.
    """
    rng = _stream(config.base_seed, None, STREAM_PILOT)
    sizes = block_layout(config.p, config.structure)
    starts = np.concatenate(([0], np.cumsum(sizes)))
    m = config.pilot_size
    eta = np.zeros(m)
    for size, start in zip(sizes, starts[:-1]):
        members = [j for j in truth.beta0 if start <= j < start + size]
        if not members:
            continue
        shared = rng.standard_normal(m)
        for j in members:
            col = np.sqrt(config.rho) * shared + np.sqrt(1.0 - config.rho) * rng.standard_normal(m)
            eta += truth.beta0[j] * col
    noise = _draw_errors(rng, config.error_dist, m)
    return np.exp(eta + noise)


def calibrate_censoring(
    config: ScenarioConfig,
    truth: TrueModel | None = None,
    pilot_times: np.ndarray | None = None,
) -> float:
    """Exponential censoring rate hitting the target censoring fraction.

    The marginal censoring probability under rate lam is the average of
    1 - exp(-lam * T) over failure times T, here approximated on a pilot
    draw. The rate solving for the target is found by bisection and
    verified to land within the calibration tolerance.
    """
    target = config.censoring_rate
    if target == 0.0:
        return 0.0
    if pilot_times is None:
        truth = truth if truth is not None else default_true_model()
        pilot_times = _pilot_failure_times(config, truth)
    pilot_times = np.asarray(pilot_times, dtype=np.float64)
    if np.any(pilot_times <= 0):
        raise DataValidationError("pilot failure times must be positive")

    def frac(lam):
        return float(np.mean(-np.expm1(-lam * pilot_times)))

    lo, hi = 0.0, 1.0
    for _ in range(200):
        if frac(hi) >= target:
            break
        hi *= 2.0
    else:
        raise NonBracketingError(f"cannot reach censoring fraction {target}")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if frac(mid) < target:
            lo = mid
        else:
            hi = mid
    lam = 0.5 * (lo + hi)
    if abs(frac(lam) - target) > CENSORING_TOL:
        raise NonBracketingError(
            f"calibrated censoring fraction {frac(lam):.4f} misses target {target}"
        )
    return lam


@dataclass(frozen=True)
class ScenarioContext:
    """Scenario constants shared by every replication."""

    config: ScenarioConfig
    truth: TrueModel
    censoring_scale: float
    t0: float


def prepare(config: ScenarioConfig, truth: TrueModel | None = None) -> ScenarioContext:
    """Resolve the censoring rate and horizon from one pilot draw."""
    truth = truth if truth is not None else default_true_model()
    pilot = _pilot_failure_times(config, truth)
    lam = calibrate_censoring(config, truth, pilot_times=pilot)
    t0 = float(np.quantile(pilot, HORIZON_QUANTILE))
    return ScenarioContext(config, truth, lam, t0)


def _method_ranking(method: str, ctx: ScenarioContext, x: CovariateMatrix, s: SurvivalSample):
    """Run one method; returns (stats-or-None, sequence-or-None)."""
    cfg = ctx.config
    if method == "eescreen:aft":
        return screening_stats(ModelSpec("aft_gehan"), x, s).stats, None
    if method == "eescreen:tyear":
        return screening_stats(ModelSpec("t_year", t0=ctx.t0), x, s).stats, None
    if method == "eescreen:linear":
        return screening_stats(ModelSpec("linear"), x, np.log(s.y)).stats, None
    if method == "marginal_tyear":
        return marginal_screen_tyear(x, s, ctx.t0).stats, None
    if method == "zhu_omega":
        return zhu_omega_stats(x, s), None
    if method == "modelfree":
        return screening_stats(ModelSpec("model_free_si"), x, s).stats, None
    if method in ("ieescreen:aft", "ieescreen:tyear"):
        model = (
            ModelSpec("aft_gehan")
            if method.endswith("aft")
            else ModelSpec("t_year", t0=ctx.t0)
        )
        seq = ieescreen(model, x, s, epsilon=cfg.boost_epsilon, t_max=cfg.boost_t_max)
        return None, seq
    raise DataValidationError(f"unknown method {method!r}; choose from {METHOD_KEYS}")


def _submatrix(x: CovariateMatrix, columns: np.ndarray) -> CovariateMatrix:
    return CovariateMatrix(
        np.asfortranarray(x.values[:, columns]),
        col_means=x.col_means[columns],
        col_scales=x.col_scales[columns],
        standardized=x.standardized,
        check_standardized=False,
    )


def _fit_after_screen(method, ctx, x, s, stats, d):
    """Boost the top-d columns and score the fit on fresh test data."""
    kind, criterion = _BOOSTABLE[method]
    model = ModelSpec(kind, t0=ctx.t0 if kind == "t_year" else None)
    keep = retain_top_d(stats, d).retained
    sub = _submatrix(x, keep)
    path = eeboost(model, sub, s, epsilon=ctx.config.boost_epsilon, t_max=ctx.config.boost_t_max)
    tuned = gcv_tune(model, sub, s, path, criterion)
    beta_global = {int(keep[j]): b for j, b in tuned.coefficients.items()}
    return beta_global, tuned.t


def _score_fit(ctx, rep, beta_global):
    """MSE against the truth plus discrimination on an independent draw."""
    config = ctx.config
    x_test = gen_covariates(config, rep, test=True)
    s_test = gen_outcomes(config, x_test, ctx.truth, rep, ctx.censoring_scale, test=True)
    x_std = CovariateMatrix.from_design(x_test.values)
    eta = np.clip(linear_predictor(x_std, beta_global), -ETA_CAP, ETA_CAP)
    risk = -eta
    out = {"mse": mse(beta_global, ctx.truth)}
    try:
        out["auc"] = ipcw_auc(risk, s_test, ctx.t0)
    except Exception:
        out["auc"] = float("nan")
    try:
        out["cstat"] = c_statistic(risk, s_test)
    except Exception:
        out["cstat"] = float("nan")
    return out


def _replicate(ctx: ScenarioContext, rep: int, methods, d: int, fit_sizes) -> dict:
    config = ctx.config
    x_raw = gen_covariates(config, rep)
    s = gen_outcomes(config, x_raw, ctx.truth, rep, ctx.censoring_scale)
    # The simulated columns have population mean 0 and variance 1, matching
    # the design assumption the screening statistics are derived under, so
    # they are used as drawn rather than re-centered within each sample.
    x = CovariateMatrix.from_design(x_raw.values)
    record = {"rep": rep, "methods": {}, "fits": []}
    for method in methods:
        stats, seq = _method_ranking(method, ctx, x, s)
        if seq is None:
            mms = minimum_model_size(stats, ctx.truth)
            curve = fp_fn_curve(stats, ctx.truth)
        else:
            mms = seq.minimum_model_size(ctx.truth)
            curve = seq.fp_fn_curve(ctx.truth)
        record["methods"][method] = {
            "mms": int(mms),
            "fn": curve.fn_allowed.tolist(),
            "fp": curve.false_positives.tolist(),
            "sizes": curve.model_sizes.tolist(),
            "covered": bool(mms <= d),
        }
        if fit_sizes and method in _BOOSTABLE:
            for size in fit_sizes:
                beta_global, t_star = _fit_after_screen(method, ctx, x, s, stats, size)
                scores = _score_fit(ctx, rep, beta_global)
                record["fits"].append(
                    {"method": method, "d": int(size), "t": int(t_star), **scores}
                )
    return record


def _replicate_task(args):
    ctx, rep, methods, d, fit_sizes = args
    return _replicate(ctx, rep, methods, d, fit_sizes)


@dataclass(frozen=True)
class ExperimentResult:
    """Per-replication records plus scenario-level summaries."""

    context: ScenarioContext
    methods: tuple
    d: int
    records: list = field(repr=False, default_factory=list)

    def mms(self, method: str) -> np.ndarray:
        return np.array([r["methods"][method]["mms"] for r in self.records])

    def coverage(self, method: str) -> float:
        """Fraction of replications whose true support fit in the top d."""
        flags = [r["methods"][method]["covered"] for r in self.records]
        return float(np.mean(flags))

    def fp_at(self, method: str, fn: int) -> np.ndarray:
        values = []
        for r in self.records:
            entry = r["methods"][method]
            values.append(entry["fp"][entry["fn"].index(fn)])
        return np.array(values, dtype=np.float64)

    def aggregates(self) -> dict:
        out = {}
        for method in self.methods:
            sizes = self.mms(method)
            fn_levels = self.records[0]["methods"][method]["fn"]
            fp = np.array([r["methods"][method]["fp"] for r in self.records], dtype=np.float64)
            out[method] = {
                "mms_median": float(np.median(sizes)),
                "mms_q1": float(np.quantile(sizes, 0.25)),
                "mms_q3": float(np.quantile(sizes, 0.75)),
                "mms_mean": float(np.mean(sizes)),
                "coverage": self.coverage(method),
                "fn": fn_levels,
                "fp_mean": np.mean(fp, axis=0).tolist(),
                "fp_sd": np.std(fp, axis=0, ddof=1).tolist() if fp.shape[0] > 1 else None,
            }
        fits = [f for r in self.records for f in r["fits"]]
        if fits:
            fit_out = {}
            for f in fits:
                key = (f["method"], f["d"])
                fit_out.setdefault(key, []).append(f)
            out["fits"] = [
                {
                    "method": method,
                    "d": size,
                    "mse_mean": float(np.mean([f["mse"] for f in group])),
                    "auc_mean": float(np.nanmean([f["auc"] for f in group])),
                    "cstat_mean": float(np.nanmean([f["cstat"] for f in group])),
                }
                for (method, size), group in sorted(fit_out.items())
            ]
        return out

    def to_json_dict(self) -> dict:
        return {
            "config": asdict(self.context.config),
            "t0": self.context.t0,
            "censoring_scale": self.context.censoring_scale,
            "d": self.d,
            "methods": list(self.methods),
            "aggregates": self.aggregates(),
        }


def run_experiment(
    config: ScenarioConfig,
    methods,
    d: int | None = None,
    fit_sizes=None,
    processes: int | None = None,
    truth: TrueModel | None = None,
) -> ExperimentResult:
    """Apply screening methods to every replication of a scenario.

    Replications are independent and keyed by index, so running them across
    a process pool changes nothing but wall time. A replication that raises
    is wrapped in an error carrying its index.
    """
    methods = tuple(methods)
    if not methods:
        raise DataValidationError("need at least one method")
    for method in methods:
        if method not in METHOD_KEYS:
            raise DataValidationError(f"unknown method {method!r}; choose from {METHOD_KEYS}")
    ctx = prepare(config, truth)
    if d is None:
        d = default_model_size(config.n)
    reps = range(config.reps)
    records = [None] * config.reps
    if processes is not None and processes > 1:
        tasks = [(ctx, rep, methods, d, fit_sizes) for rep in reps]
        with ProcessPoolExecutor(max_workers=processes) as pool:
            futures = {rep: pool.submit(_replicate_task, tasks[rep]) for rep in reps}
            for rep in reps:
                try:
                    records[rep] = futures[rep].result()
                except Exception as exc:  # noqa: BLE001
                    raise ReplicationError(rep, exc) from exc
    else:
        for rep in reps:
            try:
                records[rep] = _replicate(ctx, rep, methods, d, fit_sizes)
            except Exception as exc:  # noqa: BLE001
                raise ReplicationError(rep, exc) from exc
    return ExperimentResult(ctx, methods, d, records)
