"""Deterministic Monte Carlo engine for empirical false-alarm/detection rates.

Every trial draws from its own counter-based random stream derived purely
from (master_seed, hypothesis, trial index), so a trial's statistic never
depends on execution order or on how trials are split across workers.
Results are bit-identical serial and parallel.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from multiprocessing import get_context

import numpy as np

from . import analytic, detector, signal
from .analytic import TheoryMode
from .curves import RocCurve, RocSource
from .model import DetectorDirection, Hypothesis, ModelParams, validate

#: Stream derivation contract, recorded in every manifest.  Philox4x64-10
#: keyed by the master seed (via SeedSequence expansion to 128 bits); the
#: 256-bit counter holds the trial index in word 2 and the hypothesis tag
#: in word 3.  Philox increments only the block counter in word 0 while
#: generating, so distinct (trial, hypothesis) streams can never overlap.
#: Each trial consumes draws signal-first, then noise row-major.
RNG_SCHEME = (
    "philox4x64-10; key=seedseq(master_seed).state[2]; "
    "counter=[0, 0, trial_index, hypothesis]; draws=signal,noise-rows"
)

#: Environment variable overriding the worker count (default: serial).
WORKERS_ENV = "BITSENSE_WORKERS"

ARTIFACT_VERSION = "0.1.0"


@dataclass(frozen=True)
class RunConfig:
    """One Monte Carlo experiment: model, trial count, seed, thresholds."""

    params: ModelParams
    master_seed: int
    trials: int = 20000
    thresholds: np.ndarray | None = None
    theory_mode: TheoryMode = TheoryMode.CONSISTENT

    def __post_init__(self):
        if self.thresholds is None:
            object.__setattr__(self, "thresholds", detector.sweep_thresholds(self.params))
        else:
            object.__setattr__(
                self, "thresholds", np.asarray(self.thresholds, dtype=float)
            )

    def violations(self) -> list[str]:
        problems = list(validate(self.params).violations)
        if not isinstance(self.trials, int) or self.trials < 1:
            problems.append(f"trials must be an integer >= 1, got {self.trials!r}")
        if len(self.thresholds) == 0:
            problems.append("thresholds must be non-empty")
        elif len(self.thresholds) >= 2 and not np.all(np.diff(self.thresholds) > 0):
            problems.append("thresholds must be strictly increasing")
        if not isinstance(self.master_seed, int) or not 0 <= self.master_seed < 2**64:
            problems.append(f"master_seed must fit in 64 bits, got {self.master_seed!r}")
        return problems

    def require_valid(self) -> None:
        problems = self.violations()
        if problems:
            raise ValueError("invalid run config: " + "; ".join(problems))

    @property
    def direction(self) -> DetectorDirection:
        """Test direction; r = 0 falls back to the upward convention.

        The degenerate r = 0 model has no informative direction (the ROC
        sits on the diagonal either way) but must still be simulatable.
        """
        if self.params.r < 0:
            return DetectorDirection.LESS_IS_H1
        return DetectorDirection.GREATER_IS_H1


def _philox_key(master_seed: int) -> np.ndarray:
    return np.random.SeedSequence(master_seed).generate_state(2, np.uint64)


def seed_for_trial(
    master_seed: int, hypothesis: Hypothesis, trial_index: int
) -> np.random.Generator:
    """Independent random stream for one trial (see RNG_SCHEME).

    The mapping is pure and injective over (hypothesis, trial_index), so
    trial t produces identical draws no matter when or where it runs.
    """
    counter = np.array([0, 0, trial_index, hypothesis.value], dtype=np.uint64)
    bitgen = np.random.Philox(counter=counter, key=_philox_key(master_seed))
    return np.random.Generator(bitgen)


def _run_trials(
    params: ModelParams,
    key: np.ndarray,
    hypothesis: Hypothesis,
    start: int,
    stop: int,
) -> np.ndarray:
    """Statistics for trials [start, stop), each on its own stream."""
    factor = signal.factor_covariance(params) if hypothesis is Hypothesis.H1 else None
    out = np.empty(stop - start, dtype=np.int64)
    hyp_tag = hypothesis.value
    for t in range(start, stop):
        counter = np.array([0, 0, t, hyp_tag], dtype=np.uint64)
        rng = np.random.Generator(np.random.Philox(counter=counter, key=key))
        bits = signal.observe(params, hypothesis, rng, factor=factor)
        out[t - start] = detector.statistic(bits)
    return out


def _run_trials_star(args) -> np.ndarray:
    params, key, hyp_tag, start, stop = args
    return _run_trials(params, key, Hypothesis(hyp_tag), start, stop)


def _resolve_workers(workers: int | None) -> int:
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1"))
    return max(1, workers)


def simulate_statistics(
    config: RunConfig, hypothesis: Hypothesis, workers: int | None = None
) -> np.ndarray:
    """Per-trial detection statistics, ordered by trial index.

    ``workers`` defaults to the BITSENSE_WORKERS environment variable
    (serial if unset).  The result is identical for any worker count:
    chunks are pure functions of the trial range and are reassembled in
    order.
    """
    config.require_valid()
    workers = _resolve_workers(workers)
    key = _philox_key(config.master_seed)
    if workers == 1 or config.trials < 2 * workers:
        return _run_trials(config.params, key, hypothesis, 0, config.trials)
    bounds = np.linspace(0, config.trials, workers + 1, dtype=int)
    tasks = [
        (config.params, key, hypothesis.value, int(a), int(b))
        for a, b in zip(bounds[:-1], bounds[1:])
    ]
    with get_context("fork").Pool(workers) as pool:
        chunks = pool.map(_run_trials_star, tasks)
    return np.concatenate(chunks)


def _tail_rates(
    sorted_stats: np.ndarray, thresholds: np.ndarray, direction: DetectorDirection
) -> np.ndarray:
    """Fraction of trials the detector fires at, per threshold.

    One sorted pass serves every threshold: firing counts are tail counts
    read off with searchsorted, which also makes the curve exactly
    monotone in the threshold.
    """
    trials = len(sorted_stats)
    if direction is DetectorDirection.GREATER_IS_H1:
        fired = trials - np.searchsorted(sorted_stats, thresholds, side="left")
    else:
        fired = np.searchsorted(sorted_stats, thresholds, side="right")
    return fired / trials


def estimate_rates(config: RunConfig, workers: int | None = None) -> RocCurve:
    """Empirical ROC from `trials` H0 trials and `trials` H1 trials.

    Both hypotheses are always simulated in one run so pfa and pd at each
    threshold come from the same config.
    """
    y0 = np.sort(simulate_statistics(config, Hypothesis.H0, workers))
    y1 = np.sort(simulate_statistics(config, Hypothesis.H1, workers))
    pfa = _tail_rates(y0, config.thresholds, config.direction)
    pd = _tail_rates(y1, config.thresholds, config.direction)
    return RocCurve(
        eta=config.thresholds,
        pfa=pfa,
        pd=pd,
        source=RocSource.EMPIRICAL,
        trials_used=config.trials,
    )


def exact_h0_rates(config: RunConfig) -> np.ndarray:
    """Exact binomial firing probability under H0 at every threshold."""
    out = np.empty(len(config.thresholds))
    for j, eta in enumerate(config.thresholds):
        if config.direction is DetectorDirection.GREATER_IS_H1:
            out[j] = analytic.exact_h0_tail(config.params, math.ceil(eta))
        else:
            out[j] = 1.0 - analytic.exact_h0_tail(config.params, math.floor(eta) + 1)
    return out


def exact_hybrid_curve(config: RunConfig, empirical: RocCurve) -> RocCurve:
    """Exact H0 tail paired with the empirical detection rate."""
    return RocCurve(
        eta=config.thresholds,
        pfa=exact_h0_rates(config),
        pd=empirical.pd,
        source=RocSource.EXACT_H0_HYBRID,
        trials_used=empirical.trials_used,
    )


H1_VARIANCE_OK = "ok"
H1_VARIANCE_NEGATIVE = "negative-variance"
H1_VARIANCE_ZERO = "zero-variance"


@dataclass(frozen=True)
class ComparisonRow:
    """One threshold's empirical, Gaussian-theory, and exact-oracle rates.

    ``pd_theory`` is None when the configured mode's H1 variance is
    negative; ``h1_flag`` states why.  The ``dev_*`` fields are the
    per-cell absolute deviations.
    """

    eta: float
    pfa_emp: float
    pfa_theory: float
    pfa_exact: float
    pd_emp: float
    pd_theory: float | None
    h1_flag: str = H1_VARIANCE_OK

    @property
    def dev_pfa_emp_exact(self) -> float:
        return abs(self.pfa_emp - self.pfa_exact)

    @property
    def dev_pfa_theory_exact(self) -> float:
        return abs(self.pfa_theory - self.pfa_exact)

    @property
    def dev_pd_emp_theory(self) -> float | None:
        if self.pd_theory is None:
            return None
        return abs(self.pd_emp - self.pd_theory)


@dataclass(frozen=True)
class TheoryComparison:
    config: RunConfig
    agreement_p: float
    rows: tuple[ComparisonRow, ...]


def compare_theory(
    config: RunConfig,
    empirical: RocCurve | None = None,
    workers: int | None = None,
) -> TheoryComparison:
    """Join empirical rates, Gaussian theory, and exact H0 tails per threshold.

    The H0 theory column is mode-independent.  For the H1 column the
    configured theory mode applies; a negative paper-literal variance is
    surfaced as a per-row flag rather than an exception so the rest of
    the table stays usable.
    """
    config.require_valid()
    if empirical is None:
        empirical = estimate_rates(config, workers)
    m0 = analytic.moments(config.params, Hypothesis.H0, config.theory_mode)
    m1 = analytic.moments(config.params, Hypothesis.H1, config.theory_mode)
    exact = exact_h0_rates(config)
    direction = config.direction

    rows = []
    for j, eta in enumerate(config.thresholds):
        pfa_theory = analytic.gaussian_tail(eta, m0.mean, m0.variance, direction)
        if m1.variance < 0:
            pd_theory, flag = None, H1_VARIANCE_NEGATIVE
        else:
            pd_theory = analytic.gaussian_tail(eta, m1.mean, m1.variance, direction)
            flag = H1_VARIANCE_ZERO if m1.variance == 0 else H1_VARIANCE_OK
        rows.append(
            ComparisonRow(
                eta=float(eta),
                pfa_emp=float(empirical.pfa[j]),
                pfa_theory=pfa_theory,
                pfa_exact=float(exact[j]),
                pd_emp=float(empirical.pd[j]),
                pd_theory=pd_theory,
                h1_flag=flag,
            )
        )
    p = analytic.agreement_prob(config.params).p
    return TheoryComparison(config=config, agreement_p=p, rows=tuple(rows))


@dataclass(frozen=True)
class RunManifest:
    """Everything needed to replay a run bit-exactly, plus audit context."""

    artifact_version: str
    rng_scheme: str
    noise_interpretation: str
    configs: tuple[dict, ...]
    per_hypothesis_trials: dict
    wall_clock_s: float
    outputs: tuple[dict, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "artifact_version": self.artifact_version,
            "rng_scheme": self.rng_scheme,
            "noise_interpretation": self.noise_interpretation,
            "configs": list(self.configs),
            "per_hypothesis_trials": dict(self.per_hypothesis_trials),
            "wall_clock_s": self.wall_clock_s,
            "outputs": list(self.outputs),
        }


def config_to_dict(config: RunConfig, label: str | None = None) -> dict:
    """Flat echo of a RunConfig, sufficient for bit-exact replay."""
    d = {
        "n": config.params.n,
        "num_sensors": config.params.num_sensors,
        "sigma_s2": config.params.sigma_s2,
        "r": config.params.r,
        "noise_std": config.params.noise_std,
        "sigma2": config.params.sigma2,
        "trials": config.trials,
        "master_seed": config.master_seed,
        "theory_mode": config.theory_mode.value,
        "thresholds": config.thresholds.tolist(),
    }
    if label is not None:
        d["label"] = label
    return d
