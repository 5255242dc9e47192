"""Statistics for two-alternative forced-choice response logs.

The pick-probability q gets a conjugate Beta treatment: a Beta(alpha, beta)
prior updated with success/failure counts, plus an equal-tailed credible
interval from the posterior.  Frequentist summaries (one-sample t against
chance, per-category breakdowns, a per-question trend line) mirror the
numbers a survey report would table.

The regularized incomplete beta function is evaluated in-package by
continued fraction so results are identical across platforms; scipy is only
ever used as an independent cross-check in the test suite.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DegenerateDataError, InvalidArgumentError, NoDataError

CSV_HEADER = [
    "session_id", "participant_id", "question_index", "stimulus_id", "category",
    "assignment", "response", "correct", "theta", "timestamp_utc",
]

CATEGORIES = ("music", "speech", "other")

_BETACF_MAX_ITER = 300
_BETACF_EPS = 1e-12
_BETACF_TINY = 1e-300
_INVCDF_MAX_ITER = 200  # bisection; interval shrinks to float resolution


# ---------------------------------------------------------------------------
# Beta-Bernoulli machinery
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BetaBelief:
    """Beta(alpha, beta) belief over a Bernoulli success probability."""

    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise InvalidArgumentError(
                f"Beta parameters must be positive, got ({self.alpha}, {self.beta})"
            )

    @property
    def mean(self) -> float:
        return self.alpha / (self.alpha + self.beta)


def posterior_update(prior: BetaBelief, successes: int, failures: int) -> BetaBelief:
    """Conjugate update: counts add directly onto the Beta parameters."""
    if successes < 0 or failures < 0:
        raise InvalidArgumentError("success/failure counts must be non-negative")
    return BetaBelief(prior.alpha + successes, prior.beta + failures)


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _BETACF_TINY:
        d = _BETACF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _BETACF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _BETACF_TINY:
            d = _BETACF_TINY
        c = 1.0 + aa / c
        if abs(c) < _BETACF_TINY:
            c = _BETACF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _BETACF_TINY:
            d = _BETACF_TINY
        c = 1.0 + aa / c
        if abs(c) < _BETACF_TINY:
            c = _BETACF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETACF_EPS:
            return h
    raise ArithmeticError(f"incomplete beta failed to converge for a={a}, b={b}, x={x}")


def beta_cdf(x: float, a: float, b: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if a <= 0 or b <= 0:
        raise InvalidArgumentError("shape parameters must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def beta_ppf(p: float, a: float, b: float) -> float:
    """Quantile of Beta(a, b) by bisection on the CDF."""
    if not 0.0 <= p <= 1.0:
        raise InvalidArgumentError(f"probability must lie in [0, 1], got {p}")
    if p == 0.0:
        return 0.0
    if p == 1.0:
        return 1.0
    lo, hi = 0.0, 1.0
    # bisect down to float resolution; quantiles near 0 or 1 sit on very
    # steep CDF sections, so an absolute-width cut would lose accuracy there
    for _ in range(_INVCDF_MAX_ITER):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if beta_cdf(mid, a, b) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def beta_pdf(x: np.ndarray, a: float, b: float) -> np.ndarray:
    """Beta density, evaluated in log space for large shape parameters."""
    x = np.asarray(x, dtype=np.float64)
    log_norm = math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
    out = np.zeros_like(x)
    interior = (x > 0) & (x < 1)
    xi = x[interior]
    out[interior] = np.exp(log_norm + (a - 1) * np.log(xi) + (b - 1) * np.log1p(-xi))
    return out


def credible_interval(belief: BetaBelief, mass: float = 0.95) -> tuple[float, float]:
    """Equal-tailed interval holding the requested posterior mass."""
    if not 0.0 < mass < 1.0:
        raise InvalidArgumentError(f"interval mass must lie in (0, 1), got {mass}")
    tail = (1.0 - mass) / 2.0
    return (
        beta_ppf(tail, belief.alpha, belief.beta),
        beta_ppf(1.0 - tail, belief.alpha, belief.beta),
    )


# ---------------------------------------------------------------------------
# Frequentist summaries
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SummaryStats:
    """Location/scale plus one-sample t against a reference level.

    median is None when only aggregates were available; t/p are None when
    the data are degenerate (constant or a single observation).
    """

    mean: float
    sd: float
    n: int
    median: float | None = None
    t_statistic: float | None = None
    p_value: float | None = None

    def as_dict(self) -> dict:
        return {
            "mean": self.mean,
            "median": self.median,
            "sd": self.sd,
            "n": self.n,
            "t_statistic": self.t_statistic,
            "p_value": self.p_value,
        }


def student_t_sf2(t: float, df: int) -> float:
    """Two-sided tail probability of Student's t with df degrees of freedom."""
    if df < 1:
        raise InvalidArgumentError("degrees of freedom must be at least 1")
    x = df / (df + t * t)
    return beta_cdf(x, df / 2.0, 0.5)


def one_sample_t_from_stats(mean: float, sd: float, n: int, mu0: float = 0.5) -> SummaryStats:
    """t-test entry point for published aggregates (mean, sd, n)."""
    if n < 2:
        raise DegenerateDataError(f"one-sample t needs n >= 2, got {n}")
    if sd <= 0:
        raise DegenerateDataError("one-sample t needs positive spread")
    t = (mean - mu0) / (sd / math.sqrt(n))
    return SummaryStats(
        mean=mean, sd=sd, n=n, median=None,
        t_statistic=t, p_value=student_t_sf2(t, n - 1),
    )


def one_sample_t(values, mu0: float = 0.5) -> SummaryStats:
    """Two-sided one-sample t-test with sample (n-1) standard deviation."""
    data = np.asarray(list(values), dtype=np.float64)
    if data.size < 2:
        raise DegenerateDataError(f"one-sample t needs n >= 2, got {data.size}")
    if not np.all(np.isfinite(data)):
        raise InvalidArgumentError("t-test input contains NaN or Inf")
    if np.ptp(data) == 0.0:
        raise DegenerateDataError("one-sample t is undefined for constant data")
    sd = float(np.std(data, ddof=1))
    stats = one_sample_t_from_stats(float(np.mean(data)), sd, int(data.size), mu0)
    return SummaryStats(
        mean=stats.mean, sd=stats.sd, n=stats.n, median=float(np.median(data)),
        t_statistic=stats.t_statistic, p_value=stats.p_value,
    )


# ---------------------------------------------------------------------------
# Response logs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ResponseRow:
    session_id: str
    participant_id: str
    question_index: int
    stimulus_id: str
    category: str
    assignment: str
    response: str
    correct: bool
    theta: float
    timestamp_utc: str


def _parse_bool(raw: str) -> bool:
    token = raw.strip().lower()
    if token in ("true", "1", "yes"):
        return True
    if token in ("false", "0", "no"):
        return False
    raise InvalidArgumentError(f"cannot parse boolean field {raw!r}")


@dataclass(frozen=True)
class ResponseSet:
    """Parsed trial rows plus the derived per-participant/question views."""

    rows: tuple[ResponseRow, ...] = field(repr=False)

    @classmethod
    def from_csv(cls, path: str | Path) -> "ResponseSet":
        with Path(path).open(newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != CSV_HEADER:
                raise InvalidArgumentError(
                    f"{path}: header must be {','.join(CSV_HEADER)}"
                )
            rows = []
            for raw in reader:
                rows.append(ResponseRow(
                    session_id=raw["session_id"],
                    participant_id=raw["participant_id"],
                    question_index=int(raw["question_index"]),
                    stimulus_id=raw["stimulus_id"],
                    category=raw["category"],
                    assignment=raw["assignment"],
                    response=raw["response"],
                    correct=_parse_bool(raw["correct"]),
                    theta=float(raw["theta"]),
                    timestamp_utc=raw["timestamp_utc"],
                ))
        return cls(tuple(rows))

    def filtered(
        self,
        exclude_participants: tuple[str, ...] = (),
        require_n_trials: int | None = None,
    ) -> "ResponseSet":
        """Drop excluded participants and, optionally, incomplete ones."""
        excluded = set(exclude_participants)
        by_participant: dict[str, int] = {}
        for row in self.rows:
            by_participant[row.participant_id] = by_participant.get(row.participant_id, 0) + 1
        kept = []
        for row in self.rows:
            if row.participant_id in excluded:
                continue
            if require_n_trials is not None and by_participant[row.participant_id] < require_n_trials:
                continue
            kept.append(row)
        return ResponseSet(tuple(kept))

    @property
    def n_trials(self) -> int:
        return len(self.rows)

    @property
    def successes(self) -> int:
        return sum(1 for r in self.rows if r.correct)

    @property
    def failures(self) -> int:
        return self.n_trials - self.successes

    def participants(self) -> list[str]:
        return sorted({r.participant_id for r in self.rows})

    def per_participant_accuracy(self, category: str | None = None) -> dict[str, float]:
        counts: dict[str, list[int]] = {}
        for row in self.rows:
            if category is not None and row.category != category:
                continue
            hit = counts.setdefault(row.participant_id, [0, 0])
            hit[0] += int(row.correct)
            hit[1] += 1
        return {p: hits / total for p, (hits, total) in sorted(counts.items())}

    def per_question_means(self) -> list[tuple[int, float]]:
        counts: dict[int, list[int]] = {}
        for row in self.rows:
            hit = counts.setdefault(row.question_index, [0, 0])
            hit[0] += int(row.correct)
            hit[1] += 1
        return [(k, hits / total) for k, (hits, total) in sorted(counts.items())]


def category_summary(responses: ResponseSet, category: str | None = None) -> SummaryStats:
    """Stats over per-participant accuracies (all categories when None)."""
    accuracies = list(responses.per_participant_accuracy(category).values())
    if not accuracies:
        raise NoDataError(f"no trials in category {category!r}")
    try:
        return one_sample_t(accuracies, mu0=0.5)
    except DegenerateDataError:
        data = np.asarray(accuracies)
        return SummaryStats(
            mean=float(np.mean(data)),
            sd=float(np.std(data, ddof=1)) if data.size > 1 else 0.0,
            n=int(data.size),
            median=float(np.median(data)),
        )


def question_trend(responses: ResponseSet) -> tuple[float, float]:
    """Least-squares line through per-question mean scores vs 1-based index."""
    means = responses.per_question_means()
    if len(means) < 2:
        raise NoDataError("trend needs at least two distinct question indices")
    k = np.asarray([m[0] for m in means], dtype=np.float64)
    y = np.asarray([m[1] for m in means], dtype=np.float64)
    k_centered = k - k.mean()
    slope = float(np.dot(k_centered, y - y.mean()) / np.dot(k_centered, k_centered))
    intercept = float(y.mean() - slope * k.mean())
    return slope, intercept


# ---------------------------------------------------------------------------
# Report assembly
# ---------------------------------------------------------------------------

def summarize(
    responses: ResponseSet,
    prior: BetaBelief | None = None,
    interval_mass: float = 0.95,
) -> dict:
    """Machine-readable summary of one experiment's response log."""
    if responses.n_trials == 0:
        raise NoDataError("response set is empty")
    prior = prior or BetaBelief(1.0, 1.0)
    posterior = posterior_update(prior, responses.successes, responses.failures)
    lo, hi = credible_interval(posterior, interval_mass)

    categories = {}
    for cat in CATEGORIES:
        try:
            categories[cat] = category_summary(responses, cat).as_dict()
        except NoDataError:
            continue

    try:
        slope, intercept = question_trend(responses)
        trend = {"slope": slope, "intercept": intercept}
    except NoDataError:
        trend = None

    return {
        "n_trials": responses.n_trials,
        "n_participants": len(responses.participants()),
        "successes": responses.successes,
        "failures": responses.failures,
        "posterior": {"alpha": posterior.alpha, "beta": posterior.beta},
        "credible_interval": {"mass": interval_mass, "lo": lo, "hi": hi},
        "overall": category_summary(responses, None).as_dict(),
        "categories": categories,
        "question_trend": trend,
    }


def plot_data(responses: ResponseSet, grid_points: int = 512) -> dict:
    """Raw curves for external plotting: posterior density and question means."""
    posterior = posterior_update(
        BetaBelief(1.0, 1.0), responses.successes, responses.failures
    )
    q = np.linspace(0.0, 1.0, grid_points)
    pdf = beta_pdf(q, posterior.alpha, posterior.beta)
    per_category = {
        cat: list(responses.per_participant_accuracy(cat).values())
        for cat in CATEGORIES
        if responses.per_participant_accuracy(cat)
    }
    return {
        "posterior_density": {"q": q.tolist(), "pdf": pdf.tolist()},
        "per_question_means": [
            {"question_index": k, "mean": m} for k, m in responses.per_question_means()
        ],
        "per_participant_accuracy": responses.per_participant_accuracy(None),
        "per_category_accuracy": per_category,
    }
