"""Rank-based comparison of methods across datasets.

The omnibus test is the aligned-rank variant of the Friedman test: values
are centered per dataset (row), all k*n aligned values are ranked jointly
with average ranks for ties, and the statistic

    T = (k-1) * [ sum_j Rj^2 - (k n^2 / 4) (k n + 1)^2 ]
        / [ k n (k n + 1) (2 k n + 1) / 6 - (1/k) sum_i Ri^2 ]

(Rj = column rank sums, Ri = row rank sums) is referred to a chi-squared
distribution with k-1 degrees of freedom. Pairwise follow-ups compare mean
aligned ranks with standard error sqrt(k (k n + 1) / 6) against the normal
tail, two-sided.

Tail probabilities are computed here from first principles (regularized
incomplete gamma; complementary error function), so there is no runtime
dependency on a statistics library.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateMatrix, DimensionMismatch, InvalidHyperparameter, UnknownMethod

# --- tail probabilities ---


def _gamma_p_series(a, x):
    ap = a
    term = 1.0 / a
    total = term
    for _ in range(1000):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * 1e-17:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_q_cf(a, x):
    # modified Lentz continued fraction
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b if b != 0.0 else 1.0 / tiny
    h = d
    for i in range(1, 1000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-17:
            break
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def regularized_gamma_q(a, x):
    """Upper regularized incomplete gamma Q(a, x) = Gamma(a, x) / Gamma(a)."""
    if a <= 0.0:
        raise InvalidHyperparameter(f"shape must be positive, got {a}")
    if x < 0.0:
        raise InvalidHyperparameter(f"x must be non-negative, got {x}")
    if x == 0.0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _gamma_p_series(a, x)
    return _gamma_q_cf(a, x)


def chi2_sf(x, df):
    """Chi-squared survival function P(X >= x) with df degrees of freedom."""
    if df < 1:
        raise InvalidHyperparameter(f"df must be >= 1, got {df}")
    if x <= 0.0:
        return 1.0
    return regularized_gamma_q(df / 2.0, x / 2.0)


def normal_sf(z):
    """Standard normal survival function P(Z >= z)."""
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def stars(p_value):
    """Significance markers: *** at 0.01, ** at 0.05, * at 0.10."""
    if not 0.0 <= p_value <= 1.0:
        raise InvalidHyperparameter(f"p-value must be in [0, 1], got {p_value}")
    if p_value <= 0.01:
        return "***"
    if p_value <= 0.05:
        return "**"
    if p_value <= 0.10:
        return "*"
    return ""


# --- ranking ---


def _rank_average(values):
    """1-based ranks of a vector, ties sharing their average rank."""
    v = np.asarray(values, dtype=np.float64).ravel()
    order = np.argsort(v, kind="stable")
    ranks = np.empty(v.shape[0])
    i = 0
    n = v.shape[0]
    while i < n:
        j = i
        while j + 1 < n and v[order[j + 1]] == v[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


@dataclass(frozen=True)
class ResultMatrix:
    """Metric values for methods (columns) across datasets (rows)."""

    values: np.ndarray
    dataset_names: tuple
    method_names: tuple
    lower_is_better: bool = True

    def __post_init__(self):
        V = np.array(self.values, dtype=np.float64)
        if V.ndim != 2:
            raise DimensionMismatch(f"values must be 2-D, got {V.ndim}-D")
        ds = tuple(str(s) for s in self.dataset_names)
        ms = tuple(str(s) for s in self.method_names)
        if V.shape != (len(ds), len(ms)):
            raise DimensionMismatch(
                f"values shape {V.shape} does not match {len(ds)} datasets "
                f"x {len(ms)} methods"
            )
        if len(set(ms)) != len(ms) or len(set(ds)) != len(ds):
            raise DimensionMismatch("dataset and method names must be unique")
        if V.size == 0:
            raise DegenerateMatrix("result matrix is empty")
        if not np.isfinite(V).all():
            raise DegenerateMatrix("result matrix must be finite")
        V.setflags(write=False)
        object.__setattr__(self, "values", V)
        object.__setattr__(self, "dataset_names", ds)
        object.__setattr__(self, "method_names", ms)

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def k(self):
        return self.values.shape[1]

    def column(self, method):
        if method not in self.method_names:
            raise UnknownMethod(f"unknown method {method!r}")
        return self.values[:, self.method_names.index(method)]


@dataclass(frozen=True)
class RankMatrix:
    """Per-dataset ranks (1 = best) and each method's average rank."""

    ranks: np.ndarray
    dataset_names: tuple
    method_names: tuple
    average_ranks: np.ndarray

    def __post_init__(self):
        R = np.array(self.ranks, dtype=np.float64)
        A = np.array(self.average_ranks, dtype=np.float64)
        R.setflags(write=False)
        A.setflags(write=False)
        object.__setattr__(self, "ranks", R)
        object.__setattr__(self, "average_ranks", A)


def rank_rows(matrix):
    """Rank methods within each dataset, best = 1, ties averaged."""
    keyed = matrix.values if matrix.lower_is_better else -matrix.values
    ranks = np.vstack([_rank_average(row) for row in keyed])
    return RankMatrix(
        ranks=ranks,
        dataset_names=matrix.dataset_names,
        method_names=matrix.method_names,
        average_ranks=ranks.mean(axis=0),
    )


def win_lose_tie(matrix, method_a, method_b):
    """Count datasets where method_a beats, loses to, or ties method_b."""
    a = matrix.column(method_a)
    b = matrix.column(method_b)
    if matrix.lower_is_better:
        wins = int(np.sum(a < b))
        losses = int(np.sum(a > b))
    else:
        wins = int(np.sum(a > b))
        losses = int(np.sum(a < b))
    return wins, losses, int(np.sum(a == b))


# --- aligned-rank omnibus and pairwise follow-up ---


@dataclass(frozen=True)
class PairComparison:
    method_a: str
    method_b: str
    wins: int
    losses: int
    ties: int
    z: float
    p_value: float
    stars: str


@dataclass(frozen=True)
class SignificanceReport:
    """Omnibus statistic plus optional pairwise comparisons."""

    method_names: tuple
    statistic: float
    p_value: float
    mean_aligned_ranks: tuple
    pairs: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if not 0.0 <= self.p_value <= 1.0:
            raise InvalidHyperparameter(f"p-value out of range: {self.p_value}")

    def pair(self, method_a, method_b):
        """Look up one comparison, flipping it if stored the other way."""
        for p in self.pairs:
            if (p.method_a, p.method_b) == (method_a, method_b):
                return p
            if (p.method_a, p.method_b) == (method_b, method_a):
                return PairComparison(
                    method_a, method_b, p.losses, p.wins, p.ties,
                    -p.z, p.p_value, p.stars,
                )
        raise UnknownMethod(f"no comparison for ({method_a!r}, {method_b!r})")


def _aligned_ranks(matrix):
    V = matrix.values
    n, k = V.shape
    if n < 2 or k < 2:
        raise DegenerateMatrix(
            f"need at least 2 datasets and 2 methods, got {n} x {k}"
        )
    if np.all(V == V.flat[0]):
        raise DegenerateMatrix("all values are identical")
    # exact row means (fsum) so values that are tied in real arithmetic
    # stay tied after alignment; a 1-ulp mean error would split them
    means = np.array([math.fsum(row) / k for row in V])
    aligned = V - means[:, None]
    return _rank_average(aligned.ravel()).reshape(n, k)


def friedman_aligned(matrix):
    """Aligned-rank omnibus test over a ResultMatrix.

    Identical columns (methods agreeing everywhere) give statistic 0 and
    p-value 1; a fully constant matrix carries no information at all and
    raises DegenerateMatrix.
    """
    ranks = _aligned_ranks(matrix)
    n, k = ranks.shape
    col_sums = ranks.sum(axis=0)
    row_sums = ranks.sum(axis=1)
    kn = k * n
    num = (k - 1) * (float(col_sums @ col_sums) - (k * n * n / 4.0) * (kn + 1) ** 2)
    den = kn * (kn + 1) * (2 * kn + 1) / 6.0 - float(row_sums @ row_sums) / k
    if den <= 0.0:
        raise DegenerateMatrix("rank variance collapsed, statistic undefined")
    statistic = num / den
    if abs(statistic) < 1e-12:
        statistic = 0.0
    return SignificanceReport(
        method_names=matrix.method_names,
        statistic=statistic,
        p_value=chi2_sf(statistic, k - 1),
        mean_aligned_ranks=tuple(float(s) / n for s in col_sums),
    )


def posthoc_pairwise(matrix):
    """Omnibus test plus all pairwise mean-aligned-rank comparisons.

    Each pair gets a two-sided normal p-value, significance stars, and the
    raw win/lose/tie counts from the underlying values.
    """
    omnibus = friedman_aligned(matrix)
    n, k = matrix.values.shape
    se = math.sqrt(k * (k * n + 1) / 6.0)
    means = omnibus.mean_aligned_ranks
    pairs = []
    names = matrix.method_names
    for i in range(k):
        for j in range(i + 1, k):
            z = (means[i] - means[j]) / se
            p = 2.0 * normal_sf(abs(z))
            w, l, t = win_lose_tie(matrix, names[i], names[j])
            pairs.append(
                PairComparison(names[i], names[j], w, l, t, z, p, stars(p))
            )
    return SignificanceReport(
        method_names=omnibus.method_names,
        statistic=omnibus.statistic,
        p_value=omnibus.p_value,
        mean_aligned_ranks=omnibus.mean_aligned_ranks,
        pairs=tuple(pairs),
    )
