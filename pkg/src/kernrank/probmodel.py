"""Closed-form moments for the rank bound of randomly filled subdivision cells.

With n particles dropped independently in the source box, the count in a
cell of volume fraction q is Binomial(n, q) and the rank contribution of the
cell is the truncated count Z = min(N, p).  The bound on the blockwise rank
R = sum_{k,l} min(N_{k,l}, p) + M_kappa then has an exact mean and a
closed-form variance upper bound, both evaluated here in log-space for
numerical safety at large n.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln
from scipy.stats import binom, norm

from .errors import DistributionError, DomainError, LowCountWarning
from .geometry import integer_log


@dataclass(frozen=True)
class CountModel:
    """Binomial(n, q) cell-occupancy count."""

    n: int
    q: float

    def __post_init__(self):
        if self.n < 1:
            raise DistributionError("need n >= 1")
        if not 0.0 < self.q < 1.0:
            raise DistributionError("need 0 < q < 1")


@dataclass(frozen=True)
class TruncatedCountModel:
    """Z = min(N, p) for a binomial count N."""

    base: CountModel
    p: int

    def __post_init__(self):
        if self.p < 0:
            raise DistributionError("truncation level p must be >= 0")


@dataclass(frozen=True)
class BoundInputs:
    """Geometry and truncation parameters for the rank-bound formulas."""

    d: int
    dprime: int
    n: int
    p: int

    def __post_init__(self):
        if self.d < 1 or not 0 <= self.dprime < self.d:
            raise DomainError("need d >= 1 and 0 <= d' < d")
        if self.n < 1 or self.p < 0:
            raise DomainError("need n >= 1 and p >= 0")

    @property
    def kappa(self):
        return integer_log(self.n, 2 ** self.d) if self.n >= 2 ** self.d else 0

    @property
    def q_kappa(self):
        return 2.0 ** (-(self.d - self.dprime) * self.kappa)


def binom_pmf(n, q, k):
    """P(Binomial(n, q) = k), stable for large n (no factorial overflow)."""
    if not 0.0 < q < 1.0:
        raise DistributionError("need 0 < q < 1")
    k = np.asarray(k)
    res = np.where((k < 0) | (k > n), 0.0, binom.pmf(np.clip(k, 0, n), n, q))
    return float(res) if np.isscalar(k) or k.ndim == 0 else res


def trinom_pmf(n, q1, q2, l, m):
    """P(N1 = l, N2 = m) for counts of two disjoint cells (trinomial)."""
    if q1 <= 0 or q2 <= 0 or q1 + q2 >= 1.0:
        raise DistributionError("need q1, q2 > 0 and q1 + q2 < 1")
    if l < 0 or m < 0 or l + m > n:
        return 0.0
    logp = (
        gammaln(n + 1) - gammaln(l + 1) - gammaln(m + 1) - gammaln(n - l - m + 1)
        + l * math.log(q1) + m * math.log(q2)
        + (n - l - m) * math.log1p(-(q1 + q2))
    )
    return float(math.exp(logp))


def z_pmf(model, i):
    """P(min(N, p) = i): binomial below p, right tail lumped at p."""
    n, q, p = model.base.n, model.base.q, model.p
    if i < 0 or i > p:
        return 0.0
    if i < p:
        return binom_pmf(n, q, i)
    return float(1.0 - binom_pmf(n, q, np.arange(p)).sum()) if p > 0 else 1.0


def _z_left(n, q, p):
    """Left-tail pmf values P(N = l) for l = 0..p-1 and their sum."""
    if p == 0:
        return np.zeros(0), 0.0
    pmf = binom_pmf(n, q, np.arange(p))
    return pmf, float(pmf.sum())


def z_mean(model):
    """E[min(N, p)] = sum_{l<p} l P(N=l) + p P(N>=p)."""
    n, q, p = model.base.n, model.base.q, model.p
    pmf, left = _z_left(n, q, p)
    return float(np.dot(np.arange(p), pmf) + p * (1.0 - left))


def z_var(model):
    n, q, p = model.base.n, model.base.q, model.p
    pmf, left = _z_left(n, q, p)
    e1 = float(np.dot(np.arange(p), pmf) + p * (1.0 - left))
    e2 = float(np.dot(np.arange(p) ** 2, pmf) + p ** 2 * (1.0 - left))
    return e2 - e1 ** 2


def z_cov(n, q1, q2, p):
    """Cov(min(N1, p), min(N2, p)) for trinomially coupled cell counts.

    The joint law of (Z1, Z2) on {0..p}^2 is assembled from the trinomial
    left corner and complemented tails, so only O(p^2) terms are summed.
    """
    if p == 0:
        return 0.0
    b1 = binom_pmf(n, q1, np.arange(p))
    b2 = binom_pmf(n, q2, np.arange(p))
    corner = np.array([[trinom_pmf(n, q1, q2, l, m) for m in range(p)]
                       for l in range(p)])
    joint = np.zeros((p + 1, p + 1))
    joint[:p, :p] = corner
    joint[p, :p] = b2 - corner.sum(axis=0)  # P(N1 >= p, N2 = m)
    joint[:p, p] = b1 - corner.sum(axis=1)
    joint[p, p] = 1.0 - b1.sum() - b2.sum() + corner.sum()
    i = np.arange(p + 1)
    m1 = TruncatedCountModel(CountModel(n, q1), p)
    m2 = TruncatedCountModel(CountModel(n, q2), p)
    return float(i @ joint @ i - z_mean(m1) * z_mean(m2))


def cov_z_m(n, q_k, q_kappa, p):
    """Cov(min(N, p), M) where N is a level-k cell count and M the terminal one.

    Conditionally on N = l, M is Binomial(n - l, q_kappa / (1 - q_k)), which
    gives E[Z M] from the left tail of N alone.
    """
    if p == 0:
        return 0.0
    if q_k + q_kappa >= 1.0:
        raise DistributionError("cell probabilities must sum below 1")
    ratio = q_kappa / (1.0 - q_k)
    pmf, left = _z_left(n, q_k, p)
    l = np.arange(p)
    e_zl = float(np.dot(l, pmf))  # E[N 1{N < p}]
    e_n_tail = n * q_k - e_zl  # E[N 1{N >= p}]
    e_zm_low = float(np.dot(l * (n - l) * ratio, pmf))
    e_m_tail = ratio * (n * (1.0 - left) - e_n_tail)
    e_zm = e_zm_low + p * e_m_tail
    zm = TruncatedCountModel(CountModel(n, q_k), p)
    return e_zm - z_mean(zm) * n * q_kappa


def cross_moment_nn(n, q1, q2):
    """E[N1 N2] = n (n - 1) q1 q2 and Cov(N1, N2) = -n q1 q2 for disjoint cells."""
    return n * (n - 1.0) * q1 * q2, -n * q1 * q2


def normal_approx_pmf(model, k, C=0.5):
    """Continuity-corrected normal estimate of P(N = k) plus its error bound.

    The bound is the Berry-Esseen cdf bound applied twice:
    2 C (1 - 2q + 2q^2) / sqrt(n q (1 - q)).
    """
    n, q = model.n, model.q
    if n * q < 5.0 or n * (1.0 - q) < 5.0:
        warnings.warn(
            f"normal approximation with n q = {n * q:g}, n(1-q) = {n * (1 - q):g}"
            " below 5; the estimate may be poor", LowCountWarning)
    mu = n * q
    sd = math.sqrt(n * q * (1.0 - q))
    approx = float(norm.cdf((k + 0.5 - mu) / sd) - norm.cdf((k - 0.5 - mu) / sd))
    bound = 2.0 * C * (1.0 - 2.0 * q + 2.0 * q * q) / sd
    return approx, bound


def berry_esseen_multivariate_bound(n, C_mult=1.0):
    """Convex-set normal approximation error for the joint cell counts."""
    if n < 1:
        raise DomainError("need n >= 1")
    return 4.0 * C_mult / math.sqrt(n)


def expected_R(inputs):
    """Exact E[R] and its growth-order witness.

    Returns (exact_sum, witness) where
    exact_sum = sum_k h_k E[min(N_k, p)] + n q_kappa and the witness is the
    closed-form envelope: for d' = 0, (2^d - 1) kappa p + n / 2^(d kappa);
    for d' > 0, the n^(d'/d)-scaled analogue.
    """
    d, dp, n, p = inputs.d, inputs.dprime, inputs.n, inputs.p
    kappa = inputs.kappa
    exact = n * inputs.q_kappa
    for k in range(1, kappa + 1):
        h_k = 2 ** (dp * k) * (2 ** (d - dp) - 1)
        zm = TruncatedCountModel(CountModel(n, 2.0 ** (-d * k)), p)
        exact += h_k * z_mean(zm)
    tail = n / 2.0 ** (d * kappa)
    if dp == 0:
        witness = (2 ** d - 1) * kappa * p + tail
    else:
        ndp = n ** (dp / d)
        witness = (2 ** d - 2 ** dp) / (2 ** dp - 1) * (ndp - 1) * p + ndp * tail
    return float(exact), float(witness)


def var_R_bound(inputs):
    """Closed-form upper bound on Var(R) from the pairwise covariances."""
    d, dp, n, p = inputs.d, inputs.dprime, inputs.n, inputs.p
    kappa = inputs.kappa
    if kappa == 0:
        return 0.0
    q_kappa = inputs.q_kappa
    qs = [2.0 ** (-d * k) for k in range(1, kappa + 1)]
    h_factor = 2 ** (d - dp) - 1
    sum_cov_zm = sum(cov_z_m(n, q, q_kappa, p) for q in qs)
    sum_zcov = sum(
        z_cov(n, qs[a], qs[b], p)
        for a in range(kappa) for b in range(a + 1, kappa)
    )
    sum_zvar = sum(
        z_var(TruncatedCountModel(CountModel(n, q), p)) for q in qs
    )
    s = 2 ** (dp * kappa)
    return float(
        s * n / 2.0 ** (d * kappa)
        + 2 * s * h_factor * sum_cov_zm
        + 2 * s ** 2 * h_factor ** 2 * sum_zcov
        + 3 * s ** 2 * h_factor ** 2 * sum_zvar
    )


def k_tilde(n, p, eps, d):
    """Deepest level where a cell still meaningfully exceeds the truncation.

    Returns (k_tilde, slack) with slack = kappa - k_tilde, where
    k_tilde = floor(log_{2^d}(1 + (n + 1 - 2p) / (M^2 + 2p - 1))) and
    M(eps) = sqrt(2 ln(1 / (eps sqrt(2 pi)))).
    """
    if not 0.0 < eps < 1.0 / math.sqrt(2.0 * math.pi):
        raise DomainError("need 0 < eps < 1/sqrt(2 pi)")
    if n + 1 <= 2 * p:
        raise DomainError("need n + 1 > 2p")
    M2 = 2.0 * math.log(1.0 / (eps * math.sqrt(2.0 * math.pi)))
    denom = M2 + 2.0 * p - 1.0
    if denom <= 0.0:
        raise DomainError("M(eps)^2 + 2p - 1 must be positive")
    arg = 1.0 + (n + 1.0 - 2.0 * p) / denom
    kt = int(math.floor(math.log(arg) / math.log(2.0 ** d)))
    kappa = integer_log(n, 2 ** d) if n >= 2 ** d else 0
    return kt, kappa - kt
