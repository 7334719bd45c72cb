"""Null distributions and p-values for the standardized statistic.

Under the null, the standardized statistic k = n * dcov / sigma2_hat has a
conditional (given the genotypes) law determined by at most two eigenvalues
of a small Gram matrix.  The exact tail is the survival function of a
generalized F-distribution whose CDF has a closed form in terms of the
Appell F1 hypergeometric series; this module evaluates that closed form
through a numerically stable one-dimensional Euler-type integral carried in
log space, so that tails far below double-precision underflow of the raw
prefactor remain accurate.

Also provided: cheap lower/upper p-value bounds used for two-stage
screening, a characteristic-function inversion for weighted sums of
chi-square variables (general fallback and the multiallelic path), and the
asymptotic two-eigenvalue tail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, special, stats

EIGEN_SNAP_REL = 1e-12
PVALUE_FLOOR = 1e-300

METHOD_EXACT = "exact_appell"
METHOD_INVERSION = "weighted_chisq_inversion"
METHOD_ASYMPTOTIC = "asymptotic"
METHOD_CLASSICAL_F = "classical_F"
METHOD_BRACKET = "bracket_only"
METHOD_DEGENERATE = "degenerate spectrum"
METHOD_UNDERFLOW = "underflow"


class NumericsError(RuntimeError):
    """Raised when a quadrature or series fails its accuracy target.

    Carries the best-effort value and an error bound so callers can fall
    back or report.
    """

    def __init__(self, message, partial=None, error_bound=None):
        super().__init__(message)
        self.partial = partial
        self.error_bound = error_bound


# ---------------------------------------------------------------------------
# spectra
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NullSpectrum:
    """Eigenvalues defining the conditional null law of the statistic.

    ``df_sub`` is the number of projected-out directions (1 for plain mean
    centering, q+1 with an intercept and q covariates).  The pure-noise
    degree count in the exact law is n - df_sub - (number of retained
    eigenvalue slots).
    """

    lambdas: tuple
    n: int
    df_sub: int = 1
    sigma2_hat: float | None = None

    def __post_init__(self):
        lam = tuple(float(v) for v in self.lambdas)
        if any(v < 0 for v in lam) or list(lam) != sorted(lam, reverse=True):
            raise ValueError("eigenvalues must be nonnegative and sorted descending")
        if self.n < 4:
            raise ValueError("need n >= 4")
        if self.df_sub < 1 or self.n - self.df_sub - len(lam) < 1:
            raise ValueError("too few residual degrees of freedom")
        object.__setattr__(self, "lambdas", lam)

    @property
    def nonzero(self) -> tuple:
        return tuple(v for v in self.lambdas if v > 0.0)

    def noise_df(self, n_slots: int | None = None) -> int:
        """Number of pure-noise chi-square terms when ``n_slots``
        eigenvalue slots are held out (default: the nonzero ones)."""
        if n_slots is None:
            n_slots = len(self.nonzero)
        return self.n - self.df_sub - n_slots


@dataclass
class PValueBracket:
    """Screening bounds plus the exact value when evaluated.

    ``p_upper`` is stored unclamped (the upper bound may exceed 1); it is
    clamped only at reporting time.
    """

    p_lower: float
    p_upper: float
    p_exact: float | None = None
    method: str = METHOD_BRACKET


def snap_eigenvalues(values) -> tuple:
    """Sort descending, clamp round-off negatives, and snap entries below
    1e-12 of the leading eigenvalue to exactly zero."""
    lam = np.sort(np.asarray(values, dtype=np.float64))[::-1]
    lam = np.where(lam > 0.0, lam, 0.0)
    if lam.size and lam[0] > 0.0:
        lam = np.where(lam < EIGEN_SNAP_REL * lam[0], 0.0, lam)
    return tuple(float(v) for v in lam)


def spectrum_matrix(b: float, freqs) -> np.ndarray:
    """Closed-form 2x2 spectral matrix from genotype class frequencies."""
    p0, p1, p2 = (float(v) for v in freqs)
    k00 = (b / 2.0) * (p0 + p2 - (p0 - p2) ** 2)
    k11 = ((4.0 - b) / 2.0) * (p1 - p1 * p1)
    k01 = math.sqrt(b * (4.0 - b)) / 2.0 * p1 * (p0 - p2)
    return np.array([[k00, k01], [k01, k11]])


def eig2x2(k: np.ndarray) -> tuple:
    """Closed-form eigenvalues of a symmetric 2x2 matrix, descending."""
    tr = k[0, 0] + k[1, 1]
    gap = k[0, 0] - k[1, 1]
    disc = math.sqrt(max(gap * gap + 4.0 * k[0, 1] * k[0, 1], 0.0))
    return ((tr + disc) / 2.0, (tr - disc) / 2.0)


def spectrum_unadjusted(b: float, freqs, n: int, sigma2_hat=None) -> NullSpectrum:
    """Two-eigenvalue null spectrum for plain mean centering, from the
    closed-form frequency matrix."""
    p = np.asarray(freqs, dtype=np.float64)
    if p.shape != (3,) or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
        raise ValueError("frequencies must be 3 nonnegative values summing to 1")
    lam = snap_eigenvalues(eig2x2(spectrum_matrix(b, p)))
    return NullSpectrum(lambdas=lam, n=int(n), df_sub=1, sigma2_hat=sigma2_hat)


def _orthonormal_columns(z: np.ndarray, rank_tol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis of the column space; raises on rank deficiency."""
    z = np.asarray(z, dtype=np.float64)
    if z.ndim == 1:
        z = z[:, None]
    u, s, _ = np.linalg.svd(z, full_matrices=False)
    if s.size == 0 or s[0] <= 0.0:
        raise ValueError("collinear covariates: zero covariate matrix")
    rank = int(np.sum(s > rank_tol * s[0]))
    if rank < z.shape[1]:
        raise ValueError("collinear covariates: covariate matrix is rank deficient")
    return u[:, :rank]


def spectrum_from_features(
    u: np.ndarray,
    projector_basis: np.ndarray | None = None,
    sigma2_hat=None,
) -> NullSpectrum:
    """Eigenvalues of (1/n) U' (I - H) U for a feature matrix U.

    ``projector_basis`` is the covariate matrix (including intercept); when
    absent, H is the projector onto constants.  df_sub equals the number of
    covariate columns.
    """
    u = np.asarray(u, dtype=np.float64)
    if u.ndim != 2 or not np.all(np.isfinite(u)):
        raise ValueError("feature matrix must be finite and 2-d")
    n = u.shape[0]
    if projector_basis is None:
        pu = u - u.mean(axis=0)
        df_sub = 1
    else:
        q = _orthonormal_columns(projector_basis)
        pu = u - q @ (q.T @ u)
        df_sub = q.shape[1]
    k = pu.T @ pu / n
    lam = snap_eigenvalues(np.linalg.eigvalsh(k))
    return NullSpectrum(lambdas=lam, n=n, df_sub=df_sub, sigma2_hat=sigma2_hat)


# ---------------------------------------------------------------------------
# Appell F1 and the generalized F CDF
# ---------------------------------------------------------------------------


def _appell_series(a, b1, b2, c, x, y, rtol=1e-14, max_rows=600):
    """Row-collapsed double series: sum over m of the x-row, each row being
    a Gauss 2F1 in y.  Good when |x| is not too close to 1."""
    total = 0.0
    coef = 1.0  # (b1)_m x^m / m!
    ratio = 1.0  # (a)_m / (c)_m
    small_streak = 0
    for m in range(max_rows):
        inner = special.hyp2f1(a + m, b2, c + m, y)
        term = coef * ratio * inner
        total += term
        if abs(term) <= rtol * max(abs(total), 1e-300):
            small_streak += 1
            if small_streak >= 3:
                return total
        else:
            small_streak = 0
        coef *= (b1 + m) * x / (m + 1.0)
        ratio *= (a + m) / (c + m)
    raise NumericsError(
        "Appell F1 series did not converge", partial=total, error_bound=abs(term)
    )


def _appell_euler_second(a, b1, b2, c, x, y):
    """Euler-type single integral over the second argument's parameter slot
    (requires c > b2 > 0) with a Gauss 2F1 inner evaluation."""
    if not (c > b2 > 0.0):
        raise NumericsError("Euler path needs c > b2 > 0")

    def f(t):
        base = t ** (b2 - 1.0) if b2 != 1.0 else 1.0
        if c - b2 != 1.0:
            base *= (1.0 - t) ** (c - b2 - 1.0)
        w = 1.0 - t * y
        z = (1.0 - t) * x / w
        return base * w ** (-a) * special.hyp2f1(a, b1, c - b2, z)

    val, err = integrate.quad(f, 0.0, 1.0, epsabs=1e-300, epsrel=1e-13, limit=400)
    if abs(val) > 0 and err / abs(val) > 1e-9:
        raise NumericsError("Euler integral inaccurate", partial=val, error_bound=err)
    return val / special.beta(b2, c - b2)


def appell_f1(a: float, b1: float, b2: float, c: float, x: float, y: float) -> float:
    """Appell F1 two-variable hypergeometric function.

    Series domain |x| < 1, |y| < 1.  Uses the double series (collapsed to
    rows of Gauss 2F1) for moderate arguments and an Euler-type single
    integral otherwise.  Relative accuracy target 1e-12.
    """
    if c <= 0.0 and float(c).is_integer():
        raise ValueError("c must not be a nonpositive integer")
    if abs(x) >= 1.0 or abs(y) >= 1.0:
        raise ValueError("arguments must satisfy |x| < 1 and |y| < 1")
    if x == 0.0 and y == 0.0:
        return 1.0
    if x == 0.0:
        return float(special.hyp2f1(a, b2, c, y))
    if y == 0.0:
        return float(special.hyp2f1(a, b1, c, x))
    if max(abs(x), abs(y)) <= 0.65:
        return float(_appell_series(a, b1, b2, c, x, y))
    # prefer integrating over the slot whose argument is larger
    if abs(y) >= abs(x) and c > b2 > 0.0:
        return float(_appell_euler_second(a, b1, b2, c, x, y))
    if c > b1 > 0.0:
        return float(_appell_euler_second(a, b2, b1, c, y, x))
    if c > b2 > 0.0:
        return float(_appell_euler_second(a, b1, b2, c, x, y))
    return float(_appell_series(a, b1, b2, c, x, y, max_rows=4000))


@lru_cache(maxsize=32)
def _gl_nodes(order: int):
    """Gauss-Legendre nodes/weights mapped to [0, pi/2]."""
    x, w = np.polynomial.legendre.leggauss(order)
    half = np.pi / 4.0
    return (half * (x + 1.0), half * w)


def _genf_log_integrand(theta, alpha1, alpha2, nu, x):
    c = alpha1 * np.cos(theta) ** 2 + alpha2 * np.sin(theta) ** 2
    return -(nu / 2.0) * np.log1p(2.0 * x / (nu * c))


def genF_sf(alpha1: float, alpha2: float, nu: float, x: float) -> float:
    """Survival function of the generalized F law
    ((alpha1/2) Q1^2 + (alpha2/2) Q2^2) / ((1/nu) chi2_nu).

    Evaluates the Appell-F1 closed form of the CDF through its Euler
    integral, carried in log space so extreme tails stay accurate.
    """
    if not (alpha1 >= alpha2 > 0.0) or nu < 1 or x < 0.0:
        raise ValueError("need alpha1 >= alpha2 > 0, nu >= 1, x >= 0")
    if x == 0.0:
        return 1.0
    lmax = _genf_log_integrand(0.0, alpha1, alpha2, nu, x)

    def f(theta):
        return math.exp(_genf_log_integrand(theta, alpha1, alpha2, nu, x) - lmax)

    val, err = integrate.quad(f, 0.0, np.pi / 2.0, epsabs=1e-300, epsrel=1e-13, limit=300)
    if val <= 0.0 or err / val > 1e-9:
        raise NumericsError("generalized F quadrature failed", partial=val, error_bound=err)
    log_sf = math.log(2.0 / np.pi) + lmax + math.log(val)
    if log_sf < math.log(PVALUE_FLOOR):
        return 0.0
    return min(math.exp(log_sf), 1.0)


def genF_cdf(alpha1: float, alpha2: float, nu: float, x: float) -> float:
    """CDF companion of :func:`genF_sf`; monotone in x with limits 0, 1."""
    return 1.0 - genF_sf(alpha1, alpha2, nu, x)


def genF_sf_batch(alpha1, alpha2, nu, x) -> np.ndarray:
    """Vectorized generalized-F survival via Gauss-Legendre order doubling,
    with a scalar adaptive fallback for rows that do not converge."""
    alpha1, alpha2, nu, x = np.broadcast_arrays(
        *(np.asarray(v, dtype=np.float64) for v in (alpha1, alpha2, nu, x))
    )
    out = np.ones(alpha1.shape, dtype=np.float64)
    live = x > 0.0
    if not live.any():
        return out
    a1, a2, nn, xx = (v[live] for v in (alpha1, alpha2, nu, x))
    lmax = -(nn / 2.0) * np.log1p(2.0 * xx / (nn * a1))

    def estimate(order):
        theta, w = _gl_nodes(order)
        c = np.outer(a1, np.cos(theta) ** 2) + np.outer(a2, np.sin(theta) ** 2)
        logf = -(nn[:, None] / 2.0) * np.log1p(2.0 * xx[:, None] / (nn[:, None] * c))
        return (np.exp(logf - lmax[:, None]) * w).sum(axis=1)

    prev = estimate(64)
    pending = np.ones(prev.shape, dtype=bool)
    for order in (128, 256, 512):
        cur = estimate(order)
        ok = np.abs(cur - prev) <= 1e-12 * np.maximum(np.abs(cur), 1e-300)
        pending &= ~ok
        prev = cur
        if not pending.any():
            break
    log_sf = np.log(2.0 / np.pi) + lmax + np.log(np.maximum(prev, 1e-320))
    vals = np.where(log_sf < np.log(PVALUE_FLOOR), 0.0, np.exp(np.maximum(log_sf, -745.0)))
    if pending.any():
        for i in np.nonzero(pending)[0]:
            vals[i] = genF_sf(float(a1[i]), float(a2[i]), float(nn[i]), float(xx[i]))
    out[live] = np.minimum(vals, 1.0)
    return out


def chisq2_sf(w1: float, w2: float, t: float) -> float:
    """P(w1 Q1^2 + w2 Q2^2 >= t) for positive weights w1 >= w2."""
    if not (w1 >= w2 > 0.0):
        raise ValueError("need w1 >= w2 > 0")
    if t <= 0.0:
        return 1.0
    if w1 == w2:
        return math.exp(-t / (2.0 * w1))
    lmax = -t / (2.0 * w1)

    def f(theta):
        c = w1 * math.cos(theta) ** 2 + w2 * math.sin(theta) ** 2
        return math.exp(-t / (2.0 * c) - lmax)

    val, err = integrate.quad(f, 0.0, np.pi / 2.0, epsabs=1e-300, epsrel=1e-13, limit=300)
    if val <= 0.0 or err / val > 1e-9:
        raise NumericsError("two-weight chi-square quadrature failed", partial=val)
    log_sf = math.log(2.0 / np.pi) + lmax + math.log(val)
    if log_sf < math.log(PVALUE_FLOOR):
        return 0.0
    return min(math.exp(log_sf), 1.0)


def chisq2_sf_batch(w1, w2, t) -> np.ndarray:
    """Vectorized two-weight chi-square survival (same scheme as
    :func:`genF_sf_batch`)."""
    w1, w2, t = np.broadcast_arrays(
        *(np.asarray(v, dtype=np.float64) for v in (w1, w2, t))
    )
    out = np.ones(w1.shape, dtype=np.float64)
    live = t > 0.0
    if not live.any():
        return out
    a, b, tt = (v[live] for v in (w1, w2, t))
    lmax = -tt / (2.0 * a)

    def estimate(order):
        theta, w = _gl_nodes(order)
        c = np.outer(a, np.cos(theta) ** 2) + np.outer(b, np.sin(theta) ** 2)
        return (np.exp(-tt[:, None] / (2.0 * c) - lmax[:, None]) * w).sum(axis=1)

    prev = estimate(64)
    pending = np.ones(prev.shape, dtype=bool)
    for order in (128, 256, 512):
        cur = estimate(order)
        ok = np.abs(cur - prev) <= 1e-12 * np.maximum(np.abs(cur), 1e-300)
        pending &= ~ok
        prev = cur
        if not pending.any():
            break
    log_sf = np.log(2.0 / np.pi) + lmax + np.log(np.maximum(prev, 1e-320))
    vals = np.where(log_sf < np.log(PVALUE_FLOOR), 0.0, np.exp(np.maximum(log_sf, -745.0)))
    if pending.any():
        for i in np.nonzero(pending)[0]:
            vals[i] = chisq2_sf(float(a[i]), float(b[i]), float(tt[i]))
    out[live] = np.minimum(vals, 1.0)
    return out


# ---------------------------------------------------------------------------
# weighted chi-square tail (characteristic-function inversion)
# ---------------------------------------------------------------------------


def _oscillatory_tail(f, start: float, half_period: float, eps: float,
                      max_terms: int = 600) -> tuple:
    """Sum an alternating, decaying oscillatory tail integral by
    half-periods with repeated Euler averaging of the partial sums."""
    terms = []
    u = start
    prev_est = None
    for _ in range(max_terms):
        val, _ = integrate.quad(f, u, u + half_period, epsabs=eps / 100.0, limit=200)
        terms.append(val)
        u += half_period
        if len(terms) >= 8:
            row = np.cumsum(terms)
            for _ in range(min(len(terms) - 1, 24)):
                row = 0.5 * (row[:-1] + row[1:])
            est = float(row[-1])
            if prev_est is not None and abs(est - prev_est) < eps / 8.0:
                return est, abs(est - prev_est) + eps / 50.0
            prev_est = est
    raise NumericsError("oscillatory tail did not converge", partial=prev_est)


def weighted_chisq_tail(weights, threshold: float, dfs=None, eps: float = 1e-10,
                        return_error: bool = False):
    """P(sum_r w_r chi2_{h_r} >= threshold) by numerical inversion of the
    characteristic function.  Mixed-sign weights allowed.

    Target absolute accuracy ``eps``; raises :class:`NumericsError` with the
    best-effort value when the quadrature cannot certify it.
    """
    w = np.asarray(weights, dtype=np.float64)
    h = np.ones_like(w) if dfs is None else np.asarray(dfs, dtype=np.float64)
    if w.shape != h.shape or w.ndim != 1:
        raise ValueError("weights and dfs must be 1-d arrays of equal length")
    keep = w != 0.0
    w, h = w[keep], h[keep]
    if w.size == 0:
        raise ValueError("at least one nonzero weight is required")
    t = float(threshold)
    if w.size == 1 or np.all(w == w[0]):
        ww = float(w[0])
        hh = float(h.sum())
        if ww > 0.0:
            p = 1.0 if t <= 0.0 else float(stats.chi2.sf(t / ww, hh))
        else:
            p = 0.0 if t >= 0.0 else float(stats.chi2.cdf(t / ww, hh))
        return (p, 0.0) if return_error else p

    def theta(u):
        return 0.5 * np.sum(h * np.arctan(w * u)) - 0.5 * t * u

    def integrand(u):
        if u == 0.0:
            return 0.5 * np.sum(h * w) - 0.5 * t
        log_mag = -math.log(u) - 0.25 * float(np.sum(h * np.log1p((w * u) ** 2)))
        if log_mag < -745.0:
            return 0.0
        return math.sin(theta(u)) * math.exp(log_mag)

    k_total = float(h.sum())
    log_prod = 0.5 * float(np.sum(h * np.log(np.abs(w))))

    def log_tail_bound(u):
        # |integrand| <= 1 / (u rho(u)) and rho(u) >= prod |w u|^{h/2}
        return (
            math.log(2.0 / (math.pi * k_total))
            - log_prod
            - 0.5 * k_total * math.log(u)
        )

    # integrate piecewise; segment widths grow geometrically but are capped
    # so that no segment holds more than ~30 oscillations of the phase
    scale = 1.0 / max(float(np.max(np.abs(w))), abs(t) / 2.0, 1e-12)
    sum_hw = float(np.sum(h * np.abs(w)))
    min_w = float(np.min(np.abs(w)))
    u_saturated = 30.0 / min_w
    total = 0.0
    err_acc = 0.0
    lo = 0.0
    converged = False
    for _ in range(3000):
        rate = 0.5 * sum_hw / (1.0 + (min_w * lo) ** 2) + 0.5 * abs(t)
        width = min(3.0 * max(lo, scale), 60.0 * math.pi / max(rate, 1e-12))
        hi = lo + max(width, scale * 1e-3)
        val, seg_err = integrate.quad(
            integrand, lo, hi, epsabs=eps / 50.0, epsrel=1e-12, limit=500
        )
        total += val
        err_acc += seg_err
        if log_tail_bound(hi) < math.log(eps / 2.0):
            converged = True
            break
        lo = hi
        if abs(t) > 0.0 and lo >= u_saturated:
            # slowly decaying oscillatory remainder: sum half-periods of the
            # linear phase with Euler averaging
            tail_val, tail_err = _oscillatory_tail(
                integrand, lo, 2.0 * math.pi / abs(t), eps
            )
            total += tail_val
            err_acc += tail_err
            converged = True
            break
    if not converged:
        raise NumericsError(
            "characteristic-function inversion did not reach its truncation point",
            partial=0.5 + total / math.pi,
            error_bound=err_acc + math.exp(min(log_tail_bound(lo), 700.0)),
        )
    p = 0.5 + total / math.pi
    p = min(max(p, 0.0), 1.0)
    total_err = err_acc + eps / 2.0
    if err_acc > 4.0 * eps:
        raise NumericsError(
            "characteristic-function inversion missed its accuracy target",
            partial=p,
            error_bound=total_err,
        )
    return (p, total_err) if return_error else p


# ---------------------------------------------------------------------------
# exact p-values, bounds, asymptotics
# ---------------------------------------------------------------------------


def _tail_tn_inversion(nonzero, k, n, noise_df):
    """Tail of the holdout form: sum_i (l_i - k/n) Q_i^2 - (k/n) chi2_noise >= 0."""
    weights = [li - k / n for li in nonzero] + [-k / n]
    dfs = [1.0] * len(nonzero) + [float(noise_df)]
    return weighted_chisq_tail(np.array(weights), 0.0, dfs=np.array(dfs))


def holdout_tail_two(w1: float, w2: float, kn: float, nu: float) -> float:
    """P(w1 Q1^2 + w2 Q2^2 - kn chi2_nu >= 0) for w1 > 0 and w2 of either
    sign, to relative accuracy.

    Conditioning on the angle of (Q1, Q2) gives a positive log-stable
    integrand; with w2 < 0 the integration range simply stops where the
    angular combination changes sign.  With w2 > 0 this is the generalized
    F survival function again.
    """
    if kn < 0.0 or nu < 1:
        raise ValueError("need kn >= 0 and nu >= 1")
    if w1 <= 0.0:
        return 1.0 if kn == 0.0 and w2 >= 0.0 else 0.0
    theta_star = np.pi / 2.0 if w2 >= 0.0 else math.atan(math.sqrt(w1 / (-w2)))
    if kn == 0.0:
        return 1.0 if w2 >= 0.0 else (2.0 / np.pi) * theta_star

    def log_f(theta):
        c = w1 * math.cos(theta) ** 2 + w2 * math.sin(theta) ** 2
        if c <= 0.0:
            return -math.inf
        return -(nu / 2.0) * math.log1p(kn / c)

    lmax = log_f(0.0)

    def f(theta):
        lf = log_f(theta)
        return 0.0 if lf == -math.inf else math.exp(lf - lmax)

    val, err = integrate.quad(
        f, 0.0, theta_star, epsabs=1e-300, epsrel=1e-13, limit=300
    )
    if val <= 0.0 or err / val > 1e-9:
        raise NumericsError("holdout tail quadrature failed", partial=val, error_bound=err)
    log_p = math.log(2.0 / np.pi) + lmax + math.log(val)
    if log_p < math.log(PVALUE_FLOOR):
        return 0.0
    return min(math.exp(log_p), 1.0)


def exact_pvalue(spec: NullSpectrum, k: float) -> float:
    """Exact conditional-null p-value of the standardized statistic."""
    return exact_pvalue_with_method(spec, k)[0]


def exact_pvalue_with_method(spec: NullSpectrum, k: float) -> tuple:
    """Exact p-value plus the evaluation route that produced it.

    Routes: generalized-F closed form when both retained eigenvalues clear
    k/n; direct inversion of the holdout law when the second eigenvalue is
    positive but does not; the classical F reduction when only one
    eigenvalue is nonzero; inversion for more than two.
    """
    if k < 0.0:
        raise ValueError("the standardized statistic is nonnegative")
    n = spec.n
    nonzero = spec.nonzero
    if len(nonzero) == 0:
        p = 1.0 if k <= 0.0 else 0.0
        return p, METHOD_DEGENERATE

    if len(nonzero) > 2:
        p = _tail_tn_inversion(nonzero, k, n, spec.noise_df())
        return _floor(p, METHOD_INVERSION)

    if len(nonzero) == 1:
        l1 = nonzero[0]
        nu1 = spec.noise_df(1)
        denom = l1 * n - k
        p = 0.0 if denom <= 0.0 else float(stats.f.sf(k * nu1 / denom, 1, nu1))
        return _floor(p, METHOD_CLASSICAL_F)

    l1, l2 = nonzero
    nu = spec.noise_df(2)
    w1, w2 = l1 - k / n, l2 - k / n
    if w2 > 0.0:
        try:
            p = genF_sf(2.0 * w1, 2.0 * w2, nu, k * nu / n)
            return _floor(p, METHOD_EXACT)
        except NumericsError:
            pass
    try:
        p = holdout_tail_two(w1, w2, k / n, nu)
    except NumericsError:
        p = _tail_tn_inversion([l1, l2], k, n, nu)
    return _floor(p, METHOD_INVERSION)


def evaluate_pvalue(spec: NullSpectrum, k: float) -> PValueBracket:
    """Exact p-value bundled with the screening bounds."""
    p, method = exact_pvalue_with_method(spec, k)
    if len(spec.nonzero) > 2 or method == METHOD_DEGENERATE:
        return PValueBracket(p_lower=p, p_upper=p, p_exact=p, method=method)
    p_lo, p_hi = pvalue_bounds(spec, k)
    return PValueBracket(p_lower=p_lo, p_upper=p_hi, p_exact=p, method=method)


def _floor(p: float, method: str) -> tuple:
    if 0.0 < p < PVALUE_FLOOR:
        return 0.0, METHOD_UNDERFLOW
    if p == 0.0:
        return 0.0, METHOD_UNDERFLOW
    return p, method


def _floor_prob(x):
    """Uniform reporting floor: probabilities below 1e-300 become 0."""
    if isinstance(x, np.ndarray):
        return np.where(x < PVALUE_FLOOR, 0.0, x)
    return 0.0 if x < PVALUE_FLOOR else x


def pvalue_bounds(spec: NullSpectrum, k: float) -> tuple:
    """Computable lower/upper bounds (p*, p**) on the exact p-value.

    The upper bound may exceed 1 and is returned unclamped.
    """
    if k < 0.0:
        raise ValueError("the standardized statistic is nonnegative")
    n = spec.n
    lam = spec.lambdas
    l1 = lam[0]
    l2 = lam[1] if len(lam) > 1 else 0.0
    if l1 <= 0.0:
        p = 1.0 if k <= 0.0 else 0.0
        return (p, p)
    nu = spec.noise_df(2)
    if l2 - k / n > 0.0:
        t = k * nu / n
        t1 = chisq2_sf(l1 - k / n, l2 - k / n, t)
        t2 = float(stats.f.sf(k * nu / (l1 * n - k), 1, nu))
        t3 = float(
            stats.f.sf(k * nu / math.sqrt((l1 * n - k) * (l2 * n - k)), 2, nu)
        )
        p_star = max(t1, t2, t3)
        p_star2 = 5.0 * float(
            stats.f.sf(k * (nu + 1) / ((l1 + l2) * n - 2.0 * k), 1, nu + 1)
        )
        return (_floor_prob(p_star), _floor_prob(p_star2))
    denom = l1 * n - k
    if denom <= 0.0:
        return (0.0, 0.0)
    p_star = float(stats.f.sf(k * (nu + 1) / denom, 1, nu + 1))
    p_star2 = float(stats.f.sf(k * nu / denom, 1, nu))
    return (_floor_prob(p_star), _floor_prob(p_star2))


def pvalue_bounds_batch(lam1, lam2, k, n, df_sub=1) -> tuple:
    """Vectorized (p*, p**) over arrays of spectra and statistics."""
    lam1, lam2, k = np.broadcast_arrays(
        *(np.asarray(v, dtype=np.float64) for v in (lam1, lam2, k))
    )
    n = np.broadcast_to(np.asarray(n, dtype=np.float64), lam1.shape)
    df_sub = np.broadcast_to(np.asarray(df_sub, dtype=np.float64), lam1.shape)
    nu = n - df_sub - 2.0
    p_star = np.zeros(lam1.shape)
    p_star2 = np.zeros(lam1.shape)

    degenerate = lam1 <= 0.0
    p_deg = np.where(k <= 0.0, 1.0, 0.0)
    p_star[degenerate] = p_deg[degenerate]
    p_star2[degenerate] = p_deg[degenerate]

    upper = (~degenerate) & (lam2 - k / n > 0.0)
    if upper.any():
        l1, l2, kk, nn, vv = (v[upper] for v in (lam1, lam2, k, n, nu))
        t = kk * vv / nn
        t1 = chisq2_sf_batch(l1 - kk / nn, l2 - kk / nn, t)
        t2 = stats.f.sf(kk * vv / (l1 * nn - kk), 1, vv)
        t3 = stats.f.sf(kk * vv / np.sqrt((l1 * nn - kk) * (l2 * nn - kk)), 2, vv)
        p_star[upper] = np.maximum(np.maximum(t1, t2), t3)
        p_star2[upper] = 5.0 * stats.f.sf(
            kk * (vv + 1) / ((l1 + l2) * nn - 2.0 * kk), 1, vv + 1
        )

    lower = (~degenerate) & ~upper
    if lower.any():
        l1, kk, nn, vv = (v[lower] for v in (lam1, k, n, nu))
        denom = l1 * nn - kk
        safe = denom > 0.0
        ps = np.zeros(denom.shape)
        ps2 = np.zeros(denom.shape)
        ps[safe] = stats.f.sf(kk[safe] * (vv[safe] + 1) / denom[safe], 1, vv[safe] + 1)
        ps2[safe] = stats.f.sf(kk[safe] * vv[safe] / denom[safe], 1, vv[safe])
        p_star[lower] = ps
        p_star2[lower] = ps2
    return _floor_prob(p_star), _floor_prob(p_star2)


def exact_pvalues_batch(lam1, lam2, k, n, df_sub=1) -> np.ndarray:
    """Vectorized exact p-values over arrays of two-eigenvalue spectra.

    Routes each entry like :func:`exact_pvalue_with_method`: generalized-F
    batch evaluation where both holdout weights are positive, the classical
    F reduction where the second eigenvalue is zero, and scalar inversion
    in the thin remaining regime.
    """
    lam1, lam2, k = np.broadcast_arrays(
        *(np.asarray(v, dtype=np.float64) for v in (lam1, lam2, k))
    )
    n = np.broadcast_to(np.asarray(n, dtype=np.float64), lam1.shape)
    df_sub_arr = np.broadcast_to(np.asarray(df_sub, dtype=np.float64), lam1.shape)
    out = np.ones(lam1.shape, dtype=np.float64)

    degenerate = lam1 <= 0.0
    out[degenerate] = np.where(k[degenerate] <= 0.0, 1.0, 0.0)

    single = (~degenerate) & (lam2 <= 0.0)
    if single.any():
        nu1 = n[single] - df_sub_arr[single] - 1.0
        denom = lam1[single] * n[single] - k[single]
        p = np.zeros(denom.shape)
        ok = denom > 0.0
        p[ok] = stats.f.sf(k[single][ok] * nu1[ok] / denom[ok], 1, nu1[ok])
        out[single] = p

    both = (~degenerate) & (lam2 > 0.0)
    w2 = lam2 - k / n
    genf = both & (w2 > 0.0)
    if genf.any():
        nu = n[genf] - df_sub_arr[genf] - 2.0
        out[genf] = genF_sf_batch(
            2.0 * (lam1[genf] - k[genf] / n[genf]),
            2.0 * w2[genf],
            nu,
            k[genf] * nu / n[genf],
        )
    hard = both & (w2 <= 0.0)
    if hard.any():
        for i in np.nonzero(hard.ravel())[0]:
            idx = np.unravel_index(i, lam1.shape)
            nu = n[idx] - df_sub_arr[idx] - 2.0
            out[idx] = holdout_tail_two(
                float(lam1[idx] - k[idx] / n[idx]),
                float(lam2[idx] - k[idx] / n[idx]),
                float(k[idx] / n[idx]),
                nu,
            )
    return out


def asymptotic_pvalue(b: float, freqs, sigma2: float, n: int, stat: float) -> float:
    """Large-sample tail: P(sigma2 (l1 Q1^2 + l2 Q2^2) >= stat) with the
    two population eigenvalues computed from plug-in frequencies.

    ``stat`` is n times the distance covariance (unstandardized).
    """
    if n < 4:
        raise ValueError("need n >= 4")
    if sigma2 <= 0.0:
        raise ValueError("sigma2 must be positive")
    if stat <= 0.0:
        return 1.0
    l1, l2 = snap_eigenvalues(eig2x2(spectrum_matrix(b, freqs)))[:2]
    t = stat / sigma2
    if l1 <= 0.0:
        return 1.0 if t <= 0.0 else 0.0
    if l2 <= 0.0:
        return float(stats.chi2.sf(t / l1, 1))
    return chisq2_sf(l1, l2, t)
