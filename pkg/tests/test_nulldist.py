"""Null spectra, the Appell/generalized-F machinery, bounds, inversion."""

import math

import numpy as np
import pytest
from scipy import integrate, special, stats

from gdcscan.gdc import Sample
from gdcscan.nulldist import (
    NullSpectrum,
    appell_f1,
    asymptotic_pvalue,
    chisq2_sf,
    chisq2_sf_batch,
    eig2x2,
    exact_pvalue,
    exact_pvalue_with_method,
    exact_pvalues_batch,
    genF_cdf,
    genF_sf,
    genF_sf_batch,
    holdout_tail_two,
    pvalue_bounds,
    pvalue_bounds_batch,
    snap_eigenvalues,
    spectrum_from_features,
    spectrum_matrix,
    spectrum_unadjusted,
    weighted_chisq_tail,
)
from gdcscan.premetric import Premetric


def _features(b, x):
    return Premetric(b).canonical_feature_map().evaluate(np.asarray(x))


def _hwe(maf):
    return np.array([(1 - maf) ** 2, 2 * maf * (1 - maf), maf**2])


# ---------------------------------------------------------------------------
# spectra
# ---------------------------------------------------------------------------


def test_spectrum_endpoint_cases():
    spec4 = spectrum_unadjusted(4.0, (0.25, 0.5, 0.25), 100)
    assert spec4.lambdas == pytest.approx((1.0, 0.0))
    spec0 = spectrum_unadjusted(0.0, (0.25, 0.5, 0.25), 100)
    assert spec0.lambdas == pytest.approx((0.5, 0.0))


def test_spectrum_balanced_b2():
    spec = spectrum_unadjusted(2.0, (0.25, 0.5, 0.25), 100)
    assert spec.lambdas == pytest.approx((0.5, 0.25))


def test_spectrum_matches_gram_oracle():
    """Closed-form frequency spectrum equals the eigenvalues of the
    centered feature Gram computed from a sample with those exact counts."""
    rng = np.random.default_rng(3)
    for b in (0.5, 1.0, 2.0, 2.5, 3.7):
        counts = (12, 23, 9)
        x = np.repeat([0, 1, 2], counts)
        rng.shuffle(x)
        n = x.size
        spec = spectrum_unadjusted(b, np.asarray(counts) / n, n)
        gram_spec = spectrum_from_features(_features(b, x))
        assert spec.lambdas == pytest.approx(gram_spec.lambdas, abs=1e-12)
        # trace / determinant identities against the closed-form matrix
        k = spectrum_matrix(b, np.asarray(counts) / n)
        assert sum(spec.lambdas) == pytest.approx(np.trace(k), abs=1e-14)
        assert spec.lambdas[0] * spec.lambdas[1] == pytest.approx(
            np.linalg.det(k), abs=1e-14
        )


def test_spectrum_from_features_dense_oracle():
    rng = np.random.default_rng(11)
    u = rng.normal(size=(6, 2))
    spec = spectrum_from_features(u)
    uc = u - u.mean(axis=0)
    ref = np.linalg.eigvalsh(uc.T @ uc / 6)[::-1]
    assert spec.lambdas == pytest.approx(tuple(ref), abs=1e-12)
    assert spec.df_sub == 1


def test_spectrum_from_features_with_projector():
    rng = np.random.default_rng(13)
    n = 40
    u = rng.normal(size=(n, 2))
    z = np.column_stack([np.ones(n), rng.normal(size=n)])
    spec = spectrum_from_features(u, projector_basis=z)
    q, _ = np.linalg.qr(z)
    pu = u - q @ (q.T @ u)
    ref = np.linalg.eigvalsh(pu.T @ pu / n)[::-1]
    assert spec.lambdas == pytest.approx(tuple(ref), abs=1e-12)
    assert spec.df_sub == 2
    # intercept-only projector equals plain centering
    only1 = spectrum_from_features(u, projector_basis=np.ones((n, 1)))
    plain = spectrum_from_features(u)
    assert only1.lambdas == pytest.approx(plain.lambdas, abs=1e-14)


def test_spectrum_orthogonal_covariate_no_change():
    rng = np.random.default_rng(17)
    n = 60
    x = rng.integers(0, 3, n)
    u = _features(2.5, x)
    uc = u - u.mean(axis=0)
    # build a covariate orthogonal to both centered feature columns
    raw = rng.normal(size=n)
    basis = np.column_stack([np.ones(n), uc])
    q, _ = np.linalg.qr(basis)
    ortho = raw - q @ (q.T @ raw)
    z = np.column_stack([np.ones(n), ortho])
    adjusted = spectrum_from_features(u, projector_basis=z)
    plain = spectrum_from_features(u)
    assert adjusted.lambdas == pytest.approx(plain.lambdas, abs=1e-12)
    assert adjusted.df_sub == 2


def test_spectrum_rank_deficient_projector():
    n = 30
    z = np.column_stack([np.ones(n), np.ones(n)])
    with pytest.raises(ValueError, match="collinear"):
        spectrum_from_features(np.random.default_rng(0).normal(size=(n, 2)), z)


def test_snap_eigenvalues():
    lam = snap_eigenvalues([1.0, 1e-15, -1e-18])
    assert lam == (1.0, 0.0, 0.0)
    assert snap_eigenvalues([0.0, 0.0]) == (0.0, 0.0)


def test_null_spectrum_validation():
    with pytest.raises(ValueError):
        NullSpectrum(lambdas=(0.1, 0.5), n=100)  # not descending
    with pytest.raises(ValueError):
        NullSpectrum(lambdas=(0.5, 0.1), n=3)
    with pytest.raises(ValueError):
        NullSpectrum(lambdas=(0.5, 0.1), n=4, df_sub=2)  # no noise df left


# ---------------------------------------------------------------------------
# Appell F1
# ---------------------------------------------------------------------------


def test_appell_trivial_reductions():
    assert appell_f1(3.1, 0.5, 1.0, 2.0, 0.0, 0.0) == 1.0
    assert appell_f1(2.5, 0.5, 1.0, 2.0, 0.0, 0.6) == pytest.approx(
        float(special.hyp2f1(2.5, 1.0, 2.0, 0.6)), rel=1e-13
    )
    assert appell_f1(2.5, 0.5, 1.0, 2.0, 0.3, 0.0) == pytest.approx(
        float(special.hyp2f1(2.5, 0.5, 2.0, 0.3)), rel=1e-13
    )


def test_appell_frozen_value():
    # frozen from the two-dimensional simplex-integral oracle (and mpmath)
    assert appell_f1(2.5, 0.5, 1.0, 2.0, 0.3, 0.6) == pytest.approx(
        4.0496703643304789, rel=1e-12
    )


def test_appell_against_simplex_integral_oracle():
    """Independent evaluation through the two-variable simplex integral,
    valid for c > b1 + b2."""
    a, b1, b2, c, x, y = 1.8, 0.4, 0.9, 2.5, 0.45, 0.7
    pref = special.gamma(c) / (
        special.gamma(b1) * special.gamma(b2) * special.gamma(c - b1 - b2)
    )

    def f(v, u):
        return (
            u ** (b1 - 1.0)
            * v ** (b2 - 1.0)
            * (1.0 - u - v) ** (c - b1 - b2 - 1.0)
            * (1.0 - u * x - v * y) ** (-a)
        )

    val, _ = integrate.dblquad(f, 0, 1, 0, lambda u: 1 - u, epsabs=1e-12)
    assert appell_f1(a, b1, b2, c, x, y) == pytest.approx(pref * val, rel=1e-8)


def test_appell_against_mpmath_grid():
    mp = pytest.importorskip("mpmath")
    mp.mp.dps = 30
    cases = [
        (2.5, 0.5, 1.0, 2.0, 0.3, 0.6),
        (25.5, 0.5, 1.0, 2.0, 0.2, 0.9),
        (5.0, 0.5, 1.0, 2.0, 0.85, 0.9),
        (12.0, 0.5, 1.0, 2.0, 0.7, 0.75),
        (2.5, 1.5, 0.7, 3.0, -0.4, 0.8),
        (1.2, 0.3, 0.6, 1.5, 0.5, -0.6),
        (4.0, 0.5, 1.0, 2.0, 0.05, 0.1),
    ]
    for a, b1, b2, c, x, y in cases:
        ref = float(mp.appellf1(a, b1, b2, c, x, y))
        assert appell_f1(a, b1, b2, c, x, y) == pytest.approx(ref, rel=1e-11)


def test_appell_domain_errors():
    with pytest.raises(ValueError):
        appell_f1(2.0, 0.5, 1.0, -1.0, 0.1, 0.1)
    with pytest.raises(ValueError):
        appell_f1(2.0, 0.5, 1.0, 2.0, 1.1, 0.1)


# ---------------------------------------------------------------------------
# generalized F
# ---------------------------------------------------------------------------


def test_genf_equal_weights_collapse():
    """Equal weights reduce to a scaled classical F(2, nu)."""
    for alpha, nu in ((0.7, 10), (1.3, 47), (0.2, 297)):
        for x in (0.05, 0.8, 3.0, 12.0):
            assert genF_cdf(alpha, alpha, nu, x) == pytest.approx(
                float(stats.f.cdf(x / alpha, 2, nu)), rel=1e-12, abs=1e-15
            )


def test_genf_frozen_value():
    # frozen from a 30-digit evaluation of the Appell closed form
    assert genF_cdf(0.7, 0.2, 47, 3.1) == pytest.approx(
        0.99440950814532232, rel=1e-13
    )


def test_genf_zero_and_monotone():
    assert genF_cdf(0.9, 0.3, 20, 0.0) == 0.0
    xs = np.linspace(0.0, 40.0, 60)
    vals = [genF_cdf(0.9, 0.3, 20, float(x)) for x in xs]
    assert all(b2 >= b1 - 1e-15 for b1, b2 in zip(vals, vals[1:]))
    assert vals[0] == 0.0
    assert vals[-1] > 0.999
    assert all(0.0 <= v <= 1.0 for v in vals)


def test_genf_domain_errors():
    with pytest.raises(ValueError):
        genF_cdf(0.2, 0.7, 10, 1.0)  # alpha1 < alpha2
    with pytest.raises(ValueError):
        genF_cdf(0.7, 0.2, 10, -1.0)


def test_genf_matches_inversion():
    """Cross-validation of the closed form against the characteristic
    function inversion of the defining quadratic form."""
    rng = np.random.default_rng(19)
    for _ in range(25):
        a2 = rng.uniform(0.05, 1.0)
        a1 = a2 + rng.uniform(0.0, 1.5)
        nu = int(rng.integers(5, 400))
        x = rng.uniform(0.01, 15.0)
        direct = genF_sf(a1, a2, nu, x)
        inv = weighted_chisq_tail(
            np.array([a1 / 2, a2 / 2, -x / nu]), 0.0,
            dfs=np.array([1.0, 1.0, float(nu)]),
        )
        assert direct == pytest.approx(inv, abs=1e-9)


def test_genf_batch_matches_scalar():
    rng = np.random.default_rng(23)
    a2 = rng.uniform(0.05, 1.0, size=50)
    a1 = a2 + rng.uniform(0.0, 1.5, size=50)
    nu = rng.integers(5, 2000, size=50).astype(float)
    x = rng.uniform(0.0, 30.0, size=50)
    batch = genF_sf_batch(a1, a2, nu, x)
    for i in range(50):
        assert batch[i] == pytest.approx(
            genF_sf(a1[i], a2[i], nu[i], x[i]), rel=1e-10, abs=1e-300
        )


def test_chisq2_batch_matches_scalar():
    rng = np.random.default_rng(29)
    w2 = rng.uniform(0.05, 1.0, size=40)
    w1 = w2 + rng.uniform(0.0, 2.0, size=40)
    t = rng.uniform(0.0, 60.0, size=40)
    batch = chisq2_sf_batch(w1, w2, t)
    for i in range(40):
        assert batch[i] == pytest.approx(
            chisq2_sf(w1[i], w2[i], t[i]), rel=1e-10, abs=1e-300
        )


# ---------------------------------------------------------------------------
# weighted chi-square inversion
# ---------------------------------------------------------------------------


def test_inversion_single_weight():
    assert weighted_chisq_tail([2.0], 5.0) == pytest.approx(
        float(stats.chi2.sf(2.5, 1)), abs=1e-12
    )
    assert weighted_chisq_tail([1.0, 1.0], 3.0) == pytest.approx(
        math.exp(-1.5), abs=1e-12
    )
    assert weighted_chisq_tail([-2.0], -1.0) == pytest.approx(
        float(stats.chi2.cdf(0.5, 1)), abs=1e-12
    )
    assert weighted_chisq_tail([-2.0], 0.5) == 0.0


def test_inversion_requires_nonzero_weight():
    with pytest.raises(ValueError):
        weighted_chisq_tail([0.0, 0.0], 1.0)


def test_inversion_mixed_weights_frozen_mc():
    # 1e7-draw Monte Carlo gave 0.81101 with standard error 1.2e-4
    p = weighted_chisq_tail([0.6, 0.3, -0.1, -0.1], 0.0)
    assert p == pytest.approx(0.8110129, abs=5e-4)


def test_inversion_matches_mc_small():
    rng = np.random.default_rng(31)
    w = np.array([0.5, -0.2, 0.1])
    t = 0.4
    n = 2_000_000
    draws = (
        w[0] * rng.standard_normal(n) ** 2
        + w[1] * rng.standard_normal(n) ** 2
        + w[2] * rng.standard_normal(n) ** 2
    )
    mc = float((draws >= t).mean())
    se = math.sqrt(mc * (1 - mc) / n)
    assert weighted_chisq_tail(w, t) == pytest.approx(mc, abs=4 * se)


def test_holdout_tail_two_matches_inversion():
    rng = np.random.default_rng(37)
    for _ in range(20):
        w1 = rng.uniform(0.1, 1.0)
        w2 = rng.uniform(-0.3, 0.3)
        kn = rng.uniform(0.001, 0.2)
        nu = int(rng.integers(10, 500))
        a = holdout_tail_two(w1, w2, kn, nu)
        i = weighted_chisq_tail(
            np.array([w1, w2, -kn]), 0.0, dfs=np.array([1.0, 1.0, float(nu)])
        )
        assert a == pytest.approx(i, abs=2e-9)


def test_holdout_tail_two_no_noise_term():
    # kn = 0 with a negative second weight: closed angular fraction
    w1, w2 = 0.7, -0.2
    expected = (2.0 / math.pi) * math.atan(math.sqrt(w1 / -w2))
    assert holdout_tail_two(w1, w2, 0.0, 50) == pytest.approx(expected, rel=1e-12)


# ---------------------------------------------------------------------------
# exact p-values
# ---------------------------------------------------------------------------


def test_exact_pvalue_at_zero_statistic():
    spec = spectrum_unadjusted(2.0, _hwe(0.3), 200)
    assert exact_pvalue(spec, 0.0) == 1.0


def test_exact_pvalue_monotone_in_k():
    spec = spectrum_unadjusted(2.5, _hwe(0.25), 150)
    ks = np.linspace(0.0, 40.0, 80)
    ps = [exact_pvalue(spec, float(k)) for k in ks]
    assert all(p2 <= p1 + 1e-12 for p1, p2 in zip(ps, ps[1:]))


def test_exact_pvalue_b4_equals_regression_f_test():
    """Endpoint reduction: the p-value is the classical two-sided simple
    linear regression F/t-test p-value."""
    rng = np.random.default_rng(41)
    for _ in range(30):
        n = int(rng.integers(10, 120))
        x = rng.choice(3, size=n, p=_hwe(0.3))
        if len(np.unique(x)) < 2:
            continue
        y = rng.normal(size=n)
        s = Sample.from_arrays(x, y)
        from gdcscan.gdc import standardized_statistic

        k, _ = standardized_statistic(4.0, s)
        spec = spectrum_unadjusted(4.0, np.bincount(x, minlength=3) / n, n)
        p = exact_pvalue(spec, k)
        ref = float(stats.linregress(x.astype(float), y).pvalue)
        assert p == pytest.approx(ref, abs=1e-10)


def test_exact_pvalue_b0_equals_het_indicator_f_test():
    rng = np.random.default_rng(43)
    for _ in range(30):
        n = int(rng.integers(10, 120))
        x = rng.choice(3, size=n, p=_hwe(0.4))
        het = (x == 1).astype(float)
        if het.std() == 0:
            continue
        y = rng.normal(size=n)
        s = Sample.from_arrays(x, y)
        from gdcscan.gdc import standardized_statistic

        k, _ = standardized_statistic(0.0, s)
        spec = spectrum_unadjusted(0.0, np.bincount(x, minlength=3) / n, n)
        p = exact_pvalue(spec, k)
        ref = float(stats.linregress(het, y).pvalue)
        assert p == pytest.approx(ref, abs=1e-10)


def test_exact_pvalue_degenerate_spectrum():
    spec = NullSpectrum(lambdas=(0.0, 0.0), n=50)
    p, method = exact_pvalue_with_method(spec, 0.0)
    assert p == 1.0 and method == "degenerate spectrum"
    p2, _ = exact_pvalue_with_method(spec, 1.0)
    assert p2 == 0.0


def test_exact_pvalue_hard_regime_routes_to_inversion():
    spec = NullSpectrum(lambdas=(0.6, 0.01), n=300)
    k = 7.0  # second eigenvalue below k/n
    assert spec.lambdas[1] - k / spec.n <= 0
    p, method = exact_pvalue_with_method(spec, k)
    assert method == "weighted_chisq_inversion"
    # independent Monte Carlo of the holdout law
    rng = np.random.default_rng(47)
    n = 300
    draws = (
        (0.6 - k / n) * rng.standard_normal(4_000_000) ** 2
        + (0.01 - k / n) * rng.standard_normal(4_000_000) ** 2
        - (k / n) * rng.chisquare(n - 3, 4_000_000)
    )
    mc = float((draws >= 0).mean())
    se = math.sqrt(p * (1 - p) / 4_000_000)
    assert p == pytest.approx(mc, abs=4 * se + 1e-9)


def test_exact_pvalue_multi_eigenvalue_route():
    spec = NullSpectrum(lambdas=(0.5, 0.3, 0.2, 0.1), n=100)
    p, method = exact_pvalue_with_method(spec, 2.0)
    assert method == "weighted_chisq_inversion"
    assert 0.0 < p < 1.0


def test_exact_pvalue_null_calibration_mc():
    """End-to-end check of the conditional null law on a fixed design."""
    rng = np.random.default_rng(53)
    n, b = 80, 2.2
    x = rng.choice(3, size=n, p=_hwe(0.3))
    u = _features(b, x)
    uc = u - u.mean(axis=0)
    spec = spectrum_from_features(u)
    reps = 300_000
    y = rng.standard_normal((reps, n))
    yc = y - y.mean(axis=1, keepdims=True)
    v = yc @ uc
    ks = (v**2).sum(axis=1) / (yc**2).sum(axis=1)
    for q in (0.9, 0.99):
        kq = float(np.quantile(ks, q))
        emp = float((ks >= kq).mean())
        se = math.sqrt(emp * (1 - emp) / reps)
        assert exact_pvalue(spec, kq) == pytest.approx(emp, abs=4 * se)


# ---------------------------------------------------------------------------
# bounds
# ---------------------------------------------------------------------------


def test_bounds_sandwich_randomized():
    rng = np.random.default_rng(59)
    checked = 0
    for _ in range(800):
        n = int(rng.integers(20, 1500))
        spec = spectrum_unadjusted(
            rng.uniform(0.05, 4.0), _hwe(rng.uniform(0.05, 0.5)), n
        )
        if spec.lambdas[0] <= 0:
            continue
        k = rng.uniform(0.0, 0.9 * spec.lambdas[0] * n)
        lo, hi = pvalue_bounds(spec, k)
        p = exact_pvalue(spec, k)
        assert lo <= p <= hi
        checked += 1
    assert checked > 700


def test_bounds_zero_statistic():
    spec = spectrum_unadjusted(2.0, _hwe(0.3), 100)
    lo, hi = pvalue_bounds(spec, 0.0)
    assert lo == 1.0
    assert hi >= 1.0


def test_bounds_rank_one_branch():
    spec = spectrum_unadjusted(4.0, _hwe(0.3), 100)
    assert spec.lambdas[1] == 0.0
    lo, hi = pvalue_bounds(spec, 5.0)
    assert 0.0 < lo <= hi <= 1.0
    # the two tails are the (nu+1)- and nu-denominator classical F tails
    nu = 100 - 3
    l1 = spec.lambdas[0]
    assert lo == pytest.approx(
        float(stats.f.sf(5.0 * (nu + 1) / (l1 * 100 - 5.0), 1, nu + 1))
    )
    assert hi == pytest.approx(float(stats.f.sf(5.0 * nu / (l1 * 100 - 5.0), 1, nu)))


def test_bounds_batch_matches_scalar():
    rng = np.random.default_rng(61)
    specs, ks = [], []
    for _ in range(60):
        n = int(rng.integers(20, 800))
        spec = spectrum_unadjusted(
            rng.uniform(0.1, 3.9), _hwe(rng.uniform(0.05, 0.5)), n
        )
        specs.append(spec)
        ks.append(rng.uniform(0.0, 0.8 * max(spec.lambdas[0], 0.01) * n))
    lo_b, hi_b = pvalue_bounds_batch(
        np.array([s.lambdas[0] for s in specs]),
        np.array([s.lambdas[1] for s in specs]),
        np.array(ks),
        np.array([s.n for s in specs]),
        1,
    )
    for i, (spec, k) in enumerate(zip(specs, ks)):
        lo, hi = pvalue_bounds(spec, k)
        assert lo_b[i] == pytest.approx(lo, rel=1e-10, abs=1e-300)
        assert hi_b[i] == pytest.approx(hi, rel=1e-10, abs=1e-300)


def test_exact_batch_matches_scalar():
    rng = np.random.default_rng(67)
    lam1, lam2, ks, ns = [], [], [], []
    for _ in range(50):
        n = int(rng.integers(20, 600))
        spec = spectrum_unadjusted(
            rng.uniform(0.1, 3.9), _hwe(rng.uniform(0.05, 0.5)), n
        )
        lam1.append(spec.lambdas[0])
        lam2.append(spec.lambdas[1])
        ns.append(n)
        ks.append(rng.uniform(0.0, 0.7 * max(spec.lambdas[0], 0.01) * n))
    batch = exact_pvalues_batch(
        np.array(lam1), np.array(lam2), np.array(ks), np.array(ns), 1
    )
    for i in range(50):
        spec = NullSpectrum(lambdas=(lam1[i], lam2[i]), n=ns[i])
        assert batch[i] == pytest.approx(
            exact_pvalue(spec, ks[i]), rel=1e-9, abs=1e-300
        )


# ---------------------------------------------------------------------------
# asymptotics
# ---------------------------------------------------------------------------


def test_asymptotic_zero_statistic():
    assert asymptotic_pvalue(2.0, _hwe(0.3), 1.0, 1000, 0.0) == 1.0


def test_asymptotic_b4_matches_chi2_slope_test():
    freqs = _hwe(0.25)
    k = spectrum_matrix(4.0, freqs)
    lam = eig2x2(k)
    assert lam[1] == pytest.approx(0.0, abs=1e-15)
    stat = 3.7
    expected = float(stats.chi2.sf(stat / lam[0], 1))
    assert asymptotic_pvalue(4.0, freqs, 1.0, 5000, stat) == pytest.approx(
        expected, rel=1e-12
    )


def test_asymptotic_converges_to_exact():
    """The asymptotic tail approaches the exact law as n grows."""
    freqs = _hwe(0.3)
    b = 2.0
    gaps = []
    for n in (500, 5000, 50000):
        spec = spectrum_unadjusted(b, freqs, n)
        worst = 0.0
        for k in np.linspace(1.0, 25.0, 12):
            p_exact = exact_pvalue(spec, float(k))
            p_asy = asymptotic_pvalue(b, freqs, 1.0, n, float(k))
            worst = max(worst, abs(p_asy - p_exact) / max(p_exact, 1e-300))
        gaps.append(worst)
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < 2e-2
