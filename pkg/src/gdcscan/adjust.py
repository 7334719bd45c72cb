"""Linear nuisance-covariate adjustment.

The adjusted statistic is the plain statistic applied to ordinary
least-squares residuals of the phenotype on the covariates (intercept
always included).  Its exact conditional null law keeps the same shape as
the unadjusted one; only the small Gram matrix gains the covariate
projector and the noise degree count shrinks by the number of covariate
columns.

The covariate basis is orthonormalized once per phenotype; per-SNP work is
inner products against that basis.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .gdc import Sample, dcov_fast
from .nulldist import NullSpectrum, snap_eigenvalues, spectrum_from_features
from .premetric import GenotypeColumn, Premetric

RANK_TOL = 1e-10


@dataclass(frozen=True)
class CovariateMatrix:
    """Named covariate columns with a mandatory leading intercept.

    Full column rank is checked at construction (singular values below
    1e-10 of the largest count as zero).
    """

    matrix: np.ndarray
    names: tuple

    def __post_init__(self):
        z = np.asarray(self.matrix, dtype=np.float64)
        if z.ndim != 2 or z.shape[0] < 1:
            raise ValueError("covariate matrix must be 2-d")
        if not np.all(np.isfinite(z)):
            raise ValueError("covariates contain non-finite values")
        names = tuple(self.names)
        if len(names) != z.shape[1]:
            raise ValueError("one name per covariate column required")
        if not np.all(z[:, 0] == 1.0):
            raise ValueError("first covariate column must be the intercept (all ones)")
        s = np.linalg.svd(z, compute_uv=False)
        if np.sum(s > RANK_TOL * s[0]) < z.shape[1]:
            raise ValueError("collinear covariates: covariate matrix is rank deficient")
        object.__setattr__(self, "matrix", z)
        object.__setattr__(self, "names", names)

    @classmethod
    def build(cls, columns: dict, n: int | None = None) -> "CovariateMatrix":
        """Assemble from named columns, prepending an intercept if no
        constant column is present (with a warning)."""
        names = list(columns.keys())
        cols = [np.asarray(columns[k], dtype=np.float64) for k in names]
        if n is None:
            n = cols[0].shape[0] if cols else 0
        has_intercept = any(c.size and np.all(c == c[0]) and c[0] != 0.0 for c in cols)
        if not has_intercept:
            warnings.warn("no constant covariate column found; prepending an intercept")
            names = ["intercept"] + names
            cols = [np.ones(n)] + cols
        else:
            # move the constant column first and rescale it to ones
            idx = next(
                i for i, c in enumerate(cols) if np.all(c == c[0]) and c[0] != 0.0
            )
            const = cols.pop(idx)
            cname = names.pop(idx)
            cols = [const / const[0]] + cols
            names = [cname] + names
        return cls(matrix=np.column_stack(cols), names=tuple(names))

    @classmethod
    def intercept_only(cls, n: int) -> "CovariateMatrix":
        return cls(matrix=np.ones((n, 1)), names=("intercept",))

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def q(self) -> int:
        """Number of non-intercept covariates."""
        return self.matrix.shape[1] - 1

    def orthonormal_basis(self) -> np.ndarray:
        u, s, _ = np.linalg.svd(self.matrix, full_matrices=False)
        rank = int(np.sum(s > RANK_TOL * s[0]))
        return u[:, :rank]


@dataclass(frozen=True)
class ResidualizedPhenotype:
    """OLS residuals of the phenotype on the covariates."""

    residuals: np.ndarray
    gamma_hat: np.ndarray
    sigma2_eps_hat: float


def residualize(y: np.ndarray, z: CovariateMatrix) -> ResidualizedPhenotype:
    """Project the phenotype off the covariate column space.

    Uses an orthogonal (SVD-based) decomposition rather than the normal
    equations; the fitted coefficients are recovered through the
    pseudoinverse.
    """
    y = np.asarray(y, dtype=np.float64)
    n = y.shape[0]
    if z.n != n:
        raise ValueError("covariate rows must align with the phenotype")
    if n <= z.q + 3:
        raise ValueError("need n > q + 3 samples for residualization")
    u, s, vt = np.linalg.svd(z.matrix, full_matrices=False)
    rank = int(np.sum(s > RANK_TOL * s[0]))
    if rank < z.matrix.shape[1]:
        raise ValueError("collinear covariates: covariate matrix is rank deficient")
    coeffs_basis = u.T @ y
    gamma = vt.T @ (coeffs_basis / s)
    resid = y - u @ coeffs_basis
    centered = resid - resid.mean()
    sigma2 = float(centered @ centered) / n
    return ResidualizedPhenotype(residuals=resid, gamma_hat=gamma, sigma2_eps_hat=sigma2)


def adjusted_statistic(b: float, geno: GenotypeColumn, resid: ResidualizedPhenotype) -> float:
    """Adjusted distance covariance: the plain statistic on the residuals."""
    sample = Sample.from_column(geno, resid.residuals)
    if sample.n != geno.n_total:
        raise ValueError(
            "adjusted_statistic expects a complete-case column; filter jointly "
            "with the covariates first"
        )
    return dcov_fast(b, sample)


def column_features(b: float, geno: GenotypeColumn) -> np.ndarray:
    """Feature matrix of a complete-case hard-call or dosage column."""
    if not geno.present_mask().all():
        raise ValueError("expected a complete-case column; filter first")
    pm = Premetric(b)
    if geno.kind == "hard":
        return pm.canonical_feature_map().evaluate(geno.values.astype(np.intp))
    if geno.kind == "dosage":
        f1, f2 = pm.dosage_features(geno.values)
        return np.column_stack([f1, f2])
    return pm.multiallelic_features(geno.values)


def adjusted_spectrum(b: float, geno: GenotypeColumn, z: CovariateMatrix,
                      sigma2_hat=None) -> NullSpectrum:
    """Null spectrum of the adjusted statistic for a fixed design."""
    u = column_features(b, geno)
    return spectrum_from_features(u, projector_basis=z.matrix, sigma2_hat=sigma2_hat)


@dataclass(frozen=True)
class JointMoments:
    """Population moments for the large-sample adjusted spectrum.

    ``e_phi_phi`` is E[Phi Phi'], ``e_phi_z`` is E[Phi Z'], ``e_zz`` is
    E[Z Z'] with Z including the intercept coordinate.
    """

    e_phi_phi: np.ndarray
    e_phi_z: np.ndarray
    e_zz: np.ndarray


def adjusted_asymptotic_spectrum(b: float, moments: JointMoments, n: int = 4,
                                 df_sub: int | None = None) -> NullSpectrum:
    """Population analogue of :func:`adjusted_spectrum`.

    The eigenvalues come from E[Phi Phi'] minus the cross-moment correction
    through (E[Z Z'])^{-1}.
    """
    Premetric(b)
    a = np.asarray(moments.e_phi_phi, dtype=np.float64)
    cz = np.asarray(moments.e_phi_z, dtype=np.float64)
    zz = np.asarray(moments.e_zz, dtype=np.float64)
    if zz.ndim != 2 or zz.shape[0] != zz.shape[1]:
        raise ValueError("E[Z Z'] must be square")
    sign, logdet = np.linalg.slogdet(zz)
    if sign <= 0 or not np.isfinite(logdet):
        raise ValueError("singular covariate moment matrix")
    k = a - cz @ np.linalg.solve(zz, cz.T)
    lam = snap_eigenvalues(np.linalg.eigvalsh(k))
    if df_sub is None:
        df_sub = zz.shape[0]
    return NullSpectrum(lambdas=lam, n=n, df_sub=df_sub)


def population_feature_moments(b: float, p) -> np.ndarray:
    """E[Phi Phi'] for the canonical features under class probabilities p."""
    pm = Premetric(b)
    fm = pm.canonical_feature_map().matrix
    p = np.asarray(p, dtype=np.float64)
    return (fm * p) @ fm.T
