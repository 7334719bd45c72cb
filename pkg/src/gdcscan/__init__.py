"""Single-SNP association testing with a tunable genotype distance
covariance: exact finite-sample p-values, screening bounds, covariate
adjustment, dosage/multiallelic support, and a batched scan pipeline."""

from .adjust import (
    CovariateMatrix,
    JointMoments,
    ResidualizedPhenotype,
    adjusted_asymptotic_spectrum,
    adjusted_spectrum,
    adjusted_statistic,
    residualize,
)
from .backend import BACKEND_NAME, get_backend
from .gdc import (
    PopulationModel,
    Sample,
    dcov_fast,
    dcov_kernel_form,
    dcov_oracle,
    population_dcov,
    standardized_statistic,
)
from .nulldist import (
    NullSpectrum,
    NumericsError,
    PValueBracket,
    appell_f1,
    asymptotic_pvalue,
    exact_pvalue,
    evaluate_pvalue,
    genF_cdf,
    genF_sf,
    pvalue_bounds,
    spectrum_from_features,
    spectrum_unadjusted,
    weighted_chisq_tail,
)
from .premetric import FeatureMap, GenotypeColumn, Premetric
from .scan import ScanConfig, ScanRecord, run_multiallelic, run_scan, write_results
from .simbench import (
    SimScenario,
    bench_throughput,
    competitor_tests,
    draw_heterozygous_effect,
    simulate_null,
    simulate_power,
)

__version__ = "0.1.0"
