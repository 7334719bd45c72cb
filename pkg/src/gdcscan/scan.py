"""Per-SNP scan pipeline with two-stage p-value screening.

For every SNP the pipeline (1) applies the per-SNP complete-case filter,
(2) computes the standardized statistic (covariate-adjusted when a design
is supplied), (3) computes the two-eigenvalue null spectrum, (4) computes
the cheap lower/upper p-value bounds, and (5) evaluates the exact p-value
only when the bounds leave the interesting window (lower bound below the
screen threshold, upper bound above the floor).  Above the configured
sample-size switch the asymptotic tail replaces the exact law.

SNP columns with no missing entries take a vectorized block path whose
inner sweeps run in the selected kernel backend; columns with missing
entries fall back to a per-SNP path that redoes the covariate projection
on the complete-case subsample.  Output order always equals input order,
independent of the worker count.
"""

from __future__ import annotations

import math
import os
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .adjust import CovariateMatrix, column_features, residualize
from . import backend
from .io import Block, VariantInfo
from .nulldist import (
    METHOD_ASYMPTOTIC,
    METHOD_DEGENERATE,
    NullSpectrum,
    NumericsError,
    chisq2_sf,
    exact_pvalue_with_method,
    pvalue_bounds,
    pvalue_bounds_batch,
    spectrum_from_features,
    spectrum_matrix,
)
from .premetric import GenotypeColumn

METHOD_SCREEN_HIGH = "screened_out_high"
METHOD_SCREEN_LOW = "screened_out_low"

EIGEN_SNAP_REL = 1e-12

OUTPUT_COLUMNS = (
    "snp_id",
    "chrom",
    "pos",
    "maf",
    "n_used",
    "b",
    "stat",
    "lambda1",
    "lambda2",
    "p_lower",
    "p_upper",
    "p_value",
    "method",
    "neg_log10_p",
)


@dataclass
class ScanConfig:
    """Scan settings; ``screen_threshold`` is the exact-evaluation cutoff
    and ``screen_floor`` the don't-bother floor for extreme p-values."""

    b: float = 3.0
    screen_threshold: float = 1e-3
    screen_floor: float = 1e-32
    asymptotic_switch: int = 30000
    genome_wide_alpha: float = 5e-8
    threads: int = 1
    no_screen: bool = False
    block_size: int = 1024

    def __post_init__(self):
        if not (0.0 <= self.b <= 4.0):
            raise ValueError("b must lie in [0, 4]")
        if not (0.0 < self.screen_floor < self.screen_threshold < 1.0):
            raise ValueError("need 0 < screen_floor < screen_threshold < 1")
        if self.threads < 1 or self.block_size < 1:
            raise ValueError("threads and block_size must be positive")


@dataclass
class ScanRecord:
    snp_id: str
    chrom: str
    pos: int
    maf: float
    n_used: int
    b: float
    stat: float
    lambda1: float
    lambda2: float
    p_lower: float
    p_upper: float
    p_value: float | None
    method: str

    @property
    def neg_log10_p(self) -> float | None:
        if self.p_value is None:
            return None
        if self.p_value <= 0.0:
            return math.inf
        return -math.log10(self.p_value)


@dataclass
class ScanContext:
    """Shared per-phenotype state: residuals, their scale, the orthonormal
    covariate basis, and the degree count they remove."""

    y: np.ndarray
    covariates: CovariateMatrix | None
    qbasis: np.ndarray | None
    resid: np.ndarray
    rss: float
    df_sub: int
    n: int

    @property
    def sigma2(self) -> float:
        return self.rss / self.n


def prepare_context(phenotype, covariates: CovariateMatrix | None = None) -> ScanContext:
    y = np.asarray(phenotype, dtype=np.float64)
    if y.ndim != 1:
        raise ValueError("phenotype must be a vector")
    if not np.all(np.isfinite(y)):
        raise ValueError("phenotype contains non-finite values")
    n = y.shape[0]
    if covariates is None:
        resid = y - y.mean()
        qbasis = None
        df_sub = 1
    else:
        if covariates.n != n:
            raise ValueError("covariate rows must align with the phenotype")
        rp = residualize(y, covariates)
        resid = rp.residuals
        qbasis = covariates.orthonormal_basis()
        df_sub = qbasis.shape[1]
    rss = float(resid @ resid)
    if rss <= 0.0:
        raise ValueError("degenerate response: zero phenotype variance")
    return ScanContext(
        y=y, covariates=covariates, qbasis=qbasis, resid=resid, rss=rss,
        df_sub=df_sub, n=n,
    )


# ---------------------------------------------------------------------------
# vectorized block engine
# ---------------------------------------------------------------------------


def _snap_pair(lam1, lam2):
    lam1 = np.maximum(lam1, 0.0)
    lam2 = np.clip(lam2, 0.0, lam1)
    lam2 = np.where(lam2 < EIGEN_SNAP_REL * lam1, 0.0, lam2)
    return lam1, lam2


def _eig_pair_batch(k00, k11, k01):
    tr = k00 + k11
    disc = np.sqrt(np.maximum((k00 - k11) ** 2 + 4.0 * k01 * k01, 0.0))
    return _snap_pair((tr + disc) / 2.0, (tr - disc) / 2.0)


def _finish_record(cfg: ScanConfig, ctx: ScanContext, variant: VariantInfo,
                   maf: float, n_used: int, df_sub: int, stat: float,
                   lam1: float, lam2: float, p_lo: float, p_hi: float) -> ScanRecord:
    """Apply the screening decision and, when required, the exact or
    asymptotic evaluation."""
    if lam1 <= 0.0:
        # the statistic is identically zero on a degenerate spectrum; any
        # residual value is round-off
        return ScanRecord(
            snp_id=variant.snp_id, chrom=variant.chrom, pos=variant.pos,
            maf=maf, n_used=n_used, b=cfg.b, stat=0.0, lambda1=0.0, lambda2=0.0,
            p_lower=1.0, p_upper=1.0, p_value=1.0, method=METHOD_DEGENERATE,
        )
    p_value = None
    if not cfg.no_screen and p_lo >= cfg.screen_threshold:
        method = METHOD_SCREEN_HIGH
    elif not cfg.no_screen and p_hi <= cfg.screen_floor:
        method = METHOD_SCREEN_LOW
        p_value = p_hi
    else:
        spec = NullSpectrum(
            lambdas=(lam1, lam2), n=n_used, df_sub=df_sub,
            sigma2_hat=ctx.sigma2,
        )
        if n_used > cfg.asymptotic_switch:
            p_value = _asymptotic_tail(lam1, lam2, stat)
            method = METHOD_ASYMPTOTIC
        else:
            try:
                p_value, method = exact_pvalue_with_method(spec, stat)
            except NumericsError as exc:
                return ScanRecord(
                    snp_id=variant.snp_id, chrom=variant.chrom, pos=variant.pos,
                    maf=maf, n_used=n_used, b=cfg.b, stat=stat,
                    lambda1=lam1, lambda2=lam2, p_lower=p_lo, p_upper=p_hi,
                    p_value=None, method=f"error:numerics:{exc}",
                )
    return ScanRecord(
        snp_id=variant.snp_id, chrom=variant.chrom, pos=variant.pos,
        maf=maf, n_used=n_used, b=cfg.b, stat=stat, lambda1=lam1, lambda2=lam2,
        p_lower=p_lo, p_upper=p_hi, p_value=p_value, method=method,
    )


def _asymptotic_tail(lam1: float, lam2: float, k: float) -> float:
    from scipy import stats as _st

    if k <= 0.0:
        return 1.0
    if lam2 <= 0.0:
        return float(_st.chi2.sf(k / lam1, 1))
    return chisq2_sf(lam1, lam2, k)


def _error_record(cfg, variant, n_used, reason) -> ScanRecord:
    return ScanRecord(
        snp_id=variant.snp_id, chrom=variant.chrom, pos=variant.pos,
        maf=math.nan, n_used=n_used, b=cfg.b, stat=math.nan,
        lambda1=math.nan, lambda2=math.nan, p_lower=math.nan, p_upper=math.nan,
        p_value=None, method=f"error:{reason}",
    )


def _process_hard_rows(cfg: ScanConfig, ctx: ScanContext, variants,
                       counts: np.ndarray, ysums: np.ndarray) -> list:
    """Records for complete hard-call rows from class counts and per-class
    residual sums."""
    b = cfg.b
    n = ctx.n
    sqb = math.sqrt(b / 2.0)
    sqh = math.sqrt((4.0 - b) / 2.0)
    v1 = sqb * (ysums[:, 2] - ysums[:, 0])
    v2 = sqh * ysums[:, 1]
    stat = (v1 * v1 + v2 * v2) / ctx.rss
    freqs = counts / float(n)
    p0, p1, p2 = freqs[:, 0], freqs[:, 1], freqs[:, 2]
    k00 = (b / 2.0) * (p0 + p2 - (p0 - p2) ** 2)
    k11 = ((4.0 - b) / 2.0) * (p1 - p1 * p1)
    k01 = math.sqrt(b * (4.0 - b)) / 2.0 * p1 * (p0 - p2)
    lam1, lam2 = _eig_pair_batch(k00, k11, k01)
    return _assemble(cfg, ctx, variants, counts, stat, lam1, lam2, n)


def _process_hard_rows_cov(cfg: ScanConfig, ctx: ScanContext, variants,
                           counts: np.ndarray, ysums: np.ndarray,
                           c1: np.ndarray, c2: np.ndarray, qcolsum: np.ndarray) -> list:
    """Covariate-adjusted records for complete hard-call rows.

    ``c1``/``c2`` hold per-class column sums of the orthonormal covariate
    basis for classes 1 and 2; class 0 follows from the shared totals.
    """
    b = cfg.b
    n = ctx.n
    sqb = math.sqrt(b / 2.0)
    sqh = math.sqrt((4.0 - b) / 2.0)
    v1 = sqb * (ysums[:, 2] - ysums[:, 0])
    v2 = sqh * ysums[:, 1]
    stat = (v1 * v1 + v2 * v2) / ctx.rss
    c0 = qcolsum[None, :] - c1 - c2
    a0 = sqb * (c2 - c0)
    a1 = sqh * c1
    utu00 = (b / 2.0) * (counts[:, 0] + counts[:, 2])
    utu11 = ((4.0 - b) / 2.0) * counts[:, 1]
    k00 = (utu00 - (a0 * a0).sum(axis=1)) / n
    k11 = (utu11 - (a1 * a1).sum(axis=1)) / n
    k01 = (-(a0 * a1).sum(axis=1)) / n
    lam1, lam2 = _eig_pair_batch(k00, k11, k01)
    return _assemble(cfg, ctx, variants, counts, stat, lam1, lam2, n)


def _assemble(cfg, ctx, variants, counts, stat, lam1, lam2, n) -> list:
    q = (counts[:, 1] + 2.0 * counts[:, 2]) / (2.0 * n)
    maf = np.minimum(q, 1.0 - q)
    p_lo, p_hi = pvalue_bounds_batch(lam1, lam2, stat, n, ctx.df_sub)
    return [
        _finish_record(
            cfg, ctx, variants[i], float(maf[i]), n, ctx.df_sub,
            float(stat[i]), float(lam1[i]), float(lam2[i]),
            float(p_lo[i]), float(p_hi[i]),
        )
        for i in range(len(variants))
    ]


def _process_dosage_rows(cfg: ScanConfig, ctx: ScanContext, variants,
                         s: np.ndarray, fq1=None, fq2=None) -> list:
    """Records for complete dosage rows from feature sufficient statistics.

    ``s`` columns: [nmiss, s1, s2, s11, s22, s12, s1y, s2y, ymiss];
    ``fq1``/``fq2`` are the per-SNP products of the feature rows with the
    covariate basis when a design is present.
    """
    b = cfg.b
    n = ctx.n
    sqb = math.sqrt(b / 2.0)
    sqh = math.sqrt((4.0 - b) / 2.0)
    s1, s2 = s[:, 1], s[:, 2]
    s11, s22, s12 = s[:, 3], s[:, 4], s[:, 5]
    v1 = sqb * s[:, 6]
    v2 = sqh * s[:, 7]
    stat = (v1 * v1 + v2 * v2) / ctx.rss
    if ctx.qbasis is None:
        g11 = s11 - s1 * s1 / n
        g22 = s22 - s2 * s2 / n
        g12 = s12 - s1 * s2 / n
    else:
        g11 = s11 - (fq1 * fq1).sum(axis=1)
        g22 = s22 - (fq2 * fq2).sum(axis=1)
        g12 = s12 - (fq1 * fq2).sum(axis=1)
    k00 = (b / 2.0) * g11 / n
    k11 = ((4.0 - b) / 2.0) * g22 / n
    k01 = sqb * sqh * g12 / n
    lam1, lam2 = _eig_pair_batch(k00, k11, k01)
    q = s1 / (2.0 * n)
    maf = np.minimum(q, 1.0 - q)
    p_lo, p_hi = pvalue_bounds_batch(lam1, lam2, stat, n, ctx.df_sub)
    return [
        _finish_record(
            cfg, ctx, variants[i], float(maf[i]), n, ctx.df_sub,
            float(stat[i]), float(lam1[i]), float(lam2[i]),
            float(p_lo[i]), float(p_hi[i]),
        )
        for i in range(len(variants))
    ]


def _test_single_column(cfg: ScanConfig, ctx: ScanContext,
                        column: GenotypeColumn) -> ScanRecord:
    """Per-SNP path for columns with missing entries (and the multiallelic
    entry point).  Redoes the covariate projection on the complete-case
    subsample, so the conditional null law stays exact."""
    variant = VariantInfo(column.snp_id, column.chrom, column.pos)
    mask = column.present_mask()
    n_used = int(mask.sum())
    min_n = max(4, ctx.df_sub + 3)
    if n_used < min_n:
        return _error_record(cfg, variant, n_used, "too_few_samples")
    values = column.values[mask]
    sub = GenotypeColumn(
        snp_id=column.snp_id, chrom=column.chrom, pos=column.pos,
        values=values, m=column.m, kind=column.kind,
    )
    try:
        if ctx.covariates is None:
            resid = ctx.y[mask] - ctx.y[mask].mean()
            zmat = None
            df_sub = 1
        else:
            zsub = CovariateMatrix(
                matrix=ctx.covariates.matrix[mask], names=ctx.covariates.names
            )
            rp = residualize(ctx.y[mask], zsub)
            resid = rp.residuals
            zmat = zsub.matrix
            df_sub = zsub.matrix.shape[1]
        rss = float(resid @ resid)
        if rss <= 0.0:
            return _error_record(cfg, variant, n_used, "degenerate_response")
        u = column_features(cfg.b, sub)
        spec = spectrum_from_features(u, projector_basis=zmat, sigma2_hat=rss / n_used)
        v = u.T @ resid
        stat = float(v @ v) / rss
    except ValueError as exc:
        return _error_record(cfg, variant, n_used, str(exc))
    lam = spec.lambdas
    lam1 = lam[0] if lam else 0.0
    lam2 = lam[1] if len(lam) > 1 else 0.0
    if len(spec.nonzero) > 2:
        return _multi_eigen_record(cfg, ctx, variant, sub, spec, stat, n_used)
    p_lo, p_hi = pvalue_bounds(spec, stat)
    sub_ctx = ScanContext(
        y=ctx.y[mask], covariates=ctx.covariates, qbasis=None, resid=resid,
        rss=rss, df_sub=df_sub, n=n_used,
    )
    return _finish_record(
        cfg, sub_ctx, variant, sub.maf(), n_used, df_sub, stat,
        lam1, lam2, p_lo, p_hi,
    )


def _multi_eigen_record(cfg, ctx, variant, sub, spec, stat, n_used) -> ScanRecord:
    """Multiallelic record: exact tail by inversion of the holdout law."""
    try:
        p, method = exact_pvalue_with_method(spec, stat)
    except NumericsError as exc:
        return _error_record(cfg, variant, n_used, f"numerics:{exc}")
    lam = spec.lambdas
    return ScanRecord(
        snp_id=variant.snp_id, chrom=variant.chrom, pos=variant.pos,
        maf=sub.maf(), n_used=n_used, b=cfg.b, stat=stat,
        lambda1=lam[0], lambda2=lam[1] if len(lam) > 1 else 0.0,
        p_lower=p, p_upper=p, p_value=p, method=method,
    )


def process_block(cfg: ScanConfig, ctx: ScanContext, block: Block) -> list:
    """Records for one block, input order preserved."""
    records: dict[int, ScanRecord] = {}
    if block.kind == "hard":
        g = block.values
        counts, ysums, _, _ = backend.kernels.hardcall_stats(g, ctx.resid)
        nmiss = block.values.shape[1] - counts.sum(axis=1)
        clean = nmiss == 0
        if clean.any():
            idx = np.nonzero(clean)[0]
            variants = [block.variants[i] for i in idx]
            if ctx.qbasis is None:
                recs = _process_hard_rows(cfg, ctx, variants, counts[idx], ysums[idx])
            else:
                q = ctx.qbasis
                gc = g[idx]
                miss = gc < 0
                a = np.where(miss, 0, gc).astype(np.float64)
                aa = a * a
                aq = a @ q
                aaq = aa @ q
                c1 = 2.0 * aq - aaq
                c2 = (aaq - aq) / 2.0
                recs = _process_hard_rows_cov(
                    cfg, ctx, variants, counts[idx], ysums[idx], c1, c2, q.sum(axis=0)
                )
            for i, rec in zip(idx, recs):
                records[i] = rec
        for i in np.nonzero(~clean)[0]:
            col = GenotypeColumn(
                snp_id=block.variants[i].snp_id, chrom=block.variants[i].chrom,
                pos=block.variants[i].pos, values=g[i], kind="hard",
            )
            records[i] = _test_single_column(cfg, ctx, col)
    elif block.kind == "dosage":
        x = block.values
        present = ~np.isnan(x)
        is_int = np.all(
            ~present | (x == 0.0) | (x == 1.0) | (x == 2.0), axis=1
        )
        if is_int.any():
            idx = np.nonzero(is_int)[0]
            g = np.where(present[idx], x[idx], -1.0).astype(np.int8)
            sub = Block(
                variants=[block.variants[i] for i in idx], values=g,
                kind="hard", start=block.start,
            )
            for local, rec in zip(idx, process_block(cfg, ctx, sub)):
                records[local] = rec
        rest = np.nonzero(~is_int)[0]
        if rest.size:
            xr = x[rest]
            s = backend.kernels.dosage_stats(xr, ctx.resid)
            clean = s[:, 0] == 0
            cidx = rest[clean]
            if cidx.size:
                variants = [block.variants[i] for i in cidx]
                if ctx.qbasis is None:
                    recs = _process_dosage_rows(cfg, ctx, variants, s[clean])
                else:
                    xc = x[cidx]
                    fq1 = xc @ ctx.qbasis
                    fq2 = np.abs(xc - 1.0) @ ctx.qbasis
                    recs = _process_dosage_rows(
                        cfg, ctx, variants, s[clean], fq1, fq2
                    )
                for i, rec in zip(cidx, recs):
                    records[i] = rec
            for i in rest[~clean]:
                col = GenotypeColumn(
                    snp_id=block.variants[i].snp_id, chrom=block.variants[i].chrom,
                    pos=block.variants[i].pos, values=x[i], kind="dosage",
                )
                records[i] = _test_single_column(cfg, ctx, col)
    else:
        raise ValueError(f"blocks must be hard or dosage, got {block.kind!r}")
    return [records[i] for i in range(len(block.variants))]


# ---------------------------------------------------------------------------
# drivers
# ---------------------------------------------------------------------------


def _blocks_from_columns(columns: Iterable[GenotypeColumn], block_size: int) -> Iterator[Block]:
    pending: list[GenotypeColumn] = []
    kind = None
    start = 0

    def flush():
        nonlocal pending, start
        if not pending:
            return None
        vals = np.vstack([c.values for c in pending])
        blk = Block(
            variants=[VariantInfo(c.snp_id, c.chrom, c.pos) for c in pending],
            values=vals, kind=kind, start=start,
        )
        start += len(pending)
        pending = []
        return blk

    for col in columns:
        if col.kind == "allele_counts":
            raise ValueError("allele-count columns go through run_multiallelic")
        if kind is not None and (col.kind != kind or len(pending) >= block_size):
            blk = flush()
            if blk is not None:
                yield blk
        kind = col.kind
        pending.append(col)
    blk = flush()
    if blk is not None:
        yield blk


def _bounded_map(fn, items: Iterator, workers: int) -> Iterator:
    """Ordered parallel map with a bounded number of in-flight tasks."""
    if workers <= 1:
        for item in items:
            yield fn(item)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        queue = deque()
        for item in items:
            queue.append(pool.submit(fn, item))
            if len(queue) >= 2 * workers:
                yield queue.popleft().result()
        while queue:
            yield queue.popleft().result()


def run_scan(config: ScanConfig, genotypes, phenotype,
             covariates: CovariateMatrix | None = None) -> Iterator[ScanRecord]:
    """Stream scan records for every SNP in input order.

    ``genotypes`` is a source with ``iter_blocks`` (packed, dosage or
    in-memory) or any iterable of GenotypeColumn objects.
    """
    ctx = prepare_context(phenotype, covariates)
    if hasattr(genotypes, "iter_blocks"):
        if getattr(genotypes, "n_samples", ctx.n) != ctx.n:
            raise ValueError(
                f"genotype source has {genotypes.n_samples} samples but the "
                f"phenotype has {ctx.n}"
            )
        blocks = genotypes.iter_blocks(config.block_size)
    else:
        blocks = _blocks_from_columns(genotypes, config.block_size)

    def work(block: Block) -> list:
        return process_block(config, ctx, block)

    for recs in _bounded_map(work, blocks, config.threads):
        yield from recs


def run_multiallelic(config: ScanConfig, genotype: GenotypeColumn, phenotype,
                     covariates: CovariateMatrix | None = None) -> ScanRecord:
    """Test one multiallelic SNP from its allele-count column.

    With two alleles the column reduces to the biallelic scan on the
    second-allele count and goes through exactly that code path.
    """
    if genotype.kind != "allele_counts":
        raise ValueError("run_multiallelic expects an allele-count column")
    if genotype.m < 2:
        raise ValueError("need at least two alleles")
    if genotype.m == 2:
        col = GenotypeColumn(
            snp_id=genotype.snp_id, chrom=genotype.chrom, pos=genotype.pos,
            values=genotype.values[:, 1], kind="dosage",
        )
        records = list(run_scan(config, iter([col]), phenotype, covariates))
        return records[0]
    ctx = prepare_context(phenotype, covariates)
    return _test_single_column(config, ctx, genotype)


# ---------------------------------------------------------------------------
# result persistence
# ---------------------------------------------------------------------------


def _fmt(v) -> str:
    if v is None:
        return "NA"
    if isinstance(v, float):
        if math.isnan(v):
            return "NA"
        return format(v, ".17g")
    return str(v)


def record_row(rec: ScanRecord) -> str:
    fields = (
        rec.snp_id, rec.chrom, rec.pos, _fmt(rec.maf), rec.n_used, _fmt(rec.b),
        _fmt(rec.stat), _fmt(rec.lambda1), _fmt(rec.lambda2),
        _fmt(rec.p_lower), _fmt(min(rec.p_upper, 1.0) if not math.isnan(rec.p_upper) else rec.p_upper),
        _fmt(rec.p_value), rec.method, _fmt(rec.neg_log10_p),
    )
    return "\t".join(str(f) for f in fields)


def write_results(records: Iterable[ScanRecord], path: str) -> None:
    """Write the output TSV atomically; a failed write leaves no partial
    file behind."""
    tmp = path + ".partial"
    try:
        with open(tmp, "w") as fh:
            fh.write("\t".join(OUTPUT_COLUMNS) + "\n")
            for rec in records:
                fh.write(record_row(rec) + "\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


def read_results(path: str) -> list:
    """Parse a results TSV back into ScanRecord objects."""
    out = []
    with open(path) as fh:
        header = fh.readline().rstrip("\n").split("\t")
        if tuple(header) != OUTPUT_COLUMNS:
            raise ValueError(f"{path}: unexpected result columns {header}")
        for line in fh:
            f = line.rstrip("\n").split("\t")
            if len(f) != len(OUTPUT_COLUMNS):
                raise ValueError(f"{path}: ragged result row")

            def num(s):
                return math.nan if s == "NA" else float(s)

            out.append(
                ScanRecord(
                    snp_id=f[0], chrom=f[1], pos=int(f[2]), maf=num(f[3]),
                    n_used=int(f[4]), b=num(f[5]), stat=num(f[6]),
                    lambda1=num(f[7]), lambda2=num(f[8]), p_lower=num(f[9]),
                    p_upper=num(f[10]),
                    p_value=None if f[11] == "NA" else float(f[11]),
                    method=f[12],
                )
            )
    return out
