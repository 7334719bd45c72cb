"""Genotype, phenotype and covariate file codecs.

Two genotype formats are supported:

- **packed**: SNP-major 2-bit file. Header is the magic bytes 0x6C 0x1B
  followed by the mode byte 0x01; each SNP then occupies ceil(n/4) bytes,
  two bits per sample, little-endian within each byte (00 = homozygous
  first allele, 01 = missing, 10 = heterozygous, 11 = homozygous second
  allele).  Sidecar files sit next to the payload: ``<path>.variants.tsv``
  (snp_id, chrom, pos per line, same order) and ``<path>.samples.txt``
  (one sample ID per line).  Reading is streamed, so memory stays O(n)
  per block regardless of SNP count.

- **dosage-tsv**: header ``sample_id<TAB>snp1<TAB>...``, one row per
  sample, dosages in [0, 2] or ``NA``.  Sample-major on disk, so the file
  is materialized once and served column-wise.

Phenotype/covariate tables are TSV with a ``sample_id`` column plus named
numeric columns, joined to the genotype samples by ID.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from . import backend
from .premetric import GenotypeColumn

PACKED_MAGIC = b"\x6c\x1b"
PACKED_MODE_SNP_MAJOR = b"\x01"
DEFAULT_BLOCK_SIZE = 1024


@dataclass
class VariantInfo:
    snp_id: str
    chrom: str
    pos: int


@dataclass
class Block:
    """A contiguous run of SNP columns with shared representation."""

    variants: list
    values: np.ndarray  # (n_snps, n_samples); int8 for "hard", float64 for "dosage"
    kind: str
    start: int  # index of the first SNP within the source


def variants_path(geno_path: str) -> str:
    return geno_path + ".variants.tsv"


def samples_path(geno_path: str) -> str:
    return geno_path + ".samples.txt"


# ---------------------------------------------------------------------------
# packed 2-bit codec
# ---------------------------------------------------------------------------


def encode_packed(calls: np.ndarray) -> np.ndarray:
    """Pack int8 calls (-1/0/1/2) into 2-bit codes, SNP-major."""
    calls = np.asarray(calls, dtype=np.int8)
    if calls.ndim != 2:
        raise ValueError("calls must be (n_snps, n_samples)")
    codes = np.empty(calls.shape, dtype=np.uint8)
    codes[calls == 0] = 0b00
    codes[calls == -1] = 0b01
    codes[calls == 1] = 0b10
    codes[calls == 2] = 0b11
    n_snps, n = calls.shape
    nbytes = (n + 3) // 4
    padded = np.zeros((n_snps, nbytes * 4), dtype=np.uint8)
    padded[:, :n] = codes
    quads = padded.reshape(n_snps, nbytes, 4)
    shifts = np.array([0, 2, 4, 6], dtype=np.uint8)
    return (quads << shifts).sum(axis=2).astype(np.uint8)


def write_packed(path: str, calls: np.ndarray, variants, sample_ids) -> None:
    """Write the packed payload and its two sidecar files."""
    calls = np.asarray(calls, dtype=np.int8)
    n_snps, n = calls.shape
    if len(variants) != n_snps:
        raise ValueError("one variant record per SNP row required")
    if len(sample_ids) != n:
        raise ValueError("one sample ID per column required")
    with open(path, "wb") as fh:
        fh.write(PACKED_MAGIC + PACKED_MODE_SNP_MAJOR)
        fh.write(encode_packed(calls).tobytes())
    with open(variants_path(path), "w") as fh:
        for v in variants:
            if isinstance(v, VariantInfo):
                fh.write(f"{v.snp_id}\t{v.chrom}\t{v.pos}\n")
            else:
                fh.write(f"{v[0]}\t{v[1]}\t{v[2]}\n")
    with open(samples_path(path), "w") as fh:
        for sid in sample_ids:
            fh.write(f"{sid}\n")


def _read_variants(path: str) -> list:
    out = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected snp_id<TAB>chrom<TAB>pos")
            out.append(VariantInfo(parts[0], parts[1], int(parts[2])))
    return out


class PackedSource:
    """Streaming reader for the packed 2-bit format."""

    kind = "hard"

    def __init__(self, path: str):
        self.path = path
        self.variants = _read_variants(variants_path(path))
        with open(samples_path(path)) as fh:
            self.sample_ids = [line.strip() for line in fh if line.strip()]
        self.n_samples = len(self.sample_ids)
        self._bytes_per_snp = (self.n_samples + 3) // 4
        payload = os.path.getsize(path) - 3
        if payload < 0:
            raise ValueError(f"{path}: truncated header")
        if self._bytes_per_snp and payload % self._bytes_per_snp != 0:
            raise ValueError(
                f"{path}: payload size {payload} is not a multiple of "
                f"{self._bytes_per_snp} bytes per SNP"
            )
        self.n_snps = payload // self._bytes_per_snp if self._bytes_per_snp else 0
        if self.n_snps != len(self.variants):
            raise ValueError(
                f"{path}: payload holds {self.n_snps} SNPs but the variant "
                f"sidecar lists {len(self.variants)}"
            )
        with open(path, "rb") as fh:
            head = fh.read(3)
        if head[:2] != PACKED_MAGIC:
            raise ValueError(f"{path}: bad magic bytes {head[:2]!r}")
        if head[2:3] != PACKED_MODE_SNP_MAJOR:
            raise ValueError(f"{path}: unsupported mode byte {head[2:3]!r}")

    def iter_blocks(self, block_size: int = DEFAULT_BLOCK_SIZE) -> Iterator[Block]:
        with open(self.path, "rb") as fh:
            fh.seek(3)
            start = 0
            while start < self.n_snps:
                count = min(block_size, self.n_snps - start)
                raw = fh.read(count * self._bytes_per_snp)
                if len(raw) != count * self._bytes_per_snp:
                    raise ValueError(f"{self.path}: truncated payload")
                mat = np.frombuffer(raw, dtype=np.uint8).reshape(
                    count, self._bytes_per_snp
                )
                calls = backend.kernels.decode_packed(mat, self.n_samples)
                yield Block(
                    variants=self.variants[start : start + count],
                    values=calls,
                    kind="hard",
                    start=start,
                )
                start += count


# ---------------------------------------------------------------------------
# dosage TSV codec
# ---------------------------------------------------------------------------


def write_dosage_tsv(path: str, dosages: np.ndarray, snp_ids, sample_ids) -> None:
    """Write a sample-major dosage table (rows = samples)."""
    dosages = np.asarray(dosages, dtype=np.float64)
    n, n_snps = dosages.shape
    if len(sample_ids) != n or len(snp_ids) != n_snps:
        raise ValueError("dosage matrix must be (n_samples, n_snps)")
    with open(path, "w") as fh:
        fh.write("sample_id\t" + "\t".join(snp_ids) + "\n")
        for i, sid in enumerate(sample_ids):
            row = "\t".join(
                "NA" if np.isnan(v) else format(v, ".17g") for v in dosages[i]
            )
            fh.write(f"{sid}\t{row}\n")


class DosageSource:
    """Reader for the sample-major dosage TSV."""

    kind = "dosage"

    def __init__(self, path: str):
        self.path = path
        with open(path) as fh:
            header = fh.readline().rstrip("\n").split("\t")
            if not header or header[0] != "sample_id":
                raise ValueError(f"{path}: first header field must be 'sample_id'")
            self.snp_ids = header[1:]
            sample_ids = []
            rows = []
            for lineno, line in enumerate(fh, 2):
                line = line.rstrip("\n")
                if not line:
                    continue
                parts = line.split("\t")
                if len(parts) != len(header):
                    raise ValueError(
                        f"{path}:{lineno}: expected {len(header)} fields, got {len(parts)}"
                    )
                sample_ids.append(parts[0])
                rows.append(
                    [np.nan if p == "NA" else float(p) for p in parts[1:]]
                )
        self.sample_ids = sample_ids
        self.n_samples = len(sample_ids)
        self.n_snps = len(self.snp_ids)
        self._matrix = np.asarray(rows, dtype=np.float64)
        present = ~np.isnan(self._matrix)
        bad = (self._matrix < 0.0) | (self._matrix > 2.0)
        if np.any(bad & present):
            j = int(np.nonzero((bad & present).any(axis=0))[0][0])
            raise ValueError(f"{path}: dosage out of [0, 2] for SNP {self.snp_ids[j]}")
        self.variants = [VariantInfo(s, ".", 0) for s in self.snp_ids]

    def iter_blocks(self, block_size: int = DEFAULT_BLOCK_SIZE) -> Iterator[Block]:
        start = 0
        while start < self.n_snps:
            count = min(block_size, self.n_snps - start)
            vals = np.ascontiguousarray(self._matrix[:, start : start + count].T)
            yield Block(
                variants=self.variants[start : start + count],
                values=vals,
                kind="dosage",
                start=start,
            )
            start += count


class ArraySource:
    """In-memory genotype source (simulation and benchmark panels)."""

    def __init__(self, values: np.ndarray, kind: str = "hard", snp_ids=None,
                 sample_ids=None):
        values = np.asarray(values)
        if kind == "hard":
            values = values.astype(np.int8, copy=False)
        else:
            values = values.astype(np.float64, copy=False)
        self.kind = kind
        self._matrix = values
        self.n_snps, self.n_samples = values.shape
        self.snp_ids = snp_ids or [f"snp{i}" for i in range(self.n_snps)]
        self.sample_ids = sample_ids or [f"s{i}" for i in range(self.n_samples)]
        self.variants = [VariantInfo(s, ".", i) for i, s in enumerate(self.snp_ids)]

    def iter_blocks(self, block_size: int = DEFAULT_BLOCK_SIZE) -> Iterator[Block]:
        start = 0
        while start < self.n_snps:
            count = min(block_size, self.n_snps - start)
            yield Block(
                variants=self.variants[start : start + count],
                values=self._matrix[start : start + count],
                kind=self.kind,
                start=start,
            )
            start += count


class SubsetSource:
    """View of another source restricted to a fixed sample index set."""

    def __init__(self, source, sample_index: np.ndarray):
        self._source = source
        self._idx = np.asarray(sample_index, dtype=np.intp)
        self.kind = source.kind
        self.n_samples = int(self._idx.size)
        self.n_snps = source.n_snps
        self.sample_ids = [source.sample_ids[i] for i in self._idx]
        self.variants = source.variants

    def iter_blocks(self, block_size: int = DEFAULT_BLOCK_SIZE) -> Iterator[Block]:
        for block in self._source.iter_blocks(block_size):
            yield Block(
                variants=block.variants,
                values=np.ascontiguousarray(block.values[:, self._idx]),
                kind=block.kind,
                start=block.start,
            )


def open_genotypes(path: str, fmt: str):
    """Open a genotype file in the named format ('packed' or 'dosage-tsv')."""
    if fmt == "packed":
        return PackedSource(path)
    if fmt == "dosage-tsv":
        return DosageSource(path)
    raise ValueError(f"unknown genotype format {fmt!r}")


def load_genotypes(path: str, fmt: str) -> Iterator[GenotypeColumn]:
    """Stream the file as GenotypeColumn objects (one per SNP)."""
    source = open_genotypes(path, fmt)
    for block in source.iter_blocks():
        for i, v in enumerate(block.variants):
            yield GenotypeColumn(
                snp_id=v.snp_id,
                chrom=v.chrom,
                pos=v.pos,
                values=block.values[i],
                kind=block.kind,
            )


# ---------------------------------------------------------------------------
# phenotype / covariate tables
# ---------------------------------------------------------------------------


def read_phenotype_table(path: str):
    """Read a TSV with a sample_id column and named numeric columns.

    Returns (sample_ids, {name: float64 array}).
    """
    with open(path) as fh:
        header = fh.readline().rstrip("\n").split("\t")
        if "sample_id" not in header:
            raise ValueError(f"{path}: header must contain a sample_id column")
        id_idx = header.index("sample_id")
        names = [h for i, h in enumerate(header) if i != id_idx]
        ids = []
        cols = {name: [] for name in names}
        for lineno, line in enumerate(fh, 2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != len(header):
                raise ValueError(
                    f"{path}:{lineno}: expected {len(header)} fields, got {len(parts)}"
                )
            ids.append(parts[id_idx])
            j = 0
            for i, val in enumerate(parts):
                if i == id_idx:
                    continue
                cols[names[j]].append(np.nan if val == "NA" else float(val))
                j += 1
    return ids, {k: np.asarray(v, dtype=np.float64) for k, v in cols.items()}


def align_samples(geno_ids, table_ids, allow_missing: bool = False) -> tuple:
    """Match genotype samples to table rows by ID.

    Returns (geno_index, table_index) arrays.  Without ``allow_missing``
    any unmatched ID on either side is an error naming both counts.
    """
    table_pos = {sid: i for i, sid in enumerate(table_ids)}
    geno_idx, table_idx = [], []
    for i, sid in enumerate(geno_ids):
        j = table_pos.get(sid)
        if j is not None:
            geno_idx.append(i)
            table_idx.append(j)
    if not allow_missing and (
        len(geno_idx) != len(geno_ids) or len(geno_idx) != len(table_ids)
    ):
        raise ValueError(
            f"sample mismatch: {len(geno_ids)} genotype samples vs "
            f"{len(table_ids)} table rows, {len(geno_idx)} matched "
            "(pass --allow-missing-samples to scan the intersection)"
        )
    if len(geno_idx) == 0:
        raise ValueError("no overlapping sample IDs between genotypes and table")
    return np.asarray(geno_idx, dtype=np.intp), np.asarray(table_idx, dtype=np.intp)
